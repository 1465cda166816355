"""Frame-synchronous Viterbi beam decoding over the two-layer lazy graph.

The decoder only ever sees composed states through cache.expand, so the
same code serves fully dynamic, BFS-pre-composed and warmed-up graphs;
which layer answered is visible purely in the counters.  Acoustic input
is a cost matrix (frames x input labels); a tiny simulator fabricates
such matrices from reference label sequences so the whole pipeline runs
without any audio dependency.

Determinism: tokens are processed in ascending state-id order, epsilon
closure settles states in (cost, state id) order, and every equal-cost
comparison keeps the earlier token, so a hypothesis is a pure function
of (scores, graph, binding, config).
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cache import Session, expand
from .errors import CompositionSizeError, ConfigurationError
from .fst import EPS
from .metrics import Metrics
from .semiring import ZERO


@dataclass
class DecodeConfig:
    beam: float = 10.0
    max_active: int = 2000
    max_eps_pops: int = 200_000  # per closure; trips on pathological graphs

    def __post_init__(self):
        if not self.beam > 0:
            raise ConfigurationError("beam must be positive")
        if self.max_active < 1:
            raise ConfigurationError("max_active must be >= 1")


class ScoreMatrix:
    """Per-frame, per-input-label tropical costs; column 0 (epsilon) is +inf."""

    def __init__(self, costs: np.ndarray, frame_seconds: float = 0.01):
        self._m = np.asarray(costs, dtype=np.float64)
        if self._m.ndim != 2:
            raise ConfigurationError("score matrix must be frames x labels")
        if self._m.shape[1] > 0:
            self._m[:, EPS] = np.inf
        self.frame_seconds = frame_seconds

    @property
    def num_frames(self) -> int:
        return int(self._m.shape[0])

    @property
    def num_labels(self) -> int:
        return int(self._m.shape[1])

    def cost(self, frame: int, label: int) -> float:
        if label >= self._m.shape[1]:
            return ZERO
        return float(self._m[frame, label])


def simulate_scores(ref_labels: Sequence[int], num_labels: int, *,
                    frames_per_label: int = 3, margin: float = 4.0,
                    noise: float = 0.0, seed: int = 0,
                    frame_seconds: float = 0.01) -> ScoreMatrix:
    """Fabricate acoustic costs for a reference label sequence.

    Each reference label occupies `frames_per_label` frames.  On its
    frames the correct label costs noise*u and every other label costs
    margin + noise*u with u ~ U[0,1) from a seeded generator, so at zero
    noise the per-frame argmin is exactly the reference.
    """
    rng = np.random.default_rng(seed)
    frames = len(ref_labels) * frames_per_label
    u = rng.random((frames, num_labels))
    m = margin + noise * u
    for i, label in enumerate(ref_labels):
        for t in range(i * frames_per_label, (i + 1) * frames_per_label):
            m[t, label] = noise * u[t, label]
    return ScoreMatrix(m, frame_seconds=frame_seconds)


@dataclass(frozen=True)
class Hypothesis:
    cost: float
    labels: tuple[int, ...]
    words: tuple[str, ...]
    frames: int
    wall_seconds: float
    frame_seconds: float
    metrics: Metrics


def rtf(h: Hypothesis) -> float:
    """Decode wall time over audio duration (frames x frame length)."""
    audio = h.frames * h.frame_seconds
    if audio == 0.0:
        return 0.0 if h.wall_seconds == 0.0 else float("inf")
    return h.wall_seconds / audio


_Token = tuple  # (cost, trace); trace is None or (parent_trace, olabel)


def _eps_closure(tokens: dict[int, _Token], session: Session,
                 cfg: DecodeConfig) -> dict[int, _Token]:
    best = dict(tokens)
    heap: list[tuple[float, int]] = [(tok[0], sid) for sid, tok in sorted(tokens.items())]
    heapq.heapify(heap)
    settled: set[int] = set()
    pops = 0
    while heap:
        cost, sid = heapq.heappop(heap)
        if sid in settled or cost > best[sid][0]:
            continue
        settled.add(sid)
        pops += 1
        if pops > cfg.max_eps_pops:
            raise CompositionSizeError(
                f"epsilon closure exceeded {cfg.max_eps_pops} settlements")
        exp = expand(sid, session)
        trace = best[sid][1]
        for arc in exp.arcs:
            if arc.ilabel != EPS:
                continue
            new_cost = cost + arc.weight
            cur = best.get(arc.nextstate)
            if cur is None or new_cost < cur[0]:
                best[arc.nextstate] = (
                    new_cost,
                    trace if arc.olabel == EPS else (trace, arc.olabel))
                heapq.heappush(heap, (new_cost, arc.nextstate))
    return best


def _prune(tokens: dict[int, _Token], cfg: DecodeConfig) -> dict[int, _Token]:
    if not tokens:
        return tokens
    floor = min(tok[0] for tok in tokens.values())
    kept = {sid: tok for sid, tok in tokens.items() if tok[0] <= floor + cfg.beam}
    if len(kept) > cfg.max_active:
        ranked = sorted(kept.items(), key=lambda kv: (kv[1][0], kv[0]))
        kept = dict(ranked[:cfg.max_active])
    return kept


def _unwind(trace) -> tuple[int, ...]:
    labels: list[int] = []
    while trace is not None:
        trace, label = trace
        labels.append(label)
    labels.reverse()
    return tuple(labels)


def decode(scores: ScoreMatrix, session: Session,
           cfg: Optional[DecodeConfig] = None) -> Optional[Hypothesis]:
    """Beam-search the lazy graph against one utterance's score matrix.

    Per frame: expand emitting arcs (adding graph plus acoustic cost),
    then run epsilon closure, then prune to the beam and max_active.
    After the last frame final weights are applied; the best surviving
    final token becomes the Hypothesis.  Returns None when no hypothesis
    survives -- a result, not an error.
    """
    if cfg is None:
        cfg = DecodeConfig()
    before = session.metrics.snapshot()
    t0 = time.perf_counter()

    active: dict[int, _Token] = {session.start_id(): (0.0, None)}
    active = _prune(_eps_closure(active, session, cfg), cfg)
    for t in range(scores.num_frames):
        emitted: dict[int, _Token] = {}
        for sid in sorted(active):
            cost, trace = active[sid]
            exp = expand(sid, session)
            for arc in exp.arcs:
                if arc.ilabel == EPS:
                    continue
                acoustic = scores.cost(t, arc.ilabel)
                if acoustic == ZERO:
                    continue
                new_cost = cost + arc.weight + acoustic
                cur = emitted.get(arc.nextstate)
                if cur is None or new_cost < cur[0]:
                    emitted[arc.nextstate] = (
                        new_cost,
                        trace if arc.olabel == EPS else (trace, arc.olabel))
        if not emitted:
            active = {}
            break
        active = _prune(_eps_closure(emitted, session, cfg), cfg)

    best_cost = ZERO
    best_trace = None
    for sid in sorted(active):
        cost, trace = active[sid]
        final = expand(sid, session).final
        if final == ZERO:
            continue
        total = cost + final
        if total < best_cost:
            best_cost = total
            best_trace = trace

    wall = time.perf_counter() - t0
    session.metrics.frames += scores.num_frames
    session.metrics.decode_seconds += wall
    if best_cost == ZERO:
        return None
    labels = _unwind(best_trace)
    osyms = session.cache.root.osyms
    words = tuple(osyms.sym_of(l) if osyms is not None else str(l) for l in labels)
    return Hypothesis(cost=best_cost, labels=labels, words=words,
                      frames=scores.num_frames, wall_seconds=wall,
                      frame_seconds=scores.frame_seconds,
                      metrics=session.metrics.delta(before))
