"""Offline filling of the public cache: breadth-first and data-driven warm-up.

Both strategies expand only states whose arcs are provably independent of
any session's class FSTs (see cache.is_precomposable).  During this build
phase every class label is bound to a throwaway FST: a placeholder
acceptor for the BFS walk (its symbol never occurs in the first-pass
graph, so expansion cannot proceed past a class entry) and an
accept-nothing FST for warm-up decoding.  States cached here never touch
either, which warm-up promotion re-verifies by recomputation.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .cache import CachedExpansion, PublicCache, Session, is_precomposable
from .compose import expand_pair_state
from .decoder import DecodeConfig, ScoreMatrix, decode
from .errors import ConfigurationError, InvariantError, LazyFstError
from .fst import Arc, Fst
from .replace import ReplaceView, empty_binding, placeholder_binding

logger = logging.getLogger(__name__)

__all__ = ["PrecomposeConfig", "bfs_precompose", "warmup_precompose",
           "is_precomposable"]


@dataclass
class PrecomposeConfig:
    classes: frozenset[int]
    temp_label: int
    bfs_depth: int = 5
    state_budget: int = 1_000_000

    def __post_init__(self):
        if self.bfs_depth < 0:
            raise ConfigurationError("bfs_depth must be >= 0")
        if self.state_budget < 0:
            raise ConfigurationError("state_budget must be >= 0")


def _store_public(cache: PublicCache, state_id: int, t1: Fst,
                  view: ReplaceView) -> CachedExpansion:
    raw = expand_pair_state(cache.keys[state_id], t1, view)
    arcs = tuple(Arc(a.ilabel, a.olabel, a.weight, cache.intern(a.nextstate))
                 for a in raw.arcs)
    made = CachedExpansion(arcs, raw.final)
    cache.store(state_id, made)
    return made


def bfs_precompose(t1: Fst, root: Fst, cfg: PrecomposeConfig,
                   cache: Optional[PublicCache] = None) -> PublicCache:
    """Expand shareable states breadth-first from the composed start.

    A state is expanded iff it passes is_precomposable, its distance from
    the start (in composed arcs, epsilon arcs included) is strictly below
    cfg.bfs_depth, and the budget is not exhausted.  Frontier destinations
    are interned in the state table either way.  Depth 0 therefore caches
    nothing but still registers the start key.  Deterministic: FIFO
    queue, arcs in stored order.
    """
    if cache is None:
        cache = PublicCache(t1, root, cfg.classes)
    if cache.sealed:
        raise ConfigurationError("cannot extend a sealed cache")
    view = ReplaceView(root, placeholder_binding(cfg.classes, cfg.temp_label,
                                                 root.osyms))
    start = cache.intern(cache.start_key())
    dist = {start: 0}
    queue = deque([start])
    while queue:
        state_id = queue.popleft()
        d = dist[state_id]
        if d >= cfg.bfs_depth:
            continue
        if not is_precomposable(cache.keys[state_id], root, cfg.classes):
            continue
        exp = cache.expanded.get(state_id)
        if exp is None:
            if len(cache.expanded) >= cfg.state_budget:
                logger.warning("bfs_precompose stopped at state budget %d; "
                               "coverage is partial", cfg.state_budget)
                break
            exp = _store_public(cache, state_id, t1, view)
        for arc in exp.arcs:
            if arc.nextstate not in dist:
                dist[arc.nextstate] = d + 1
                queue.append(arc.nextstate)
    return cache


def warmup_precompose(t1: Fst, root: Fst, cfg: PrecomposeConfig,
                      score_list: Sequence[ScoreMatrix],
                      decode_cfg: DecodeConfig,
                      cache: Optional[PublicCache] = None) -> PublicCache:
    """Decode warm-up traffic with every class bound to an accept-nothing
    FST; promote each visited shareable state into the public cache.

    Promotion recomputes the expansion with the ordinary kernel under the
    placeholder binding and insists it matches what the warm-up session
    stored: a shareable state's expansion must not depend on the binding,
    and checking beats assuming.  Decode failures on warm-up traffic are
    logged and skipped.  Can extend a BFS-produced cache.
    """
    if cache is None:
        cache = PublicCache(t1, root, cfg.classes)
    if cache.sealed:
        raise ConfigurationError("cannot extend a sealed cache")
    warm_binding = empty_binding(cfg.classes, root.osyms)
    check_view = ReplaceView(root, placeholder_binding(cfg.classes, cfg.temp_label,
                                                       root.osyms))
    budget_hit = False
    for utt_index, scores in enumerate(score_list):
        session = Session(cache, warm_binding, _allow_unsealed=True)
        try:
            decode(scores, session, decode_cfg)
        except LazyFstError as err:
            logger.warning("warm-up utterance %d failed to decode: %s",
                           utt_index, err)
        for state_id in sorted(session.private_exp):
            key = session.key_of(state_id)
            if not is_precomposable(key, root, cfg.classes):
                continue
            public_id = cache.ids.get(key)
            if public_id is not None and public_id in cache.expanded:
                continue
            if len(cache.expanded) >= cfg.state_budget:
                budget_hit = True
                break
            recomputed = expand_pair_state(key, t1, check_view)
            stored = session.private_exp[state_id]
            stored_shape = [(a.ilabel, a.olabel, a.weight,
                             session.key_of(a.nextstate)) for a in stored.arcs]
            fresh_shape = [(a.ilabel, a.olabel, a.weight, a.nextstate)
                           for a in recomputed.arcs]
            if stored_shape != fresh_shape or stored.final != recomputed.final:
                raise InvariantError(
                    f"warm-up expansion of {key} depends on the binding")
            public_id = cache.intern(key)
            arcs = tuple(Arc(a.ilabel, a.olabel, a.weight,
                             cache.intern(a.nextstate))
                         for a in recomputed.arcs)
            cache.store(public_id, CachedExpansion(arcs, recomputed.final))
        if budget_hit:
            logger.warning("warmup_precompose stopped at state budget %d; "
                           "coverage is partial", cfg.state_budget)
            break
    return cache
