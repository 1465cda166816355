"""Two-layer cached lazy composition: shared public cache, per-session private cache.

The composed graph T1 o Replace(root, binding) is never built whole.
Expansions live in two layers:

* PublicCache: expansions that are provably binding-independent, computed
  once offline (breadth-first or by warm-up decoding), then sealed and
  shared read-only by every session.  A composed state may be cached here
  only if its root-side state is outside every class region and has no
  class-label out-arc, so its arcs can never mention a class FST.
* Session: everything else is expanded on demand into a private cache
  that dies with the session.

Both layers share one state-id space: the sealed public state table owns
dense ids [0, N_pub) and each session appends its own keys at ids >=
N_pub.  Public expansions may therefore be referenced directly by private
arcs, and a public id that was interned but never expanded offline (a
frontier destination) is simply expanded into the private layer on first
use.  A lookup increments exactly one of public_hit / private_hit /
otf_expansion.
"""

from __future__ import annotations

import hashlib
from typing import NamedTuple, Optional

from .compose import Expansion, FilterState, PairState, expand_pair_state
from .errors import BuildError, CompositionSizeError, ConfigurationError, InvariantError
from .fst import Arc, Fst, FstBuilder, write_text_fst
from .metrics import Metrics
from .replace import ClassBinding, ReplaceView, RootState
from .semiring import ZERO

ComposedStateKey = PairState

# Deterministic memory model: what one arc / one expanded state / one
# state-table entry is charged, in bytes.  Chosen once; every "memory"
# number reported anywhere is derived from these.
ARC_BYTES = 16
STATE_BYTES = 16
KEY_BYTES = 24


class CachedExpansion(NamedTuple):
    """Arcs with destinations already interned to shared state ids."""
    arcs: tuple[Arc, ...]
    final: float


def is_precomposable(key: PairState, root: Fst, classes: frozenset[int]) -> bool:
    """True when `key`'s expansion cannot depend on any class binding:
    the t2 side sits in the root (not inside a class FST) and its root
    state has no class-label out-arc."""
    if not isinstance(key.q2, RootState):
        return False
    for arc in root.arcs_of(key.q2.qc):
        if arc.olabel in classes:
            return False
    return True


def _bytes_estimate(num_keys: int, num_expanded: int, num_arcs: int) -> int:
    return num_arcs * ARC_BYTES + num_expanded * STATE_BYTES + num_keys * KEY_BYTES


class PublicCache:
    """Sealed, shared layer of the two-layer graph for one (t1, root) pair."""

    def __init__(self, t1: Fst, root: Fst, classes: frozenset[int]):
        self.t1 = t1
        self.root = root
        self.classes = classes
        self.keys: list[PairState] = []
        self.ids: dict[PairState, int] = {}
        self.expanded: dict[int, CachedExpansion] = {}
        self.sealed = False
        self._fingerprint: Optional[str] = None

    @property
    def num_public(self) -> int:
        return len(self.keys)

    @property
    def num_expanded(self) -> int:
        return len(self.expanded)

    def start_key(self) -> PairState:
        return PairState(self.t1.start, RootState(self.root.start), FilterState.ANY)

    def intern(self, key: PairState) -> int:
        if self.sealed:
            raise ConfigurationError("public state table is sealed")
        got = self.ids.get(key)
        if got is not None:
            return got
        new_id = len(self.keys)
        self.keys.append(key)
        self.ids[key] = new_id
        return new_id

    def store(self, state_id: int, expansion: CachedExpansion) -> None:
        if self.sealed:
            raise ConfigurationError("public cache is sealed")
        self.expanded[state_id] = expansion

    def bytes_estimate(self) -> int:
        arcs = sum(len(e.arcs) for e in self.expanded.values())
        return _bytes_estimate(len(self.keys), len(self.expanded), arcs)

    def fingerprint(self) -> str:
        """Digest of the graphs this cache was computed against."""
        if self._fingerprint is None:
            h = hashlib.sha256()
            h.update(write_text_fst(self.t1).encode())
            h.update(b"\x00")
            h.update(write_text_fst(self.root).encode())
            h.update(b"\x00")
            h.update(" ".join(map(str, sorted(self.classes))).encode())
            self._fingerprint = h.hexdigest()
        return self._fingerprint


def seal_public(cache: PublicCache) -> PublicCache:
    """Freeze the public layer after verifying it only holds shareable states.

    Every expanded key must pass is_precomposable and every cached arc
    destination must be interned publicly; a violation means pre-composition
    cached something binding-dependent, which would poison every session,
    so sealing refuses with the offending key.  Sealing twice is a no-op.
    """
    if cache.sealed:
        return cache
    for state_id, expansion in cache.expanded.items():
        key = cache.keys[state_id]
        if not is_precomposable(key, cache.root, cache.classes):
            raise InvariantError(
                f"public cache holds non-shareable state {key} (id {state_id})")
        for arc in expansion.arcs:
            if not 0 <= arc.nextstate < len(cache.keys):
                raise InvariantError(
                    f"public expansion {state_id} references unregistered "
                    f"destination {arc.nextstate}")
    cache.sealed = True
    return cache


class Session:
    """One decoding session: a binding plus the private half of the graph."""

    def __init__(self, cache: PublicCache, binding: ClassBinding,
                 _allow_unsealed: bool = False):
        if not cache.sealed and not _allow_unsealed:
            raise ConfigurationError("seal the public cache before opening sessions")
        if binding.classes != cache.classes:
            raise ConfigurationError("binding declares a different class-label set")
        self.cache = cache
        self.binding = binding
        self.view = ReplaceView(cache.root, binding)
        self.num_public = cache.num_public
        self.private_keys: list[PairState] = []
        self.private_ids: dict[PairState, int] = {}
        self.private_exp: dict[int, CachedExpansion] = {}
        self.metrics = Metrics()
        self.ended = False

    def key_of(self, state_id: int) -> PairState:
        if state_id < self.num_public:
            return self.cache.keys[state_id]
        return self.private_keys[state_id - self.num_public]

    def intern(self, key: PairState) -> int:
        got = self.cache.ids.get(key)
        if got is not None and got < self.num_public:
            return got
        got = self.private_ids.get(key)
        if got is not None:
            return got
        new_id = self.num_public + len(self.private_keys)
        self.private_keys.append(key)
        self.private_ids[key] = new_id
        return new_id

    def start_id(self) -> int:
        return self.intern(self.cache.start_key())

    @property
    def bytes_private(self) -> int:
        arcs = sum(len(e.arcs) for e in self.private_exp.values())
        return _bytes_estimate(len(self.private_keys), len(self.private_exp), arcs)


def expand(state_id: int, session: Session) -> CachedExpansion:
    """Arcs and final weight of one composed state, public layer first."""
    if session.ended:
        raise ConfigurationError("session already ended")
    if state_id < session.num_public:
        # Bounded by the table size this session was opened with, so a
        # build-time session never confuses its private ids with public
        # ids interned after it started.
        cached = session.cache.expanded.get(state_id)
        if cached is not None:
            session.metrics.public_hit += 1
            return cached
    cached = session.private_exp.get(state_id)
    if cached is not None:
        session.metrics.private_hit += 1
        return cached
    key = session.key_of(state_id)
    raw: Expansion = expand_pair_state(key, session.cache.t1, session.view)
    arcs = tuple(Arc(a.ilabel, a.olabel, a.weight, session.intern(a.nextstate))
                 for a in raw.arcs)
    made = CachedExpansion(arcs, raw.final)
    session.private_exp[state_id] = made
    session.metrics.otf_expansion += 1
    return made


def new_session(cache: PublicCache, binding: ClassBinding) -> Session:
    return Session(cache, binding)


def end_session(session: Session) -> Metrics:
    """Free the private layer; returns the session's final metrics."""
    if session.ended:
        raise ConfigurationError("session already ended")
    session.metrics.bytes_private = session.bytes_private
    final = session.metrics.snapshot()
    session.private_keys.clear()
    session.private_ids.clear()
    session.private_exp.clear()
    session.ended = True
    return final


def materialize(session: Session, max_states: int = 1_000_000) -> Fst:
    """Explore the whole lazy graph reachable from the start.

    States are renumbered in breadth-first discovery order, which is the
    same traversal compose_static uses, so a full materialization is
    comparable state-by-state with the static composition regardless of
    what the public cache holds.
    """
    start = session.start_id()
    order: dict[int, int] = {start: 0}
    queue = [start]
    builder = FstBuilder(session.cache.t1.isyms, session.cache.root.osyms)
    builder.add_state()
    head = 0
    while head < len(queue):
        sid = queue[head]
        head += 1
        exp = expand(sid, session)
        for arc in exp.arcs:
            dst = order.get(arc.nextstate)
            if dst is None:
                if len(order) >= max_states:
                    raise CompositionSizeError(
                        f"materialization exceeded {max_states} states")
                dst = len(order)
                order[arc.nextstate] = dst
                builder.add_state()
                queue.append(arc.nextstate)
            builder.add_arc(order[sid], arc.ilabel, arc.olabel, arc.weight, dst)
        if exp.final != ZERO:
            builder.set_final(order[sid], exp.final)
    return builder.freeze(start=0)


CACHE_FORMAT = "lazyfst-public-cache 1"


def dump_public_cache(cache: PublicCache) -> str:
    """Versioned, checksummed text dump of a sealed public cache."""
    if not cache.sealed:
        raise ConfigurationError("dump requires a sealed cache")
    lines = [f"table {len(cache.keys)}"]
    for key in cache.keys:
        if not isinstance(key.q2, RootState):
            raise InvariantError(f"public table holds non-root key {key}")
        lines.append(f"k {key.q1} {key.q2.qc} {int(key.f)}")
    for state_id in sorted(cache.expanded):
        exp = cache.expanded[state_id]
        lines.append(f"s {state_id} {exp.final!r} {len(exp.arcs)}")
        for arc in exp.arcs:
            lines.append(f"a {arc.ilabel} {arc.olabel} {arc.weight!r} {arc.nextstate}")
    body = "".join(line + "\n" for line in lines)
    digest = hashlib.sha256(body.encode()).hexdigest()
    return (f"{CACHE_FORMAT}\n"
            f"graph {cache.fingerprint()}\n"
            f"sha256 {digest}\n"
            f"{body}")


def load_public_cache(text: str, t1: Fst, root: Fst,
                      classes: frozenset[int]) -> PublicCache:
    """Parse a dump back into a sealed cache, verifying version, graph
    fingerprint and checksum."""
    lines = text.splitlines(keepends=True)
    if len(lines) < 3 or lines[0].strip() != CACHE_FORMAT:
        raise BuildError("not a public cache dump (bad or missing version line)")
    cache = PublicCache(t1, root, classes)
    graph_line = lines[1].split()
    if len(graph_line) != 2 or graph_line[0] != "graph":
        raise BuildError("cache dump missing graph fingerprint")
    if graph_line[1] != cache.fingerprint():
        raise BuildError("cache dump was built against different graphs")
    sum_line = lines[2].split()
    if len(sum_line) != 2 or sum_line[0] != "sha256":
        raise BuildError("cache dump missing checksum")
    body = "".join(lines[3:])
    if hashlib.sha256(body.encode()).hexdigest() != sum_line[1]:
        raise BuildError("cache dump checksum mismatch")

    rows = body.splitlines()
    if not rows or not rows[0].startswith("table "):
        raise BuildError("cache dump missing state table")
    num_keys = int(rows[0].split()[1])
    pos = 1
    for _ in range(num_keys):
        parts = rows[pos].split()
        if parts[0] != "k" or len(parts) != 4:
            raise BuildError(f"bad table row: {rows[pos]!r}")
        cache.intern(PairState(int(parts[1]), RootState(int(parts[2])),
                               FilterState(int(parts[3]))))
        pos += 1
    while pos < len(rows):
        parts = rows[pos].split()
        if parts[0] != "s" or len(parts) != 4:
            raise BuildError(f"bad expansion row: {rows[pos]!r}")
        state_id, final, n_arcs = int(parts[1]), float(parts[2]), int(parts[3])
        pos += 1
        arcs = []
        for _ in range(n_arcs):
            a = rows[pos].split()
            if a[0] != "a" or len(a) != 5:
                raise BuildError(f"bad arc row: {rows[pos]!r}")
            arcs.append(Arc(int(a[1]), int(a[2]), float(a[3]), int(a[4])))
            pos += 1
        cache.store(state_id, CachedExpansion(tuple(arcs), final))
    return seal_public(cache)
