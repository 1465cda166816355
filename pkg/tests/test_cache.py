import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import acyclic_fst, dyadic_weights
from lazyfst.cache import (ARC_BYTES, KEY_BYTES, STATE_BYTES, CachedExpansion,
                           PublicCache, Session, dump_public_cache, end_session,
                           expand, is_precomposable, load_public_cache,
                           materialize, new_session, seal_public)
from lazyfst.compose import FilterState, PairState, compose_static
from lazyfst.errors import BuildError, ConfigurationError, InvariantError
from lazyfst.fst import EPS, Arc, FstBuilder, write_text_fst
from lazyfst.precompose import PrecomposeConfig, bfs_precompose
from lazyfst.replace import ClassBinding, InsideState, ReplaceView, RootState

CLS = 9
TEMP = 99


def build_machine(arcs, finals, n):
    b = FstBuilder()
    b.ensure_state(n - 1)
    for src, il, ol, w, dst in arcs:
        b.add_arc(src, il, ol, w, dst)
    for state, w in finals.items():
        b.set_final(state, w)
    return b.freeze(start=0)


@st.composite
def scenario(draw):
    """(t1, root, binding): t1 outputs the union of root tokens and class
    inner tokens, so compositions exercise the class boundary."""
    root = draw(acyclic_fst(num_labels=3, acceptor=True, allow_ieps=False,
                            label_base=CLS - 1))       # tokens {8, 9, 10}
    inner = draw(acyclic_fst(num_labels=2, acceptor=True, allow_ieps=False,
                             label_base=3))            # tokens {3, 4}
    n = draw(st.integers(min_value=2, max_value=6))
    builder = FstBuilder()
    builder.ensure_state(n - 1)
    olabels = [EPS, 3, 4, 8, 10]
    for _ in range(draw(st.integers(min_value=1, max_value=2 * n))):
        src = draw(st.integers(min_value=0, max_value=n - 2))
        dst = draw(st.integers(min_value=src + 1, max_value=n - 1))
        builder.add_arc(src, draw(st.integers(min_value=1, max_value=2)),
                        draw(st.sampled_from(olabels)),
                        draw(dyadic_weights()), dst)
    for state in draw(st.lists(st.integers(min_value=1, max_value=n - 1),
                               min_size=1, max_size=2)):
        builder.set_final(state, draw(dyadic_weights()))
    t1 = builder.freeze(start=0)
    binding = ClassBinding(frozenset({CLS}), {CLS: inner})
    return t1, root, binding


def fixed_scenario():
    # t1 reads {1,2}, writes root tokens and class-inner tokens
    t1 = build_machine([(0, 1, 8, 0.5, 1), (1, 2, 3, 0.25, 2),
                        (1, 2, 4, 0.25, 2), (2, 1, 10, 0.0, 3),
                        (0, 1, EPS, 1.0, 2)],
                       {3: 0.0, 2: 0.5}, 4)
    # root accepts "8 9 10" and "8 8"; 9 is the class label
    root = build_machine([(0, 8, 8, 0.25, 1), (1, CLS, CLS, 0.5, 2),
                          (2, 10, 10, 0.0, 3), (1, 8, 8, 0.75, 3)],
                         {3: 0.25}, 4)
    inner = build_machine([(0, 3, 3, 0.25, 1), (0, 4, 4, 0.5, 1)],
                          {1: 0.0}, 2)
    return t1, root, ClassBinding(frozenset({CLS}), {CLS: inner})


def sealed_cache(t1, root, classes=frozenset({CLS}), depth=0):
    cfg = PrecomposeConfig(classes=classes, temp_label=TEMP, bfs_depth=depth)
    return seal_public(bfs_precompose(t1, root, cfg))


class TestIsPrecomposable:
    def test_root_state_without_class_arcs(self):
        _, root, _ = fixed_scenario()
        key = PairState(0, RootState(0), FilterState.ANY)
        assert is_precomposable(key, root, frozenset({CLS}))

    def test_root_state_with_class_arc(self):
        _, root, _ = fixed_scenario()
        key = PairState(0, RootState(1), FilterState.ANY)
        assert not is_precomposable(key, root, frozenset({CLS}))

    def test_inside_state_never(self):
        _, root, _ = fixed_scenario()
        key = PairState(0, InsideState(CLS, 0, 2), FilterState.ANY)
        assert not is_precomposable(key, root, frozenset({CLS}))


class TestLifecycle:
    def test_sealed_cache_rejects_intern_and_store(self):
        t1, root, _ = fixed_scenario()
        cache = sealed_cache(t1, root)
        with pytest.raises(ConfigurationError):
            cache.intern(PairState(1, RootState(0), FilterState.ANY))
        with pytest.raises(ConfigurationError):
            cache.store(0, CachedExpansion((), 0.0))

    def test_session_requires_sealed_cache(self):
        t1, root, binding = fixed_scenario()
        cache = PublicCache(t1, root, frozenset({CLS}))
        with pytest.raises(ConfigurationError):
            new_session(cache, binding)
        Session(cache, binding, _allow_unsealed=True)  # build-time path

    def test_binding_must_declare_same_classes(self):
        t1, root, _ = fixed_scenario()
        cache = sealed_cache(t1, root)
        other = ClassBinding(frozenset({8}), {})
        with pytest.raises(ConfigurationError):
            new_session(cache, other)

    def test_end_session_is_terminal(self):
        t1, root, binding = fixed_scenario()
        session = new_session(sealed_cache(t1, root), binding)
        sid = session.start_id()
        expand(sid, session)
        final = end_session(session)
        assert final.otf_expansion == 1
        with pytest.raises(ConfigurationError):
            end_session(session)
        with pytest.raises(ConfigurationError):
            expand(sid, session)

    def test_seal_twice_is_noop(self):
        t1, root, _ = fixed_scenario()
        cache = sealed_cache(t1, root)
        assert seal_public(cache) is cache


class TestSealPurity:
    def test_rejects_binding_dependent_key(self):
        t1, root, _ = fixed_scenario()
        cache = PublicCache(t1, root, frozenset({CLS}))
        # RootState(1) has a class out-arc, so caching it publicly is wrong
        bad = cache.intern(PairState(0, RootState(1), FilterState.ANY))
        cache.store(bad, CachedExpansion((), 1.0))
        with pytest.raises(InvariantError):
            seal_public(cache)

    def test_rejects_unregistered_destination(self):
        t1, root, _ = fixed_scenario()
        cache = PublicCache(t1, root, frozenset({CLS}))
        ok = cache.intern(cache.start_key())
        cache.store(ok, CachedExpansion((Arc(1, 8, 0.5, 7),), 1.0))
        with pytest.raises(InvariantError):
            seal_public(cache)


class TestIdSpace:
    def test_private_ids_start_at_num_public(self):
        t1, root, binding = fixed_scenario()
        cache = sealed_cache(t1, root, depth=3)
        assert cache.num_public > 0
        session = new_session(cache, binding)
        fresh = session.intern(PairState(3, InsideState(CLS, 0, 2),
                                         FilterState.ANY))
        assert fresh >= session.num_public
        assert session.key_of(fresh) == PairState(3, InsideState(CLS, 0, 2),
                                                  FilterState.ANY)

    def test_public_key_interns_to_public_id(self):
        t1, root, binding = fixed_scenario()
        cache = sealed_cache(t1, root, depth=3)
        session = new_session(cache, binding)
        assert session.intern(cache.start_key()) == cache.ids[cache.start_key()]
        assert session.start_id() < session.num_public

    def test_expand_increments_exactly_one_counter(self):
        t1, root, binding = fixed_scenario()
        cache = sealed_cache(t1, root, depth=3)
        session = new_session(cache, binding)
        sid = session.start_id()
        m = session.metrics

        def counts():
            return (m.public_hit, m.private_hit, m.otf_expansion)

        assert counts() == (0, 0, 0)
        expand(sid, session)
        assert counts() == (1, 0, 0)          # start was cached publicly
        expand(sid, session)
        assert counts() == (2, 0, 0)
        # walk to a state the public layer does not hold
        frontier = None
        seen, stack = {sid}, [sid]
        while stack:
            cur = stack.pop()
            for arc in expand(cur, session).arcs:
                if arc.nextstate >= session.num_public or \
                        arc.nextstate not in cache.expanded:
                    frontier = arc.nextstate
                    stack.clear()
                    break
                if arc.nextstate not in seen:
                    seen.add(arc.nextstate)
                    stack.append(arc.nextstate)
        assert frontier is not None, "graph entirely public; deepen the test"
        before = counts()
        expand(frontier, session)
        after = counts()
        assert after[2] == before[2] + 1 and after[0] == before[0] \
            and after[1] == before[1]
        expand(frontier, session)
        assert (m.public_hit, m.private_hit, m.otf_expansion) == \
            (after[0], after[1] + 1, after[2])


class TestMaterializeMatchesStatic:
    def check(self, t1, root, binding, depth):
        static = compose_static(t1, ReplaceView(root, binding))
        cache = sealed_cache(t1, root, depth=depth)
        session = new_session(cache, binding)
        assert write_text_fst(materialize(session)) == write_text_fst(static)

    def test_fixed_graph_all_cache_depths(self):
        t1, root, binding = fixed_scenario()
        for depth in (0, 1, 2, 3, 64):
            self.check(t1, root, binding, depth)

    @given(scenario(), st.sampled_from([0, 2, 64]))
    @settings(max_examples=60, deadline=None)
    def test_random_graphs(self, scn, depth):
        t1, root, binding = scn
        self.check(t1, root, binding, depth)


class TestBytesModel:
    def test_public_estimate_is_exact_arithmetic(self):
        t1, root, _ = fixed_scenario()
        cache = sealed_cache(t1, root, depth=3)
        arcs = sum(len(e.arcs) for e in cache.expanded.values())
        assert cache.bytes_estimate() == (arcs * ARC_BYTES
                                          + cache.num_expanded * STATE_BYTES
                                          + cache.num_public * KEY_BYTES)

    def test_private_bytes_track_private_layer_only(self):
        t1, root, binding = fixed_scenario()
        cache = sealed_cache(t1, root, depth=64)
        session = new_session(cache, binding)
        assert session.bytes_private == 0
        materialize(session)
        arcs = sum(len(e.arcs) for e in session.private_exp.values())
        want = (arcs * ARC_BYTES + len(session.private_exp) * STATE_BYTES
                + len(session.private_keys) * KEY_BYTES)
        assert session.bytes_private == want
        assert end_session(session).bytes_private == want


class TestDumpLoad:
    def roundtrip(self, depth):
        t1, root, binding = fixed_scenario()
        cache = sealed_cache(t1, root, depth=depth)
        text = dump_public_cache(cache)
        loaded = load_public_cache(text, t1, root, frozenset({CLS}))
        assert loaded.sealed
        assert loaded.keys == cache.keys
        assert loaded.expanded == cache.expanded
        assert dump_public_cache(loaded) == text
        # a loaded cache serves sessions identically
        static = write_text_fst(compose_static(t1, ReplaceView(root, binding)))
        assert write_text_fst(materialize(new_session(loaded, binding))) == static

    def test_roundtrip_shallow_and_deep(self):
        self.roundtrip(2)
        self.roundtrip(64)

    def test_dump_requires_sealed(self):
        t1, root, _ = fixed_scenario()
        cache = PublicCache(t1, root, frozenset({CLS}))
        with pytest.raises(ConfigurationError):
            dump_public_cache(cache)

    def test_load_rejects_bad_version(self):
        t1, root, _ = fixed_scenario()
        text = dump_public_cache(sealed_cache(t1, root, depth=2))
        wrong = text.replace("lazyfst-public-cache 1", "lazyfst-public-cache 2", 1)
        with pytest.raises(BuildError):
            load_public_cache(wrong, t1, root, frozenset({CLS}))

    def test_load_rejects_different_graphs(self):
        t1, root, binding = fixed_scenario()
        text = dump_public_cache(sealed_cache(t1, root, depth=2))
        with pytest.raises(BuildError):
            load_public_cache(text, t1, binding.fst_for(CLS), frozenset({CLS}))

    def test_load_rejects_corrupt_body(self):
        t1, root, _ = fixed_scenario()
        text = dump_public_cache(sealed_cache(t1, root, depth=2))
        lines = text.splitlines()
        assert lines[3].startswith("table ")
        lines[3] = "table 999999"
        with pytest.raises(BuildError):
            load_public_cache("\n".join(lines) + "\n", t1, root,
                              frozenset({CLS}))

    def test_load_rejects_truncation(self):
        t1, root, _ = fixed_scenario()
        text = dump_public_cache(sealed_cache(t1, root, depth=2))
        truncated = "".join(text.splitlines(keepends=True)[:-1])
        with pytest.raises(BuildError):
            load_public_cache(truncated, t1, root, frozenset({CLS}))

    def test_loaded_cache_weights_are_bit_exact(self):
        t1, root, _ = fixed_scenario()
        cache = sealed_cache(t1, root, depth=64)
        loaded = load_public_cache(dump_public_cache(cache), t1, root,
                                   frozenset({CLS}))
        for sid, exp in cache.expanded.items():
            got = loaded.expanded[sid]
            assert got.final == exp.final or (
                math.isinf(got.final) and math.isinf(exp.final))
            assert got.arcs == exp.arcs
