"""Lazy replacement of class labels by per-session class FSTs.

The root graph is a word acceptor whose arcs may carry class labels
(non-terminals such as "@contact") on both tapes.  A ReplaceView presents
root-with-classes-substituted as an ordinary state machine without ever
materializing it: entering a class arc becomes an epsilon arc (carrying
the class arc's weight) into the bound FST, and each final state of the
bound FST gets an epsilon arc (carrying its final weight) back to the
state the class arc pointed at.  Nesting is depth one by construction:
bound FSTs must not contain class labels themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .compose import arc_sort_key
from .errors import BuildError, ExpansionError
from .fst import EPS, Arc, Fst, FstBuilder, SymbolTable
from .semiring import ZERO


@dataclass(frozen=True, slots=True)
class RootState:
    """View state lying in the root graph."""
    qc: int

    def sort_key(self) -> tuple:
        return (1, self.qc)


@dataclass(frozen=True, slots=True)
class InsideState:
    """View state inside the FST bound to `cls`; `ret` is the root state
    to resume at when the bound FST accepts."""
    cls: int
    qp: int
    ret: int

    def sort_key(self) -> tuple:
        return (2, self.cls, self.qp, self.ret)


ReplaceState = Union[RootState, InsideState]


class ClassBinding:
    """Maps class labels to the FSTs that replace them for one session."""

    def __init__(self, classes: frozenset[int], mapping: dict[int, Fst]):
        for label in mapping:
            if label not in classes:
                raise BuildError(f"binding for {label} which is not a declared class label")
        for label, fst in mapping.items():
            for state in fst.states():
                for arc in fst.arcs_of(state):
                    if arc.olabel in classes or arc.ilabel in classes:
                        raise BuildError(
                            f"class FST for label {label} contains class label "
                            f"{arc.olabel if arc.olabel in classes else arc.ilabel}; "
                            "nesting is limited to depth one")
        self.classes = classes
        self.mapping = dict(mapping)

    def fst_for(self, label: int) -> Fst:
        got = self.mapping.get(label)
        if got is None:
            raise ExpansionError(f"no class FST bound for class label {label}")
        return got


class ReplaceView:
    """Fst-like lazy view of the root with class labels substituted."""

    def __init__(self, root: Fst, binding: ClassBinding):
        self.root = root
        self.binding = binding
        self.classes = binding.classes
        self.isyms = root.isyms
        self.osyms = root.osyms
        self.start = RootState(root.start)
        for state in root.states():
            for arc in root.arcs_of(state):
                if (arc.olabel in self.classes) != (arc.ilabel in self.classes) \
                        or (arc.olabel in self.classes and arc.ilabel != arc.olabel):
                    raise BuildError(
                        f"root arc {state}->{arc.nextstate} must carry its class "
                        "label on both tapes")

    def arcs_of(self, state: ReplaceState) -> list[Arc]:
        out: list[Arc] = []
        if isinstance(state, RootState):
            for arc in self.root.arcs_of(state.qc):
                if arc.olabel in self.classes:
                    inner = self.binding.fst_for(arc.olabel)
                    out.append(Arc(EPS, EPS, arc.weight,
                                   InsideState(arc.olabel, inner.start, arc.nextstate)))
                else:
                    out.append(Arc(arc.ilabel, arc.olabel, arc.weight,
                                   RootState(arc.nextstate)))
        else:
            inner = self.binding.fst_for(state.cls)
            for arc in inner.arcs_of(state.qp):
                out.append(Arc(arc.ilabel, arc.olabel, arc.weight,
                               InsideState(state.cls, arc.nextstate, state.ret)))
            exit_w = inner.final_weight(state.qp)
            if exit_w != ZERO:
                out.append(Arc(EPS, EPS, exit_w, RootState(state.ret)))
        out.sort(key=arc_sort_key)
        return out

    def final_weight(self, state: ReplaceState) -> float:
        if isinstance(state, RootState):
            return self.root.final_weight(state.qc)
        return ZERO


def replace_view(root: Fst, binding: ClassBinding) -> ReplaceView:
    return ReplaceView(root, binding)


def insert_epsilon_before_class(root: Fst, classes: frozenset[int]) -> Fst:
    """Split every class-label arc so class arcs only leave dedicated states.

    Each class arc (src -> dst, p:p, w) becomes an epsilon arc (src -> n,
    eps, w) plus (n -> dst, p:p, 0) where n is a fresh state shared by all
    parallel arcs with the same (src, p, dst).  Afterwards no original
    state (the start state in particular) has a class-label out-arc, which
    is what makes those states eligible for shared pre-composition.  A
    root without class arcs comes back unchanged up to renumbering.
    """
    builder = FstBuilder(root.isyms, root.osyms)
    builder.ensure_state(root.num_states - 1)
    new_state: dict[tuple[int, int, int], int] = {}
    for state in root.states():
        for arc in root.arcs_of(state):
            if arc.olabel in classes:
                triple = (state, arc.olabel, arc.nextstate)
                bridge = new_state.get(triple)
                if bridge is None:
                    bridge = builder.add_state()
                    new_state[triple] = bridge
                    builder.add_arc(bridge, arc.ilabel, arc.olabel, 0.0,
                                    arc.nextstate)
                builder.add_arc(state, EPS, EPS, arc.weight, bridge)
            else:
                builder.add_arc(state, arc.ilabel, arc.olabel, arc.weight,
                                arc.nextstate)
    for state, w in root.finals.items():
        builder.set_final(state, w)
    return builder.freeze(start=root.start)


def make_placeholder_class_fst(temp_label: int,
                               syms: Optional[SymbolTable] = None) -> Fst:
    """Two-state FST accepting exactly the placeholder symbol.

    Binding every class to this during pre-composition keeps expansion
    well-defined while guaranteeing no real path enters a class region:
    the deployed first-pass graph never emits the placeholder, so
    composition cannot continue past the class entry.
    """
    builder = FstBuilder(syms, syms)
    s0 = builder.add_state()
    s1 = builder.add_state()
    builder.add_arc(s0, temp_label, temp_label, 0.0, s1)
    builder.set_final(s1, 0.0)
    return builder.freeze(start=s0)


def make_empty_class_fst(syms: Optional[SymbolTable] = None) -> Fst:
    """Single-state FST accepting nothing; the warm-up binding."""
    builder = FstBuilder(syms, syms)
    builder.add_state()
    return builder.freeze(start=0)


def placeholder_binding(classes: frozenset[int], temp_label: int,
                        syms: Optional[SymbolTable] = None) -> ClassBinding:
    fst = make_placeholder_class_fst(temp_label, syms)
    return ClassBinding(classes, {c: fst for c in classes})


def empty_binding(classes: frozenset[int],
                  syms: Optional[SymbolTable] = None) -> ClassBinding:
    fst = make_empty_class_fst(syms)
    return ClassBinding(classes, {c: fst for c in classes})
