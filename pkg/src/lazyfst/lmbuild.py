"""Desk-scale graph builders: lexicon transducer, backoff bigram root,
and the monophone contact acceptor.

The contact pipeline mirrors how out-of-vocabulary names reach the
decoder: every inventory phone is promoted to a "monophone word", a
contact's pronunciation is spelled as a sequence of those words closed by
one SIL word, homophones get auxiliary "#1", "#2", ... labels so the
union stays determinizable, and the auxiliary labels are epsilon-erased
after determinization and minimization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import BuildError, InvariantError, ParseError
from .fst import EPS, Arc, Fst, FstBuilder, SymbolTable
from .replace import insert_epsilon_before_class
from .semiring import ZERO

SIL = "SIL"
TEMP_SYMBOL = "<temp>"


@dataclass
class Lexicon:
    """Words with pronunciations plus the derived phone inventory."""
    words: dict[str, list[list[str]]]
    phones: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.phones:
            seen = {p for prons in self.words.values() for pron in prons for p in pron}
            seen.add(SIL)
            self.phones = sorted(seen)
        for word in self.words:
            if word in self.phones:
                raise BuildError(
                    f"word {word!r} collides with a phone name; monophone "
                    "words are reserved for the phone inventory")


def parse_lexicon(text: str, path: str = "<lexicon>") -> Lexicon:
    words: dict[str, list[list[str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if "\t" not in line:
            raise ParseError(path, lineno, "expected 'word<TAB>phone phone ...'")
        word, pron_str = line.split("\t", 1)
        pron = pron_str.split()
        if not word or not pron:
            raise ParseError(path, lineno, "empty word or pronunciation")
        words.setdefault(word, []).append(pron)
    if not words:
        raise BuildError(f"{path}: empty lexicon")
    return Lexicon(words)


def parse_corpus(text: str) -> list[list[str]]:
    return [line.split() for line in text.splitlines() if line.strip()]


def parse_classes(text: str) -> list[str]:
    return [line.strip() for line in text.splitlines() if line.strip()]


@dataclass
class ContactEntry:
    name: str
    prons: list[list[str]]


def parse_contacts_jsonl(text: str, path: str = "<contacts>") -> list[ContactEntry]:
    entries: list[ContactEntry] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as err:
            raise ParseError(path, lineno, f"bad JSON: {err}") from None
        name = obj.get("name")
        prons = obj.get("pronunciations")
        if not name or not prons or not all(p for p in prons):
            raise ParseError(path, lineno,
                             "need a name and non-empty pronunciations")
        entries.append(ContactEntry(name, [list(p) for p in prons]))
    return entries


def build_symbol_tables(lexicon: Lexicon,
                        class_names: list[str]) -> tuple[SymbolTable, SymbolTable]:
    """Phone table from the inventory; word table holding real words,
    monophone words (named after their phones), class labels, and the
    pre-composition placeholder."""
    phone_syms = SymbolTable(lexicon.phones)
    word_syms = SymbolTable()
    for word in lexicon.words:
        word_syms.add(word)
    for phone in lexicon.phones:
        word_syms.add(phone)
    for name in class_names:
        if name in word_syms:
            raise BuildError(f"class label {name!r} collides with a word")
        word_syms.add(name)
    word_syms.add(TEMP_SYMBOL)
    return phone_syms, word_syms


def build_lexicon_fst(lexicon: Lexicon, phone_syms: SymbolTable,
                      word_syms: SymbolTable,
                      sil_penalty: float = math.log(2.0)) -> Fst:
    """Closure transducer from phone strings to word strings.

    One loop state; each word contributes a phone chain emitting the word
    on its first arc with weight -log(1/k) for k pronunciations.  Every
    inventory phone also maps to itself as a monophone word, and SIL can
    be consumed silently between words for `sil_penalty`.

    Each phone occurrence owns one state carrying a phone:eps self-loop,
    so a phone may span any number of consecutive acoustic frames; the
    chain rejoins the loop state through a free eps:eps arc.
    """
    builder = FstBuilder(phone_syms, word_syms)
    loop = builder.add_state()
    builder.set_final(loop, 0.0)

    def phone_id(phone: str) -> int:
        pid = phone_syms.id_of(phone)
        if pid is None:
            raise BuildError(f"phone {phone!r} missing from inventory")
        return pid

    def chain(pron: list[str], olabel: int, weight: float) -> None:
        src = loop
        for i, phone in enumerate(pron):
            pid = phone_id(phone)
            dst = builder.add_state()
            if i == 0:
                builder.add_arc(src, pid, olabel, weight, dst)
            else:
                builder.add_arc(src, pid, EPS, 0.0, dst)
            builder.add_arc(dst, pid, EPS, 0.0, dst)
            src = dst
        builder.add_arc(src, EPS, EPS, 0.0, loop)

    for word, prons in lexicon.words.items():
        first_arc_weight = math.log(len(prons))
        for pron in prons:
            chain(pron, word_syms.id_of(word), first_arc_weight)
    for phone in lexicon.phones:
        chain([phone], word_syms.id_of(phone), 0.0)
    chain([SIL], EPS, sil_penalty)
    return builder.freeze(start=loop)


def train_bigram_root(corpus: list[list[str]], lexicon: Lexicon,
                      class_names: list[str], word_syms: SymbolTable,
                      backoff_penalty: float = math.log(10.0),
                      apply_class_transform: bool = True) -> Fst:
    """Backoff bigram acceptor over the corpus.

    One history state per seen word plus a sentence-start history and a
    unigram backoff state.  Seen bigrams cost their negative log relative
    frequency; every history state has an epsilon backoff arc (fixed
    penalty) to the unigram state; sentence ends become final weights.
    Class tokens train like ordinary words except that the unigram state
    carries no class arcs: a non-terminal is only enterable from contexts
    that actually license it, never through backoff.  Unless disabled the
    result is passed through insert_epsilon_before_class so no state
    keeps a class-label out-arc.
    """
    if not corpus:
        raise BuildError("empty corpus")
    allowed = set(lexicon.words) | set(class_names)
    unigram: dict[str, int] = {}
    bigram: dict[tuple[str, str], int] = {}
    hist_total: dict[str, int] = {}
    end_count: dict[str, int] = {}
    start_bigram: dict[str, int] = {}
    num_sentences = 0
    num_end = 0
    for sentence in corpus:
        if not sentence:
            continue
        num_sentences += 1
        for tok in sentence:
            if tok not in allowed:
                raise BuildError(f"corpus token {tok!r} is neither a lexicon "
                                 "word nor a class label")
            unigram[tok] = unigram.get(tok, 0) + 1
        start_bigram[sentence[0]] = start_bigram.get(sentence[0], 0) + 1
        for prev, tok in zip(sentence, sentence[1:]):
            bigram[(prev, tok)] = bigram.get((prev, tok), 0) + 1
        last = sentence[-1]
        end_count[last] = end_count.get(last, 0) + 1
        num_end += 1
        for tok in sentence:
            hist_total[tok] = hist_total.get(tok, 0) + 1
    if num_sentences == 0:
        raise BuildError("empty corpus")
    total_tokens = sum(unigram.values()) + num_end

    vocab = [word_syms.sym_of(i) for i in range(1, len(word_syms))
             if word_syms.sym_of(i) in unigram]

    builder = FstBuilder(word_syms, word_syms)
    start = builder.add_state()
    uni_state = builder.add_state()
    hist = {w: builder.add_state() for w in vocab}

    for w in vocab:
        if w in start_bigram:
            builder.add_arc(start, word_syms.id_of(w), word_syms.id_of(w),
                            -math.log(start_bigram[w] / num_sentences),
                            hist[w])
    builder.add_arc(start, EPS, EPS, backoff_penalty, uni_state)

    class_set = set(class_names)
    for w in vocab:
        if w in class_set:
            continue
        builder.add_arc(uni_state, word_syms.id_of(w), word_syms.id_of(w),
                        -math.log(unigram[w] / total_tokens), hist[w])
    builder.set_final(uni_state, -math.log(num_end / total_tokens))

    for v in vocab:
        for w in vocab:
            c = bigram.get((v, w))
            if c:
                builder.add_arc(hist[v], word_syms.id_of(w), word_syms.id_of(w),
                                -math.log(c / hist_total[v]), hist[w])
        builder.add_arc(hist[v], EPS, EPS, backoff_penalty, uni_state)
        if v in end_count:
            builder.set_final(hist[v], -math.log(end_count[v] / hist_total[v]))

    root = builder.freeze(start=start)
    if apply_class_transform and class_names:
        class_ids = frozenset(word_syms.id_of(c) for c in class_names)
        root = insert_epsilon_before_class(root, class_ids)
    return root


def naive_contact_union(contacts: list[ContactEntry], word_syms: SymbolTable,
                        with_disambig: bool = True) -> tuple[Fst, frozenset[int]]:
    """Star-shaped union of pronunciation chains, one SIL word at the end
    of each, with "#j" labels inserted before SIL on the j-th occurrence
    of any duplicated pronunciation.  Returns the FST and the set of
    auxiliary label ids it used."""
    if not contacts:
        raise BuildError("empty contact list")
    seqs: list[tuple[list[int], float]] = []
    occurrence: dict[tuple[int, ...], int] = {}
    group_count: dict[tuple[int, ...], int] = {}
    flat: list[tuple[tuple[int, ...], float]] = []
    for entry in contacts:
        weight = math.log(len(entry.prons))
        for pron in entry.prons:
            ids = []
            for phone in pron:
                pid = word_syms.id_of(phone)
                if pid is None:
                    raise BuildError(f"contact {entry.name!r} uses {phone!r} "
                                     "which is not a monophone word")
                ids.append(pid)
            key = tuple(ids)
            group_count[key] = group_count.get(key, 0) + 1
            flat.append((key, weight))
    disambig_ids: set[int] = set()
    sil_id = word_syms.id_of(SIL)
    if sil_id is None:
        raise BuildError("word table lacks the SIL monophone word")
    for key, weight in flat:
        ids = list(key)
        if with_disambig and group_count[key] > 1:
            occurrence[key] = occurrence.get(key, 0) + 1
            aux = word_syms.add(f"#{occurrence[key]}")
            disambig_ids.add(aux)
            ids.append(aux)
        ids.append(sil_id)
        seqs.append((ids, weight))

    builder = FstBuilder(word_syms, word_syms)
    start = builder.add_state()
    for ids, weight in seqs:
        src = start
        for i, label in enumerate(ids):
            dst = builder.add_state()
            builder.add_arc(src, label, label, weight if i == 0 else 0.0, dst)
            src = dst
        builder.set_final(src, 0.0)
    return builder.freeze(start=start), frozenset(disambig_ids)


def _check_acyclic_acceptor(fst: Fst, op: str) -> None:
    for state in fst.states():
        for arc in fst.arcs_of(state):
            if arc.ilabel != arc.olabel:
                raise BuildError(f"{op} expects an acceptor")
    color = [0] * fst.num_states  # 0 unseen, 1 on stack, 2 done
    stack: list[tuple[int, int]] = [(fst.start, 0)]
    color[fst.start] = 1
    while stack:
        state, idx = stack[-1]
        arcs = fst.arcs_of(state)
        if idx == len(arcs):
            color[state] = 2
            stack.pop()
            continue
        stack[-1] = (state, idx + 1)
        nxt = arcs[idx].nextstate
        if color[nxt] == 1:
            raise BuildError(f"{op} requires an acyclic input")
        if color[nxt] == 0:
            color[nxt] = 1
            stack.append((nxt, 0))


def determinize_acyclic(fst: Fst) -> Fst:
    """Exact determinization for acyclic acceptors.

    Enumerates the (finitely many) accepted strings, takes the tropical
    min per string, and lays the result out as a prefix tree with all
    weight on final states.  Per-string weights are preserved exactly --
    no residual subtraction -- which is what lets tests demand exact
    language equality through the contact pipeline.
    """
    _check_acyclic_acceptor(fst, "determinize_acyclic")
    strings: dict[tuple[int, ...], float] = {}

    def walk(state: int, prefix: list[int], weight: float) -> None:
        rho = fst.final_weight(state)
        if rho != ZERO:
            key = tuple(prefix)
            total = weight + rho
            old = strings.get(key)
            if old is None or total < old:
                strings[key] = total
        for arc in fst.arcs_of(state):
            if arc.ilabel != EPS:
                prefix.append(arc.ilabel)
            walk(arc.nextstate, prefix, weight + arc.weight)
            if arc.ilabel != EPS:
                prefix.pop()

    walk(fst.start, [], 0.0)
    builder = FstBuilder(fst.isyms, fst.osyms)
    rootstate = builder.add_state()
    nodes: dict[tuple[int, ...], int] = {(): rootstate}
    for key in sorted(strings):
        src = rootstate
        for i, label in enumerate(key):
            prefix = key[:i + 1]
            dst = nodes.get(prefix)
            if dst is None:
                dst = builder.add_state()
                nodes[prefix] = dst
                builder.add_arc(src, label, label, 0.0, dst)
            src = dst
        builder.set_final(src, strings[key])
    return builder.freeze(start=rootstate)


def minimize_acyclic(fst: Fst) -> Fst:
    """Merge states with identical onward behavior, leaves first."""
    _check_acyclic_acceptor(fst, "minimize_acyclic")
    order: list[int] = []
    seen = [False] * fst.num_states
    stack: list[tuple[int, int]] = [(fst.start, 0)]
    seen[fst.start] = True
    while stack:
        state, idx = stack[-1]
        arcs = fst.arcs_of(state)
        if idx == len(arcs):
            order.append(state)
            stack.pop()
            continue
        stack[-1] = (state, idx + 1)
        nxt = arcs[idx].nextstate
        if not seen[nxt]:
            seen[nxt] = True
            stack.append((nxt, 0))

    rep_of_sig: dict[tuple, int] = {}
    rep: dict[int, int] = {}
    for state in order:  # postorder: successors already classified
        sig = (fst.finals.get(state),
               tuple((a.ilabel, a.olabel, a.weight, rep[a.nextstate])
                     for a in fst.arcs_of(state)))
        rep[state] = rep_of_sig.setdefault(sig, state)

    keep = sorted({rep[s] for s in rep})
    renum = {old: new for new, old in enumerate(keep)}
    builder = FstBuilder(fst.isyms, fst.osyms)
    builder.ensure_state(len(keep) - 1)
    for old in keep:
        for arc in fst.arcs_of(old):
            builder.add_arc(renum[old], arc.ilabel, arc.olabel, arc.weight,
                            renum[rep[arc.nextstate]])
        if old in fst.finals:
            builder.set_final(renum[old], fst.finals[old])
    return builder.freeze(start=renum[rep[fst.start]])


def remove_disambig(fst: Fst, disambig_ids: frozenset[int]) -> Fst:
    """Replace auxiliary labels by epsilon; exact duplicates collapse."""
    builder = FstBuilder(fst.isyms, fst.osyms)
    builder.ensure_state(fst.num_states - 1)
    for state in fst.states():
        emitted: set[Arc] = set()
        for arc in fst.arcs_of(state):
            il = EPS if arc.ilabel in disambig_ids else arc.ilabel
            ol = EPS if arc.olabel in disambig_ids else arc.olabel
            new = Arc(il, ol, arc.weight, arc.nextstate)
            if new not in emitted:
                emitted.add(new)
                builder.add_arc(state, il, ol, arc.weight, arc.nextstate)
    for state, w in fst.finals.items():
        builder.set_final(state, w)
    return builder.freeze(start=fst.start)


def build_contact_fst(contacts: list[ContactEntry],
                      word_syms: SymbolTable) -> Fst:
    """Full contact pipeline: union, disambiguate, determinize, minimize,
    erase the auxiliary labels."""
    union, disambig_ids = naive_contact_union(contacts, word_syms)
    det = determinize_acyclic(union)
    for state in det.states():
        labels = [a.ilabel for a in det.arcs_of(state)]
        if len(labels) != len(set(labels)) or EPS in labels:
            raise InvariantError("contact FST not input-deterministic "
                                 "before disambiguation-symbol removal")
    minimized = minimize_acyclic(det)
    return remove_disambig(minimized, disambig_ids)
