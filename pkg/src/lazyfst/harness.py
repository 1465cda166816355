"""Experiment harness: build the desk graphs, pre-compose the shared
cache, run session benchmarks, and score the results.

The harness rebuilds graphs from the dataset on demand instead of
deserializing them; desk scale makes that cheap and it keeps every
command self-contained.  Reports are plain dicts ready for json.dump,
deterministic except for the wall-clock and real-time-factor fields.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .cache import PublicCache, end_session, new_session, seal_public
from .decoder import DecodeConfig, decode, rtf, simulate_scores
from .errors import BuildError, ConfigurationError
from .fst import Fst, SymbolTable, write_symbols, write_text_fst
from .lmbuild import (ContactEntry, Lexicon, build_contact_fst,
                      build_lexicon_fst, build_symbol_tables, parse_classes,
                      parse_contacts_jsonl, parse_corpus, parse_lexicon,
                      train_bigram_root)
from .precompose import PrecomposeConfig, bfs_precompose, warmup_precompose
from .replace import ClassBinding

METHODS = ("none", "bfs", "warmup", "both")


def load_config(path: str | Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigurationError(f"cannot read config {path}: {err}") from None
    for key in ("data_dir", "classes", "lexicon", "corpus", "contacts",
                "users", "utterances"):
        if key not in cfg:
            raise ConfigurationError(f"config {path} lacks {key!r}")
    return cfg


@dataclass
class Build:
    """Everything the experiments need, in memory."""
    lexicon: Lexicon
    phone_syms: SymbolTable
    word_syms: SymbolTable
    t1: Fst
    root: Fst
    class_ids: frozenset[int]
    contacts: list[ContactEntry]
    users: dict[str, list[str]]
    contact_fsts: dict[str, Fst]
    utterances: list[dict] = field(default_factory=list)


def build_graphs(cfg: dict) -> Build:
    data = Path(cfg["data_dir"])

    def read(name: str) -> str:
        path = data / cfg[name]
        if not path.exists():
            raise BuildError(f"missing data file {path}")
        return path.read_text()

    lexicon = parse_lexicon(read("lexicon"), str(data / cfg["lexicon"]))
    class_names = cfg["classes"]
    if isinstance(class_names, str):
        class_names = parse_classes(read("classes"))
    phone_syms, word_syms = build_symbol_tables(lexicon, class_names)
    t1 = build_lexicon_fst(lexicon, phone_syms, word_syms,
                           sil_penalty=cfg.get("sil_penalty", math.log(2.0)))
    corpus = parse_corpus(read("corpus"))
    root = train_bigram_root(corpus, lexicon, class_names, word_syms,
                             backoff_penalty=cfg.get("backoff_penalty",
                                                     math.log(10.0)))
    contacts = parse_contacts_jsonl(read("contacts"),
                                    str(data / cfg["contacts"]))
    by_name = {c.name: c for c in contacts}
    users = json.loads(read("users"))
    contact_fsts: dict[str, Fst] = {}
    for user, names in users.items():
        missing = [n for n in names if n not in by_name]
        if missing:
            raise BuildError(f"user {user} references unknown contacts "
                             f"{missing}")
        contact_fsts[user] = build_contact_fst([by_name[n] for n in names],
                                               word_syms)
    utterances = [json.loads(line)
                  for line in read("utterances").splitlines() if line.strip()]
    class_ids = frozenset(word_syms.id_of(c) for c in class_names)
    return Build(lexicon, phone_syms, word_syms, t1, root, class_ids,
                 contacts, users, contact_fsts, utterances)


def write_build(build: Build, out_dir: str | Path) -> dict:
    """Write graph artifacts and return the count summary."""
    out = Path(out_dir)
    (out / "contacts").mkdir(parents=True, exist_ok=True)
    (out / "phones.syms").write_text(write_symbols(build.phone_syms))
    (out / "words.syms").write_text(write_symbols(build.word_syms))
    (out / "t1.fst.txt").write_text(write_text_fst(build.t1))
    (out / "root.fst.txt").write_text(write_text_fst(build.root))
    for user, fst in build.contact_fsts.items():
        (out / "contacts" / f"{user}.fst.txt").write_text(write_text_fst(fst))
    counts = {
        "phones": len(build.phone_syms) - 1,
        "words": len(build.word_syms) - 1,
        "t1_states": build.t1.num_states,
        "t1_arcs": build.t1.num_arcs,
        "root_states": build.root.num_states,
        "root_arcs": build.root.num_arcs,
        "contact_fsts": {user: {"states": fst.num_states,
                                "arcs": fst.num_arcs}
                         for user, fst in build.contact_fsts.items()},
    }
    (out / "counts.json").write_text(json.dumps(counts, indent=2) + "\n")
    return counts


def binding_for(build: Build, user: str) -> ClassBinding:
    if user not in build.contact_fsts:
        raise BuildError(f"unknown user {user!r}")
    (class_id,) = build.class_ids
    return ClassBinding(build.class_ids, {class_id: build.contact_fsts[user]})


def scores_for(build: Build, cfg: dict, utt: dict):
    ref = [build.phone_syms.id_of(p) for p in utt["phones"]]
    if any(p is None for p in ref):
        raise BuildError(f"utterance {utt['id']} uses unknown phones")
    seed = (utt["seed"] * 1000003 + cfg.get("seed", 0)) & 0x7FFFFFFF
    return simulate_scores(ref, len(build.phone_syms),
                           frames_per_label=cfg.get("frames_per_phone", 3),
                           margin=cfg.get("margin", 4.0),
                           noise=cfg.get("noise", 0.25),
                           seed=seed,
                           frame_seconds=cfg.get("frame_seconds", 0.01))


def decode_config(cfg: dict, beam: float | None = None,
                  max_active: int | None = None) -> DecodeConfig:
    return DecodeConfig(
        beam=cfg.get("beam", 10.0) if beam is None else beam,
        max_active=cfg.get("max_active", 2000) if max_active is None else max_active)


def precompose_cache(build: Build, cfg: dict, method: str,
                     bfs_depth: int | None = None) -> tuple[PublicCache, dict]:
    """Produce a sealed shared cache via the requested method."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; "
                                 f"expected one of {METHODS}")
    depth = cfg.get("bfs_depth", 5) if bfs_depth is None else bfs_depth
    pre_cfg = PrecomposeConfig(
        classes=build.class_ids,
        temp_label=build.word_syms.id_of(cfg.get("temp_label", "<temp>")),
        bfs_depth=depth,
        state_budget=cfg.get("state_budget", 200000))
    cache = PublicCache(build.t1, build.root, build.class_ids)
    stats = {"method": method, "bfs_depth": depth}
    if method in ("bfs", "both"):
        bfs_precompose(build.t1, build.root, pre_cfg, cache=cache)
        stats["after_bfs"] = cache.num_expanded
    if method in ("warmup", "both"):
        count = cfg.get("warmup_count", 60)
        score_list = [scores_for(build, cfg, utt)
                      for utt in build.utterances[:count]]
        warmup_precompose(build.t1, build.root, pre_cfg, score_list,
                          decode_config(cfg), cache=cache)
        stats["after_warmup"] = cache.num_expanded
    seal_public(cache)
    stats["public_states"] = cache.num_public
    stats["public_expanded"] = cache.num_expanded
    stats["bytes_public"] = cache.bytes_estimate()
    return cache, stats


def levenshtein(ref: list[str], hyp: list[str]) -> int:
    if not ref:
        return len(hyp)
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i]
        for j, h in enumerate(hyp, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (r != h)))
        prev = cur
    return prev[-1]


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(ordered)))
    return ordered[rank - 1]


def _chunk(seq: list, size: int) -> list[list]:
    return [seq[i:i + size] for i in range(0, len(seq), size)]


@dataclass
class SessionResult:
    user: str
    turns: list[dict]
    bytes_private: int


def run_session(cache: PublicCache, build: Build, cfg: dict,
                user: str, utts: list[dict],
                dec_cfg: DecodeConfig) -> SessionResult:
    session = new_session(cache, binding_for(build, user))
    turns = []
    for turn_index, utt in enumerate(utts, start=1):
        scores = scores_for(build, cfg, utt)
        hyp = decode(scores, session, dec_cfg)
        ref = utt["words"]
        if hyp is None:
            turns.append({"id": utt["id"], "turn": turn_index, "failed": True,
                          "otf": 0, "public": 0, "private": 0,
                          "frames": scores.num_frames, "cost": None,
                          "rtf": 0.0, "errors": len(ref), "ref_len": len(ref),
                          "hyp_words": []})
            continue
        m = hyp.metrics
        turns.append({
            "id": utt["id"], "turn": turn_index, "failed": False,
            "otf": m.otf_expansion, "public": m.public_hit,
            "private": m.private_hit, "frames": hyp.frames,
            "cost": hyp.cost, "rtf": rtf(hyp),
            "errors": levenshtein(ref, hyp.words), "ref_len": len(ref),
            "hyp_words": hyp.words,
        })
    final = end_session(session)
    return SessionResult(user=user, turns=turns,
                         bytes_private=final.bytes_private)


def run_bench(cfg: dict, method: str = "none", session_length: int = 5,
              threads: int = 1, bfs_depth: int | None = None,
              build: Build | None = None,
              cache: PublicCache | None = None) -> dict:
    if build is None:
        build = build_graphs(cfg)
    if cache is None:
        cache, pre_stats = precompose_cache(build, cfg, method, bfs_depth)
    else:
        pre_stats = {"method": method, "public_states": cache.num_public,
                     "public_expanded": cache.num_expanded,
                     "bytes_public": cache.bytes_estimate()}
    dec_cfg = decode_config(cfg)

    by_user: dict[str, list[dict]] = {}
    for utt in build.utterances:
        by_user.setdefault(utt["user"], []).append(utt)
    jobs = [(user, chunk)
            for user in sorted(by_user)
            for chunk in _chunk(by_user[user], session_length)]

    if threads <= 1:
        results = [run_session(cache, build, cfg, user, chunk, dec_cfg)
                   for user, chunk in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda job: run_session(cache, build, cfg, job[0], job[1],
                                        dec_cfg), jobs))

    all_turns = [t for r in results for t in r.turns]
    per_turn: dict[str, dict] = {}
    for t in all_turns:
        slot = per_turn.setdefault(str(t["turn"]),
                                   {"count": 0, "otf": 0, "public": 0,
                                    "private": 0})
        slot["count"] += 1
        slot["otf"] += t["otf"]
        slot["public"] += t["public"]
        slot["private"] += t["private"]
    for slot in per_turn.values():
        n = slot["count"]
        slot["mean_otf"] = slot["otf"] / n
        slot["mean_public"] = slot["public"] / n
        slot["mean_private"] = slot["private"] / n

    total_errors = sum(t["errors"] for t in all_turns)
    total_ref = sum(t["ref_len"] for t in all_turns)
    rtfs = [t["rtf"] for t in all_turns if not t["failed"]]
    bytes_private_total = sum(r.bytes_private for r in results)
    report = {
        "method": method,
        "session_length": session_length,
        "threads": threads,
        "cache": pre_stats,
        "totals": {
            "utterances": len(all_turns),
            "sessions": len(results),
            "failed": sum(1 for t in all_turns if t["failed"]),
            "frames": sum(t["frames"] for t in all_turns),
            "otf_expansions": sum(t["otf"] for t in all_turns),
            "public_hits": sum(t["public"] for t in all_turns),
            "private_hits": sum(t["private"] for t in all_turns),
            "errors": total_errors,
            "ref_words": total_ref,
            "wer": total_errors / total_ref if total_ref else 0.0,
        },
        "per_turn": {k: per_turn[k] for k in sorted(per_turn)},
        "rtf": {"p50": _percentile(rtfs, 50), "p95": _percentile(rtfs, 95)},
        "bytes_public": cache.bytes_estimate(),
        "bytes_private_total": bytes_private_total,
        "marginal_bytes_per_session":
            bytes_private_total / len(results) if results else 0.0,
        "hypotheses": {t["id"]: t["hyp_words"] for t in all_turns},
        "sessions": [{"user": r.user, "bytes_private": r.bytes_private,
                      "turns": r.turns} for r in results],
    }
    return report


def score_report(report: dict, build: Build) -> dict:
    """Recompute WER for a report's hypotheses against the references."""
    refs = {utt["id"]: utt["words"] for utt in build.utterances}
    errors = 0
    total = 0
    missing = []
    for utt_id, hyp in report.get("hypotheses", {}).items():
        if utt_id not in refs:
            missing.append(utt_id)
            continue
        errors += levenshtein(refs[utt_id], hyp)
        total += len(refs[utt_id])
    return {"errors": errors, "ref_words": total,
            "wer": errors / total if total else 0.0,
            "unknown_utterances": missing}


def graph_stats(build: Build, cfg: dict) -> dict:
    (class_id,) = build.class_ids
    root_class_arcs = sum(
        1 for state in build.root.states()
        for arc in build.root.arcs_of(state) if arc.olabel == class_id)
    return {
        "phones": len(build.phone_syms) - 1,
        "words": len(build.word_syms) - 1,
        "t1": {"states": build.t1.num_states, "arcs": build.t1.num_arcs},
        "root": {"states": build.root.num_states,
                 "arcs": build.root.num_arcs,
                 "class_arcs": root_class_arcs},
        "users": {user: {"contacts": len(names),
                         "fst_states": build.contact_fsts[user].num_states,
                         "fst_arcs": build.contact_fsts[user].num_arcs}
                  for user, names in sorted(build.users.items())},
        "utterances": len(build.utterances),
    }
