"""Acceptance criteria 1 to 10.

Each criterion records one PASS/FAIL line; the lines are printed in the
terminal summary (see conftest.py) and when this file is run as a script.
"""

import math
import time
from functools import lru_cache
from importlib import resources

import pytest
from scipy.stats import chisquare

from mlcspace.catalog import spec_map
from mlcspace.codec import from_json, to_json, to_meka_command
from mlcspace.config import lower
from mlcspace.constraints import CODES, validate
from mlcspace.context import DatasetContext, round_half_up
from mlcspace.evolution import SearchParams, random_search, run_search, surrogate_evaluator
from mlcspace.grammar import (
    RealRange, eval_bound, grammar_stats, int_bounds, parse_grammar, print_grammar,
)
from mlcspace.sampling import SamplingMode, empirical_frequencies, headline, sample_trees
from mlcspace.tiers import Tier, load_grammar, tier_membership

RESULTS: dict[int, str] = {}
CTX = DatasetContext(6, 20)

MLC_SMALL = {"ML-BPNN", "BR", "CC", "LP", "RAkEL"}
MLC_MEDIUM = MLC_SMALL | {"BCC", "BRq", "CCq", "FW", "MCC", "PCC", "PS", "PSt", "RAkELd", "RT"}
MLC_LARGE = MLC_MEDIUM | {"CT", "CDN", "CDT", "PMCC", "BaggingML", "BaggingMLDup", "CM",
                          "EnsembleML", "EM", "RSML", "SM"}
SLC_SMALL = {"JRip", "KNN", "LR", "NB", "RF"}
SLC_MEDIUM = SLC_SMALL | {"BNC", "C4.5", "DT", "K*", "LMT", "MLP", "PART", "REPTree", "SGD", "SMO"}
SLC_LARGE = SLC_MEDIUM | {"DS", "NBM", "OneR", "RandomTree", "SL", "VP", "ZeroR", "ASC",
                          "AdaM1", "Bagging", "LWL", "RC", "RSS"}

# bracketed command-line flags of 20 algorithms, transcribed independently
FLAG_AUDIT = {
    "RAkEL": {"pv": "-P", "sv": "-N", "les": "-k", "sre": "-M"},
    "PMCC": {"ii": "-Iy", "chi": "-Is", "ps": "-M", "pof": "-P"},
    "CT": {"w": "-H", "dp": "-X", "ii": "-Iy", "chi": "-Is", "d": "-L", "pof": "-P"},
    "CDT": {"w": "-H", "dp": "-X", "d": "-L", "i": "-I", "ci": "-Ic"},
    "BCC": {"dp": "-X"},
    "ML-BPNN": {"ne": "-E", "nhu": "-H", "lr": "-r", "m": "-m"},
    "RSML": {"bsp": "-P", "i": "-I", "ap": "-A"},
    "EnsembleML": {"bsp": "-P", "i": "-I"},
    "C4.5": {"cf": "-C", "mno": "-M", "ct": "-O", "u": "-U", "bs": "-B", "umc": "-J",
             "ul": "-A", "sr": "-S"},
    "LMT": {"mno": "-M", "cn": "-B", "sor": "-R", "fr": "-C", "eop": "-P", "wtb": "-W",
            "uaic": "-A"},
    "RF": {"nt": "-I", "nf": "-K", "md": "-depth"},
    "REPTree": {"mw": "-M", "md": "-L", "up": "-P"},
    "JRip": {"mtw": "-N", "cer": "-E", "up": "-P", "o": "-O"},
    "PART": {"mno": "-M", "bs": "-B", "rep": "-R", "nr": "-N"},
    "K*": {"gb": "-B", "eab": "-E", "mm": "-M"},
    "VP": {"i": "-I", "mk": "-M", "e": "-E"},
    "MLP": {"lr": "-L", "m": "-M", "nhn": "-H", "n2b": "-B", "r": "-R", "d": "-D"},
    "SGD": {"lf": "-F", "lr": "-L", "r": "-R", "nn": "-N", "nrmv": "-M"},
    "AdaM1": {"wt": "-P", "ni": "-I", "ur": "-Q"},
    "Bagging": {"bsp": "-P", "ni": "-I", "coob": "-O"},
}


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


@lru_cache(maxsize=None)
def marginal_run():
    start = time.perf_counter()
    ft = empirical_frequencies(load_grammar("Large"), CTX, SamplingMode.UNIFORM_MARGINAL,
                               n=100_000, seed=2024)
    return ft, time.perf_counter() - start


def test_criterion_01_grammar_fidelity():
    start = time.perf_counter()
    text = resources.files("mlcspace").joinpath("data/large.bnf").read_text("utf-8")
    g = parse_grammar(text, "Large")
    s = grammar_stats(g)
    printed = print_grammar(g)
    fixpoint = print_grammar(parse_grammar(printed, "Large")) == printed
    elapsed = time.perf_counter() - start
    report = resources.files("mlcspace").joinpath("data/TRANSCRIPTION.md").read_text("utf-8")
    reported = all(str(v) in report for v in (s.rule_count, s.nonterminal_count,
                                              s.terminal_count, 125, 124, 213))
    ok = s.unresolved == () and fixpoint and reported and elapsed < 1.0
    assert record(1, ok, f"rules={s.rule_count} nonterminals={s.nonterminal_count} "
                         f"terminals={s.terminal_count} (published 125/124/213, delta in "
                         f"TRANSCRIPTION.md) fixpoint={fixpoint} {elapsed:.2f}s")


def test_criterion_02_uniform_mlc_marginal():
    ft, elapsed = marginal_run()
    freqs = [ft.mlc.get(a, 0.0) for a in sorted(MLC_LARGE)]
    worst = max(abs(f - 1 / 26) for f in freqs)
    p = chisquare([round(f * ft.n) for f in freqs]).pvalue
    ok = set(ft.mlc) == MLC_LARGE and worst <= 0.005 and p > 0.01 and elapsed < 30
    assert record(2, ok, f"26 MLC headlines, max |f - 1/26| = {worst:.5f}, "
                         f"chi-square p = {p:.3f}, {elapsed:.1f}s")


def test_criterion_03_uniform_slc_marginal():
    ft, _ = marginal_run()
    freqs = [ft.slc.get(a, 0.0) for a in sorted(SLC_LARGE)]
    worst = max(abs(f - 1 / 28) for f in freqs)
    p = chisquare([round(f * ft.n_slc) for f in freqs]).pvalue
    ok = set(ft.slc) == SLC_LARGE and worst <= 0.005
    assert record(3, ok, f"28 SLC headlines over {ft.n_slc} chains, "
                         f"max |f - 1/28| = {worst:.5f}, chi-square p = {p:.3f}")


def test_criterion_04_marker_probabilities():
    g = load_grammar("Large")
    ok, parts = True, []
    for mode in SamplingMode:
        ft = empirical_frequencies(g, CTX, mode, n=1_000, seed=77, n_conditional=50_000)
        lwl, n_lwl = ft.markers["P(wk=0 | LWL)"]
        mcc, n_mcc = ft.markers["P(chi=0 | MCC)"]
        ok &= abs(lwl - 0.60) <= 0.015 and abs(mcc - 0.50) <= 0.015
        ok &= min(n_lwl, n_mcc) >= 50_000
        parts.append(f"{mode.value}: LWL {lwl:.4f}, MCC {mcc:.4f}")
    assert record(4, ok, "; ".join(parts) + " (n=50000 each)")


def test_criterion_05_sampler_validator_coherence():
    start = time.perf_counter()
    hard, warned, total = 0, 0, 0
    for tier in Tier:
        g = load_grammar(tier)
        for mode in SamplingMode:
            for t in sample_trees(g, CTX, mode, seed=5, n=10_000):
                r = validate(lower(t), CTX)
                hard += len(r.violations)
                warned += bool(r.warnings)
                total += 1
    elapsed = time.perf_counter() - start
    ok = hard == 0 and total == 60_000 and elapsed < 60
    assert record(5, ok, f"{total} samples, {hard} hard violations, "
                         f"{warned} with warnings, {elapsed:.1f}s")


def test_criterion_06_constraint_catalog():
    # the fixtures themselves live in test_constraints.py
    from test_constraints import FIXTURES, W1_CONTEXTS
    failures = []
    for code, (good, bad, ctx) in FIXTURES.items():
        good_ctx, bad_ctx = (W1_CONTEXTS if code == "W1" else (ctx, ctx))
        if code in validate(good, good_ctx).codes() or code not in validate(bad, bad_ctx).codes():
            failures.append(code)
    h2 = FIXTURES["H2"][1].core.params["d"] == 6 and FIXTURES["H2"][2].L == 16
    h5 = FIXTURES["H5"][1].core.slc.meta.params == {"coob": True, "bsp": 90}
    h8 = (FIXTURES["H8"][1].meta.id, FIXTURES["H8"][1].core.id) == ("BaggingML", "BCC")
    h9 = (FIXTURES["H9"][1].meta.id, FIXTURES["H9"][1].core.id) == ("EM", "PMCC")
    ok = not failures and set(FIXTURES) == set(CODES) and h2 and h5 and h8 and h9
    assert record(6, ok, f"{len(CODES)} codes with passing and failing fixtures"
                         + (f", failing: {failures}" if failures else ""))


def test_criterion_07_context_bounds():
    g = load_grammar("Large")
    les = g["les"].alternatives[0][0]
    sre = g["sre"].alternatives[0][0]
    d = g["d"].alternatives[0][0]
    nhu = g["nhu_bpnn"].alternatives[0][0]
    assert isinstance(nhu, RealRange)
    mismatches = []
    for L in (2, 4, 10, 16, 60):
        for A in (10, 50):
            ctx = DatasetContext(L, A)
            want = {
                "les": (1, max(1, L // 2)),
                "sre": (2, min(2 * L, 100)),
                "d": (1, math.isqrt(L) + 1),
                "nhu": (round_half_up(0.2 * A), A),
            }
            scale = eval_bound(nhu.scale, ctx)
            got = {
                "les": int_bounds(les, ctx),
                "sre": int_bounds(sre, ctx),
                "d": int_bounds(d, ctx),
                "nhu": (round_half_up(eval_bound(nhu.lo, ctx) * scale),
                        round_half_up(eval_bound(nhu.hi, ctx) * scale)),
            }
            catalog = {
                "les": spec_map("RAkEL")["les"].bounds(ctx),
                "sre": spec_map("RAkEL")["sre"].bounds(ctx),
                "d": spec_map("CT")["d"].bounds(ctx),
                "nhu": spec_map("ML-BPNN")["nhu"].bounds(ctx),
            }
            for k in want:
                if got[k] != want[k] or catalog[k] != want[k]:
                    mismatches.append((L, A, k, want[k], got[k], catalog[k]))
    assert record(7, not mismatches, "10 contexts x 4 bounds, grammar and catalog agree"
                  if not mismatches else f"mismatches: {mismatches}")


def test_criterion_08_tier_membership():
    expected = {Tier.SMALL: (MLC_SMALL, SLC_SMALL), Tier.MEDIUM: (MLC_MEDIUM, SLC_MEDIUM),
                Tier.LARGE: (MLC_LARGE, SLC_LARGE)}
    tables = all(tier_membership(t) == expected[t] for t in Tier)
    escaped = 0
    for t in Tier:
        g = load_grammar(t)
        mlc, slc = expected[t]
        for tree in sample_trees(g, CTX, SamplingMode.NAIVE, seed=8, n=10_000):
            m, s = headline(tree)
            c = lower(tree)
            ids = {m, c.core.id}
            if c.core.slc is not None:
                ids.add(c.core.slc.base.id)
                if c.core.slc.meta is not None:
                    ids.add(c.core.slc.meta.id)
                if c.core.slc.base.asc is not None:
                    ids.add("ASC")
            if c.meta is not None:
                ids.add(c.meta.id)
            escaped += not ids <= mlc | slc or (s is not None and s not in slc)
    sizes = "/".join(f"{len(a)}+{len(b)}" for a, b in expected.values())
    assert record(8, tables and escaped == 0,
                  f"membership {sizes} matches tables={tables}, out-of-tier samples={escaped}")


def test_criterion_09_codec():
    failures = 0
    for t in Tier:
        g = load_grammar(t)
        for tree in sample_trees(g, CTX, SamplingMode.UNIFORM_MARGINAL, seed=9, n=1_000):
            c = lower(tree)
            text = to_json(c)
            failures += from_json(text) != c or to_json(from_json(text)) != text

    def emit():
        trees = sample_trees(load_grammar("Large"), CTX, seed=10, n=500)
        return [to_meka_command(lower(t), ctx=CTX) for t in trees]

    stable = emit() == emit()
    flag_errors = [(a, k) for a, flags in FLAG_AUDIT.items()
                   for k, f in flags.items() if spec_map(a)[k].flag != f]
    ok = failures == 0 and stable and not flag_errors and len(FLAG_AUDIT) == 20
    assert record(9, ok, f"3000 JSON round trips ({failures} failures), stable commands={stable}, "
                         f"flag audit {len(FLAG_AUDIT)} algorithms ({len(flag_errors)} mismatches)")


def test_criterion_10_search():
    start = time.perf_counter()
    g = load_grammar("Large")
    wins, monotone = 0, True
    for seed in range(20):
        evaluator = surrogate_evaluator(1000 + seed)
        ggp = run_search(g, CTX, evaluator, 2_000, SearchParams(), seed=seed)
        rnd = random_search(g, CTX, evaluator, 2_000, seed=seed)
        bests = [h.best for h in ggp.history]
        monotone &= bests == sorted(bests)
        wins += ggp.best_fitness >= rnd.best_fitness
    elapsed = time.perf_counter() - start
    ok = wins >= 14 and monotone and elapsed < 120
    assert record(10, ok, f"GGP >= random in {wins}/20 pairs, elitism monotone={monotone}, "
                          f"{elapsed:.1f}s")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
