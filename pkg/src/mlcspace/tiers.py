"""Tier membership tables and tier filtering of the Large grammar.

The registry lives in ``data/tiers.csv``: one row per algorithm with its
level (MLC or SLC), table row number, key, acronym, name, type, one Y/N
column per tier and the declared hyper-parameter count.  ``key`` is the
identifier used throughout the package; it equals the acronym except for
Random Tree, whose acronym ``RT`` collides with the MLC method Ranking and
Threshold.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .grammar import (
    Grammar, GrammarError, Group, NonTerminal, OptionalGroup, Production,
    Terminal, parse_grammar, walk_symbols,
)

__all__ = [
    "EmptyTier", "MLC_NONTERMINALS", "MLC_TOKENS", "SLC_NONTERMINALS",
    "SLC_TOKENS", "Tier", "TierRegistry", "AlgorithmRecord", "load_grammar",
    "marker_of", "registry", "restrict", "restrict_to_tier", "tier_membership",
]


class Tier(str, enum.Enum):
    SMALL = "Small"
    MEDIUM = "Medium"
    LARGE = "Large"

    @classmethod
    def parse(cls, value) -> "Tier":
        if isinstance(value, Tier):
            return value
        for t in cls:
            if t.value.lower() == str(value).lower():
                return t
        raise ValueError(f"unknown tier {value!r}")


class EmptyTier(GrammarError):
    pass


# Grammar elements that mark the selection of an algorithm.
MLC_TOKENS = {
    "BR": "BR", "CC": "CC", "LC": "LP", "BRq": "BRq", "CCq": "CCq",
    "FW": "FW", "RT": "RT", "PCC": "PCC", "MCC": "MCC", "CDN": "CDN",
    "BCC": "BCC", "PMCC": "PMCC", "PS": "PS", "PSt": "PSt", "RAkEL": "RAkEL",
    "RAkELd": "RAkELd", "SM": "SM", "BaggingML": "BaggingML",
    "BaggingMLDup": "BaggingMLDup", "EnsembleML": "EnsembleML", "EM": "EM",
    "CM": "CM",
}
MLC_NONTERMINALS = {"CT": "CT", "CDT": "CDT", "ML-BPNN": "ML-BPNN", "RSML": "RSML"}
SLC_TOKENS = {
    "DecisionStump": "DS", "RandomForest": "RF", "OneR": "OneR",
    "ZeroR": "ZeroR", "LogisticRegression": "LR", "NaiveBayes": "NB",
    "NaiveBayesMultinomial": "NBM", "SimpleLogistic": "SL",
    "RandomCommittee": "RC", "ASC": "ASC",
}
SLC_NONTERMINALS = {
    "C4.5": "C4.5", "RandomTree": "RandomTree", "REPTree": "REPTree",
    "DT": "DT", "JRip": "JRip", "PART": "PART", "KNN": "KNN", "K*": "K*",
    "VotedPerceptron": "VP", "MultiLayerPerc": "MLP",
    "StocGradDescent": "SGD", "SeqMinOptimization": "SMO",
    "BayesianNetworkClassifiers": "BNC", "LogisticModelTrees": "LMT",
    "SimpleLogistic": "SL", "LWL": "LWL", "AdaM1": "AdaM1",
    "Bagging": "Bagging", "RandomSubspace": "RSS",
}


def marker_of(sym) -> tuple[str, str] | None:
    """Return ``(level, algorithm id)`` if ``sym`` marks an algorithm."""
    if isinstance(sym, Terminal):
        if sym.text in MLC_TOKENS:
            return "MLC", MLC_TOKENS[sym.text]
        if sym.text in SLC_TOKENS:
            return "SLC", SLC_TOKENS[sym.text]
    elif isinstance(sym, NonTerminal):
        if sym.name in MLC_NONTERMINALS:
            return "MLC", MLC_NONTERMINALS[sym.name]
        if sym.name in SLC_NONTERMINALS:
            return "SLC", SLC_NONTERMINALS[sym.name]
    return None


@dataclass(frozen=True)
class AlgorithmRecord:
    level: str
    row: int
    key: str
    acronym: str
    name: str
    type: str
    tiers: frozenset
    hp: int


@dataclass(frozen=True)
class TierRegistry:
    records: tuple

    def by_key(self, level: str | None = None) -> dict:
        return {r.key: r for r in self.records if level is None or r.level == level}

    @property
    def mlc_membership(self) -> dict:
        return {r.key: set(r.tiers) for r in self.records if r.level == "MLC"}

    @property
    def slc_membership(self) -> dict:
        return {r.key: set(r.tiers) for r in self.records if r.level == "SLC"}

    @property
    def hp_counts(self) -> dict:
        return {r.key: r.hp for r in self.records}


@lru_cache(maxsize=None)
def registry() -> TierRegistry:
    text = resources.files("mlcspace").joinpath("data/tiers.csv").read_text("utf-8")
    records = []
    for row in csv.DictReader(io.StringIO(text)):
        tiers = frozenset(t for t in Tier if row[t.value.lower()] == "Y")
        records.append(AlgorithmRecord(
            row["level"], int(row["row"]), row["key"], row["acronym"],
            row["name"], row["type"], tiers, int(row["hp"]),
        ))
    return TierRegistry(tuple(records))


def tier_membership(t: Tier | str) -> tuple[frozenset, frozenset]:
    """MLC and SLC algorithm ids that belong to tier ``t``."""
    t = Tier.parse(t)
    reg = registry()
    mlc = frozenset(r.key for r in reg.records if r.level == "MLC" and t in r.tiers)
    slc = frozenset(r.key for r in reg.records if r.level == "SLC" and t in r.tiers)
    return mlc, slc


# --------------------------------------------------------------------------
# filtering

def restrict(g: Grammar, mlc_ids, slc_ids, source_tier: str = "Custom") -> Grammar:
    """Keep only the parts of ``g`` that can derive the given algorithms.

    A marker outside the allowed sets cannot be derived.  An alternative
    survives only if each of its mandatory symbols can still be derived;
    optional groups lose their dead alternatives (and vanish if none is
    left).  Productions that end up empty or unreachable are dropped.
    """
    allowed = {("MLC", a) for a in mlc_ids} | {("SLC", a) for a in slc_ids}
    alive: dict[str, bool] = {p.name: False for p in g.productions}

    def sym_ok(sym) -> bool:
        m = marker_of(sym)
        if m is not None and m not in allowed:
            return False
        if isinstance(sym, NonTerminal):
            return alive.get(sym.name, False)
        if isinstance(sym, Group):
            return any(alt_ok(a) for a in sym.alternatives)
        return True  # terminals, ranges and optionals

    def alt_ok(alt) -> bool:
        return all(sym_ok(s) for s in alt)

    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if not alive[p.name] and any(alt_ok(a) for a in p.alternatives):
                alive[p.name] = changed = True

    if not alive[g.start_symbol]:
        raise EmptyTier(f"no derivation of <{g.start_symbol}> survives the filter")

    def prune_alts(alts) -> tuple:
        return tuple(prune_alt(a) for a in alts if alt_ok(a))

    def prune_alt(alt) -> tuple:
        out = []
        for sym in alt:
            if isinstance(sym, Group):
                out.append(Group(prune_alts(sym.alternatives)))
            elif isinstance(sym, OptionalGroup):
                kept = prune_alts(sym.alternatives)
                if kept:
                    out.append(OptionalGroup(kept))
            else:
                out.append(sym)
        return tuple(out)

    pruned = {
        p.name: Production(p.name, prune_alts(p.alternatives), p.comment)
        for p in g.productions if alive[p.name]
    }
    reachable = _reachable(pruned, g.start_symbol)
    return Grammar(
        tuple(pruned[p.name] for p in g.productions if p.name in reachable),
        source_tier,
    )


def _reachable(productions: dict, start: str) -> set:
    seen, stack = set(), [start]
    while stack:
        name = stack.pop()
        if name in seen or name not in productions:
            continue
        seen.add(name)
        for sym in walk_symbols(productions[name].alternatives):
            if isinstance(sym, NonTerminal):
                stack.append(sym.name)
    return seen


def restrict_to_tier(g: Grammar, t: Tier | str) -> Grammar:
    t = Tier.parse(t)
    mlc, slc = tier_membership(t)
    return restrict(g, mlc, slc, t.value)


@lru_cache(maxsize=None)
def _large() -> Grammar:
    text = resources.files("mlcspace").joinpath("data/large.bnf").read_text("utf-8")
    return parse_grammar(text, Tier.LARGE.value)


@lru_cache(maxsize=None)
def load_grammar(t: Tier | str = Tier.LARGE) -> Grammar:
    """Bundled grammar for tier ``t`` (parsed once, then cached)."""
    t = Tier.parse(t)
    if t is Tier.LARGE:
        return _large()
    return restrict_to_tier(_large(), t)
