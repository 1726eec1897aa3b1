"""Validation of configurations against the dependency rules of the space.

Hard violations (codes H1 to H14) make a configuration invalid; warnings
(W1 to W4) flag combinations that are legal but likely to be slow or that
deviate from recommended ranges.  Codes are stable; see ``CODES``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .catalog import ALGORITHMS, META_MLC, META_SLC, level_of, spec_map
from .config import Configuration, Threshold
from .context import DatasetContext

__all__ = ["CODES", "Finding", "ValidationReport", "hard_ok", "validate"]

# code -> (summary, source of the rule)
CODES = {
    "H1": ("PMCC population size must be smaller than its chain iterations", "PMCC dependencies"),
    "H2": ("trellis width 0 forces density 1; width -1 bounds density by floor(sqrt(L)) + 1",
           "CT and CDT dependencies"),
    "H3": ("CDN/CDT total iterations must exceed collection iterations", "CDN dependencies"),
    "H4": ("NaiveBayes kernel estimator and supervised discretization are exclusive",
           "NB dependencies"),
    "H5": ("Bagging with out-of-bag error requires a bag size of 100", "Bagging dependencies"),
    "H6": ("LWL and AdaM1 need a base classifier that handles weighted instances",
           "LWL and AdaM1 base classifiers"),
    "H7": ("RandomCommittee needs a randomizable base classifier", "RC base classifiers"),
    "H8": ("BCC cannot be wrapped by BaggingML, BaggingMLDup or EnsembleML",
           "meta-MLC compatibility"),
    "H9": ("PMCC cannot be wrapped by EM or CM", "meta-MLC compatibility"),
    "H10": ("RandomTree back-fitting folds cannot be 1", "RandomTree dependencies"),
    "H11": ("unpruned C4.5 omits the confidence factor and subtree raising",
            "C4.5 dependencies"),
    "H12": ("PART folds are set exactly when reduced-error pruning is on", "PART dependencies"),
    "H13": ("structure, identifiers and parameter values must lie in their domains",
            "parameter intervals"),
    "H14": ("ASC cannot be wrapped by LWL, AdaM1 or RC", "grammar structure of the SLC chain"),
    "W1": ("PCC is recommended only for fewer than 15 labels", "PCC scalability"),
    "W2": ("this MLC algorithm scales poorly under a meta-MLC wrapper", "meta-MLC scalability"),
    "W3": ("collapse tree is set on an unpruned C4.5 tree", "C4.5 grammar and text divergence"),
    "W4": ("EnsembleML bag size is outside the recommended [52, 72]", "EnsembleML bag size"),
}

WEIGHT_INCAPABLE = frozenset({"LMT", "OneR", "K*", "SGD", "VP"})
RANDOMIZABLE = frozenset({"RF", "RandomTree", "REPTree", "SGD", "MLP"})
NO_BCC = frozenset({"BaggingML", "BaggingMLDup", "EnsembleML"})
NO_PMCC = frozenset({"EM", "CM"})
POOR_SCALING = frozenset({"MCC", "PCC", "PMCC", "CDN", "CDT", "RAkEL", "RAkELd"})
ASC_METHODS = ("BestFirst", "GreedyStepwise")


@dataclass(frozen=True, order=True)
class Finding:
    code: str
    message: str
    source: str

    @property
    def rank(self) -> tuple:
        return self.code[0], int(self.code[1:]), self.message


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple
    warnings: tuple

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "Valid" if self.valid else "Invalid"

    def codes(self) -> list[str]:
        return [f.code for f in self.violations + self.warnings]

    def to_dict(self) -> dict:
        def rows(fs):
            return [{"code": f.code, "message": f.message, "source": f.source} for f in fs]
        return {"verdict": self.verdict, "violations": rows(self.violations),
                "warnings": rows(self.warnings)}


class _Collector:
    def __init__(self):
        self.found = []

    def add(self, code, detail=""):
        summary, source = CODES[code]
        self.found.append(Finding(code, f"{summary}: {detail}" if detail else summary, source))


def validate(c: Configuration, ctx: DatasetContext | None) -> ValidationReport:
    """Check ``c`` under ``ctx``.

    With ``ctx`` set to None the checks that depend on the dataset (bounds
    involving L or the attribute count, and the density limit) are skipped.
    """
    out = _Collector()
    _structure(c, out)
    _rules(c, ctx, out)
    _domains(c, ctx, out)
    found = sorted(set(out.found), key=lambda f: f.rank)
    return ValidationReport(
        tuple(f for f in found if f.code.startswith("H")),
        tuple(f for f in found if f.code.startswith("W")),
    )


def hard_ok(c: Configuration, ctx: DatasetContext | None) -> bool:
    return validate(c, ctx).valid


def _level(alg):
    try:
        return level_of(alg)
    except KeyError:
        return None


def _structure(c: Configuration, out: _Collector):
    th = c.threshold
    if not isinstance(th, Threshold):
        out.add("H13", f"threshold {th!r} is not a Threshold")
    elif th.kind == "real" and not (
            isinstance(th.value, (int, float)) and not isinstance(th.value, bool)
            and math.isfinite(th.value) and 0.0 < th.value < 1.0):
        out.add("H13", f"threshold {th.value!r} outside (0, 1)")
    if c.meta is not None and c.meta.id not in META_MLC:
        out.add("H13", f"{c.meta.id!r} is not a meta-MLC algorithm")
    core = c.core
    if _level(core.id) != "MLC" or core.id in META_MLC:
        out.add("H13", f"{core.id!r} is not a core MLC algorithm")
        return
    if core.is_adaptation:
        if core.slc is not None:
            out.add("H13", "ML-BPNN takes no SLC chain")
        return
    if core.slc is None:
        out.add("H13", f"{core.id} needs an SLC chain")
        return
    chain = core.slc
    if chain.meta is not None and chain.meta.id not in META_SLC:
        out.add("H13", f"{chain.meta.id!r} is not a meta-SLC algorithm")
    base = chain.base
    if _level(base.id) != "SLC" or base.id in META_SLC or base.id == "ASC":
        out.add("H13", f"{base.id!r} is not a base SLC algorithm")
    if base.asc is not None and base.asc not in ASC_METHODS:
        out.add("H13", f"ASC search method {base.asc!r}")


def _rules(c: Configuration, ctx, out: _Collector):
    core = c.core
    p = core.params
    meta = c.meta.id if c.meta is not None else None
    if core.id == "PMCC" and _num(p.get("ps")) and _num(p.get("chi")) and not p["ps"] < p["chi"]:
        out.add("H1", f"ps={p['ps']} chi={p['chi']}")
    if core.id in ("CT", "CDT"):
        w, d = p.get("w"), p.get("d")
        if w == 0 and d is not None and d != 1:
            out.add("H2", f"w=0 with d={d}")
        elif w == -1 and _num(d):
            hi = math.floor(math.sqrt(ctx.L)) + 1 if ctx is not None else math.inf
            if not (isinstance(d, int) and 1 <= d <= hi):
                out.add("H2", f"d={d} outside [1, {hi}]")
    if core.id in ("CDN", "CDT") and _num(p.get("i")) and _num(p.get("ci")) and not p["i"] > p["ci"]:
        out.add("H3", f"i={p['i']} ci={p['ci']}")
    if meta in NO_BCC and core.id == "BCC":
        out.add("H8", f"BCC under {meta}")
    if meta in NO_PMCC and core.id == "PMCC":
        out.add("H9", f"PMCC under {meta}")
    if core.id == "PCC" and ctx is not None and ctx.L >= 15:
        out.add("W1", f"L={ctx.L}")
    if meta is not None and core.id in POOR_SCALING:
        out.add("W2", f"{core.id} under {meta}")
    if meta == "EnsembleML" and _num(c.meta.params.get("bsp")) and not 52 <= c.meta.params["bsp"] <= 72:
        out.add("W4", f"bsp={c.meta.params['bsp']}")

    chain = core.slc
    if chain is None:
        return
    base, bp = chain.base.id, chain.base.params
    smeta = chain.meta.id if chain.meta is not None else None
    if base == "NB" and bp.get("uke") and bp.get("usd"):
        out.add("H4")
    if smeta == "Bagging" and chain.meta.params.get("coob") and chain.meta.params.get("bsp", 100) != 100:
        out.add("H5", f"bsp={chain.meta.params['bsp']}")
    if smeta in ("LWL", "AdaM1") and base in WEIGHT_INCAPABLE:
        out.add("H6", f"{base} under {smeta}")
    if smeta == "RC" and base not in RANDOMIZABLE:
        out.add("H7", f"{base} under RC")
    if smeta in ("LWL", "AdaM1", "RC") and chain.base.asc is not None:
        out.add("H14", f"ASC under {smeta}")
    if base == "RandomTree" and bp.get("nfbgt") == 1:
        out.add("H10")
    if base == "C4.5" and bp.get("u"):
        present = [k for k in ("cf", "sr") if k in bp]
        if present:
            out.add("H11", ", ".join(present) + " set")
        if bp.get("ct"):
            out.add("W3")
    if base == "PART" and ("nr" in bp) != bool(bp.get("rep")):
        out.add("H12", "nr without rep" if "nr" in bp else "rep without nr")


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _components(c: Configuration):
    if c.meta is not None:
        yield c.meta.id, c.meta.params
    yield c.core.id, c.core.params
    if c.core.slc is not None:
        if c.core.slc.meta is not None:
            yield c.core.slc.meta.id, c.core.slc.meta.params
        yield c.core.slc.base.id, c.core.slc.base.params


def _domains(c: Configuration, ctx, out: _Collector):
    for alg, params in _components(c):
        if alg not in ALGORITHMS:
            out.add("H13", f"unknown algorithm {alg!r}")
            continue
        specs = spec_map(alg)
        for name, value in params.items():
            spec = specs.get(name)
            if spec is None:
                out.add("H13", f"{alg} has no parameter {name!r}")
                continue
            if alg in ("CT", "CDT") and name == "d":
                continue  # owned by H2
            if alg == "RandomTree" and name == "nfbgt" and value == 1:
                continue  # owned by H10
            if ctx is None and _context_dependent(spec):
                if not _num(value):
                    out.add("H13", f"{alg}.{name}={value!r}")
                continue
            if not spec.contains(value, ctx):
                out.add("H13", f"{alg}.{name}={value!r} outside {spec.domain_text(ctx)}")


def _context_dependent(spec) -> bool:
    return any(v in str(x) for x in (spec.lo, spec.hi) for v in ("L", "n_attributes"))
