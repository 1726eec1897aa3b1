"""Hyper-parameter catalog: names, command flags, domains and defaults.

Every algorithm lists its parameters in a fixed order, which is also the
order used when emitting command lines.  Integer and real bounds are bound
expressions over the dataset context, so ``les`` can be capped by ``L / 2``
and ``nhu`` by ``n_attributes``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .context import DatasetContext, round_half_up
from .grammar import BoundError, eval_bound, parse_grammar
from .tiers import registry

__all__ = [
    "ALGORITHMS", "KERNELS", "META_MLC", "META_SLC", "PAYOFF_FUNCTIONS",
    "ParamSpec", "UnknownAlgorithm", "declared_hp", "default_params",
    "describe", "level_of", "spec_map",
]


class UnknownAlgorithm(KeyError):
    def __init__(self, alg_id):
        self.alg_id = alg_id
        super().__init__(f"unknown algorithm {alg_id!r}")

    def __str__(self):
        return self.args[0]


@lru_cache(maxsize=None)
def _expr(text: str):
    """Parse a bound expression by reusing the grammar's range syntax."""
    g = parse_grammar(f"<x> ::= RANDOM-REAL({text}, {text})")
    return g["x"].alternatives[0][0].lo


@dataclass(frozen=True)
class ParamSpec:
    """One hyper-parameter.

    ``kind`` is ``int``, ``real``, ``cat`` (one of ``values``), ``flag``
    (a presence-only boolean) or ``kernel`` (a categorical choice whose
    options carry their own parameter specs in ``options``).
    """

    name: str
    flag: str
    kind: str
    default: object = None
    lo: str | None = None
    hi: str | None = None
    lo_open: bool = False
    hi_open: bool = False
    extra: tuple = ()  # isolated admissible values outside [lo, hi]
    values: tuple = ()
    options: dict = field(default_factory=dict, compare=False)
    lo_rounding: str = "ceil"  # "round" for proportions rounded to nearest

    def bounds(self, ctx: DatasetContext) -> tuple:
        """Numeric interval under ``ctx`` (integers rounded inward)."""
        lo, hi = eval_bound(_expr(self.lo), ctx), eval_bound(_expr(self.hi), ctx)
        if self.kind == "int":
            lo = round_half_up(lo) if self.lo_rounding == "round" else math.ceil(round(lo, 9))
            hi = math.floor(round(hi, 9))
            hi = max(lo, hi)
        return lo, hi

    def contains(self, value, ctx: DatasetContext) -> bool:
        if self.kind == "flag":
            return value is True
        if self.kind == "cat":
            return value in self.values
        if self.kind == "kernel":
            return _kernel_ok(self, value, ctx)
        if isinstance(value, bool):
            return False
        if self.kind == "int":
            if not isinstance(value, int):
                return False
            if value in self.extra:
                return True
            lo, hi = self.bounds(ctx)
            return lo <= value <= hi
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            return False
        lo, hi = self.bounds(ctx)
        if value < lo or value > hi:
            return False
        return not ((self.lo_open and value == lo) or (self.hi_open and value == hi))

    def domain_text(self, ctx: DatasetContext | None = None) -> str:
        if self.kind == "flag":
            return "flag"
        if self.kind in ("cat", "kernel"):
            vals = self.values if self.kind == "cat" else tuple(self.options)
            return "{" + ", ".join(str(v) for v in vals) + "}"
        if ctx is not None:
            lo, hi = self.bounds(ctx)
        else:
            lo, hi = self.lo, self.hi
        lb, rb = ("(" if self.lo_open else "["), (")" if self.hi_open else "]")
        text = f"{lb}{lo}, {hi}{rb}"
        if self.extra:
            text += " or " + ", ".join(str(v) for v in self.extra)
        return text


def _kernel_ok(spec: ParamSpec, value, ctx) -> bool:
    if not isinstance(value, dict) or value.get("name") not in spec.options:
        return False
    subs = {s.name: s for s in spec.options[value["name"]]}
    for k, v in value.items():
        if k == "name":
            continue
        if k not in subs or not subs[k].contains(v, ctx):
            return False
    return all(s.kind == "flag" or s.name in value for s in subs.values())


def I(name, flag, lo, hi, default=None, extra=(), rounding="ceil"):  # noqa: E743
    return ParamSpec(name, flag, "int", default, str(lo), str(hi), extra=tuple(extra),
                     lo_rounding=rounding)


def R(name, flag, lo, hi, default=None, lo_open=False, hi_open=False):
    return ParamSpec(name, flag, "real", default, str(lo), str(hi), lo_open, hi_open)


def C(name, flag, values, default=None):
    return ParamSpec(name, flag, "cat", default, values=tuple(values))


def F(name, flag):
    return ParamSpec(name, flag, "flag", None)


# display names of the payoff functions, keyed by grammar token
PAYOFF_FUNCTIONS = {
    tok: tok.replace("_", " ")
    for tok in (
        "Accuracy", "Jaccard_index", "Hamming_score", "Exact_match",
        "Jaccard_distance", "Hamming_loss", "Zero_One_loss", "Harmonic_score",
        "One_error", "Rank_loss", "Avg_precision", "Log_Loss_lim:L",
        "Log_Loss_lim:D", "Micro_Precision", "Micro_Recall", "Macro_Precision",
        "Macro_Recall", "F1_micro_averaged", "F1_macro_averaged_by_example",
        "F1_macro_averaged_by_label", "AUPRC_macro_averaged",
        "AUROC_macro_averaged", "Levenshtein_distance",
    )
}
_POF = C("pof", "-P", PAYOFF_FUNCTIONS.values(), "Exact match")
_DP9 = ("C", "I", "Ib", "Ibf", "H", "Hbf", "X", "F", "None")
_II = I("ii", "-Iy", 1, 100, 10)
_W = C("w", "-H", (0, -1), -1)
_D = I("d", "-L", 1, "SQRT(L) + 1", 1)
_CDI = I("i", "-I", 101, 1000, 1000)
_CI = I("ci", "-Ic", 1, 100, 100)
_PV = I("pv", "-P", 1, 5, 0)
_SV = I("sv", "-N", 0, 5, 0)
_LES = I("les", "-k", 1, "L / 2", 3)
_META_I = I("i", "-I", 10, 50, 10)
_BSP_ML = I("bsp", "-P", 10, 100, 67)
_MNO = lambda default: I("mno", "-M", 1, 64, default)  # noqa: E731
_NF = I("nf", "-K", 2, 32, 0, extra=(0,))
_RIDGE = lambda default: R("r", "-R", "0.000000000001", 10, default)  # noqa: E731
_EXP = R("exp", "-E", 0.2, 5.0, 1.0)
_ULO = F("ulo", "-L")

KERNELS = {
    "PolyKernel": (_EXP, _ULO),
    "NormalizedPolyKernel": (_EXP, _ULO),
    "Puk": (R("om", "-O", 0.1, 1.0), R("sig", "-S", 0.1, 10.0)),
    "RBF": (R("g", "-G", 0.0001, 1.0),),
}

ALGORITHMS: dict[str, tuple] = {
    # multi-label, problem transformation
    "BR": (), "CC": (), "LP": (), "FW": (), "RT": (), "PCC": (),
    "BRq": (R("dsr", "-P", 0.2, 0.8, 0.75),),
    "CCq": (R("dsr", "-P", 0.2, 0.8, 0.75),),
    "BCC": (C("dp", "-X", _DP9 + ("LEAD",), "Ibf"),),
    "MCC": (I("ii", "-Iy", 2, 100, 10), I("chi", "-Is", 2, 1500, 0, extra=(0,)), _POF),
    "PMCC": (
        I("ii", "-Iy", 2, 100, 10), I("chi", "-Is", 51, 1500, 50),
        R("beta", "-B", 0.01, 0.99, 0.03), C("ts", "-O", (0, 1), 0),
        I("ps", "-M", 1, 50, 10), _POF,
    ),
    "CT": (_W, C("dp", "-X", _DP9, "Ibf"), _II, I("chi", "-Is", 2, 1500, 0), _D, _POF),
    "CDN": (_CDI, _CI),
    "CDT": (_W, C("dp", "-X", _DP9, "None"), _D, _CDI, _CI),
    "PS": (_PV, _SV),
    "PSt": (_PV, _SV),
    "RAkEL": (_PV, _SV, _LES, I("sre", "-M", 2, "min(2L, 100)", 10)),
    "RAkELd": (_PV, _SV, _LES),
    # multi-label, algorithm adaptation
    "ML-BPNN": (
        I("ne", "-E", 10, 1000, 100),
        I("nhu", "-H", "0.2 * n_attributes", "n_attributes", 10, rounding="round"),
        R("lr", "-r", 0.001, 0.1, 0.1), R("m", "-m", 0.1, 0.8, 0.1),
    ),
    # multi-label meta
    "SM": (),
    "BaggingML": (_META_I,),
    "BaggingMLDup": (_BSP_ML, _META_I),
    "EnsembleML": (_BSP_ML, _META_I),
    "RSML": (_BSP_ML, _META_I, I("ap", "-A", 10, 100, 50)),
    "EM": (_META_I,),
    "CM": (_META_I,),
    # single-label
    "C4.5": (
        R("cf", "-C", 0.0, 1.0, 0.25), _MNO(2), F("ct", "-O"), F("u", "-U"),
        F("bs", "-B"), F("umc", "-J"), F("ul", "-A"), F("sr", "-S"),
    ),
    "LMT": (
        _MNO(15), F("cn", "-B"), F("sor", "-R"), F("fr", "-C"), F("eop", "-P"),
        R("wtb", "-W", 0.0, 1.0, 0.0), F("uaic", "-A"),
    ),
    "DS": (),
    "RF": (I("nt", "-I", 2, 256, 100), _NF, I("md", "-depth", 2, 20, 0, extra=(0,))),
    "RandomTree": (
        I("mw", "-M", 1, 64, 1), _NF, I("md", "-depth", 2, 20, 0, extra=(0,)),
        I("nfbgt", "-N", 2, 5, 0, extra=(0,)),
    ),
    "REPTree": (I("mw", "-M", 1, 64, 2), I("md", "-L", 2, 20, -1, extra=(-1,)), F("up", "-P")),
    "DT": (
        C("em", "-E", ("acc", "rmse", "mae", "auc"), "acc"), F("uibk", "-I"),
        C("sm", "-S", ("GreedyStepwise", "BestFirst"), "BestFirst"),
        C("crv", "-X", (1, 2, 3, 4), 1),
    ),
    "JRip": (R("mtw", "-N", 1.0, 5.0, 2.0), F("cer", "-E"), F("up", "-P"), I("o", "-O", 1, 5, 2)),
    "OneR": (I("mbs", "-B", 1, 32, 6),),
    "PART": (_MNO(2), F("bs", "-B"), F("rep", "-R"), C("nr", "-N", (2, 3, 4, 5))),
    "ZeroR": (),
    "KNN": (I("k", "-K", 1, 64, 1), F("loo", "-X"), C("dw", "", ("I", "F"))),
    "K*": (I("gb", "-B", 1, 100, 20), F("eab", "-E"), C("mm", "-M", ("a", "d", "m", "n"), "a")),
    "VP": (I("i", "-I", 1, 10, 1), I("mk", "-M", 5000, 50000, 1000), R("e", "-E", 0.2, 5.0, 1.0)),
    "MLP": (
        R("lr", "-L", 0.1, 1.0, 0.3), R("m", "-M", 0.0, 1.0, 0.2),
        C("nhn", "-H", ("a", "i", "o", "t"), "a"), F("n2b", "-B"), F("r", "-R"), F("d", "-D"),
    ),
    "SGD": (
        C("lf", "-F", (0, 1, 2), 0), R("lr", "-L", 0.00001, 1.0, 0.01), _RIDGE(0.0001),
        F("nn", "-N"), F("nrmv", "-M"),
    ),
    "SMO": (
        R("c", "-C", 0.5, 1.5, 1.0), C("ft", "-N", (0, 1, 2), 0), F("bcm", "-M"),
        ParamSpec("kernel", "-K", "kernel", {"name": "PolyKernel", "exp": 1.0, "ulo": True},
                  options=KERNELS),
    ),
    "LR": (_RIDGE(0.00000001),),
    "SL": (R("wtb", "-W", 0.0, 1.0, 0.0), F("ucv", "-S"), F("uaic", "-A")),
    "NB": (F("uke", "-K"), F("usd", "-D")),
    "BNC": (C("sm", "-Q", ("TAN", "K2", "HillClimber", "LAGDHillClimber",
                            "SimulatedAnnealing", "TabuSearch")),),
    "NBM": (),
    # single-label meta and preprocessing
    "LWL": (C("k", "-K", (-1, 10, 30, 60, 90, 120), -1), C("wk", "-U", (0, 1, 2, 3, 4), 0)),
    "RSS": (R("sss", "-P", 0.1, 1.0, 0.5), I("ni", "-I", 2, 64, 10)),
    "Bagging": (I("bsp", "-P", 10, 100, 100), I("ni", "-I", 2, 128, 10), F("coob", "-O")),
    "RC": (I("ni", "-I", 2, 64, 10),),
    "AdaM1": (I("wt", "-P", 50, 100, 100), I("ni", "-I", 2, 128, 10), F("ur", "-Q")),
    "ASC": (C("sm", "-S", ("BestFirst", "GreedyStepwise"), "BestFirst"),),
}

META_MLC = frozenset({"SM", "RSML", "BaggingML", "BaggingMLDup", "EnsembleML", "EM", "CM"})
META_SLC = frozenset({"LWL", "AdaM1", "RC", "Bagging", "RSS"})


def describe(alg_id: str) -> list[ParamSpec]:
    """Parameter specs of ``alg_id`` in listing order."""
    if alg_id not in ALGORITHMS:
        raise UnknownAlgorithm(alg_id)
    return list(ALGORITHMS[alg_id])


def spec_map(alg_id: str) -> dict[str, ParamSpec]:
    return {s.name: s for s in describe(alg_id)}


def declared_hp(alg_id: str) -> int:
    """Hyper-parameter count as tabulated: a kernel choice counts once plus
    the parameters of its widest option."""
    n = 0
    for s in describe(alg_id):
        n += 1
        if s.kind == "kernel":
            n += max(len(v) for v in s.options.values())
    return n


def level_of(alg_id: str) -> str:
    rec = registry().by_key().get(alg_id)
    if rec is None:
        raise UnknownAlgorithm(alg_id)
    return rec.level


def default_params(alg_id: str) -> dict:
    """Default values of the valued parameters; flags stay unset."""
    out = {}
    for s in describe(alg_id):
        if s.kind != "flag" and s.default is not None:
            out[s.name] = dict(s.default) if isinstance(s.default, dict) else s.default
    return out


__all__ += ["BoundError"]
