"""Typed pipeline configurations and the lowering of derivation trees.

A configuration has a prediction threshold, an MLC algorithm (optionally
wrapped by a meta-MLC algorithm) and, for problem-transformation methods,
an SLC chain: an optional meta-SLC algorithm, an optional attribute
selection wrapper (ASC) and a base classifier.

Lowering walks the tree in preorder.  Each algorithm marker opens a frame,
and every value rule met afterwards is stored in the most recent frame.
This mirrors the grammar, where an algorithm's parameters always follow
its marker and precede the next algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .catalog import (
    ALGORITHMS, META_MLC, META_SLC, PAYOFF_FUNCTIONS, ParamSpec,
    UnknownAlgorithm, declared_hp, default_params, describe, spec_map,
)
from .context import round_half_up
from .sampling import GroupNode, OptNode, RealLeaf, RuleNode, TokenLeaf
from .tiers import MLC_NONTERMINALS, MLC_TOKENS, SLC_NONTERMINALS, SLC_TOKENS

__all__ = [
    "Component", "Configuration", "MlcCore", "ParamSpec", "SlcBase", "SlcChain",
    "Threshold", "UnknownAlgorithm", "UnknownShape", "declared_hp",
    "default_params", "describe", "headline_of", "lower", "lower_fragment",
    "spec_map",
]


class UnknownShape(ValueError):
    """The tree does not derive from a bundled grammar."""


@dataclass(frozen=True)
class Threshold:
    """``PCut1``, ``PCutL`` or a real value strictly inside (0, 1)."""

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind in ("PCut1", "PCutL"):
            if self.value is not None:
                raise ValueError(f"{self.kind} takes no value")
        elif self.kind != "real":
            raise ValueError(f"unknown threshold kind {self.kind!r}")

    @classmethod
    def real(cls, value: float) -> "Threshold":
        return cls("real", float(value))

    def __str__(self):
        return repr(self.value) if self.kind == "real" else self.kind


@dataclass(frozen=True)
class Component:
    """An algorithm id with its parameter values."""

    id: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SlcBase:
    id: str
    params: dict = field(default_factory=dict)
    asc: str | None = None  # ASC search method, None when unwrapped


@dataclass(frozen=True)
class SlcChain:
    base: SlcBase
    meta: Component | None = None


@dataclass(frozen=True)
class MlcCore:
    """A problem-transformation method with its SLC chain, or ML-BPNN."""

    id: str
    params: dict = field(default_factory=dict)
    slc: SlcChain | None = None

    @property
    def is_adaptation(self) -> bool:
        return self.id == "ML-BPNN"


@dataclass(frozen=True)
class Configuration:
    threshold: Threshold
    core: MlcCore
    meta: Component | None = None


def headline_of(c: Configuration) -> tuple[str, str | None]:
    """Outermost MLC and SLC algorithm ids, matching ``sampling.headline``."""
    mlc = c.meta.id if c.meta is not None else c.core.id
    chain = c.core.slc
    if chain is None:
        return mlc, None
    if chain.meta is not None:
        return mlc, chain.meta.id
    return mlc, "ASC" if chain.base.asc is not None else chain.base.id


# --------------------------------------------------------------------------
# lowering

# value rule -> parameter name
VALUE_RULES = {
    "cf": "cf", "mno": "mno", "nt": "nt", "nf": "nf", "md": "md", "mw": "mw",
    "nfbgt": "nfbgt", "em": "em", "crv": "crv", "mtw": "mtw", "o": "o",
    "mbs": "mbs", "nr": "nr", "k_nn": "k", "dw": "dw", "gb": "gb", "mm": "mm",
    "i": "i", "mk": "mk", "e": "e", "lr": "lr", "m": "m", "nhn": "nhn",
    "lf": "lf", "lr_sgd": "lr", "r": "r", "c": "c", "ft": "ft", "exp": "exp",
    "om": "om", "sig": "sig", "g": "g", "wtb": "wtb", "k_lwl": "k", "wk": "wk",
    "wt": "wt", "ni_ada_and_bagging": "ni", "ni_random_methods": "ni",
    "bsp": "bsp", "sss": "sss", "dsr": "dsr", "chi_MCC": "chi", "chi_CT": "chi",
    "ii": "ii", "pof": "pof", "dp": "dp", "d": "d", "i_cdn_cdt": "i", "ci": "ci",
    "sv": "sv", "pv": "pv", "sre": "sre", "les": "les", "dp_complete": "dp",
    "B": "beta", "ts": "ts", "ps": "ps", "chi_PMCC": "chi", "ne": "ne",
    "nhu_bpnn": "nhu", "lr_bpnn": "lr", "m_bpnn": "m", "i_metamlc": "i",
    "ap": "ap", "bsp_ensembleML": "bsp", "sm": "sm",
}
FLAG_TOKENS = frozenset({
    "sr", "u", "ct", "bs", "umc", "ul", "up", "uibk", "cer", "loo", "eab",
    "n2b", "r", "d", "nn", "nrmv", "bcm", "ulo", "ucv", "uaic", "cn", "sor",
    "fr", "eop", "ur", "coob", "uke", "usd", "rep",
})
# tokens that set a value rather than a flag; None means "record nothing"
VALUE_TOKENS = {"100": ("bsp", 100), "ebp": None}
KERNEL_TOKENS = {
    "PolyKernel": "PolyKernel", "NormPolyKernel": "NormalizedPolyKernel",
    "Puk": "Puk", "RBF": "RBF",
}
BNC_TOKENS = frozenset({
    "TAN", "K2", "HillClimber", "LAGDHillClimber", "SimulatedAnnealing", "TabuSearch",
})


@lru_cache(maxsize=None)
def _known_rules() -> frozenset:
    from .tiers import load_grammar
    return frozenset(load_grammar("Large").names())


class _Frame:
    __slots__ = ("level", "alg", "params", "rule")

    def __init__(self, level, alg, rule=None):
        self.level, self.alg, self.params, self.rule = level, alg, {}, rule


def _token_value(tok: str):
    if tok in PAYOFF_FUNCTIONS:
        return PAYOFF_FUNCTIONS[tok]
    try:
        return int(tok)
    except ValueError:
        return tok


def _leaf_value(node):
    """First leaf value under a value rule."""
    while isinstance(node, (RuleNode, GroupNode, OptNode)):
        if not node.children:
            raise UnknownShape("value rule without a leaf")
        node = node.children[0]
    if isinstance(node, TokenLeaf):
        return _token_value(node.token)
    if isinstance(node, RealLeaf) and node.scale is not None:
        return max(1, round_half_up(node.value * node.scale))
    return node.value


class _Lowering:
    def __init__(self):
        self.frames: list[_Frame] = []
        self.loose: dict = {}
        self.threshold = None
        self.known = _known_rules()

    def target(self) -> dict:
        return self.frames[-1].params if self.frames else self.loose

    def visit(self, node):
        if isinstance(node, RuleNode):
            self.rule(node)
        elif isinstance(node, (GroupNode, OptNode)):
            for c in node.children:
                self.visit(c)
        elif isinstance(node, TokenLeaf):
            self.token(node.token)
        else:
            raise UnknownShape(f"numeric leaf {node!r} outside a value rule")

    def rule(self, node: RuleNode):
        name = node.name
        if name not in self.known:
            raise UnknownShape(f"unknown rule <{name}>")
        if name == "pred_tshd":
            leaf = node.children[0]
            if isinstance(leaf, TokenLeaf):
                self.threshold = Threshold(leaf.token)
            else:
                self.threshold = Threshold.real(leaf.value)
            return
        if name == "w":
            # "0 1" is width 0 with density 1; "-1 <d>" carries the density
            p = self.target()
            p["w"] = _token_value(node.children[0].token)
            p["d"] = 1 if p["w"] == 0 else _leaf_value(node.children[1])
            return
        if name == "kernel":
            frame = _Frame("kernel", None)
            self.frames.append(frame)
            for c in node.children:
                self.visit(c)
            self.frames.pop()
            self.target()["kernel"] = frame.params
            return
        if name in VALUE_RULES:
            self.target()[VALUE_RULES[name]] = _leaf_value(node)
            return
        marker = None
        if name in MLC_NONTERMINALS:
            marker = ("MLC", MLC_NONTERMINALS[name])
        elif name in SLC_NONTERMINALS:
            marker = ("SLC", SLC_NONTERMINALS[name])
        if marker is not None:
            self.frames.append(_Frame(*marker, rule=name))
        for c in node.children:
            self.visit(c)

    def token(self, tok: str):
        top = self.frames[-1] if self.frames else None
        if top is not None and top.level == "kernel" and tok in KERNEL_TOKENS:
            top.params["name"] = KERNEL_TOKENS[tok]
            return
        marker = None
        if tok in MLC_TOKENS:
            marker = ("MLC", MLC_TOKENS[tok])
        elif tok in SLC_TOKENS:
            marker = ("SLC", SLC_TOKENS[tok])
        if marker is not None:
            # a marker rule may spell its own name again (SimpleLogistic)
            if top is not None and top.rule is not None and (top.level, top.alg) == marker:
                return
            self.frames.append(_Frame(*marker))
            return
        if tok in BNC_TOKENS and top is not None and top.alg == "BNC":
            top.params["sm"] = tok
        elif tok in FLAG_TOKENS:
            self.target()[tok] = True
        elif tok in VALUE_TOKENS:
            if VALUE_TOKENS[tok] is not None:
                k, v = VALUE_TOKENS[tok]
                self.target()[k] = v
        else:
            raise UnknownShape(f"unexpected token {tok!r}")


def lower_fragment(t) -> dict:
    """Parameters found in a subtree (of the first algorithm it opens, or
    loose values when it opens none)."""
    low = _Lowering()
    low.visit(t)
    out = dict(low.loose)
    if low.frames:
        out.update(low.frames[0].params)
    return out


def lower(t) -> Configuration:
    """Map a derivation tree of a bundled grammar onto a Configuration."""
    low = _Lowering()
    low.visit(t)
    if low.threshold is None:
        raise UnknownShape("tree has no prediction threshold")
    if low.loose:
        raise UnknownShape(f"parameters outside any algorithm: {sorted(low.loose)}")
    mlc = [f for f in low.frames if f.level == "MLC"]
    slc = [f for f in low.frames if f.level == "SLC"]
    if not mlc:
        raise UnknownShape("tree selects no MLC algorithm")
    meta = None
    if mlc[0].alg in META_MLC:
        meta = Component(mlc[0].alg, mlc[0].params)
        mlc = mlc[1:]
    if len(mlc) != 1 or mlc[0].alg in META_MLC:
        raise UnknownShape("expected exactly one core MLC algorithm")
    core = mlc[0]
    if core.alg == "ML-BPNN":
        if slc:
            raise UnknownShape("ML-BPNN takes no SLC chain")
        return Configuration(low.threshold, MlcCore(core.alg, core.params), meta)
    return Configuration(
        low.threshold, MlcCore(core.alg, core.params, _chain(slc)), meta)


def _chain(frames) -> SlcChain:
    frames = list(frames)
    meta = asc = None
    if frames and frames[0].alg in META_SLC:
        f = frames.pop(0)
        meta = Component(f.alg, f.params)
    if frames and frames[0].alg == "ASC":
        asc = frames.pop(0).params.get("sm")
        if asc is None:
            raise UnknownShape("ASC without a search method")
    if len(frames) != 1 or frames[0].alg in META_SLC or frames[0].alg == "ASC":
        raise UnknownShape("expected exactly one base SLC algorithm")
    base = frames[0]
    return SlcChain(SlcBase(base.alg, base.params, asc), meta)


__all__ += ["ALGORITHMS", "META_MLC", "META_SLC"]
