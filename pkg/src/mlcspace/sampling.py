"""Random derivation trees.

Two choice rules are available.  ``NAIVE`` picks every alternative of a
choice with equal probability and includes every optional element with
probability 1/2.  ``UNIFORM_MARGINAL`` (the default) reweights the choices
that decide the *headline* algorithm of each level, i.e. the first MLC or
SLC algorithm met in a preorder walk of the tree, so that each headline
algorithm is equally likely.

Randomness: each tree draws from its own ``numpy.random.PCG64`` stream.
An integer seed ``s`` gives ``SeedSequence(s)``; the ``i``-th tree of a
batch seeded with ``s`` uses ``SeedSequence(s, spawn_key=(i,))``, so batch
results do not depend on how the work is split.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Union

import numpy as np

from .context import ContextError, DatasetContext
from .grammar import (
    Grammar, Group, IntRange, NonTerminal, OptionalGroup, RealRange, Terminal,
    eval_bound, int_bounds, real_bounds,
)
from .tiers import (
    MLC_NONTERMINALS, MLC_TOKENS, SLC_NONTERMINALS, SLC_TOKENS, marker_of,
)

__all__ = [
    "GroupNode", "IntLeaf", "OptNode", "RealLeaf", "RuleNode", "SamplingMode",
    "TokenLeaf", "WeightTable", "FrequencyTable", "check_tree", "derive_seed",
    "empirical_frequencies", "first_markers", "format_tree", "headline",
    "iter_nodes", "marginal_weights", "naive_weights", "sample_tree",
    "sample_trees", "sampler",
]

_BLOCK = 64


class SamplingMode(str, enum.Enum):
    NAIVE = "naive"
    UNIFORM_MARGINAL = "uniform-marginal"

    @classmethod
    def parse(cls, value) -> "SamplingMode":
        if isinstance(value, SamplingMode):
            return value
        text = str(value).lower().replace("_", "-")
        for m in cls:
            if m.value == text:
                return m
        raise ValueError(f"unknown sampling mode {value!r}")


# --------------------------------------------------------------------------
# tree nodes

@dataclass(frozen=True, slots=True)
class RuleNode:
    """Expansion of a nonterminal through one of its alternatives."""
    name: str
    alternative: int
    children: tuple


@dataclass(frozen=True, slots=True)
class GroupNode:
    alternative: int
    children: tuple


@dataclass(frozen=True, slots=True)
class OptNode:
    included: bool
    alternative: int = -1
    children: tuple = ()


@dataclass(frozen=True, slots=True)
class TokenLeaf:
    token: str


@dataclass(frozen=True, slots=True)
class IntLeaf:
    value: int
    lo: int
    hi: int


@dataclass(frozen=True, slots=True)
class RealLeaf:
    value: float
    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False
    scale: float | None = None


Node = Union[RuleNode, GroupNode, OptNode, TokenLeaf, IntLeaf, RealLeaf]
_BRANCHES = (RuleNode, GroupNode, OptNode)


def iter_nodes(t: Node, path: tuple = ()) -> Iterator[tuple[tuple, Node]]:
    """Preorder walk yielding ``(path, node)``; ``path`` indexes children."""
    yield path, t
    if isinstance(t, _BRANCHES):
        for i, c in enumerate(t.children):
            yield from iter_nodes(c, path + (i,))


def headline(t: Node) -> tuple[str | None, str | None]:
    """First MLC and first SLC algorithm ids met in preorder."""
    found = [None, None]

    def visit(node) -> bool:
        # True once both levels are known
        if isinstance(node, RuleNode):
            key, mlc, slc = node.name, MLC_NONTERMINALS, SLC_NONTERMINALS
        elif isinstance(node, TokenLeaf):
            key, mlc, slc = node.token, MLC_TOKENS, SLC_TOKENS
        else:
            key = None
        if key is not None:
            if found[0] is None and key in mlc:
                found[0] = mlc[key]
            elif found[1] is None and key in slc:
                found[1] = slc[key]
            if found[0] is not None and found[1] is not None:
                return True
        if isinstance(node, _BRANCHES):
            for c in node.children:
                if visit(c):
                    return True
        return False

    visit(t)
    return found[0], found[1]


def format_tree(t: Node, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(t, RuleNode):
        head = f"{pad}<{t.name}> #{t.alternative}"
    elif isinstance(t, GroupNode):
        head = f"{pad}( #{t.alternative}"
    elif isinstance(t, OptNode):
        head = f"{pad}[{'+' if t.included else '-'}]"
    elif isinstance(t, TokenLeaf):
        return f"{pad}{t.token}"
    elif isinstance(t, IntLeaf):
        return f"{pad}{t.value}  in [{t.lo}, {t.hi}]"
    else:
        lb, rb = ("(" if t.lo_open else "["), (")" if t.hi_open else "]")
        scale = f" * {t.scale:g}" if t.scale is not None else ""
        return f"{pad}{t.value!r}  in {lb}{t.lo!r}, {t.hi!r}{rb}{scale}"
    lines = [head] + [format_tree(c, indent + 1) for c in t.children]
    return "\n".join(lines)


# --------------------------------------------------------------------------
# weights

def _symbol_sites(g: Grammar):
    """Yield ``(site, symbol)`` for every group and optional in ``g``."""
    def walk(alts, name, path):
        for ai, alt in enumerate(alts):
            for si, sym in enumerate(alt):
                if isinstance(sym, (Group, OptionalGroup)):
                    site = (name, path + (ai, si))
                    yield site, sym, alt[si + 1:]
                    yield from walk(sym.alternatives, name, site[1])

    for p in g.productions:
        yield from walk(p.alternatives, p.name, ())


class _Firsts:
    """First-marker sets of one level, memoized per production.

    ``seq(symbols)`` returns the ids that can be the first marker of
    ``level`` derived from ``symbols``, and whether ``symbols`` can be
    derived without any marker of that level.
    """

    def __init__(self, g: Grammar, level: str):
        self.g, self.level, self.memo = g, level, {}

    def rule(self, name):
        if name not in self.memo:
            self.memo[name] = (frozenset(), True)  # guards recursive grammars
            if name in self.g:
                self.memo[name] = self.alts(self.g[name].alternatives)
        return self.memo[name]

    def alts(self, alts):
        ids, nullable = set(), False
        for alt in alts:
            f, n = self.seq(alt)
            ids |= f
            nullable |= n
        return frozenset(ids), nullable

    def sym(self, sym):
        m = marker_of(sym)
        if m is not None and m[0] == self.level:
            return frozenset([m[1]]), False
        if isinstance(sym, NonTerminal):
            return self.rule(sym.name)
        if isinstance(sym, Group):
            return self.alts(sym.alternatives)
        if isinstance(sym, OptionalGroup):
            return self.alts(sym.alternatives)[0], True
        return frozenset(), True

    def seq(self, symbols):
        ids = set()
        for sym in symbols:
            f, n = self.sym(sym)
            ids |= f
            if not n:
                return frozenset(ids), False
        return frozenset(ids), True


def first_markers(g: Grammar, level: str) -> dict:
    """``{production: ids}`` that can be its first ``level`` marker."""
    f = _Firsts(g, level)
    return {p.name: f.rule(p.name)[0] for p in g.productions}


@dataclass(frozen=True)
class WeightTable:
    """Choice weights and optional-inclusion probabilities.

    ``choices`` maps a site to one weight per alternative; ``optionals``
    maps a site to its inclusion probability.  A site is ``(production,
    path)`` where ``path`` alternates alternative and symbol indices down
    to the group or optional element (``()`` is the production itself).
    Sites absent from the table use weight 1 and probability 1/2.
    """

    choices: dict = field(default_factory=dict)
    optionals: dict = field(default_factory=dict)

    def choice(self, site, n: int) -> tuple:
        return self.choices.get(site, (1,) * n)

    def inclusion(self, site) -> float:
        return self.optionals.get(site, 0.5)


def naive_weights(g: Grammar) -> WeightTable:
    return WeightTable()


@lru_cache(maxsize=64)
def marginal_weights(g: Grammar) -> WeightTable:
    """Weights that make the headline algorithm of each level uniform.

    Every alternative of a choice is weighted by the number of distinct
    algorithms that can be the first MLC marker derived through it; if no
    alternative can yield an MLC marker, the SLC count is used instead, and
    choices with neither keep unit weights.  An optional element followed by
    more symbols is included with probability ``a / (a + b)``, where ``a``
    and ``b`` count the first markers of the optional and of the remainder
    of its sequence.
    """
    firsts = [_Firsts(g, "MLC"), _Firsts(g, "SLC")]

    def counts(seqs):
        for f in firsts:
            c = [len(f.seq(s)[0]) for s in seqs]
            if any(c):
                return c
        return None

    choices, optionals = {}, {}
    for p in g.productions:
        if len(p.alternatives) > 1:
            c = counts(p.alternatives)
            if c:
                choices[(p.name, ())] = tuple(max(1, x) for x in c)
    for site, sym, rest in _symbol_sites(g):
        if isinstance(sym, Group):
            if len(sym.alternatives) > 1:
                c = counts(sym.alternatives)
                if c:
                    choices[site] = tuple(max(1, x) for x in c)
        else:
            if len(sym.alternatives) > 1:
                c = counts(sym.alternatives)
                if c:
                    choices[site] = tuple(max(1, x) for x in c)
            c = counts([(Group(sym.alternatives),), rest]) if rest else None
            if c and all(c):
                optionals[site] = c[0] / (c[0] + c[1])
    return WeightTable(choices, optionals)


def weights_for(g: Grammar, mode) -> WeightTable:
    mode = SamplingMode.parse(mode)
    return marginal_weights(g) if mode is SamplingMode.UNIFORM_MARGINAL else naive_weights(g)


# --------------------------------------------------------------------------
# sampling

class _Draws:
    """Uniform [0, 1) variates pulled in blocks from a numpy generator."""

    __slots__ = ("rng", "buf", "i")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf = rng.random(_BLOCK).tolist()
        self.i = 0

    def u(self) -> float:
        if self.i == _BLOCK:
            self.buf = self.rng.random(_BLOCK).tolist()
            self.i = 0
        v = self.buf[self.i]
        self.i += 1
        return v


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(seed: int, index: int, stream: int = 0) -> np.random.SeedSequence:
    """Seed of the ``index``-th draw of a batch seeded with ``seed``.

    ``stream`` separates independent batches drawn from one base seed.
    """
    key = (int(index),) if stream == 0 else (int(stream), int(index))
    return np.random.SeedSequence(int(seed), spawn_key=key)


class Sampler:
    """Grammar compiled for one context and weight table."""

    def __init__(self, g: Grammar, ctx: DatasetContext, weights: WeightTable):
        if not isinstance(ctx, DatasetContext):
            raise ContextError(f"expected a DatasetContext, got {ctx!r}")
        self.grammar, self.ctx, self.weights = g, ctx, weights
        self.rules: dict = {}
        self.symbols: dict = {}  # symbol site -> expansion function
        for p in g.productions:
            self.rules[p.name] = self._rule(p.name, p.alternatives)

    def _chooser(self, alts, site):
        subs = [
            [self._symbol(sym, (site[0], site[1] + (ai, si))) for si, sym in enumerate(alt)]
            for ai, alt in enumerate(alts)
        ]
        if len(alts) == 1:
            only = subs[0]
            return lambda st: (0, tuple([f(st) for f in only]))
        w = self.weights.choice(site, len(alts))
        total = float(sum(w))
        cum = list(np.cumsum(w, dtype=float)[:-1])

        def choose(st):
            i = bisect_right(cum, st.u() * total)
            return i, tuple([f(st) for f in subs[i]])
        return choose

    def _rule(self, name, alts):
        choose = self._chooser(alts, (name, ()))
        return lambda st: RuleNode(name, *choose(st))

    def _symbol(self, sym, site):
        fn = self._build(sym, site)
        self.symbols[site] = fn
        return fn

    def _build(self, sym, site):
        rules = self.rules
        if isinstance(sym, NonTerminal):
            name = sym.name
            if name not in self.grammar:
                raise KeyError(f"no production for <{name}>")
            return lambda st: rules[name](st)
        if isinstance(sym, Terminal):
            leaf = TokenLeaf(sym.text)
            return lambda st: leaf
        if isinstance(sym, Group):
            choose = self._chooser(sym.alternatives, site)
            return lambda st: GroupNode(*choose(st))
        if isinstance(sym, OptionalGroup):
            choose = self._chooser(sym.alternatives, site)
            p = self.weights.inclusion(site)
            absent = OptNode(False)
            return lambda st: OptNode(True, *choose(st)) if st.u() < p else absent
        if isinstance(sym, IntRange):
            lo, hi = int_bounds(sym, self.ctx)
            span = hi - lo + 1
            return lambda st: IntLeaf(lo + min(int(st.u() * span), span - 1), lo, hi)
        if isinstance(sym, RealRange):
            lo, hi = real_bounds(sym, self.ctx)
            scale = eval_bound(sym.scale, self.ctx) if sym.scale is not None else None
            lo_open, hi_open, width = sym.lo_open, sym.hi_open, hi - lo

            def real(st):
                while True:
                    v = lo + st.u() * width
                    if (lo_open and v <= lo) or (hi_open and v >= hi) or v > hi:
                        continue
                    return RealLeaf(v, lo, hi, lo_open, hi_open, scale)
            return real
        raise TypeError(f"unsupported symbol {sym!r}")

    def sample(self, seed, root: str | None = None) -> RuleNode:
        st = _Draws(_generator(seed))
        return self.rules[root or self.grammar.start_symbol](st)

    def regrow(self, site, seed) -> Node:
        """Fresh expansion of the symbol at ``site`` (a rule name or a site)."""
        st = _Draws(_generator(seed))
        if isinstance(site, str):
            return self.rules[site](st)
        return self.symbols[site](st)


@lru_cache(maxsize=32)
def sampler(g: Grammar, ctx: DatasetContext, mode=SamplingMode.UNIFORM_MARGINAL) -> Sampler:
    return Sampler(g, ctx, weights_for(g, mode))


def sample_tree(g: Grammar, ctx: DatasetContext, mode=SamplingMode.UNIFORM_MARGINAL,
                seed=0, root: str | None = None) -> RuleNode:
    """Draw one derivation tree; deterministic for fixed arguments."""
    if not isinstance(ctx, DatasetContext):
        raise ContextError(f"expected a DatasetContext, got {ctx!r}")
    return sampler(g, ctx, SamplingMode.parse(mode)).sample(seed, root)


def sample_trees(g: Grammar, ctx: DatasetContext, mode=SamplingMode.UNIFORM_MARGINAL,
                 seed: int = 0, n: int = 1, root: str | None = None,
                 threads: int = 1, stream: int = 0) -> list:
    """Draw ``n`` trees, the ``i``-th from ``derive_seed(seed, i)``."""
    s = sampler(g, ctx, SamplingMode.parse(mode))

    def one(i):
        return s.sample(derive_seed(seed, i, stream), root)

    if threads <= 1 or n < 2 * threads:
        return [one(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(n), chunksize=max(1, n // (8 * threads))))


# --------------------------------------------------------------------------
# tree checking

def check_tree(t: Node, g: Grammar, ctx: DatasetContext | None = None,
               root: str | None = None) -> None:
    """Raise ``ValueError`` unless ``t`` is a derivation of ``g``.

    With ``ctx`` the numeric leaves are also checked against their ranges
    evaluated under that context.
    """
    def sym_check(node, sym, where):
        if isinstance(sym, NonTerminal):
            if not isinstance(node, RuleNode) or node.name != sym.name:
                raise ValueError(f"{where}: expected <{sym.name}>")
            if sym.name not in g:
                raise ValueError(f"{where}: no production for <{sym.name}>")
            alts_check(node, g[sym.name].alternatives, f"{where}/<{sym.name}>")
        elif isinstance(sym, Terminal):
            if not isinstance(node, TokenLeaf) or node.token != sym.text:
                raise ValueError(f"{where}: expected token {sym.text!r}")
        elif isinstance(sym, Group):
            if not isinstance(node, GroupNode):
                raise ValueError(f"{where}: expected a group")
            alts_check(node, sym.alternatives, where + "/()")
        elif isinstance(sym, OptionalGroup):
            if not isinstance(node, OptNode):
                raise ValueError(f"{where}: expected an optional element")
            if node.included:
                alts_check(node, sym.alternatives, where + "/[]")
            elif node.children:
                raise ValueError(f"{where}: excluded optional has children")
        elif isinstance(sym, IntRange):
            if not isinstance(node, IntLeaf) or isinstance(node.value, bool):
                raise ValueError(f"{where}: expected an integer leaf")
            lo, hi = (node.lo, node.hi) if ctx is None else int_bounds(sym, ctx)
            if (node.lo, node.hi) != (lo, hi) or not lo <= node.value <= hi:
                raise ValueError(f"{where}: {node.value} outside [{lo}, {hi}]")
        elif isinstance(sym, RealRange):
            if not isinstance(node, RealLeaf):
                raise ValueError(f"{where}: expected a real leaf")
            lo, hi = (node.lo, node.hi) if ctx is None else real_bounds(sym, ctx)
            v = node.value
            if (node.lo, node.hi) != (lo, hi) or not math.isfinite(v):
                raise ValueError(f"{where}: range mismatch")
            if v < lo or v > hi or (sym.lo_open and v == lo) or (sym.hi_open and v == hi):
                raise ValueError(f"{where}: {v} outside its range")
            if (node.lo_open, node.hi_open) != (sym.lo_open, sym.hi_open):
                raise ValueError(f"{where}: open-bound flags differ")

    def alts_check(node, alts, where):
        if not 0 <= node.alternative < len(alts):
            raise ValueError(f"{where}: alternative {node.alternative} out of range")
        alt = alts[node.alternative]
        if len(node.children) != len(alt):
            raise ValueError(f"{where}: arity {len(node.children)} != {len(alt)}")
        for i, (c, s) in enumerate(zip(node.children, alt)):
            sym_check(c, s, f"{where}.{i}")

    sym_check(t, NonTerminal(root or g.start_symbol), "")


# --------------------------------------------------------------------------
# frequencies

@dataclass(frozen=True)
class FrequencyTable:
    n: int
    mlc: dict  # headline MLC id -> frequency over all samples
    slc: dict  # headline SLC id -> frequency over samples with an SLC chain
    n_slc: int
    markers: dict  # marker name -> (probability, conditional sample count)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "n_slc": self.n_slc, "mlc": self.mlc, "slc": self.slc,
            "markers": {k: {"p": p, "n": c} for k, (p, c) in self.markers.items()},
        }


def _lwl_kernel_zero(params: dict) -> bool:
    # an omitted kernel falls back to its default, 0
    return params.get("wk", 0) == 0


def _mcc_chi_zero(params: dict) -> bool:
    return params["chi"] == 0


def _chunked(fn, n: int, threads: int) -> Counter:
    """Sum of ``fn(lo, hi)`` over a fixed split of ``range(n)``."""
    step = 4096
    bounds = [(lo, min(n, lo + step)) for lo in range(0, n, step)]
    if threads <= 1 or len(bounds) < 2:
        parts = [fn(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: fn(*b), bounds))
    total = Counter()
    for p in parts:
        total.update(p)
    return total


# name -> (conditioning algorithm, rule expanded right after it, predicate)
MARKERS = {
    "P(wk=0 | LWL)": ("LWL", "LWL", _lwl_kernel_zero),
    "P(chi=0 | MCC)": ("MCC", "chi_MCC", _mcc_chi_zero),
}


def empirical_frequencies(g: Grammar, ctx: DatasetContext, mode=SamplingMode.UNIFORM_MARGINAL,
                          n: int = 10_000, seed: int = 0, n_conditional: int | None = None,
                          threads: int = 1) -> FrequencyTable:
    """Headline frequencies of ``n`` trees plus conditional marker rates.

    Each marker conditions on an algorithm being selected.  Because the
    grammar is context free, the subtree that follows the algorithm's
    marker is distributed the same wherever it occurs, so conditional draws
    are obtained by expanding that rule directly (``n_conditional`` draws,
    default ``n``) instead of rejecting unconditioned trees.
    """
    from .config import lower_fragment

    if n < 1:
        raise ValueError("n must be >= 1")
    mode = SamplingMode.parse(mode)
    s = sampler(g, ctx, mode)

    def heads(lo, hi):
        # trees are dropped right away; keeping 10^5 of them alive mostly
        # feeds the garbage collector
        return Counter(headline(s.sample(derive_seed(seed, i))) for i in range(lo, hi))

    counts = _chunked(heads, n, threads)
    mlc, slc = Counter(), Counter()
    for (a, b), c in counts.items():
        mlc[a] += c
        if b is not None:
            slc[b] += c
    n_slc = sum(slc.values())

    markers = {}
    m = n if n_conditional is None else n_conditional
    for k, (name, (_, rule, pred)) in enumerate(MARKERS.items(), start=1):
        if rule not in g:
            continue

        def hits(lo, hi, rule=rule, pred=pred, k=k):
            return Counter(
                bool(pred(lower_fragment(s.sample(derive_seed(seed, i, k), rule))))
                for i in range(lo, hi))

        markers[name] = (_chunked(hits, m, threads)[True] / m, m)
    return FrequencyTable(
        n=n,
        mlc={a: c / n for a, c in sorted(mlc.items(), key=lambda kv: str(kv[0]))},
        slc={a: c / n_slc for a, c in sorted(slc.items())} if n_slc else {},
        n_slc=n_slc,
        markers=markers,
    )
