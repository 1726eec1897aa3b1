"""Grammar-guided genetic programming over derivation trees.

Individuals are derivation trees, so every offspring is a sentence of the
grammar.  Mutation regrows one subtree from its own grammar symbol;
crossover swaps two subtrees rooted at the same nonterminal.  Both fall
back to the parents when the offspring fails hard validation.

Fitness is supplied by an evaluator ``(Configuration, DatasetContext) ->
float in [0, 1]``.  No real learner is bundled; ``surrogate_evaluator``
provides a deterministic synthetic landscape.  An execution-backed
evaluator would lower the tree, emit ``to_meka_command`` and run it.
"""

from __future__ import annotations

import hashlib
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .catalog import ALGORITHMS, KERNELS
from .codec import to_json
from .config import Configuration, headline_of, lower
from .constraints import validate
from .context import DatasetContext
from .grammar import Grammar
from .sampling import (
    GroupNode, OptNode, RuleNode, SamplingMode, TokenLeaf,
    sampler,
)

__all__ = [
    "GenerationStats", "SearchParams", "SearchResult", "crossover", "mutate",
    "random_search", "run_search", "surrogate_evaluator", "surrogate_fitness",
]

RETRY_CAP = 20
PARAM_AMPLITUDE = 0.05
_REFERENCE_CTX = DatasetContext(10, 50)


# --------------------------------------------------------------------------
# tree surgery

def _sites(t: RuleNode):
    """Yield ``(path, node, site)`` for every node that can be regrown.

    ``site`` is a rule name for rule nodes and a symbol site
    ``(production, flat path)`` for groups, optionals and numeric leaves.
    Tokens are fixed by their parent and are skipped.
    """
    def walk(node, path, prod, sym_path):
        if isinstance(node, RuleNode):
            yield path, node, node.name
            for i, c in enumerate(node.children):
                yield from walk(c, path + (i,), node.name, (node.alternative, i))
            return
        if isinstance(node, TokenLeaf):
            return
        yield path, node, (prod, sym_path)
        if isinstance(node, (GroupNode, OptNode)):
            for i, c in enumerate(node.children):
                yield from walk(c, path + (i,), prod, sym_path + (node.alternative, i))

    yield from walk(t, (), None, ())


def _replace(t, path, new):
    if not path:
        return new
    i = path[0]
    kids = t.children
    kids = kids[:i] + (_replace(kids[i], path[1:], new),) + kids[i + 1:]
    if isinstance(t, RuleNode):
        return RuleNode(t.name, t.alternative, kids)
    if isinstance(t, GroupNode):
        return GroupNode(t.alternative, kids)
    return OptNode(t.included, t.alternative, kids)


def _get(t, path):
    for i in path:
        t = t.children[i]
    return t


def _ok(t, ctx) -> bool:
    try:
        return validate(lower(t), ctx).valid
    except ValueError:
        return False


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def mutate(t: RuleNode, g: Grammar, ctx: DatasetContext,
           mode=SamplingMode.UNIFORM_MARGINAL, seed=0) -> RuleNode:
    """Regrow one uniformly chosen node; the parent is returned if no valid
    offspring turns up within ``RETRY_CAP`` attempts."""
    rng = _rng(seed)
    s = sampler(g, ctx, SamplingMode.parse(mode))
    sites = list(_sites(t))
    path, _, site = sites[int(rng.integers(len(sites)))]
    for _ in range(RETRY_CAP):
        sub_seed = np.random.SeedSequence(int(rng.integers(2**63)))
        child = _replace(t, path, s.regrow(site, sub_seed))
        if _ok(child, ctx):
            return child
    return t


def crossover(a: RuleNode, b: RuleNode, seed=0, ctx: DatasetContext | None = None):
    """Swap subtrees rooted at a nonterminal shared by ``a`` and ``b``.

    The root symbol is left out (swapping it only exchanges the parents).
    An offspring that fails validation is replaced by its parent.
    """
    rng = _rng(seed)
    rules_a = [(p, n) for p, n, _ in _sites(a) if isinstance(n, RuleNode) and p]
    rules_b = [(p, n) for p, n, _ in _sites(b) if isinstance(n, RuleNode) and p]
    common = sorted({n.name for _, n in rules_a} & {n.name for _, n in rules_b})
    if not common:
        return a, b
    label = common[int(rng.integers(len(common)))]
    pa = [p for p, n in rules_a if n.name == label]
    pb = [p for p, n in rules_b if n.name == label]
    xa, xb = pa[int(rng.integers(len(pa)))], pb[int(rng.integers(len(pb)))]
    ca = _replace(a, xa, _get(b, xb))
    cb = _replace(b, xb, _get(a, xa))
    if ctx is not None:
        ca = ca if _ok(ca, ctx) else a
        cb = cb if _ok(cb, ctx) else b
    return ca, cb


# --------------------------------------------------------------------------
# surrogate landscape

def _unit(*parts) -> float:
    """Deterministic hash of ``parts`` mapped to [0, 1)."""
    h = hashlib.blake2b("\x1f".join(map(str, parts)).encode(), digest_size=8).digest()
    return struct.unpack(">Q", h)[0] / 2**64


def _numeric(spec, value, ctx):
    if spec.kind not in ("int", "real") or isinstance(value, bool):
        return None
    lo, hi = spec.bounds(ctx)
    if hi <= lo:
        return 0.0
    return min(1.0, max(0.0, (value - lo) / (hi - lo)))


def _components(c: Configuration):
    if c.meta is not None:
        yield c.meta.id, c.meta.params
    yield c.core.id, c.core.params
    if c.core.slc is not None:
        if c.core.slc.meta is not None:
            yield c.core.slc.meta.id, c.core.slc.meta.params
        yield c.core.slc.base.id, c.core.slc.base.params


def _wave(landscape_seed, key, x) -> float:
    """Smooth term in [-PARAM_AMPLITUDE / 2, PARAM_AMPLITUDE / 2]."""
    freq = 0.5 + 1.5 * _unit(landscape_seed, key, "f")
    phase = 2 * math.pi * _unit(landscape_seed, key, "p")
    return PARAM_AMPLITUDE * 0.5 * math.sin(2 * math.pi * freq * x + phase)


def surrogate_fitness(c: Configuration, landscape_seed: int = 0,
                      ctx: DatasetContext | None = None) -> float:
    """Synthetic fitness in [0, 1].

    The headline pair sets a base value in [0.2, 0.8]; every numeric
    parameter (and a real threshold) adds a sinusoid of its normalized
    position whose peak-to-peak swing is ``PARAM_AMPLITUDE``.  Positions are
    taken under ``ctx`` (a 10-label, 50-attribute reference by default).
    """
    ctx = ctx or _REFERENCE_CTX
    mlc, slc = headline_of(c)
    f = 0.2 + 0.6 * _unit(landscape_seed, mlc, slc)
    if c.threshold.kind == "real":
        f += _wave(landscape_seed, "threshold", c.threshold.value)
    for alg, params in _components(c):
        for spec in ALGORITHMS[alg]:
            if spec.name not in params:
                continue
            v = params[spec.name]
            if spec.kind == "kernel":
                for sub in KERNELS[v["name"]]:
                    x = _numeric(sub, v.get(sub.name), ctx)
                    if x is not None:
                        f += _wave(landscape_seed, (alg, v["name"], sub.name), x)
                continue
            x = _numeric(spec, v, ctx)
            if x is not None:
                f += _wave(landscape_seed, (alg, spec.name), x)
    return min(1.0, max(0.0, f))


def surrogate_evaluator(landscape_seed: int = 0) -> Callable:
    def evaluate(c: Configuration, ctx: DatasetContext) -> float:
        return surrogate_fitness(c, landscape_seed, ctx)
    return evaluate


# --------------------------------------------------------------------------
# search

@dataclass(frozen=True)
class SearchParams:
    population_size: int = 50
    generations: int = 40
    tournament_size: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    elitism: int = 1
    threads: int = 1

    def __post_init__(self):
        for name in ("population_size", "generations", "tournament_size", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.elitism <= self.population_size:
            raise ValueError("elitism must lie in [0, population_size]")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float
    mean: float
    evaluations: int

    def to_dict(self) -> dict:
        return {"generation": self.generation, "best": self.best, "mean": self.mean,
                "evaluations": self.evaluations}


@dataclass(frozen=True)
class SearchResult:
    best: Configuration
    best_fitness: float
    best_tree: RuleNode
    history: tuple = field(default=())
    evaluations: int = 0


class _Evaluations:
    """Memoized evaluation keyed by canonical JSON, with budget accounting.

    The best individual is the highest fitness, ties going to the earliest
    evaluation.
    """

    def __init__(self, evaluator, ctx, budget, threads):
        self.evaluator, self.ctx, self.budget, self.threads = evaluator, ctx, budget, threads
        self.memo: dict[str, tuple[float, int]] = {}
        self.count = 0
        self.best = None  # (fitness, -index, tree, config)

    @property
    def exhausted(self) -> bool:
        return self.count >= self.budget

    def score(self, trees) -> list:
        """Fitness of each tree, or None for trees left over by the budget."""
        configs = [lower(t) for t in trees]
        keys = [to_json(c) for c in configs]
        fresh, seen = [], set()
        for i, k in enumerate(keys):
            if k not in self.memo and k not in seen and len(fresh) < self.budget - self.count:
                fresh.append(i)
                seen.add(k)
        if self.threads > 1 and len(fresh) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                values = list(pool.map(lambda i: self.evaluator(configs[i], self.ctx), fresh))
        else:
            values = [self.evaluator(configs[i], self.ctx) for i in fresh]
        for i, v in zip(fresh, values):
            self.memo[keys[i]] = (float(v), self.count)
            cand = (float(v), -self.count, trees[i], configs[i])
            if self.best is None or cand[:2] > self.best[:2]:
                self.best = cand
            self.count += 1
        return [self.memo[k][0] if k in self.memo else None for k in keys]


def _result(ev: _Evaluations, history) -> SearchResult:
    f, _, tree, config = ev.best
    return SearchResult(config, f, tree, tuple(history), ev.count)


def _initial(g, ctx, mode, rng, n):
    s = sampler(g, ctx, mode)
    return [s.sample(np.random.SeedSequence(int(rng.integers(2**63)))) for _ in range(n)]


def run_search(g: Grammar, ctx: DatasetContext, evaluator, budget: int,
               params: SearchParams = SearchParams(),
               mode=SamplingMode.UNIFORM_MARGINAL, seed: int = 0) -> SearchResult:
    """Generational GGP with tournament selection and elitism.

    Stops after ``params.generations`` generations or once ``budget``
    distinct configurations have been evaluated.  Identical configurations
    are evaluated once per run.
    """
    if budget < params.population_size:
        raise ValueError("budget must be >= population_size")
    mode = SamplingMode.parse(mode)
    rng = _rng(np.random.SeedSequence(seed))
    ev = _Evaluations(evaluator, ctx, budget, params.threads)
    pop = _initial(g, ctx, mode, rng, params.population_size)
    fit = ev.score(pop)
    history = [_stats(0, fit, ev.count)]

    for gen in range(1, params.generations + 1):
        if ev.exhausted:
            break
        order = sorted(range(len(pop)), key=lambda i: -fit[i])
        nxt = [pop[i] for i in order[:params.elitism]]

        def pick():
            idx = rng.integers(len(pop), size=params.tournament_size)
            return pop[max(idx, key=lambda i: (fit[i], -i))]

        while len(nxt) < params.population_size:
            a, b = pick(), pick()
            if rng.random() < params.crossover_rate:
                a, b = crossover(a, b, rng, ctx)
            for child in (a, b):
                if rng.random() < params.mutation_rate:
                    child = mutate(child, g, ctx, mode, rng)
                if len(nxt) < params.population_size:
                    nxt.append(child)
        scores = ev.score(nxt)
        kept = [i for i, s in enumerate(scores) if s is not None]
        pop, fit = [nxt[i] for i in kept], [scores[i] for i in kept]
        history.append(_stats(gen, fit, ev.count))
    return _result(ev, history)


def _stats(gen, fit, count) -> GenerationStats:
    return GenerationStats(gen, max(fit), float(np.mean(fit)), count)


def random_search(g: Grammar, ctx: DatasetContext, evaluator, budget: int,
                  mode=SamplingMode.UNIFORM_MARGINAL, seed: int = 0,
                  threads: int = 1) -> SearchResult:
    """Best of ``budget`` independently sampled configurations."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    mode = SamplingMode.parse(mode)
    rng = _rng(np.random.SeedSequence(seed))
    trees = _initial(g, ctx, mode, rng, budget)
    configs = [lower(t) for t in trees]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(lambda c: float(evaluator(c, ctx)), configs))
    else:
        values = [float(evaluator(c, ctx)) for c in configs]
    best = max(range(budget), key=lambda i: (values[i], -i))
    stats = GenerationStats(0, values[best], float(np.mean(values)), budget)
    return SearchResult(configs[best], values[best], trees[best], (stats,), budget)
