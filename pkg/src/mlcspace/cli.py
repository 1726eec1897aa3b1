"""Command-line interface.

Exit status: 0 on success, 1 when ``validate`` finds hard violations, 2 on
usage errors and unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .codec import SchemaError, from_json, load_names, to_json, to_meka_command
from .codec import InvalidConfiguration
from .config import lower
from .constraints import validate
from .context import ContextError, DatasetContext
from .evolution import SearchParams, random_search, run_search, surrogate_evaluator
from .grammar import GrammarError, grammar_stats, parse_grammar, print_grammar
from .sampling import (
    SamplingMode, derive_seed, empirical_frequencies, format_tree, sample_tree,
)
from .tiers import Tier, load_grammar

__all__ = ["main"]


class UsageError(Exception):
    pass


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("MLCSPACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"MLCSPACE_THREADS must be an integer, got {env!r}") from None
    return 1


def _grammar(args):
    if getattr(args, "grammar", None):
        return parse_grammar(Path(args.grammar).read_text("utf-8"), "Custom")
    return load_grammar(getattr(args, "tier", Tier.LARGE))


def _ctx(args) -> DatasetContext:
    return DatasetContext(args.labels, args.attributes)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def cmd_parse(args, out):
    g = _grammar(args)
    if args.stats:
        s = grammar_stats(g)
        out.write(_dump({
            "rules": s.rule_count, "nonterminals": s.nonterminal_count,
            "terminals": s.terminal_count, "terminal_occurrences": s.terminal_occurrences,
            "range_leaves": s.range_leaves, "unresolved": list(s.unresolved),
            "stubs": list(s.stubs),
        }) + "\n")
    else:
        out.write(print_grammar(g))
    return 0


def cmd_sample(args, out):
    g, ctx = _grammar(args), _ctx(args)
    names = load_names(args.names) if args.names else None
    for i in range(args.n):
        seed = args.seed if args.n == 1 else derive_seed(args.seed, i)
        t = sample_tree(g, ctx, args.mode, seed)
        if args.format == "tree":
            out.write(format_tree(t) + "\n")
        elif args.format == "meka":
            out.write(to_meka_command(lower(t), names, ctx) + "\n")
        else:
            out.write(to_json(lower(t)) + "\n")
    return 0


def _read_config(path):
    return from_json(Path(path).read_text("utf-8"))


def cmd_validate(args, out):
    report = validate(_read_config(args.config), _ctx(args))
    out.write(_dump(report.to_dict()) + "\n")
    return 0 if report.valid else 1


def cmd_serialize(args, out):
    c = _read_config(args.config)
    if args.format == "json":
        out.write(to_json(c) + "\n")
        return 0
    names = load_names(args.names) if args.names else None
    ctx = _ctx(args) if args.labels is not None and args.attributes is not None else None
    try:
        out.write(to_meka_command(c, names, ctx) + "\n")
    except InvalidConfiguration as e:
        sys.stderr.write(f"mlcspace: {e}\n")
        return 1
    return 0


def cmd_stats(args, out):
    ft = empirical_frequencies(_grammar(args), _ctx(args), args.mode, args.n, args.seed,
                               threads=_threads(args))
    out.write(json.dumps(ft.to_dict(), sort_keys=True, indent=1) + "\n")
    return 0


def cmd_search(args, out):
    g, ctx = _grammar(args), _ctx(args)
    evaluator = surrogate_evaluator(args.landscape)
    threads = _threads(args)
    if args.baseline == "random":
        result = random_search(g, ctx, evaluator, args.budget, args.mode, args.seed, threads)
    else:
        params = SearchParams(population_size=min(args.population, args.budget),
                              generations=args.generations, threads=threads)
        result = run_search(g, ctx, evaluator, args.budget, params, args.mode, args.seed)
    for h in result.history:
        out.write(_dump(h.to_dict()) + "\n")
    out.write(_dump({"best_fitness": result.best_fitness, "evaluations": result.evaluations,
                     "best": json.loads(to_json(result.best))}) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlcspace", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for stats and search (env: MLCSPACE_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    def tiered(sp, grammar=True):
        sp.add_argument("--tier", type=Tier.parse, default=Tier.LARGE,
                        help="small, medium or large (default: large)")
        if grammar:
            sp.add_argument("--grammar", help="grammar file used instead of the bundled tier")

    def context(sp, required=True):
        sp.add_argument("--labels", type=int, required=required, help="label count L")
        sp.add_argument("--attributes", type=int, required=required, help="attribute count A")

    def mode(sp):
        sp.add_argument("--mode", type=SamplingMode.parse, default=SamplingMode.UNIFORM_MARGINAL,
                        help="naive or uniform-marginal (default)")

    sp = sub.add_parser("parse", help="parse a grammar and print it canonically")
    tiered(sp)
    sp.add_argument("--stats", action="store_true", help="print rule and symbol counts instead")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("sample", help="draw random configurations")
    tiered(sp)
    context(sp)
    mode(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--format", choices=("json", "meka", "tree"), default="json")
    sp.add_argument("--names", help="JSON file remapping algorithm names in commands")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("validate", help="check a JSON configuration")
    sp.add_argument("--config", required=True)
    context(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("serialize", help="convert a JSON configuration")
    sp.add_argument("--config", required=True)
    sp.add_argument("--format", choices=("meka", "json"), default="meka")
    sp.add_argument("--names", help="JSON file remapping algorithm names in commands")
    context(sp, required=False)
    sp.set_defaults(func=cmd_serialize)

    sp = sub.add_parser("stats", help="headline frequencies of sampled configurations")
    tiered(sp)
    context(sp)
    mode(sp)
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("search", help="GGP search on the surrogate landscape")
    tiered(sp)
    context(sp)
    mode(sp)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--landscape", type=int, default=0, help="surrogate landscape seed")
    sp.add_argument("--population", type=int, default=50)
    sp.add_argument("--generations", type=int, default=40)
    sp.add_argument("--baseline", choices=("random",), help="run random search instead")
    sp.set_defaults(func=cmd_search)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
            raise UsageError("--n must be >= 1")
        if getattr(args, "budget", 1) < 1:
            raise UsageError("--budget must be >= 1")
        return args.func(args, sys.stdout)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (UsageError, GrammarError, SchemaError, ContextError, OSError, ValueError) as e:
        sys.stderr.write(f"mlcspace: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
