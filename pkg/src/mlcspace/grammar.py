"""BNF grammar representation, parser, printer and bound expressions.

The dialect::

    <name> ::= alt | alt          # comment
    [ ... ]   optional group
    ( ... )   grouped alternatives
    RANDOM-INT(lo, hi)            integer leaf
    RANDOM-REAL(>lo, <hi) * n     real leaf, optional open bounds and scale

A line that does not open a new ``<name> ::=`` continues the previous body.
Bound expressions admit numbers, ``L``, ``n_attributes``, ``+ - * /``,
``SQRT(x)``, ``min(x, y)`` and implicit multiplication such as ``2L``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Union

from .context import DatasetContext

__all__ = [
    "BinOp", "BoundError", "Call", "DuplicateProduction", "Grammar",
    "GrammarError", "GrammarStats", "GrammarSyntaxError", "Group", "IntRange",
    "NonTerminal", "Num", "OptionalGroup", "Production", "RealRange",
    "Terminal", "Var", "eval_bound", "grammar_stats", "int_bounds",
    "parse_grammar", "print_grammar", "real_bounds", "references",
    "walk_symbols", "STUB_MARKER",
]


class GrammarError(ValueError):
    pass


class GrammarSyntaxError(GrammarError):
    def __init__(self, line: int, column: int, expected: str):
        self.line, self.column, self.expected = line, column, expected
        super().__init__(f"line {line}, column {column}: expected {expected}")


class DuplicateProduction(GrammarError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"nonterminal <{name}> is defined more than once")


class BoundError(GrammarError):
    pass


# --------------------------------------------------------------------------
# bound expressions

@dataclass(frozen=True)
class Num:
    value: float
    text: str

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Var:
    name: str  # "L" or "n_attributes"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return _fmt_expr(self, 0)


@dataclass(frozen=True)
class Call:
    func: str  # "SQRT" or "MIN"
    args: tuple

    def __str__(self):
        return _fmt_expr(self, 0)


Expr = Union[Num, Var, BinOp, Call]

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_FUNC_NAMES = {"SQRT": "SQRT", "MIN": "min"}


def _fmt_expr(e: Expr, parent_prec: int, right_side: bool = False) -> str:
    if isinstance(e, (Num, Var)):
        return str(e)
    if isinstance(e, Call):
        return f"{_FUNC_NAMES[e.func]}({', '.join(_fmt_expr(a, 0) for a in e.args)})"
    prec = _PREC[e.op]
    text = f"{_fmt_expr(e.left, prec)} {e.op} {_fmt_expr(e.right, prec, True)}"
    if prec < parent_prec or (right_side and prec == parent_prec):
        return f"({text})"
    return text


def eval_bound(e: Expr, ctx: DatasetContext) -> float:
    """Evaluate a bound expression exactly (no rounding) under ``ctx``."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(ctx.L if e.name == "L" else ctx.A)
    if isinstance(e, Call):
        args = [eval_bound(a, ctx) for a in e.args]
        if e.func == "SQRT":
            if args[0] < 0:
                raise BoundError(f"SQRT of negative value in {e}")
            return math.sqrt(args[0])
        return min(args)
    a, b = eval_bound(e.left, ctx), eval_bound(e.right, ctx)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0:
        raise BoundError(f"division by zero in {e}")
    return a / b


def _has_vars(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, BinOp):
        return _has_vars(e.left) or _has_vars(e.right)
    if isinstance(e, Call):
        return any(_has_vars(a) for a in e.args)
    return False


# --------------------------------------------------------------------------
# symbols

@dataclass(frozen=True)
class NonTerminal:
    name: str

    def __str__(self):
        return f"<{self.name}>"


@dataclass(frozen=True)
class Terminal:
    text: str

    def __str__(self):
        return self.text


def _fmt_alts(alts) -> str:
    return " | ".join(" ".join(str(s) for s in alt) for alt in alts)


@dataclass(frozen=True)
class OptionalGroup:
    alternatives: tuple  # tuple of tuple of symbols

    def __str__(self):
        return f"[{_fmt_alts(self.alternatives)}]"


@dataclass(frozen=True)
class Group:
    alternatives: tuple

    def __str__(self):
        return f"({_fmt_alts(self.alternatives)})"


@dataclass(frozen=True)
class IntRange:
    lo: Expr
    hi: Expr

    def __str__(self):
        return f"RANDOM-INT({self.lo}, {self.hi})"


@dataclass(frozen=True)
class RealRange:
    lo: Expr
    hi: Expr
    lo_open: bool = False
    hi_open: bool = False
    scale: Expr | None = None

    def __str__(self):
        lo = (">" if self.lo_open else "") + str(self.lo)
        hi = ("<" if self.hi_open else "") + str(self.hi)
        text = f"RANDOM-REAL({lo}, {hi})"
        if self.scale is not None:
            text += f" * {_fmt_expr(self.scale, 3)}"
        return text


Symbol = Union[NonTerminal, Terminal, OptionalGroup, Group, IntRange, RealRange]


def int_bounds(r: IntRange, ctx: DatasetContext) -> tuple[int, int]:
    """Integer interval of ``r`` under ``ctx``.

    The upper bound is floored and the lower bound ceiled; a degenerate
    interval clamps to ``[lo, lo]``.
    """
    lo = math.ceil(round(eval_bound(r.lo, ctx), 9))
    hi = math.floor(round(eval_bound(r.hi, ctx), 9))
    return lo, max(lo, hi)


def real_bounds(r: RealRange, ctx: DatasetContext) -> tuple[float, float]:
    lo, hi = eval_bound(r.lo, ctx), eval_bound(r.hi, ctx)
    return lo, max(lo, hi)


# --------------------------------------------------------------------------
# grammar

@dataclass(frozen=True)
class Production:
    name: str
    alternatives: tuple
    comment: tuple = ()

    def __post_init__(self):
        if not self.alternatives:
            raise GrammarError(f"<{self.name}> has no alternatives")


@dataclass(frozen=True)
class Grammar:
    productions: tuple
    source_tier: str = field(default="Custom", compare=False)
    _index: dict = field(default=None, init=False, repr=False, compare=False)
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for p in self.productions:
            if p.name in index:
                raise DuplicateProduction(p.name)
            index[p.name] = p
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_hash", hash(self.productions))

    def __hash__(self):
        return self._hash

    @property
    def start_symbol(self) -> str:
        return self.productions[0].name

    def __getitem__(self, name: str) -> Production:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def names(self) -> list[str]:
        return [p.name for p in self.productions]


def walk_symbols(alternatives) -> Iterator[Symbol]:
    """Yield every symbol in ``alternatives``, descending into groups."""
    for alt in alternatives:
        for sym in alt:
            yield sym
            if isinstance(sym, (Group, OptionalGroup)):
                yield from walk_symbols(sym.alternatives)


def references(g: Grammar) -> list[str]:
    """Nonterminal names referenced anywhere, in first-use order."""
    seen = {}
    for p in g.productions:
        for sym in walk_symbols(p.alternatives):
            if isinstance(sym, NonTerminal):
                seen.setdefault(sym.name, None)
    return list(seen)


@dataclass(frozen=True)
class GrammarStats:
    rule_count: int
    nonterminal_count: int
    terminal_count: int
    terminal_occurrences: int = 0
    unresolved: tuple = ()
    range_leaves: int = 0  # RANDOM-INT / RANDOM-REAL occurrences
    stubs: tuple = ()  # productions supplied for references the source leaves undefined


STUB_MARKER = "unresolved in the source figures"


def grammar_stats(g: Grammar) -> GrammarStats:
    """Count rules, nonterminals and distinct terminal tokens."""
    unresolved = tuple(n for n in references(g) if n not in g)
    tokens = [
        sym.text
        for p in g.productions
        for sym in walk_symbols(p.alternatives)
        if isinstance(sym, Terminal)
    ]
    return GrammarStats(
        rule_count=len(g.productions),
        nonterminal_count=len(g.productions) + len(unresolved),
        terminal_count=len(set(tokens)),
        terminal_occurrences=len(tokens),
        unresolved=unresolved,
        range_leaves=sum(
            isinstance(sym, (IntRange, RealRange))
            for p in g.productions for sym in walk_symbols(p.alternatives)),
        stubs=tuple(p.name for p in g.productions
                    if any(STUB_MARKER in c for c in p.comment)),
    )


def print_grammar(g: Grammar) -> str:
    lines = []
    for p in g.productions:
        lines.append(f"<{p.name}> ::= {_fmt_alts(p.alternatives)}")
        lines.extend(f"    # {c}" if c else "    #" for c in p.comment)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parser

_HEAD = re.compile(r"^\s*<([^<>\s]+)>\s*::=")
_META = set("|[]()<>#")
_NUMBER = re.compile(r"\d+(\.\d+)?([eE][-+]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_]\w*")
_RANGE_KEYWORDS = ("RANDOM-INT", "RANDOM-REAL")
# attribute counts probed by the load-time bound check (L runs over 2..1000)
_CHECK_A = (1, 2, 3, 4, 5, 7, 10, 50, 100, 1000, 10000)


class _Body:
    """One production body, with offsets mapped back to source positions."""

    def __init__(self):
        self.text = ""
        self.pos: list[tuple[int, int]] = []

    def add(self, segment: str, line: int, col: int):
        if self.text:
            self.text += "\n"
            self.pos.append((line, col))
        self.text += segment
        self.pos.extend((line, col + i) for i in range(len(segment)))

    def where(self, i: int) -> tuple[int, int]:
        if not self.pos:
            return 0, 0
        return self.pos[min(i, len(self.pos) - 1)]


class _BodyParser:
    def __init__(self, body: _Body, end: tuple[int, int]):
        self.body, self.s, self.i, self.end = body, body.text, 0, end

    def error(self, expected: str):
        line, col = self.body.where(self.i) if self.i < len(self.s) else self.end
        raise GrammarSyntaxError(line, col, expected)

    def skip_ws(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(repr(ch))
        self.i += 1

    def production_body(self) -> tuple:
        alts = self.alternatives()
        if self.peek():
            self.error("'|' or end of production")
        return alts

    def alternatives(self) -> tuple:
        alts = [self.sequence()]
        while self.peek() == "|":
            self.i += 1
            alts.append(self.sequence())
        return tuple(alts)

    def sequence(self) -> tuple:
        syms = []
        while True:
            ch = self.peek()
            if ch in ("", "|", ")", "]"):
                break
            syms.append(self.symbol())
        if not syms:
            self.error("a symbol")
        return tuple(syms)

    def symbol(self) -> Symbol:
        ch = self.peek()
        if ch == "<":
            j = self.s.find(">", self.i)
            name = self.s[self.i + 1:j] if j > 0 else ""
            if not name or any(c.isspace() or c == "<" for c in name):
                self.error("nonterminal name followed by '>'")
            self.i = j + 1
            return NonTerminal(name)
        if ch in ("[", "("):
            self.i += 1
            alts = self.alternatives()
            self.expect("]" if ch == "[" else ")")
            return OptionalGroup(alts) if ch == "[" else Group(alts)
        if ch == ">":
            self.error("a symbol")
        j = self.i
        while j < len(self.s) and not self.s[j].isspace() and self.s[j] not in _META:
            j += 1
        word = self.s[self.i:j]
        self.i = j
        if word in _RANGE_KEYWORDS and self.i < len(self.s) and self.s[self.i] == "(":
            return self.numeric_range(word == "RANDOM-REAL")
        return Terminal(word)

    def numeric_range(self, real: bool) -> Symbol:
        self.expect("(")
        lo_open = hi_open = False
        if real and self.peek() == ">":
            self.i, lo_open = self.i + 1, True
        lo = self.expr()
        self.expect(",")
        if real and self.peek() == "<":
            self.i, hi_open = self.i + 1, True
        hi = self.expr()
        self.expect(")")
        if not real:
            return IntRange(lo, hi)
        scale = None
        if self.peek() == "*":
            self.i += 1
            scale = self.factor()
        return RealRange(lo, hi, lo_open, hi_open, scale)

    def expr(self) -> Expr:
        left = self.term()
        while self.peek() in ("+", "-"):
            op = self.s[self.i]
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while True:
            ch = self.peek()
            if ch in ("*", "/"):
                self.i += 1
                left = BinOp(ch, left, self.factor())
            elif ch.isalpha() and isinstance(left, Num):
                left = BinOp("*", left, self.factor())
            else:
                return left

    def factor(self) -> Expr:
        ch = self.peek()
        if ch == "(":
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if ch == "-":
            self.i += 1
            return BinOp("-", Num(0.0, "0"), self.factor())
        m = _NUMBER.match(self.s, self.i)
        if m:
            self.i = m.end()
            return Num(float(m.group()), m.group())
        m = _IDENT.match(self.s, self.i)
        if not m:
            self.error("number, variable or function")
        word = m.group()
        self.i = m.end()
        if word in ("L", "n_attributes"):
            return Var(word)
        if word.upper() in _FUNC_NAMES:
            func = word.upper()
            self.expect("(")
            args = [self.expr()]
            while self.peek() == ",":
                self.i += 1
                args.append(self.expr())
            self.expect(")")
            if len(args) != (1 if func == "SQRT" else 2):
                self.error(f"{'1' if func == 'SQRT' else '2'} argument(s) to {word}")
            return Call(func, tuple(args))
        self.i = m.start()
        self.error("L, n_attributes, SQRT or min")


def parse_grammar(text: str, source_tier: str = "Custom") -> Grammar:
    """Parse grammar source text into an immutable :class:`Grammar`."""
    heads: list[tuple[str, _Body, list[str], tuple[int, int]]] = []
    last = (1, 1)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code, hash_, comment = raw.partition("#")
        last = (lineno, len(raw) + 1)
        m = _HEAD.match(code)
        if m:
            body = _Body()
            rest = code[m.end():]
            body.add(rest, lineno, m.end() + 1)
            heads.append((m.group(1), body, [], (lineno, len(code) + 1)))
        elif code.strip():
            if not heads:
                col = len(code) - len(code.lstrip()) + 1
                raise GrammarSyntaxError(lineno, col, "'<name> ::='")
            heads[-1][1].add(code, lineno, 1)
        if hash_ and heads:
            heads[-1][2].append(comment.strip())

    productions = []
    seen = set()
    for name, body, comments, _ in heads:
        if name in seen:
            raise DuplicateProduction(name)
        seen.add(name)
        end = body.where(len(body.text)) if body.text else last
        alts = _BodyParser(body, (end[0], end[1] + 1)).production_body()
        productions.append(Production(name, alts, tuple(comments)))
    if not productions:
        raise GrammarSyntaxError(last[0], 1, "at least one production")
    g = Grammar(tuple(productions), source_tier)
    _check_bounds(g)
    return g


@lru_cache(maxsize=1)
def _check_grid() -> tuple:
    labels = [*range(2, 201), 256, 500, 1000, 10_000]
    return tuple(DatasetContext(L, A) for L in labels for A in _CHECK_A)


def _check_bounds(g: Grammar):
    """Reject empty constant ranges and bounds that fail to evaluate.

    Context-dependent ranges are evaluated over a grid of contexts; an
    integer range that comes out empty there is clamped at sampling time.
    """
    for p in g.productions:
        for sym in walk_symbols(p.alternatives):
            if not isinstance(sym, (IntRange, RealRange)):
                continue
            exprs = [sym.lo, sym.hi]
            if isinstance(sym, RealRange) and sym.scale is not None:
                exprs.append(sym.scale)
            if not any(_has_vars(e) for e in exprs):
                ctx = DatasetContext(2, 1)
                lo, hi = eval_bound(sym.lo, ctx), eval_bound(sym.hi, ctx)
                if isinstance(sym, IntRange):
                    lo, hi = math.ceil(round(lo, 9)), math.floor(round(hi, 9))
                if lo > hi:
                    raise BoundError(f"<{p.name}>: empty range {sym}")
                continue
            for ctx in _check_grid():
                for e in exprs:
                    value = eval_bound(e, ctx)
                    if not math.isfinite(value):
                        raise BoundError(f"<{p.name}>: {e} is not finite under {ctx}")
