"""Quantifier-free terms and formulas over Z_p, in s-expression syntax.

Grammar::

    formula := atom | (not formula) | (and formula formula) | (or formula formula)
    atom    := (eq term term) | (pow NAT term)
    term    := IDENT | INT | (add term term) | (mul term term) | (neg term)
             | (D term term) | (ser IDENT term*)

``eq`` compares at the common precision of its two sides.  ``pow`` and ``D``
propagate :class:`InsufficientPrecision` rather than returning a guess.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

from . import padic
from .errors import ParseError, PrimeMismatch, SeriesError
from .padic import PadicScalar


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Mul:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Div:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Ser:
    name: str
    args: tuple["Term", ...]


@dataclass(frozen=True)
class Eq:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Pow:
    n: int
    arg: "Term"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Term = Union[Var, IntLit, Add, Mul, Neg, Div, Ser]
Formula = Union[Eq, Pow, Not, And, Or]

_TERM_TYPES = (Var, IntLit, Add, Mul, Neg, Div, Ser)
_FORMULA_TYPES = (Eq, Pow, Not, And, Or)

_IDENT = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*\Z")
_INT = re.compile(r"[+-]?\d+\Z")
_TOKEN = re.compile(r"\(|\)|[^\s()]+")

_FORMULA_HEADS = {"not", "and", "or", "eq", "pow"}


@dataclass
class _Tokens:
    text: str
    toks: list[tuple[str, int]]
    i: int = 0

    def peek(self) -> tuple[str, int] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, what: str) -> tuple[str, int]:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of input, expected {what}", len(self.text))
        self.i += 1
        return tok

    def expect_close(self):
        tok, pos = self.next("')'")
        if tok != ")":
            raise ParseError(f"expected ')' but found {tok!r}", pos)


def _tokenize(text: str) -> _Tokens:
    return _Tokens(text, [(m.group(), m.start()) for m in _TOKEN.finditer(text)])


def parse(text: str, registry: Mapping[str, padic.RestrictedSeries] | None = None) -> Term | Formula:
    """Parse a term or formula; the head symbol decides which."""
    reg = padic.BUILTIN_SERIES if registry is None else registry
    ts = _tokenize(text)
    tok = ts.peek()
    if tok is None:
        raise ParseError("empty input", 0)
    if tok[0] == "(" and ts.i + 1 < len(ts.toks) and ts.toks[ts.i + 1][0] in _FORMULA_HEADS:
        node = _formula(ts, reg)
    else:
        node = _term(ts, reg)
    extra = ts.peek()
    if extra is not None:
        raise ParseError(f"trailing input {extra[0]!r}", extra[1])
    return node


def parse_formula(text: str, registry=None) -> Formula:
    node = parse(text, registry)
    if not isinstance(node, _FORMULA_TYPES):
        raise ParseError("expected a formula", 0)
    return node


def parse_term(text: str, registry=None) -> Term:
    node = parse(text, registry)
    if not isinstance(node, _TERM_TYPES):
        raise ParseError("expected a term", 0)
    return node


def _formula(ts: _Tokens, reg) -> Formula:
    tok, pos = ts.next("formula")
    if tok != "(":
        raise ParseError(f"expected '(' to start a formula, found {tok!r}", pos)
    head, hpos = ts.next("formula head")
    if head == "not":
        node: Formula = Not(_formula(ts, reg))
    elif head in ("and", "or"):
        a = _formula(ts, reg)
        b = _formula(ts, reg)
        node = And(a, b) if head == "and" else Or(a, b)
    elif head == "eq":
        a = _term(ts, reg)
        node = Eq(a, _term(ts, reg))
    elif head == "pow":
        n, npos = ts.next("exponent")
        if not n.isdigit() or int(n) < 1:
            raise ParseError(f"pow exponent must be a positive integer, found {n!r}", npos)
        node = Pow(int(n), _term(ts, reg))
    else:
        raise ParseError(f"unknown formula head {head!r}", hpos)
    ts.expect_close()
    return node


def _term(ts: _Tokens, reg) -> Term:
    tok, pos = ts.next("term")
    if tok == ")":
        raise ParseError("unexpected ')'", pos)
    if tok != "(":
        if _INT.match(tok):
            return IntLit(int(tok))
        if _IDENT.match(tok):
            return Var(tok)
        raise ParseError(f"bad token {tok!r}", pos)
    head, hpos = ts.next("term head")
    if head in ("add", "mul", "D"):
        a = _term(ts, reg)
        b = _term(ts, reg)
        node: Term = {"add": Add, "mul": Mul, "D": Div}[head](a, b)
    elif head == "neg":
        node = Neg(_term(ts, reg))
    elif head == "ser":
        name, npos = ts.next("series name")
        if not _IDENT.match(name):
            raise ParseError(f"bad series name {name!r}", npos)
        if name not in reg:
            raise ParseError(f"unknown series {name!r}", npos)
        args = []
        while (nxt := ts.peek()) is not None and nxt[0] != ")":
            args.append(_term(ts, reg))
        if len(args) != reg[name].arity:
            raise ParseError(f"series {name} takes {reg[name].arity} arguments, got {len(args)}", npos)
        node = Ser(name, tuple(args))
    else:
        raise ParseError(f"unknown term head {head!r}", hpos)
    ts.expect_close()
    return node


def to_text(node: Term | Formula) -> str:
    """Canonical concrete syntax; ``parse(to_text(x)) == x``."""
    match node:
        case Var(name):
            return name
        case IntLit(value):
            return str(value)
        case Add(a, b):
            return f"(add {to_text(a)} {to_text(b)})"
        case Mul(a, b):
            return f"(mul {to_text(a)} {to_text(b)})"
        case Neg(a):
            return f"(neg {to_text(a)})"
        case Div(a, b):
            return f"(D {to_text(a)} {to_text(b)})"
        case Ser(name, args):
            return "(ser " + " ".join([name, *(to_text(a) for a in args)]) + ")"
        case Eq(a, b):
            return f"(eq {to_text(a)} {to_text(b)})"
        case Pow(n, a):
            return f"(pow {n} {to_text(a)})"
        case Not(a):
            return f"(not {to_text(a)})"
        case And(a, b):
            return f"(and {to_text(a)} {to_text(b)})"
        case Or(a, b):
            return f"(or {to_text(a)} {to_text(b)})"
    raise TypeError(f"not a term or formula: {node!r}")


@dataclass(frozen=True)
class Environment:
    prime: int
    precision: int
    bindings: Mapping[str, PadicScalar] = field(default_factory=dict)
    registry: Mapping[str, padic.RestrictedSeries] = field(default_factory=lambda: padic.BUILTIN_SERIES)

    def __post_init__(self):
        for name, v in self.bindings.items():
            if v.prime != self.prime or v.precision != self.precision:
                raise PrimeMismatch(f"binding {name} is {v}, ambient is {self.prime}^{self.precision}")

    @classmethod
    def from_ints(cls, prime: int, precision: int, **values: int) -> "Environment":
        return cls(prime, precision, {k: PadicScalar.of(v, prime, precision) for k, v in values.items()})

    def lift(self, value: int) -> PadicScalar:
        return PadicScalar.of(value, self.prime, self.precision)


def eval_term(t: Term, env: Environment) -> PadicScalar:
    match t:
        case Var(name):
            try:
                return env.bindings[name]
            except KeyError:
                raise NameError(f"unbound variable {name!r}") from None
        case IntLit(value):
            return env.lift(value)
        case Add(a, b):
            return eval_term(a, env) + eval_term(b, env)
        case Mul(a, b):
            return eval_term(a, env) * eval_term(b, env)
        case Neg(a):
            return -eval_term(a, env)
        case Div(a, b):
            return padic.d_div(eval_term(a, env), eval_term(b, env))
        case Ser(name, args):
            if name not in env.registry:
                raise SeriesError(f"unknown series {name!r}")
            return padic.eval_series(env.registry[name], [eval_term(a, env) for a in args])
    raise TypeError(f"not a term: {t!r}")


def eval_formula(f: Formula, env: Environment) -> bool:
    match f:
        case Eq(a, b):
            x, y = eval_term(a, env), eval_term(b, env)
            n = min(x.precision, y.precision)
            return x.truncate(n) == y.truncate(n)
        case Pow(n, a):
            return padic.is_nth_power(eval_term(a, env), n)
        case Not(a):
            return not eval_formula(a, env)
        case And(a, b):
            # both sides are evaluated so precision errors are never masked
            x, y = eval_formula(a, env), eval_formula(b, env)
            return x and y
        case Or(a, b):
            x, y = eval_formula(a, env), eval_formula(b, env)
            return x or y
    raise TypeError(f"not a formula: {f!r}")


def evaluate(node: Term | Formula, env: Environment) -> PadicScalar | bool:
    if isinstance(node, _FORMULA_TYPES):
        return eval_formula(node, env)
    return eval_term(node, env)


def substitute(node, values: Mapping[str, int]):
    """Replace variables by integer literals."""
    match node:
        case Var(name):
            return IntLit(values[name]) if name in values else node
        case IntLit():
            return node
        case Ser(name, args):
            return Ser(name, tuple(substitute(a, values) for a in args))
        case Pow(n, a):
            return Pow(n, substitute(a, values))
        case Neg(a) | Not(a):
            return type(node)(substitute(a, values))
        case Add(a, b) | Mul(a, b) | Div(a, b) | Eq(a, b) | And(a, b) | Or(a, b):
            return type(node)(substitute(a, values), substitute(b, values))
    raise TypeError(f"not a term or formula: {node!r}")
