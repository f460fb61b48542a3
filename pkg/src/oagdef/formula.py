"""Formulas of ordered abelian groups with congruence predicates.

Terms are kept in linear form: integer coefficients on variables plus one
constant group element.  In the discrete model the constant is an integer
multiple of the named element 1; in dense models it is an explicit rational
parameter.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from .model import DISCRETE, GroundModel, ModelError, Z


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class EvaluationError(ValueError):
    pass


class ScopeError(ValueError):
    pass


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class LinearTerm:
    coeffs: tuple[tuple[str, int], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def make(coeffs: Mapping[str, int] | None = None, const=0) -> "LinearTerm":
        items = tuple(sorted((v, int(c)) for v, c in (coeffs or {}).items() if c))
        return LinearTerm(items, Fraction(const))

    @staticmethod
    def var(name: str, coeff: int = 1) -> "LinearTerm":
        return LinearTerm.make({name: coeff})

    @staticmethod
    def constant(c) -> "LinearTerm":
        return LinearTerm((), Fraction(c))

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def coeff(self, name: str) -> int:
        for v, c in self.coeffs:
            if v == name:
                return c
        return 0

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def is_ground(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        d = self.as_dict()
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return LinearTerm.make(d, self.const + other.const)

    def __neg__(self) -> "LinearTerm":
        return LinearTerm(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other: "LinearTerm") -> "LinearTerm":
        return self + (-other)

    def scale(self, k: int) -> "LinearTerm":
        if k == 0:
            return LinearTerm()
        return LinearTerm(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    def without(self, name: str) -> "LinearTerm":
        return LinearTerm(tuple((v, c) for v, c in self.coeffs if v != name), self.const)

    def substitute(self, name: str, term: "LinearTerm") -> "LinearTerm":
        c = self.coeff(name)
        if not c:
            return self
        return self.without(name) + term.scale(c)

    def rename(self, old: str, new: str) -> "LinearTerm":
        return self.substitute(old, LinearTerm.var(new))

    def evaluate(self, assignment: Mapping[str, Fraction]) -> Fraction:
        total = self.const
        for v, c in self.coeffs:
            try:
                total += c * assignment[v]
            except KeyError:
                raise EvaluationError(f"unassigned variable {v!r}") from None
        return total

    def __str__(self):
        parts = []
        for v, c in self.coeffs:
            mag = abs(c)
            body = v if mag == 1 else f"{mag}*{v}"
            parts.append(("-" if c < 0 else "+", body))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", str(abs(self.const))))
        sign, body = parts[0]
        out = ("-" if sign == "-" else "") + body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out


ZERO = LinearTerm()
ONE = LinearTerm.constant(1)


# --------------------------------------------------------------------------
# formulas


class Formula:
    """Base class for formula nodes.  All nodes are immutable."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


TRUE = Top()
FALSE = Bottom()


@dataclass(frozen=True)
class Eq(Formula):
    lhs: LinearTerm
    rhs: LinearTerm


@dataclass(frozen=True)
class Lt(Formula):
    lhs: LinearTerm
    rhs: LinearTerm


@dataclass(frozen=True)
class Cong(Formula):
    """lhs is congruent to rhs modulo m, i.e. lhs - rhs lies in mG."""

    m: int
    lhs: LinearTerm
    rhs: LinearTerm

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"congruence modulus must be at least 2, got {self.m}")


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


ATOMS = (Eq, Lt, Cong)


def conj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        else:
            flat.append(a)
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat)) if flat else TRUE


def disj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        else:
            flat.append(a)
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat)) if flat else FALSE


def le(a: LinearTerm, b: LinearTerm) -> Formula:
    return Or((Lt(a, b), Eq(a, b)))


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, (Eq, Lt, Cong)):
        return f.lhs.variables | f.rhs.variables
    if isinstance(f, (Top, Bottom)):
        return frozenset()
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(a) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return free_vars(f.lhs) | free_vars(f.rhs)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def all_vars(f: Formula) -> frozenset[str]:
    """Every variable name occurring in f, free or bound."""
    if isinstance(f, (Exists, Forall)):
        return all_vars(f.body) | {f.var}
    if isinstance(f, Not):
        return all_vars(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(all_vars(a) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return all_vars(f.lhs) | all_vars(f.rhs)
    return free_vars(f)


def bound_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, (Exists, Forall)):
        return bound_vars(f.body) | {f.var}
    if isinstance(f, Not):
        return bound_vars(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(bound_vars(a) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return bound_vars(f.lhs) | bound_vars(f.rhs)
    return frozenset()


def is_quantifier_free(f: Formula) -> bool:
    return not bound_vars(f)


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, (Exists, Forall)):
        return 1 + quantifier_depth(f.body)
    if isinstance(f, Not):
        return quantifier_depth(f.arg)
    if isinstance(f, (And, Or)):
        return max((quantifier_depth(a) for a in f.args), default=0)
    if isinstance(f, (Implies, Iff)):
        return max(quantifier_depth(f.lhs), quantifier_depth(f.rhs))
    return 0


def atoms(f: Formula) -> Iterator[Formula]:
    if isinstance(f, ATOMS):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from atoms(a)
    elif isinstance(f, (Implies, Iff)):
        yield from atoms(f.lhs)
        yield from atoms(f.rhs)
    elif isinstance(f, (Exists, Forall)):
        yield from atoms(f.body)


def map_terms(f: Formula, fn) -> Formula:
    """Apply fn to every term of every atom (no regard for binding)."""
    if isinstance(f, Eq):
        return Eq(fn(f.lhs), fn(f.rhs))
    if isinstance(f, Lt):
        return Lt(fn(f.lhs), fn(f.rhs))
    if isinstance(f, Cong):
        return Cong(f.m, fn(f.lhs), fn(f.rhs))
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Not):
        return Not(map_terms(f.arg, fn))
    if isinstance(f, And):
        return And(tuple(map_terms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_terms(a, fn) for a in f.args))
    if isinstance(f, Implies):
        return Implies(map_terms(f.lhs, fn), map_terms(f.rhs, fn))
    if isinstance(f, Iff):
        return Iff(map_terms(f.lhs, fn), map_terms(f.rhs, fn))
    if isinstance(f, Exists):
        return Exists(f.var, map_terms(f.body, fn))
    if isinstance(f, Forall):
        return Forall(f.var, map_terms(f.body, fn))
    raise TypeError(f"not a formula: {f!r}")


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in taken:
            return cand


def substitute_term(f: Formula, var: str, term: LinearTerm) -> Formula:
    """Capture-avoiding substitution of ``term`` for the free variable ``var``."""
    if var not in free_vars(f):
        return f
    if isinstance(f, ATOMS):
        return map_terms(f, lambda t: t.substitute(var, term))
    if isinstance(f, Not):
        return Not(substitute_term(f.arg, var, term))
    if isinstance(f, And):
        return And(tuple(substitute_term(a, var, term) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute_term(a, var, term) for a in f.args))
    if isinstance(f, Implies):
        return Implies(substitute_term(f.lhs, var, term), substitute_term(f.rhs, var, term))
    if isinstance(f, Iff):
        return Iff(substitute_term(f.lhs, var, term), substitute_term(f.rhs, var, term))
    if isinstance(f, (Exists, Forall)):
        body, bv = f.body, f.var
        if bv in term.variables:
            new = fresh_name(bv, all_vars(f) | term.variables | {var})
            body = substitute_term(body, bv, LinearTerm.var(new))
            bv = new
        return type(f)(bv, substitute_term(body, var, term))
    raise TypeError(f"not a formula: {f!r}")


def substitute_params(f: Formula, bindings: Mapping[str, object], model: GroundModel = Z) -> Formula:
    """Replace free variables by parameter constants from the ground model.

    A name that occurs only bound cannot be bound to a parameter; a name
    that also occurs free (reused under a quantifier) has its free
    occurrences replaced.
    """
    bound, free = bound_vars(f), free_vars(f)
    for name in bindings:
        if name in bound and name not in free:
            raise ScopeError(f"cannot bind {name!r}: it is bound in the formula")
    for name, value in bindings.items():
        f = substitute_term(f, name, LinearTerm.constant(model.element(value)))
    return f


# --------------------------------------------------------------------------
# evaluation


def eval_formula(f: Formula, assignment: Mapping[str, object], model: GroundModel = Z) -> bool:
    """Truth of a quantifier-free formula under a full assignment."""
    env = {k: Fraction(v) for k, v in assignment.items()}
    return _eval(f, env, model)


def _eval(f, env, model):
    if isinstance(f, Lt):
        return f.lhs.evaluate(env) < f.rhs.evaluate(env)
    if isinstance(f, Eq):
        return f.lhs.evaluate(env) == f.rhs.evaluate(env)
    if isinstance(f, Cong):
        return model.in_mG(f.lhs.evaluate(env) - f.rhs.evaluate(env), f.m)
    if isinstance(f, And):
        return all(_eval(a, env, model) for a in f.args)
    if isinstance(f, Or):
        return any(_eval(a, env, model) for a in f.args)
    if isinstance(f, Not):
        return not _eval(f.arg, env, model)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Implies):
        return (not _eval(f.lhs, env, model)) or _eval(f.rhs, env, model)
    if isinstance(f, Iff):
        return _eval(f.lhs, env, model) == _eval(f.rhs, env, model)
    if isinstance(f, (Exists, Forall)):
        raise EvaluationError("quantifier encountered; eliminate quantifiers first")
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# printing

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}


def format_formula(f: Formula) -> str:
    return _fmt(f, 0)


def _fmt(f, ctx):
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Eq):
        return f"{f.lhs} = {f.rhs}"
    if isinstance(f, Lt):
        return f"{f.lhs} < {f.rhs}"
    if isinstance(f, Cong):
        return f"{f.lhs} =_{f.m} {f.rhs}"
    if isinstance(f, Not):
        if isinstance(f.arg, ATOMS):
            return f"!({_fmt(f.arg, 0)})"
        return "!" + _fmt(f.arg, 5)
    if isinstance(f, (Exists, Forall)):
        q = "E" if isinstance(f, Exists) else "A"
        return f"{q} {f.var} ({_fmt(f.body, 0)})"
    prec = _PREC[type(f)]
    if isinstance(f, (And, Or)):
        if not f.args:
            return "true" if isinstance(f, And) else "false"
        op = " & " if isinstance(f, And) else " | "
        # n-ary nodes print flat; nested same-type children keep parentheses
        if len(f.args) == 1:
            return _fmt(f.args[0], ctx)
        text = op.join(_fmt(a, prec + 1) for a in f.args)
    elif isinstance(f, Implies):
        text = f"{_fmt(f.lhs, prec + 1)} -> {_fmt(f.rhs, prec)}"
    else:
        text = f"{_fmt(f.lhs, prec + 1)} <-> {_fmt(f.rhs, prec + 1)}"
    return f"({text})" if prec < ctx or ctx == 5 else text


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)|(?P<cong>=_\d+)"
    r"|(?P<op><->|->|<=|>=|!=|[-+*/()<>=!&|]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        while pos < len(text) and text[pos].isspace():
            if text[pos] == "\n":
                line += 1
                line_start = pos + 1
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), line, start - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


_KEYWORDS = {"E", "A", "true", "false"}


class _Parser:
    def __init__(self, text: str, model: GroundModel):
        self.toks = _tokenize(text)
        self.i = 0
        self.model = model

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise FormulaSyntaxError(msg, tok.line, tok.col)

    def take(self, text=None, kind=None):
        tok = self.peek()
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = text or kind
            self.error(f"expected {want!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def at(self, *texts):
        tok = self.peek()
        return tok.kind == "op" and tok.text in texts

    def formula(self):
        return self.iff()

    def quantified(self):
        tok = self.take(kind="ident")
        var = self.take(kind="ident")
        if var.text in _KEYWORDS:
            self.error(f"{var.text!r} cannot be used as a variable", var)
        self.take("(")
        body = self.formula()
        self.take(")")
        return (Exists if tok.text == "E" else Forall)(var.text, body)

    def iff(self):
        lhs = self.implies()
        while self.at("<->"):
            self.i += 1
            lhs = Iff(lhs, self.implies())
        return lhs

    def implies(self):
        lhs = self.disj()
        if self.at("->"):
            self.i += 1
            return Implies(lhs, self.implies())
        return lhs

    def disj(self):
        args = [self.conj()]
        while self.at("|"):
            self.i += 1
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.at("&"):
            self.i += 1
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("E", "A"):
            return self.quantified()
        if tok.kind == "ident" and tok.text in ("true", "false"):
            self.i += 1
            return TRUE if tok.text == "true" else FALSE
        if self.at("("):
            # a parenthesised formula or the start of a term; try the formula first
            save = self.i
            self.i += 1
            try:
                f = self.formula()
                self.take(")")
                if not self._starts_relation():
                    return f
            except FormulaSyntaxError:
                pass
            self.i = save
        return self.atom()

    def _starts_relation(self):
        tok = self.peek()
        return tok.kind == "cong" or (tok.kind == "op" and tok.text in ("=", "<", "<=", ">", ">=", "!=", "+", "-", "*"))

    def atom(self):
        lhs = self.term()
        tok = self.peek()
        if tok.kind == "cong":
            self.i += 1
            m = int(tok.text[2:])
            if m < 2:
                self.error(f"congruence modulus must be at least 2, got {m}", tok)
            return Cong(m, lhs, self.term())
        if tok.kind != "op" or tok.text not in ("=", "<", "<=", ">", ">=", "!="):
            self.error(f"expected a relation, found {tok.text or 'end of input'!r}")
        self.i += 1
        rhs = self.term()
        op = tok.text
        if op == "=":
            return Eq(lhs, rhs)
        if op == "<":
            return Lt(lhs, rhs)
        if op == ">":
            return Lt(rhs, lhs)
        if op == "<=":
            return le(lhs, rhs)
        if op == ">=":
            return le(rhs, lhs)
        return Not(Eq(lhs, rhs))

    def term(self):
        if self.at("-"):
            self.i += 1
            t = -self.factor()
        else:
            if self.at("+"):
                self.i += 1
            t = self.factor()
        while self.at("+", "-"):
            op = self.take().text
            rhs = self.factor()
            t = t + rhs if op == "+" else t - rhs
        return t

    def factor(self):
        tok = self.peek()
        if tok.kind == "num":
            self.i += 1
            if self.at("*"):
                self.i += 1
                return self.factor().scale(int(tok.text))
            value = Fraction(int(tok.text))
            if self.at("/"):
                self.i += 1
                den = self.take(kind="num")
                if int(den.text) == 0:
                    self.error("zero denominator", den)
                value = Fraction(int(tok.text), int(den.text))
            return self.literal(value, tok)
        if tok.kind == "ident":
            if tok.text in _KEYWORDS:
                self.error(f"unexpected keyword {tok.text!r}")
            self.i += 1
            return LinearTerm.var(tok.text)
        if self.at("("):
            self.i += 1
            t = self.term()
            self.take(")")
            return t
        if self.at("-"):
            self.i += 1
            return -self.factor()
        self.error(f"expected a term, found {tok.text or 'end of input'!r}")

    def literal(self, value: Fraction, tok):
        try:
            self.model.element(value)
        except ModelError as exc:
            self.error(str(exc), tok)
        return LinearTerm.constant(value)


def parse_formula(text: str, model: GroundModel = Z) -> Formula:
    p = _Parser(text, model)
    f = p.formula()
    if p.peek().kind != "eof":
        p.error(f"unexpected {p.peek().text!r}")
    return f


def parse_term(text: str, model: GroundModel = Z) -> LinearTerm:
    p = _Parser(text, model)
    t = p.term()
    if p.peek().kind != "eof":
        p.error(f"unexpected {p.peek().text!r}")
    return t
