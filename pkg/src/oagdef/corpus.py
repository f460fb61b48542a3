"""Deterministic random formulas for differential testing.

Shape rules keep bounded-quantifier search honest:
  * at most two variables are live in any quantified body (the bound one
    and one outer variable), so truth tables stay two-dimensional;
  * in an atom mentioning a bound variable and an outer one, the bound
    variable's coefficient is at least as large in absolute value, so
    witnesses lie within a constant of the outer values;
  * at most two congruence atoms per formula, moduli <= 12, coefficients
    <= 7, constants <= 9, quantifier depth <= 3.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .formula import (
    And,
    Cong,
    Eq,
    Exists,
    Forall,
    Formula,
    LinearTerm,
    Lt,
    Not,
    Or,
    format_formula,
    free_vars,
    parse_formula,
    quantifier_depth,
)
from .model import GroundModel, Z

NAMES = ("x", "y", "z")
MAX_COEFF = 7
MAX_CONST = 9
MAX_MODULUS = 12


@dataclass
class CorpusItem:
    index: int
    formula: Formula
    params: dict = field(default_factory=dict)
    model: GroundModel = Z

    @property
    def text(self) -> str:
        return format_formula(self.formula)

    @property
    def free(self) -> list[str]:
        return sorted(free_vars(self.formula))


class _Gen:
    def __init__(self, rng: random.Random, model: GroundModel, unit_bound: bool = False):
        self.rng = rng
        self.model = model
        self.congs = 0
        self.unit_bound = unit_bound

    def coeff(self, hi=MAX_COEFF):
        return self.rng.choice([c for c in range(-hi, hi + 1) if c])

    def const(self):
        c = self.rng.randint(-MAX_CONST, MAX_CONST)
        if self.model.is_discrete or self.rng.random() < 0.6:
            return Fraction(c)
        # denominators divide 12 so a finite divisor-closed oracle domain exists
        den = self.model.prime or self.rng.choice([2, 3, 4, 6])
        return Fraction(c, den)

    def term(self, scope, bound):
        vs = [v for v in scope if self.rng.random() < 0.7] or [self.rng.choice(scope)]
        coeffs = {}
        if bound in vs:
            cb = 1 if self.unit_bound else self.coeff()
            coeffs[bound] = cb if self.rng.random() < 0.5 else -cb
            for v in vs:
                if v != bound:
                    coeffs[v] = self.coeff(abs(cb))
        else:
            for v in vs:
                coeffs[v] = self.coeff()
        return LinearTerm.make(coeffs, self.const())

    def atom(self, scope, bound):
        t = self.term(scope, bound)
        r = self.rng.random()
        if r < 0.25 and self.congs < 2:
            self.congs += 1
            m = self.rng.randint(2, MAX_MODULUS)
            return Cong(m, t, LinearTerm())
        if r < 0.42:
            return Eq(t, LinearTerm())
        return Lt(LinearTerm(), t) if self.rng.random() < 0.5 else Lt(t, LinearTerm())

    def formula(self, scope, bound, depth, size):
        r = self.rng.random()
        if size <= 1 or r < 0.3:
            return self.atom(scope, bound)
        if depth > 0 and r < 0.55:
            v = self.rng.choice(NAMES)
            outer = [w for w in scope if w != v]
            inner_scope = [v] + ([self.rng.choice(outer)] if outer else [])
            body = self.formula(inner_scope, v, depth - 1, size - 1)
            if v not in free_vars(body):
                body = And((self.atom(inner_scope, v), body))
            return (Exists if self.rng.random() < 0.6 else Forall)(v, body)
        if r < 0.65:
            return Not(self.formula(scope, bound, depth, size - 1))
        left = self.formula(scope, bound, depth, size // 2)
        right = self.formula(scope, bound, depth, size - size // 2)
        return (And if self.rng.random() < 0.5 else Or)((left, right))


def random_formula(rng: random.Random, free=("x",), depth: int = 3, size: int = 7,
                   model: GroundModel = Z, unit_bound: bool = False) -> Formula:
    """A formula with exactly the given free variables and quantifier depth.

    Each quantifier costs one unit of size, so the depth is capped at size - 1.
    """
    depth = max(0, min(depth, size - 1))
    while True:
        g = _Gen(rng, model, unit_bound)
        f = g.formula(list(free), None, depth, size)
        if quantifier_depth(f) == depth:
            break
    for v in free:
        if v not in free_vars(f):
            f = Or((f, g.atom([v], None))) if rng.random() < 0.5 else And((f, g.atom([v], None)))
    return f


def corpus(n: int = 500, seed: int = 0) -> list[CorpusItem]:
    """Discrete corpus: a mix of one- and two-free-variable formulas.

    Two-variable items carry a binding for y, used whenever a single free
    variable is wanted.
    """
    rng = random.Random(seed)
    items = []
    for i in range(n):
        free = ("x",) if i % 3 == 0 else ("x", "y")
        while True:
            f = random_formula(rng, free, depth=rng.choice([0, 1, 1, 2, 2, 3, 3]), size=rng.randint(4, 10))
            # most constant formulas are thrown back, judged by brute force only
            if not _looks_constant(f) or rng.random() < 0.15:
                break
        params = {"y": rng.randint(-20, 20)} if "y" in free_vars(f) else {}
        items.append(CorpusItem(i, f, params))
    return items


def _looks_constant(f: Formula) -> bool:
    from .oracle import Window, brute_table

    grid = range(-40, 41, 3)
    tab = brute_table(f, {v: grid for v in sorted(free_vars(f))}, Window.discrete(40, 40))
    return bool(tab.all() or not tab.any())


def dense_corpus(n: int, model: GroundModel, seed: int = 0) -> list[CorpusItem]:
    """One-free-variable formulas over a dense model; bound variables have unit coefficients
    so that witnesses stay inside a modest height window."""
    rng = random.Random(seed)
    items = []
    for i in range(n):
        f = random_formula(rng, ("x",), depth=rng.choice([0, 1, 1, 2]), size=rng.randint(2, 6),
                           model=model, unit_bound=True)
        items.append(CorpusItem(i, f, {}, model))
    return items


_CHI_TEMPLATES = [
    "0 <= x & x <= z",
    "0 <= x & x <= 2*z - 3",
    "0 <= x & x < z + 4",
    "0 <= x & 3*x <= z",
    "-1 < x & x <= z & !(x = 5)",
    "0 <= x & x <= z & x =_2 0",
    "x =_2 0",
    "x = z",
    "0 <= x & x <= 7",
    "0 <= x & (x <= z | x <= 3)",
    "E y (0 <= y & y <= z & x = y)",
    "0 <= x & A y (z < y -> x < y)",
]


def chi_corpus(n: int = 50, seed: int = 0) -> list[CorpusItem]:
    """Formulas phi(x, z): fixed interval-shaped templates first, then random ones."""
    rng = random.Random(seed)
    items = [CorpusItem(i, parse_formula(t)) for i, t in enumerate(_CHI_TEMPLATES[:n])]
    while len(items) < n:
        f = random_formula(rng, ("x", "z"), depth=rng.choice([0, 1]), size=rng.randint(2, 5))
        if rng.random() < 0.5:
            # bias toward sets of the shape [0, t(z)]
            f = And((Not(Lt(LinearTerm.var("x"), LinearTerm())), f))
        items.append(CorpusItem(len(items), f))
    return items
