"""Quantifier elimination and extraction of the unary normal form.

Discrete model: Cooper's method (lcm scaling, the minus-infinity projection,
and lower-bound test points shifted through one period).  Dense models: each
conjunct of a disjunctive normal form is reduced to "every lower bound is
below every upper bound" plus a finite case split on the residue of the
eliminated variable; in a dense archimedean group with small quotients every
nonempty open interval meets every coset, which is what makes this exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Mapping

from .defset import DefSet, boolean_op, normalize
from .formula import (
    FALSE,
    TRUE,
    ONE,
    ZERO,
    And,
    Bottom,
    Cong,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    LinearTerm,
    Lt,
    Not,
    Or,
    Top,
    atoms,
    free_vars,
    substitute_params,
    substitute_term,
)
from .model import INF, GroundModel, Z

# ---------------------------------------------------------------- smart constructors


def _and(args) -> Formula:
    out, seen = [], set()
    for a in args:
        if isinstance(a, Bottom):
            return FALSE
        if isinstance(a, Top):
            continue
        for b in a.args if isinstance(a, And) else (a,):
            if b not in seen:
                seen.add(b)
                out.append(b)
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def _or(args) -> Formula:
    out, seen = [], set()
    for a in args:
        if isinstance(a, Top):
            return TRUE
        if isinstance(a, Bottom):
            continue
        for b in a.args if isinstance(a, Or) else (a,):
            if b not in seen:
                seen.add(b)
                out.append(b)
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def _gcd_coeffs(t: LinearTerm) -> int:
    return math.gcd(*(c for _, c in t.coeffs))


def _divide(t: LinearTerm, g: int, const) -> LinearTerm:
    return LinearTerm(tuple((v, c // g) for v, c in t.coeffs), Fraction(const))


def mk_lt(t: LinearTerm, model: GroundModel) -> Formula:
    """0 < t"""
    if t.is_ground():
        return TRUE if t.const > 0 else FALSE
    if model.is_discrete:
        g = _gcd_coeffs(t)
        if g > 1:
            t = _divide(t, g, math.ceil(t.const / g))
    return Lt(ZERO, t)


def mk_eq(t: LinearTerm, model: GroundModel) -> Formula:
    """t = 0"""
    if t.is_ground():
        return TRUE if t.const == 0 else FALSE
    if model.is_discrete:
        g = _gcd_coeffs(t)
        if t.const % g:
            return FALSE
        t = _divide(t, g, t.const / g)
    if t.coeffs[0][1] < 0:
        t = -t
    return Eq(t, ZERO)


def mk_cong(m: int, t: LinearTerm, model: GroundModel) -> Formula:
    """t in mG"""
    k = model.index(m)
    if k == 1:
        return TRUE
    const = model.residue(t.const, k) if model.contains(t.const) else None
    if const is None:
        raise ValueError(f"constant {t.const} is not a group element")
    t = LinearTerm.make({v: c % k for v, c in t.coeffs}, const)
    if t.is_ground():
        return TRUE if const % k == 0 else FALSE
    g = math.gcd(k, _gcd_coeffs(t), const)
    if g > 1:
        k //= g
        t = _divide(t, g, const // g)
        if k == 1:
            return TRUE
    return Cong(k, t, ZERO)


def mk_not_cong(m: int, t: LinearTerm, model: GroundModel) -> Formula:
    pos = mk_cong(m, t, model)
    if isinstance(pos, (Top, Bottom)):
        return FALSE if isinstance(pos, Top) else TRUE
    if model.is_discrete:
        return Not(pos)
    k = pos.m
    return _or(mk_cong(k, pos.lhs - LinearTerm.constant(s), model) for s in range(1, k))


def nnf(f: Formula, model: GroundModel, neg: bool = False) -> Formula:
    """Negation normal form over normalized atoms ``0 < t``, ``t = 0``, ``t ≡_m 0``.

    Negated congruences survive only in the discrete model.
    """
    if isinstance(f, Lt):
        t = f.rhs - f.lhs
        if not neg:
            return mk_lt(t, model)
        if model.is_discrete:
            return mk_lt(ONE - t, model)
        return _or([mk_lt(-t, model), mk_eq(t, model)])
    if isinstance(f, Eq):
        t = f.lhs - f.rhs
        if not neg:
            return mk_eq(t, model)
        return _or([mk_lt(t, model), mk_lt(-t, model)])
    if isinstance(f, Cong):
        t = f.lhs - f.rhs
        return mk_not_cong(f.m, t, model) if neg else mk_cong(f.m, t, model)
    if isinstance(f, Top):
        return FALSE if neg else TRUE
    if isinstance(f, Bottom):
        return TRUE if neg else FALSE
    if isinstance(f, Not):
        return nnf(f.arg, model, not neg)
    if isinstance(f, And):
        parts = [nnf(a, model, neg) for a in f.args]
        return _or(parts) if neg else _and(parts)
    if isinstance(f, Or):
        parts = [nnf(a, model, neg) for a in f.args]
        return _and(parts) if neg else _or(parts)
    if isinstance(f, Implies):
        return nnf(Or((Not(f.lhs), f.rhs)), model, neg)
    if isinstance(f, Iff):
        a, b = f.lhs, f.rhs
        if neg:
            return nnf(Or((And((a, Not(b))), And((Not(a), b)))), model)
        return nnf(Or((And((a, b)), And((Not(a), Not(b))))), model)
    raise ValueError(f"quantifier inside nnf: {f}")



# ---------------------------------------------------------------- elimination


def eliminate_quantifiers(f: Formula, model: GroundModel = Z) -> Formula:
    """An equivalent quantifier-free formula over the ground model."""
    return prettify(_compact(_elim(f, model), model))


def _elim(f: Formula, model: GroundModel) -> Formula:
    if isinstance(f, Exists):
        return _exists(f.var, nnf(_elim(f.body, model), model), model)
    if isinstance(f, Forall):
        inner = _exists(f.var, nnf(_elim(f.body, model), model, neg=True), model)
        out = nnf(inner, model, neg=True)
        return out if model.is_discrete else simplify_dense(out)
    if isinstance(f, Not):
        return nnf(_elim(f.arg, model), model, neg=True)
    if isinstance(f, And):
        return _and(_elim(a, model) for a in f.args)
    if isinstance(f, Or):
        return _or(_elim(a, model) for a in f.args)
    if isinstance(f, Implies):
        return _elim(Or((Not(f.lhs), f.rhs)), model)
    if isinstance(f, Iff):
        a, b = _elim(f.lhs, model), _elim(f.rhs, model)
        return nnf(Iff(a, b), model)
    return nnf(f, model)


def _exists(x: str, F: Formula, model: GroundModel) -> Formula:
    if x not in free_vars(F):
        return F
    if isinstance(F, Or):
        return _or(_exists(x, a, model) for a in F.args)
    if isinstance(F, And):
        outside = [a for a in F.args if x not in free_vars(a)]
        if outside:
            inside = _and(a for a in F.args if x in free_vars(a))
            return _and([*outside, _exists(x, inside, model)])
    if model.is_discrete:
        out = _cooper(x, F, model)
    else:
        out = _dense_exists(x, F, model)
    return _compact(out, model)


def _compact(f: Formula, model: GroundModel) -> Formula:
    fv = free_vars(f)
    if len(fv) > 1:
        return f
    if not fv:
        return TRUE if _to_set(f, "_", model).is_full() else FALSE
    (v,) = fv
    g = nnf(qfree_to_defset(f, v, model).to_formula(v), model)
    return g if sum(1 for _ in atoms(g)) <= sum(1 for _ in atoms(f)) else f


def _map_atoms(f: Formula, fn) -> Formula:
    if isinstance(f, And):
        return _and(_map_atoms(a, fn) for a in f.args)
    if isinstance(f, Or):
        return _or(_map_atoms(a, fn) for a in f.args)
    if isinstance(f, Not):
        inner = _map_atoms(f.arg, fn)
        if isinstance(inner, Top):
            return FALSE
        if isinstance(inner, Bottom):
            return TRUE
        return Not(inner)
    if isinstance(f, (Top, Bottom)):
        return f
    return fn(f)


def _atom_term(a: Formula) -> LinearTerm:
    return a.rhs if isinstance(a, Lt) else a.lhs


def _cooper(x: str, F: Formula, model: GroundModel) -> Formula:
    coeffs = [abs(_atom_term(a).coeff(x)) for a in atoms(F)]
    delta = math.lcm(*(c for c in coeffs if c))

    def unit(a):
        t = _atom_term(a)
        c = t.coeff(x)
        if not c:
            return a
        k = delta // abs(c)
        t = t.without(x).scale(k) + LinearTerm.var(x, 1 if c > 0 else -1)
        if isinstance(a, Lt):
            return Lt(ZERO, t)
        if isinstance(a, Eq):
            return Eq(t, ZERO)
        return Cong(a.m * k, t, ZERO)

    F1 = _map_atoms(F, unit)
    if delta > 1:
        F1 = _and([F1, Cong(delta, LinearTerm.var(x), ZERO)])

    lower, upper, period = [], [], 1
    for a in atoms(F1):
        t = _atom_term(a)
        c = t.coeff(x)
        if not c:
            continue
        s = t.without(x)
        if isinstance(a, Lt):
            (lower if c > 0 else upper).append(-s if c > 0 else s)
        elif isinstance(a, Eq):
            e = -s if c > 0 else s
            lower.append(e - ONE)
            upper.append(e + ONE)
        else:
            period = math.lcm(period, a.m)
    lower, upper = list(dict.fromkeys(lower)), list(dict.fromkeys(upper))

    use_lower = len(lower) <= len(upper)

    def at_infinity(a):
        t = _atom_term(a)
        c = t.coeff(x)
        if not c or isinstance(a, Cong):
            return a
        if isinstance(a, Eq):
            return FALSE
        # 0 < x + s is false at -inf, 0 < -x + s is true there
        return TRUE if (c > 0) != use_lower else FALSE

    F_inf = _map_atoms(F1, at_infinity)
    out = []
    for j in range(1, period + 1):
        shift = LinearTerm.constant(j if use_lower else -j)
        out.append(nnf(substitute_term(F_inf, x, shift), model))
        if isinstance(out[-1], Top):
            return TRUE
    for b in lower if use_lower else upper:
        for j in range(1, period + 1):
            shift = LinearTerm.constant(j if use_lower else -j)
            out.append(nnf(substitute_term(F1, x, b + shift), model))
            if isinstance(out[-1], Top):
                return TRUE
    return _or(out)


# ---------------------------------------------------------------- dense simplification
# Over a dense model an order or equality literal only constrains the sign of
# one term, so literals on the same term merge into a subset of {-1, 0, 1}.

_ALL_SIGNS = frozenset((-1, 0, 1))


def _sign_literal(a: Formula):
    if not isinstance(a, (Lt, Eq)):
        return None
    t = _atom_term(a)
    if t.is_ground():
        return None
    g = _gcd_coeffs(t)
    key = _divide(t, g, t.const / g)
    flip = key.coeffs[0][1] < 0
    if flip:
        key = -key
    if isinstance(a, Eq):
        return key, frozenset((0,))
    return key, frozenset((-1,) if flip else (1,))


def _from_signs(key: LinearTerm, signs) -> Formula:
    parts = []
    if 1 in signs:
        parts.append(Lt(ZERO, key))
    if 0 in signs:
        parts.append(Eq(key, ZERO))
    if -1 in signs:
        parts.append(Lt(ZERO, -key))
    return _or(parts)


class _Flat:
    """A clause (conj=False) or conjunction (conj=True) of sign literals and opaque atoms."""

    def __init__(self, conj: bool):
        self.conj = conj
        self.signs: dict = {}
        self.opaque: set = set()

    def add(self, key, signs):
        old = self.signs.get(key)
        self.signs[key] = signs if old is None else (old & signs if self.conj else old | signs)

    @classmethod
    def of(cls, f: Formula, conj: bool):
        if not isinstance(f, And if conj else Or):
            return None
        out = cls(conj)
        for a in f.args:
            s = _sign_literal(a)
            if s:
                out.add(*s)
            elif isinstance(a, (Cong, Not)):
                out.opaque.add(a)
            else:
                return None
        return out

    def trivial(self):
        """TRUE/FALSE when the whole clause or conjunction collapses, else None."""
        if self.conj and any(not v for v in self.signs.values()):
            return FALSE
        if not self.conj and any(v == _ALL_SIGNS for v in self.signs.values()):
            return TRUE
        return None

    def implies_or_implied(self, other) -> bool:
        """Whether self makes other redundant inside the surrounding connective."""
        if not self.opaque <= other.opaque or not self.signs.keys() <= other.signs.keys():
            return False
        if self.conj:
            return all(other.signs[k] <= v for k, v in self.signs.items())
        return all(v <= other.signs[k] for k, v in self.signs.items())

    def formula(self) -> Formula:
        parts = [_from_signs(k, v) for k, v in self.signs.items()] + sorted(self.opaque, key=str)
        return (_and if self.conj else _or)(parts)


def simplify_dense(f: Formula) -> Formula:
    """Merge, propagate and subsume sign literals; only sound in a dense model."""
    if isinstance(f, (And, Or)):
        conj = isinstance(f, And)
        kids = [simplify_dense(a) for a in f.args]
        return _simplify_level((_and if conj else _or)(kids), conj)
    return f


def _simplify_level(f: Formula, conj: bool) -> Formula:
    if not isinstance(f, And if conj else Or):
        return f
    top = _Flat(conj)
    kids, raw = [], []
    for a in f.args:
        s = _sign_literal(a)
        if s:
            top.add(*s)
            continue
        k = _Flat.of(a, not conj)
        (kids if k is not None else raw).append(k if k is not None else a)
    changed = True
    while changed:
        changed = False
        if top.trivial() is not None:
            return top.trivial()
        keep = []
        for k in kids:
            for key, v in top.signs.items():
                if key not in k.signs:
                    continue
                w = k.signs[key]
                # in a conjunction a clause already satisfied by the literal is dropped;
                # dually in a disjunction a conjunction already covered is dropped
                if (conj and v <= w) or (not conj and w <= v):
                    k = None
                    break
                k.signs[key] = (w & v) if conj else (w - v)
                if not k.signs[key]:
                    del k.signs[key]
            if k is None:
                continue
            if not k.signs and not k.opaque:
                return FALSE if conj else TRUE
            if not k.opaque and len(k.signs) == 1:
                top.add(*next(iter(k.signs.items())))
                changed = True
                continue
            if k.trivial() is not None:
                if (k.trivial() is TRUE) == conj:
                    continue
                return k.trivial()
            keep.append(k)
        kids = keep
    kids = [k for i, k in enumerate(kids)
            if not any(j != i and o.implies_or_implied(k) and (not k.implies_or_implied(o) or j < i)
                       for j, o in enumerate(kids))]
    parts = [_from_signs(k, v) for k, v in top.signs.items()] + [k.formula() for k in kids] + raw
    return (_and if conj else _or)(parts)


def _consistent(lits: list[Formula]) -> bool:
    seen = {}
    for a in lits:
        s = _sign_literal(a)
        if s:
            seen[s[0]] = seen.get(s[0], _ALL_SIGNS) & s[1]
            if not seen[s[0]]:
                return False
    return True


def _dnf(f: Formula) -> list[list[Formula]]:
    if isinstance(f, Or):
        return [c for a in f.args for c in _dnf(a)]
    if isinstance(f, And):
        acc = [[]]
        for a in f.args:
            acc = [c + d for c in acc for d in _dnf(a) if _consistent(c + d)]
        return acc
    if isinstance(f, Top):
        return [[]]
    if isinstance(f, Bottom):
        return []
    return [[f]]


def _dense_exists(x: str, F: Formula, model: GroundModel) -> Formula:
    out = _or(_dense_exists_conj(x, lits, model) for lits in _dnf(simplify_dense(F)))
    return simplify_dense(out)


def _dense_exists_conj(x: str, lits: list[Formula], model: GroundModel) -> Formula:
    rest = [a for a in lits if x not in free_vars(a)]
    mine = [a for a in lits if x in free_vars(a)]
    if not mine:
        return _and(rest)
    L = math.lcm(*(abs(_atom_term(a).coeff(x)) for a in mine))
    scaled = []
    for a in mine:
        t = _atom_term(a)
        c = t.coeff(x)
        k = L // abs(c)
        t = t.without(x).scale(k) + LinearTerm.var(x, 1 if c > 0 else -1)
        if isinstance(a, Lt):
            scaled.append(Lt(ZERO, t))
        elif isinstance(a, Eq):
            scaled.append(Eq(t, ZERO))
        else:
            scaled.append(Cong(a.m * k, t, ZERO))
    # x now stands for L*x, which ranges over LG
    if model.index(L) > 1:
        scaled.append(Cong(L, LinearTerm.var(x), ZERO))

    for a in scaled:
        if isinstance(a, Eq):
            c = a.lhs.coeff(x)
            e = -a.lhs.without(x) if c > 0 else a.lhs.without(x)
            return _and(rest + [nnf(substitute_term(b, x, e), model) for b in scaled])

    lows, ups, congs = [], [], []
    for a in scaled:
        t = _atom_term(a)
        c = t.coeff(x)
        s = t.without(x)
        if isinstance(a, Lt):
            (lows if c > 0 else ups).append(-s if c > 0 else s)
        else:
            congs.append((a.m, -s if c > 0 else s))
    out = list(rest)
    out += [mk_lt(u - l, model) for l in lows for u in ups]
    if congs:
        M = math.lcm(*(model.index(m) for m, _ in congs))
        out.append(
            _or(
                _and(mk_cong(m, LinearTerm.constant(r) - v, model) for m, v in congs)
                for r in range(M)
            )
        )
    return _and(out)


def prettify(f: Formula) -> Formula:
    """Rewrite normalized atoms ``0 < t`` etc. with both sides sign-positive."""

    def split(t: LinearTerm):
        pos = LinearTerm.make({v: c for v, c in t.coeffs if c > 0})
        neg = LinearTerm.make({v: -c for v, c in t.coeffs if c < 0})
        c = LinearTerm.constant(t.const)
        if not neg.coeffs:
            return -c, pos
        if not pos.coeffs or t.const > 0:
            return neg, pos + c
        return neg - c, pos

    def fix(a):
        if isinstance(a, Lt) and a.lhs == ZERO:
            return Lt(*split(a.rhs))
        if isinstance(a, Eq) and a.rhs == ZERO:
            lhs, rhs = split(a.lhs)
            return Eq(rhs, lhs) if rhs.coeffs and not lhs.coeffs else Eq(lhs, rhs)
        if isinstance(a, Cong) and a.rhs == ZERO:
            lhs, rhs = split(a.lhs)
            return Cong(a.m, rhs, lhs) if rhs.coeffs and not lhs.coeffs else Cong(a.m, lhs, rhs)
        return a

    return _map_atoms(f, fix)


# ---------------------------------------------------------------- normal form extraction


@dataclass(frozen=True)
class IsolatedAtom:
    """``n*x REL t`` with n >= 1 and t free of x; REL is lt, gt, eq or cong."""

    rel: str
    n: int
    t: LinearTerm
    m: int = 0


def isolate(a: Formula, x: str) -> IsolatedAtom | bool:
    """Isolate x in an atom; atoms free of x collapse to their truth value if ground."""
    t = a.lhs - a.rhs  # atom reads t REL 0
    c = t.coeff(x)
    rest = -t.without(x)  # c*x REL rest
    if isinstance(a, Cong):
        if c < 0:
            c, rest = -c, -rest
        return IsolatedAtom("cong", c, rest, a.m)
    if isinstance(a, Eq):
        if c < 0:
            c, rest = -c, -rest
        return IsolatedAtom("eq", c, rest)
    # c*x < rest
    if c < 0:
        return IsolatedAtom("gt", -c, -rest)
    return IsolatedAtom("lt", c, rest)


def _atom_set(a: Formula, x: str, model: GroundModel) -> DefSet:
    iso = isolate(a, x)
    if iso.t.variables:
        raise ValueError(f"free variables other than {x!r}: {sorted(iso.t.variables)}")
    v = iso.t.const
    if iso.n == 0:
        if iso.rel == "lt":
            truth = 0 < v
        elif iso.rel == "gt":
            truth = 0 > v
        elif iso.rel == "eq":
            truth = v == 0
        else:
            truth = model.in_mG(v, iso.m)
        return DefSet.full(model) if truth else DefSet.empty(model)
    if iso.rel == "lt":
        return DefSet.interval(model, -INF, v / iso.n)
    if iso.rel == "gt":
        return DefSet.interval(model, v / iso.n, INF)
    if iso.rel == "eq":
        sol = v / iso.n
        return normalize([sol], model) if model.contains(sol) else DefSet.empty(model)
    # n*x ≡ v (mod mG): residue arithmetic in G/mG ≅ Z/k
    k = model.index(iso.m)
    rv = model.residue(v, iso.m)
    return normalize([(-INF, INF, r, k) for r in range(k) if (iso.n * r - rv) % k == 0], model)


def qfree_to_defset(f: Formula, x: str, model: GroundModel = Z) -> DefSet:
    """The normal form of the set defined by a quantifier-free formula in x."""
    extra = free_vars(f) - {x}
    if extra:
        raise ValueError(f"free variables other than {x!r}: {sorted(extra)}")
    return _to_set(f, x, model)


def _to_set(f: Formula, x: str, model: GroundModel) -> DefSet:
    if isinstance(f, (Lt, Eq, Cong)):
        return _atom_set(f, x, model)
    if isinstance(f, Top):
        return DefSet.full(model)
    if isinstance(f, Bottom):
        return DefSet.empty(model)
    if isinstance(f, Not):
        return boolean_op("complement", _to_set(f.arg, x, model))
    if isinstance(f, And):
        sets = sorted((_to_set(a, x, model) for a in f.args), key=_size)
        return reduce(lambda a, b: boolean_op("intersect", a, b), sets)
    if isinstance(f, Or):
        sets = [_to_set(a, x, model) for a in f.args]
        return reduce(lambda a, b: boolean_op("union", a, b), sets)
    if isinstance(f, Implies):
        return _to_set(Or((Not(f.lhs), f.rhs)), x, model)
    if isinstance(f, Iff):
        a, b = _to_set(f.lhs, x, model), _to_set(f.rhs, x, model)
        return boolean_op("complement", boolean_op("xor", a, b))
    raise ValueError("quantifier in qfree_to_defset; eliminate quantifiers first")


def _size(D: DefSet):
    return (not D.is_finite(), len(D.singletons) + len(D.components))


def formula_to_defset(
    f: Formula, x: str, params: Mapping[str, object] | None = None, model: GroundModel = Z
) -> DefSet:
    """Bind parameters, eliminate quantifiers, and extract the normal form in x."""
    if params:
        f = substitute_params(f, params, model)
    return qfree_to_defset(eliminate_quantifiers(f, model), x, model)
