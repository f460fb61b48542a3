"""Unary definable sets in normal form.

A ``DefSet`` is a finite set of points together with finitely many
components ``(lo, hi) ∩ (mG + r)``: an open interval with extended-rational
endpoints intersected with a coset of mG.  One modulus m serves every
component.  Residues are integers in ``range(m)``; in dense models the stored
modulus is the index [G : mG], so it is 1 over Q and prime to p over Z[1/p].

Canonical form, per residue r (the "fiber" of the set in mG + r):

* discrete: the fiber is a union of integer ranges in the coordinate
  k (element r + m*k); bounded ranges are finite over Z and become points,
  unbounded ones become components with tight integer endpoints.
* dense: intervals are merged when they overlap, or when they touch at a
  point that is outside the coset or is itself a point of the set; points
  inside a component are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .model import INF, GroundModel, Z, format_ext, parse_ext

# demoting a bounded discrete component enumerates it; refuse absurd sizes
MAX_DEMOTED_POINTS = 2_000_000


@dataclass(frozen=True, order=True)
class Component:
    residue: int
    lo: Fraction | float
    hi: Fraction | float

    def __contains__(self, g) -> bool:
        return self.lo < g < self.hi


def _ext(v):
    if v == INF or v == -INF:
        return float(v)
    return Fraction(v)


def _rep(u, v):
    """A rational strictly inside the open cell (u, v)."""
    if u == -INF and v == INF:
        return Fraction(0)
    if u == -INF:
        return v - 1
    if v == INF:
        return u + 1
    return (u + v) / 2


class DefSet:
    """A canonical unary definable set.  Instances are immutable."""

    __slots__ = ("model", "modulus", "singletons", "components", "_fibers")

    def __init__(self, model: GroundModel, modulus: int, singletons=(), components=()):
        # callers outside this module should go through normalize()/from_fibers()
        self.model = model
        self.modulus = modulus
        self.singletons = tuple(singletons)
        self.components = tuple(components)
        self._fibers = None

    # ---------------------------------------------------------------- construction

    @classmethod
    def empty(cls, model: GroundModel = Z) -> "DefSet":
        return cls(model, 1)

    @classmethod
    def full(cls, model: GroundModel = Z) -> "DefSet":
        return cls(model, 1, (), (Component(0, -INF, INF),))

    @classmethod
    def interval(cls, model: GroundModel, lo, hi) -> "DefSet":
        return cls.from_fibers(model, 1, {0: ([(_ext(lo), _ext(hi))], [])})

    @classmethod
    def coset(cls, model: GroundModel, m: int, g=0) -> "DefSet":
        k = model.index(m)
        return cls.from_fibers(model, k, {model.residue(g, m): ([(-INF, INF)], [])})

    @classmethod
    def points(cls, model: GroundModel, pts: Iterable) -> "DefSet":
        return normalize(list(pts), model)

    @classmethod
    def from_fibers(cls, model: GroundModel, modulus: int, fibers) -> "DefSet":
        """Build from raw fibers ``{residue: (intervals, points)}``, canonicalizing each."""
        canon = {}
        for r, (ivs, pts) in fibers.items():
            fib = _canon_fiber(model, modulus, r, ivs, pts)
            if fib[0] or fib[1]:
                canon[r] = fib
        modulus, canon = _coarsen(model, modulus, canon)
        singletons, comps = [], []
        for r in sorted(canon):
            ivs, pts = canon[r]
            comps.extend(Component(r, lo, hi) for lo, hi in ivs)
            singletons.extend(pts)
        if not comps:
            # only points left: the modulus carries no information
            modulus = 1
        return cls(model, modulus, sorted(set(singletons)), sorted(comps))

    # ---------------------------------------------------------------- queries

    def fibers(self) -> dict[int, tuple[list, list]]:
        if self._fibers is None:
            fib: dict[int, tuple[list, list]] = {}
            for c in self.components:
                fib.setdefault(c.residue, ([], []))[0].append((c.lo, c.hi))
            for s in self.singletons:
                fib.setdefault(self.model.residue(s, self.modulus), ([], []))[1].append(s)
            self._fibers = fib
        return self._fibers

    def fiber(self, r: int) -> tuple[list, list]:
        return self.fibers().get(r % self.modulus, ([], []))

    def __contains__(self, g) -> bool:
        return member(self, g)

    def is_empty(self) -> bool:
        return not self.singletons and not self.components

    def is_full(self) -> bool:
        return boolean_op("complement", self).is_empty()

    def is_finite(self) -> bool:
        return not self.components

    def bounded_below(self) -> bool:
        return all(c.lo != -INF for c in self.components)

    def bounded_above(self) -> bool:
        return all(c.hi != INF for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, DefSet):
            return NotImplemented
        return self.model == other.model and boolean_op("xor", self, other).is_empty()

    __hash__ = None

    def __or__(self, other):
        return boolean_op("union", self, other)

    def __and__(self, other):
        return boolean_op("intersect", self, other)

    def __sub__(self, other):
        return boolean_op("difference", self, other)

    def __invert__(self):
        return boolean_op("complement", self)

    def invariant_violations(self) -> list[str]:
        """Structural problems with this instance; empty for canonical sets."""
        bad = []
        m, model = self.modulus, self.model
        if m < 1 or (not model.is_discrete and model.index(m) != m):
            bad.append(f"modulus {m} is not an index of {model.name}")
        prev = None
        for c in self.components:
            if not 0 <= c.residue < m:
                bad.append(f"residue {c.residue} outside range({m})")
            if not c.lo < c.hi:
                bad.append(f"empty interval ({c.lo}, {c.hi})")
            for e in (c.lo, c.hi):
                if e not in (INF, -INF) and not isinstance(e, Fraction):
                    bad.append(f"endpoint {e!r} is not rational")
            if model.is_discrete and c.lo != -INF and c.hi != INF:
                bad.append(f"bounded component ({c.lo}, {c.hi}) should be points")
            if prev is not None and prev.residue == c.residue and not prev.hi < c.lo:
                # a shared open endpoint is a genuine gap unless it could be merged away
                gap = model.is_discrete or (_in_coset(model, m, c.residue, c.lo) and c.lo not in self.singletons)
                if not (prev.hi == c.lo and gap):
                    bad.append(f"components {prev} and {c} overlap or touch")
            prev = c
        for s in self.singletons:
            if not model.contains(s):
                bad.append(f"point {s} outside {model.name}")
            if any(s in c and _in_coset(model, m, c.residue, s) for c in self.components):
                bad.append(f"point {s} lies inside a component")
        if list(self.singletons) != sorted(set(self.singletons)):
            bad.append("points are not sorted and distinct")
        if list(self.components) != sorted(self.components):
            bad.append("components are not sorted")
        return bad

    def __repr__(self):
        return f"DefSet({self.describe()})"

    def describe(self) -> str:
        parts = [f"{{{', '.join(map(str, self.singletons))}}}"] if self.singletons else []
        for c in self.components:
            iv = f"({format_ext(c.lo)}, {format_ext(c.hi)})"
            parts.append(iv if self.modulus == 1 else f"{iv}∩({self.modulus}G+{c.residue})")
        return " ∪ ".join(parts) if parts else "∅"

    # ---------------------------------------------------------------- serialization

    def to_dict(self) -> dict:
        return {
            "mode": self.model.name,
            "modulus": self.modulus,
            "singletons": [str(s) for s in self.singletons],
            "components": [
                {"lo": format_ext(c.lo), "hi": format_ext(c.hi), "residue": c.residue}
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DefSet":
        missing = {"mode", "modulus"} - set(data)
        if missing:
            raise ValueError(f"normal form JSON lacks {sorted(missing)}")
        model = GroundModel.parse(data["mode"])
        m = int(data["modulus"])
        pieces: list = [model.element(Fraction(s)) for s in data.get("singletons", [])]
        for c in data.get("components", []):
            pieces.append((parse_ext(c["lo"]), parse_ext(c["hi"]), int(c["residue"]), m))
        return normalize(pieces, model)

    def to_formula(self, term):
        """A quantifier-free formula whose solution set in ``term`` is this set."""
        from .formula import FALSE, Cong, Eq, LinearTerm, Lt, conj, disj

        if isinstance(term, str):
            term = LinearTerm.var(term)
        disjuncts = [Eq(term, LinearTerm.constant(s)) for s in self.singletons]
        for c in self.components:
            parts = []
            if c.lo != -INF:
                lo = Fraction(c.lo)
                parts.append(Lt(LinearTerm.constant(lo.numerator), term.scale(lo.denominator)))
            if c.hi != INF:
                hi = Fraction(c.hi)
                parts.append(Lt(term.scale(hi.denominator), LinearTerm.constant(hi.numerator)))
            if self.modulus > 1:
                parts.append(Cong(self.modulus, term, LinearTerm.constant(c.residue)))
            disjuncts.append(conj(*parts))
        return disj(*disjuncts) if disjuncts else FALSE


# -------------------------------------------------------------------- fibers


def _in_coset(model: GroundModel, modulus: int, r: int, g) -> bool:
    return model.contains(g) and model.residue(g, modulus) == r


def _canon_fiber(model, modulus, r, ivs, pts):
    if model.is_discrete:
        return _canon_discrete(modulus, r, ivs, pts)
    return _canon_dense(model, modulus, r, ivs, pts)


def _canon_discrete(m, r, ivs, pts):
    ranges = []
    for lo, hi in ivs:
        if not lo < hi:
            continue
        kmin = -INF if lo == -INF else math.floor(Fraction(lo - r) / m) + 1
        kmax = INF if hi == INF else math.ceil(Fraction(hi - r) / m) - 1
        if kmin <= kmax:
            ranges.append((kmin, kmax))
    for p in pts:
        p = Fraction(p)
        if p.denominator == 1 and (p.numerator - r) % m == 0:
            k = (p.numerator - r) // m
            ranges.append((k, k))
    ranges.sort()
    merged = []
    for a, b in ranges:
        if merged and a <= merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    out_ivs, out_pts = [], []
    for a, b in merged:
        if a == -INF or b == INF:
            lo = -INF if a == -INF else Fraction(r + m * a - 1)
            hi = INF if b == INF else Fraction(r + m * b + 1)
            out_ivs.append((lo, hi))
        else:
            if b - a >= MAX_DEMOTED_POINTS:
                raise OverflowError(f"bounded component with {b - a + 1} points is too large to enumerate")
            out_pts.extend(Fraction(r + m * k) for k in range(a, b + 1))
    return out_ivs, out_pts


def _canon_dense(model, m, r, ivs, pts):
    pts = {Fraction(p) for p in pts if _in_coset(model, m, r, p)}
    merged = []
    for lo, hi in sorted((_ext(lo), _ext(hi)) for lo, hi in ivs):
        if not lo < hi:
            continue
        if merged:
            plo, phi = merged[-1]
            if lo < phi or (lo == phi and (lo in pts or not _in_coset(model, m, r, lo))):
                merged[-1] = (plo, max(phi, hi))
                continue
        merged.append((lo, hi))
    pts = sorted(p for p in pts if not any(lo < p < hi for lo, hi in merged))
    return merged, pts


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _merged_class(canon, m, d, s):
    ivs, pts = [], []
    for r in range(s, m, d):
        if r in canon:
            ivs.extend(canon[r][0])
            pts.extend(canon[r][1])
    return ivs, pts


def _coarsen(model, m, canon):
    """Drop prime factors of the modulus that the set does not depend on."""
    if not any(fib[0] for fib in canon.values()):
        return m, canon
    changed = True
    while changed and m > 1:
        changed = False
        for q in _prime_factors(m):
            d = m // q
            ok = True
            for s in range(d):
                ivs, pts = _merged_class(canon, m, d, s)
                if not ivs and not pts:
                    continue
                for r in range(s, m, d):
                    if _canon_fiber(model, m, r, ivs, pts) != canon.get(r, ([], [])):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                new = {}
                for s in range(d):
                    fib = _canon_fiber(model, d, s, *_merged_class(canon, m, d, s))
                    if fib[0] or fib[1]:
                        new[s] = fib
                m, canon, changed = d, new, True
                break
    return m, canon


def _fiber_in(fiber, g) -> bool:
    ivs, pts = fiber
    return g in pts or any(lo < g < hi for lo, hi in ivs)


def _combine(op: Callable[..., bool], fibers: Sequence[tuple[list, list]]):
    """Pointwise Boolean combination of fibers living in the same coset.

    Every operand is constant on each open cell cut out by the union of all
    breakpoints, so evaluating one representative per cell is exact.
    """
    bps = set()
    for ivs, pts in fibers:
        bps.update(pts)
        for lo, hi in ivs:
            if lo != -INF:
                bps.add(lo)
            if hi != INF:
                bps.add(hi)
    bps = sorted(bps)
    bounds = [-INF, *bps, INF]
    ivs_out, pts_out = [], []
    for u, v in zip(bounds, bounds[1:]):
        rep = _rep(u, v)
        if op(*(any(lo < rep < hi for lo, hi in f[0]) for f in fibers)):
            ivs_out.append((u, v))
    for p in bps:
        if op(*(_fiber_in(f, p) for f in fibers)):
            pts_out.append(p)
    return ivs_out, pts_out


# -------------------------------------------------------------------- operations


def normalize(raw: Iterable, model: GroundModel = Z) -> DefSet:
    """Normal form of a union of pieces.

    Each piece is either a group element (a singleton) or a tuple
    ``(lo, hi, g, m)`` standing for the open interval (lo, hi) intersected
    with the coset mG + g.
    """
    singles, comps = [], []
    for piece in raw:
        if isinstance(piece, tuple):
            lo, hi, g, m = piece
            if m < 1:
                raise ValueError(f"local modulus must be positive, got {m}")
            comps.append((_ext(lo), _ext(hi), model.residue(g, m), model.index(m)))
        else:
            singles.append(model.element(piece))
    L = math.lcm(1, *(k for *_, k in comps))
    fibers: dict[int, tuple[list, list]] = {}
    for lo, hi, r, k in comps:
        for j in range(L // k):
            fibers.setdefault(r + k * j, ([], []))[0].append((lo, hi))
    for s in singles:
        fibers.setdefault(model.residue(s, L), ([], []))[1].append(s)
    return DefSet.from_fibers(model, L, fibers)


def member(D: DefSet, g) -> bool:
    g = Fraction(g)
    if not D.model.contains(g):
        return False
    if g in D.singletons:
        return True
    lo_hi = D.fiber(D.model.residue(g, D.modulus))[0]
    return any(lo < g < hi for lo, hi in lo_hi)


_BOOL_OPS = {
    "union": lambda a, b: a or b,
    "intersect": lambda a, b: a and b,
    "difference": lambda a, b: a and not b,
    "xor": lambda a, b: a != b,
}


def boolean_op(op: str, D1: DefSet, D2: DefSet | None = None) -> DefSet:
    """Union, intersect, difference, xor, or complement (unary)."""
    model = D1.model
    if op == "complement":
        if D2 is not None:
            raise ValueError("complement takes one operand")
        m = D1.modulus
        fibers = {r: _combine(lambda a: not a, [D1.fiber(r)]) for r in range(m)}
        return DefSet.from_fibers(model, m, fibers)
    if op not in _BOOL_OPS:
        raise ValueError(f"unknown Boolean operation {op!r}")
    if D2 is None:
        raise ValueError(f"{op} takes two operands")
    if D2.model != model:
        raise ValueError("operands live in different ground models")
    fn = _BOOL_OPS[op]
    L = math.lcm(D1.modulus, D2.modulus)

    def lifted(D):
        out = set()
        for r in D.fibers():
            out.update(range(r, L, D.modulus))
        return out

    s1, s2 = lifted(D1), lifted(D2)
    if fn(True, True) and not fn(True, False) and not fn(False, True):
        residues = s1 & s2
    elif fn(True, False) and not fn(False, True):
        residues = s1
    else:
        residues = s1 | s2
    fibers = {}
    for r in sorted(residues):
        f1, f2 = D1.fiber(r % D1.modulus), D2.fiber(r % D2.modulus)
        fibers[r] = _combine(fn, [f1, f2])
    return DefSet.from_fibers(model, L, fibers)


def affine_op(op: str, D: DefSet, arg=None) -> DefSet:
    """translate(g): D + g; reflect: -D; divide(n): {a : na in D}; scale(n): nD."""
    model, m = D.model, D.modulus
    pieces: list = []
    if op == "translate":
        g = model.element(arg)
        pieces += [s + g for s in D.singletons]
        pieces += [(c.lo + g, c.hi + g, c.residue + g, m) for c in D.components]
    elif op == "reflect":
        pieces += [-s for s in D.singletons]
        pieces += [(-c.hi, -c.lo, -c.residue, m) for c in D.components]
    elif op == "divide":
        n = _positive(arg)
        pieces += [s / n for s in D.singletons if model.contains(s / n)]
        for c in D.components:
            # n*a ≡ r (mod mG) is solved by a coset of (m/gcd(n, m))G, or not at all
            k = math.gcd(n, m)
            if c.residue % k:
                continue
            sols = [a for a in range(m // k) if (n * a - c.residue) % m == 0]
            if sols:
                pieces.append((c.lo / n, c.hi / n, sols[0], m // k))
    elif op == "scale":
        n = _positive(arg)
        pieces += [s * n for s in D.singletons]
        pieces += [(c.lo * n, c.hi * n, n * c.residue, n * m) for c in D.components]
    else:
        raise ValueError(f"unknown affine operation {op!r}")
    return normalize(pieces, model)


def _positive(n) -> int:
    n = int(n)
    if n < 1:
        raise ValueError(f"expected a positive integer, got {n}")
    return n


# -------------------------------------------------------------------- group definability


@dataclass(frozen=True)
class Verdict:
    """Outcome of the group-definability test.

    On yes: the set equals the union of the cosets ``period*G + r`` for
    ``r in core``, plus ``added``, minus ``removed``.  On no:
    ``witness_residue`` names a coset whose fiber is infinite and co-infinite
    and ``witness_end`` an end ("+inf" or "-inf") where the fiber is
    unbounded, if any.
    """

    definable: bool
    period: int
    core: tuple[int, ...] = ()
    added: tuple[Fraction, ...] = ()
    removed: tuple[Fraction, ...] = ()
    witness_residue: int | None = None
    witness_end: str | None = None

    def __bool__(self):
        return self.definable

    def to_dict(self) -> dict:
        if self.definable:
            return {
                "group_definable": True,
                "period": self.period,
                "core": list(self.core),
                "added": [str(a) for a in self.added],
                "removed": [str(a) for a in self.removed],
            }
        return {
            "group_definable": False,
            "period": self.period,
            "witness_residue": self.witness_residue,
            "witness_end": self.witness_end,
        }


def _cofinite_gaps(D: DefSet, r: int):
    """Missing coset points if the fiber at r is cofinite in its coset, else None."""
    ivs, pts = D.fiber(r)
    if not ivs or ivs[0][0] != -INF or ivs[-1][1] != INF:
        return None
    model, m = D.model, D.modulus
    missing = []
    for (lo1, hi1), (lo2, hi2) in zip(ivs, ivs[1:]):
        if model.is_discrete:
            # tight endpoints: coset points strictly between hi1 - 1 and lo2 + 1
            k = int(hi1 - 1 - r) // m + 1
            last = int(lo2 + 1 - r) // m
            missing.extend(Fraction(r + m * j) for j in range(k, last))
        else:
            if hi1 != lo2:
                return None
            missing.append(hi1)
    return [g for g in missing if g not in pts]


def is_group_definable(D: DefSet) -> Verdict:
    m = D.modulus
    core, added, removed = [], [], []
    for r in range(m):
        ivs, pts = D.fiber(r)
        if not ivs:
            added.extend(pts)
            continue
        gaps = _cofinite_gaps(D, r)
        if gaps is None:
            end = "+inf" if any(hi == INF for _, hi in ivs) else ("-inf" if ivs[0][0] == -INF else None)
            return Verdict(False, m, witness_residue=r, witness_end=end)
        core.append(r)
        removed.extend(gaps)
    return Verdict(True, m, tuple(core), tuple(sorted(added)), tuple(sorted(removed)))


# -------------------------------------------------------------------- witnesses


def height(g: Fraction) -> int:
    g = Fraction(g)
    return max(abs(g.numerator), g.denominator)


def _all_denominators(model: GroundModel):
    if model.is_discrete:
        yield 1
        return
    q = 1
    while True:
        yield q
        q = q + 1 if model.prime is None else q * model.prime


def _best_numerator(lo, hi, q: int, pred, cap: int):
    """Least-height p with p/q in (lo, hi), in lowest terms and satisfying pred; smaller value on ties."""
    a = -math.inf if lo == -INF else math.floor(lo * q) + 1
    b = math.inf if hi == INF else math.ceil(hi * q) - 1

    def ok(p):
        return math.gcd(p, q) == 1 and (pred is None or pred(Fraction(p, q)))

    # every |p| <= q has height q, so the smallest such value wins
    p = max(a, -q)
    while p <= min(b, q):
        if ok(p):
            return p
        p += 1
    k = max(q + 1, min(a if a > 0 else math.inf, -b if b < 0 else math.inf))
    if k == math.inf:
        k = q + 1
    while k <= cap:
        if a <= -k <= b and ok(-k):
            return -k
        if a <= k <= b and ok(k):
            return k
        if k > b and -k < a:
            return None
        k += 1
    return None


def min_height_element(model: GroundModel, lo, hi, pred=None, max_height: int = 10**7):
    """The element of G in (lo, hi) of least height satisfying ``pred``.

    Height of p/q (lowest terms) is max(|p|, q); ties go to the smaller value.
    Raises ``LookupError`` if nothing is found below ``max_height``.
    """
    lo, hi = _ext(lo), _ext(hi)
    dist = lo if lo > 0 else (-hi if hi < 0 else 0)
    best = None
    for q in _all_denominators(model):
        # no numerator over q can beat this height
        floor_h = max(q, math.floor(dist * q) + 1 if dist > 0 else 0)
        cap = max_height if best is None else best[0]
        if floor_h > cap:
            break
        p = _best_numerator(lo, hi, q, pred, cap)
        if p is not None:
            cand = (max(abs(p), q), Fraction(p, q))
            best = cand if best is None or cand < best else best
        if model.is_discrete:
            break
    if best is None:
        raise LookupError(f"no element of ({format_ext(lo)}, {format_ext(hi)}) below height {max_height}")
    return best[1]


def coset_witness(model: GroundModel, lo, hi, m: int, g=0) -> Fraction:
    """An explicit element of (lo, hi) ∩ (mG + g), found by height search."""
    g = model.element(g)
    return min_height_element(model, lo, hi, lambda x: model.in_mG(x - g, m))
