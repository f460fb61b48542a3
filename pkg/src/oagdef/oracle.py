"""Brute-force semantics on finite windows.

Nothing here imports the elimination or normal-form code: formulas are
evaluated straight from the syntax tree on numpy truth tables, with
quantifiers searched over a widened window.  Results are window-relative,
not proofs about the infinite model.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .formula import (
    And,
    Bottom,
    Cong,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Lt,
    Not,
    Or,
    Top,
    free_vars,
    quantifier_depth,
    substitute_params,
)
from .model import GroundModel, Z

WINDOW_NOTE = "verified on a finite window only; agreement is window-relative, not absolute"

# cells in any intermediate truth table
DEFAULT_BUDGET = 60_000_000


class OracleBudgetError(RuntimeError):
    """The quantifier search would need more cells than the configured budget."""


@dataclass(frozen=True)
class Window:
    """A finite, symmetric carrier containing 0.

    Discrete: the integers in [-N, N].  Dense: the elements of height at most
    H in [-B, B].  Quantifiers at nesting level k range over the same kind of
    set widened by k*margin (and, in the dense case, with height bound
    ``qheight``, default 2H).  Setting ``qden`` instead lets quantified
    values be every fraction whose denominator divides ``qden``; when the
    query points and constants have denominators dividing qden/2 this set is
    closed under the shifts and midpoints that witnesses need.
    """

    model: GroundModel = Z
    N: int = 1000
    H: int = 64
    B: Fraction = Fraction(100)
    margin: int = 200
    qheight: int | None = None
    qden: int | None = None

    @classmethod
    def discrete(cls, N: int = 1000, margin: int = 200) -> "Window":
        return cls(Z, N=N, margin=margin)

    @classmethod
    def dense(cls, model: GroundModel, H: int = 64, B=100, margin: int = 200, qheight=None,
              qden=None) -> "Window":
        return cls(model, H=H, B=Fraction(B), margin=margin, qheight=qheight, qden=qden)

    def points(self) -> list[Fraction]:
        if self.model.is_discrete:
            return [Fraction(k) for k in range(-self.N, self.N + 1)]
        return _dense_points(self.model, self.H, Fraction(self.B))

    def domain(self, level: int) -> list[Fraction]:
        """Search space for a quantifier at nesting ``level`` (1 = outermost)."""
        if self.model.is_discrete:
            n = self.N + level * self.margin
            return [Fraction(k) for k in range(-n, n + 1)]
        bound = Fraction(self.B) + level * self.margin
        if self.qden:
            return _divisor_points(self.model, self.qden, bound)
        h = self.qheight or 2 * self.H
        return _dense_points(self.model, h * level, bound)

    def to_dict(self) -> dict:
        if self.model.is_discrete:
            return {"model": self.model.name, "N": self.N, "margin": self.margin}
        d = {"model": self.model.name, "H": self.H, "B": str(self.B), "margin": self.margin}
        if self.qden:
            d["qden"] = self.qden
        return d


def _divisor_points(model: GroundModel, L: int, B: Fraction) -> list[Fraction]:
    if model.prime is not None:
        r = L
        while r % model.prime == 0:
            r //= model.prime
        if r != 1:
            raise ValueError(f"qden must be a power of {model.prime} in {model.name}")
    # every p/q with q | L is k/L for an integer k
    top = math.floor(B * L)
    return [Fraction(k, L) for k in range(-top, top + 1)]


def _dense_points(model: GroundModel, H: int, B: Fraction) -> list[Fraction]:
    pts = set()
    for q in range(1, H + 1):
        if model.prime is not None:
            r = q
            while r % model.prime == 0:
                r //= model.prime
            if r != 1:
                continue
        top = min(H, math.floor(B * q))
        for p in range(-top, top + 1):
            if math.gcd(p, q) == 1:
                pts.add(Fraction(p, q))
    return sorted(pts)


# ---------------------------------------------------------------- vectorized evaluation


class _Tables:
    """Scaled integer encodings of variable domains, one axis per variable name."""

    def __init__(self, model: GroundModel, names: Sequence[str], budget: int):
        self.model = model
        self.axis = {v: i for i, v in enumerate(names)}
        self.ndim = len(names)
        self.budget = budget

    def encode(self, values: Sequence[Fraction], scale: int):
        ints = [int(v * scale) for v in values]
        big = max((abs(i) for i in ints), default=0) > 2**40
        return np.array(ints, dtype=object if big else np.int64)

    def along(self, v: str, arr):
        shape = [1] * self.ndim
        shape[self.axis[v]] = len(arr)
        return arr.reshape(shape)


def _scale_of(values_lists) -> int:
    return math.lcm(1, *(v.denominator for vals in values_lists for v in vals))


class _Evaluator:
    def __init__(self, f: Formula, model: GroundModel, domains: Mapping[str, Sequence[Fraction]],
                 quant_domain: Callable[[int], Sequence[Fraction]], budget: int):
        self.model = model
        self.free_order = list(domains)
        names = list(dict.fromkeys(self.free_order + sorted(_all_names(f))))
        self.T = _Tables(model, names, budget)
        self.quant_domain = quant_domain
        depth = quantifier_depth(f)
        qdoms = {k: list(quant_domain(k)) for k in range(1, depth + 1)}
        self.scale = _scale_of([*domains.values(), *qdoms.values()])
        self.qdoms = {k: self.T.encode(vals, self.scale) for k, vals in qdoms.items()}
        self.env = {v: self.T.along(v, self.T.encode(list(vals), self.scale)) for v, vals in domains.items()}
        self.sizes = {v: len(vals) for v, vals in domains.items()}
        self.budget = budget

    def run(self, f: Formula):
        return self._eval(f, 0)

    def _term(self, t, k_den: int):
        # returns (scale * k_den) * t as an array or int
        acc = int(t.const * self.scale * k_den)
        for v, c in t.coeffs:
            if v not in self.env:
                raise ValueError(f"unbound variable {v!r}")
            acc = acc + (c * k_den) * self.env[v]
        return acc

    def _atom_value(self, a):
        t = a.lhs - a.rhs
        k_den = t.const.denominator
        return self._term(t, k_den), k_den

    def _bool(self, value):
        return np.asarray(value, dtype=bool)

    def _eval(self, f: Formula, level: int):
        if isinstance(f, Top):
            return np.True_
        if isinstance(f, Bottom):
            return np.False_
        if isinstance(f, Lt):
            v, _ = self._atom_value(f)
            return self._bool(v < 0)
        if isinstance(f, Eq):
            v, _ = self._atom_value(f)
            return self._bool(v == 0)
        if isinstance(f, Cong):
            return self._cong(f)
        if isinstance(f, Not):
            return ~self._eval(f.arg, level)
        if isinstance(f, And):
            out = np.True_
            for a in f.args:
                out = out & self._eval(a, level)
            return out
        if isinstance(f, Or):
            out = np.False_
            for a in f.args:
                out = out | self._eval(a, level)
            return out
        if isinstance(f, Implies):
            return ~self._eval(f.lhs, level) | self._eval(f.rhs, level)
        if isinstance(f, Iff):
            return self._eval(f.lhs, level) == self._eval(f.rhs, level)
        if isinstance(f, (Exists, Forall)):
            return self._quant(f, level + 1)
        raise TypeError(f"not a formula: {f!r}")

    def _cong(self, f: Cong):
        model = self.model
        t = f.lhs - f.rhs
        if model.is_discrete:
            v, _ = self._atom_value(f)
            return self._bool(v % f.m == 0)
        if model.prime is None:
            return np.True_
        # value = K / (scale * den) with a p-power denominator; m' must divide K
        k = f.m
        while k % model.prime == 0:
            k //= model.prime
        if k == 1:
            return np.True_
        v, _ = self._atom_value(f)
        return self._bool(v % k == 0)

    def _quant(self, f, level: int):
        v = f.var
        saved = self.env.get(v)
        dom = self.qdoms[level]
        ax = self.T.axis[v]
        cells = len(dom) * math.prod(self.sizes[w] for w in free_vars(f.body) if w != v and w in self.sizes)
        if cells > self.budget:
            raise OracleBudgetError(f"quantifier search needs about {cells} cells (budget {self.budget})")
        self.env[v] = self.T.along(v, dom)
        saved_size = self.sizes.get(v)
        self.sizes[v] = len(dom)
        try:
            body = np.asarray(self._eval(f.body, level), dtype=bool)
            if body.ndim < self.T.ndim:
                body = body.reshape([1] * self.T.ndim)
            if body.shape[ax] == 1:
                res = body
            elif isinstance(f, Exists):
                res = body.any(axis=ax, keepdims=True)
            else:
                res = body.all(axis=ax, keepdims=True)
        finally:
            if saved is None:
                del self.env[v]
                del self.sizes[v]
            else:
                self.env[v] = saved
                self.sizes[v] = saved_size
        return res


def _all_names(f: Formula) -> set[str]:
    out = set(free_vars(f))
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Exists, Forall)):
            out.add(g.var)
            stack.append(g.body)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif isinstance(g, (Implies, Iff)):
            stack.extend((g.lhs, g.rhs))
    return out


def brute_table(f: Formula, domains: Mapping[str, Sequence], window: Window,
                budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Truth table of f with each free variable ranging over its domain.

    Axes follow the order of ``domains``; quantifiers use ``window.domain``.
    """
    domains = {v: [Fraction(g) for g in vals] for v, vals in domains.items()}
    missing = free_vars(f) - set(domains)
    if missing:
        raise ValueError(f"no domain for free variables {sorted(missing)}")
    ev = _Evaluator(f, window.model, domains, window.domain, budget)
    out = np.asarray(ev.run(f), dtype=bool)
    nd = ev.T.ndim
    if out.ndim < nd:
        out = out.reshape([1] * nd)
    # free variables own the leading axes; every other axis has been reduced to length 1
    full = [len(vals) for vals in domains.values()] + [1] * (nd - len(domains))
    out = np.broadcast_to(out, full)
    return out[(...,) + (0,) * (nd - len(domains))].copy()


@dataclass
class BruteResult:
    points: list[Fraction]
    mask: np.ndarray

    def members(self) -> list[Fraction]:
        return [g for g, m in zip(self.points, self.mask) if m]


def brute_window(f: Formula, window: Window, x: str | None = None,
                 params: Mapping[str, object] | None = None, budget: int = DEFAULT_BUDGET) -> BruteResult:
    """Membership of every window point in the set defined by f."""
    if params:
        f = substitute_params(f, params, window.model)
    fv = free_vars(f)
    if x is None:
        if len(fv) > 1:
            raise ValueError(f"expected one free variable, found {sorted(fv)}")
        x = next(iter(fv), "x")
    elif fv - {x}:
        raise ValueError(f"free variables other than {x!r}: {sorted(fv - {x})}")
    pts = window.points()
    return BruteResult(pts, brute_table(f, {x: pts}, window, budget))


# ---------------------------------------------------------------- reports


@dataclass
class Report:
    agree: bool
    counterexample: object = None
    counts: dict = field(default_factory=dict)
    runtime: float = 0.0
    window: dict = field(default_factory=dict)
    note: str = WINDOW_NOTE

    @property
    def verdict(self) -> str:
        return "agree" if self.agree else "disagree"

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "verdict": self.verdict,
            "counterexample": _jsonable(self.counterexample),
            "counts": self.counts,
            "window": self.window,
            "note": self.note,
        }
        if timing:
            out["runtime"] = round(self.runtime, 6)
        return out


def _jsonable(v):
    if v is None:
        return None
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _closest_to_zero(points: Sequence[Fraction]):
    return min(points, key=lambda g: (abs(g), g)) if points else None


def compare_report(f: Formula, D, window: Window, x: str | None = None,
                   params: Mapping[str, object] | None = None) -> Report:
    """Compare ``g in D`` with the brute truth of f at every window point.

    D only needs a ``__contains__``; the counterexample is the mismatch of least |g|.
    """
    t0 = time.perf_counter()
    res = brute_window(f, window, x, params)
    claimed = np.array([g in D for g in res.points], dtype=bool)
    bad = [g for g, a, b in zip(res.points, res.mask, claimed) if a != b]
    cex = _closest_to_zero(bad)
    counts = {
        "points": len(res.points),
        "brute_members": int(res.mask.sum()),
        "claimed_members": int(claimed.sum()),
        "mismatches": len(bad),
    }
    detail = None
    if cex is not None:
        detail = {"g": cex, "brute": bool(cex in res.members()), "claimed": bool(cex in D)}
    return Report(not bad, detail, counts, time.perf_counter() - t0, window.to_dict())


def qf_agreement(f: Formula, g: Formula, domains: Mapping[str, Sequence], window: Window) -> Report:
    """Compare two formulas (typically f and its elimination) on a grid of assignments."""
    t0 = time.perf_counter()
    a = brute_table(f, domains, window)
    b = brute_table(g, domains, window)
    bad = np.argwhere(a != b)
    names = list(domains)
    cex = None
    if len(bad):
        vals = [[Fraction(v) for v in domains[n]] for n in names]
        idx = min(bad.tolist(), key=lambda ix: (sum(abs(vals[k][i]) for k, i in enumerate(ix)), ix))
        cex = {n: vals[k][i] for k, (n, i) in enumerate(zip(names, idx))}
        cex["lhs"], cex["rhs"] = bool(a[tuple(idx)]), bool(b[tuple(idx)])
    counts = {"assignments": int(a.size), "mismatches": int(len(bad))}
    return Report(not len(bad), cex, counts, time.perf_counter() - t0, window.to_dict())


def periodicity_check(f: Formula, window: Window, period: int, core: Sequence[int],
                      added: Sequence = (), removed: Sequence = (), x: str | None = None,
                      params: Mapping[str, object] | None = None) -> Report:
    """Is the window trace of f equal to (union of period*G + r, r in core) + added - removed?"""
    t0 = time.perf_counter()
    model = window.model
    res = brute_window(f, window, x, params)
    added, removed, core = {Fraction(a) for a in added}, {Fraction(a) for a in removed}, set(core)

    def predicted(g):
        if g in added:
            return True
        if g in removed:
            return False
        return any(model.congruent(g, r, period) for r in core)

    bad = [g for g, m in zip(res.points, res.mask) if bool(m) != predicted(g)]
    cex = _closest_to_zero(bad)
    counts = {"points": len(res.points), "mismatches": len(bad)}
    return Report(not bad, None if cex is None else {"g": cex}, counts, time.perf_counter() - t0, window.to_dict())


def chi_truth(phi: Formula, x: str, z: str, bs: Sequence[int], cs: Sequence[int], window: Window) -> np.ndarray:
    """[b, c] -> b > 0 and {g in window : phi(g, c)} is exactly [0, b] ∩ window."""
    pts = window.points()
    tab = brute_table(phi, {x: pts, z: [Fraction(c) for c in cs]}, window)  # shape (len(pts), len(cs))
    arr = np.array([int(p) for p in pts])
    out = np.zeros((len(bs), len(cs)), dtype=bool)
    for j in range(len(cs)):
        col = tab[:, j]
        members = arr[col]
        if not len(members):
            continue
        lo, hi = members.min(), members.max()
        if lo != 0 or len(members) != hi - lo + 1:
            continue
        for i, b in enumerate(bs):
            out[i, j] = b > 0 and b == hi
    return out


def quotient_card_brute(gens: Sequence[Sequence], m: int, contains: Callable) -> int:
    """Count cosets of mG among combinations sum c_i g_i with 0 <= c_i < m."""
    gens = [tuple(Fraction(x) for x in g) for g in gens]
    if not gens:
        return 1
    d = len(gens[0])
    reps: list[tuple] = []
    for cs in itertools.product(range(m), repeat=len(gens)):
        v = tuple(sum(c * g[i] for c, g in zip(cs, gens)) for i in range(d))
        if not any(contains(tuple((a - b) / m for a, b in zip(v, w))) for w in reps):
            reps.append(v)
    return len(reps)
