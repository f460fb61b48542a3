"""Recovering the order from a unary set that the pure group cannot define.

``extract_interval`` turns a set that is not group-definable into an
infinite interval (0, b) using only Boolean combinations, translations,
reflection and division of the set itself.  ``classify`` runs the whole
pipeline from a formula.  ``build_chi``/``build_psi``/``build_theta`` are
the formula constructors used to pull such an interval back to a
parameter-free one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .defset import (
    DefSet,
    Verdict,
    affine_op,
    boolean_op,
    is_group_definable,
    member,
    min_height_element,
)
from .formula import (
    ONE,
    ZERO,
    And,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    LinearTerm,
    Lt,
    Not,
    ScopeError,
    all_vars,
    conj,
    free_vars,
    fresh_name,
    substitute_term,
)
from .model import INF, GroundModel, Z, format_ext
from .qe import formula_to_defset


class GroupDefinableInput(ValueError):
    """extract_interval was handed a set the pure group already defines."""


class InvariantViolation(AssertionError):
    """An internal step produced something the construction rules out."""


# what each step tag stands for, exported with the trace
JUSTIFICATION = {
    "remove-points": "finitely many points may be dropped without changing definability over (G,+)",
    "coset-restriction": "intersect with the first coset whose fiber is neither finite nor cofinite",
    "translate": "shift the chosen coset onto mG",
    "divide-by-m": "{a : ma in D} is interdefinable with D over (G,+)",
    "merge": "overlapping intervals are merged by the normal form",
    "complement-swap": "the complement, less finitely many points, is bounded below",
    "discrete-min": "move the minimum of the first interval to 1",
    "dense-midpoint": "E = (D - c) ∩ (-D + c) = (-d, d) for c left of the midpoint of the first interval",
    "final-intersection": "cut the interval (0, b) out of the current set",
}


@dataclass(frozen=True)
class Step:
    tag: str
    op: str
    args: tuple
    after: DefSet

    def to_dict(self) -> dict:
        return {
            "step_tag": self.tag,
            "justification": JUSTIFICATION[self.tag],
            "op": self.op,
            "args": [_arg_json(a) for a in self.args],
            "defset_after": self.after.to_dict(),
        }


def _arg_json(a):
    if isinstance(a, DefSet):
        return a.to_dict()
    return format_ext(a) if isinstance(a, (Fraction, float)) else a


def apply_op(op: str, D: DefSet, args: tuple) -> DefSet:
    """The primitive operations a trace may use."""
    if op in ("union", "intersect", "difference"):
        return boolean_op(op, D, args[0])
    if op == "complement":
        return boolean_op("complement", D)
    if op == "drop-points":
        return boolean_op("difference", D, DefSet.points(D.model, D.singletons))
    if op in ("translate", "divide"):
        return affine_op(op, D, args[0])
    if op == "identity":
        return D
    if op == "symmetrize":
        # (D + s) ∩ (-D + t)
        s, t = args
        return boolean_op(
            "intersect", affine_op("translate", D, s), affine_op("translate", affine_op("reflect", D), t)
        )
    if op == "shrink-family":
        return _shrink_family(D, args[0])
    raise ValueError(f"unknown trace operation {op!r}")


def _shrink_family(E: DefSet, e) -> DefSet:
    """{g != 0 in E : C_g strictly contains C_e} where C_g = E ∩ (E - g).

    E must be a single open interval (lo, hi) with lo < 0 < e < hi.  Then
    C_g = (lo + max(0, -g), hi - max(0, g)), and comparing endpoints with
    C_e = (lo, hi - e) leaves exactly 0 < g < e.
    """
    if E.singletons or len(E.components) != 1 or E.modulus != 1:
        raise InvariantViolation(f"expected a single interval, got {E}")
    (c,) = E.components
    if not (c.lo < 0 < e < c.hi):
        raise InvariantViolation(f"{e} does not lie in the right half of {E}")
    # C_g ⊇ C_e needs max(0,-g) <= 0 and max(0,g) <= e, i.e. 0 <= g <= e;
    # strictness drops g = e, and g = 0 is excluded by definition
    return boolean_op("intersect", E, DefSet.interval(E.model, 0, e))


@dataclass
class ExtractionTrace:
    source: DefSet
    steps: list[Step] = field(default_factory=list)

    def push(self, tag: str, op: str, *args) -> DefSet:
        current = self.steps[-1].after if self.steps else self.source
        after = apply_op(op, current, args)
        self.steps.append(Step(tag, op, args, after))
        return after

    @property
    def result(self) -> DefSet:
        return self.steps[-1].after if self.steps else self.source

    def replay(self, D: DefSet | None = None) -> DefSet:
        D = self.source if D is None else D
        for s in self.steps:
            D = apply_op(s.op, D, s.args)
        return D

    def tags(self) -> list[str]:
        return [s.tag for s in self.steps]

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.steps]


@dataclass
class IntervalResult:
    b: Fraction | float
    interval: DefSet
    trace: ExtractionTrace

    def to_dict(self) -> dict:
        return {"b": format_ext(self.b), "interval": self.interval.to_dict(), "trace": self.trace.to_list()}


def extract_interval(D: DefSet) -> IntervalResult:
    """Find an infinite interval (0, b) definable from D and +.

    Raises ``GroupDefinableInput`` when D is already group-definable.
    """
    verdict = is_group_definable(D)
    if verdict:
        raise GroupDefinableInput(f"{D} is definable in the pure group")
    model = D.model
    tr = ExtractionTrace(D)
    if D.singletons:
        tr.push("remove-points", "drop-points")
    r, m = verdict.witness_residue, D.modulus
    if m > 1:
        tr.push("coset-restriction", "intersect", DefSet.coset(model, m, r))
        if r:
            tr.push("translate", "translate", Fraction(-r))
        tr.push("divide-by-m", "divide", m)
    cur = tr.push("merge", "identity")
    if cur.singletons:
        cur = tr.push("remove-points", "drop-points")
    if not cur.bounded_below():
        tr.push("complement-swap", "complement")
        cur = tr.push("complement-swap", "drop-points")
    if not cur.components or cur.modulus != 1 or not cur.bounded_below():
        raise InvariantViolation(f"expected intervals bounded below, got {cur}")
    first = cur.components[0]
    if model.is_discrete:
        a = first.lo + 1
        cur = tr.push("discrete-min", "translate", 1 - a)
        first = cur.components[0]
        if first.hi == INF:
            b = INF
        else:
            b = first.hi - 1
            cur = tr.push("final-intersection", "symmetrize", Fraction(0), b)
    else:
        lo, hi = first.lo, first.hi
        c = min_height_element(model, lo, INF if hi == INF else (lo + hi) / 2)
        d = c - lo
        tr.push("dense-midpoint", "symmetrize", -c, c)
        b = min_height_element(model, 0, d)
        cur = tr.push("final-intersection", "shrink-family", b)
    result = IntervalResult(b, cur, tr)
    _check_interval(result)
    return result


def _check_interval(res: IntervalResult):
    I, b = res.interval, res.b
    if I != DefSet.interval(I.model, 0, b):
        raise InvariantViolation(f"extracted {I}, expected (0, {format_ext(b)})")
    if I.model.is_discrete and b != INF and b < 2:
        raise InvariantViolation(f"interval (0, {b}) is not infinite")


@dataclass(frozen=True)
class OrderRelation:
    """R(x1, x2) iff x2 - x1 lies in the extracted interval."""

    interval: IntervalResult

    def __call__(self, x1, x2) -> bool:
        return member(self.interval.interval, Fraction(x2) - Fraction(x1))

    def formula(self, x1: str = "x1", x2: str = "x2") -> Formula:
        return self.interval.interval.to_formula(LinearTerm.var(x2) - LinearTerm.var(x1))


def order_relation(I: IntervalResult) -> OrderRelation:
    return OrderRelation(I)


# -------------------------------------------------------------------- detector formulas


def _at(phi: Formula, x: str, term: LinearTerm) -> Formula:
    return substitute_term(phi, x, term)


def _fresh(name: str | None, default: str, taken) -> str:
    """An explicitly requested name must be unused; the default is renamed if taken."""
    if name is None:
        return fresh_name(default, taken)
    if name in taken:
        raise ScopeError(f"variable {name!r} already occurs in the formula")
    return name


def build_chi(phi: Formula, x: str = "x", y: str | None = None, w: str | None = None, model: GroundModel = Z) -> Formula:
    """χ(y, z): y > 0 and φ(G, z) is exactly [0, y].  Discrete model only.

    Every free variable of φ other than x plays the role of z.
    """
    if not model.is_discrete:
        raise ValueError("the interval detector needs the named element 1")
    taken = all_vars(phi)
    y = _fresh(y, "y", taken)
    w = _fresh(w, "w", taken | {y})
    Y, W = LinearTerm.var(y), LinearTerm.var(w)
    chi1 = conj(
        _at(phi, x, ZERO),
        _at(phi, x, Y),
        Not(_at(phi, x, -ONE)),
        Not(_at(phi, x, Y + ONE)),
        Not(_at(phi, x, Y.scale(2))),
    )
    chi2 = Forall(w, Implies(And((Not(Eq(W, ZERO)), _at(phi, x, W))), _at(phi, x, W - ONE)))
    chi3 = Forall(w, Implies(And((Not(Eq(W, Y)), _at(phi, x, W))), _at(phi, x, W + ONE)))
    return conj(chi1, chi2, chi3)


def _params(phi: Formula, x: str) -> list[str]:
    return sorted(free_vars(phi) - {x})


def build_psi(phi: Formula, x: str = "x", y: str | None = None, w: str | None = None, model: GroundModel = Z) -> Formula:
    """ψ(x) = ∃y ∃z (χ(y, z) ∧ φ(x, z)); a convex set with minimum 0 when nonempty."""
    y = _fresh(y, "y", all_vars(phi))
    chi = build_chi(phi, x, y, w, model)
    body = And((chi, phi))
    for v in reversed([y] + _params(phi, x)):
        body = Exists(v, body)
    return body


def build_theta(phi: Formula, x: str = "x", y: str | None = None, bounded: bool = True) -> Formula:
    """θ(z): φ(G, z) is (0, y) for some y > 0, or (0, ∞) when ``bounded`` is false.

    Experimental: at a standard model direct evaluation already answers this.
    """
    X = LinearTerm.var(x)
    if not bounded:
        return Forall(x, Iff(phi, Lt(ZERO, X)))
    y = _fresh(y, "y", all_vars(phi))
    Y = LinearTerm.var(y)
    return Exists(y, And((Lt(ZERO, Y), Forall(x, Iff(phi, And((Lt(ZERO, X), Lt(X, Y))))))))


# -------------------------------------------------------------------- driver


@dataclass
class GroupDefinable:
    defset: DefSet
    verdict: Verdict

    @property
    def period(self) -> int:
        return self.verdict.period

    @property
    def exceptions(self) -> tuple:
        return self.verdict.added + self.verdict.removed

    def to_dict(self) -> dict:
        return {"kind": "group_definable", "defset": self.defset.to_dict(), **self.verdict.to_dict()}


@dataclass
class OrderRecovered:
    defset: DefSet
    interval: IntervalResult
    relation: OrderRelation

    def to_dict(self) -> dict:
        return {"kind": "order_recovered", "defset": self.defset.to_dict(), **self.interval.to_dict()}


def classify(
    f: Formula, x: str = "x", params: Mapping[str, object] | None = None, model: GroundModel = Z
) -> GroupDefinable | OrderRecovered:
    D = formula_to_defset(f, x, params, model)
    return classify_defset(D)


def classify_defset(D: DefSet) -> GroupDefinable | OrderRecovered:
    verdict = is_group_definable(D)
    if verdict:
        return GroupDefinable(D, verdict)
    res = extract_interval(D)
    return OrderRecovered(D, res, order_relation(res))


__all__: Sequence[str] = [
    "ExtractionTrace",
    "GroupDefinable",
    "GroupDefinableInput",
    "IntervalResult",
    "OrderRecovered",
    "OrderRelation",
    "build_chi",
    "build_psi",
    "build_theta",
    "classify",
    "classify_defset",
    "extract_interval",
    "order_relation",
]
