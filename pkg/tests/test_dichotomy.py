import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oagdef.defset import DefSet, boolean_op, normalize
from oagdef.dichotomy import (
    ExtractionTrace,
    GroupDefinable,
    GroupDefinableInput,
    IntervalResult,
    OrderRecovered,
    build_chi,
    build_psi,
    build_theta,
    classify,
    classify_defset,
    extract_interval,
    order_relation,
)
from oagdef.formula import ScopeError, format_formula, free_vars, parse_formula
from oagdef.model import INF, Q, Z, ZP
from oagdef.oracle import Window, brute_table, brute_window, chi_truth, compare_report
from oagdef.qe import eliminate_quantifiers, formula_to_defset

# steps that are built from the set and + alone
ALLOWED_OPS = {"drop-points", "intersect", "translate", "divide", "identity", "complement",
               "symmetrize", "shrink-family"}


def check_interval(res, window):
    I, b = res.interval, res.b
    for g in window.points():
        assert (g in I) == (0 < g < b), g
    assert res.trace.replay() == I
    assert {s.op for s in res.trace.steps} <= ALLOWED_OPS


def test_coset_of_half_line():
    D = boolean_op("intersect", DefSet.interval(Z, -1, INF), DefSet.coset(Z, 2, 0))
    res = extract_interval(D)
    assert res.b == INF and res.interval == DefSet.interval(Z, 0, INF)
    assert res.trace.tags()[:3] == ["coset-restriction", "divide-by-m", "merge"]
    check_interval(res, Window.discrete(300))


def test_unbounded_below_is_swapped():
    D = boolean_op("intersect", DefSet.coset(Z, 2, 0), DefSet.interval(Z, -INF, 20))
    res = extract_interval(D)
    assert "complement-swap" in res.trace.tags()
    # over Z a set bounded on both sides is finite, so the extracted interval is a half line
    assert res.b == INF
    check_interval(res, Window.discrete(300))


def test_dense_unit_interval():
    res = extract_interval(DefSet.interval(Q, 0, 1))
    tags = res.trace.tags()
    assert tags[-2:] == ["dense-midpoint", "final-intersection"]
    mid = res.trace.steps[-2]
    assert mid.args == (Fraction(-1, 3), Fraction(1, 3))
    assert mid.after == DefSet.interval(Q, Fraction(-1, 3), Fraction(1, 3))
    assert res.b == Fraction(1, 4)
    check_interval(res, Window.dense(Q, H=40, B=3))


@pytest.mark.parametrize("model", [ZP(2), ZP(3)])
def test_dense_localizations(model):
    D = normalize([(Fraction(1, model.prime), 5, 0, 1)], model)
    res = extract_interval(D)
    assert 0 < res.b < INF
    check_interval(res, Window.dense(model, H=30, B=6))


def test_group_definable_input_rejected():
    with pytest.raises(GroupDefinableInput):
        extract_interval(DefSet.coset(Z, 3, 1))
    with pytest.raises(GroupDefinableInput):
        extract_interval(normalize([3, 7], Z))


def test_order_relation_examples():
    I = IntervalResult(5, DefSet.interval(Z, 0, 5), ExtractionTrace(DefSet.interval(Z, 0, 5)))
    R = order_relation(I)
    assert R(1, 3)
    assert not R(3, 1)
    full = order_relation(extract_interval(DefSet.interval(Z, 0, INF)))
    grid = range(-20, 21)
    assert all(full(a, b) == (a < b) for a in grid for b in grid)
    f = full.formula("a", "b")
    assert free_vars(f) == {"a", "b"}
    tab = brute_table(f, {"a": grid, "b": grid}, Window.discrete(30, 30))
    assert (tab == np.less.outer(np.array(grid), np.array(grid))).all()


def test_chi_examples():
    phi = parse_formula("0 <= x & x <= z")
    chi = build_chi(phi)
    assert free_vars(chi) == {"y", "z"}
    W = Window.discrete(60, 30)
    tab = brute_table(eliminate_quantifiers(chi), {"y": [3, 4], "z": [3]}, W)
    assert tab[0, 0] and not tab[1, 0]
    grid = range(-15, 16)
    never = build_chi(parse_formula("x =_2 0"), y="b", w="w")
    assert not brute_table(never, {"b": grid, "z": grid}, W).any()


def test_chi_matches_window_truth():
    phi = parse_formula("0 <= x & x <= 2*z - 3")
    grid = list(range(-20, 21))
    W = Window.discrete(80, 40)
    lhs = brute_table(eliminate_quantifiers(build_chi(phi)), {"y": grid, "z": grid}, W)
    assert (lhs == chi_truth(phi, "x", "z", grid, grid, W)).all()


def test_chi_names_and_mode():
    phi = parse_formula("0 <= x & x <= y")
    chi = build_chi(phi)
    assert "y" in free_vars(chi) and len(free_vars(chi)) == 2
    with pytest.raises(ScopeError):
        build_chi(phi, y="y")
    with pytest.raises(ValueError):
        build_chi(parse_formula("0 < x", Q), model=Q)


def test_psi_examples():
    W = Window.discrete(25, 25)
    psi = build_psi(parse_formula("0 <= x & x <= z"))
    assert free_vars(psi) == {"x"}
    got = brute_window(eliminate_quantifiers(psi), W, "x").members()
    assert got == [Fraction(k) for k in range(26)]
    assert brute_window(build_psi(parse_formula("false")), W, "x").members() == []
    # x = z realizes the one-point set {c}; chi needs y > 0, so no witness exists
    assert brute_window(eliminate_quantifiers(build_psi(parse_formula("x = z"))), W, "x").members() == []


@pytest.mark.parametrize("text", ["0 <= x & x <= 2*z", "0 <= x & x < z + 3 & x =_2 0", "0 <= x & 3*x <= z"])
def test_psi_is_convex_with_minimum_zero(text):
    W = Window.discrete(40, 40)
    got = brute_window(eliminate_quantifiers(build_psi(parse_formula(text))), W, "x").members()
    if got:
        assert got[0] == 0
        assert got == [Fraction(k) for k in range(int(got[-1]) + 1)]


def test_theta():
    th = build_theta(parse_formula("0 < x & x < z"), bounded=True)
    assert free_vars(th) == {"z"}
    # over Z the empty set is (0, 1), so every z qualifies
    res = brute_window(eliminate_quantifiers(th), Window.discrete(20, 20), "z")
    assert len(res.members()) == 41
    thq = build_theta(parse_formula("0 < x & x < z", Q), bounded=True)
    assert formula_to_defset(thq, "z", model=Q) == DefSet.interval(Q, 0, INF)
    half = build_theta(parse_formula("0 < x"), bounded=False)
    assert format_formula(eliminate_quantifiers(half)) == "true"


def test_classify_examples():
    g = classify(parse_formula("E y (x = 3*y + 1)"))
    assert isinstance(g, GroupDefinable) and g.period == 3
    o = classify(parse_formula("0 < x"))
    assert isinstance(o, OrderRecovered) and o.interval.b == INF
    p = classify(parse_formula("x < z & x =_2 0"), params={"z": 20})
    assert isinstance(p, OrderRecovered)
    d = classify(parse_formula("0 < x & x < 1", Q), model=Q)
    assert isinstance(d, OrderRecovered) and d.interval.b == Fraction(1, 4)


def test_classify_json_is_deterministic():
    f = parse_formula("E y (0 < y & y < x & y =_3 1)")
    a = json.dumps(classify(f).to_dict(), sort_keys=True)
    b = json.dumps(classify(f).to_dict(), sort_keys=True)
    assert a == b
    steps = json.loads(a)["trace"]
    assert steps and set(steps[0]) == {"step_tag", "justification", "op", "args", "defset_after"}


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(-30, 30), st.integers(1, 30), st.integers(0, 5)), min_size=1, max_size=3),
       st.sampled_from([1, 2, 3, 4, 6]), st.booleans())
def test_classify_random_discrete_sets(raw, m, up):
    pieces = [(lo, INF if up and i == 0 else lo + w, r % m, m) for i, (lo, w, r) in enumerate(raw)]
    D = normalize(pieces, Z)
    c = classify_defset(D)
    W = Window.discrete(120)
    if isinstance(c, GroupDefinable):
        v = c.verdict
        for g in W.points():
            inside = (g in v.core) != any(g == e for e in v.added) or g in v.removed
            assert (g in D) == ((g in v.core or g in v.added) and g not in v.removed), g
    else:
        check_interval(c.interval, W)
        assert sum(1 for g in W.points() if g in c.interval.interval) >= 100


@settings(max_examples=60, deadline=None)
@given(st.fractions(-5, 5, max_denominator=6), st.fractions(Fraction(1, 6), 6, max_denominator=6),
       st.sampled_from([Q, ZP(2), ZP(3)]))
def test_classify_random_dense_intervals(lo, width, model):
    lo = model.round_to_model(lo) if hasattr(model, "round_to_model") else lo
    try:
        D = DefSet.interval(model, lo, lo + width)
    except ValueError:
        return
    c = classify_defset(D)
    assert isinstance(c, OrderRecovered)
    res = c.interval
    assert 0 < res.b < INF
    assert res.trace.replay() == res.interval
