from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oagdef.lattice import (
    LatticeGroup,
    acl_closure,
    determinant,
    has_small_quotients,
    hermite_normal_form,
    in_span,
    matmul,
    quotient_card,
    rank,
    smith_normal_form,
)
from oagdef.oracle import quotient_card_brute


def check_snf(A):
    res = smith_normal_form(A)
    assert matmul(matmul(res.U, A), res.V) == res.S
    assert abs(determinant(res.U)) == 1 and abs(determinant(res.V)) == 1
    S = res.S
    for i, row in enumerate(S):
        for j, x in enumerate(row):
            if i != j:
                assert x == 0
    d = res.diagonal
    assert all(x >= 0 for x in d)
    nz = [x for x in d if x]
    assert d[: len(nz)] == nz
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    if len(A) == len(A[0]):
        assert abs(determinant(A)) == abs(determinant(S))
    return res


def test_snf_examples():
    assert check_snf([[2, 0], [0, 3]]).diagonal == [1, 6]
    assert check_snf([[1, 0, 0], [0, 1, 0], [0, 0, 1]]).S == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    res = check_snf([[2, 4], [6, 8]])
    assert res.diagonal == [2, 4] and abs(determinant([[2, 4], [6, 8]])) == 8


def test_snf_rejects_bad_input():
    with pytest.raises(ValueError):
        smith_normal_form([])
    with pytest.raises(ValueError):
        smith_normal_form([[1, 2], [3]])


matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.lists(st.integers(-20, 20), min_size=c, max_size=c), min_size=r, max_size=r)))


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_snf_random(A):
    check_snf(A)


@settings(max_examples=100, deadline=None)
@given(matrices)
def test_hnf_is_canonical(A):
    H = hermite_normal_form(A)
    # same row lattice after a unimodular shuffle
    shuffled = [list(r) for r in reversed(A)]
    if len(shuffled) > 1:
        shuffled[0] = [a + 3 * b for a, b in zip(shuffled[0], shuffled[1])]
    assert hermite_normal_form(shuffled) == H
    assert len(H) == smith_normal_form(A).rank


def test_quotient_examples():
    assert quotient_card(LatticeGroup.standard(2), 3) == 9
    half = LatticeGroup.of([(Fraction(1, 2),)])
    assert quotient_card(half, 2) == 2
    assert quotient_card_brute(half.gens, 2, lambda v: v in half) == 2
    assert quotient_card(LatticeGroup.standard(2), 1) == 1
    with pytest.raises(ValueError):
        quotient_card(half, 0)


def test_small_quotients_examples():
    table = has_small_quotients(LatticeGroup.standard(1), 5)
    assert [(r["m"], r["card"]) for r in table] == [(m, m) for m in range(1, 6)]
    assert all(r["within_bound"] for r in table)
    G = LatticeGroup.of([(1, 0), (0, 1), (Fraction(1, 2), Fraction(1, 2))])
    row = has_small_quotients(G, 2)[1]
    assert row["card"] <= 4 and row["card"] == quotient_card_brute(G.gens, 2, lambda v: v in G)
    zero = LatticeGroup(3)
    assert all(r["card"] == 1 for r in has_small_quotients(zero, 6))


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_standard_lattice_quotients(d):
    for m in range(1, 11):
        assert quotient_card(LatticeGroup.standard(d), m) == m**d


rationals = st.fractions(-6, 6, max_denominator=4)
vectors3 = st.tuples(rationals, rationals, rationals)


@settings(max_examples=100, deadline=None)
@given(st.lists(vectors3, min_size=1, max_size=3), st.integers(1, 8))
def test_quotient_bound_and_brute(gens, m):
    G = LatticeGroup.of(gens)
    card = quotient_card(G, m)
    assert card <= m**3
    if card <= 64 and m ** len(gens) <= 512:
        assert card == quotient_card_brute(G.gens, m, lambda v: v in G)


def test_rank_examples():
    assert rank(LatticeGroup.of([(1, 0), (0, 1)])) == 2
    assert rank(LatticeGroup.of([(1, 2), (2, 4)])) == 1
    assert rank(LatticeGroup(2)) == 0


def test_membership_and_equality():
    G = LatticeGroup.of([(2, 0), (1, 1)])
    assert (3, 1) in G and (1, 0) not in G and (Fraction(1, 2), 0) not in G
    assert G == LatticeGroup.of([(1, 1), (0, 2), (3, 3)])
    assert LatticeGroup.from_json(G.to_json() | {"gens": G.to_json()["basis"]}) == G
    assert LatticeGroup.of([(2, 2)]).subgroup_of(G)
    with pytest.raises(ValueError):
        LatticeGroup.of([(1, 2), (3,)])


def test_acl_examples():
    Z2 = LatticeGroup.standard(2)
    assert acl_closure(Z2, [(1, 1)]) == LatticeGroup.of([(1, 1)])
    assert acl_closure(Z2, []) == LatticeGroup(2)
    assert acl_closure(LatticeGroup.standard(1), [], discrete=True) == LatticeGroup.standard(1)
    # the span of (2, 2) meets Z^2 in the saturated line
    assert acl_closure(Z2, [(2, 2)]) == LatticeGroup.of([(1, 1)])
    with pytest.raises(ValueError):
        acl_closure(Z2, [(Fraction(1, 2), 0)])
    with pytest.raises(ValueError):
        acl_closure(Z2, [], discrete=True)


def test_acl_against_search():
    G = LatticeGroup.of([(1, 0, 0), (0, 1, 0), (Fraction(1, 2), 0, Fraction(1, 2))])
    A = [(1, 1, 0)]
    C = acl_closure(G, A)
    B = G.basis()
    for a in range(-4, 5):
        for b in range(-4, 5):
            for c in range(-4, 5):
                v = tuple(a * x + b * y + c * z for x, y, z in zip(*B))
                assert (v in C) == in_span(A, v)


small_groups = st.lists(vectors3, min_size=1, max_size=3).map(LatticeGroup.of)


@settings(max_examples=50, deadline=None)
@given(small_groups, st.data())
def test_closure_axioms(G, data):
    B = G.basis()
    pick = data.draw(st.lists(st.sampled_from(B), max_size=2)) if B else []
    extra = data.draw(st.lists(st.sampled_from(B), max_size=2)) if B else []
    C = acl_closure(G, pick)
    assert all(a in C for a in pick)
    assert C.subgroup_of(G)
    assert acl_closure(G, C.basis()) == C
    assert C.subgroup_of(acl_closure(G, pick + extra))


@settings(max_examples=200, deadline=None)
@given(st.lists(vectors3, max_size=2), vectors3, rationals.filter(bool), st.lists(rationals, min_size=2, max_size=2))
def test_exchange(C, b, q, ks):
    # a in span(C + [b]) by construction
    a = tuple(q * y + sum(k * c[i] for k, c in zip(ks, C)) for i, y in enumerate(b))
    if not in_span(C, a):
        assert in_span(C + [a], b)
