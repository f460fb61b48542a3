"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import json
import random
import subprocess
import sys
import textwrap
import time
from fractions import Fraction

import numpy as np
import pytest

from oagdef.corpus import chi_corpus, corpus
from oagdef.defset import DefSet, boolean_op, coset_witness, member
from oagdef.dichotomy import GroupDefinable, OrderRecovered, build_chi, classify_defset
from oagdef.formula import free_vars
from oagdef.lattice import (
    LatticeGroup,
    acl_closure,
    determinant,
    in_span,
    matmul,
    quotient_card,
    smith_normal_form,
)
from oagdef.model import INF, Q, Z, ZP
from oagdef.oracle import (
    Window,
    brute_table,
    chi_truth,
    compare_report,
    periodicity_check,
    qf_agreement,
    quotient_card_brute,
)
from oagdef.qe import eliminate_quantifiers, formula_to_defset

W = Window.discrete(1000, 200)


def report(capsys, n, name, failures, started, extra=""):
    line = f"criterion {n} {name}: {'PASS' if not failures else 'FAIL'} ({failures} failures, {time.perf_counter() - started:.1f}s{extra})"
    with capsys.disabled():
        print("\n" + line)
    return line


@pytest.fixture(scope="module")
def items():
    return corpus(500, seed=0)


@pytest.fixture(scope="module")
def normal_forms(items):
    return [formula_to_defset(it.formula, "x", it.params) for it in items]


def test_criterion_1_qe_soundness(items, capsys):
    t0 = time.perf_counter()
    grid = [Fraction(k) for k in range(-1000, 1001, 10)]
    bad = []
    for it in items:
        g = eliminate_quantifiers(it.formula)
        rep = qf_agreement(it.formula, g, {v: grid for v in it.free}, W)
        if not rep.agree:
            bad.append((it.index, it.text, rep.counterexample))
    report(capsys, 1, "QE soundness", len(bad), t0, f", {len(items)} formulas")
    assert not bad, bad[:3]


def test_criterion_2_normal_form(items, normal_forms, capsys):
    t0 = time.perf_counter()
    bad = []
    for it, D in zip(items, normal_forms):
        problems = D.invariant_violations()
        rep = compare_report(it.formula, D, W, "x", it.params)
        if problems or not rep.agree:
            bad.append((it.index, it.text, problems, rep.counterexample))
    report(capsys, 2, "normal form", len(bad), t0)
    assert not bad, bad[:3]


def _in_coset(model, x, m, g):
    q = (x - g) / m
    if model.prime is None:
        return True
    d = q.denominator
    while d % model.prime == 0:
        d //= model.prime
    return d == 1


def test_criterion_3_cosets_meet_intervals(capsys):
    t0 = time.perf_counter()
    bad = 0
    pts = np.arange(-1000, 1001)
    for a in range(-400, 401, 37):
        for lo, hi in ((a, INF), (-INF, a), (-INF, INF)):
            I = DefSet.interval(Z, lo, hi)
            for m in range(1, 13):
                for r in range(m):
                    C = boolean_op("intersect", I, DefSet.coset(Z, m, r))
                    inside = (pts > lo) & (pts < hi) & ((pts - r) % m == 0)
                    lib = [member(C, Fraction(int(g))) for g in pts[inside][:60]]
                    if inside.sum() < 50 or not all(lib) or C.is_finite():
                        bad += 1
    rng = random.Random(27)
    for model in (Q, ZP(2), ZP(3)):
        den = model.prime or 7
        for _ in range(200):
            a = Fraction(rng.randint(-500, 500), den ** rng.randint(0, 3))
            b = a + Fraction(rng.randint(1, 50), den ** rng.randint(0, 4))
            m = rng.randint(1, 12)
            g = Fraction(rng.randint(-50, 50), model.prime ** rng.randint(0, 2) if model.prime else rng.randint(1, 9))
            w = coset_witness(model, a, b, m, g)
            if not (a < w < b and _in_coset(model, w, m, g)):
                bad += 1
    report(capsys, 3, "cosets meet intervals", bad, t0)
    assert bad == 0


def test_criterion_4_dichotomy(items, normal_forms, capsys):
    t0 = time.perf_counter()
    bad, kinds = [], {"GroupDefinable": 0, "OrderRecovered": 0}
    pts = W.points()
    for it, D in list(zip(items, normal_forms))[:200]:
        c = classify_defset(D)
        kinds[type(c).__name__] += 1
        if isinstance(c, GroupDefinable):
            v = c.verdict
            rep = periodicity_check(it.formula, W, v.period, v.core, v.added, v.removed, "x", it.params)
            if not rep.agree:
                bad.append((it.index, "periodicity", rep.counterexample))
        elif isinstance(c, OrderRecovered):
            I = c.interval
            inside = [g for g in pts if g in I.interval]
            if len(inside) < 100:
                bad.append((it.index, "small interval"))
            if I.trace.replay() != I.interval:
                bad.append((it.index, "replay"))
            tab = brute_table(c.relation.formula("a", "b"), {"a": inside, "b": inside}, W)
            arr = np.array([int(g) for g in inside])
            if (tab != np.less.outer(arr, arr)).any():
                bad.append((it.index, "order"))
        else:
            bad.append((it.index, "no verdict"))
    report(capsys, 4, "dichotomy", len(bad), t0, f", {kinds}")
    assert not bad, bad[:3]


def test_criterion_5_chi_detector(capsys):
    t0 = time.perf_counter()
    window = Window.discrete(200, 60)
    bs = list(range(-50, 51))
    bad, hits = [], 0
    for it in chi_corpus(50):
        chi = build_chi(it.formula)
        (y,) = free_vars(chi) - {"z"}
        lhs = brute_table(eliminate_quantifiers(chi), {y: bs, "z": bs}, window)
        rhs = chi_truth(it.formula, "x", "z", bs, bs, window)
        hits += int(rhs.sum())
        if (lhs != rhs).any():
            i, j = np.argwhere(lhs != rhs)[0]
            bad.append((it.index, it.text, bs[i], bs[j]))
    report(capsys, 5, "chi detector", len(bad), t0, f", {hits} true pairs")
    assert not bad, bad[:3]


def test_criterion_6_lattice(capsys):
    t0 = time.perf_counter()
    rng = random.Random(6)
    bad = 0
    for _ in range(200):
        r, c = rng.randint(1, 6), rng.randint(1, 6)
        A = [[rng.randint(-20, 20) for _ in range(c)] for _ in range(r)]
        res = smith_normal_form(A)
        d = [x for x in res.diagonal if x]
        ok = matmul(matmul(res.U, A), res.V) == res.S
        ok &= abs(determinant(res.U)) == 1 and abs(determinant(res.V)) == 1
        ok &= all(res.S[i][j] == 0 for i in range(r) for j in range(c) if i != j)
        ok &= res.diagonal[: len(d)] == d and all(x > 0 for x in d)
        ok &= all(b % a == 0 for a, b in zip(d, d[1:]))
        if r == c:
            ok &= abs(determinant(A)) == abs(determinant(res.S))
        bad += not ok
    for dim in range(1, 5):
        for m in range(1, 11):
            bad += quotient_card(LatticeGroup.standard(dim), m) != m**dim
    checked = 0
    for _ in range(100):
        k = rng.randint(1, 3)
        gens = [tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(3)) for _ in range(k)]
        G = LatticeGroup.of(gens)
        m = rng.randint(1, 8)
        card = quotient_card(G, m)
        bad += card > m**3
        if card <= 64:
            checked += 1
            bad += card != quotient_card_brute(G.basis() or gens, m, lambda v: v in G)
    for _ in range(50):
        gens = [tuple(Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(3)) for _ in range(rng.randint(1, 3))]
        G = LatticeGroup.of(gens)
        B = G.basis()
        A = rng.sample(B, rng.randint(0, len(B))) if B else []
        more = A + rng.sample(B, rng.randint(0, len(B))) if B else []
        C = acl_closure(G, A)
        bad += not all(a in C for a in A)
        bad += acl_closure(G, C.basis()) != C
        bad += not C.subgroup_of(acl_closure(G, more))
        S = [tuple(Fraction(rng.randint(-3, 3)) for _ in range(3)) for _ in range(rng.randint(0, 2))]
        b = tuple(Fraction(rng.randint(-3, 3)) for _ in range(3))
        a = tuple(2 * y + sum(s[i] for s in S) for i, y in enumerate(b))
        if not in_span(S, a):
            bad += not in_span(S + [a], b)
    report(capsys, 6, "lattice suite", bad, t0, f", {checked} brute coset counts")
    assert bad == 0


BUNDLE = textwrap.dedent("""
    import json, sys
    from oagdef.corpus import corpus, chi_corpus
    from oagdef.dichotomy import classify_defset, build_chi
    from oagdef.formula import format_formula
    from oagdef.lattice import LatticeGroup, has_small_quotients, smith_normal_form, acl_closure
    from oagdef.model import Q
    from oagdef.oracle import Window, compare_report
    from oagdef.qe import eliminate_quantifiers, formula_to_defset
    out = {"qe": [], "classify": [], "reports": []}
    W = Window.discrete(300, 100)
    for it in corpus(60, seed=11):
        out["qe"].append(format_formula(eliminate_quantifiers(it.formula)))
        D = formula_to_defset(it.formula, "x", it.params)
        out["classify"].append(classify_defset(D).to_dict())
        out["reports"].append(compare_report(it.formula, D, W, "x", it.params).to_dict())
    out["dense"] = classify_defset(formula_to_defset(__import__("oagdef").parse_formula("0 < x & x < 1", Q), "x", model=Q)).to_dict()
    out["chi"] = [format_formula(build_chi(it.formula)) for it in chi_corpus(10)]
    G = LatticeGroup.of([(1, 0), (0, 1), ("1/2", "1/2")])
    out["lattice"] = {"snf": smith_normal_form([[2, 4], [6, 8]]).to_dict(), "small": has_small_quotients(G, 6),
                      "acl": acl_closure(G, [(1, 1)]).to_json()}
    sys.stdout.write(json.dumps(out, sort_keys=True))
""")


def test_criterion_7_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    runs = []
    for i in range(2):
        proc = subprocess.run([sys.executable, "-c", BUNDLE], capture_output=True, check=True)
        path = tmp_path / f"artifacts-{i}.json"
        path.write_bytes(proc.stdout)
        runs.append(path.read_bytes())
    json.loads(runs[0])
    bad = int(runs[0] != runs[1])
    report(capsys, 7, "determinism", bad, t0, f", {len(runs[0])} bytes")
    assert bad == 0
