"""Finitely generated subgroups of Q^d: rank, quotients G/mG, and acl closures.

All arithmetic is exact (Python ints and Fractions).  A group is given by
rational generators; its canonical form is the Hermite basis of the integer
lattice obtained by clearing denominators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Matrix = list[list[int]]


def _identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


def determinant(A) -> Fraction:
    """Exact determinant by fraction-valued elimination."""
    M = [[Fraction(x) for x in row] for row in A]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


@dataclass(frozen=True)
class SnfResult:
    """U*A*V = S with U, V unimodular and S diagonal, s_i | s_{i+1}."""

    U: Matrix
    S: Matrix
    V: Matrix

    @property
    def diagonal(self) -> list[int]:
        return [self.S[i][i] for i in range(min(len(self.S), len(self.S[0]) if self.S else 0))]

    @property
    def rank(self) -> int:
        return sum(1 for s in self.diagonal if s)

    def to_dict(self) -> dict:
        return {"U": self.U, "S": self.S, "V": self.V, "diagonal": self.diagonal}


def smith_normal_form(A: Sequence[Sequence[int]]) -> SnfResult:
    if not A or not A[0]:
        raise ValueError("smith_normal_form needs a nonempty matrix")
    S = [[int(x) for x in row] for row in A]
    m, n = len(S), len(S[0])
    if any(len(row) != n for row in S):
        raise ValueError("ragged matrix")
    U, V = _identity(m), _identity(n)

    def swap_rows(i, j):
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (S, V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row dst -= q * row src
        S[dst] = [a - q * b for a, b in zip(S[dst], S[src])]
        U[dst] = [a - q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):
        for M in (S, V):
            for row in M:
                row[dst] -= q * row[src]

    for t in range(min(m, n)):
        while True:
            entries = [(abs(S[i][j]), i, j) for i in range(t, m) for j in range(t, n) if S[i][j]]
            if not entries:
                break
            _, i, j = min(entries)
            swap_rows(t, i)
            swap_cols(t, j)
            p = S[t][t]
            clean = True
            for i in range(t + 1, m):
                add_row(i, t, S[i][t] // p)
                clean &= S[i][t] == 0
            for j in range(t + 1, n):
                add_col(j, t, S[t][j] // p)
                clean &= S[t][j] == 0
            if not clean:
                continue
            bad = next((i for i in range(t + 1, m) for j in range(t + 1, n) if S[i][j] % p), None)
            if bad is None:
                break
            # pull the offending row up; the next pass produces a smaller pivot
            add_row(t, bad, -1)
        if S[t][t] < 0:
            S[t] = [-x for x in S[t]]
            U[t] = [-x for x in U[t]]
    return SnfResult(U, S, V)


def hermite_normal_form(M: Sequence[Sequence[int]]) -> Matrix:
    """Nonzero rows of the row-style Hermite form: echelon, positive pivots,
    entries above each pivot reduced into [0, pivot)."""
    rows = [[int(x) for x in row] for row in M]
    if not rows:
        return []
    n = len(rows[0])
    r = 0
    for col in range(n):
        while True:
            nz = [i for i in range(r, len(rows)) if rows[i][col]]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(rows[i][col]))
            rows[r], rows[piv] = rows[piv], rows[r]
            done = True
            for i in range(r + 1, len(rows)):
                if rows[i][col]:
                    q = rows[i][col] // rows[r][col]
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[r])]
                    done &= rows[i][col] == 0
            if done:
                break
        if r >= len(rows) or rows[r][col] == 0:
            continue
        if rows[r][col] < 0:
            rows[r] = [-x for x in rows[r]]
        for i in range(r):
            q = rows[i][col] // rows[r][col]
            rows[i] = [a - q * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return rows[:r]


def _parse_vec(v) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in v)


@dataclass(frozen=True)
class LatticeGroup:
    """The subgroup of Q^dim generated by ``gens``."""

    dim: int
    gens: tuple[tuple[Fraction, ...], ...] = ()

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dimension must be nonnegative")
        gens = tuple(_parse_vec(g) for g in self.gens)
        if any(len(g) != self.dim for g in gens):
            raise ValueError(f"every generator needs {self.dim} coordinates")
        object.__setattr__(self, "gens", gens)

    @classmethod
    def of(cls, gens: Iterable, dim: int | None = None) -> "LatticeGroup":
        gens = [_parse_vec(g) for g in gens]
        if dim is None:
            if not gens:
                raise ValueError("dimension needed for the trivial group")
            dim = len(gens[0])
        return cls(dim, tuple(gens))

    @classmethod
    def standard(cls, d: int) -> "LatticeGroup":
        return cls(d, tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)))

    @classmethod
    def from_json(cls, data) -> "LatticeGroup":
        if isinstance(data, dict):
            return cls.of(data.get("gens", []), data.get("dim"))
        return cls.of(data)

    def to_json(self) -> dict:
        return {"dim": self.dim, "basis": [[str(x) for x in row] for row in self.basis()]}

    # integer picture: G = (1/den) * rowspan(M)
    def _den(self) -> int:
        return math.lcm(1, *(x.denominator for g in self.gens for x in g))

    def _int_rows(self) -> Matrix:
        L = self._den()
        return [[int(x * L) for x in g] for g in self.gens]

    def basis(self) -> list[tuple[Fraction, ...]]:
        """Canonical basis (Hermite form of the cleared-denominator lattice)."""
        L = self._den()
        return [tuple(Fraction(x, L) for x in row) for row in hermite_normal_form(self._int_rows())]

    def __eq__(self, other):
        if not isinstance(other, LatticeGroup):
            return NotImplemented
        return self.dim == other.dim and self.basis() == other.basis()

    def __hash__(self):
        return hash((self.dim, tuple(self.basis())))

    def __contains__(self, v) -> bool:
        v = _parse_vec(v)
        if len(v) != self.dim:
            return False
        L = self._den()
        w = [x * L for x in v]
        if any(x.denominator != 1 for x in w):
            return False
        w = [int(x) for x in w]
        for row in hermite_normal_form(self._int_rows()):
            col = next(j for j, x in enumerate(row) if x)
            if w[col] % row[col]:
                return False
            q = w[col] // row[col]
            w = [a - q * b for a, b in zip(w, row)]
        return not any(w)

    def subgroup_of(self, other: "LatticeGroup") -> bool:
        return all(g in other for g in self.gens)

    def __str__(self):
        inner = ", ".join("(" + ", ".join(str(x) for x in b) + ")" for b in self.basis())
        return f"<{inner}>"


def rank(G: LatticeGroup) -> int:
    """Dimension of the rational span of the generators."""
    if not G.gens:
        return 0
    return smith_normal_form(G._int_rows()).rank


def quotient_card(G: LatticeGroup, m: int) -> int:
    """|G/mG|; G is free of rank r, so this is m**r."""
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    return m ** rank(G)


def has_small_quotients(G: LatticeGroup, up_to: int) -> list[dict]:
    """|G/mG| for 1 <= m <= up_to against the bound m**dim."""
    if up_to < 1:
        raise ValueError("up_to must be at least 1")
    out = []
    for m in range(1, up_to + 1):
        card = quotient_card(G, m)
        out.append({"m": m, "card": card, "bound": m**G.dim, "within_bound": card <= m**G.dim})
    return out


def nullspace(rows: Sequence[Sequence[Fraction]], dim: int) -> list[list[Fraction]]:
    """A basis of {n : a . n = 0 for every row a}."""
    M = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    r = 0
    for c in range(dim):
        p = next((i for i in range(r, len(M)) if M[i][c]), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        M[r] = [x / M[r][c] for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    basis = []
    for free in (c for c in range(dim) if c not in pivots):
        v = [Fraction(0)] * dim
        v[free] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -M[i][free]
        basis.append(v)
    return basis


def in_span(vectors: Sequence[Sequence], v, dim: int | None = None) -> bool:
    """Whether v is a rational combination of ``vectors``."""
    v = _parse_vec(v)
    dim = len(v) if dim is None else dim
    return all(sum(a * b for a, b in zip(n, v)) == 0 for n in nullspace(vectors, dim))


def acl_closure(G: LatticeGroup, A: Iterable = (), discrete: bool = False) -> LatticeGroup:
    """span(A ∪ dcl(0)) ∩ G, where dcl(0) is 0 in the dense case and Z in the discrete one.

    The discrete case only supports G = Z (dimension 1, generated by 1).
    """
    A = [_parse_vec(a) for a in A]
    for a in A:
        if a not in G:
            raise ValueError(f"{tuple(str(x) for x in a)} is not in G")
    if discrete:
        if G != LatticeGroup.standard(1):
            raise ValueError("the discrete closure is only implemented for G = Z")
        A = A + [(Fraction(1),)]
    B = G.basis()
    if not B:
        return G
    # c.B lies in span(A) iff c.B.N = 0 for a basis N of span(A)'s annihilator
    N = nullspace(A, G.dim) if A else [[Fraction(int(i == j)) for j in range(G.dim)] for i in range(G.dim)]
    if not N:
        return LatticeGroup(G.dim, tuple(B))
    K = [[sum(b * n for b, n in zip(row, col)) for col in N] for row in B]
    L = math.lcm(1, *(x.denominator for row in K for x in row))
    snf = smith_normal_form([[int(x * L) for x in row] for row in K])
    r = snf.rank
    # rows of U past the rank span the saturated integer left kernel of K
    coeffs = snf.U[r:]
    gens = [tuple(sum(c * b[j] for c, b in zip(cs, B)) for j in range(G.dim)) for cs in coeffs]
    return LatticeGroup(G.dim, tuple(gens))
