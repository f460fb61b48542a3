"""Ground models: the integers, the rationals, and the localizations Z[1/p]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

DISCRETE = "discrete"
DENSE = "dense"

INF = math.inf


class ModelError(ValueError):
    """An element or modulus that does not belong to the ground model."""


def _strip_prime(n: int, p: int) -> int:
    while n % p == 0:
        n //= p
    return n


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class GroundModel:
    """An archimedean ordered abelian group with small quotients.

    ``mode`` is ``"discrete"`` (the integers, with the named element 1) or
    ``"dense"``.  A dense model is the full rationals when ``prime`` is None
    and Z[1/prime] otherwise.  Elements are always carried as ``Fraction``.
    """

    mode: str = DISCRETE
    prime: int | None = None

    def __post_init__(self):
        if self.mode not in (DISCRETE, DENSE):
            raise ModelError(f"unknown mode {self.mode!r}")
        if self.mode == DISCRETE and self.prime is not None:
            raise ModelError("the discrete model takes no prime")
        if self.prime is not None and not _is_prime(self.prime):
            raise ModelError(f"{self.prime} is not prime")

    @classmethod
    def parse(cls, text: str) -> "GroundModel":
        text = text.strip().lower()
        if text == "z":
            return Z
        if text == "q":
            return Q
        if text.startswith("zp:"):
            try:
                return cls(DENSE, int(text[3:]))
            except ValueError as exc:
                raise ModelError(f"bad model {text!r}: {exc}") from None
        raise ModelError(f"unknown model {text!r}; expected z, q or zp:<p>")

    @property
    def name(self) -> str:
        if self.mode == DISCRETE:
            return "z"
        return "q" if self.prime is None else f"zp:{self.prime}"

    @property
    def is_discrete(self) -> bool:
        return self.mode == DISCRETE

    def __str__(self):
        return self.name

    def contains(self, g) -> bool:
        g = Fraction(g)
        if self.mode == DISCRETE:
            return g.denominator == 1
        if self.prime is None:
            return True
        return _strip_prime(g.denominator, self.prime) == 1

    def element(self, g) -> Fraction:
        """Coerce ``g`` to a model element, raising ``ModelError`` if it is not one."""
        g = Fraction(g)
        if not self.contains(g):
            raise ModelError(f"{g} is not an element of {self.name}")
        return g

    def index(self, m: int) -> int:
        """The index [G : mG]; residues mod m are represented by range(index(m))."""
        if m < 1:
            raise ModelError(f"modulus must be positive, got {m}")
        if self.mode == DISCRETE:
            return m
        if self.prime is None:
            return 1
        return _strip_prime(m, self.prime)

    def in_mG(self, g, m: int) -> bool:
        """Whether g lies in mG."""
        g = Fraction(g)
        if self.mode == DISCRETE:
            return g.denominator == 1 and g.numerator % m == 0
        if not self.contains(g):
            return False
        return g.numerator % self.index(m) == 0

    def congruent(self, a, b, m: int) -> bool:
        return self.in_mG(Fraction(a) - Fraction(b), m)

    def residue(self, g, m: int) -> int:
        """The integer r in range(index(m)) with g - r in mG."""
        g = self.element(g)
        k = self.index(m)
        if k == 1:
            return 0
        if self.mode == DISCRETE:
            return g.numerator % k
        # g = a / p^j with k prime to p, so r = a * p^(-j) mod k
        return g.numerator * pow(g.denominator, -1, k) % k

    def format(self, g) -> str:
        if g == INF:
            return "inf"
        if g == -INF:
            return "-inf"
        return str(Fraction(g))


Z = GroundModel(DISCRETE)
Q = GroundModel(DENSE)


def ZP(p: int) -> GroundModel:
    return GroundModel(DENSE, p)


def parse_ext(text) -> Fraction | float:
    """Parse an extended rational: ``"inf"``, ``"-inf"`` or ``"p/q"``."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    text = str(text).strip()
    if text in ("inf", "+inf"):
        return INF
    if text == "-inf":
        return -INF
    return Fraction(text)


def format_ext(v) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return str(Fraction(v))
