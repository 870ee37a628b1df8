"""Exact arithmetic in Q(zeta_N).

Elements are stored in the power basis ``1, z, ..., z^(phi(N)-1)`` of
``Q[X]/Phi_N(X)``, which is canonical, so equality is coefficient equality.
Character values themselves travel as :class:`CharValue` index pairs and
are only promoted to :class:`Cyclotomic` when summed.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .arith import euler_phi


def _divisors(n: int) -> list[int]:
    small, large = [], []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
    return small + large[::-1]


def _polydiv_exact(num: list[int], den: list[int]) -> list[int]:
    # den monic, coefficients low -> high
    num = num[:]
    dq = len(den) - 1
    out = [0] * (len(num) - dq)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + dq]
        out[i] = c
        if c:
            for j, d in enumerate(den):
                num[i + j] -= c * d
    if any(num[:dq]):
        raise ArithmeticError("inexact polynomial division")
    return out


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the n-th cyclotomic polynomial."""
    if n < 1:
        raise ValueError("n must be positive")
    num = [-1] + [0] * (n - 1) + [1]
    for d in _divisors(n)[:-1]:
        num = _polydiv_exact(num, list(cyclotomic_poly(d)))
    return tuple(num)


def _reduce(vec, n: int):
    """Reduce a coefficient vector (any length) modulo Phi_n."""
    phi = cyclotomic_poly(n)
    deg = len(phi) - 1
    if len(vec) <= deg:
        return list(vec) + [0] * (deg - len(vec))
    if all(isinstance(c, (int, np.integer)) for c in vec):
        big = max((abs(int(c)) for c in vec), default=0)
        if big < (1 << 40) and max(abs(c) for c in phi) < (1 << 10) and len(vec) < (1 << 12):
            arr = np.asarray(vec, dtype=np.int64).copy()
            pol = np.asarray(phi, dtype=np.int64)
            for i in range(len(arr) - 1, deg - 1, -1):
                c = arr[i]
                if c:
                    arr[i - deg : i + 1] -= c * pol
            return [int(c) for c in arr[:deg]]
    vec = list(vec)
    for i in range(len(vec) - 1, deg - 1, -1):
        c = vec[i]
        if c:
            for j, d in enumerate(phi):
                vec[i - deg + j] -= c * d
    return vec[:deg]


@dataclass(frozen=True)
class Cyclotomic:
    """An element of Q(zeta_N) in canonical power-basis form."""

    order: int
    coeffs: tuple

    @classmethod
    def from_counts(cls, counts: Iterable, order: int) -> "Cyclotomic":
        """``sum_k counts[k] * zeta^k`` for k in range(len(counts)); counts may exceed N in length."""
        counts = list(counts)
        folded = [0] * order
        for k, c in enumerate(counts):
            folded[k % order] += c
        return cls(order, tuple(_reduce(folded, order)))

    @classmethod
    def rational(cls, value, order: int = 1) -> "Cyclotomic":
        deg = euler_phi(order)
        return cls(order, (Fraction(value),) + (0,) * (deg - 1))

    @classmethod
    def root(cls, k: int, order: int) -> "Cyclotomic":
        vec = [0] * order
        vec[k % order] = 1
        return cls(order, tuple(_reduce(vec, order)))

    def lift(self, order: int) -> "Cyclotomic":
        """Re-express in Q(zeta_order); ``self.order`` must divide ``order``."""
        if order == self.order:
            return self
        if order % self.order:
            raise ValueError(f"cannot lift from order {self.order} to {order}")
        step = order // self.order
        vec = [0] * ((len(self.coeffs) - 1) * step + 1 if self.coeffs else 1)
        for i, c in enumerate(self.coeffs):
            vec[i * step] = c
        return Cyclotomic(order, tuple(_reduce(vec, order)))

    def _common(self, other: "Cyclotomic"):
        m = math.lcm(self.order, other.order)
        return self.lift(m), other.lift(m), m

    def __add__(self, other):
        if not isinstance(other, Cyclotomic):
            other = Cyclotomic.rational(other, self.order)
        a, b, m = self._common(other)
        return Cyclotomic(m, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.order, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-other if isinstance(other, Cyclotomic) else -Fraction(other))

    def __mul__(self, other):
        if not isinstance(other, Cyclotomic):
            f = Fraction(other)
            return Cyclotomic(self.order, tuple(c * f for c in self.coeffs))
        a, b, m = self._common(other)
        prod = [0] * (len(a.coeffs) + len(b.coeffs) - 1)
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        prod[i + j] += x * y
        return Cyclotomic(m, tuple(_reduce(prod, m)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1 / Fraction(other))

    def conjugate(self) -> "Cyclotomic":
        # zeta -> zeta^-1 = zeta^(N-1)
        n = self.order
        vec = [0] * n
        for i, c in enumerate(self.coeffs):
            vec[(-i) % n] += c
        return Cyclotomic(n, tuple(_reduce(vec, n)))

    def __eq__(self, other):
        if not isinstance(other, Cyclotomic):
            try:
                other = Cyclotomic.rational(other, self.order)
            except (TypeError, ValueError):
                return NotImplemented
        a, b, _ = self._common(other)
        return all(x == y for x, y in zip(a.coeffs, b.coeffs))

    def __hash__(self):
        r = self.as_rational()
        return hash(r) if r is not None else hash((self.order, self.coeffs))

    def as_rational(self) -> Fraction | None:
        """The rational value if this element lies in Q, else None."""
        if any(c for c in self.coeffs[1:]):
            return None
        return Fraction(self.coeffs[0]) if self.coeffs else Fraction(0)

    def __complex__(self) -> complex:
        n = self.order
        return complex(sum(complex(c) * cmath.exp(2j * math.pi * i / n) for i, c in enumerate(self.coeffs) if c))


@dataclass(frozen=True)
class CharValue:
    """``e(k/N)``, or zero when ``zero`` is set."""

    k: int
    order: int
    zero: bool = False

    @classmethod
    def nil(cls) -> "CharValue":
        return cls(0, 1, True)

    def normalized(self) -> "CharValue":
        if self.zero:
            return CharValue.nil()
        g = math.gcd(self.k % self.order, self.order)
        return CharValue((self.k % self.order) // g, self.order // g)

    def __mul__(self, other: "CharValue") -> "CharValue":
        if self.zero or other.zero:
            return CharValue.nil()
        m = math.lcm(self.order, other.order)
        return CharValue((self.k * (m // self.order) + other.k * (m // other.order)) % m, m)

    def conjugate(self) -> "CharValue":
        return self if self.zero else CharValue((-self.k) % self.order, self.order)

    def __eq__(self, other):
        if not isinstance(other, CharValue):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return (a.zero, a.k, a.order) == (b.zero, b.k, b.order)

    def __hash__(self):
        a = self.normalized()
        return hash((a.zero, a.k, a.order))

    def exact(self) -> Cyclotomic:
        if self.zero:
            return Cyclotomic.rational(0)
        return Cyclotomic.root(self.k, self.order)

    def __complex__(self) -> complex:
        if self.zero:
            return 0j
        return cmath.exp(2j * math.pi * self.k / self.order)


def root_table(order: int) -> np.ndarray:
    """Complex ``e(k/order)`` for k in range(order)."""
    return np.exp(2j * np.pi * np.arange(order) / order)
