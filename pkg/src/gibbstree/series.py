"""Truncated formal power series with float coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PowerSeries:
    """``sum_k coeffs[k] * var**k`` truncated after degree ``order``."""

    coeffs: np.ndarray
    var: str = "t"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            raise DomainError("a power series needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_polynomial(cls, poly: Sequence[float], order: int, var: str = "t") -> "PowerSeries":
        c = np.zeros(order + 1)
        poly = np.asarray(poly, dtype=float)[: order + 1]
        c[: poly.size] = poly
        return cls(c, var)

    @classmethod
    def taylor_shift(cls, poly: Sequence[float], point: float, order: int, var: str = "t") -> "PowerSeries":
        """Expand the polynomial ``sum poly[k] x^k`` around ``x = point`` in powers of ``t = x - point``."""
        poly = np.asarray(poly, dtype=float)
        deg = poly.size - 1
        # Repeated synthetic division gives the shifted coefficients exactly.
        work = poly[::-1].copy()
        out = np.zeros(deg + 1)
        for k in range(deg + 1):
            acc = 0.0
            for i in range(deg + 1 - k):
                acc = acc * point + work[i]
                work[i] = acc
            out[k] = work[deg - k]
        return cls.from_polynomial(out, order, var)

    @classmethod
    def constant(cls, value: float, order: int, var: str = "t") -> "PowerSeries":
        return cls.from_polynomial([value], order, var)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, k: int) -> float:
        return float(self.coeffs[k])

    def _like(self, coeffs) -> "PowerSeries":
        return PowerSeries(coeffs, self.var)

    def _aligned(self, other: "PowerSeries"):
        n = min(self.coeffs.size, other.coeffs.size)
        return self.coeffs[:n], other.coeffs[:n]

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            a, b = self._aligned(other)
            return self._like(a + b)
        c = self.coeffs.copy()
        c[0] += other
        return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            a, b = self._aligned(other)
            return self._like(np.convolve(a, b)[: a.size])
        return self._like(self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return self * other.reciprocal()
        return self._like(self.coeffs / other)

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise DomainError("only non-negative integer powers are supported")
        result = PowerSeries.constant(1.0, self.order, self.var)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def derivative(self) -> "PowerSeries":
        """Term-wise derivative; the top coefficient becomes 0 to keep the length."""
        k = np.arange(1, self.coeffs.size)
        c = np.zeros_like(self.coeffs)
        c[:-1] = self.coeffs[1:] * k
        return self._like(c)

    def reciprocal(self) -> "PowerSeries":
        c = self.coeffs
        if c[0] == 0:
            raise DomainError("reciprocal needs a non-zero constant term")
        out = np.zeros_like(c)
        out[0] = 1.0 / c[0]
        for k in range(1, c.size):
            out[k] = -np.dot(c[1 : k + 1], out[k - 1 :: -1][:k]) / c[0]
        return self._like(out)

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """``self(inner(t))``; ``inner`` must have zero constant term."""
        if inner.coeffs[0] != 0:
            raise DomainError("composition needs an inner series without constant term")
        order = min(self.order, inner.order)
        inner = PowerSeries(inner.coeffs[: order + 1], inner.var)
        result = PowerSeries.constant(0.0, order, inner.var)
        for a in self.coeffs[: order + 1][::-1]:
            result = result * inner + a
        return result

    def shift_down(self, k: int) -> "PowerSeries":
        """Divide by ``var**k``; the leading ``k`` coefficients must vanish."""
        if np.any(self.coeffs[:k] != 0):
            raise DomainError(f"series is not divisible by {self.var}^{k}")
        return self._like(np.concatenate([self.coeffs[k:], np.zeros(k)]))

    def evaluate(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.coeffs))

    def partial_sums(self, x: float) -> np.ndarray:
        """``S_k = sum_{j<=k} coeffs[j] x^j`` for every k."""
        return np.cumsum(self.coeffs * x ** np.arange(self.coeffs.size))

    def __repr__(self):
        return f"PowerSeries({self.var}, order={self.order}, coeffs={self.coeffs[:6].tolist()}...)"
