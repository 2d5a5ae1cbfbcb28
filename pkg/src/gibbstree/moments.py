"""Expected external-node counts from products of tangent maps.

``Xi_n(u, v) = F^(n+1)(u, v)``, so the gradient at ``(1, 1)`` is
``DF(s_n) ... DF(s_0)`` with ``s_j = F^j(1, 1)``. Row ``x`` divided by
``Xi^x_n`` gives ``(E^x L_n, E^x Q_n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .criticality import CriticalPoint
from .dynamics import check_b, iterate_orbit
from .errors import DivergenceError, DomainError
from .offspring import OffspringDistribution, evaluate_R, require_valid


@dataclass(frozen=True)
class MomentRecord:
    """Expectations for both boundary classes; index 0 is ``x = 1``, index 1 is ``x = 2``."""

    n: int
    EL: tuple[float, float]
    EQ: tuple[float, float]

    @property
    def EN(self) -> tuple[float, float]:
        return (self.EL[0] + self.EQ[0], self.EL[1] + self.EQ[1])

    def for_class(self, x: int) -> tuple[float, float, float]:
        i = min(int(x), 2) - 1
        return self.EL[i], self.EQ[i], self.EN[i]

    def as_row(self) -> dict:
        en = self.EN
        n2 = float(self.n) ** 2
        return {
            "n": self.n,
            "EL1": self.EL[0], "EQ1": self.EQ[0], "EN1": en[0],
            "EL2": self.EL[1], "EQ2": self.EQ[1], "EN2": en[1],
            "n2EN1": n2 * en[0], "n2EN2": n2 * en[1],
        }


def moment_trajectory(dist: OffspringDistribution, b: float, n_max: int) -> Iterator[MomentRecord]:
    """Yield :class:`MomentRecord` for ``n = 0..n_max`` in a single pass.

    The running product is renormalised every step; its binary exponent is
    carried separately so ``n^-2`` decay never reaches subnormal range.
    """
    require_valid(dist)
    b = check_b(b)
    if n_max < 0:
        raise DomainError("n must be non-negative")
    orbit = iterate_orbit(dist, b, n_max + 1, stop_on_convergence=False)
    if orbit.divergent:
        raise DivergenceError(orbit.divergent_at, f"partition function diverged at step {orbit.divergent_at}")
    p1 = dist.p1
    m11 = m22 = 1.0
    m12 = m21 = 0.0
    scale = 0  # product = 2**scale * m
    for n in range(n_max + 1):
        dr = evaluate_R(dist, orbit.v[n])[1]
        # left-multiply by DF(s_n) = [[p1, dr], [p1, b dr]]
        t1 = p1 * m11 + dr * m21
        t2 = p1 * m12 + dr * m22
        m21 = p1 * m11 + b * dr * m21
        m22 = p1 * m12 + b * dr * m22
        m11, m12 = t1, t2
        top = max(abs(m11), abs(m12), abs(m21), abs(m22))
        if top == 0:
            e = 0
        else:
            _, e = math.frexp(top)
            m11, m12, m21, m22 = (math.ldexp(m, -e) for m in (m11, m12, m21, m22))
        scale += e
        xi1, xi2 = float(orbit.u[n + 1]), float(orbit.v[n + 1])
        yield MomentRecord(
            n=n,
            EL=(math.ldexp(m11, scale) / xi1, math.ldexp(m21, scale) / xi2),
            EQ=(math.ldexp(m12, scale) / xi1, math.ldexp(m22, scale) / xi2),
        )


def expected_counts(dist: OffspringDistribution, b: float, n: int) -> MomentRecord:
    record = None
    for record in moment_trajectory(dist, b, n):
        pass
    return record


def moment_records(dist: OffspringDistribution, b: float, ns: Iterable[int]) -> list[MomentRecord]:
    wanted = sorted(set(int(n) for n in ns))
    if not wanted:
        return []
    keep = set(wanted)
    return [r for r in moment_trajectory(dist, b, wanted[-1]) if r.n in keep]


def scaled_counts_scan(dist: OffspringDistribution, cp: CriticalPoint, n_list: Sequence[int]) -> list[tuple[int, float, float]]:
    """``(n, n^2 E^1 N_n, n^2 E^2 N_n)`` at ``b = b_c``."""
    out = []
    for r in moment_records(dist, cp.b_c, n_list):
        en1, en2 = r.EN
        out.append((r.n, r.n**2 * en1, r.n**2 * en2))
    return out


def power_law_exponent(n_lo: int, value_lo: float, n_hi: int, value_hi: float) -> float:
    """Slope of ``log value`` against ``log n`` through two points."""
    return math.log(value_hi / value_lo) / math.log(n_hi / n_lo)


def fitted_decay_exponent(dist: OffspringDistribution, b: float, n_lo: int, n_hi: int, which: str = "EQ", x: int = 2) -> float:
    """Decay exponent of ``which`` on the window ``[n_lo, n_hi]``.

    Two-point comparison at ``(n_hi/2, n_hi)``: local slopes approach the
    limit like ``log n / n``, so the top octave of the window is used.
    """
    half = n_hi // 2
    if half < n_lo:
        raise DomainError("window too short for an octave fit")
    lo, hi = moment_records(dist, b, [half, n_hi])
    i = min(x, 2) - 1
    return power_law_exponent(half, getattr(lo, which)[i], n_hi, getattr(hi, which)[i])


def tangent_product(dist: OffspringDistribution, b: float, n: int) -> np.ndarray:
    """``DF^(n+1)`` at (1, 1) as a plain matrix (may underflow for huge n)."""
    orbit = iterate_orbit(dist, b, n + 1, stop_on_convergence=False)
    if orbit.divergent:
        raise DivergenceError(orbit.divergent_at)
    prod = np.eye(2)
    for j in range(n + 1):
        dr = evaluate_R(dist, orbit.v[j])[1]
        prod = np.array([[dist.p1, dr], [dist.p1, b * dr]]) @ prod
    return prod
