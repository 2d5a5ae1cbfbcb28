"""Fixed points of F, the saddle-node critical point, and Lagrange expansions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import StatePair, check_b, diverges
from .errors import NoCriticalPointError, SeriesOrderError
from .offspring import OffspringDistribution, evaluate_R, require_valid
from .series import PowerSeries

ROOT_TOL = 1e-13
CRITICAL_B_TOL = 1e-9
SERIES_CAP = 64
_MAX_GROWTH = 200
_RTOL = 4 * np.finfo(float).eps


class Phase(str, enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CriticalPoint:
    b_c: float
    u_c: float
    v_c: float
    residuals: dict = field(default_factory=dict, compare=False)
    # Free process exactly critical: b_c = 1 and the fixed point sits at (1, 1).
    boundary: bool = False

    @property
    def state(self) -> StatePair:
        return StatePair(self.u_c, self.v_c)

    def as_dict(self) -> dict:
        return {
            "b_c": self.b_c,
            "u_c": self.u_c,
            "v_c": self.v_c,
            "residuals": dict(self.residuals),
            "boundary": self.boundary,
        }


def _bbar(dist: OffspringDistribution, b: float) -> float:
    return dist.p1 + (1.0 - dist.p1) * b


def _residual(dist, b):
    q = 1.0 - dist.p1
    slope = _bbar(dist, b) / q
    c0 = dist.p0 / q

    def r(v):
        return c0 + slope * evaluate_R(dist, v)[0] - v

    def dr(v):
        return slope * evaluate_R(dist, v)[1] - 1.0

    return r, dr


def _grow_until(pred, start: float) -> float:
    hi = max(2.0 * start, start + 1.0)
    for _ in range(_MAX_GROWTH):
        if pred(hi):
            return hi
        hi = 2.0 * hi
    raise RuntimeError("bracket growth failed")


def _polish(f, df, x, lo, hi, steps=3):
    for _ in range(steps):
        d = df(x)
        if d == 0:
            break
        nx = x - f(x) / d
        if not lo <= nx <= hi or abs(f(nx)) > abs(f(x)):
            break
        x = nx
    return x


def fixed_point_u(dist: OffspringDistribution, v: float) -> float:
    return (dist.p0 + evaluate_R(dist, v)[0]) / (1.0 - dist.p1)


def find_fixed_points(dist: OffspringDistribution, b: float) -> list[StatePair]:
    """Real fixed points of F with ``v >= 1``, sorted by ``v`` (0, 1 or 2 of them).

    The v-equation residual is convex, so it is first minimised on
    ``[1, inf)``; the sign of the minimum decides the count and gives the
    brackets for the roots.
    """
    require_valid(dist)
    b = check_b(b)
    r, dr = _residual(dist, b)
    if dr(1.0) >= 0:
        v_min = 1.0
    else:
        hi = _grow_until(lambda v: dr(v) > 0, 1.0)
        v_min = brentq(dr, 1.0, hi, xtol=1e-15, rtol=_RTOL)
    r_min = r(v_min)
    tol = ROOT_TOL * max(1.0, v_min)
    if r_min > tol:
        return []
    if abs(r_min) <= tol:
        return [StatePair(fixed_point_u(dist, v_min), v_min)]
    roots = []
    r1 = r(1.0)
    if v_min > 1.0:
        if r1 == 0:
            roots.append(1.0)
        elif r1 > 0:
            v = brentq(r, 1.0, v_min, xtol=1e-15, rtol=_RTOL)
            roots.append(_polish(r, dr, v, 1.0, v_min))
    hi = _grow_until(lambda v: r(v) > 0, v_min)
    v = brentq(r, v_min, hi, xtol=1e-15, rtol=_RTOL)
    roots.append(_polish(r, dr, v, v_min, hi))
    return [StatePair(fixed_point_u(dist, v), v) for v in roots]


def find_critical_point(dist: OffspringDistribution) -> CriticalPoint:
    """Solve ``v = p0/(1-p1) + R(v)/R'(v)``, then recover ``b_c`` and ``u_c``.

    ``v - R(v)/R'(v)`` is strictly increasing, so the root is unique.
    """
    report = require_valid(dist)
    p0, p1 = dist.p0, dist.p1
    q = 1.0 - p1
    free_mean = dist.mean
    boundary = abs(free_mean - 1.0) <= 1e-12
    if not report.subcritical_free and not boundary:
        raise NoCriticalPointError(
            f"no critical point exists: the free process has mean {free_mean!r} >= 1"
        )

    def h(v):
        rv, drv, _ = evaluate_R(dist, v)
        return p0 / q + rv / drv - v

    def dh(v):
        rv, drv, d2rv = evaluate_R(dist, v)
        return -rv * d2rv / (drv * drv)

    if boundary or h(1.0) <= 0:
        v_c = 1.0
    else:
        hi = _grow_until(lambda v: h(v) < 0, 1.0)
        v_c = brentq(h, 1.0, hi, xtol=1e-15, rtol=_RTOL)
        v_c = _polish(h, dh, v_c, 1.0, hi)
    rv, drv, _ = evaluate_R(dist, v_c)
    b_c = 1.0 / drv - p1 / q
    if boundary:
        b_c = 1.0
    u_c = (p0 + rv) / q
    residuals = {
        "fixed_u": p0 + p1 * u_c + rv - u_c,
        "fixed_v": p0 + p1 * u_c + b_c * rv - v_c,
        "tangency": _bbar(dist, b_c) / q * drv - 1.0,
    }
    return CriticalPoint(b_c=b_c, u_c=u_c, v_c=v_c, residuals=residuals, boundary=boundary)


def classify_phase(dist: OffspringDistribution, b: float) -> Phase:
    require_valid(dist)
    b = check_b(b)
    if dist.mean > 1.0 + 1e-12:
        # A supercritical free process stays supercritical under tilting.
        return Phase.SUPERCRITICAL
    # The tolerance band wins: just above b_c there are no real fixed points.
    cp = find_critical_point(dist)
    if abs(b - cp.b_c) <= CRITICAL_B_TOL:
        return Phase.CRITICAL
    if not find_fixed_points(dist, b):
        return Phase.SUPERCRITICAL
    return Phase.SUBCRITICAL


def bisect_critical_b(
    dist: OffspringDistribution,
    width: float = 1e-6,
    n_max: int = 1_000_000,
) -> tuple[float, float]:
    """Bracket ``b_c`` using only whether the orbit of (1, 1) blows up.

    Independent of the fixed-point algebra. ``n_max`` bounds the time spent
    near the bottleneck; it must exceed the passage time at distance
    ``width / 2`` from ``b_c``.
    """
    lo = 1.0
    hi = 2.0
    while not diverges(dist, hi, n_max):
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise NoCriticalPointError("orbit never diverges")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if diverges(dist, mid, n_max):
            hi = mid
        else:
            lo = mid
    return lo, hi


# -- Lagrange expansions ---------------------------------------------------


def _rbar_coeffs(dist: OffspringDistribution) -> list[float]:
    """Polynomial coefficients of ``Rbar(z) = R(z / (1 - p1))``."""
    q = 1.0 - dist.p1
    return [0.0, 0.0] + [dist.probs[k] / q**k for k in range(2, dist.K + 1)]


def _check_order(order: int) -> int:
    order = int(order)
    if order < 1:
        raise SeriesOrderError("series order must be at least 1")
    if order > SERIES_CAP:
        raise SeriesOrderError(f"series order {order} exceeds the cap {SERIES_CAP}")
    return order


@dataclass(frozen=True)
class FixedPointSeries:
    """``z = (1-p1) v`` and ``w = (1-p1) u`` at the smaller fixed point, in powers of ``bbar = p1 + (1-p1) b``."""

    z: PowerSeries
    w: PowerSeries
    p1: float

    def evaluate(self, b: float, order: int | None = None) -> StatePair:
        bbar = self.p1 + (1.0 - self.p1) * b
        k = self.z.order if order is None else order
        z = PowerSeries(self.z.coeffs[: k + 1]).evaluate(bbar)
        w = PowerSeries(self.w.coeffs[: k + 1]).evaluate(bbar)
        q = 1.0 - self.p1
        return StatePair(w / q, z / q)


def lagrange_fixed_point_series(dist: OffspringDistribution, order: int) -> FixedPointSeries:
    """Coefficients ``[bbar^n] z = (1/n) [t^(n-1)] Rbar(p0 + t)^n`` and the companion for ``u``.

    The ``u`` series carries the extra factor ``Rbar'(p0 + t)`` and the
    constant ``p0 + Rbar(p0)``.
    """
    order = _check_order(order)
    p0 = dist.p0
    rbar = PowerSeries.taylor_shift(_rbar_coeffs(dist), p0, order)
    drbar = rbar.derivative()
    z = [p0]
    w = [p0 + rbar[0]]
    power = PowerSeries.constant(1.0, order)
    for n in range(1, order + 1):
        power = power * rbar
        z.append(power[n - 1] / n)
        w.append((power * drbar)[n - 1] / n)
    return FixedPointSeries(PowerSeries(z, "bbar"), PowerSeries(w, "bbar"), dist.p1)


@dataclass(frozen=True)
class CriticalSeries:
    """``z_c = (1-p1) v_c`` and ``u_c`` in powers of ``1/bbar_c``."""

    z: PowerSeries
    u: PowerSeries
    p1: float

    def evaluate(self, inv_bbar_c: float, order: int | None = None) -> StatePair:
        k = self.z.order if order is None else order
        z = PowerSeries(self.z.coeffs[: k + 1]).evaluate(inv_bbar_c)
        u = PowerSeries(self.u.coeffs[: k + 1]).evaluate(inv_bbar_c)
        return StatePair(u, z / (1.0 - self.p1))


def lagrange_vc_series(dist: OffspringDistribution, order: int) -> CriticalSeries:
    """Invert ``1/bbar_c = Rbar'(z_c)`` by Lagrange: ``[s^n] z_c = (1/n) [z^(n-1)] (z / Rbar'(z))^n``.

    ``u_c = (p0 + Rbar(z_c)) / (1-p1)`` is obtained by series composition.
    """
    order = _check_order(order)
    if not dist.p2 > 0:
        raise SeriesOrderError("expansion base requires p2>0")
    rb = _rbar_coeffs(dist)
    rbar = PowerSeries.from_polynomial(rb, order)
    # Rbar'(z)/z = sum_k (k+2) pbar_{k+2} z^k
    drbar_over_z = PowerSeries.from_polynomial(
        [(k + 2) * rb[k + 2] for k in range(len(rb) - 2)], order
    )
    phi = drbar_over_z.reciprocal()
    coeffs = [0.0]
    power = PowerSeries.constant(1.0, order)
    for n in range(1, order + 1):
        power = power * phi
        coeffs.append(power[n - 1] / n)
    z = PowerSeries(coeffs, "1/bbar_c")
    u = (rbar.compose(z) + dist.p0) / (1.0 - dist.p1)
    return CriticalSeries(z, PowerSeries(u.coeffs, "1/bbar_c"), dist.p1)
