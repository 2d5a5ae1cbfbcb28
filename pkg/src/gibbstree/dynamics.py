"""The partition-function map F(u, v) and its orbits.

``F(u, v) = (p0 + p1 u + R(v), p0 + p1 u + b R(v))``. Starting from
``(1, 1)``, the n-th iterate is the pair of partition functions
``(Xi^1_{n-1}, Xi^2_{n-1})``; see :meth:`Orbit.xi`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .offspring import OffspringDistribution, evaluate_R

DIVERGENCE_THRESHOLD = 1e12
CONVERGENCE_TOL = 1e-14
# Slack for rounding when asserting monotonicity and region invariance.
_ORDER_SLACK = 1e-12


class StatePair(NamedTuple):
    u: float
    v: float


@dataclass(frozen=True)
class SystemParams:
    b: float
    x: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b >= 1):
            raise DomainError(f"tilting factor b must be finite and >= 1, got {self.b!r}")
        if int(self.x) < 1:
            raise DomainError(f"boundary x must be a positive integer, got {self.x!r}")
        object.__setattr__(self, "x", int(self.x))

    @property
    def boundary_class(self) -> int:
        return min(self.x, 2)


def check_b(b: float) -> float:
    b = float(b)
    if not (math.isfinite(b) and b >= 1):
        raise DomainError(f"tilting factor b must be finite and >= 1, got {b!r}")
    return b


def apply_F(dist: OffspringDistribution, b: float, s) -> StatePair:
    u, v = float(s[0]), float(s[1])
    if math.isinf(v) or math.isinf(u):
        return StatePair(math.inf, math.inf)
    if not (u >= 0 and v >= 0):
        raise DomainError(f"F needs a non-negative finite state, got {(u, v)!r}")
    r = evaluate_R(dist, v)[0]
    base = dist.p0 + dist.p1 * u
    return StatePair(base + r, base + b * r)


def tangent_DF(dist: OffspringDistribution, b: float, v: float) -> np.ndarray:
    """Jacobian of F; it does not depend on u."""
    dr = evaluate_R(dist, v)[1]
    return np.array([[dist.p1, dr], [dist.p1, b * dr]])


@dataclass(frozen=True)
class Orbit:
    """Iterates ``states[n] = F^(n)(1, 1)``.

    ``divergent_at`` is the first step whose ``v`` exceeded the threshold
    (that state is not stored). ``converged_at`` is set when the early
    stopping rule fired; later iterates equal the last state to rounding.
    """

    states: np.ndarray
    b: float
    divergent_at: int | None = None
    converged_at: int | None = None

    @property
    def divergent(self) -> bool:
        return self.divergent_at is not None

    @property
    def u(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 1]

    def __len__(self) -> int:
        return self.states.shape[0]

    def state(self, n: int) -> StatePair:
        if n < len(self):
            return StatePair(*self.states[n])
        if self.converged_at is not None:
            return StatePair(*self.states[-1])
        raise IndexError(f"orbit holds {len(self)} states, asked for {n}")

    def xi(self, n: int) -> StatePair:
        """Partition functions ``(Xi^1_n, Xi^2_n) = F^(n+1)(1, 1)``; ``n = -1`` gives ``(1, 1)``."""
        return self.state(n + 1)


def iterate_orbit(
    dist: OffspringDistribution,
    b: float,
    n_max: int,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
    stop_on_convergence: bool = True,
    start=(1.0, 1.0),
) -> Orbit:
    b = check_b(b)
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    p0, p1 = dist.p0, dist.p1
    tail = dist.probs[2:][::-1]
    u, v = float(start[0]), float(start[1])
    out = np.empty((n_max + 1, 2))
    out[0] = u, v
    divergent_at = converged_at = None
    count = 1
    for n in range(1, n_max + 1):
        # Inline Horner for R(v): this loop dominates long critical runs.
        r = 0.0
        for c in tail:
            r = r * v + c
        r *= v * v
        base = p0 + p1 * u
        nu, nv = base + r, base + b * r
        if not nv <= divergence_threshold:  # also catches nan/inf
            divergent_at = n
            break
        if nu < u - _ORDER_SLACK * u or nv < v - _ORDER_SLACK * v:
            raise AssertionError(f"orbit lost monotonicity at step {n}: {(u, v)} -> {(nu, nv)}")
        if not _in_region(nu, nv, b):
            raise AssertionError(f"orbit left the region 1<=u<=v<=bu at step {n}: {(nu, nv)}")
        out[n] = nu, nv
        count = n + 1
        step = max(abs(nu - u), abs(nv - v))
        u, v = nu, nv
        if stop_on_convergence and step < CONVERGENCE_TOL:
            converged_at = n
            break
    return Orbit(out[:count].copy(), b, divergent_at, converged_at)


def _in_region(u: float, v: float, b: float) -> bool:
    tol = _ORDER_SLACK * max(1.0, v)
    return u >= 1 - tol and u <= v + tol and v <= b * u + tol


def diverges(dist: OffspringDistribution, b: float, n_max: int, threshold: float = DIVERGENCE_THRESHOLD) -> bool:
    """True when the orbit of (1, 1) passes ``threshold`` within ``n_max`` steps."""
    p0, p1 = dist.p0, dist.p1
    tail = dist.probs[2:][::-1]
    u = v = 1.0
    for _ in range(n_max):
        r = 0.0
        for c in tail:
            r = r * v + c
        r *= v * v
        base = p0 + p1 * u
        nu, nv = base + r, base + b * r
        if not nv <= threshold:
            return True
        if nv - v < CONVERGENCE_TOL and nu - u < CONVERGENCE_TOL:
            return False
        u, v = nu, nv
    return False
