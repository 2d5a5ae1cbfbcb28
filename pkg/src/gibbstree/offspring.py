"""Offspring laws (p_k) and the tail generating function R(v) = sum_{k>=2} p_k v^k."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidDistributionError

PROB_SUM_TOL = 1e-12
TRUNCATION_TAIL = 1e-12


@dataclass(frozen=True)
class OffspringDistribution:
    """Finite-support offspring law ``probs[k] = p_k`` for ``k = 0..K``.

    Construction only rejects malformed input (empty, non-finite). Model
    invariants such as ``p_0 > 0`` are reported by :func:`validate`, so an
    invalid law can still be built and inspected.
    """

    probs: tuple[float, ...]
    _arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise DomainError("offspring distribution needs at least one probability")
        if not all(math.isfinite(p) for p in probs):
            raise DomainError("offspring probabilities must be finite")
        # K >= 2 always: pad short laws with zeros.
        probs = probs + (0.0,) * max(0, 3 - len(probs))
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_arr", np.array(probs))

    @classmethod
    def from_poisson(cls, mean: float, tail: float = TRUNCATION_TAIL) -> "OffspringDistribution":
        """Truncate a Poisson law where the remaining mass drops below ``tail``."""
        if not mean > 0:
            raise DomainError("Poisson mean must be positive")
        probs = []
        p = math.exp(-mean)
        k = 0
        total = 0.0
        while True:
            probs.append(p)
            total += p
            if 1.0 - total < tail and k >= 2:
                break
            k += 1
            p *= mean / k
        s = sum(probs)
        return cls(tuple(q / s for q in probs))

    @property
    def K(self) -> int:
        return len(self.probs) - 1

    @property
    def array(self) -> np.ndarray:
        return self._arr.copy()

    def p(self, k: int) -> float:
        if k == -1:
            return 1.0
        return self.probs[k] if 0 <= k <= self.K else 0.0

    @property
    def p0(self) -> float:
        return self.probs[0]

    @property
    def p1(self) -> float:
        return self.probs[1]

    @property
    def p2(self) -> float:
        return self.probs[2]

    @property
    def mean(self) -> float:
        return float(sum(k * p for k, p in enumerate(self.probs)))

    def R(self, v: float) -> float:
        return evaluate_R(self, v)[0]

    def R_derivs(self, v: float) -> tuple[float, float, float]:
        return evaluate_R(self, v)


def evaluate_R(dist: OffspringDistribution, v: float) -> tuple[float, float, float]:
    """Return ``(R(v), R'(v), R''(v))`` by Horner's scheme on the tail coefficients."""
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"R is evaluated at a non-finite point {v!r}")
    if v < 0:
        raise DomainError(f"R is evaluated at a negative point {v!r}")
    probs = dist.probs
    r = dr = d2r = 0.0
    for k in range(dist.K, 1, -1):
        d2r = d2r * v + 2.0 * dr
        dr = dr * v + r
        r = r * v + probs[k]
    # Horner above built sum_{k>=2} p_k v^(k-2); lift by v^2.
    v2 = v * v
    return (
        r * v2,
        dr * v2 + 2.0 * r * v,
        d2r * v2 + 4.0 * dr * v + 2.0 * r,
    )


@dataclass(frozen=True)
class ValidationReport:
    mean: float
    subcritical_free: bool
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "subcritical_free": self.subcritical_free,
            "violations": list(self.violations),
            "ok": self.ok,
        }


def validate(dist: OffspringDistribution) -> ValidationReport:
    probs = dist.probs
    violations = []
    if any(p < 0 for p in probs):
        bad = [k for k, p in enumerate(probs) if p < 0]
        violations.append(f"p_k>=0 fails at k={bad}")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_SUM_TOL:
        violations.append(f"sum p_k=1 fails (sum={total!r})")
    if not probs[0] > 0:
        violations.append("p_0>0 fails")
    if not probs[0] + probs[1] < 1:
        violations.append("p_0+p_1<1 fails")
    mean = dist.mean
    # p_1 + R'(1) is the free mean, written this way to mirror the criterion.
    free_mean = probs[1] + sum(k * p for k, p in enumerate(probs) if k >= 2)
    return ValidationReport(mean=mean, subcritical_free=free_mean < 1.0, violations=tuple(violations))


def require_valid(dist: OffspringDistribution) -> ValidationReport:
    report = validate(dist)
    if not report.ok:
        raise InvalidDistributionError(report.violations)
    return report


def as_distribution(p: OffspringDistribution | Sequence[float]) -> OffspringDistribution:
    if isinstance(p, OffspringDistribution):
        return p
    return OffspringDistribution(tuple(p))
