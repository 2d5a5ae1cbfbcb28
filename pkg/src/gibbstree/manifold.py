"""Spectral data at the critical fixed point and the slow-approach diagnostics.

At ``b = b_c`` the tangent map has eigenvalues ``1`` and ``lambda2``. The
orbit of (1, 1) creeps along the centre manifold, so the gaps
``u_c - u_n`` and ``v_c - v_n`` decay like ``1/n``. The product of tangent
maps along the orbit decays like ``n^-2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criticality import CriticalPoint
from .dynamics import iterate_orbit, tangent_DF
from .errors import DivergenceError, DomainError
from .offspring import OffspringDistribution, evaluate_R

# Sanity guard for the identities checked at construction time.
_IDENTITY_GUARD = 1e-8


@dataclass(frozen=True)
class SpectralData:
    lambda2: float
    a: float
    a_alt: float
    c: float
    g2: float
    alpha_prime: float
    gamma_prime: float
    R1: float
    R2: float
    b: float
    p1: float
    S: np.ndarray | None = None
    S_inv: np.ndarray | None = None
    eigvec2: np.ndarray | None = None
    # p1 = 0: the map acts on v alone and lambda2 = 0.
    reduced: bool = False

    @property
    def gap_limits(self) -> tuple[float, float]:
        """Predicted limits of ``n (u_c - u_n)`` and ``n (v_c - v_n)``."""
        return self.a / self.g2, 1.0 / self.g2

    @property
    def theta_limit(self) -> float:
        """Limit of ``j theta_j`` implied by the conjugated recursion."""
        return -self.gamma_prime / (self.g2 * (1.0 - self.lambda2))

    def conjugate(self, dist: OffspringDistribution, v: float) -> np.ndarray:
        """``A(v) = S DF(v) S^-1``."""
        if self.reduced:
            raise DomainError("no conjugation in the reduced p1 = 0 case")
        return self.S @ tangent_DF(dist, self.b, v) @ self.S_inv

    def identity_residuals(self, dist: OffspringDistribution, v_c: float) -> dict:
        out = {
            "a_two_ways": abs(self.a - self.a_alt),
            "alpha_prime_vs_2g2": abs(self.alpha_prime - 2.0 * self.g2),
        }
        if not self.reduced:
            A = self.conjugate(dist, v_c)
            out["diagonalisation"] = float(np.max(np.abs(A - np.diag([1.0, self.lambda2]))))
        return out


def spectral_decomposition(dist: OffspringDistribution, cp: CriticalPoint) -> SpectralData:
    b = cp.b_c
    p1 = dist.p1
    q = 1.0 - p1
    _, R1, R2 = evaluate_R(dist, cp.v_c)
    lam2 = (b - 1.0) * p1 * R1
    a = R1 / q
    a_alt = 1.0 / ((b - 1.0) * q + 1.0)
    c = -0.5 * R2 * (b - 1.0) * p1 / ((b - 1.0) * q * q + 1.0)
    g2 = 0.5 * R2 * ((b - 1.0) * q + 1.0) ** 2 / ((b - 1.0) * q * q + 1.0)
    if p1 == 0:
        # Only the v-direction is dynamic; alpha' reduces to b R''_c.
        data = SpectralData(
            lambda2=0.0, a=a, a_alt=a_alt, c=0.0, g2=g2, alpha_prime=b * R2,
            gamma_prime=0.0, R1=R1, R2=R2, b=b, p1=p1, reduced=True,
        )
    else:
        e = -R1 / (p1 * ((b - 1.0) * R1 - 1.0))
        S_inv = np.array([[a, e], [1.0, -1.0]])
        det = -a - e
        S = np.array([[-1.0, -e], [-1.0, a]]) / det
        # d DF / dv = R'' [[0, 1], [0, b]]; conjugate it to read off alpha', gamma'.
        dA = S @ (R2 * np.array([[0.0, 1.0], [0.0, b]])) @ S_inv
        data = SpectralData(
            lambda2=lam2, a=a, a_alt=a_alt, c=c, g2=g2,
            alpha_prime=float(dA[0, 0]), gamma_prime=float(dA[1, 0]),
            R1=R1, R2=R2, b=b, p1=p1, S=S, S_inv=S_inv, eigvec2=S_inv[:, 1].copy(),
        )
    worst = max(data.identity_residuals(dist, cp.v_c).values())
    if not worst < _IDENTITY_GUARD * max(1.0, abs(g2), abs(b)):
        raise ArithmeticError(f"spectral identities fail (worst residual {worst!r})")
    return data


def opposite_sign_eigenvector(data: SpectralData) -> bool:
    if data.reduced:
        return False
    x, y = data.eigvec2
    return x * y < 0


# -- gap asymptotics ---------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    n: int
    u_gap_n: float
    v_gap_n: float
    u_gap_half: float
    v_gap_half: float
    expected_u: float
    expected_v: float

    @property
    def ratio(self) -> float:
        return self.u_gap_n / self.v_gap_n

    @property
    def relative_change(self) -> tuple[float, float]:
        return (
            abs(self.u_gap_n - self.u_gap_half) / abs(self.u_gap_n),
            abs(self.v_gap_n - self.v_gap_half) / abs(self.v_gap_n),
        )

    def pairing(self) -> str:
        """Which predicted limit each component lands nearer to."""
        du = abs(self.u_gap_n - self.expected_u) + abs(self.v_gap_n - self.expected_v)
        swapped = abs(self.u_gap_n - self.expected_v) + abs(self.v_gap_n - self.expected_u)
        return "u~a/g2,v~1/g2" if du <= swapped else "u~1/g2,v~a/g2"

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "u_gap_n": self.u_gap_n,
            "v_gap_n": self.v_gap_n,
            "u_gap_half": self.u_gap_half,
            "v_gap_half": self.v_gap_half,
            "expected_u": self.expected_u,
            "expected_v": self.expected_v,
            "ratio": self.ratio,
            "pairing": self.pairing(),
        }


def critical_orbit(dist: OffspringDistribution, cp: CriticalPoint, n_max: int):
    orbit = iterate_orbit(dist, cp.b_c, n_max, stop_on_convergence=False)
    if orbit.divergent:
        raise DivergenceError(orbit.divergent_at, f"orbit at b={cp.b_c!r} diverged at step {orbit.divergent_at}")
    return orbit


def gap_asymptotics(dist: OffspringDistribution, cp: CriticalPoint, n_max: int, spectral: SpectralData | None = None) -> GapReport:
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    spectral = spectral or spectral_decomposition(dist, cp)
    orbit = critical_orbit(dist, cp, n_max)
    half = n_max // 2
    u, v = orbit.u, orbit.v
    eu, ev = spectral.gap_limits
    return GapReport(
        n=n_max,
        u_gap_n=float(n_max * (cp.u_c - u[n_max])),
        v_gap_n=float(n_max * (cp.v_c - v[n_max])),
        u_gap_half=float(half * (cp.u_c - u[half])),
        v_gap_half=float(half * (cp.v_c - v[half])),
        expected_u=eu,
        expected_v=ev,
    )


# -- theta / rho diagnostics --------------------------------------------------


@dataclass(frozen=True)
class ThetaRhoReport:
    n0: int
    n_max: int
    theta: np.ndarray  # theta[j - n0] for j = n0..n_max
    log_rho_product: np.ndarray  # log prod_{i=n0}^{j} rho_i for j = n0..n_max-1
    theta_limit: float
    rho_exponent_expected: float
    reduced: bool = False

    @property
    def j_theta(self) -> float:
        return self.n_max * float(self.theta[-1])

    def log_rho_at(self, j: int) -> float:
        return float(self.log_rho_product[j - self.n0])

    def rho_exponent(self, n: int | None = None) -> float:
        """Two-point slope of ``log prod rho`` against ``log j`` between ``n/2`` and ``n``."""
        n = (self.n_max - 1) if n is None else n
        half = n // 2
        if half <= self.n0:
            raise DomainError("not enough iterates past n0 for a two-point fit")
        return (self.log_rho_at(n) - self.log_rho_at(half)) / math.log(n / half)


def _first_close_index(v: np.ndarray, v_c: float, tol: float) -> int:
    idx = np.flatnonzero(np.abs(v - v_c) < tol)
    if idx.size == 0:
        raise DomainError("orbit never comes within the n0 tolerance of v_c")
    return int(idx[0])


def theta_rho_diagnostics(
    dist: OffspringDistribution,
    cp: CriticalPoint,
    n_max: int,
    spectral: SpectralData | None = None,
    n0_tol: float = 1e-2,
) -> ThetaRhoReport:
    """Iterate ``theta_{j+1} = (gamma + (lambda2 + delta) theta_j) / (1 + alpha + beta theta_j)``.

    ``alpha, beta, gamma, delta`` are the deviations of ``A(v_j) = S DF(v_j) S^-1``
    from ``diag(1, lambda2)``; ``rho_j = 1 + alpha + beta theta_j``. With
    ``p1 = 0`` the system is one-dimensional and ``rho_j = b R'(v_j)``.
    """
    spectral = spectral or spectral_decomposition(dist, cp)
    orbit = critical_orbit(dist, cp, n_max)
    v = orbit.v
    n0 = _first_close_index(v, cp.v_c, n0_tol)
    if n0 >= n_max:
        raise DomainError("n_max must exceed n0")
    b = cp.b_c
    count = n_max - n0
    theta = np.zeros(count + 1)
    log_rho = np.empty(count)
    if spectral.reduced:
        acc = 0.0
        for i in range(count):
            acc += math.log(b * evaluate_R(dist, v[n0 + i])[1])
            log_rho[i] = acc
        return ThetaRhoReport(n0, n_max, theta, log_rho, 0.0, -spectral.alpha_prime / spectral.g2, reduced=True)
    S, S_inv = spectral.S, spectral.S_inv
    p1 = dist.p1
    th = 0.0
    acc = 0.0
    for i in range(count):
        dr = evaluate_R(dist, v[n0 + i])[1]
        A = S @ np.array([[p1, dr], [p1, b * dr]]) @ S_inv
        rho = A[0, 0] + A[0, 1] * th
        acc += math.log(rho)
        log_rho[i] = acc
        th = (A[1, 0] + A[1, 1] * th) / rho
        theta[i + 1] = th
    return ThetaRhoReport(
        n0, n_max, theta, log_rho, spectral.theta_limit, -spectral.alpha_prime / spectral.g2
    )
