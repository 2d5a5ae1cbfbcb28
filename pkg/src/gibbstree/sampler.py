"""Exact top-down sampling from the tilted measure and Monte Carlo summaries.

A node of class ``y`` (1 or 2) with ``m`` generations still below it draws
``k`` children with weight ``p_k b^{1{y=2} 1{k>=2}} (Xi^{min(k,2)}_{m-1})^k``;
the weights sum to ``Xi^y_m``. Children inherit class ``min(k, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chisquare

from .dynamics import check_b, iterate_orbit
from .errors import DivergenceError, DomainError
from .offspring import OffspringDistribution, require_valid
from .trees import Label, Tree

_NORMALISER_TOL = 1e-10


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class TreeSampler:
    """Precomputed categorical laws per (class, remaining depth)."""

    def __init__(self, dist: OffspringDistribution, b: float, n: int):
        require_valid(dist)
        self.dist = dist
        self.b = check_b(b)
        if n < 0:
            raise DomainError("n must be non-negative")
        self.n = int(n)
        orbit = iterate_orbit(dist, self.b, n + 1, stop_on_convergence=False)
        if orbit.divergent:
            raise DivergenceError(orbit.divergent_at, f"partition functions diverge at step {orbit.divergent_at}")
        # xi[m + 1] = (Xi^1_m, Xi^2_m), xi[0] = (1, 1)
        self.xi = np.asarray(orbit.states, dtype=float)
        ks = np.arange(dist.K + 1)
        cls = np.minimum(ks, 2)
        self.laws = np.empty((2, n + 1, dist.K + 1))
        for m in range(n + 1):
            below = self.xi[m]  # Xi_{m-1}
            base = dist.array * below[np.maximum(cls, 1) - 1] ** ks
            for y in (1, 2):
                w = base * np.where((y == 2) & (ks >= 2), self.b, 1.0)
                total = w.sum()
                expected = self.xi[m + 1][y - 1]
                if abs(total - expected) > _NORMALISER_TOL * expected:
                    raise AssertionError(f"normaliser {total!r} differs from Xi^{y}_{m} = {expected!r}")
                self.laws[y - 1, m] = w / total
        self._cdf = np.cumsum(self.laws, axis=2)
        self._cdf[..., -1] = 1.0

    def root_law(self, x: int) -> np.ndarray:
        return self.laws[min(int(x), 2) - 1, self.n]

    def _draw(self, y: int, m: int, rng: np.random.Generator, size=None):
        return np.searchsorted(self._cdf[y - 1, m], rng.random(size), side="right")

    def sample(self, x: int, seed=None) -> Tree:
        if int(x) < 1:
            raise DomainError("boundary x must be a positive integer")
        rng = _rng(seed)
        mapping: dict[Label, int] = {}
        stack: list[tuple[Label, int]] = [((), min(int(x), 2))]
        while stack:
            label, y = stack.pop()
            m = self.n - len(label)
            k = int(self._draw(y, m, rng))
            mapping[label] = k
            if m > 0:
                child_cls = min(k, 2)
                stack.extend((label + (r,), child_cls) for r in range(k, 0, -1))
        return Tree.from_mapping(mapping, self.n)

    def sample_external(self, x: int, seed=None) -> int:
        """``N_n`` of one sampled tree, drawing a whole generation at once."""
        rng = _rng(seed)
        counts = np.zeros(3, dtype=np.int64)  # nodes per class; index 0 unused
        counts[min(int(x), 2)] = 1
        for depth in range(self.n + 1):
            m = self.n - depth
            offspring = np.zeros(self.dist.K + 1, dtype=np.int64)
            for y in (1, 2):
                if counts[y]:
                    offspring += rng.multinomial(counts[y], self.laws[y - 1, m])
            ks = np.arange(self.dist.K + 1)
            if depth == self.n:
                return int(np.dot(offspring, ks))
            counts[:] = 0
            counts[1] = offspring[1]
            counts[2] = int(np.dot(offspring[2:], ks[2:]))
        raise AssertionError("unreachable")


def sample_tree(dist: OffspringDistribution, b: float, x: int, n: int, seed=None) -> Tree:
    return TreeSampler(dist, b, n).sample(x, seed)


def replicate_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    """Independent stream for replicate ``r``; depends only on ``(master_seed, r)``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(r),))


@dataclass(frozen=True)
class SampleStats:
    replicates: int
    n_values: np.ndarray
    mean: float
    variance: float
    stderr: float
    extinction_fraction: float
    master_seed: int

    @classmethod
    def from_values(cls, values, master_seed: int) -> "SampleStats":
        vals = np.asarray(values, dtype=np.int64)
        reps = int(vals.size)
        if reps == 0:
            raise DomainError("need at least one replicate")
        # Integer sums keep the aggregate independent of replicate order.
        s1 = int(vals.sum())
        s2 = int((vals * vals).sum())
        mean = s1 / reps
        var = (s2 - s1 * s1 / reps) / (reps - 1) if reps > 1 else 0.0
        return cls(
            replicates=reps,
            n_values=vals,
            mean=mean,
            variance=var,
            stderr=math.sqrt(var / reps),
            extinction_fraction=int((vals == 0).sum()) / reps,
            master_seed=int(master_seed),
        )

    def summary(self) -> dict:
        return {
            "replicates": self.replicates,
            "mean": self.mean,
            "variance": self.variance,
            "stderr": self.stderr,
            "extinction_fraction": self.extinction_fraction,
            "master_seed": self.master_seed,
        }

    def __eq__(self, other):
        if not isinstance(other, SampleStats):
            return NotImplemented
        return self.summary() == other.summary() and np.array_equal(self.n_values, other.n_values)

    __hash__ = None


def monte_carlo_stats(
    dist: OffspringDistribution,
    b: float,
    x: int,
    n: int,
    replicates: int,
    master_seed: int,
) -> SampleStats:
    if replicates < 1:
        raise DomainError("replicates must be positive")
    sampler = TreeSampler(dist, b, n)
    values = [
        sampler.sample_external(x, np.random.default_rng(replicate_seed(master_seed, r)))
        for r in range(replicates)
    ]
    return SampleStats.from_values(values, master_seed)


def tree_frequencies(sampler: TreeSampler, x: int, samples: int, seed=None) -> dict[tuple[int, ...], int]:
    """Counts of sampled trees keyed by Neveu offspring sequence."""
    rng = _rng(seed)
    out: dict[tuple[int, ...], int] = {}
    for _ in range(samples):
        key = tuple(sampler.sample(x, rng).neveu_sequence())
        out[key] = out.get(key, 0) + 1
    return out


def chi_square_pvalue(observed, probabilities, min_expected: float = 5.0) -> tuple[float, int]:
    """Goodness-of-fit p-value, pooling cells whose expected count is below ``min_expected``.

    Returns ``(p_value, degrees_of_freedom)``. Observations in zero-probability
    cells give a p-value of 0.
    """
    obs = np.asarray(observed, dtype=float)
    prob = np.asarray(probabilities, dtype=float)
    total = obs.sum()
    if np.any(obs[prob == 0] > 0):
        return 0.0, 0
    exp = prob * total
    big = exp >= min_expected
    o, e = list(obs[big]), list(exp[big])
    if exp[~big].sum() > 0:
        o.append(obs[~big].sum())
        e.append(exp[~big].sum())
    result = chisquare(o, e)
    return float(result.pvalue), len(o) - 1
