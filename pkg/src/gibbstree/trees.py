"""Planar rooted trees, exhaustive enumeration, Gibbs weights and the spin picture.

Nodes carry Neveu labels: the root is ``()`` (printed ``0``), and node
``i1 i2 ... im`` is the ``im``-th child of ``i1 ... i(m-1)``. A tree in
``T_n`` has nodes at depth ``0..n``; offspring of depth-``n`` nodes are
external and are only counted.

For enumeration every tree is stored as a spin configuration over the
label set ``Lambda_n`` restricted to ranks ``<= K``: real nodes carry their
offspring count, phantom labels carry ``-1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, EnumerationTooLarge, FKGPreconditionError, SpinDecodeError
from .offspring import OffspringDistribution

Label = tuple[int, ...]
ENUMERATION_LIMIT = 10**7


def format_label(label: Label) -> str:
    if not label:
        return "0"
    if all(d < 10 for d in label):
        return "".join(str(d) for d in label)
    return ".".join(str(d) for d in label)


def parse_label(text: str) -> Label:
    text = text.strip()
    if text == "0":
        return ()
    if "." in text:
        return tuple(int(t) for t in text.split("."))
    return tuple(int(c) for c in text)


# -- trees ---------------------------------------------------------------------


@dataclass(frozen=True)
class Tree:
    """A tree of ``T_n`` as a map from Neveu label to offspring count."""

    offspring: tuple[tuple[Label, int], ...]
    n: int

    def __post_init__(self):
        items = tuple(sorted((tuple(lab), int(x)) for lab, x in dict(self.offspring).items()))
        object.__setattr__(self, "offspring", items)
        table = dict(items)
        if () not in table:
            raise DomainError("tree has no root")
        for lab, x in items:
            if x < 0:
                raise DomainError(f"node {format_label(lab)} has negative offspring")
            if len(lab) > self.n:
                raise DomainError(f"node {format_label(lab)} lies deeper than n={self.n}")
            if lab:
                parent = lab[:-1]
                if parent not in table or not 1 <= lab[-1] <= table[parent]:
                    raise DomainError(f"node {format_label(lab)} has no matching parent")
            if len(lab) < self.n:
                for r in range(1, x + 1):
                    if lab + (r,) not in table:
                        raise DomainError(f"child {format_label(lab + (r,))} missing")

    @classmethod
    def from_mapping(cls, mapping: Mapping[Label, int], n: int) -> "Tree":
        return cls(tuple(mapping.items()), n)

    @classmethod
    def from_neveu(cls, seq: Sequence[int], n: int) -> "Tree":
        """Build from offspring counts listed generation by generation, ``X_0, X_1, ..., X_11, ...``."""
        seq = list(seq)
        if not seq:
            raise DomainError("empty Neveu sequence")
        mapping = {}
        frontier = [()]
        pos = 0
        depth = 0
        while frontier:
            nxt = []
            for lab in frontier:
                if pos >= len(seq):
                    raise DomainError("Neveu sequence too short")
                x = int(seq[pos])
                pos += 1
                mapping[lab] = x
                if depth < n:
                    nxt.extend(lab + (r,) for r in range(1, x + 1))
            frontier = nxt
            depth += 1
        if pos != len(seq):
            raise DomainError("Neveu sequence too long")
        return cls.from_mapping(mapping, n)

    @property
    def mapping(self) -> dict[Label, int]:
        return dict(self.offspring)

    def X(self, label: Label) -> int:
        """Offspring count, ``-1`` for labels not in the tree."""
        return self.mapping.get(tuple(label), -1)

    @property
    def labels(self) -> list[Label]:
        return [lab for lab, _ in self.offspring]

    def neveu_sequence(self) -> list[int]:
        ordered = sorted(self.offspring, key=lambda item: (len(item[0]), item[0]))
        return [x for _, x in ordered]

    @property
    def size(self) -> int:
        return len(self.offspring)

    @property
    def max_offspring(self) -> int:
        return max(x for _, x in self.offspring)

    def external_counts(self) -> tuple[int, int, int]:
        """``(N_n, L_n, Q_n)``: external nodes, those with a single-child parent, the rest."""
        L = Q = 0
        for lab, x in self.offspring:
            if len(lab) == self.n:
                if x == 1:
                    L += 1
                elif x >= 2:
                    Q += x
        return L + Q, L, Q

    def gw_weight(self, dist: OffspringDistribution) -> float:
        return math.prod(dist.p(x) for _, x in self.offspring)

    def canonical_hamiltonian(self, x: int) -> int:
        """``H = -#{parent-child pairs with both offspring counts >= 2}``, root paired with ``x``."""
        table = self.mapping
        h = -1 if (x >= 2 and table[()] >= 2) else 0
        for lab, xi in self.offspring:
            if lab and xi >= 2 and table[lab[:-1]] >= 2:
                h -= 1
        return h

    def __str__(self):
        return " ".join(str(x) for x in self.neveu_sequence())


def active_node_count(tree: Tree) -> int:
    return sum(1 for _, x in tree.offspring if x > 0)


# -- interaction ---------------------------------------------------------------


@dataclass(frozen=True)
class InteractionPhi:
    """Pair energy ``phi(X, Y)`` tabulated over ``{-1, 0, ..., K}``; entry ``[X+1, Y+1]``.

    Arguments above ``K`` are clamped to ``K``.
    """

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 2:
            raise DomainError("phi table must be square with at least two rows")
        if not np.all(np.isfinite(t)):
            raise DomainError("phi table must be finite")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_function(cls, fn: Callable[[int, int], float], K: int) -> "InteractionPhi":
        vals = range(-1, K + 1)
        return cls(np.array([[fn(X, Y) for Y in vals] for X in vals]))

    @classmethod
    def canonical(cls, K: int) -> "InteractionPhi":
        return cls.threshold(2, 2, K)

    @classmethod
    def threshold(cls, k: int, l: int, K: int, sign: float = -1.0) -> "InteractionPhi":
        """``sign * 1{X >= k} 1{Y >= l}``."""
        return cls.from_function(lambda X, Y: sign * float(X >= k and Y >= l), K)

    @classmethod
    def zero(cls, K: int) -> "InteractionPhi":
        return cls(np.zeros((K + 2, K + 2)))

    @property
    def K(self) -> int:
        return self.table.shape[0] - 2

    def __call__(self, X: int, Y: int) -> float:
        K = self.K
        return float(self.table[min(X, K) + 1, min(Y, K) + 1])

    def extended(self, K: int) -> np.ndarray:
        """The table re-indexed over ``{-1..K}``, extending constantly past ``self.K``."""
        idx = np.minimum(np.arange(-1, K + 1), self.K) + 1
        return self.table[np.ix_(idx, idx)]


def check_phi_lattice(phi: InteractionPhi, tol: float = 0.0) -> bool:
    """``phi(X,Y) + phi(X',Y') >= phi(X^X', Y^Y') + phi(XvX', YvY')`` for all quadruples."""
    t = phi.table
    m = t.shape[0]
    i = np.arange(m)
    X, Y, X2, Y2 = np.meshgrid(i, i, i, i, indexing="ij")
    lhs = t[X, Y] + t[X2, Y2]
    rhs = t[np.minimum(X, X2), np.minimum(Y, Y2)] + t[np.maximum(X, X2), np.maximum(Y, Y2)]
    return bool(np.all(lhs >= rhs - tol))


# -- spin configurations -------------------------------------------------------


@lru_cache(maxsize=None)
def lambda_labels(n: int, K: int) -> tuple[Label, ...]:
    """``Lambda_n`` restricted to ranks ``<= K``, in lexicographic (preorder) order."""
    if n == 0:
        return ((),)
    sub = lambda_labels(n - 1, K)
    return ((),) + tuple((r,) + lab for r in range(1, K + 1) for lab in sub)


@dataclass(frozen=True)
class SpinConfig:
    n: int
    K: int
    values: Mapping[Label, int] = field(hash=False)

    def __post_init__(self):
        labels = set(lambda_labels(self.n, self.K))
        extra = set(self.values) - labels
        if extra:
            raise DomainError(f"labels outside Lambda_n: {sorted(format_label(l) for l in extra)}")
        full = {lab: int(self.values.get(lab, -1)) for lab in lambda_labels(self.n, self.K)}
        object.__setattr__(self, "values", full)

    def __getitem__(self, label: Label) -> int:
        return self.values[tuple(label)]

    def as_vector(self) -> np.ndarray:
        return np.array([self.values[lab] for lab in lambda_labels(self.n, self.K)], dtype=np.int64)

    def mu_gw(self, dist: OffspringDistribution) -> float:
        """Product over all labels of ``p_X`` times the presence indicator (``p_-1 = 1``)."""
        total = 1.0
        for lab, xi in self.values.items():
            if lab:
                xa, r = self.values[lab[:-1]], lab[-1]
                ok = (xa >= r and xi >= 0) or (xa < r and xi < 0)
            else:
                ok = xi >= 0
            if not ok:
                return 0.0
            total *= dist.p(xi) if xi <= dist.K else 0.0
        return total

    def hamiltonian(self, x: int, phi: InteractionPhi | None = None) -> float:
        phi = phi or InteractionPhi.canonical(self.K)
        h = phi(x, self.values[()])
        for lab, xi in self.values.items():
            if lab:
                h += phi(self.values[lab[:-1]], xi)
        return h


def spin_encode(tree: Tree, K: int, n: int | None = None) -> SpinConfig:
    n = tree.n if n is None else n
    if n != tree.n:
        raise DomainError(f"tree belongs to T_{tree.n}, not T_{n}")
    if tree.max_offspring > K:
        raise DomainError(f"tree has offspring {tree.max_offspring} > K={K}")
    return SpinConfig(n, K, tree.mapping)


def spin_decode(config: SpinConfig) -> Tree:
    vals = config.values
    if vals[()] < 0:
        raise SpinDecodeError("0", "root must be a real node")
    mapping = {}
    for lab in lambda_labels(config.n, config.K):
        xi = vals[lab]
        if xi > config.K and len(lab) < config.n:
            raise SpinDecodeError(format_label(lab), f"offspring {xi} exceeds K={config.K}")
        if not lab:
            mapping[lab] = xi
            continue
        present = vals[lab[:-1]] >= lab[-1]
        if present and xi < 0:
            raise SpinDecodeError(format_label(lab), "child of a real node is marked phantom")
        if not present and xi >= 0:
            raise SpinDecodeError(format_label(lab), "phantom rule violated: rank exceeds parent offspring")
        if present:
            mapping[lab] = xi
    return Tree.from_mapping(mapping, config.n)


# -- enumeration -----------------------------------------------------------------


def count_trees(K: int, n: int) -> int:
    """Exact size of ``T_n`` with offspring at most ``K``."""
    t = K + 1
    for _ in range(n):
        t = sum(t**k for k in range(K + 1))
    return t


def _spin_block(K: int, m: int) -> np.ndarray:
    if m == 0:
        return np.arange(K + 1, dtype=np.int8)[:, None]
    sub = _spin_block(K, m - 1)
    T, L = sub.shape
    blocks = []
    for k in range(K + 1):
        if k == 0:
            rows = 1
            children = []
        else:
            idx = np.indices((T,) * k).reshape(k, -1)
            rows = idx.shape[1]
            children = [sub[idx[r]] for r in range(k)]
        head = np.full((rows, 1), k, dtype=np.int8)
        tail = np.full((rows, (K - k) * L), -1, dtype=np.int8)
        blocks.append(np.hstack([head, *children, tail]))
    return np.vstack(blocks)


@dataclass(frozen=True)
class TreeTable:
    """All trees of ``T_n`` with offspring ``<= K``, one spin configuration per row.

    Rows are ordered by root offspring count, then by the children's
    subtrees in lexicographic order.
    """

    K: int
    n: int
    spins: np.ndarray = field(repr=False)
    labels: tuple[Label, ...] = field(repr=False)
    parent: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, K: int, n: int, limit: int = ENUMERATION_LIMIT) -> "TreeTable":
        if K < 0 or n < 0:
            raise DomainError("K and n must be non-negative")
        total = count_trees(K, n)
        if total > limit:
            raise EnumerationTooLarge(total, limit)
        labels = lambda_labels(n, K)
        index = {lab: i for i, lab in enumerate(labels)}
        parent = np.array([index[lab[:-1]] if lab else -1 for lab in labels])
        depth = np.array([len(lab) for lab in labels])
        spins = _spin_block(K, n)
        return cls(K, n, spins, labels, parent, depth)

    def __len__(self) -> int:
        return self.spins.shape[0]

    def tree(self, i: int) -> Tree:
        return spin_decode(self.config(i))

    def config(self, i: int) -> SpinConfig:
        return SpinConfig(self.n, self.K, dict(zip(self.labels, self.spins[i].tolist())))

    def trees(self) -> Iterator[Tree]:
        for i in range(len(self)):
            yield self.tree(i)

    def label_index(self, label: Label) -> int:
        return self.labels.index(tuple(label))

    @property
    def root(self) -> np.ndarray:
        return self.spins[:, 0].astype(np.int64)

    def offspring_counts(self) -> np.ndarray:
        """``(T, K+1)`` array: number of real nodes with each offspring count."""
        return np.stack([(self.spins == k).sum(axis=1) for k in range(self.K + 1)], axis=1)

    def external_counts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        front = self.spins[:, self.depth == self.n].astype(np.int64)
        L = (front == 1).sum(axis=1)
        Q = np.where(front >= 2, front, 0).sum(axis=1)
        return L + Q, L, Q

    def active_counts(self) -> np.ndarray:
        return (self.spins > 0).sum(axis=1)

    def gw_weights(self, dist: OffspringDistribution) -> np.ndarray:
        if dist.K > self.K:
            raise DomainError("distribution support exceeds the enumeration K")
        ptab = np.concatenate([[1.0], dist.array, np.zeros(self.K - dist.K)])
        return np.prod(ptab[self.spins.astype(np.int64) + 1], axis=1)

    def hamiltonian(self, x: int, phi: InteractionPhi | None = None) -> np.ndarray:
        """``H^x`` for every tree, summing ``phi`` over all parent/child label pairs of ``Lambda_n``."""
        phi = phi or InteractionPhi.canonical(self.K)
        table = phi.extended(self.K)
        s = self.spins.astype(np.int64) + 1
        xi = min(int(x), self.K) + 1
        h = table[xi, s[:, 0]]
        if s.shape[1] > 1:
            h = h + table[s[:, self.parent[1:]], s[:, 1:]].sum(axis=1)
        return h + 0.0  # no negative zeros in emitted tables


def enumerate_trees(dist: OffspringDistribution, n: int, limit: int = ENUMERATION_LIMIT) -> list[Tree]:
    return list(TreeTable.build(dist.K, n, limit).trees())


@dataclass(frozen=True)
class GibbsDistribution:
    table: TreeTable
    gw: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    Xi: float = 0.0

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.Xi

    def expect(self, values: np.ndarray) -> float:
        return float(np.dot(self.probabilities, values))

    def covariance(self, f: np.ndarray, g: np.ndarray) -> float:
        p = self.probabilities
        ef, eg = np.dot(p, f), np.dot(p, g)
        return float(np.dot(p, (f - ef) * (g - eg)))


def gibbs_distribution(
    dist: OffspringDistribution,
    b: float,
    x: int,
    n: int,
    phi: InteractionPhi | None = None,
    table: TreeTable | None = None,
) -> GibbsDistribution:
    """Weights ``P^GW(w) b^{-H^x(w)}`` over all of ``T_n``, and their sum ``Xi^x_n``."""
    table = table or TreeTable.build(dist.K, n)
    if table.n != n:
        raise DomainError("tree table built for a different n")
    gw = table.gw_weights(dist)
    H = table.hamiltonian(x, phi)
    w = gw * np.power(float(b), -H)
    return GibbsDistribution(table, gw, H, w, float(math.fsum(w)))


def interpolated_gibbs(dist: OffspringDistribution, b: float, n: int, lam: float, table: TreeTable | None = None) -> GibbsDistribution:
    """Canonical interaction with energy ``H^1 - lam 1{X_0 >= 2}``: ``lam = 0`` is ``x = 1``, ``lam = 1`` is ``x = 2``."""
    table = table or TreeTable.build(dist.K, n)
    gw = table.gw_weights(dist)
    H = table.hamiltonian(1) - lam * (table.root >= 2)
    w = gw * np.power(float(b), -H)
    return GibbsDistribution(table, gw, H, w, float(math.fsum(w)))


# -- FKG -------------------------------------------------------------------------

SpinFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RampFunction:
    """``sum_j c_j 1{X_{i_j} >= t_j}`` with ``c_j > 0``; non-decreasing by construction."""

    columns: tuple[int, ...]
    thresholds: tuple[int, ...]
    weights: tuple[float, ...]

    def __call__(self, spins: np.ndarray) -> np.ndarray:
        out = np.zeros(spins.shape[0])
        for col, t, c in zip(self.columns, self.thresholds, self.weights):
            out += c * (spins[:, col] >= t)
        return out


def random_ramp_function(n_labels: int, K: int, rng: np.random.Generator, max_terms: int = 5) -> RampFunction:
    terms = int(rng.integers(1, max_terms + 1))
    cols = tuple(int(c) for c in rng.integers(0, n_labels, size=terms))
    thr = tuple(int(t) for t in rng.integers(0, K + 1, size=terms))
    wts = tuple(float(w) for w in rng.uniform(0.1, 2.0, size=terms))
    return RampFunction(cols, thr, wts)


def check_monotone(f: SpinFunction, spins: np.ndarray, rng: np.random.Generator, pairs: int = 1000) -> bool:
    """Spot-check ``f(a ^ b) <= f(a) <= f(a v b)`` on random pairs of configurations."""
    i = rng.integers(0, spins.shape[0], size=pairs)
    j = rng.integers(0, spins.shape[0], size=pairs)
    a, b = spins[i], spins[j]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    fa, flo, fhi = f(a), f(lo), f(hi)
    return bool(np.all(flo <= fa + 1e-12) and np.all(fa <= fhi + 1e-12))


def fkg_covariance(
    dist: OffspringDistribution,
    b: float,
    x: int,
    n: int,
    phi: InteractionPhi | None,
    f: SpinFunction,
    g: SpinFunction,
    table: TreeTable | None = None,
    verify_pairs: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """``E(fg) - E(f) E(g)`` under the Gibbs measure, for spin functions ``f`` and ``g``.

    ``f`` and ``g`` take the ``(T, |Lambda_n|)`` spin array and return one
    value per tree. With ``verify_pairs > 0`` their monotonicity is
    spot-checked first.
    """
    phi = phi or InteractionPhi.canonical(dist.K)
    if not check_phi_lattice(phi):
        raise FKGPreconditionError("phi does not satisfy the lattice condition; FKG is not guaranteed")
    gd = gibbs_distribution(dist, b, x, n, phi, table)
    spins = gd.table.spins.astype(np.int64)
    if verify_pairs:
        rng = rng or np.random.default_rng(0)
        for fn in (f, g):
            if not check_monotone(fn, spins, rng, verify_pairs):
                raise FKGPreconditionError("test function is not non-decreasing")
    return gd.covariance(f(spins), g(spins))


def positive_part_of(column: int) -> SpinFunction:
    """``X_i 1{X_i >= 0}`` for the label in ``column``."""
    return lambda spins: np.maximum(spins[:, column], 0).astype(float)


def raw_spin(column: int) -> SpinFunction:
    return lambda spins: spins[:, column].astype(float)


def all_labels_iter(n: int, K: int) -> Iterator[Label]:
    for depth in range(n + 1):
        yield from itertools.product(range(1, K + 1), repeat=depth)
