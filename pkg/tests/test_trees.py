import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbstree.dynamics import iterate_orbit
from gibbstree.errors import DomainError, EnumerationTooLarge, FKGPreconditionError, SpinDecodeError
from gibbstree.moments import expected_counts
from gibbstree.offspring import OffspringDistribution
from gibbstree.trees import (
    InteractionPhi,
    SpinConfig,
    Tree,
    TreeTable,
    active_node_count,
    check_monotone,
    check_phi_lattice,
    count_trees,
    enumerate_trees,
    fkg_covariance,
    format_label,
    gibbs_distribution,
    interpolated_gibbs,
    lambda_labels,
    parse_label,
    positive_part_of,
    random_ramp_function,
    raw_spin,
    spin_decode,
    spin_encode,
)

from .conftest import random_laws

HALF = OffspringDistribution((0.5, 0.0, 0.5))


@pytest.mark.parametrize("K, n, count", [(2, 1, 13), (2, 0, 3), (1, 2, 4), (2, 2, 183), (3, 1, 85)])
def test_enumeration_counts(K, n, count):
    trees = list(TreeTable.build(K, n).trees())
    assert len(trees) == count == count_trees(K, n)
    assert len({t.offspring for t in trees}) == count


def test_enumerate_trees_uses_the_support_bound():
    assert len(enumerate_trees(OffspringDistribution((0.5, 0.25, 0.25)), 1)) == 13


def test_enumeration_order_is_lexicographic_in_root_then_children():
    trees = enumerate_trees(OffspringDistribution((0.5, 0.25, 0.25)), 1)
    assert [t.neveu_sequence() for t in trees[:5]] == [[0], [1, 0], [1, 1], [1, 2], [2, 0, 0]]


def test_enumeration_guard():
    with pytest.raises(EnumerationTooLarge) as info:
        TreeTable.build(2, 4)
    assert info.value.count == count_trees(2, 4) > 10**7


def test_tree_from_neveu_and_labels():
    t = Tree.from_neveu([2, 1, 0, 2], 2)
    assert t.X(()) == 2 and t.X((1,)) == 1 and t.X((2,)) == 0 and t.X((1, 1)) == 2
    assert t.X((3,)) == -1
    assert t.external_counts() == (2, 0, 2)
    assert [format_label(l) for l in t.labels] == ["0", "1", "11", "2"]
    assert parse_label("11") == (1, 1) and parse_label("0") == ()
    assert parse_label("12.3") == (12, 3) and format_label((12, 3)) == "12.3"


@pytest.mark.parametrize(
    "seq, n",
    [([2, 1], 1), ([1, 0, 0], 1), ([], 0)],
)
def test_bad_neveu_sequences(seq, n):
    with pytest.raises(DomainError):
        Tree.from_neveu(seq, n)


def test_tree_structure_checks():
    with pytest.raises(DomainError):
        Tree.from_mapping({(): 1}, 1)  # child 1 missing
    with pytest.raises(DomainError):
        Tree.from_mapping({(): 1, (2,): 0}, 1)
    with pytest.raises(DomainError):
        Tree.from_mapping({(1,): 0}, 1)


def test_gibbs_small_example():
    gd = gibbs_distribution(HALF, 2.0, 2, 0)
    assert gd.Xi == pytest.approx(1.5, abs=1e-15)
    assert gd.probabilities.tolist() == pytest.approx([1 / 3, 0.0, 2 / 3], abs=1e-15)


@pytest.mark.parametrize("dist", random_laws(31, 4, K_choices=(2, 3)))
@pytest.mark.parametrize("x", [1, 2, 5])
def test_gibbs_at_b_one_is_normalised(dist, x):
    for n in range(3 if dist.K == 2 else 2):
        assert gibbs_distribution(dist, 1.0, x, n).Xi == pytest.approx(1.0, abs=1e-14)


def test_canonical_hamiltonian_example():
    t = Tree.from_neveu([2, 0, 0], 1)
    assert t.canonical_hamiltonian(2) == -1
    assert t.canonical_hamiltonian(1) == 0
    assert spin_encode(t, 2).hamiltonian(2) == -1


@pytest.mark.parametrize("dist", random_laws(41, 3, K_choices=(2, 3)))
@pytest.mark.parametrize("b", [1.3, 3.0])
def test_partition_function_matches_orbit(dist, b):
    n_max = 3 if dist.K == 2 else 2
    orbit = iterate_orbit(dist, b, n_max + 1, stop_on_convergence=False)
    for n in range(n_max + 1):
        table = TreeTable.build(dist.K, n)
        for x in (1, 2):
            gd = gibbs_distribution(dist, b, x, n, table=table)
            assert gd.Xi == pytest.approx(orbit.xi(n)[x - 1], rel=1e-12)


def test_table_and_per_tree_hamiltonians_agree():
    dist = OffspringDistribution((0.4, 0.3, 0.2, 0.1))
    table = TreeTable.build(3, 1)
    phi = InteractionPhi.from_function(lambda X, Y: 0.3 * X - 0.1 * Y + 0.05 * X * Y, 3)
    H = table.hamiltonian(2, phi)
    for i in range(len(table)):
        assert H[i] == pytest.approx(table.config(i).hamiltonian(2, phi), abs=1e-12)
        assert table.hamiltonian(2)[i] == table.tree(i).canonical_hamiltonian(2)
    gw = table.gw_weights(dist)
    assert [table.tree(i).gw_weight(dist) for i in range(len(table))] == pytest.approx(gw.tolist(), abs=1e-16)


# -- active nodes ------------------------------------------------------------


def test_active_node_examples():
    assert active_node_count(Tree.from_neveu([0], 0)) == 0
    assert active_node_count(Tree.from_neveu([2, 0, 0], 1)) == 1
    t = Tree.from_neveu([2, 2, 0, 0, 0], 2)
    assert active_node_count(t) == 2
    assert -t.canonical_hamiltonian(2) == 2


def test_active_nodes_equal_energy_without_single_children():
    for K, n in [(2, 3), (3, 2)]:
        table = TreeTable.build(K, n)
        keep = ~np.any(table.spins == 1, axis=1)  # the p1 = 0 support
        A = table.active_counts()[keep]
        assert np.array_equal(-table.hamiltonian(2)[keep], A)
        assert np.array_equal(-table.hamiltonian(1)[keep], A - (table.root[keep] > 0))
    for t in enumerate_trees(OffspringDistribution((0.5, 0.0, 0.5)), 2):
        if all(x != 1 for _, x in t.offspring):
            assert -t.canonical_hamiltonian(2) == active_node_count(t)


# -- spins --------------------------------------------------------------------


def test_encode_example():
    cfg = spin_encode(Tree.from_neveu([1, 0], 1), 2)
    assert {format_label(k): v for k, v in cfg.values.items()} == {"0": 1, "1": 0, "2": -1}
    p = OffspringDistribution((0.2, 0.3, 0.5))
    assert cfg.mu_gw(p) == pytest.approx(0.3 * 0.2, abs=1e-17)


def test_decode_single_leaf():
    cfg = SpinConfig(2, 2, {(): 0})
    t = spin_decode(cfg)
    assert t.neveu_sequence() == [0]
    assert cfg.mu_gw(HALF) == 0.5


def test_label_set_size():
    assert len(lambda_labels(3, 2)) == 1 + 2 + 4 + 8
    assert lambda_labels(1, 2) == ((), (1,), (2,))


@pytest.mark.parametrize(
    "values, bad",
    [({(): 1, (1,): 0, (2,): 0}, "2"), ({(): 1}, "1"), ({(): -1}, "0")],
)
def test_decode_reports_offending_label(values, bad):
    with pytest.raises(SpinDecodeError) as info:
        spin_decode(SpinConfig(1, 2, values))
    assert info.value.label == bad


def test_round_trip_and_mass_over_enumeration():
    dist = OffspringDistribution((0.3, 0.3, 0.4))
    table = TreeTable.build(2, 2)
    total = 0.0
    for i in range(len(table)):
        t = table.tree(i)
        cfg = spin_encode(t, 2)
        assert spin_decode(cfg) == t
        total += cfg.mu_gw(dist)
        assert cfg.mu_gw(dist) == pytest.approx(t.gw_weight(dist), abs=1e-16)
    assert total == pytest.approx(1.0, abs=1e-14)


def test_mu_vanishes_off_support():
    bad = SpinConfig(1, 2, {(): 0, (1,): 0})
    assert bad.mu_gw(HALF) == 0.0


# -- interaction and FKG --------------------------------------------------------


def test_phi_lattice_examples():
    assert check_phi_lattice(InteractionPhi.canonical(3))
    assert check_phi_lattice(InteractionPhi.zero(3))
    assert not check_phi_lattice(InteractionPhi.threshold(2, 2, 3, sign=+1.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(-1, 4), st.integers(-1, 4), st.integers(2, 4))
def test_threshold_interactions_satisfy_lattice(k, l, K):
    assert check_phi_lattice(InteractionPhi.threshold(k, l, K))


def test_phi_extension_is_constant_beyond_K():
    phi = InteractionPhi.canonical(2)
    assert phi(5, 7) == -1.0 and phi(-1, 9) == 0.0
    ext = phi.extended(4)
    assert ext.shape == (6, 6) and ext[5, 5] == -1.0


@pytest.mark.parametrize("p2", [0.3, 0.5, 0.7])
def test_fkg_remark_identities(p2):
    p0 = 1 - p2
    dist = OffspringDistribution((p0, 0.0, p2))
    table = TreeTable.build(2, 1)
    i1, i2 = table.label_index((1,)), table.label_index((2,))
    gd = gibbs_distribution(dist, 1.0, 1, 1, table=table)
    s = table.spins.astype(float)
    X1, X2 = s[:, i1], s[:, i2]
    assert gd.expect(X1 * X2) == pytest.approx(p0 + 4 * p2**3, abs=1e-12)
    assert gd.expect(X1) * gd.expect(X2) == pytest.approx((-p0 + 2 * p2**2) ** 2, abs=1e-12)
    f1, f2 = np.maximum(X1, 0), np.maximum(X2, 0)
    assert gd.expect(f1 * f2) == pytest.approx(4 * p2**3, abs=1e-12)
    assert gd.expect(f1) * gd.expect(f2) == pytest.approx(4 * p2**4, abs=1e-12)
    # five states carry all the mass
    assert np.count_nonzero(gd.probabilities) == 5
    cov = fkg_covariance(dist, 1.0, 1, 1, None, raw_spin(i1), raw_spin(i2), table=table)
    assert cov >= 0
    cov = fkg_covariance(dist, 1.0, 1, 1, None, positive_part_of(i1), positive_part_of(i2), table=table)
    assert cov == pytest.approx(4 * p2**3 - 4 * p2**4, abs=1e-12)


def test_constant_function_has_zero_covariance():
    f = lambda s: np.full(s.shape[0], 3.0)
    assert fkg_covariance(HALF, 2.0, 2, 2, None, f, raw_spin(0)) == 0.0


def test_fkg_refuses_non_lattice_phi():
    with pytest.raises(FKGPreconditionError):
        fkg_covariance(HALF, 2.0, 2, 1, InteractionPhi.threshold(2, 2, 2, +1.0), raw_spin(0), raw_spin(1))


def test_fkg_rejects_decreasing_function():
    dec = lambda s: -s[:, 0].astype(float)
    with pytest.raises(FKGPreconditionError):
        fkg_covariance(HALF, 2.0, 2, 1, None, dec, raw_spin(1), verify_pairs=500)


@pytest.mark.parametrize("b", [1.0, 2.0, 5.0])
def test_fkg_random_ramps(b):
    dist = OffspringDistribution((0.4, 0.35, 0.25))
    table = TreeTable.build(2, 3)
    rng = np.random.default_rng(int(b * 100))
    spins = table.spins.astype(np.int64)
    worst = math.inf
    for _ in range(100):
        f = random_ramp_function(len(table.labels), 2, rng)
        g = random_ramp_function(len(table.labels), 2, rng)
        assert check_monotone(f, spins, rng, 200)
        worst = min(worst, fkg_covariance(dist, b, 2, 3, None, f, g, table=table))
    assert worst >= -1e-12


def test_lambda_interpolation_is_monotone():
    dist = OffspringDistribution((0.35, 0.4, 0.25))
    b, n = 3.0, 3
    table = TreeTable.build(2, n)
    N = table.external_counts()[0]
    values = [interpolated_gibbs(dist, b, n, lam, table).expect(N) for lam in np.linspace(0, 1, 5)]
    assert np.all(np.diff(values) >= -1e-12)
    r = expected_counts(dist, b, n)
    assert values[0] == pytest.approx(r.EN[0], abs=1e-12)
    assert values[-1] == pytest.approx(r.EN[1], abs=1e-12)
