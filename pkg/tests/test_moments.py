import numpy as np
import pytest

from gibbstree.criticality import find_critical_point
from gibbstree.dynamics import iterate_orbit
from gibbstree.errors import DivergenceError, DomainError
from gibbstree.moments import (
    expected_counts,
    fitted_decay_exponent,
    moment_records,
    moment_trajectory,
    scaled_counts_scan,
    tangent_product,
)
from gibbstree.offspring import OffspringDistribution
from gibbstree.trees import TreeTable, gibbs_distribution

from .conftest import STANDARD, random_laws


def test_small_example_matches_hand_count():
    r = expected_counts(OffspringDistribution((0.5, 0.0, 0.5)), 2.0, 0)
    # height-1 trees weigh p0 and b p2; two external nodes with probability 2/3
    assert r.for_class(2) == pytest.approx((0.0, 4 / 3, 4 / 3), abs=1e-15)


@pytest.mark.parametrize("dist", [OffspringDistribution(STANDARD), *random_laws(2, 5)])
@pytest.mark.parametrize("n", [0, 2, 7])
def test_free_process_mean(dist, n):
    r = expected_counts(dist, 1.0, n)
    assert r.EN == pytest.approx((dist.mean ** (n + 1),) * 2, rel=1e-13)


def test_free_process_frozen_value(standard):
    assert expected_counts(standard, 1.0, 2).EN[0] == pytest.approx(0.357911, abs=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
@pytest.mark.parametrize("x", [1, 2])
def test_agrees_with_enumeration(standard, n, x):
    table = TreeTable.build(2, n)
    gd = gibbs_distribution(standard, 2.0, x, n, table=table)
    N, L, Q = table.external_counts()
    r = expected_counts(standard, 2.0, n)
    assert r.for_class(x) == pytest.approx((gd.expect(L), gd.expect(Q), gd.expect(N)), abs=1e-10)


@pytest.mark.parametrize("dist", random_laws(4, 8))
def test_positivity_and_fkg_ordering(dist):
    b = 1 + 0.95 * (find_critical_point(dist).b_c - 1)
    for r in moment_trajectory(dist, b, 300):
        assert min(r.EL + r.EQ) >= 0
        assert r.EN[0] <= r.EN[1] * (1 + 1e-12)
    prod = tangent_product(dist, b, 20)
    assert np.all(prod > 0)


def test_tangent_product_matches_trajectory(standard):
    prod = tangent_product(standard, 5.0, 30)
    r = expected_counts(standard, 5.0, 30)
    xi = iterate_orbit(standard, 5.0, 31, stop_on_convergence=False).xi(30)
    assert r.EL == pytest.approx(tuple(prod[:, 0] / np.array(xi)), rel=1e-12)
    assert r.EQ == pytest.approx(tuple(prod[:, 1] / np.array(xi)), rel=1e-12)


def test_records_selection(standard):
    rs = moment_records(standard, 3.0, [5, 2, 5])
    assert [r.n for r in rs] == [2, 5]
    assert moment_records(standard, 3.0, []) == []
    row = rs[1].as_row()
    assert row["n2EN2"] == pytest.approx(25 * row["EN2"])


def test_scaled_counts_bounded_at_criticality(standard):
    cp = find_critical_point(standard)
    (n1, a1, b1), (n2, a2, b2) = scaled_counts_scan(standard, cp, [1000, 2000])
    assert (n1, n2) == (1000, 2000)
    assert a2 / a1 == pytest.approx(1.0, abs=0.1)
    assert b2 / b1 == pytest.approx(1.0, abs=0.1)
    assert a1 <= b1 and a2 <= b2


def test_no_underflow_for_long_runs(standard):
    cp = find_critical_point(standard)
    last = expected_counts(standard, cp.b_c, 200_000)
    assert 0 < last.EN[0] < 1e-6
    assert last.n**2 * last.EN[1] == pytest.approx(scaled_counts_scan(standard, cp, [100_000])[0][2], rel=0.05)


def test_p1_zero_decay_exponent():
    dist = OffspringDistribution((0.6, 0.0, 0.4))
    b_c = find_critical_point(dist).b_c
    assert fitted_decay_exponent(dist, b_c, 100, 10_000, "EQ", 2) == pytest.approx(-2.0, abs=0.05)


def test_boundary_law_does_not_decay():
    # (0.5, 0, 0.5) has b_c = 1: the free critical process keeps E N_n = 1.
    dist = OffspringDistribution((0.5, 0.0, 0.5))
    assert fitted_decay_exponent(dist, 1.0, 100, 10_000) == pytest.approx(0.0, abs=1e-9)


def test_errors(standard):
    with pytest.raises(DivergenceError):
        expected_counts(standard, 30.0, 100)
    with pytest.raises(DomainError):
        expected_counts(standard, 2.0, -1)
    with pytest.raises(DomainError):
        fitted_decay_exponent(standard, 2.0, 100, 150)
