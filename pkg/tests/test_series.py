import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbstree.errors import DomainError
from gibbstree.series import PowerSeries

coeff_lists = st.lists(st.floats(-3, 3), min_size=1, max_size=8)


@settings(max_examples=50, deadline=None)
@given(coeff_lists, coeff_lists)
def test_product_matches_polynomial_product(a, b):
    order = 6
    got = PowerSeries.from_polynomial(a, order) * PowerSeries.from_polynomial(b, order)
    full = np.polynomial.polynomial.polymul(np.array(a[: order + 1]), np.array(b[: order + 1]))
    want = np.zeros(order + 1)
    want[: min(order + 1, full.size)] = full[: order + 1]
    assert np.allclose(got.coeffs, want, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(coeff_lists.filter(lambda c: abs(c[0]) > 0.1))
def test_reciprocal_inverts(a):
    s = PowerSeries.from_polynomial(a, 10)
    one = s * s.reciprocal()
    assert one[0] == pytest.approx(1.0)
    assert np.allclose(one.coeffs[1:], 0.0, atol=1e-6 * max(1.0, np.max(np.abs(s.reciprocal().coeffs))))


def test_geometric_series_and_composition():
    geo = PowerSeries.from_polynomial([1.0, -1.0], 8).reciprocal()
    assert np.allclose(geo.coeffs, 1.0)
    doubled = geo.compose(PowerSeries.from_polynomial([0.0, 2.0], 8))
    assert np.allclose(doubled.coeffs, 2.0 ** np.arange(9))


def test_exp_log_style_composition():
    # exp(t) composed with t + t^2, checked pointwise against exp(t + t^2) near 0.
    order = 7
    exp = PowerSeries([1 / math.factorial(k) for k in range(order + 1)])
    inner = PowerSeries.from_polynomial([0.0, 1.0, 1.0], order)
    got = exp.compose(inner)
    t = np.linspace(-0.05, 0.05, 11)
    assert np.allclose(np.polynomial.polynomial.polyval(t, got.coeffs), np.exp(t + t * t), atol=1e-11)


@pytest.mark.parametrize("point", [0.0, 0.4, -1.5])
def test_taylor_shift_round_trips(point):
    poly = [0.3, -1.0, 0.25, 2.0, 0.1]
    shifted = PowerSeries.taylor_shift(poly, point, 4)
    xs = np.linspace(-2, 2, 7)
    assert np.allclose(
        np.polynomial.polynomial.polyval(xs - point, shifted.coeffs),
        np.polynomial.polynomial.polyval(xs, poly),
        atol=1e-12,
    )


def test_power_matches_repeated_product():
    s = PowerSeries.from_polynomial([0.5, 0.2, -0.1], 9)
    prod = PowerSeries.constant(1.0, 9)
    for _ in range(5):
        prod = prod * s
    assert np.allclose((s**5).coeffs, prod.coeffs, atol=1e-15)


def test_derivative_partial_sums_and_shift():
    s = PowerSeries([1.0, 2.0, 3.0, 4.0])
    assert s.derivative().coeffs.tolist() == [2.0, 6.0, 12.0, 0.0]
    assert s.partial_sums(2.0).tolist() == [1.0, 5.0, 17.0, 49.0]
    assert s.evaluate(2.0) == 49.0
    assert PowerSeries([0.0, 0.0, 1.0]).shift_down(2).coeffs.tolist() == [1.0, 0.0, 0.0]
    with pytest.raises(DomainError):
        s.shift_down(1)


def test_errors():
    with pytest.raises(DomainError):
        PowerSeries([0.0, 1.0]).reciprocal()
    with pytest.raises(DomainError):
        PowerSeries([1.0, 1.0]).compose(PowerSeries([1.0, 1.0]))
    with pytest.raises(DomainError):
        PowerSeries([])
    with pytest.raises(DomainError):
        PowerSeries([1.0]) ** -1
