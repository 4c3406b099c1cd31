import pytest
import sympy

from fiberperiods.errors import ConfigurationError, InconsistentSystemError
from fiberperiods.numerics import PrecisionContext
from fiberperiods.qseries import QExpansion, eisenstein_e2, eta_quotient, euler_product


def test_euler_product_is_pentagonal():
    assert euler_product(10).coefficients == [1, -1, -1, 0, 0, 1, 0, 1, 0, 0]


def test_discriminant_from_eta():
    delta = eta_quotient({1: 24}, 5)
    assert delta.offset == 1
    assert delta.weight == 12
    assert delta.coefficients == [1, -24, 252, -1472, 4830]


def test_eta_quotient_needs_integral_order():
    with pytest.raises(ConfigurationError):
        eta_quotient({1: 1}, 8)


def test_e2_coefficients():
    assert eisenstein_e2(5).coefficients == [1, -24, -72, -96, -168]


def test_arithmetic_tracks_precision():
    a = QExpansion([1, 2, 3], offset=-1)
    b = QExpansion([1, 1, 1, 1, 1])
    assert (a + b).precision == 2
    assert (a * b).offset == -1
    assert (a * b).precision == 2
    assert (a * b).coefficients == [1, 3, 6]
    assert (a - a).coefficients == [0, 0, 0]
    assert (2 - b).coefficients == [1, -1, -1, -1, -1]


def test_invert_shifts_offset():
    series = QExpansion([2, 1, 0, 0], offset=-1)
    inverse = series.invert()
    assert inverse.offset == 1
    assert inverse.coefficients == [sympy.Rational(1, 2), sympy.Rational(-1, 4), sympy.Rational(1, 8),
                                    sympy.Rational(-1, 16)]
    product = series * inverse
    assert product.coefficients[0] == 1
    assert all(c == 0 for c in product.coefficients[1:])


def test_invert_of_zero_series():
    with pytest.raises(InconsistentSystemError):
        QExpansion([0, 0, 0]).invert()


def test_powers():
    geometric = QExpansion([1, -1, 0, 0, 0]) ** -1
    assert geometric.coefficients == [1, 1, 1, 1, 1]
    assert (QExpansion([1, 1, 0, 0]) ** 3).coefficients == [1, 3, 3, 1]
    assert (QExpansion([1, 5, 7]) ** 0).coefficients == [1, 0, 0]
    with pytest.raises(ConfigurationError):
        QExpansion([1, 1]) ** sympy.Rational(1, 2)


def test_theta_and_rescale():
    series = QExpansion([1, 2, 3], offset=-1)
    assert series.theta().coefficients == [-1, 0, 3]
    stretched = QExpansion([1, 2, 3]).rescale(2)
    assert stretched.coefficients == [1, 0, 2, 0, 3, 0]
    assert stretched.precision == 6


def test_coefficient_beyond_precision():
    series = QExpansion([1, 2, 3], offset=1, label='sample')
    assert series.coefficient(0) == 0
    assert series.coefficient(3) == 3
    with pytest.raises(ConfigurationError):
        series.coefficient(4)


def test_hecke_on_discriminant():
    delta = eta_quotient({1: 24}, 30)
    image = delta.hecke(2)
    for n in range(image.precision):
        assert image.coefficient(n) == -24 * delta.coefficient(n)


def test_hecke_needs_holomorphic_series():
    with pytest.raises(ConfigurationError):
        QExpansion([1, 0, 3], offset=-1, weight=0).hecke(2)


def test_denominators():
    series = QExpansion([sympy.Rational(1, 4), sympy.Rational(5, 6), 2])
    assert not series.is_integral()
    assert series.denominator_lcm() == 12
    assert eisenstein_e2(6).is_integral()


def test_evaluate():
    ctx = PrecisionContext.minimal(20)
    tau = ctx.mp.mpc('0.1', '0.5')
    q = ctx.mp.expjpi(2 * tau)
    value = QExpansion([1, 2], offset=-1).evaluate(tau, ctx)
    assert abs(value - (1 / q + 2)) < ctx.tolerance(2)
