import pytest
import sympy

from fiberperiods.errors import ConfigurationError, OutOfDiskError
from fiberperiods.hypergeo import (HypergeometricOperator, annihilation_residual, conifold_basis, eval_basis,
                                   frobenius_basis, k3_conifold_basis)
from fiberperiods.numerics import PrecisionContext


@pytest.fixture(scope='module')
def ctx():
    return PrecisionContext.minimal(25)


@pytest.fixture(scope='module')
def quintic_basis(ctx):
    return frobenius_basis(HypergeometricOperator.quintic(), 16, ctx)


def frobenius_deformation(op, n):
    """
    Coefficient of z^n in the deformed series sum_n A_n(eps) z^(n + eps), as a function of eps.
    """
    eps = sympy.Symbol('eps')
    term = sympy.Integer(1)
    for k in range(1, n + 1):
        term *= op.singular_scale * sympy.prod([a + eps + k - 1 for a in op.numerator_indices]) / (k + eps) ** op.rank
    return term, eps


def test_operator_singular_points():
    quintic, k3 = HypergeometricOperator.quintic(), HypergeometricOperator.k3()
    assert quintic.conifold_point == sympy.Rational(1, 3125)
    assert k3.conifold_point == sympy.Rational(1, 256)
    z = sympy.Symbol('z')
    assert quintic.d_form()[-1].as_expr().factor() == sympy.factor(z ** 4 * (1 - 3125 * z))


def test_operator_validation():
    with pytest.raises(ConfigurationError):
        HypergeometricOperator('bad', ['1/2', '3/2', '1/3'], 4)


def test_quintic_first_coefficients(ctx, quintic_basis):
    f1, f2 = quintic_basis.series[0], quintic_basis.series[1]
    assert f1[0] == 1
    assert abs(f1[1] - 120) < ctx.tolerance(2)
    assert abs(f2[1] - 770) < ctx.tolerance(2)
    for f in quintic_basis.series[1:]:
        assert f[0] == 0


def test_quintic_f1_matches_factorial_ratio(ctx, quintic_basis):
    f1 = quintic_basis.series[0]
    for n in range(12):
        exact = sympy.factorial(5 * n) / sympy.factorial(n) ** 5
        assert abs(f1[n] - ctx.convert(exact)) < ctx.tolerance(2) * ctx.convert(exact)


def test_quintic_f2_matches_deformation(ctx, quintic_basis):
    op = HypergeometricOperator.quintic()
    f2 = quintic_basis.series[1]
    for n in range(1, 4):
        term, eps = frobenius_deformation(op, n)
        exact = sympy.diff(term, eps).subs(eps, 0)
        assert abs(f2[n] - ctx.convert(exact)) < ctx.tolerance(2) * abs(ctx.convert(exact))


def test_k3_first_coefficient(ctx):
    basis = frobenius_basis(HypergeometricOperator.k3(), 16, ctx)
    assert abs(basis.series[0][1] - 24) < ctx.tolerance(2)


def test_order_must_be_at_least_eight(ctx):
    with pytest.raises(ConfigurationError):
        frobenius_basis(HypergeometricOperator.quintic(), 4, ctx)


def test_k3_normalization_prefactors(ctx):
    basis = frobenius_basis(HypergeometricOperator.k3(), 24, ctx)
    mp, tpi = ctx.mp, ctx.two_pi_i
    t = mp.mpf('1e-4')
    log = mp.log(t)
    f1, f2, f3 = (sum(c * t ** n for n, c in enumerate(f)) for f in basis.series)
    values = eval_basis(basis, t)
    assert abs(values[0, 0] - tpi ** 2 * f1) < ctx.tolerance(3)
    assert abs(values[1, 0] - tpi * (f1 * log + f2)) < ctx.tolerance(3)
    assert abs(values[2, 0] - 2 * (f1 * log ** 2 / 2 + f2 * log + f3)) < ctx.tolerance(3)


@pytest.mark.parametrize('index', range(4))
def test_quintic_zero_basis_annihilated(ctx, quintic_basis, index):
    assert annihilation_residual(quintic_basis, index, ctx.mp.mpf('2e-5')) < ctx.tolerance(4)


@pytest.mark.parametrize('index', range(4))
def test_conifold_basis_annihilated(ctx, index):
    basis = conifold_basis(HypergeometricOperator.quintic(), 16, ctx)
    assert annihilation_residual(basis, index, ctx.mp.mpf('0.1')) < ctx.tolerance(4)


@pytest.mark.parametrize('index', range(3))
def test_k3_conifold_basis_annihilated(ctx, index):
    basis = k3_conifold_basis(ctx, order=16)
    assert annihilation_residual(basis, index, ctx.mp.mpf('0.05')) < ctx.tolerance(4)


def test_conifold_exponents():
    quintic = HypergeometricOperator.quintic().local_operator('conifold')
    assert quintic.exponent_classes() == [(0, 2, 4)]
    k3 = HypergeometricOperator.k3().local_operator('conifold')
    assert k3.exponent_classes() == [(0, 1, 2), (sympy.Rational(1, 2), 0, 1)]


def test_conifold_basis_normalization(ctx):
    basis = conifold_basis(HypergeometricOperator.quintic(), 16, ctx)
    delta = ctx.mp.mpf('1e-6')
    values = eval_basis(basis, delta)
    log_nu, one, square, nu = (values[i, 0] for i in range(4))
    assert abs(nu / delta - 1) < ctx.mp.mpf('1e-5')
    assert abs(one - 1) < ctx.mp.mpf('1e-16')
    assert abs(square / delta ** 2 - 1) < ctx.mp.mpf('1e-5')
    assert abs(log_nu - ctx.mp.log(delta) * nu) < ctx.mp.mpf('1e-16')


def test_k3_conifold_basis_normalization(ctx):
    basis = k3_conifold_basis(ctx, order=16)
    x = ctx.mp.mpf('1e-6')
    values = eval_basis(basis, x)
    assert abs(values[0, 0] - 1 - 3 * x / 16) < ctx.mp.mpf('1e-9')
    assert abs(values[1, 0] / ctx.mp.sqrt(x) - 1) < ctx.mp.mpf('1e-5')
    assert abs(values[2, 0] / x - 1) < ctx.mp.mpf('1e-5')


def test_evaluation_outside_trusted_disk(ctx, quintic_basis):
    with pytest.raises(OutOfDiskError):
        eval_basis(quintic_basis, ctx.mp.mpf(9) / 10 / 3125)


def test_explicit_log_branch_shifts_monodromy(ctx, quintic_basis):
    z = ctx.mp.mpf('1e-5')
    principal = eval_basis(quintic_basis, z)
    shifted = eval_basis(quintic_basis, z, log_value=ctx.mp.log(z) + ctx.two_pi_i)
    assert abs(shifted[1, 0] - principal[1, 0] - ctx.two_pi_i * principal[0, 0]) < ctx.tolerance(3)
