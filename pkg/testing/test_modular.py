import pytest
import sympy

from fiberperiods.errors import ConfigurationError, PoleError
from fiberperiods.fibering import residue_lattice
from fiberperiods.modular import (GammaStar50Element, UHPPoint, cm_period_b, contour_shift_check, cusp_infinity,
                                  cusp_period_integrals, cusp_tail, derived_forms_qexp, divergence_fit, e2_eval,
                                  eta_eval, eval_form, hauptmodul_qexp, hauptmodul_relation_check,
                                  hecke_eigenform_failures, integrate_form_path, level_fifty_values, locate_poles,
                                  pullback_identity_check, regularized_c, regularized_d, residue_at,
                                  t50_derivative, t50_derivative_at_cm, tau_minus, tau_plus, theorem1_check,
                                  _e2_series, _eta_series)
from fiberperiods.numerics import PrecisionContext
from fiberperiods.verification import reference_mixed_periods


@pytest.fixture(scope='module')
def ctx():
    return PrecisionContext.minimal(20)


@pytest.fixture(scope='module')
def forms():
    return derived_forms_qexp(48)


def test_eta_at_i(ctx):
    mp = ctx.mp
    expected = mp.gamma(mp.mpf(1) / 4) / (2 * mp.pi ** (mp.mpf(3) / 4))
    assert abs(eta_eval(mp.j, ctx) - expected) < ctx.tolerance(2)


@pytest.mark.parametrize('tau', [(0.1, 0.9), (-0.45, 0.95), (0.3, 1.2)])
def test_reduction_matches_direct_series(ctx, tau):
    point = ctx.mp.mpc(*tau)
    assert abs(eta_eval(point, ctx) - _eta_series(point, ctx)) < ctx.tolerance(2)
    assert abs(e2_eval(point, ctx) - _e2_series(point, ctx)) < ctx.tolerance(2)


def test_eta_inversion_law(ctx):
    mp = ctx.mp
    tau = mp.mpc('0.013', '0.021')
    assert abs(eta_eval(-1 / tau, ctx) - mp.sqrt(-mp.j * tau) * eta_eval(tau, ctx)) < ctx.tolerance(4)


def test_e2_at_i(ctx):
    assert abs(e2_eval(ctx.mp.j, ctx) - 3 / ctx.pi) < ctx.tolerance(2)


def test_eval_rejects_lower_half_plane(ctx):
    with pytest.raises(ConfigurationError):
        eta_eval(ctx.mp.mpc(0, -1), ctx)
    with pytest.raises(ConfigurationError):
        eval_form('theta', ctx.mp.j, ctx)


def test_cm_points_are_exact():
    assert tau_plus.imag_square == sympy.Rational(1, 50)
    assert tau_minus.real == -tau_plus.real
    assert cusp_infinity.is_infinity
    assert UHPPoint(real=sympy.Rational(1, 50)).is_cusp
    with pytest.raises(ConfigurationError):
        UHPPoint(0, -1)


def test_hauptmoduln_are_normalized():
    h50 = hauptmodul_qexp('h50', 16)
    assert h50.offset == -1
    assert h50.coefficients[:4] == [1, 0, 2, 1]
    assert h50.is_integral()
    h2 = hauptmodul_qexp('h2', 16)
    assert h2.coefficients[:3] == [1, 0, 4372]
    with pytest.raises(ConfigurationError):
        hauptmodul_qexp('h3', 16)
    with pytest.raises(ConfigurationError):
        hauptmodul_qexp('h50', 8)


def test_derived_forms_leading_terms(forms):
    assert forms['t2'].offset == 1 and forms['t2'].coefficients[:3] == [1, -104, 6444]
    assert forms['E'].coefficients[:3] == [1, 24, 24]
    assert forms['t50'].offset == -1 and forms['t50'].coefficient(-1) == sympy.Rational(1, 5)
    assert forms['f50'].valuation() == 1 and forms['f50'].coefficient(1) == 5
    assert forms['g50'].valuation() == 1 and forms['g50'].coefficient(1) == 1
    assert forms['F50'].valuation() == 1 and forms['F50'].coefficient(1) == sympy.Rational(-1, 10)


def test_newform(forms):
    f = forms['f']
    assert f.is_integral()
    assert (f.coefficient(1), f.coefficient(2), f.coefficient(4)) == (1, 1, -7)
    assert f.coefficient(6) == f.coefficient(2) * f.coefficient(3)
    assert hecke_eigenform_failures(f) == []


def test_eigenform_check_detects_perturbation(forms):
    f = forms['f']
    broken = type(f)(f.coefficients[:6] + [f.coefficients[6] + 1] + f.coefficients[7:], 0, 'broken', 4)
    assert hecke_eigenform_failures(broken)


def test_q_series_and_eta_evaluation_agree(ctx, forms):
    for name, tau in (('f50', ctx.mp.mpc(0, 2)), ('g50', ctx.mp.mpc('0.1', '1.5')), ('t2', ctx.mp.mpc('0.3', 2))):
        assert abs(forms[name].evaluate(tau, ctx) - eval_form(name, tau, ctx)) < ctx.tolerance(6)


def test_e_near_cusp(ctx):
    mp = ctx.mp
    q = mp.exp(-20 * mp.pi)
    assert abs(eval_form('E', mp.mpc(0, 10), ctx) - (1 + 24 * q)) < ctx.tolerance(2)


def test_hauptmoduln_are_fricke_invariant(ctx):
    mp = ctx.mp
    tau = mp.mpc('0.3', '0.8')
    assert abs(eval_form('h2', tau, ctx) - eval_form('h2', -1 / (2 * tau), ctx)) < ctx.tolerance(6)
    tau = mp.mpc('0.03', '0.15')
    assert abs(eval_form('h50', tau, ctx) - eval_form('h50', -1 / (50 * tau), ctx)) < ctx.tolerance(6)


def test_hauptmodul_relation(ctx):
    mp = ctx.mp
    taus = [mp.mpc('0.1', '0.5'), mp.mpc('-0.23', '0.31'), mp.mpc('0.37', '0.12'), mp.mpc('0.01', '0.04')]
    assert hauptmodul_relation_check(taus, ctx).passed(ctx.tolerance(6))


@pytest.mark.parametrize('tau', [('0.1', '1'), ('-0.2', '1.2')])
def test_pullback_identity(ctx, tau):
    assert pullback_identity_check(ctx.mp.mpc(*tau), ctx).passed(ctx.tolerance(6))


def test_cm_points_hit_the_pinch(ctx):
    for point in (tau_minus, tau_plus):
        values = level_fifty_values(point, ctx, strict=False)
        assert abs(values['t50'] - ctx.mp.mpf(1) / 5) < ctx.tolerance(6)
    with pytest.raises(PoleError):
        eval_form('g50', tau_plus, ctx)


@pytest.mark.parametrize('point, sign', [(tau_plus, 1), (tau_minus, -1)])
def test_t50_derivative_closed_form(ctx, point, sign):
    numerical, closed = t50_derivative(point, ctx), t50_derivative_at_cm(sign, ctx)
    assert closed * sign < 0
    assert abs(numerical - closed) < ctx.tolerance(6) * abs(closed)


def test_locate_poles_finds_cm_point(ctx):
    mp = ctx.mp
    target = tau_plus.value(ctx)
    poles = locate_poles(target - mp.mpf('0.05'), target + mp.mpf('0.05'), ctx, samples=16)
    assert any(abs(p - target) < ctx.tolerance(6) for p in poles)


def test_paths_through_poles_are_rejected(ctx):
    mp = ctx.mp
    target = tau_plus.value(ctx)
    with pytest.raises(PoleError):
        integrate_form_path(['g50'], [target - mp.mpf('0.05'), target + mp.mpf('0.05')], ctx)


def test_path_validation(ctx):
    tau = ctx.mp.mpc('0.1', '0.5')
    empty = integrate_form_path(['f50'], [tau, tau], ctx)
    assert all(v == 0 for row in empty.value for v in row)
    with pytest.raises(ConfigurationError):
        integrate_form_path(['f50'], [cusp_infinity, cusp_infinity], ctx)
    with pytest.raises(ConfigurationError):
        integrate_form_path(['E'], [tau, cusp_infinity], ctx)
    with pytest.raises(ConfigurationError):
        cusp_tail(['f50'], tau, ctx)
    with pytest.raises(ConfigurationError):
        cusp_tail(['t50'], ctx.mp.mpc(0, 3), ctx)


def test_tail_matches_quadrature(ctx):
    mp = ctx.mp
    low, high = mp.mpc('0.2', 2), mp.mpc('0.2', 3)
    quadrature = integrate_form_path(['f50', 'g50'], [low, high], ctx).value
    tails = [cusp_tail(['f50', 'g50'], p, ctx) for p in (low, high)]
    for i in range(3):
        for k in range(2):
            assert abs(quadrature[i][k] - (tails[0][i][k] - tails[1][i][k])) < ctx.tolerance(6)


@pytest.mark.parametrize('matrix', [(1, 1, 1, 2), (1, 0, 25, 1), (2, 0, 0, 1), (3, 1, 50, 18)])
def test_gamma_star_membership(matrix):
    with pytest.raises(ConfigurationError):
        GammaStar50Element(*matrix)


def test_atkin_lehner_characters():
    characters = {e: GammaStar50Element.atkin_lehner(e).character for e in (1, 2, 25, 50)}
    assert characters == {1: 1, 2: -1, 25: 1, 50: -1}
    with pytest.raises(ConfigurationError):
        GammaStar50Element.atkin_lehner(5)


def test_translation_weight_matrix_is_fifth_power_of_t():
    assert GammaStar50Element.translation().weight_matrix() == sympy.Matrix([[1, 0, 0], [5, 1, 0], [25, 10, 1]])
    assert GammaStar50Element.identity().cusp.is_infinity
    assert GammaStar50Element(1, 0, 50, 1).cusp.real == sympy.Rational(1, 50)


@pytest.mark.parametrize('gamma', [GammaStar50Element.identity(), GammaStar50Element.translation()])
def test_cocycle_at_cusp_infinity(ctx, gamma):
    report = theorem1_check(gamma, ctx, reference_mixed_periods(ctx))
    assert report.r_plus == [0, 0, 0] and report.r_minus == [0, 0, 0]
    assert report.passed(ctx.tolerance(8))


@pytest.mark.slow
@pytest.mark.parametrize('gamma', [GammaStar50Element(1, 0, 50, 1), GammaStar50Element(1, 1, 50, 51),
                                   GammaStar50Element(3, 1, 50, 17), GammaStar50Element.atkin_lehner(50)])
def test_cocycle_congruence(ctx, gamma):
    report = theorem1_check(gamma, ctx, reference_mixed_periods(ctx))
    assert report.passed(ctx.tolerance(8))


@pytest.mark.slow
def test_cocycle_congruence_depends_on_boundary_period(ctx):
    gamma = GammaStar50Element(3, 1, 50, 17)
    lattice = residue_lattice(ctx)
    constants = reference_mixed_periods(ctx)
    assert theorem1_check(gamma, ctx, constants, alpha_b=lattice / 5).passed(ctx.tolerance(8))
    assert not theorem1_check(gamma, ctx, constants, alpha_b=lattice / 5 + lattice / 7).passed(ctx.tolerance(8))


@pytest.mark.slow
def test_cusp_integral_does_not_depend_on_path(ctx):
    gamma = GammaStar50Element(1, 0, 50, 1)
    first = cusp_period_integrals(gamma, ctx, names=['f50']).value
    second = cusp_period_integrals(gamma, ctx, names=['f50'], balance=2).value
    for a, b in zip(first, second):
        assert abs(a[0] - b[0]) < ctx.tolerance(6) * max(1, abs(b[0]))


@pytest.mark.slow
def test_cm_integral_gives_b(ctx):
    b = reference_mixed_periods(ctx)['b']
    assert abs(cm_period_b(ctx).value - b) < ctx.tolerance(6) * abs(b)


@pytest.mark.slow
def test_regularized_c(ctx):
    c = reference_mixed_periods(ctx)['c']
    assert abs(regularized_c(ctx).value - c) < 1e-8 * abs(c)


@pytest.mark.slow
def test_regularized_d(ctx):
    d = reference_mixed_periods(ctx)['d']
    assert abs(regularized_d(ctx).value - d) < 1e-8 * abs(d)


@pytest.mark.slow
def test_divergence_orders(ctx):
    mp = ctx.mp
    exponent, leading = divergence_fit('g50', ctx)
    assert mp.nint(exponent) == 1
    assert abs(leading / (-ctx.two_pi_i * ctx.sqrt5) - 1) < 0.05
    exponent, _ = divergence_fit('F50', ctx)
    assert mp.nint(exponent) == 3


@pytest.mark.slow
def test_f50_residue_vanishes(ctx):
    assert abs(residue_at('F50', tau_plus, ctx)) < ctx.tolerance(6) * abs(residue_at('g50', tau_plus, ctx))


@pytest.mark.slow
def test_contour_shift_is_lattice_multiple(ctx):
    assert contour_shift_check(ctx).passed(ctx.tolerance(6))
