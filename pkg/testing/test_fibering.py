import pytest

from fiberperiods.errors import ClearanceError, ConditionViolatedError, ConfigurationError
from fiberperiods.fibering import (FiberMap, FiberPeriods, conifold_parameter, fiber_integral, fiber_singularities,
                                   kernel, loop_contour, period_one_identity, regular_period_combination,
                                   regular_period_identity, residue_identity, sample_parameter,
                                   scaled_period_extraction, t0_independence_check, verify_cocycle)
from fiberperiods.loops import cocycle_direction
from fiberperiods.numerics import PrecisionContext
from fiberperiods.verification import reference_mixed_periods


@pytest.fixture(scope='module')
def ctx():
    return PrecisionContext.minimal(20)


@pytest.fixture(scope='module')
def holes(ctx):
    return fiber_singularities(sample_parameter, ctx)


@pytest.fixture(scope='module')
def periods(ctx):
    return FiberPeriods(sample_parameter, ctx)


def test_fiber_map_values(ctx):
    fiber = FiberMap('1/15625', ctx)
    t = ctx.mp.mpf(3)
    assert fiber.exact == conifold_parameter / 5
    assert abs(fiber(t) - ctx.convert(conifold_parameter) / 5 / (3 * 16)) < ctx.tolerance(2)


def test_log_step_tracks_branch(ctx):
    fiber = FiberMap(sample_parameter, ctx)
    mp = ctx.mp
    a, b = mp.mpf(2), mp.mpc(2, 1) / 2 + 1
    assert abs(mp.exp(fiber.log_step(a, b)) - fiber(b) / fiber(a)) < ctx.tolerance(2)


def test_holes_solve_fiber_equation(ctx, holes):
    z = ctx.convert(sample_parameter)
    for t in holes.roots:
        assert abs(t * (1 - t) ** 4 - 256 * z) < ctx.tolerance(2)


def test_hole_labels(ctx, holes):
    mp = ctx.mp
    assert 0 < holes.t_minus < ctx.mp.mpf(1) / 5 < holes.t_plus < 1 < holes.outer
    assert mp.im(holes.c_plus) > 0
    assert abs(holes.c_minus - mp.conj(holes.c_plus)) < ctx.tolerance(2)
    assert len(holes.punctures(ctx)) == 7


def test_holes_collide_at_conifold(ctx):
    collided = fiber_singularities(conifold_parameter, ctx)
    assert abs(collided.t_minus - ctx.mp.mpf(1) / 5) < ctx.tolerance(2)
    assert abs(collided.t_plus - ctx.mp.mpf(1) / 5) < ctx.tolerance(2)
    assert len(collided.punctures(ctx)) == 6


def test_holes_follow_complex_parameter(ctx, holes):
    mp = ctx.mp
    z = ctx.convert(sample_parameter) * mp.mpc(1, '0.01')
    moved = fiber_singularities(z, ctx)
    for t in moved.roots:
        assert abs(t * (1 - t) ** 4 - 256 * z) < ctx.tolerance(2)
    for old, new in zip(holes.roots, moved.roots):
        assert abs(old - new) < abs(old) / 10


@pytest.mark.parametrize('z', [0, '1/625', '-1/15625'])
def test_holes_reject_parameters_outside_range(ctx, z):
    with pytest.raises(ConfigurationError):
        fiber_singularities(z, ctx)


@pytest.mark.parametrize('word, enclosed', [
    ('g1', {'t-': -1, 't+': -1, 'outer': -1, 'c+': -1, 'c-': -1}),
    ('g2', {'t-': 0, 't+': 0, 'outer': 0, 'c+': 1, 'c-': 0}),
    ('g2^-1', {'c+': -1, 'c-': 0}),
    ('g3', {'t-': 0, 't+': 0, 'outer': 1, 'c+': 0, 'c-': 0}),
    ('g4', {'outer': 0, 'c+': 0, 'c-': 1}),
    ('g5', {'t-': 0, 't+': 0, 'outer': 1, 'c+': 0}),
    ('g6', {'t-': 0, 't+': 1, 'outer': 1}),
    ('g7', {'t-': 1, 't+': 1, 'outer': 1, 'c-': 0}),
])
def test_generator_contours_wind_around_holes(ctx, holes, word, enclosed):
    contour = loop_contour(word, sample_parameter, 64, ctx, holes=holes)
    assert contour.is_closed()
    points = holes.labeled()
    for label, winding in enclosed.items():
        assert contour.winding_number(complex(points[label])) == winding, label


def test_loops_avoid_origin(ctx, holes):
    for word in ('g5', 'g6', 'g7'):
        assert loop_contour(word, sample_parameter, 64, ctx, holes=holes).winding_number(0) == 0


def test_collided_holes_block_gamma_six(ctx):
    with pytest.raises(ClearanceError):
        loop_contour('g6', conifold_parameter, 4, ctx)


@pytest.mark.parametrize('t0', [1, 2j + 64])
def test_base_point_must_be_far_and_real(ctx, holes, t0):
    with pytest.raises(ConfigurationError):
        loop_contour('g1', sample_parameter, t0, ctx, holes=holes)


def test_kernel_orders(ctx):
    assert kernel(0, ctx.mp.mpf(2), 1) == ctx.mp.mpf(-1) / 2
    with pytest.raises(ConfigurationError):
        kernel(3, ctx.mp.mpf(2), 1)


def test_base_point_check_rejects_dependent_combination(ctx):
    with pytest.raises(ConditionViolatedError):
        t0_independence_check([((1, 0, 0), 'g2')], sample_parameter, ctx)


@pytest.mark.slow
@pytest.mark.parametrize('index', [1, 2, 3, 4, 5, 7])
def test_continued_monodromy_matches_representation(ctx, periods, index):
    assert periods.monodromy_residual(index) < ctx.tolerance(8)


@pytest.mark.slow
@pytest.mark.parametrize('index', [2, 3, 4])
def test_single_hole_integral_is_along_reflection_direction(ctx, periods, index):
    values = periods.generator(index).column(0)
    direction = [ctx.convert(x) for x in cocycle_direction(index)]
    ratio = values[0] / direction[0]
    for value, d in zip(values, direction):
        assert abs(value - ratio * d) < ctx.tolerance(8) * abs(ratio)


@pytest.mark.slow
def test_loops_around_one_agree(ctx, periods):
    gamma3, gamma5 = periods.generator(3).column(0), periods.generator(5).column(0)
    scale = max(abs(v) for v in gamma3)
    assert max(abs(a - b) for a, b in zip(gamma3, gamma5)) < ctx.tolerance(8) * scale


@pytest.mark.slow
def test_gamma_three_reality(ctx, periods):
    mp = ctx.mp
    values = periods.generator(3).column(0)
    signs = (1, -1, 1)
    for value, sign in zip(values, signs):
        assert abs(mp.conj(value) - sign * value) < ctx.tolerance(8) * max(abs(v) for v in values)


@pytest.mark.slow
def test_large_circle_vanishes_at_infinity(ctx, periods):
    values = periods.at_infinity('g1').column(0)
    scale = max(abs(v) for v in periods.generator(1).column(0))
    assert max(abs(v) for v in values) < ctx.tolerance(6) * scale


@pytest.mark.slow
def test_cocycle_law_along_concatenated_contours(ctx, periods):
    check = verify_cocycle('g2', 'g3', sample_parameter, ctx, periods=periods)
    assert check.passed(ctx.tolerance(8))


@pytest.mark.slow
def test_direct_integral_matches_assembled_word(ctx, periods):
    word = 'g4^-1 g6^-1 g2^-1'
    direct = fiber_integral(word, sample_parameter, 0, ctx)
    assembled = periods.integral(word).column(0)
    for a, b in zip(direct, assembled):
        assert abs(a - b) < ctx.tolerance(8) * max(1, abs(b))


@pytest.mark.slow
def test_regular_combination_does_not_depend_on_base_point(ctx):
    check = t0_independence_check(regular_period_combination, sample_parameter, ctx)
    assert check.passed(ctx.tolerance(8))


@pytest.mark.slow
def test_regular_period_identity(ctx, periods):
    assert regular_period_identity(ctx, periods=periods).passed(ctx.tolerance(8))


@pytest.mark.slow
def test_period_one_identity(ctx, periods):
    assert period_one_identity(ctx, periods=periods).passed(ctx.tolerance(8))


@pytest.mark.slow
def test_residue_at_kernel_pole(ctx):
    assert residue_identity(ctx).passed(ctx.tolerance(8))


@pytest.mark.slow
def test_scaled_periods_match_mixed_periods():
    ctx = PrecisionContext.minimal(25)
    result = scaled_period_extraction(ctx, mixed_constants=reference_mixed_periods(ctx))
    assert max(result.residuals.values()) < ctx.tolerance(10)
    for name, deviation in result.deviations.items():
        assert deviation < ctx.tolerance(10) * 1000, name
