import pytest
import sympy

from fiberperiods.appendix import (appendix_coefficient_check, appendix_identity_check, banana_coefficients,
                                   banana_identity_check, banana_sample, catalog_report, catalog_sample,
                                   identity_catalog, quintic_row)
from fiberperiods.errors import ConfigurationError
from fiberperiods.numerics import PrecisionContext


@pytest.fixture(scope='module')
def ctx():
    return PrecisionContext.minimal(20)


def test_catalog_size_and_quintic_row():
    assert len(identity_catalog) == 33
    assert sum(row.level is not None for row in identity_catalog) == 20
    assert (quintic_row.k, quintic_row.l, quintic_row.beta) == (4, 1, 1)
    assert quintic_row.scale == sympy.Rational(4 ** 4, 5 ** 5)


@pytest.mark.parametrize('row', identity_catalog, ids=lambda row: row.label)
def test_catalog_coefficients_agree_exactly(row):
    assert appendix_coefficient_check(row, 12) == []


def test_coefficient_check_detects_wrong_row():
    wrong = type(quintic_row)(a=quintic_row.a, b=quintic_row.b, k=3, l=2, beta=quintic_row.beta)
    assert appendix_coefficient_check(wrong, 3)[0] == 1


@pytest.mark.parametrize('index', [0, 9, 14])
def test_contour_identity(ctx, index):
    check = appendix_identity_check(identity_catalog[index], catalog_sample, ctx)
    assert check.passed(ctx.tolerance(6))


def test_contour_identity_at_zero(ctx):
    check = appendix_identity_check(quintic_row, 0, ctx)
    assert abs(check.lhs - 1) < ctx.tolerance(4)
    assert check.rhs == 1


def test_contour_identity_rejects_large_argument(ctx):
    with pytest.raises(ConfigurationError):
        appendix_identity_check(quintic_row, 2, ctx)


def test_banana_coefficients():
    assert banana_coefficients(0, 4) == [1, 1, 1, 1]
    assert banana_coefficients(1, 5) == [1, 2, 6, 20, 70]
    assert banana_coefficients(2, 5) == [1, 3, 15, 93, 639]
    assert banana_coefficients(3, 4) == [1, 4, 28, 256]


@pytest.mark.parametrize('l', [1, 2, 3, 4])
def test_banana_identity(ctx, l):
    assert banana_identity_check(l, banana_sample, ctx).passed(ctx.tolerance(6))


def test_banana_identity_at_zero(ctx):
    check = banana_identity_check(3, 0, ctx)
    assert abs(check.lhs - 1) < ctx.tolerance(4)


@pytest.mark.parametrize('l, z', [(0, '1/1000'), (2, '1/10')])
def test_banana_rejects_bad_input(ctx, l, z):
    with pytest.raises(ConfigurationError):
        banana_identity_check(l, z, ctx)


@pytest.mark.slow
def test_full_catalog():
    ctx = PrecisionContext.minimal(25)
    report = catalog_report(ctx)
    assert all(check.passed(ctx.tolerance(5)) for check in report.values())
