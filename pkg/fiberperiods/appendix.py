import logging
from dataclasses import dataclass
from math import comb
from typing import Dict, List, Optional, Tuple

import sympy

from .continuation import taylor_terms
from .errors import ConfigurationError
from .numerics import ArcSegment, IdentityCheck, PrecisionContext, compare, contour_quadrature
from .utils import rational

logger = logging.getLogger(__name__)

catalog_sample = sympy.Rational(1, 10 ** 4)  #: Default argument of the catalog contour checks
banana_sample = sympy.Rational(1, 10 ** 3)  #: Default argument of the banana checks
banana_radius_fraction = sympy.Rational(1, 2)  #: Banana checks stay within this fraction of 1/(l+1)^2


@dataclass(frozen=True)
class IdentityRow:
    """
    One identity 4F3(a; 1, 1, 1; z) = (1 / 2 pi i) contour integral over |t| = k/(k+l) of
    (1 - t)^(-beta) 3F2(b; 1, 1; K z / (t^k (1 - t)^l)) dt / t with K = k^k l^l / (k+l)^(k+l).

    :ivar a: Four numerator indices of the 4F3.
    :ivar b: Three numerator indices of the 3F2.
    :ivar k: Power of t.
    :ivar l: Power of 1 - t.
    :ivar beta: Exponent of the prefactor.
    :ivar level: Level of the attached cusp form, None where the pullback is not modular.
    """
    a: Tuple[sympy.Rational, ...]
    b: Tuple[sympy.Rational, ...]
    k: int
    l: int
    beta: sympy.Rational
    level: Optional[int] = None

    @property
    def scale(self) -> sympy.Rational:
        return sympy.Rational(self.k ** self.k * self.l ** self.l, (self.k + self.l) ** (self.k + self.l))

    @property
    def radius(self) -> sympy.Rational:
        return sympy.Rational(self.k, self.k + self.l)

    @property
    def label(self) -> str:
        def join(values):
            return ','.join(str(v) for v in values)
        return f'{{{join(self.a)}}} {{{join(self.b)}}} k={self.k} l={self.l} beta={self.beta}'


def _rows(a: str, entries: List[Tuple[str, int, int, str, Optional[int]]]) -> List[IdentityRow]:
    indices = tuple(rational(x) for x in a.split())
    return [IdentityRow(a=indices, b=tuple(rational(x) for x in b.split()), k=k, l=l, beta=rational(beta), level=level)
            for b, k, l, beta, level in entries]


_third = '1/3 1/2 2/3'
_quarter = '1/4 1/2 3/4'
_half = '1/2 1/2 1/2'
_sixth = '1/6 1/2 5/6'

#: Known fiberings of hypergeometric threefold periods over hypergeometric K3 periods
identity_catalog: Tuple[IdentityRow, ...] = tuple(
    _rows('1/2 1/2 1/2 1/2', [(_half, 1, 1, '1', 16)])
    + _rows('1/4 1/3 2/3 3/4', [(_third, 2, 2, '1', 48), (_third, 1, 1, '1/2', 48), (_quarter, 2, 1, '1', 18)])
    + _rows('1/4 1/2 1/2 3/4', [(_half, 2, 2, '1', 64), (_half, 1, 1, '1/2', 64), (_third, 3, 1, '1', 48),
                                (_quarter, 1, 1, '1', 8)])
    + _rows('1/5 2/5 3/5 4/5', [(_third, 3, 2, '1', 75), (_quarter, 4, 1, '1', 50)])
    + _rows('1/3 1/3 2/3 2/3', [(_third, 2, 1, '1', 27)])
    + _rows('1/4 1/4 3/4 3/4', [(_quarter, 2, 2, '1', 32), (_quarter, 1, 1, '1/2', 32)])
    + _rows('1/3 1/2 1/2 2/3', [(_half, 2, 1, '1', None), (_third, 1, 1, '1', 12)])
    + _rows('1/6 1/2 1/2 5/6', [(_half, 2, 1, '1/2', None), (_third, 3, 3, '1', None), (_quarter, 1, 2, '1/2', 72),
                                (_sixth, 1, 1, '1', None)])
    + _rows('1/6 1/3 2/3 5/6', [(_third, 2, 1, '1/2', 108), (_quarter, 4, 2, '1', None), (_sixth, 2, 1, '1', None)])
    + _rows('1/8 3/8 5/8 7/8', [(_third, 3, 1, '1/2', None), (_quarter, 4, 4, '1', 128), (_quarter, 2, 2, '1/2', 128),
                                (_sixth, 1, 3, '1/2', None)])
    + _rows('1/6 1/4 3/4 5/6', [(_quarter, 2, 1, '1/2', 72), (_sixth, 2, 2, '1', None), (_sixth, 1, 1, '1/2', None)])
    + _rows('1/10 3/10 7/10 9/10', [(_quarter, 4, 1, '1/2', 200), (_sixth, 2, 3, '1/2', None)])
    + _rows('1/6 1/6 5/6 5/6', [(_sixth, 2, 1, '1/2', None)])
    + _rows('1/12 5/12 7/12 11/12', [(_quarter, 4, 2, '1/2', None)])
)

#: The row fibering the quintic over the 3F2(1/4, 1/2, 3/4) family
quintic_row = next(row for row in identity_catalog if row.level == 50)


def _pochhammer_product(indices, n: int) -> sympy.Rational:
    return sympy.Mul(*[sympy.rf(a, n) for a in indices])


def threefold_coefficient(row: IdentityRow, n: int) -> sympy.Rational:
    """
    Exact coefficient of z^n in 4F3(a; 1, 1, 1; z).
    """
    return _pochhammer_product(row.a, n) / sympy.factorial(n) ** 4


def fibered_coefficient(row: IdentityRow, n: int) -> sympy.Rational:
    """
    Exact coefficient of z^n of the contour integral: residue at t = 0 of the n-th term of the 3F2 series.
    """
    shift = row.l * n + row.beta
    return _pochhammer_product(row.b, n) / sympy.factorial(n) ** 3 * row.scale ** n \
        * sympy.rf(shift, row.k * n) / sympy.factorial(row.k * n)


def appendix_coefficient_check(row: IdentityRow, n_max: int) -> List[int]:
    """
    Compares both sides of a catalog identity coefficient by coefficient over the rationals.

    :param row: Catalog row.
    :param n_max: Largest power of z compared.
    :return: Powers at which the coefficients differ; empty when the identity holds up to n_max.
    """
    mismatches = [n for n in range(n_max + 1) if threefold_coefficient(row, n) != fibered_coefficient(row, n)]
    if mismatches:
        logger.warning(f'{row.label}: coefficients differ at powers {mismatches}')

    return mismatches


def appendix_identity_check(row: IdentityRow, z, ctx: PrecisionContext) -> IdentityCheck:
    """
    Sums the 4F3 directly and integrates the fibered 3F2 numerically over |t| = k/(k+l).

    :param row: Catalog row.
    :param z: Argument with |z| <= 1.
    :param ctx: Precision context.
    :return: Both sides and their residual.
    """
    mp = ctx.mp
    z = ctx.convert(z)
    if abs(z) > 1:
        raise ConfigurationError(f'catalog identities hold for |z| <= 1, got |z| = {ctx.nstr(abs(z), 8)}')

    a = [ctx.convert(x) for x in row.a]
    b = [ctx.convert(x) for x in row.b]
    scale, beta = ctx.convert(row.scale), ctx.convert(row.beta)
    direct = mp.hyper(a, [1, 1, 1], z)

    def integrand(t):
        argument = scale * z / (t ** row.k * (1 - t) ** row.l)
        return (1 - t) ** (-beta) * mp.hyper(b, [1, 1], argument) / t

    circle = ArcSegment(0, ctx.convert(row.radius), 0, 2 * mp.pi, ctx)
    estimate = contour_quadrature(integrand, circle, ctx)
    fibered = estimate.value / ctx.two_pi_i
    logger.debug(f'{row.label} at z = {ctx.nstr(z, 6)}: error estimate {ctx.nstr(estimate.error_estimate, 3)}')

    return compare(row.label, fibered, direct, estimate.error_estimate / abs(ctx.two_pi_i))


def banana_coefficients(l: int, count: int) -> List[int]:
    """
    First coefficients of f_l(z) = sum over n_1 .. n_(l+1) of the squared multinomial times z^(n_1 + ... + n_(l+1)),
    from a_l(n) = sum_k C(n, k)^2 a_(l-1)(k) and a_0(n) = 1.
    """
    if l < 0:
        raise ConfigurationError(f'banana index must be non-negative, got {l}')

    values = [1] * count
    for _ in range(l):
        values = [sum(comb(n, k) ** 2 * values[k] for k in range(n + 1)) for n in range(count)]

    return values


def _series_length(ratio, ctx: PrecisionContext) -> int:
    if ratio == 0:
        return 1
    if ratio >= 1:
        raise ConfigurationError(f'series evaluated at {float(ratio):.3g} of its radius')
    return taylor_terms(ratio, ctx, 0)


def banana_series(l: int, z, ctx: PrecisionContext, coefficients: Optional[List[int]] = None):
    """
    Evaluates f_l at a point inside its disk of convergence |z| < 1/(l+1)^2.
    """
    z = ctx.convert(z)
    if coefficients is None:
        coefficients = banana_coefficients(l, _series_length(abs(z) * (l + 1) ** 2, ctx))

    total = ctx.mp.zero
    for c in reversed(coefficients):
        total = total * z + c

    return total


def banana_identity_check(l: int, z, ctx: PrecisionContext) -> IdentityCheck:
    """
    Checks f_l(z) = (1 / 2 pi i) contour integral over |t| = 1/(l+1) of f_(l-1)(w) / ((1 - z/t)(1 - t)) dt / t with
    w = z / ((1 - z/t)(1 - t)).

    :param l: Banana index, at least 1.
    :param z: Argument with |z| below half of 1/(l+1)^2.
    :param ctx: Precision context.
    :return: Both sides and their residual.
    """
    mp = ctx.mp
    if l < 1:
        raise ConfigurationError(f'banana identity needs l >= 1, got {l}')
    z = ctx.convert(z)
    limit = ctx.convert(banana_radius_fraction) / (l + 1) ** 2
    if abs(z) >= limit:
        raise ConfigurationError(f'|z| = {ctx.nstr(abs(z), 8)} exceeds {ctx.nstr(limit, 8)} for l = {l}')

    radius = mp.mpf(1) / (l + 1)
    largest = abs(z) / ((1 - abs(z) / radius) * (1 - radius))
    inner = banana_coefficients(l - 1, _series_length(largest * l ** 2, ctx))

    def integrand(t):
        factor = 1 / ((1 - z / t) * (1 - t))
        return factor * banana_series(l - 1, z * factor, ctx, coefficients=inner) / t

    estimate = contour_quadrature(integrand, ArcSegment(0, radius, 0, 2 * mp.pi, ctx), ctx)
    fibered = estimate.value / ctx.two_pi_i
    direct = banana_series(l, z, ctx)

    return compare(f'banana l={l}', fibered, direct, estimate.error_estimate / abs(ctx.two_pi_i))


def catalog_report(ctx: PrecisionContext, z=catalog_sample, n_max: int = 20) -> Dict[str, IdentityCheck]:
    """
    Runs the exact coefficient check and the numerical contour check on every catalog row.
    """
    results = {}
    for row in identity_catalog:
        mismatches = appendix_coefficient_check(row, n_max)
        check = appendix_identity_check(row, z, ctx)
        if mismatches:
            check = IdentityCheck(name=check.name, lhs=check.lhs, rhs=check.rhs, residual=ctx.mp.inf,
                                  error_estimate=check.error_estimate)
        results[row.label] = check
        logger.info(f'{row.label}: residual {ctx.nstr(check.residual, 3)}')

    return results
