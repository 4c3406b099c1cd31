import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import sympy

from .continuation import mixed_period_matrix
from .errors import ConfigurationError, NonConvergenceError, RootNumberAmbiguityError
from .modular import derived_forms_qexp
from .numerics import Estimate, IdentityCheck, PrecisionContext, compare
from .qseries import QExpansion
from .utils import legendre_symbol_5

logger = logging.getLogger(__name__)

twisted_level = 25  #: Level of the newform twisted by the quadratic character of Q(sqrt 5)
newform_weight = 4  #: Weight of the newform f
central_point = 2  #: Centre of the functional equation s <-> weight - s
cutoffs = (sympy.Integer(1), sympy.Rational(5, 4))  #: Splitting points of the Mellin integral compared
comparison_point = sympy.Rational(23, 10)  #: Point at which both cutoffs are compared
consistency_margin = 10  #: Digits given up by the two-cutoff comparison
truncation_guard = 10  #: Extra digits carried by the truncation of the coefficient sum
height_log_coefficient = sympy.Rational(-5, 3)  #: Coefficient of log 5 in the height relation
height_l_coefficient = sympy.Rational(-125, 6)  #: Coefficient of 2 pi i sqrt(5) L'(f x chi, 2) / w_-


def quadratic_character(n: int) -> int:
    """
    Dirichlet character of Q(sqrt 5), the Legendre symbol (n/5).
    """
    return legendre_symbol_5(n)


def twist(series: QExpansion) -> QExpansion:
    """
    Coefficientwise twist c_n -> (n/5) c_n.
    """
    coefficients = [c * quadratic_character(series.offset + i) for i, c in enumerate(series.coefficients)]
    return QExpansion(coefficients, series.offset, f'{series.label} x chi', series.weight)


def terms_needed(ctx: PrecisionContext, level: int = twisted_level) -> int:
    """
    Number of coefficients after which the smoothed sums drop below the working tolerance at every cutoff.
    """
    largest = max(ctx.convert(c) for c in cutoffs)
    rate = 2 * ctx.pi / (ctx.mp.sqrt(level) * largest)
    digits = ctx.target_digits + truncation_guard

    return int(math.ceil(digits * math.log(10) / float(rate))) + 16


class TwistedLFunction:
    """
    L-function of a weight 4 eigenform twisted by a quadratic character, evaluated through the smoothed approximate
    functional equation

        Lambda(s) = sum_n b_n [x_n^-s Gamma(s, c x_n) + eps x_n^(s-4) Gamma(4-s, x_n / c)],  x_n = 2 pi n / sqrt(N),

    which holds for every cutoff c > 0 exactly when eps is the root number.

    :ivar coefficients: Twisted coefficients b_1, b_2, ...
    :ivar level: Level N of the twisted form.
    :ivar weight: Weight of the form.
    :ivar root_number: Sign of the functional equation, determined on construction when not given.
    :ivar ctx: Precision context.
    """

    def __init__(self, coefficients: List[int], ctx: PrecisionContext, level: int = twisted_level,
                 weight: int = newform_weight, root_number: Optional[int] = None):
        if not coefficients:
            raise ConfigurationError('an L-function needs at least one coefficient')
        if root_number not in (None, 1, -1):
            raise ConfigurationError(f'root number must be 1 or -1, got {root_number}')

        self.coefficients = [int(b) for b in coefficients]
        self.level = level
        self.weight = weight
        self.ctx = ctx
        self._rate = 2 * ctx.pi / ctx.mp.sqrt(level)
        self.root_number = self.determine_root_number() if root_number is None else root_number

    @classmethod
    def from_newform(cls, ctx: PrecisionContext, terms: Optional[int] = None, **kwargs) -> 'TwistedLFunction':
        """
        Builds L(f x chi, s) from the newform recovered from f_50.
        """
        terms = terms or terms_needed(ctx)
        f = derived_forms_qexp(max(32, terms + 1))['f']
        twisted = twist(f)

        return cls([twisted.coefficient(n) for n in range(1, terms + 1)], ctx, **kwargs)

    def gamma_factor(self, s):
        """
        (sqrt(N) / 2 pi)^s Gamma(s).
        """
        mp = self.ctx.mp
        return (1 / self._rate) ** s * mp.gamma(s)

    def completed(self, s, sign: Optional[int] = None, cutoff=1):
        """
        Lambda(s) from the smoothed sum split at the given cutoff.
        """
        mp, ctx = self.ctx.mp, self.ctx
        s, cutoff = ctx.convert(s), ctx.convert(cutoff)
        sign = self.root_number if sign is None else sign
        dual = self.weight - s

        total = mp.zero
        for n, b in enumerate(self.coefficients, 1):
            if b == 0:
                continue
            x = self._rate * n
            total += b * (x ** -s * mp.gammainc(s, x * cutoff) + sign * x ** -dual * mp.gammainc(dual, x / cutoff))

        return total

    def _cutoff_discrepancy(self, sign: int):
        first, second = (self.completed(comparison_point, sign, c) for c in cutoffs)
        return abs(first - second) / max(self.ctx.mp.one, abs(first))

    def determine_root_number(self) -> int:
        """
        Tests both signs of the functional equation; exactly one must make Lambda independent of the cutoff.

        :return: 1 or -1.
        """
        tol = self.ctx.tolerance(consistency_margin)
        discrepancies = {sign: self._cutoff_discrepancy(sign) for sign in (1, -1)}
        consistent = [sign for sign, d in discrepancies.items() if d <= tol]
        report = ', '.join(f'{sign:+d}: {self.ctx.nstr(d, 3)}' for sign, d in discrepancies.items())

        if len(consistent) == 2:
            raise RootNumberAmbiguityError(f'both root numbers pass the cutoff test ({report})')
        if not consistent:
            raise NonConvergenceError(f'no root number passes the cutoff test ({report}); more coefficients needed')
        logger.info(f'Root number {consistent[0]:+d} (cutoff discrepancies {report})')

        return consistent[0]

    def _theta(self, t):
        mp = self.ctx.mp
        return mp.fsum(b * mp.exp(-self._rate * n * t) for n, b in enumerate(self.coefficients, 1) if b)

    def completed_derivative(self, s, cutoff=1) -> Estimate:
        """
        Lambda'(s) from the Mellin integral of sum_n b_n exp(-2 pi n t / sqrt(N)) with weights t^s log t.
        """
        mp, ctx = self.ctx.mp, self.ctx
        s, cutoff = ctx.convert(s), ctx.convert(cutoff)

        upper, upper_error = mp.quad(lambda t: self._theta(t) * t ** (s - 1) * mp.log(t), [cutoff, mp.inf],
                                     error=True)
        lower, lower_error = mp.quad(lambda t: self._theta(t) * t ** (self.weight - s - 1) * mp.log(t),
                                     [1 / cutoff, mp.inf], error=True)

        return Estimate(value=upper - self.root_number * lower, error_estimate=upper_error + lower_error)

    def value(self, s):
        """
        L(s) = Lambda(s) / ((sqrt(N) / 2 pi)^s Gamma(s)).
        """
        s = self.ctx.convert(s)
        return self.completed(s) / self.gamma_factor(s)

    def derivative(self, s) -> Estimate:
        """
        L'(s) from Lambda'(s) and Lambda(s).
        """
        mp = self.ctx.mp
        s = self.ctx.convert(s)
        completed = self.completed(s)
        slope = self.completed_derivative(s)
        log_factor = -mp.log(self._rate) + mp.digamma(s)
        value = (slope.value - completed * log_factor) / self.gamma_factor(s)

        return Estimate(value=value, error_estimate=slope.error_estimate / abs(self.gamma_factor(s)))


def l_derivative_twist(ctx: PrecisionContext, s=central_point, function: Optional[TwistedLFunction] = None) -> Estimate:
    """
    L'(f x chi, s) for the level 25 newform f and the character of Q(sqrt 5).

    :param ctx: Precision context.
    :param s: Evaluation point, the centre by default.
    :param function: Prebuilt L-function, built from the newform when omitted.
    :return: Derivative with quadrature error estimate.
    """
    function = function or TwistedLFunction.from_newform(ctx)
    estimate = function.derivative(s)
    logger.info(f"L'(f x chi, {ctx.nstr(ctx.convert(s), 5)}) = {ctx.nstr(estimate.value, 20)}")

    return estimate


def height_relation_check(ctx: PrecisionContext, constants: Optional[Dict[str, object]] = None,
                          derivative: Optional[Estimate] = None) -> IdentityCheck:
    """
    Compares 1 + det((b, c), (w_-, a_-)) / (2 pi i sqrt(5) w_-) with -5/3 log 5 - 125/6 2 pi i sqrt(5) L' / w_-.

    :param ctx: Precision context.
    :param constants: Mixed periods keyed 'b', 'c', 'w-', 'a-', computed by continuation when omitted.
    :param derivative: L'(f x chi, 2), computed when omitted.
    :return: Both sides and their residual.
    """
    mp = ctx.mp
    if constants is None:
        constants = mixed_period_matrix(ctx, cross_check=False).constants
    derivative = derivative or l_derivative_twist(ctx)

    b, c, w, a = (ctx.convert(constants[k]) for k in ('b', 'c', 'w-', 'a-'))
    prefactor = ctx.two_pi_i * ctx.sqrt5
    lhs = 1 + (b * a - c * w) / (prefactor * w)
    rhs = ctx.convert(height_log_coefficient) * mp.log(5) \
        + ctx.convert(height_l_coefficient) * prefactor * derivative.value / w
    check = compare('height relation', lhs, rhs, derivative.error_estimate)
    logger.info(f'Height relation residual {ctx.nstr(check.residual, 3)}')

    return check


def hecke_residual(series: QExpansion, p: int, eigenvalue) -> QExpansion:
    """
    series|T_p - eigenvalue series, known to the precision of the Hecke image.
    """
    image = series.hecke(p, series.weight)
    return (image - eigenvalue * series.truncate(image.precision)).relabel(f'{series.label}|(T_{p} - a_{p})', 4)


@dataclass
class MagneticReport:
    """
    Divisibility of the coefficients of g50|T_p - a_p g50 by their index.

    :ivar prime: Hecke prime p.
    :ivar eigenvalue: a_p of the newform.
    :ivar denominator: LCM of the denominators of the g50 coefficients used, by which the difference is scaled.
    :ivar checked: Number of coefficients tested.
    :ivar failures: Indices n for which n does not divide the scaled coefficient.
    """
    prime: int
    eigenvalue: int
    denominator: int
    checked: int
    failures: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def hecke_magnetic_check(p: int, precision: int, forms: Optional[Dict[str, QExpansion]] = None) -> MagneticReport:
    """
    Checks that g50|T_p - a_p g50 is magnetic, i.e. its n-th coefficient is divisible by n after clearing the
    denominators of g50.

    :param p: Prime not dividing 50.
    :param precision: Number of g50 coefficients used; coefficients below precision / p are tested.
    :param forms: Expansions from derived_forms_qexp, built when omitted.
    :return: Report with the failing indices.
    """
    if not sympy.isprime(p) or 50 % p == 0:
        raise ConfigurationError(f'the magnetic check needs a prime not dividing 50, got {p}')
    forms = forms or derived_forms_qexp(precision)
    g50, f = forms['g50'].truncate(precision), forms['f']
    if g50.precision < precision:
        raise ConfigurationError(f'g50 is only known to q^{g50.precision - 1}, {precision} coefficients requested')

    eigenvalue = int(f.coefficient(p))
    denominator = g50.denominator_lcm()
    difference = hecke_residual(g50, p, eigenvalue)

    failures = []
    for n in range(1, difference.precision):
        scaled = difference.coefficient(n) * denominator
        if scaled.q != 1 or int(scaled) % n:
            failures.append(n)
    checked = difference.precision - 1
    logger.info(f'Magnetic check at p = {p}: {checked - len(failures)} of {checked} coefficients divisible '
                f'(denominator {denominator})')

    return MagneticReport(prime=p, eigenvalue=eigenvalue, denominator=denominator, checked=checked, failures=failures)


def eigenform_residual(p: int, precision: int, forms: Optional[Dict[str, QExpansion]] = None) -> QExpansion:
    """
    f|T_p - a_p f for the newform, which vanishes identically for an eigenform.
    """
    forms = forms or derived_forms_qexp(precision)
    f = forms['f']
    return hecke_residual(f, p, f.coefficient(p))
