import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import sympy

from .errors import ConfigurationError, InstabilityError, NonConvergenceError, PoleOfGammaError
from .utils import (default_guard_bits, default_target_digits, epsilon_ratio, epsilon_samples, epsilon_start,
                    minimum_working_bits)

logger = logging.getLogger(__name__)


class PrecisionContext:
    """
    Immutable bundle of working precision and a private mpmath context. Every numerical routine takes one of these
    instead of touching the global mpmath precision.

    :ivar target_digits: Decimal digits requested by the caller.
    :ivar guard_bits: Bits carried on top of the target.
    :ivar working_bits: Binary precision of the private mpmath context.
    :ivar mp: Private mpmath context at working_bits.
    """

    def __init__(self, target_digits: int = default_target_digits, working_bits: Optional[int] = None,
                 guard_bits: int = default_guard_bits):
        if target_digits < 1:
            raise ConfigurationError(f'target_digits must be positive, got {target_digits}')
        if guard_bits < 0:
            raise ConfigurationError(f'guard_bits must be non-negative, got {guard_bits}')

        required = self.required_bits(target_digits, guard_bits)
        if working_bits is None:
            working_bits = max(minimum_working_bits, required)
        elif working_bits < required:
            raise ConfigurationError(f'{working_bits} working bits cannot carry {target_digits} digits with '
                                     f'{guard_bits} guard bits (need {required})')

        self._target_digits = int(target_digits)
        self._guard_bits = int(guard_bits)
        self._working_bits = int(working_bits)

        self.mp = mpmath.MPContext()
        self.mp.prec = self._working_bits
        self._rules = {}

    @classmethod
    def minimal(cls, target_digits: int, guard_bits: int = 32) -> 'PrecisionContext':
        """
        Smallest admissible context for the given number of digits; meant for quick runs and tests.
        """
        return cls(target_digits, working_bits=cls.required_bits(target_digits, guard_bits), guard_bits=guard_bits)

    @staticmethod
    def required_bits(target_digits: int, guard_bits: int) -> int:
        return math.ceil(target_digits * math.log2(10)) + guard_bits

    @property
    def target_digits(self) -> int:
        return self._target_digits

    @property
    def guard_bits(self) -> int:
        return self._guard_bits

    @property
    def working_bits(self) -> int:
        return self._working_bits

    def __repr__(self):
        return f'PrecisionContext(target_digits={self.target_digits}, working_bits={self.working_bits}, ' \
               f'guard_bits={self.guard_bits})'

    def tolerance(self, margin: int = 0):
        """
        Returns 10^(-target_digits + margin) as a context number.

        :param margin: Digits given up by the check.
        :return: Tolerance.
        """
        return self.mp.mpf(10) ** (margin - self.target_digits)

    @property
    def epsilon(self):
        """
        Relative unit of the working precision.
        """
        return self.mp.ldexp(1, -self.working_bits)

    def convert(self, value):
        """
        Converts integers, exact rationals, strings and numbers from other contexts into this context.

        :param value: Value to convert.
        :return: mpf or mpc of this context.
        """
        if isinstance(value, sympy.Rational):
            return self.mp.mpf(int(value.p)) / int(value.q)
        if isinstance(value, Fraction):
            return self.mp.mpf(value.numerator) / value.denominator
        if isinstance(value, sympy.Basic):
            digits = int(self.working_bits * 0.302) + 5
            re, im = value.as_real_imag()
            if im == 0:
                return self.mp.mpf(str(sympy.N(re, digits)))
            return self.mp.mpc(str(sympy.N(re, digits)), str(sympy.N(im, digits)))
        return self.mp.mpmathify(value)

    def nstr(self, value, digits: Optional[int] = None) -> str:
        """
        Decimal string of a context number with target_digits significant digits.
        """
        return self.mp.nstr(value, digits or self.target_digits)

    @cached_property
    def pi(self):
        return +self.mp.pi

    @cached_property
    def two_pi_i(self):
        return self.mp.mpc(0, 2 * self.mp.pi)

    @cached_property
    def zeta3(self):
        return self.mp.zeta(3)

    @cached_property
    def sqrt2(self):
        return self.mp.sqrt(2)

    @cached_property
    def sqrt5(self):
        return self.mp.sqrt(5)

    def rule(self, order: int) -> 'QuadratureRule':
        """
        Gauss-Legendre rule of the given order, built once per context.
        """
        if order not in self._rules:
            self._rules[order] = gauss_legendre(order, self)

        return self._rules[order]

    def default_order(self) -> int:
        """
        Base quadrature order used when the caller does not pick one.
        """
        return max(12, self.target_digits // 2 + 4)

    def epsilon_schedule(self, start=epsilon_start, ratio=epsilon_ratio, count: int = epsilon_samples) -> list:
        """
        Geometric sequence of regularization parameters used for limits.
        """
        start, ratio = self.convert(start), self.convert(ratio)
        return [start * ratio ** k for k in range(count)]


@dataclass(frozen=True)
class Estimate:
    """
    Numerical value together with a heuristic error estimate.

    :ivar value: Scalar or list of context numbers.
    :ivar error_estimate: Non-negative context number.
    """
    value: object
    error_estimate: object


@dataclass(frozen=True)
class IdentityCheck:
    """
    Both sides of a numerically verified identity.

    :ivar name: Label of the identity.
    :ivar lhs: Left side, a number or a list of numbers.
    :ivar rhs: Right side in the same shape.
    :ivar residual: Largest entrywise difference, relative to the size of the right side when that exceeds one.
    :ivar error_estimate: Heuristic error of the numerical side.
    """
    name: str
    lhs: object
    rhs: object
    residual: object
    error_estimate: object

    def passed(self, tolerance) -> bool:
        return self.residual <= tolerance


def flatten(value) -> list:
    """
    Entries of a number, a sequence or a matrix (row major) as a flat list.
    """
    if hasattr(value, 'rows') and hasattr(value, 'cols'):
        return [value[i, j] for i in range(value.rows) for j in range(value.cols)]
    if isinstance(value, (list, tuple)):
        return [x for item in value for x in flatten(item)]

    return [value]


def compare(name: str, lhs, rhs, error_estimate=0) -> IdentityCheck:
    """
    Builds an IdentityCheck from two numbers or two equally long sequences of numbers.
    """
    left, right = flatten(lhs), flatten(rhs)
    assert len(left) == len(right), 'identity sides differ in length'

    scale = max([1] + [abs(r) for r in right])
    residual = max(abs(a - b) for a, b in zip(left, right)) / scale

    return IdentityCheck(name=name, lhs=lhs, rhs=rhs, residual=residual, error_estimate=error_estimate)


@dataclass(frozen=True)
class QuadratureRule:
    """
    Gauss-Legendre rule on [-1, 1].

    :ivar nodes: Nodes in increasing order.
    :ivar weights: Matching weights.
    :ivar order: Number of nodes.
    """
    nodes: tuple
    weights: tuple
    order: int


def gauss_legendre(order: int, ctx: PrecisionContext) -> QuadratureRule:
    """
    Computes Gauss-Legendre nodes and weights by Newton iteration on the Legendre recurrence.

    :param order: Number of nodes.
    :param ctx: Precision context.
    :return: Quadrature rule.
    """
    if order < 1:
        raise ConfigurationError(f'quadrature order must be positive, got {order}')

    mp = ctx.mp
    tol = mp.ldexp(1, -ctx.working_bits + 4)
    nodes = [None] * order
    weights = [None] * order

    for k in range(1, order // 2 + 1):
        x = mp.cos(mp.pi * (4 * k - 1) / (4 * order + 2))
        for _ in range(100):
            p, dp = _legendre(order, x, mp)
            dx = p / dp
            x -= dx
            if abs(dx) < tol:
                break
        else:
            raise NonConvergenceError(f'Legendre root {k} of order {order} did not converge')

        p, dp = _legendre(order, x, mp)
        w = 2 / ((1 - x * x) * dp * dp)
        nodes[order - k], weights[order - k] = x, w
        nodes[k - 1], weights[k - 1] = -x, w

    if order % 2:
        p, dp = _legendre(order, mp.zero, mp)
        nodes[order // 2] = mp.zero
        weights[order // 2] = 2 / (dp * dp)

    return QuadratureRule(nodes=tuple(nodes), weights=tuple(weights), order=order)


def _legendre(n: int, x, mp) -> Tuple:
    p0, p1 = mp.one, x
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = n * (x * p1 - p0) / (x * x - 1)

    return p1, dp


def gamma_eval(z, ctx: PrecisionContext):
    """
    Gamma function at working precision.

    :param z: Real or complex argument, not a non-positive integer.
    :param ctx: Precision context.
    :return: Gamma(z).
    """
    z = ctx.convert(z)
    if ctx.mp.im(z) == 0 and ctx.mp.re(z) <= 0 and ctx.mp.isint(ctx.mp.re(z)):
        raise PoleOfGammaError(f'Gamma has a pole at {ctx.nstr(z, 10)}')

    return ctx.mp.gamma(z)


class PathSegment(ABC):
    """
    Oriented piece of a contour parametrized by s in [-1, 1].

    :ivar ctx: Precision context the segment computes in.
    """

    def __init__(self, ctx: PrecisionContext):
        self.ctx = ctx

    @abstractmethod
    def point(self, s):
        pass

    @abstractmethod
    def derivative(self, s):
        pass

    @abstractmethod
    def reversed(self) -> 'PathSegment':
        pass

    @abstractmethod
    def split(self) -> Tuple['PathSegment', 'PathSegment']:
        pass

    @property
    def start(self):
        return self.point(-1)

    @property
    def end(self):
        return self.point(1)

    def sample(self, count: int = 64) -> np.ndarray:
        """
        Complex float samples along the segment including both endpoints.
        """
        return np.array([complex(self.point(self.ctx.convert(s))) for s in np.linspace(-1, 1, count)])


class LineSegment(PathSegment):
    """
    Straight segment from a to b.
    """

    def __init__(self, a, b, ctx: PrecisionContext):
        super(LineSegment, self).__init__(ctx)
        self.a = ctx.convert(a)
        self.b = ctx.convert(b)
        self._mid = (self.a + self.b) / 2
        self._half = (self.b - self.a) / 2

    def point(self, s):
        if s == -1:
            return self.a
        if s == 1:
            return self.b
        return self._mid + s * self._half

    def derivative(self, s):
        return self._half

    def reversed(self) -> 'LineSegment':
        return LineSegment(self.b, self.a, self.ctx)

    def split(self) -> Tuple['LineSegment', 'LineSegment']:
        return LineSegment(self.a, self._mid, self.ctx), LineSegment(self._mid, self.b, self.ctx)

    def __repr__(self):
        return f'LineSegment({self.ctx.nstr(self.a, 8)} -> {self.ctx.nstr(self.b, 8)})'


class ArcSegment(PathSegment):
    """
    Circular arc around center with given radius, from angle theta0 to theta1 (counterclockwise if theta1 > theta0).
    """

    def __init__(self, center, radius, theta0, theta1, ctx: PrecisionContext):
        super(ArcSegment, self).__init__(ctx)
        self.center = ctx.convert(center)
        self.radius = ctx.convert(radius)
        self.theta0 = ctx.convert(theta0)
        self.theta1 = ctx.convert(theta1)
        self._mid = (self.theta0 + self.theta1) / 2
        self._half = (self.theta1 - self.theta0) / 2

    def _angle(self, s):
        if s == -1:
            return self.theta0
        if s == 1:
            return self.theta1
        return self._mid + s * self._half

    def point(self, s):
        return self.center + self.radius * self.ctx.mp.expj(self._angle(s))

    def derivative(self, s):
        return self.ctx.mp.mpc(0, 1) * self.radius * self.ctx.mp.expj(self._angle(s)) * self._half

    def reversed(self) -> 'ArcSegment':
        return ArcSegment(self.center, self.radius, self.theta1, self.theta0, self.ctx)

    def split(self) -> Tuple['ArcSegment', 'ArcSegment']:
        return ArcSegment(self.center, self.radius, self.theta0, self._mid, self.ctx), \
            ArcSegment(self.center, self.radius, self._mid, self.theta1, self.ctx)

    def __repr__(self):
        return f'ArcSegment(center={self.ctx.nstr(self.center, 8)}, radius={self.ctx.nstr(self.radius, 8)}, ' \
               f'{self.ctx.nstr(self.theta0, 6)} -> {self.ctx.nstr(self.theta1, 6)})'


class Contour:
    """
    Ordered, oriented chain of path segments.

    :ivar segments: List of PathSegment objects.
    """

    def __init__(self, segments: Sequence[PathSegment] = ()):
        self.segments = list(segments)

    def __add__(self, other: 'Contour') -> 'Contour':
        return Contour(self.segments + other.segments)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def reversed(self) -> 'Contour':
        return Contour([seg.reversed() for seg in reversed(self.segments)])

    @property
    def start(self):
        return self.segments[0].start

    @property
    def end(self):
        return self.segments[-1].end

    def sample(self, per_segment: int = 64) -> np.ndarray:
        return np.concatenate([seg.sample(per_segment) for seg in self.segments])

    def is_closed(self, tol: float = 1e-12) -> bool:
        return abs(complex(self.start) - complex(self.end)) < tol

    def winding_number(self, point: complex, per_segment: int = 256) -> int:
        """
        Winding number of a closed contour about a point, from the unwrapped argument of dense samples.

        :param point: Point not on the contour.
        :param per_segment: Samples per segment.
        :return: Integer winding number.
        """
        samples = self.sample(per_segment) - complex(point)
        phase = np.unwrap(np.angle(samples))

        return int(np.round((phase[-1] - phase[0]) / (2 * np.pi)))

    def min_distance(self, point: complex, per_segment: int = 256) -> float:
        return float(np.min(np.abs(self.sample(per_segment) - complex(point))))


IntegrandType = Callable[[object], Union[object, Sequence]]


def _as_list(value) -> Tuple[list, bool]:
    if isinstance(value, (list, tuple)):
        return list(value), True
    return [value], False


def _apply_rule(integrand: IntegrandType, segment: PathSegment, rule: QuadratureRule, mp) -> Tuple[list, object]:
    total = None
    l1 = mp.zero
    for x, w in zip(rule.nodes, rule.weights):
        values, _ = _as_list(integrand(segment.point(x)))
        dt = segment.derivative(x) * w
        if total is None:
            total = [v * dt for v in values]
        else:
            total = [acc + v * dt for acc, v in zip(total, values)]
        l1 += abs(dt) * max(abs(v) for v in values)

    return total, l1


def _distance(u: list, v: list):
    return max(abs(a - b) for a, b in zip(u, v))


def contour_quadrature(integrand: IntegrandType, path: Union[Contour, PathSegment], ctx: PrecisionContext,
                       order: Optional[int] = None, margin: int = 3, max_depth: int = 30) -> Estimate:
    """
    Integrates a scalar or vector valued integrand along an oriented contour with Gauss-Legendre rules. Each
    segment is accepted when orders n and 2n (or 2n and 4n) agree; otherwise it is bisected.

    :param integrand: Function of a context number returning a number or a list of numbers.
    :param path: Contour or single segment.
    :param ctx: Precision context.
    :param order: Base rule order, defaults to ctx.default_order().
    :param margin: Tolerance is 10^(-target_digits + margin) relative to the L1 size of the integrand.
    :param max_depth: Maximal number of bisections of a segment.
    :return: Estimate of the integral.
    """
    mp = ctx.mp
    segments = path.segments if isinstance(path, Contour) else [path]
    order = order or ctx.default_order()
    rule_n, rule_2n, rule_4n = ctx.rule(order), ctx.rule(2 * order), ctx.rule(4 * order)

    sample, vector = _as_list(integrand(segments[0].point(0)))
    coarse = []
    scale = mp.zero
    for seg in segments:
        value, l1 = _apply_rule(integrand, seg, rule_n, mp)
        coarse.append(value)
        scale += l1
    threshold = ctx.tolerance(margin) * max(scale, mp.ldexp(1, -ctx.working_bits // 2))

    def refine(seg: PathSegment, first: list, depth: int):
        second, _ = _apply_rule(integrand, seg, rule_2n, mp)
        err = _distance(first, second)
        if err <= threshold:
            return second, err
        third, _ = _apply_rule(integrand, seg, rule_4n, mp)
        err = _distance(second, third)
        if err <= threshold:
            return third, err
        if depth >= max_depth:
            raise NonConvergenceError(f'quadrature on {seg} did not converge after {depth} bisections '
                                      f'(last change {ctx.nstr(err, 5)})')
        logger.debug(f'Bisecting {seg} at depth {depth}')
        total, total_err = [mp.zero] * len(first), mp.zero
        for half in seg.split():
            start, _ = _apply_rule(integrand, half, rule_n, mp)
            value, e = refine(half, start, depth + 1)
            total = [a + b for a, b in zip(total, value)]
            total_err += e
        return total, total_err

    result, error = [mp.zero] * len(sample), mp.zero
    for seg, first in zip(segments, coarse):
        value, err = refine(seg, first, 0)
        result = [a + b for a, b in zip(result, value)]
        error += err

    return Estimate(value=result if vector else result[0], error_estimate=error)


def limit_extrapolate(samples: Sequence[Tuple[object, object]], ctx: PrecisionContext,
                      exponents: Optional[Sequence[int]] = None, margin: int = 3) -> Estimate:
    """
    Richardson extrapolation of values sampled on a geometric sequence of epsilons towards epsilon = 0.

    :param samples: Pairs (epsilon, value) with epsilon decreasing geometrically.
    :param ctx: Precision context.
    :param exponents: Powers of epsilon eliminated column by column, defaults to 1, 2, 3, ...
    :param margin: Digits given up by the instability test.
    :return: Extrapolated limit with the difference of the last two columns as error.
    """
    mp = ctx.mp
    if len(samples) < 2:
        raise ConfigurationError('extrapolation needs at least two samples')

    eps = [ctx.convert(e) for e, _ in samples]
    values = [ctx.convert(v) for _, v in samples]
    ratio = eps[1] / eps[0]
    for a, b in zip(eps[1:], eps[2:]):
        if abs(b / a - ratio) > ctx.tolerance(margin):
            raise ConfigurationError('extrapolation samples are not geometric')

    exponents = list(exponents) if exponents is not None else list(range(1, len(samples)))
    column = values
    tails = [values[-1]]
    for p in exponents[:len(samples) - 1]:
        factor = ratio ** p
        column = [(column[k + 1] - factor * column[k]) / (1 - factor) for k in range(len(column) - 1)]
        tails.append(column[-1])

    diffs = [abs(b - a) for a, b in zip(tails, tails[1:])]
    error = diffs[-1]
    if len(diffs) > 1 and error > ctx.tolerance(margin) * max(abs(tails[-1]), 1) and error >= diffs[-2]:
        raise InstabilityError(f'extrapolation columns diverge: last changes {ctx.nstr(diffs[-2], 5)}, '
                               f'{ctx.nstr(diffs[-1], 5)}')

    return Estimate(value=tails[-1], error_estimate=error)
