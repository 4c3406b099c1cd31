import logging
import math
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Optional, Sequence

import numpy as np
import sympy

from .errors import (ClearanceError, ConfigurationError, NonIntegralityError, StepCollapseError,
                     StructureViolationError)
from .hypergeo import (HypergeometricOperator, conifold_basis, eval_basis, frobenius_basis, k3_conifold_basis)
from .numerics import PrecisionContext
from .utils import exact_matrix, integer_rounding_margin

logger = logging.getLogger(__name__)

step_fraction = 0.4  #: Continuation step as a fraction of the distance to the nearest singular point
loop_vertices = 8  #: Vertices of the polygon used for monodromy loops

#: Intersection form of the integral symplectic period basis
intersection_matrix = exact_matrix([[0, 0, 0, 1],
                                    [0, 0, 1, 0],
                                    [0, -1, 0, 0],
                                    [-1, 0, 0, 0]])

#: Integral monodromy of Pi along counterclockwise loops around 0 and the conifold point
expected_monodromy = {
    '0': exact_matrix([[1, 0, 0, 0],
                       [1, 1, 0, 0],
                       [-2, -5, 1, 0],
                       [5, 3, -1, 1]]),
    'conifold': exact_matrix([[1, 0, 0, -1],
                              [0, 1, 0, 0],
                              [0, 0, 1, 0],
                              [0, 0, 0, 1]]),
}


def period_transform(ctx: PrecisionContext):
    """
    Constant matrix taking the Frobenius basis varpi of the quintic to the integral symplectic basis Pi.
    """
    mp = ctx.mp
    tpi = ctx.two_pi_i

    return mp.matrix([[tpi ** 3, 0, 0, 0],
                      [0, tpi ** 2, 0, 0],
                      [50 * tpi ** 3 / 24, tpi ** 2 / 2, -5 * tpi, 0],
                      [-200 * ctx.zeta3, 50 * tpi ** 2 / 24, 0, 5]])


def _shift_polynomial(poly: sympy.Poly, center, ctx: PrecisionContext) -> list:
    coeffs = [ctx.convert(a) for a in poly.all_coeffs()[::-1]]

    return [sum((comb(p, k) * coeffs[p] * center ** (p - k) for p in range(k, len(coeffs))), ctx.mp.zero)
            for k in range(len(coeffs))]


class TaylorChart:
    """
    Canonical local basis B_k, k < r, of sum_j p_j(z) D^j at an ordinary point: the Taylor coefficients of B_k at the
    center are delta_{ik} for i < r.

    :ivar center: Expansion point.
    :ivar rank: Order r of the operator.
    :ivar terms: Number of Taylor coefficients per basis element.
    :ivar coefficients: r lists of Taylor coefficients.
    """

    def __init__(self, d_form: Sequence[sympy.Poly], center, terms: int, ctx: PrecisionContext):
        self.ctx = ctx
        self.center = ctx.convert(center)
        self.rank = len(d_form) - 1
        self.terms = max(terms, self.rank + 1)
        shifted = [_shift_polynomial(p, self.center, ctx) for p in d_form]
        lead = shifted[self.rank][0]

        mp = ctx.mp
        r = self.rank
        self.coefficients = []
        for k in range(r):
            y = [mp.one if i == k else mp.zero for i in range(r)]
            for n in range(self.terms - r):
                acc = mp.zero
                for j, coeffs in enumerate(shifted):
                    for m, c in enumerate(coeffs):
                        if j == r and m == 0:
                            continue
                        index = n - m + j
                        if index < j:
                            continue
                        acc += c * math.perm(index, j) * y[index]
                y.append(-acc / (lead * math.perm(n + r, r)))
            self.coefficients.append(y)

    def transfer(self, point):
        """
        Matrix P with P[k, j] the normalized derivative D^j B_k / j! at point.
        """
        mp = self.ctx.mp
        h = self.ctx.convert(point) - self.center
        powers = [mp.one]
        for _ in range(self.terms):
            powers.append(powers[-1] * h)

        result = mp.matrix(self.rank, self.rank)
        for k, y in enumerate(self.coefficients):
            for j in range(self.rank):
                result[k, j] = sum((comb(n, j) * y[n] * powers[n - j] for n in range(j, self.terms)), mp.zero)

        return result

    def evaluate(self, point) -> list:
        """
        Values B_k(point) of the basis elements.
        """
        mp = self.ctx.mp
        h = self.ctx.convert(point) - self.center
        values = []
        for y in self.coefficients:
            acc = mp.zero
            for c in reversed(y):
                acc = acc * h + c
            values.append(acc)

        return values


def taylor_terms(ratio, ctx: PrecisionContext, rank: int) -> int:
    """
    Number of Taylor terms needed when evaluating at ratio times the radius of convergence.
    """
    return int(math.ceil((ctx.working_bits + 16) / -math.log2(float(ratio)))) + rank + 4


def _segment_distance(a, b, s, mp):
    direction = b - a
    length2 = abs(direction) ** 2
    if length2 == 0:
        return abs(a - s)
    t = mp.re((s - a) * mp.conj(direction)) / length2
    t = min(max(t, mp.zero), mp.one)

    return abs(a + t * direction - s)


class ContinuationPath:
    """
    Polygonal path in the parameter plane avoiding a finite singular set.

    :ivar waypoints: Vertices in order.
    :ivar singular_points: Points the path must avoid.
    """

    def __init__(self, waypoints: Sequence, singular_points: Sequence, ctx: PrecisionContext):
        self.ctx = ctx
        self.waypoints = [ctx.convert(w) for w in waypoints]
        self.singular_points = [ctx.convert(s) for s in singular_points]
        self.validate()

    def validate(self):
        floor = self.ctx.mp.ldexp(1, -self.ctx.working_bits // 2)
        for a, b in self.segments:
            for s in self.singular_points:
                if _segment_distance(a, b, s, self.ctx.mp) <= floor:
                    raise ClearanceError(f'path segment {self.ctx.nstr(a, 8)} -> {self.ctx.nstr(b, 8)} passes '
                                         f'through singular point {self.ctx.nstr(s, 8)}')

    @property
    def segments(self) -> List[tuple]:
        return list(zip(self.waypoints[:-1], self.waypoints[1:]))

    def reversed(self) -> 'ContinuationPath':
        return ContinuationPath(self.waypoints[::-1], self.singular_points, self.ctx)

    def __add__(self, other: 'ContinuationPath') -> 'ContinuationPath':
        return ContinuationPath(self.waypoints + other.waypoints[1:], self.singular_points, self.ctx)


def transfer_matrix(op: HypergeometricOperator, path: ContinuationPath, ctx: PrecisionContext):
    """
    Transfer matrix of normalized jets along a path: a jet state S at the start becomes S * P at the end, so that
    transfer(p1 followed by p2) = transfer(p1) * transfer(p2).

    :param op: Operator in D-form.
    :param path: Path avoiding the singular set.
    :param ctx: Precision context.
    :return: r x r matrix.
    """
    mp = ctx.mp
    d_form = op.d_form()
    floor = mp.ldexp(1, -ctx.working_bits // 2)
    total = mp.eye(op.rank)
    steps = 0
    for a, b in path.segments:
        current = a
        while current != b:
            rho = min(abs(current - s) for s in path.singular_points)
            remaining = abs(b - current)
            step = min(remaining, step_fraction * rho)
            if step < floor:
                raise StepCollapseError(f'step {ctx.nstr(step, 5)} at {ctx.nstr(current, 10)} below precision floor')
            target = b if step == remaining else current + (b - current) * step / remaining
            chart = TaylorChart(d_form, current, taylor_terms(step / rho, ctx, op.rank), ctx)
            total = total * chart.transfer(target)
            current = target
            steps += 1

    logger.debug(f'Continued {op.name} periods along {len(path.segments)} segments in {steps} steps')

    return total


def base_point(op: HypergeometricOperator) -> sympy.Rational:
    """
    Base point 1/(5 C) between 0 and the conifold point.
    """
    return 1 / (5 * op.singular_scale)


def global_period_jets(op: HypergeometricOperator, z, ctx: PrecisionContext, basis=None):
    """
    Normalized jets of the global period vector (Pi for the quintic, varrho for the K3 family) at a point inside the
    disk of convergence at zero, with the principal logarithm.
    """
    basis = basis or frobenius_basis(op, 64, ctx)
    jets = eval_basis(basis, z, derivatives=op.rank - 1)
    if op.rank == 4:
        jets = period_transform(ctx) * jets

    return jets


def period_jet(z, ctx: PrecisionContext, path: Optional[Sequence] = None):
    """
    Normalized jet of Pi at z, continued from the base point 1/5^6 along the given waypoints (straight by default).

    :param z: Target point.
    :param ctx: Precision context.
    :param path: Intermediate waypoints.
    :return: 4 x 4 matrix, rows Pi_i, columns D^j Pi_i / j!.
    """
    op = HypergeometricOperator.quintic()
    start = ctx.convert(base_point(op))
    jets = global_period_jets(op, start, ctx)
    waypoints = [start] + list(path or []) + [z]
    route = ContinuationPath(waypoints, [0, ctx.convert(op.conifold_point)], ctx)

    return jets * transfer_matrix(op, route, ctx)


def loop_path(start, center, ctx: PrecisionContext, singular_points: Sequence) -> ContinuationPath:
    """
    Counterclockwise polygonal loop from start around center with radius half the distance between them.
    """
    mp = ctx.mp
    start, center = ctx.convert(start), ctx.convert(center)
    radius = abs(start - center) / 2
    theta0 = mp.arg(start - center)
    vertices = [center + radius * mp.expj(theta0 + 2 * mp.pi * k / loop_vertices) for k in range(loop_vertices)]

    return ContinuationPath([start] + vertices + [vertices[0], start], singular_points, ctx)


@dataclass
class MonodromyResult:
    """
    Exact monodromy matrix with the distance of its numerical approximation to the nearest integer matrix.

    :ivar matrix: Exact integer matrix acting by Pi -> M Pi.
    :ivar residual: Largest entrywise distance before rounding.
    :ivar numerical: Numerical matrix before rounding.
    """
    matrix: sympy.Matrix
    residual: object
    numerical: object = field(repr=False)


def round_integer_matrix(numerical, ctx: PrecisionContext, margin: int = integer_rounding_margin):
    """
    Rounds a numerical matrix to the nearest integer matrix.

    :param numerical: Matrix of context numbers.
    :param ctx: Precision context.
    :param margin: Tolerance is 10^(-target_digits + margin).
    :return: Exact matrix and the rounding residual.
    """
    mp = ctx.mp
    rows = []
    residual = mp.zero
    for i in range(numerical.rows):
        row = []
        for j in range(numerical.cols):
            value = numerical[i, j]
            nearest = int(mp.nint(mp.re(value)))
            residual = max(residual, abs(value - nearest))
            row.append(nearest)
        rows.append(row)
    if residual > ctx.tolerance(margin):
        raise NonIntegralityError(f'matrix is {ctx.nstr(residual, 5)} away from integral')

    return sympy.Matrix(rows), residual


def monodromy(op: HypergeometricOperator, around: str, ctx: PrecisionContext) -> MonodromyResult:
    """
    Monodromy of the global period vector along a counterclockwise loop around 0 or the conifold point.

    :param op: Quintic or K3 operator.
    :param around: '0' or 'conifold'.
    :param ctx: Precision context.
    :return: Integral monodromy matrix.
    """
    centers = {'0': sympy.Integer(0), 'conifold': op.conifold_point}
    if around not in centers:
        raise ConfigurationError(f'unknown loop center {around}, expected one of {sorted(centers)}')

    start = ctx.convert(base_point(op))
    singular = [ctx.mp.zero, ctx.convert(op.conifold_point)]
    state = global_period_jets(op, start, ctx)
    loop = loop_path(start, ctx.convert(centers[around]), ctx, singular)
    numerical = state * transfer_matrix(op, loop, ctx) * ctx.mp.inverse(state)
    matrix, residual = round_integer_matrix(numerical, ctx)
    logger.info(f'Monodromy of {op.name} around {around}: rounding residual {ctx.nstr(residual, 5)}')

    return MonodromyResult(matrix=matrix, residual=residual, numerical=numerical)


def check_symplectic(matrix: sympy.Matrix, form: sympy.Matrix = intersection_matrix) -> bool:
    """
    Exact check of M^T Sigma M = Sigma over the integers.
    """
    m = np.array(matrix.tolist(), dtype=object)
    s = np.array(form.tolist(), dtype=object)

    return bool(np.array_equal(m.T.dot(s).dot(m), s))


mixed_constant_names = ('w+', 'w-', 'e+', 'e-', 'a+', 'a-', 'b', 'd', 'c')  #: Labels of the mixed periods
real_mixed_constants = ('w+', 'e+', 'a+')  #: The others are purely imaginary
matching_exponents = (6, 5)  #: Matching points delta = 2^-k for the matrix and its cross-check


@dataclass
class MixedPeriodMatrix:
    """
    Mixed period matrix T with Pi = T (log(delta) nu, 1, delta^2, nu) near the conifold.

    :ivar matrix: Numerical 4 x 4 matrix T.
    :ivar constants: The nine mixed periods keyed by mixed_constant_names.
    :ivar error_estimates: Difference against a second matching point, per constant.
    :ivar determinant_residuals: Relative residuals of the three determinant relations.
    :ivar structure_residual: Largest deviation from the closed-form entries and zero pattern.
    """
    matrix: object
    constants: Dict[str, object]
    error_estimates: Dict[str, object]
    determinant_residuals: Dict[str, object]
    structure_residual: object

    def check(self, ctx: PrecisionContext, margin: int = 8):
        """
        Raises StructureViolationError if the structure, the determinant relations or the reality of the constants
        fail at 10^(-digits + margin).
        """
        tol = ctx.tolerance(margin)
        if self.structure_residual > tol:
            raise StructureViolationError(f'T deviates from its structure by {ctx.nstr(self.structure_residual, 5)}')
        for name, residual in self.determinant_residuals.items():
            if residual > tol:
                raise StructureViolationError(f'determinant relation {name} fails by {ctx.nstr(residual, 5)}')
        for name in mixed_constant_names:
            value = self.constants[name]
            stray = ctx.mp.im(value) if name in real_mixed_constants else ctx.mp.re(value)
            if abs(stray) > tol * abs(value):
                kind = 'real' if name in real_mixed_constants else 'purely imaginary'
                raise StructureViolationError(f'mixed period {name} = {ctx.nstr(value, 10)} is not {kind}')


def _conifold_matrix(ctx: PrecisionContext, exponent: int, zero_basis, coni_basis):
    op = HypergeometricOperator.quintic()
    mp = ctx.mp
    c = ctx.convert(op.singular_scale)
    delta = mp.ldexp(1, -exponent)
    target = (1 - delta) / c

    start = ctx.convert(base_point(op))
    state = global_period_jets(op, start, ctx, basis=zero_basis)
    route = ContinuationPath([start, target], [0, 1 / c], ctx)
    state = state * transfer_matrix(op, route, ctx)

    local = eval_basis(coni_basis, delta, derivatives=3)
    for j in range(4):
        for i in range(4):
            local[i, j] *= (-c) ** j

    return state * mp.inverse(local)


def extract_mixed_constants(matrix) -> Dict[str, object]:
    """
    Reads w, e, a (both parities), b, d and c off the mixed period matrix.
    """
    w_plus, e_plus, a_plus = matrix[1, 1], matrix[1, 2], matrix[1, 3]

    return {'w+': w_plus, 'w-': matrix[2, 1] - w_plus / 2,
            'e+': e_plus, 'e-': matrix[2, 2] - e_plus / 2,
            'a+': a_plus, 'a-': matrix[2, 3] - a_plus / 2,
            'b': matrix[0, 1], 'd': matrix[0, 2], 'c': matrix[0, 3]}


def determinant_residuals(constants: Dict[str, object], ctx: PrecisionContext) -> Dict[str, object]:
    """
    Relative residuals of the three 2 x 2 determinant relations among the mixed periods.
    """
    tpi, s5 = ctx.two_pi_i, ctx.sqrt5
    k = constants
    relations = {
        'we': (k['w+'] * k['e-'] - k['e+'] * k['w-'], -tpi ** 3 * 5 / 2),
        'wa': (k['w+'] * k['a-'] - k['a+'] * k['w-'], -tpi ** 2 * s5 * k['b']),
        'ea': (k['e+'] * k['a-'] - k['a+'] * k['e-'], -tpi ** 3 * 9 / 4 - tpi ** 2 * s5 * k['d']),
    }

    return {name: abs(lhs - rhs) / abs(rhs) for name, (lhs, rhs) in relations.items()}


def mixed_period_matrix(ctx: PrecisionContext, cross_check: bool = True) -> MixedPeriodMatrix:
    """
    Computes T by continuing Pi from 1/5^6 to delta = 2^-6 and matching against the conifold Frobenius basis.

    :param ctx: Precision context.
    :param cross_check: Also match at delta = 2^-5 and use the difference as error estimate.
    :return: Mixed period matrix with its structure and determinant checks.
    """
    op = HypergeometricOperator.quintic()
    zero_basis = frobenius_basis(op, 64, ctx)
    coni_basis = conifold_basis(op, 64, ctx)

    matrix = _conifold_matrix(ctx, matching_exponents[0], zero_basis, coni_basis)
    constants = extract_mixed_constants(matrix)
    if cross_check:
        other = extract_mixed_constants(_conifold_matrix(ctx, matching_exponents[1], zero_basis, coni_basis))
        errors = {name: abs(constants[name] - other[name]) for name in mixed_constant_names}
    else:
        errors = {name: ctx.tolerance(0) * abs(constants[name]) for name in mixed_constant_names}

    tpi, s5 = ctx.two_pi_i, ctx.sqrt5
    deviations = [abs(matrix[0, 0] + tpi * s5), abs(matrix[3, 3] - tpi ** 2 * s5)]
    deviations += [abs(matrix[i, j]) for i, j in ((1, 0), (2, 0), (3, 0), (3, 1), (3, 2))]
    structure = max(deviations) / abs(tpi ** 2 * s5)

    logger.info(f'Mixed period matrix: structure residual {ctx.nstr(structure, 5)}')

    result = MixedPeriodMatrix(matrix=matrix, constants=constants, error_estimates=errors,
                               determinant_residuals=determinant_residuals(constants, ctx),
                               structure_residual=structure)
    result.check(ctx)

    return result


def k3_connection_numerical(ctx: PrecisionContext):
    """
    Continues varrho from 1/2^9 to t = (1 - 2^-6)/2^8 and matches it against the K3 conifold basis, returning M with
    varrho = M (phi_1, phi_2, phi_3).
    """
    op = HypergeometricOperator.k3()
    mp = ctx.mp
    c = ctx.convert(op.singular_scale)
    start = 1 / (2 * c)
    x_match = mp.ldexp(1, -6)
    target = (1 - x_match) / c

    state = global_period_jets(op, start, ctx)
    route = ContinuationPath([start, target], [0, 1 / c], ctx)
    state = state * transfer_matrix(op, route, ctx)

    local = eval_basis(k3_conifold_basis(ctx), x_match, derivatives=2)
    for j in range(3):
        for i in range(3):
            local[i, j] *= (-c) ** j

    return state * mp.inverse(local)
