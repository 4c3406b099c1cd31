import logging
from math import comb, factorial
from typing import Dict, List, Sequence, Tuple

import sympy

from .errors import ConfigurationError, InconsistentSystemError, NonConvergenceError, OutOfDiskError
from .numerics import PrecisionContext
from .utils import rational, stirling_second

logger = logging.getLogger(__name__)

_x = sympy.Symbol('x')
_z = sympy.Symbol('z')
_u = sympy.Symbol('u')
_X = sympy.Symbol('X')

trusted_radius_fraction = sympy.Rational(4, 5)  #: Local series are only summed inside this fraction of the radius
maximum_terms = 2 ** 16  #: Hard cap on the number of series terms summed
k3_conifold_linear_coefficient = sympy.Rational(3, 16)  #: Coefficient of x in the regular conifold solution


class HypergeometricOperator:
    """
    Picard-Fuchs operator Theta^r - C z prod(Theta + a_i) with Theta = z d/dz.

    :ivar name: Short label used in logs and cache keys.
    :ivar numerator_indices: Exact rationals a_1 .. a_r.
    :ivar rank: Order r of the operator.
    :ivar singular_scale: Exact rational C; the finite non-zero singular point is 1/C.
    """

    def __init__(self, name: str, numerator_indices: Sequence, singular_scale):
        self.name = name
        self.numerator_indices = tuple(rational(a) for a in numerator_indices)
        self.rank = len(self.numerator_indices)
        self.singular_scale = rational(singular_scale)

        if self.rank not in (3, 4):
            raise ConfigurationError(f'operator rank must be 3 or 4, got {self.rank}')
        if any(not 0 < a < 1 for a in self.numerator_indices):
            raise ConfigurationError('numerator indices must lie in (0, 1)')

    @classmethod
    def quintic(cls) -> 'HypergeometricOperator':
        return cls('quintic', ['1/5', '2/5', '3/5', '4/5'], 5 ** 5)

    @classmethod
    def k3(cls) -> 'HypergeometricOperator':
        return cls('k3', ['1/2', '1/4', '3/4'], 2 ** 8)

    def __repr__(self):
        return f'HypergeometricOperator({self.name}, indices={self.numerator_indices}, C={self.singular_scale})'

    @property
    def conifold_point(self) -> sympy.Rational:
        return 1 / self.singular_scale

    def elementary(self) -> List[sympy.Rational]:
        """
        Coefficients e_0 .. e_r of prod(X + a_i), lowest degree first.
        """
        poly = sympy.Poly(sympy.prod([_X + a for a in self.numerator_indices]), _X)

        return [poly.coeff_monomial(_X ** m) for m in range(self.rank + 1)]

    def d_form(self) -> List[sympy.Poly]:
        """
        Polynomials p_0 .. p_r in z with the operator equal to sum_j p_j(z) (d/dz)^j.
        """
        r, c = self.rank, self.singular_scale
        e = self.elementary()
        polys = []
        for j in range(r + 1):
            tail = sum(e[m] * stirling_second(m, j) for m in range(j, r + 1))
            polys.append(sympy.Poly(stirling_second(r, j) * _z ** j - c * tail * _z ** (j + 1), _z))

        return polys

    def local_operator(self, point: str) -> 'LocalOperator':
        """
        Theta-form of the operator in the local variable at 'zero' (u = z) or 'conifold' (u = 1 - C z).

        :param point: Expansion point label.
        :return: Local operator sum_m u^m Q_m(Theta_u).
        """
        r, c = self.rank, self.singular_scale
        if point == 'zero':
            q0 = sympy.Poly(_x ** r, _x)
            q1 = sympy.Poly(-c * sympy.prod([_x + a for a in self.numerator_indices]), _x)
            return LocalOperator([q0, q1], radius=1 / c, label=f'{self.name}@0')

        if point == 'conifold':
            shifted = []
            for j, p in enumerate(self.d_form()):
                expr = sympy.expand(p.as_expr().subs(_z, (1 - _u) / c) * (-c) ** j)
                if j < r:
                    shifted.append(sympy.Poly(expr * _u ** (r - 1 - j), _u))
                else:
                    shifted.append(sympy.Poly(sympy.cancel(expr / _u), _u))

            degree = max(p.degree() for p in shifted)
            theta_polys = []
            for m in range(degree + 1):
                q = sum(p.coeff_monomial(_u ** m) * sympy.expand(sympy.ff(_x, j)) for j, p in enumerate(shifted))
                theta_polys.append(sympy.Poly(q, _x))
            return LocalOperator(theta_polys, radius=sympy.Integer(1), label=f'{self.name}@conifold')

        raise ConfigurationError(f'unknown expansion point {point}')


class LocalOperator:
    """
    Operator sum_m u^m Q_m(Theta_u) around a regular singular point u = 0.

    :ivar theta_polys: Exact polynomials Q_0, Q_1, ... in Theta.
    :ivar radius: Distance from u = 0 to the nearest other singular point.
    :ivar label: Name used in logs.
    """

    def __init__(self, theta_polys: Sequence[sympy.Poly], radius, label: str = ''):
        self.theta_polys = list(theta_polys)
        self.radius = rational(radius)
        self.label = label

    @property
    def degree(self) -> int:
        return len(self.theta_polys) - 1

    def exponent_classes(self) -> List[Tuple[sympy.Rational, int, int]]:
        """
        Groups the local exponents (roots of Q_0) by their class modulo 1.

        :return: List of (smallest exponent, integer span K, total multiplicity m) per class.
        """
        roots = sympy.roots(self.theta_polys[0], _x)
        if sum(roots.values()) != self.theta_polys[0].degree():
            raise ConfigurationError(f'indicial polynomial of {self.label} does not split over Q')

        classes: Dict[sympy.Rational, List[Tuple[sympy.Rational, int]]] = {}
        for root, mult in roots.items():
            root = sympy.Rational(root)
            classes.setdefault(root - sympy.floor(root), []).append((root, mult))

        result = []
        for members in classes.values():
            low = min(r for r, _ in members)
            high = max(r for r, _ in members)
            result.append((low, int(high - low), sum(m for _, m in members)))

        return sorted(result)

    def shift_matrix(self, j: int, s, m: int) -> sympy.Matrix:
        """
        Exact m x m matrix of Q_j(s + N) acting on log-graded coefficient vectors, N the down-shift.
        """
        poly = self.theta_polys[j]
        result = sympy.zeros(m, m)
        derivative = poly
        for i in range(m):
            value = derivative.eval(s) / factorial(i)
            for k in range(m - i):
                result[k, k + i] += value
            derivative = derivative.diff(_x)

        return result

    def resonant_solutions(self, sigma, span: int, depth: int) -> List[List[List[sympy.Rational]]]:
        """
        Exact leading coefficient blocks Y_0 .. Y_K of all solutions in one exponent class.

        :param sigma: Smallest exponent of the class.
        :param span: K, largest minus smallest exponent.
        :param depth: Length m of the log-graded coefficient vectors.
        :return: Basis of solutions, each a list of K+1 vectors of length m.
        """
        size = depth * (span + 1)
        system = sympy.zeros(size, size)
        for n in range(span + 1):
            for j in range(min(n, self.degree) + 1):
                block = self.shift_matrix(j, n - j + sigma, depth)
                system[n * depth:(n + 1) * depth, (n - j) * depth:(n - j + 1) * depth] = block

        null = system.nullspace()
        if len(null) != depth:
            raise InconsistentSystemError(f'{self.label}: class {sigma} has {len(null)} solutions, expected {depth}')

        return [[list(v[n * depth:(n + 1) * depth]) for n in range(span + 1)] for v in null]


def _normalized_solutions(solutions, features: Sequence[Tuple[int, int]], targets: Sequence[Sequence]):
    matrix = sympy.Matrix([[sol[n][k] for n, k in features] for sol in solutions])
    if matrix.det() == 0:
        raise InconsistentSystemError('normalization features do not determine the solutions')

    result = []
    for target in targets:
        coeffs = matrix.T.solve(sympy.Matrix([rational(t) for t in target]))
        blocks = []
        for n in range(len(solutions[0])):
            blocks.append([sum(coeffs[i] * solutions[i][n][k] for i in range(len(solutions)))
                           for k in range(len(solutions[0][0]))])
        result.append(blocks)

    return result


class _NumericRecursion:
    """
    Numerical continuation of the log-graded recursion of one exponent class beyond its resonant block.
    """

    def __init__(self, operator: LocalOperator, sigma, depth: int, ctx: PrecisionContext):
        self.ctx = ctx
        self.sigma = ctx.convert(sigma)
        self.depth = depth
        self.coefficients = [[ctx.convert(c) for c in p.all_coeffs()[::-1]] for p in operator.theta_polys]

    def _taylor(self, j: int, s) -> list:
        coeffs = self.coefficients[j]
        out = []
        for i in range(self.depth):
            out.append(sum((comb(p, i) * coeffs[p] * s ** (p - i) for p in range(i, len(coeffs))), self.ctx.mp.zero))

        return out

    def _apply(self, taylor: list, vector: list) -> list:
        m = self.depth
        return [sum((taylor[i] * vector[k + i] for i in range(m - k)), self.ctx.mp.zero) for k in range(m)]

    def extend(self, series: list, count: int):
        m = self.depth
        while len(series) < count:
            n = len(series)
            rhs = [self.ctx.mp.zero] * m
            for j in range(1, min(n, len(self.coefficients) - 1) + 1):
                contribution = self._apply(self._taylor(j, n - j + self.sigma), series[n - j])
                rhs = [a - b for a, b in zip(rhs, contribution)]
            lead = self._taylor(0, n + self.sigma)
            y = [self.ctx.mp.zero] * m
            for k in reversed(range(m)):
                acc = rhs[k] - sum((lead[i] * y[k + i] for i in range(1, m - k)), self.ctx.mp.zero)
                y[k] = acc / lead[0]
            series.append(y)


class FrobeniusBasis:
    """
    Log-graded local solution basis of a hypergeometric operator. Element k is
    sum_n u^(n + sigma_k) sum_l log(u)^l / l! Y_n[l]; the basis returned by eval_basis is normalization_matrix
    applied to these raw elements.

    :ivar expansion_point: 'zero', 'conifold' or 'k3-conifold'.
    :ivar operator: HypergeometricOperator the basis solves.
    :ivar local: LocalOperator in the local variable.
    :ivar truncation_order: Number of coefficients currently computed.
    :ivar log_structure: Per element, the exponent and length of its log-graded coefficient vectors.
    :ivar normalization_matrix: Constant r x r matrix applied on the left.
    :ivar ctx: Precision context.
    """

    def __init__(self, expansion_point: str, operator: HypergeometricOperator, local: LocalOperator,
                 elements: List[Tuple[sympy.Rational, List[List[sympy.Rational]]]], normalization_matrix,
                 ctx: PrecisionContext):
        self.expansion_point = expansion_point
        self.operator = operator
        self.local = local
        self.normalization_matrix = normalization_matrix
        self.ctx = ctx

        self._recursions = {}
        self._series = []
        self.log_structure = []
        for sigma, blocks in elements:
            depth = len(blocks[0])
            key = (sigma, depth)
            if key not in self._recursions:
                self._recursions[key] = _NumericRecursion(local, sigma, depth, ctx)
            self._series.append([[ctx.convert(c) for c in y] for y in blocks])
            self.log_structure.append(key)

    @property
    def rank(self) -> int:
        return len(self._series)

    @property
    def radius(self):
        return self.ctx.convert(self.local.radius)

    @property
    def truncation_order(self) -> int:
        return min(len(s) for s in self._series)

    def ensure(self, count: int):
        """
        Extends every element to at least count coefficients.
        """
        if count > maximum_terms:
            raise NonConvergenceError(f'{self.local.label}: more than {maximum_terms} series terms requested')
        for key, series in zip(self.log_structure, self._series):
            self._recursions[key].extend(series, count)

    def coefficients(self, index: int) -> List[list]:
        """
        Log-graded coefficient vectors Y_0, Y_1, ... of raw element index.
        """
        return self._series[index]

    @property
    def series(self) -> List[list]:
        """
        Power series f_1 .. f_r read off the top raw element at z = 0.
        """
        top = self._series[-1]
        r = self.rank

        return [[y[r - 1 - j] for y in top] for j in range(r)]

    def element_value(self, index: int, u, log_value, derivatives: int = 0) -> list:
        """
        Normalized derivatives D^j f / j! of a raw element, j = 0 .. derivatives.
        """
        mp = self.ctx.mp
        sigma_exact, depth = self.log_structure[index]
        sigma = self.ctx.convert(sigma_exact)
        series = self._series[index]

        log_powers = [log_value ** k / factorial(k) for k in range(depth)]
        acc = [mp.zero] * (derivatives + 1)
        u_power = mp.one
        quiet = 0
        tol = self.ctx.epsilon
        n = 0
        while True:
            if n >= len(series):
                self.ensure(max(64, 2 * len(series)))
            vector = series[n]
            largest = mp.zero
            for j in range(derivatives + 1):
                term = u_power * sum((lp * v for lp, v in zip(log_powers, vector)), mp.zero)
                acc[j] += term
                largest = max(largest, abs(term))
                shift = n + sigma - j
                vector = [shift * vector[k] + (vector[k + 1] if k + 1 < depth else 0) for k in range(depth)]
            scale = max(abs(a) for a in acc)
            quiet = quiet + 1 if largest <= tol * scale else 0
            if quiet >= 8 and n > 8:
                break
            u_power *= u
            n += 1

        base = mp.exp(sigma * log_value)

        return [acc[j] * base / (u ** j * factorial(j)) for j in range(derivatives + 1)]


def eval_basis(basis: FrobeniusBasis, u, derivatives: int = 0, log_value=None):
    """
    Evaluates the normalized basis and its normalized derivatives at a point of the local variable.

    :param basis: Local basis.
    :param u: Point in the local variable, inside 0.8 of the radius of convergence.
    :param derivatives: Highest derivative order.
    :param log_value: Branch of log(u); the principal value when omitted.
    :return: Matrix with one row per basis element and columns D^j / j!.
    """
    ctx = basis.ctx
    mp = ctx.mp
    u = ctx.convert(u)
    if abs(u) > ctx.convert(trusted_radius_fraction) * basis.radius:
        raise OutOfDiskError(f'{basis.local.label}: |u| = {ctx.nstr(abs(u), 8)} exceeds '
                             f'{trusted_radius_fraction} of the radius {ctx.nstr(basis.radius, 8)}')
    if u == 0:
        raise OutOfDiskError(f'{basis.local.label}: evaluation at the singular point itself')

    log_value = mp.log(u) if log_value is None else ctx.convert(log_value)
    raw = mp.matrix(basis.rank, derivatives + 1)
    for i in range(basis.rank):
        values = basis.element_value(i, u, log_value, derivatives)
        for j, v in enumerate(values):
            raw[i, j] = v

    return basis.normalization_matrix * raw


def frobenius_basis(op: HypergeometricOperator, order: int, ctx: PrecisionContext) -> FrobeniusBasis:
    """
    Log-graded basis at z = 0: varpi for the quintic, varrho = diag((2 pi i)^2, 2 pi i, 2) varpi for the K3 family.

    :param op: Hypergeometric operator.
    :param order: Initial number of coefficients, at least 8.
    :param ctx: Precision context.
    :return: Frobenius basis at zero.
    """
    if order < 8:
        raise ConfigurationError(f'truncation order must be at least 8, got {order}')

    local = op.local_operator('zero')
    r = op.rank
    elements = []
    for k in range(r):
        y0 = [sympy.Integer(1) if i == k else sympy.Integer(0) for i in range(r)]
        elements.append((sympy.Integer(0), [y0]))

    mp = ctx.mp
    if r == 3:
        normalization = mp.diag([ctx.two_pi_i ** 2, ctx.two_pi_i, 2])
    else:
        normalization = mp.eye(r)

    basis = FrobeniusBasis('zero', op, local, elements, normalization, ctx)
    basis.ensure(order)
    logger.debug(f'Built {op.name} Frobenius basis at 0 with {order} terms')

    return basis


def conifold_basis(op: HypergeometricOperator, order: int, ctx: PrecisionContext) -> FrobeniusBasis:
    """
    Quintic solutions at delta = 1 - 5^5 z in the order (log(delta) nu + O(delta^3), 1 + O(delta^3),
    delta^2 + O(delta^3), nu) with nu = delta + O(delta^2) the vanishing period.

    :param op: The quintic operator.
    :param order: Initial number of coefficients, at least 8.
    :param ctx: Precision context.
    :return: Frobenius basis at the conifold.
    """
    if op.rank != 4:
        raise ConfigurationError('the conifold basis is defined for the quintic operator')
    if order < 8:
        raise ConfigurationError(f'truncation order must be at least 8, got {order}')

    local = op.local_operator('conifold')
    classes = local.exponent_classes()
    if len(classes) != 1 or classes[0][1:] != (2, 4):
        raise InconsistentSystemError(f'unexpected conifold exponents {classes}')
    sigma, span, depth = classes[0]

    solutions = local.resonant_solutions(sigma, span, depth)
    features = [(1, 1), (0, 0), (1, 0), (2, 0)]
    log_element, one, square = _normalized_solutions(solutions, features,
                                                     [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1)])
    nu = [y[1:] + [sympy.Integer(0)] for y in log_element]
    elements = [(sigma, log_element), (sigma, one), (sigma, square), (sigma, nu)]

    basis = FrobeniusBasis('conifold', op, local, elements, ctx.mp.eye(4), ctx)
    basis.ensure(order)

    return basis


def k3_conifold_basis(ctx: PrecisionContext, order: int = 64) -> FrobeniusBasis:
    """
    K3 solutions at x = 1 - 2^8 t: (1 + 3x/16 + O(x^2), sqrt(x)(1 + O(x)), x + O(x^2)).
    """
    op = HypergeometricOperator.k3()
    local = op.local_operator('conifold')
    elements = [None, None, None]
    for sigma, span, depth in local.exponent_classes():
        solutions = local.resonant_solutions(sigma, span, depth)
        if sigma == 0:
            regular, linear = _normalized_solutions(solutions, [(0, 0), (1, 0)],
                                                    [(1, k3_conifold_linear_coefficient), (0, 1)])
            elements[0] = (sigma, regular)
            elements[2] = (sigma, linear)
        else:
            lead = solutions[0][0][0]
            elements[1] = (sigma, [[c / lead for c in y] for y in solutions[0]])
    if any(e is None for e in elements):
        raise InconsistentSystemError(f'unexpected K3 conifold exponents {local.exponent_classes()}')

    basis = FrobeniusBasis('k3-conifold', op, local, elements, ctx.mp.eye(3), ctx)
    basis.ensure(order)

    return basis


def k3_conifold_connection(ctx: PrecisionContext):
    """
    Closed-form matrix M with varrho = M (phi_1, phi_2, phi_3) near t = 1/2^8, for t < 1/2^8 and sqrt(x) > 0.
    """
    mp = ctx.mp
    g = mp.gamma(mp.mpf(1) / 8) ** 2 * mp.gamma(mp.mpf(3) / 8) ** 2
    h = mp.gamma(mp.mpf(5) / 8) ** 2 * mp.gamma(mp.mpf(7) / 8) ** 2
    pi, s2, i = ctx.pi, ctx.sqrt2, mp.mpc(0, 1)

    return mp.matrix([[-g / (2 * pi), 4 * s2 * pi, -2 * h / pi],
                      [-s2 * i * g / (4 * pi), 0, s2 * i * h / pi],
                      [g / (4 * pi), 2 * s2 * pi, h / pi]])


def annihilation_residual(basis: FrobeniusBasis, index: int, u) -> object:
    """
    Relative residual of the operator applied to one normalized basis element at a local point.

    :param basis: Local basis.
    :param index: Element index.
    :param u: Point in the local variable.
    :return: |L f| divided by the sum of the magnitudes of its terms.
    """
    ctx = basis.ctx
    op = basis.operator
    r = op.rank
    jets = eval_basis(basis, u, derivatives=r)
    u = ctx.convert(u)
    c = ctx.convert(op.singular_scale)
    if basis.expansion_point == 'zero':
        z, chain = u, 1
    else:
        z, chain = (1 - u) / c, -c

    total, size = ctx.mp.zero, ctx.mp.zero
    for j, p in enumerate(op.d_form()):
        coefficient = sum((ctx.convert(a) * z ** k for k, a in enumerate(p.all_coeffs()[::-1])), ctx.mp.zero)
        term = coefficient * factorial(j) * jets[index, j] * chain ** j
        total += term
        size += abs(term)

    return abs(total) / size
