import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, Optional, Sequence, Tuple

import sympy

from .continuation import TaylorChart, expected_monodromy, global_period_jets, taylor_terms
from .errors import (ClearanceError, ConditionViolatedError, ConfigurationError, InconsistentSystemError,
                     NonConvergenceError, StepCollapseError)
from .hypergeo import HypergeometricOperator, eval_basis, frobenius_basis
from .loops import Cocycle, LoopMonodromyRep, LoopWord, as_word, base_point_condition, reduced_cocycle_tables
from .numerics import (ArcSegment, Contour, IdentityCheck, LineSegment, PathSegment, PrecisionContext, compare,
                       contour_quadrature, flatten)
from .utils import exact_matrix, rational

logger = logging.getLogger(__name__)

conifold_parameter = sympy.Rational(1, 5 ** 5)  #: z at which t- and t+ collide in t = 1/5
sample_parameter = sympy.Rational(1, 5 ** 6)  #: Default z for identities away from the conifold
default_base_point = 64  #: Base point t0 on the real axis
independence_base_points = (4, 6)  #: Pair of base points compared by the t0-independence check
base_point_margin = 1.5  #: t0 must exceed the largest hole modulus by this factor
clearance_fraction = sympy.Rational(1, 10)  #: Minimal contour distance to holes as a fraction of the hole spacing
rectangle_height_fraction = sympy.Rational(1, 2)  #: Height of the loop rectangles relative to Im c+
circle_radius_fraction = sympy.Rational(1, 2)  #: Radius of the circles around c+- relative to their hole distance
piece_fraction = sympy.Rational(1, 2)  #: Pieces stay within this fraction of the t- and x-radii of their chart
frobenius_chart_bound = sympy.Rational(1, 4 * 2 ** 8)  #: Charts at x = 0 are used while |x| stays below this
frobenius_chart_radius = sympy.Rational(1, 2 * 2 ** 8)  #: x-radius within which a chart at x = 0 is evaluated
kernel_pole = sympy.Rational(1, 5)  #: Pole of the derivative kernels
maximum_splits = 40  #: Bisections of a contour segment before giving up
tracking_steps = 64  #: Steps used to follow the holes from real to complex z

#: Mixing of (I, I', I'') that turns the loop integrals at z = 1/5^5 into the scaled periods
scaled_mixing_matrix = exact_matrix([[1, 0, 0],
                                     [0, sympy.Rational(7, 10) / 5 ** 5, sympy.Rational(1, 2) / 5 ** 10],
                                     [0, -sympy.Rational(1, 5 ** 5), 0]])

#: Coefficients of (I(gamma_1), I(gamma_2), I(gamma_4), I(gamma_7)) giving -3 Pi_2 + Pi_3 - Pi_4
regular_period_combination = (((9, -8, 2), 'g1'), ((14, 12, 2), 'g2'), ((5, -8, 2), 'g4'), ((-1, -8, -8), 'g7'))

period_one_word = 'g4^-1 g6^-1 g2^-1'  #: Loop homotopic to the circle |t| = 1/5 at small z
residue_word = 'g7 g5^-1'  #: Loop around t = 1/5 alone at z = 1/5^5

hole_labels = ('t-', 't+', 'outer', 'c+', 'c-')


def _exact_parameter(z) -> Optional[sympy.Rational]:
    if isinstance(z, (int, Fraction, sympy.Rational, str)):
        try:
            return rational(z)
        except (TypeError, ValueError, sympy.SympifyError):
            return None
    return None


class FiberMap:
    """
    The map phi_z(t) = z / (t (1 - t)^4) from the punctured t-line to the K3 parameter.

    :ivar z: Parameter as a context number.
    :ivar exact: Parameter as an exact rational when one was given.
    """

    def __init__(self, z, ctx: PrecisionContext):
        self.ctx = ctx
        self.exact = _exact_parameter(z)
        self.z = ctx.convert(self.exact if self.exact is not None else z)

    def __call__(self, t):
        return self.z / (t * (1 - t) ** 4)

    def log_step(self, t_a, t_b):
        """
        Change of log(phi_z) along a short step from t_a to t_b that keeps t and 1 - t away from zero.
        """
        mp = self.ctx.mp
        return -mp.log(t_b / t_a) - 4 * mp.log((1 - t_b) / (1 - t_a))

    def polynomial(self) -> list:
        """
        Coefficients of t (1 - t)^4 - 2^8 z, highest degree first.
        """
        return [1, -4, 6, -4, 1, -2 ** 8 * self.z]


@dataclass
class FiberHoles:
    """
    The five solutions of phi_z(t) = 1/2^8 with the labels used for the loop basis.

    :ivar t_minus: Smaller root on (0, 1).
    :ivar t_plus: Larger root on (0, 1); equal to t_minus at z = 1/5^5.
    :ivar outer: Real root beyond 1.
    :ivar c_plus: Root in the upper half plane.
    :ivar c_minus: Root in the lower half plane.
    """
    t_minus: object
    t_plus: object
    outer: object
    c_plus: object
    c_minus: object

    @property
    def roots(self) -> list:
        return [self.t_minus, self.t_plus, self.outer, self.c_plus, self.c_minus]

    def labeled(self) -> Dict[str, object]:
        return dict(zip(hole_labels, self.roots))

    def punctures(self, ctx: PrecisionContext) -> list:
        """
        Distinct finite punctures of the t-line: 0, 1 and the roots.
        """
        points = []
        for p in [ctx.mp.zero, ctx.mp.one] + self.roots:
            if all(abs(p - q) > ctx.tolerance(0) for q in points):
                points.append(p)
        return points

    def spacing(self, ctx: PrecisionContext):
        points = self.punctures(ctx)
        return min(abs(a - b) for i, a in enumerate(points) for b in points[i + 1:])


def _raw_roots(fiber: FiberMap, ctx: PrecisionContext) -> list:
    mp = ctx.mp
    try:
        if fiber.exact is not None:
            t = sympy.Symbol('t')
            _, factors = sympy.Poly(t * (1 - t) ** 4 - 2 ** 8 * fiber.exact, t).factor_list()
            roots = []
            for factor, multiplicity in factors:
                coeffs = factor.all_coeffs()
                if factor.degree() == 1:
                    found = [ctx.convert(-coeffs[1] / coeffs[0])]
                else:
                    found = mp.polyroots([ctx.convert(c) for c in coeffs], maxsteps=200, extraprec=ctx.working_bits)
                roots.extend(list(found) * multiplicity)
            return roots
        return list(mp.polyroots(fiber.polynomial(), maxsteps=200, extraprec=ctx.working_bits))
    except mp.NoConvergence as error:
        raise NonConvergenceError(f'roots of t(1-t)^4 = 2^8 z did not converge: {error}')


def _label_real(roots: list, ctx: PrecisionContext) -> FiberHoles:
    mp = ctx.mp
    threshold = mp.sqrt(ctx.tolerance(0))
    real = sorted(mp.re(r) for r in roots if abs(mp.im(r)) <= threshold)
    upper = [r for r in roots if mp.im(r) > threshold]
    lower = [r for r in roots if mp.im(r) < -threshold]
    inner = [r for r in real if 0 < r < 1]
    beyond = [r for r in real if r > 1]
    if len(inner) != 2 or len(beyond) != 1 or len(upper) != 1 or len(lower) != 1:
        raise ClearanceError(f'cannot label the holes {[ctx.nstr(r, 8) for r in roots]}')

    return FiberHoles(t_minus=inner[0], t_plus=inner[1], outer=beyond[0], c_plus=upper[0], c_minus=lower[0])


def _track(previous: list, current: list, ctx: PrecisionContext) -> list:
    matched = []
    for p in previous:
        distances = sorted((abs(p - c), i) for i, c in enumerate(current))
        if len(distances) > 1 and distances[0][0] * 2 > distances[1][0]:
            raise ClearanceError(f'hole tracking is ambiguous near {ctx.nstr(p, 8)}')
        matched.append(current[distances[0][1]])
    if len({id(m) for m in matched}) != len(matched):
        raise ClearanceError('hole tracking maps two holes onto one root')

    return matched


def fiber_singularities(z, ctx: PrecisionContext) -> FiberHoles:
    """
    Roots of t (1 - t)^4 = 2^8 z labeled as in the loop basis. Real z must lie in (0, 1/5^5]; complex z is reached
    from its real part along a straight segment while following the roots.

    :param z: Parameter, exact rational or number.
    :param ctx: Precision context.
    :return: Labeled holes.
    """
    fiber = FiberMap(z, ctx)
    mp = ctx.mp
    if fiber.z == 0:
        raise ConfigurationError('the fiber map degenerates at z = 0')

    real_part = mp.re(fiber.z)
    if not 0 < real_part <= ctx.convert(conifold_parameter):
        raise ConfigurationError(f'z = {ctx.nstr(fiber.z, 10)} lies outside the labeled range (0, 1/5^5]')

    if mp.im(fiber.z) == 0:
        return _label_real(_raw_roots(fiber, ctx), ctx)

    holes = _label_real(_raw_roots(FiberMap(real_part, ctx), ctx), ctx)
    current = holes.roots
    for k in range(1, tracking_steps + 1):
        step = FiberMap(real_part + (fiber.z - real_part) * k / tracking_steps, ctx)
        current = _track(current, _raw_roots(step, ctx), ctx)
    logger.debug(f'Tracked holes to z = {ctx.nstr(fiber.z, 10)}')

    return FiberHoles(*current)


def _rectangle(left, height, t0, ctx: PrecisionContext) -> Contour:
    i = ctx.mp.mpc(0, 1)
    corners = [t0, t0 + i * height, left + i * height, left - i * height, t0 - i * height, t0]
    return Contour([LineSegment(a, b, ctx) for a, b in zip(corners[:-1], corners[1:])])


def _circle_loop(center, holes: FiberHoles, t0, ctx: PrecisionContext) -> Contour:
    mp = ctx.mp
    others = [p for p in holes.punctures(ctx) + [ctx.convert(kernel_pole)] if abs(p - center) > ctx.tolerance(0)]
    radius = ctx.convert(circle_radius_fraction) * min(abs(p - center) for p in others)
    theta = mp.arg(t0 - center)
    entry = center + radius * mp.expj(theta)

    return Contour([LineSegment(t0, entry, ctx), ArcSegment(center, radius, theta, theta + 2 * mp.pi, ctx),
                    LineSegment(entry, t0, ctx)])


def generator_contour(index: int, holes: FiberHoles, t0, ctx: PrecisionContext) -> Contour:
    """
    Contour realizing gamma_index from the base point t0: a clockwise circle |t| = t0 for gamma_1, counterclockwise
    circles around c+ and c- for gamma_2 and gamma_4, and rectangles around the real holes right of a crossing
    point for the others.
    """
    mp = ctx.mp
    t0 = ctx.convert(t0)
    if index == 1:
        return Contour([ArcSegment(0, t0, 0, -2 * mp.pi, ctx)])
    if index == 2:
        return _circle_loop(holes.c_plus, holes, t0, ctx)
    if index == 4:
        return _circle_loop(holes.c_minus, holes, t0, ctx)

    crossings = {3: (1 + holes.outer) / 2, 5: (holes.t_plus + 1) / 2, 6: (holes.t_minus + holes.t_plus) / 2,
                 7: holes.t_minus / 2}
    height = ctx.convert(rectangle_height_fraction) * mp.im(holes.c_plus)

    return _rectangle(mp.re(crossings[index]), height, t0, ctx)


def _check_clearance(contour: Contour, holes: FiberHoles, ctx: PrecisionContext, label: str):
    margin = float(clearance_fraction) * float(holes.spacing(ctx))
    for p in holes.punctures(ctx):
        distance = contour.min_distance(complex(p))
        if distance < margin:
            raise ClearanceError(f'{label} passes within {distance:.3g} of the hole {ctx.nstr(p, 8)} '
                                 f'(required {margin:.3g})')


def loop_contour(word, z, t0, ctx: PrecisionContext, holes: Optional[FiberHoles] = None) -> Contour:
    """
    Polygonal and circular contour realizing a loop word, based at the real point t0.

    :param word: LoopWord, generator index or string like 'g4^-1 g6^-1 g2^-1'.
    :param z: Fiber parameter.
    :param t0: Real base point, at least 1.5 times the largest hole modulus.
    :param ctx: Precision context.
    :param holes: Precomputed holes for z.
    :return: Closed contour starting and ending at t0.
    """
    word = as_word(word)
    holes = holes or fiber_singularities(z, ctx)
    t0 = ctx.convert(t0)
    check_base_point(t0, holes, ctx)

    segments = []
    for index, exponent in word:
        contour = generator_contour(index, holes, t0, ctx)
        _check_clearance(contour, holes, ctx, f'gamma_{index}')
        segments.extend((contour if exponent == 1 else contour.reversed()).segments)

    return Contour(segments)


def check_base_point(t0, holes: FiberHoles, ctx: PrecisionContext):
    mp = ctx.mp
    largest = max(abs(r) for r in holes.roots)
    if mp.im(t0) != 0 or mp.re(t0) < base_point_margin * largest:
        raise ConfigurationError(f'base point {ctx.nstr(t0, 8)} must be real and at least {base_point_margin} '
                                 f'times the largest hole modulus {ctx.nstr(largest, 8)}')


def kernel(order: int, t, z):
    """
    Integration kernel of I^(order): 1/(t (1 - t)), 5/(z (1 - 5t)^2) or 30 t (3 - 5t)/(z^2 (1 - 5t)^4).
    """
    if order == 0:
        return 1 / (t * (1 - t))
    if order == 1:
        return 5 / (z * (1 - 5 * t) ** 2)
    if order == 2:
        return 30 * t * (3 - 5 * t) / (z ** 2 * (1 - 5 * t) ** 4)
    raise ConfigurationError(f'derivative order must be 0, 1 or 2, got {order}')


def tail_kernel(order: int, w, z):
    """
    Kernel of the tail integral -int_0^(1/t0) kappa(w) varrho dw in the chart w = 1/t.
    """
    if order == 0:
        return 1 / (1 - w)
    if order == 1:
        return -5 / (z * (w - 5) ** 2)
    if order == 2:
        return -30 * (3 * w - 5) / (z ** 2 * (w - 5) ** 4)
    raise ConfigurationError(f'derivative order must be 0, 1 or 2, got {order}')


@dataclass
class _Chart:
    t: object
    x: object
    log_x: object
    matrix: object
    taylor: Optional[TaylorChart]


@dataclass
class FiberIntegral:
    """
    Loop integrals of the pulled-back K3 periods.

    :ivar word: The loop.
    :ivar orders: Derivative orders, one column each.
    :ivar values: 3 x len(orders) matrix of I^(k)(word).
    :ivar monodromy: Numerical monodromy of varrho along the loop, None for combined values.
    :ivar error_estimate: Summed quadrature error estimates.
    """
    word: LoopWord
    orders: Tuple[int, ...]
    values: object
    monodromy: object = field(default=None, repr=False)
    error_estimate: object = 0

    def column(self, order: int) -> list:
        k = self.orders.index(order)
        return [self.values[i, k] for i in range(self.values.rows)]


class FiberContinuation:
    """
    Analytic continuation of varrho(phi_z(t)) along contours in the t-plane. Each contour segment is cut into pieces
    on which a single chart in the K3 parameter x suffices: the Frobenius chart at x = 0 with an explicitly
    continued log(x), or a Taylor chart at an ordinary point.

    :ivar fiber: The map phi_z.
    :ivar punctures: Points the pieces keep their distance from.
    :ivar basis: K3 Frobenius basis at x = 0 (normalized to varrho).
    """

    def __init__(self, fiber: FiberMap, punctures: Sequence, ctx: PrecisionContext, basis=None):
        self.ctx = ctx
        self.fiber = fiber
        self.punctures = list(punctures) + [ctx.convert(kernel_pole)]
        self.operator = HypergeometricOperator.k3()
        self.basis = basis or frobenius_basis(self.operator, 64, ctx)
        self.d_form = self.operator.d_form()
        self.conifold = ctx.convert(self.operator.conifold_point)
        self.terms = taylor_terms(piece_fraction, ctx, self.operator.rank)
        self.piece_fraction = ctx.convert(piece_fraction)
        self.frobenius_bound = ctx.convert(frobenius_chart_bound)
        self.frobenius_radius = ctx.convert(frobenius_chart_radius)

    def frobenius_jets(self, x, log_x):
        return eval_basis(self.basis, x, derivatives=2, log_value=log_x)

    def initial_jets(self, t0) -> Tuple[object, object]:
        """
        Jets of varrho at phi_z(t0) on the principal branch of log(x) together with that logarithm.
        """
        x0 = self.fiber(t0)
        log_x = self.ctx.mp.log(x0)
        return self.frobenius_jets(x0, log_x), log_x

    def _x_radius(self, x):
        if abs(x) <= self.frobenius_bound:
            return self.frobenius_radius
        return min(abs(x), abs(x - self.conifold))

    def _admissible(self, piece: PathSegment) -> bool:
        mp = self.ctx.mp
        t_a = piece.start
        x_a = self.fiber(t_a)
        t_limit = self.piece_fraction * min(abs(t_a - p) for p in self.punctures)
        x_limit = self.piece_fraction * self._x_radius(x_a)
        for k in range(9):
            t = piece.point(mp.mpf(k) / 4 - 1)
            if abs(t - t_a) > t_limit or abs(self.fiber(t) - x_a) > x_limit:
                return False
        return True

    def pieces(self, segment: PathSegment, depth: int = 0) -> Iterator[PathSegment]:
        if self._admissible(segment):
            yield segment
            return
        if depth >= maximum_splits:
            raise StepCollapseError(f'{segment} needs more than {maximum_splits} bisections')
        for half in segment.split():
            yield from self.pieces(half, depth + 1)

    def _open(self, t, log_x, jets) -> _Chart:
        mp = self.ctx.mp
        x = self.fiber(t)
        if abs(x) <= self.frobenius_bound:
            return _Chart(t=t, x=x, log_x=log_x, matrix=jets * mp.inverse(self.frobenius_jets(x, log_x)), taylor=None)
        return _Chart(t=t, x=x, log_x=log_x, matrix=jets, taylor=TaylorChart(self.d_form, x, self.terms, self.ctx))

    def _values(self, chart: _Chart, t):
        mp = self.ctx.mp
        x = self.fiber(t)
        if chart.taylor is None:
            log_x = chart.log_x + self.fiber.log_step(chart.t, t)
            local = eval_basis(self.basis, x, log_value=log_x)
        else:
            local = mp.matrix(chart.taylor.evaluate(x))
        return chart.matrix * local

    def _advance(self, chart: _Chart, t) -> Tuple[object, object]:
        x = self.fiber(t)
        log_x = chart.log_x + self.fiber.log_step(chart.t, t)
        if chart.taylor is None:
            return chart.matrix * self.frobenius_jets(x, log_x), log_x
        return chart.matrix * chart.taylor.transfer(x), log_x

    def integrate(self, contour: Contour, orders: Sequence[int], t0) -> Tuple[object, object, object]:
        """
        Integrates kernel_k(t) varrho(phi_z(t)) along a closed contour based at t0.

        :param contour: Contour starting at t0.
        :param orders: Kernel orders.
        :param t0: Base point.
        :return: 3 x len(orders) matrix of integrals, numerical monodromy and summed error estimate.
        """
        mp = self.ctx.mp
        z = self.fiber.z
        orders = list(orders)
        start_jets, log_x = self.initial_jets(t0)
        jets, t = start_jets, self.ctx.convert(t0)

        total = [mp.zero] * (3 * len(orders))
        error = mp.zero
        count = 0
        for segment in contour:
            for piece in self.pieces(segment):
                chart = self._open(t, log_x, jets)

                def integrand(s, chart=chart):
                    values = self._values(chart, s)
                    return [kernel(k, s, z) * values[i] for k in orders for i in range(3)]

                estimate = contour_quadrature(integrand, piece, self.ctx)
                total = [a + b for a, b in zip(total, estimate.value)]
                error += estimate.error_estimate
                jets, log_x = self._advance(chart, piece.end)
                t = piece.end
                count += 1

        logger.debug(f'Integrated along {len(contour)} segments in {count} pieces')

        values = mp.matrix(3, len(orders))
        for j in range(len(orders)):
            for i in range(3):
                values[i, j] = total[3 * j + i]
        monodromy = jets * mp.inverse(start_jets)

        return values, monodromy, error

    def tail(self, t0, orders: Sequence[int]) -> Tuple[object, object]:
        """
        Integral of kernel_k varrho from t0 to infinity along the real axis, in the chart w = 1/t.

        :param t0: Real base point.
        :param orders: Kernel orders.
        :return: 3 x len(orders) matrix and error estimate.
        """
        mp = self.ctx.mp
        z = self.fiber.z
        t0 = self.ctx.convert(t0)
        w0 = 1 / t0
        log_x0 = mp.log(self.fiber(t0))
        cache = {}

        def periods(w):
            if w not in cache:
                if w <= 0:
                    cache[w] = mp.matrix(3, 1)
                else:
                    x = z * w ** 5 / (1 - w) ** 4
                    log_x = log_x0 + 5 * mp.log(w / w0) - 4 * mp.log((1 - w) / (1 - w0))
                    cache[w] = eval_basis(self.basis, x, log_value=log_x)
            return cache[w]

        values = mp.matrix(3, len(orders))
        error = mp.zero
        for j, k in enumerate(orders):
            for i in range(3):
                value, err = mp.quad(lambda w: tail_kernel(k, w, z) * periods(w)[i, 0], [0, w0], error=True)
                values[i, j] = -value
                error += err

        return values, error


class FiberPeriods:
    """
    Loop integrals I_z^(k) for one fiber parameter z and base point t0.

    :ivar fiber: The map phi_z.
    :ivar holes: Labeled holes of the punctured t-line.
    :ivar base_point: Real base point t0.
    :ivar rep: Monodromy representation of the loop group.
    """

    def __init__(self, z, ctx: PrecisionContext, base_point=default_base_point, basis=None):
        self.ctx = ctx
        self.fiber = FiberMap(z, ctx)
        self.holes = fiber_singularities(self.fiber.exact if self.fiber.exact is not None else self.fiber.z, ctx)
        self.base_point = ctx.convert(base_point)
        check_base_point(self.base_point, self.holes, ctx)
        self.rep = LoopMonodromyRep()
        self.continuation = FiberContinuation(self.fiber, self.holes.punctures(ctx), ctx, basis=basis)
        self._generators: Dict[Tuple[int, Tuple[int, ...]], FiberIntegral] = {}
        self._tails: Dict[Tuple[int, ...], Tuple[object, object]] = {}

    def contour(self, word) -> Contour:
        return loop_contour(word, self.fiber.z, self.base_point, self.ctx, holes=self.holes)

    def direct(self, word, orders: Sequence[int] = (0,)) -> FiberIntegral:
        """
        Integrates along the concatenated contour of the word, continuing varrho through all of it.
        """
        word = as_word(word)
        orders = tuple(orders)
        values, monodromy, error = self.continuation.integrate(self.contour(word), orders, self.base_point)
        logger.info(f'I({word}) at z = {self.ctx.nstr(self.fiber.z, 8)}: error estimate {self.ctx.nstr(error, 3)}')

        return FiberIntegral(word=word, orders=orders, values=values, monodromy=monodromy, error_estimate=error)

    def generator(self, index: int, orders: Sequence[int] = (0,)) -> FiberIntegral:
        key = (index, tuple(orders))
        if key not in self._generators:
            self._generators[key] = self.direct(LoopWord.generator(index), orders)
        return self._generators[key]

    def cocycle(self, indices: Sequence[int], orders: Sequence[int] = (0,)) -> Cocycle:
        """
        Numerical cocycle with the generator integrals as values and the exact monodromy representation.
        """
        values = {index: self.generator(index, orders).values for index in indices}
        return Cocycle(values, rep=self.rep, name='I', ctx=self.ctx)

    def integral(self, word, orders: Sequence[int] = (0,)) -> FiberIntegral:
        """
        I^(k) of a word assembled from generator integrals by the cocycle law.
        """
        word = as_word(word)
        indices = sorted(word.generators)
        if not indices:
            return FiberIntegral(word=word, orders=tuple(orders), values=self.ctx.mp.matrix(3, len(orders)))
        cocycle = self.cocycle(indices, orders)
        error = sum(self.generator(i, orders).error_estimate for i in indices)

        return FiberIntegral(word=word, orders=tuple(orders), values=cocycle(word), error_estimate=error)

    def tail(self, orders: Sequence[int] = (0,)) -> Tuple[object, object]:
        key = tuple(orders)
        if key not in self._tails:
            self._tails[key] = self.continuation.tail(self.base_point, orders)
        return self._tails[key]

    def at_infinity(self, word, orders: Sequence[int] = (0,)) -> FiberIntegral:
        """
        Limit of I^(k)(word) for t0 to infinity: I + (M_word - 1) J with J the integral from t0 to infinity.
        """
        word = as_word(word)
        finite = self.integral(word, orders)
        tail, tail_error = self.tail(orders)
        shift = (self.rep.numerical(word, self.ctx) - self.ctx.mp.eye(3)) * tail

        return FiberIntegral(word=word, orders=finite.orders, values=finite.values + shift,
                             error_estimate=finite.error_estimate + tail_error)

    def monodromy_residual(self, index: int):
        """
        Largest entrywise distance between the continued monodromy along gamma_index and the exact representation.
        """
        numerical = self.generator(index).monodromy
        exact = self.rep.numerical(LoopWord.generator(index), self.ctx)
        return max(abs(x) for x in flatten(numerical - exact))


def fiber_integral(word, z, derivative_order: int, ctx: PrecisionContext, base_point=default_base_point) -> list:
    """
    I_z^(k)(word) by direct integration along the contour of the word.

    :param word: Loop word.
    :param z: Fiber parameter.
    :param derivative_order: 0, 1 or 2.
    :param ctx: Precision context.
    :param base_point: Real base point t0.
    :return: Three context numbers.
    """
    return FiberPeriods(z, ctx, base_point=base_point).direct(word, (derivative_order,)).column(derivative_order)


def verify_cocycle(first, second, z, ctx: PrecisionContext, base_point=default_base_point,
                   periods: Optional[FiberPeriods] = None) -> IdentityCheck:
    """
    Compares I(ab), integrated along the concatenated contour, with I(a) + M_a I(b) from separate integrations.
    """
    periods = periods or FiberPeriods(z, ctx, base_point=base_point)
    a, b = as_word(first), as_word(second)
    product = periods.direct(a * b)
    left, right = periods.direct(a), periods.direct(b)
    combined = left.values + periods.rep.numerical(a, ctx) * right.values

    return compare(f'cocycle {a} | {b}', product.column(0), flatten(combined),
                   product.error_estimate + left.error_estimate + right.error_estimate)


def t0_independence_check(terms: Sequence[Tuple[Sequence, object]], z, ctx: PrecisionContext,
                          base_points: Sequence = independence_base_points) -> IdentityCheck:
    """
    Evaluates sum_i v_i . I(gamma_i) at two base points after checking sum_i v_i (M_gamma_i - 1) = 0 exactly.

    :param terms: Pairs (v_i, word_i).
    :param z: Fiber parameter.
    :param ctx: Precision context.
    :param base_points: Two real base points.
    :return: Both values and their difference.
    """
    condition = base_point_condition(terms)
    if any(x != 0 for x in condition):
        raise ConditionViolatedError(f'sum v_i (M_i - 1) = {list(condition)} does not vanish')

    values = []
    error = 0
    for t0 in base_points:
        periods = FiberPeriods(z, ctx, base_point=t0)
        total = ctx.mp.zero
        for vector, word in terms:
            integral = periods.integral(word)
            total += sum(ctx.convert(v) * x for v, x in zip(vector, integral.column(0)))
            error += integral.error_estimate
        values.append(total)

    return compare('base point independence', values[0], values[1], error)


def combination(periods: FiberPeriods, terms: Sequence[Tuple[Sequence, object]], order: int = 0):
    total = periods.ctx.mp.zero
    error = 0
    for vector, word in terms:
        integral = periods.integral(word, (order,))
        total += sum(periods.ctx.convert(v) * x for v, x in zip(vector, integral.column(order)))
        error += integral.error_estimate
    return total, error


def regular_period_identity(ctx: PrecisionContext, z=sample_parameter,
                            periods: Optional[FiberPeriods] = None) -> IdentityCheck:
    """
    Checks that the fixed combination of I(gamma_1), I(gamma_2), I(gamma_4), I(gamma_7) equals -3 Pi_2 + Pi_3 - Pi_4.
    """
    periods = periods or FiberPeriods(z, ctx)
    value, error = combination(periods, regular_period_combination)
    jets = global_period_jets(HypergeometricOperator.quintic(), periods.fiber.z, ctx)
    expected = -3 * jets[1, 0] + jets[2, 0] - jets[3, 0]

    return compare('-3 Pi_2 + Pi_3 - Pi_4', value, expected, error)


def period_one_identity(ctx: PrecisionContext, z=sample_parameter,
                        periods: Optional[FiberPeriods] = None) -> IdentityCheck:
    """
    Checks Pi_1(z) = (1, 0, 0) . I(gamma_4^-1 gamma_6^-1 gamma_2^-1).
    """
    periods = periods or FiberPeriods(z, ctx)
    value, error = combination(periods, [((1, 0, 0), period_one_word)])
    jets = global_period_jets(HypergeometricOperator.quintic(), periods.fiber.z, ctx)

    return compare('Pi_1', value, jets[0, 0], error)


def residue_lattice(ctx: PrecisionContext):
    """
    Generator (1/2)(2 pi i)^2 sqrt(5) of the lattice the scaled periods are defined modulo.
    """
    return ctx.mp.re(ctx.two_pi_i ** 2) * ctx.sqrt5 / 2


def residue_identity(ctx: PrecisionContext, periods: Optional[FiberPeriods] = None,
                     base_point=independence_base_points[0]) -> IdentityCheck:
    """
    Checks -(1/5^5) I'(gamma_7 gamma_5^-1) = (2 pi i)^2 sqrt(5) (-3, 2, -3/2) at z = 1/5^5.
    """
    periods = periods or FiberPeriods(conifold_parameter, ctx, base_point=base_point)
    integral = periods.integral(residue_word, (1,))
    lhs = [-x / 5 ** 5 for x in integral.column(1)]
    scale = ctx.two_pi_i ** 2 * ctx.sqrt5
    rhs = [-3 * scale, 2 * scale, -scale * 3 / 2]

    return compare('residue at t = 1/5', lhs, rhs, integral.error_estimate)


def reduce_modulo(value, lattice):
    """
    Representative of a real value modulo a real lattice generator, nearest to zero.
    """
    return value - lattice * round(float(value / lattice))


@dataclass
class ScaledPeriods:
    """
    Scaled periods read off the loop integrals at z = 1/5^5 with t0 at infinity.

    :ivar omega: (omega+, omega-, omega_b).
    :ivar eta: (eta+, eta-, eta_b).
    :ivar alpha: (alpha+, alpha-, alpha_b), alpha+ and alpha_b reduced modulo the lattice.
    :ivar residuals: Relative residual of the linear solve per row.
    :ivar deviations: Distance of each scaled period from its prediction by the mixed periods (modulo the lattice
        for alpha+ and alpha_b).
    :ivar lattice: The generator (1/2)(2 pi i)^2 sqrt(5).
    :ivar error_estimate: Summed integration error estimates.
    """
    omega: Tuple
    eta: Tuple
    alpha: Tuple
    residuals: Dict[str, object]
    deviations: Dict[str, object]
    lattice: object
    error_estimate: object

    def as_dict(self) -> Dict[str, object]:
        names = ('+', '-', 'b')
        result = {}
        for row, values in (('omega', self.omega), ('eta', self.eta), ('alpha', self.alpha)):
            for name, value in zip(names, values):
                result[f'{row}{name}'] = value
        return result


def _solve_row(lhs: Dict[int, list], ctx: PrecisionContext):
    mp = ctx.mp
    rows, rhs = [], []
    for index, values in lhs.items():
        for k in range(3):
            rows.append([reduced_cocycle_tables[name][index][k] for name in ('+', '-', 'b')])
            rhs.append(values[k])
    system = mp.matrix(rows)
    normal = system.T * system
    solution = mp.lu_solve(normal, system.T * mp.matrix(rhs))
    fitted = system * solution
    scale = max(abs(x) for x in rhs)
    residual = max(abs(fitted[i] - rhs[i]) for i in range(len(rhs))) / scale

    return [solution[i] for i in range(3)], residual


def _solve_lattice_row(lhs: Dict[int, list], lattice, ctx: PrecisionContext):
    mp = ctx.mp
    minus = [reduced_cocycle_tables['-'][index][k] for index in lhs for k in range(3)]
    imaginary = [mp.im(lhs[index][k]) for index in lhs for k in range(3)]
    alpha_minus = mp.mpc(0, sum(a * b for a, b in zip(minus, imaginary)) / sum(a * a for a in minus))

    # gamma_2 rows give alpha+ + alpha_b, the last gamma_3 row gives 2 alpha+ + alpha_b, both modulo the lattice
    real = {index: [mp.re(v) for v in values] for index, values in lhs.items()}
    sum_plus_b = real[2][0] - real[2][2]
    twice_plus_b = -real[3][2]
    alpha_plus = reduce_modulo(twice_plus_b - sum_plus_b, lattice)
    alpha_b = reduce_modulo(2 * sum_plus_b - twice_plus_b, lattice)

    worst = mp.zero
    scale = max(abs(v) for values in lhs.values() for v in values)
    for index, values in lhs.items():
        for k in range(3):
            model = sum(x * reduced_cocycle_tables[name][index][k]
                        for x, name in zip((alpha_plus, alpha_minus, alpha_b), ('+', '-', 'b')))
            difference = values[k] - model
            worst = max(worst, abs(mp.mpc(reduce_modulo(mp.re(difference), lattice), mp.im(difference))))

    return [alpha_plus, alpha_minus, alpha_b], worst / scale


def scaled_period_extraction(ctx: PrecisionContext, mixed_constants: Optional[Dict[str, object]] = None,
                             base_point=independence_base_points[0],
                             periods: Optional[FiberPeriods] = None) -> ScaledPeriods:
    """
    Solves the scaled period identity at z = 1/5^5 for (omega, eta, alpha)+-,b from the loop integrals of
    gamma_2, gamma_3 and gamma_4 with t0 at infinity, and compares with the mixed periods.

    :param ctx: Precision context.
    :param mixed_constants: Mixed periods keyed like continuation.mixed_constant_names; predictions are skipped
        without them.
    :param base_point: Finite base point before the tail correction.
    :param periods: Precomputed loop integrals at z = 1/5^5.
    :return: Scaled periods with residuals and deviations.
    """
    mp = ctx.mp
    periods = periods or FiberPeriods(conifold_parameter, ctx, base_point=base_point)
    mixing = mp.matrix([[ctx.convert(x) for x in scaled_mixing_matrix.row(i)] for i in range(3)])

    rows = {0: {}, 1: {}, 2: {}}
    error = mp.zero
    for index in (2, 3, 4):
        integral = periods.at_infinity(LoopWord.generator(index), (0, 1, 2))
        scaled = mixing * integral.values.T
        error += integral.error_estimate
        for r in range(3):
            rows[r][index] = [scaled[r, k] for k in range(3)]

    lattice = residue_lattice(ctx)
    omega, omega_residual = _solve_row(rows[0], ctx)
    eta, eta_residual = _solve_row(rows[1], ctx)
    alpha, alpha_residual = _solve_lattice_row(rows[2], lattice, ctx)
    residuals = {'omega': omega_residual, 'eta': eta_residual, 'alpha': alpha_residual}

    deviations = {'omega_b': abs(omega[2]), 'eta_b': abs(eta[2]),
                  'alpha_b': abs(reduce_modulo(mp.re(alpha[2]) - lattice / 5, lattice))}
    if mixed_constants is not None:
        k = mixed_constants
        deviations.update({
            'omega+': abs(omega[0] + k['w+'] / 4), 'omega-': abs(omega[1] + k['w-'] / 10),
            'eta+': abs(eta[0] + k['e+'] / 4), 'eta-': abs(eta[1] + k['e-'] / 10),
            'alpha+': abs(reduce_modulo(mp.re(alpha[0] + k['a+'] / 4), lattice)),
            'alpha-': abs(alpha[1] + k['a-'] / 10),
        })

    if max(residuals.values()) > ctx.tolerance(ctx.target_digits // 2):
        raise InconsistentSystemError(f'scaled period identity does not close: residuals {residuals}')
    logger.info(f'Scaled periods: residuals {[ctx.nstr(r, 3) for r in residuals.values()]}')

    return ScaledPeriods(omega=tuple(omega), eta=tuple(eta), alpha=tuple(alpha), residuals=residuals,
                         deviations=deviations, lattice=lattice, error_estimate=error)


def deformation_consistency(m_zero: Optional[sympy.Matrix] = None,
                            m_conifold: Optional[sympy.Matrix] = None) -> bool:
    """
    Exact check that the first row of 4 + M_conifold M_0 is (0, -3, 1, -1), i.e. that moving z around 0 and then the
    conifold turns Pi_1 into the combination -3 Pi_2 + Pi_3 - Pi_4 (up to the 4 Pi_1 already present).
    """
    m_zero = expected_monodromy['0'] if m_zero is None else m_zero
    m_conifold = expected_monodromy['conifold'] if m_conifold is None else m_conifold
    row = (4 * sympy.eye(4) + m_conifold * m_zero).row(0)

    return list(row) == [0, -3, 1, -1]
