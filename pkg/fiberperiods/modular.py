import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from .errors import (ConfigurationError, InconsistentSystemError, NonConvergenceError, NonIntegralCocycleError,
                     PoleError)
from .hypergeo import HypergeometricOperator, eval_basis, frobenius_basis
from .numerics import (ArcSegment, Contour, Estimate, IdentityCheck, LineSegment, PrecisionContext, compare,
                       contour_quadrature, limit_extrapolate)
from .qseries import QExpansion, eisenstein_e2, eta_quotient
from .utils import integer_rounding_margin

logger = logging.getLogger(__name__)

switchover_height = 2  #: Integrals towards the cusp use q-antiderivatives above this imaginary part
pole_clearance = sympy.Rational(1, 1000)  #: Minimal |q|-distance between an integration path and a pole
pole_search_samples = 48  #: Samples per segment when searching for poles
maximum_reductions = 256  #: Bound on the number of inversions when reducing into the fundamental domain
level_two_shift = 104  #: t_2 = 1 / (h_2 + 104)
fricke_constant = 4096  #: h_2 = u + 4096/u + 24 with u = (eta(tau)/eta(2 tau))^24
fiber_parameter = sympy.Rational(1, 5 ** 5)  #: Quintic parameter of the fiber map pulled back to the upper half-plane
quartic_constant = sympy.Rational(257, 480)  #: Constant in the counterterm of the F_50 integral
lattice_divisors = (1, 2, 25, 50)  #: Exact divisors e of 50 with gcd(e, 50/e) = 1
theorem_forms = ('f50', 'F50', 'g50')  #: Columns of the cusp integral matrix
meromorphic_forms = ('g50', 'F50')
level_fifty_forms = ('h50', 't50', 'theta_t50', 'f50', 'g50', 'F50')
level_two_forms = ('h2', 't2', 'E')


@dataclass(frozen=True)
class UHPPoint:
    """
    Point of the upper half-plane x + i sqrt(y) with exact x and y, or a cusp.

    :ivar real: Real part, or the rational cusp; None for the cusp at infinity.
    :ivar imag_square: Square of the imaginary part; None for cusps.
    """
    real: Optional[sympy.Rational] = None
    imag_square: Optional[sympy.Rational] = None

    def __post_init__(self):
        if self.imag_square is not None and (self.real is None or self.imag_square <= 0):
            raise ConfigurationError(f'{self} is not a point of the upper half-plane')

    @property
    def is_cusp(self) -> bool:
        return self.imag_square is None

    @property
    def is_infinity(self) -> bool:
        return self.real is None and self.imag_square is None

    def value(self, ctx: PrecisionContext):
        if self.is_cusp:
            raise ConfigurationError(f'{self} is a cusp and has no value in the upper half-plane')
        return ctx.mp.mpc(ctx.convert(self.real), ctx.mp.sqrt(ctx.convert(self.imag_square)))


cusp_infinity = UHPPoint()
#: CM points -2/5 + i sqrt(2)/10 and 2/5 + i sqrt(2)/10 where t_50 = 1/5
tau_minus = UHPPoint(sympy.Rational(-2, 5), sympy.Rational(1, 50))
tau_plus = UHPPoint(sympy.Rational(2, 5), sympy.Rational(1, 50))


def _as_tau(tau, ctx: PrecisionContext):
    if isinstance(tau, UHPPoint):
        return tau.value(ctx)
    tau = ctx.convert(tau)
    if ctx.mp.im(tau) <= 0:
        raise ConfigurationError(f'tau = {ctx.nstr(tau, 10)} is not in the upper half-plane')
    return tau


def _reduce(tau, ctx: PrecisionContext):
    """
    Moves tau into the standard fundamental domain of SL2(Z).

    :return: Reduced point r, the factor m with eta(tau) = m eta(r), and (s, c) with E2(tau) = s E2(r) + c.
    """
    mp = ctx.mp
    factor, scale, shift = mp.one, mp.one, mp.zero
    edge = 1 - mp.ldexp(1, -ctx.working_bits // 2)
    for _ in range(maximum_reductions):
        n = int(mp.nint(mp.re(tau)))
        if n:
            factor *= mp.expjpi(mp.mpf(n) / 12)
            tau -= n
        if abs(tau) >= edge:
            return tau, factor, scale, shift
        factor /= mp.sqrt(-mp.j * tau)
        tau = -1 / tau
        scale, shift = scale * tau ** 2, shift + scale * 6 * tau / (mp.pi * mp.j)

    raise NonConvergenceError(f'tau = {ctx.nstr(tau, 10)} not reduced after {maximum_reductions} inversions')


def _eta_series(tau, ctx: PrecisionContext):
    mp = ctx.mp
    q = mp.expjpi(2 * tau)
    threshold = mp.ldexp(1, -ctx.working_bits)
    total, m = mp.one, 1
    while True:
        first = q ** (m * (3 * m - 1) // 2)
        total += (-1) ** m * (first + q ** (m * (3 * m + 1) // 2))
        if abs(first) < threshold:
            break
        m += 1
    return mp.expjpi(tau / 12) * total


def _e2_series(tau, ctx: PrecisionContext):
    mp = ctx.mp
    q = mp.expjpi(2 * tau)
    threshold = mp.ldexp(1, -ctx.working_bits)
    total, power, n = mp.zero, q, 1
    while True:
        term = n * power / (1 - power)
        total += term
        if abs(term) < threshold:
            break
        power *= q
        n += 1
    return 1 - 24 * total


def eta_eval(tau, ctx: PrecisionContext):
    """
    Dedekind eta function anywhere in the upper half-plane.
    """
    reduced, factor, _, _ = _reduce(_as_tau(tau, ctx), ctx)
    return factor * _eta_series(reduced, ctx)


def e2_eval(tau, ctx: PrecisionContext):
    """
    Quasimodular Eisenstein series E_2 anywhere in the upper half-plane.
    """
    reduced, _, scale, shift = _reduce(_as_tau(tau, ctx), ctx)
    return scale * _e2_series(reduced, ctx) + shift


def _eta_block(tau, multiples: Sequence[int], ctx: PrecisionContext) -> Dict[int, Tuple[object, object]]:
    values = {}
    for m in multiples:
        reduced, factor, scale, shift = _reduce(m * tau, ctx)
        values[m] = (factor * _eta_series(reduced, ctx), scale * _e2_series(reduced, ctx) + shift)
    return values


def level_fifty_values(tau, ctx: PrecisionContext, strict: bool = True) -> Dict[str, object]:
    """
    Values of h_50, t_50, q dt_50/dq, f_50, g_50 and F_50 at one point, from eta and E_2 evaluations.

    :param tau: Point of the upper half-plane.
    :param ctx: Precision context.
    :param strict: Raise PoleError at t_50 = 1/5 instead of returning infinite values.
    :return: Map from form name to value.
    """
    mp = ctx.mp
    tau = _as_tau(tau, ctx)
    block = _eta_block(tau, (1, 2, 5, 10, 25, 50), ctx)
    eta = {m: v[0] for m, v in block.items()}
    e2 = {m: v[1] for m, v in block.items()}

    a = eta[1] * eta[50] / (eta[2] * eta[25])
    log_theta_a = (e2[1] + 50 * e2[50] - 2 * e2[2] - 25 * e2[25]) / 24
    h = a + 1 / a - 1
    theta_h = log_theta_a * (a - 1 / a)

    numerator, denominator = (1 - h) * (3 + h) ** 2, 5 * (1 - h - h ** 2)
    numerator_h, denominator_h = (3 + h) * (-1 - 3 * h), -5 * (1 + 2 * h)
    t = numerator / denominator
    theta_t = (numerator_h * denominator - numerator * denominator_h) / denominator ** 2 * theta_h
    eisenstein = 2 * e2[10] - e2[5]

    values = {'h50': h, 't50': t, 'theta_t50': theta_t, 'f50': eisenstein * theta_t / (t * (1 - t))}
    distance = 1 - 5 * t
    if abs(distance) <= ctx.tolerance(0):
        if strict:
            raise PoleError(f'tau = {ctx.nstr(tau, 12)} is a pole of g_50 and F_50 (t_50 = 1/5)')
        values.update({'g50': mp.inf, 'F50': mp.inf})
        return values

    values['g50'] = -5 * eisenstein * theta_t / distance ** 2
    values['F50'] = (7 + 20 * t + 25 * t ** 2) * eisenstein * theta_t / (2 * distance ** 4)
    return values


def level_two_values(tau, ctx: PrecisionContext) -> Dict[str, object]:
    """
    Values of h_2, t_2 and E at one point.
    """
    tau = _as_tau(tau, ctx)
    block = _eta_block(tau, (1, 2), ctx)
    u = (block[1][0] / block[2][0]) ** 24
    h = u + fricke_constant / u + 24
    return {'h2': h, 't2': 1 / (h + level_two_shift), 'E': 2 * block[2][1] - block[1][1]}


def eval_form(name: str, tau, ctx: PrecisionContext):
    """
    Evaluates one of h50, t50, theta_t50, f50, g50, F50, h2, t2, E at a point of the upper half-plane.
    """
    if name in level_fifty_forms:
        return level_fifty_values(tau, ctx)[name]
    if name in level_two_forms:
        return level_two_values(tau, ctx)[name]
    raise ConfigurationError(f'unknown form {name!r}')


def t50_derivative(tau, ctx: PrecisionContext):
    """
    d t_50 / d tau.
    """
    return ctx.two_pi_i * eval_form('theta_t50', tau, ctx)


def t50_derivative_at_cm(sign: int, ctx: PrecisionContext):
    """
    Closed form t_50'(tau_+-) = -+ Gamma(1/8)^2 Gamma(3/8)^2 / (2 sqrt(10) pi^2).
    """
    if sign not in (1, -1):
        raise ConfigurationError(f'sign must be +1 or -1, got {sign}')
    mp = ctx.mp
    value = mp.gamma(mp.mpf(1) / 8) ** 2 * mp.gamma(mp.mpf(3) / 8) ** 2 / (2 * mp.sqrt(10) * mp.pi ** 2)
    return -sign * value


@lru_cache(maxsize=8)
def hauptmodul_qexp(which: str, precision: int) -> QExpansion:
    """
    Exact q-expansion of the normalized Hauptmodul h50 of Gamma_0*(50) or h2 of Gamma_0*(2).

    :param which: 'h50' or 'h2'.
    :param precision: Coefficients are known up to q^(precision - 1).
    :return: Expansion q^-1 + 0 + O(q).
    """
    if precision < 16:
        raise ConfigurationError(f'Hauptmodul expansions need at least 16 terms, got {precision}')

    extra = precision + 4
    if which == 'h50':
        a = eta_quotient({1: 1, 2: -1, 25: -1, 50: 1}, extra)
        h = a + a.invert() - 1
    elif which == 'h2':
        u = eta_quotient({1: 24, 2: -24}, extra)
        h = u + u.invert() * fricke_constant + 24
    else:
        raise ConfigurationError(f'unknown Hauptmodul {which!r}')

    h = h.truncate(precision).relabel(which, 0)
    if h.valuation() != -1 or h.coefficient(-1) != 1 or h.coefficient(0) != 0:
        raise InconsistentSystemError(f'{which} is not normalized as q^-1 + O(q): {h}')

    return h


def newform_from_f50(f50: QExpansion) -> QExpansion:
    """
    Recovers the level 25 newform f from f_50 = 5 f(tau) - 20 f(2 tau).
    """
    if f50.coefficient(0) != 0:
        raise InconsistentSystemError('f_50 has a constant term')

    a = [sympy.Integer(0)]
    for n in range(1, f50.precision):
        value = f50.coefficient(n) + (20 * a[n // 2] if n % 2 == 0 else 0)
        if value % 5 != 0:
            raise InconsistentSystemError(f'f_50 coefficient of q^{n} leaves remainder {value % 5} in the recursion')
        a.append(value / 5)

    f = QExpansion(a, 0, 'f', 4)
    if not f.is_integral() or f.coefficient(1) != 1:
        raise InconsistentSystemError(f'recovered newform is not normalized and integral: {f}')

    return f


@lru_cache(maxsize=4)
def derived_forms_qexp(precision: int) -> Dict[str, QExpansion]:
    """
    Exact q-expansions of t2, t50, E, f50, g50, F50 and the newform f.

    :param precision: Coefficients are known up to q^(precision - 1).
    :return: Map from form name to expansion.
    """
    if precision < 32:
        raise ConfigurationError(f'derived expansions need at least 32 terms, got {precision}')

    working = precision + 12
    h50 = hauptmodul_qexp('h50', working)
    h2 = hauptmodul_qexp('h2', working)

    t2 = (h2 + level_two_shift).invert()
    t50 = (1 - h50) * (3 + h50) ** 2 / ((1 - h50 - h50 ** 2) * 5)

    e2 = eisenstein_e2(working)
    eisenstein = e2.rescale(2).truncate(working) * 2 - e2
    if eisenstein.coefficient(0) != 1:
        raise InconsistentSystemError('E is not normalized as 1 + O(q)')

    f50 = eisenstein.rescale(5).truncate(working) * t50.theta() / (t50 * (1 - t50))
    pole = (1 - 5 * t50).invert()
    g50 = -5 * t50 * (1 - t50) * pole ** 2 * f50
    F50 = t50 * (1 - t50) * (7 + 20 * t50 + 25 * t50 ** 2) * pole ** 4 * f50 / 2
    if f50.valuation() != 1 or f50.coefficient(1) != 5:
        raise InconsistentSystemError(f'f_50 does not start with 5 q: {f50}')

    forms = {'t2': t2.relabel('t2', 0), 't50': t50.relabel('t50', 0), 'E': eisenstein.relabel('E', 2),
             'f50': f50.relabel('f50', 4), 'g50': g50.relabel('g50', 4), 'F50': F50.relabel('F50', 4)}
    forms = {name: series.truncate(precision) for name, series in forms.items()}
    forms['f'] = newform_from_f50(forms['f50'])
    logger.debug(f'Built level 50 q-expansions to q^{precision - 1}')

    return forms


def hecke_eigenform_failures(f: QExpansion, n_max: Optional[int] = None, level: int = 25) -> List[str]:
    """
    Exact checks of a_mn = a_m a_n for coprime m, n and a_(p^2) = a_p^2 - p^3 for primes p not dividing the level.

    :return: Descriptions of the violated relations, empty for an eigenform.
    """
    n_max = min(n_max or f.precision - 1, f.precision - 1)
    failures = []
    for m in range(2, n_max + 1):
        for n in range(m + 1, n_max // m + 1):
            if math.gcd(m, n) == 1 and f.coefficient(m * n) != f.coefficient(m) * f.coefficient(n):
                failures.append(f'a_{m * n} != a_{m} a_{n}')
    for p in sympy.primerange(2, int(math.isqrt(n_max)) + 1):
        if level % p and f.coefficient(p * p) != f.coefficient(p) ** 2 - p ** (f.weight - 1):
            failures.append(f'a_{p * p} != a_{p}^2 - {p}^{f.weight - 1}')
    if failures:
        logger.warning(f'{f.label} fails {len(failures)} Hecke relations, first: {failures[0]}')

    return failures


def pullback_identity_check(tau, ctx: PrecisionContext, order: int = 64) -> IdentityCheck:
    """
    Compares the K3 periods varrho at x = t_2(tau) with (2 pi i)^2 (1, tau, tau^2) E(tau).
    """
    mp = ctx.mp
    tau = _as_tau(tau, ctx)
    values = level_two_values(tau, ctx)
    x = values['t2']
    q = mp.expjpi(2 * tau)
    log_x = ctx.two_pi_i * tau + mp.log(x / q)

    periods = eval_basis(frobenius_basis(HypergeometricOperator.k3(), order, ctx), x, 0, log_x)
    lhs = [periods[k, 0] for k in range(3)]
    rhs = [ctx.two_pi_i ** 2 * tau ** k * values['E'] for k in range(3)]

    return compare(f't2 pullback at {ctx.nstr(tau, 6)}', lhs, rhs)


def hauptmodul_relation_check(taus: Sequence, ctx: PrecisionContext) -> IdentityCheck:
    """
    Checks phi(t_50(tau)) = t_2(5 tau) with phi(t) = 5^-5 / (t (1 - t)^4).
    """
    z = ctx.convert(fiber_parameter)
    lhs, rhs = [], []
    for tau in taus:
        tau = _as_tau(tau, ctx)
        t = eval_form('t50', tau, ctx)
        lhs.append(z / (t * (1 - t) ** 4))
        rhs.append(eval_form('t2', 5 * tau, ctx))

    return compare('Hauptmodul relation', lhs, rhs)


def _segment_distance(point, a, b, mp):
    direction = b - a
    s = mp.re((point - a) * mp.conj(direction)) / abs(direction) ** 2
    s = min(max(s, 0), 1)
    return abs(point - (a + s * direction))


def locate_poles(start, end, ctx: PrecisionContext, samples: int = pole_search_samples) -> list:
    """
    Poles of g_50 and F_50 (zeros of 1 - 5 t_50) near a straight segment, from local minima of |1 - 5 t_50|
    refined by root finding.
    """
    mp = ctx.mp
    a, b = _as_tau(start, ctx), _as_tau(end, ctx)

    def distance(tau):
        return 1 - 5 * level_fifty_values(tau, ctx, strict=False)['t50']

    points = [a + (b - a) * mp.mpf(k) / samples for k in range(samples + 1)]
    sizes = [abs(distance(p)) for p in points]
    spacing = abs(b - a) / samples

    poles = []
    for k, size in enumerate(sizes):
        if (k > 0 and sizes[k - 1] < size) or (k < samples and sizes[k + 1] < size):
            continue
        try:
            root = mp.findroot(distance, points[k])
        except (ValueError, ZeroDivisionError, ConfigurationError, NonConvergenceError):
            continue
        if mp.im(root) <= 0 or abs(distance(root)) > ctx.tolerance(integer_rounding_margin):
            continue
        if _segment_distance(root, a, b, mp) <= 2 * spacing and all(abs(root - p) > spacing / 8 for p in poles):
            poles.append(root)

    return poles


def _check_clearance(a, b, ctx: PrecisionContext):
    mp = ctx.mp
    clearance = ctx.convert(pole_clearance)
    for pole in locate_poles(a, b, ctx):
        q_distance = 2 * mp.pi * abs(mp.expjpi(2 * pole)) * _segment_distance(pole, a, b, mp)
        if q_distance < clearance:
            raise PoleError(f'path from {ctx.nstr(a, 8)} to {ctx.nstr(b, 8)} passes within q-distance '
                            f'{ctx.nstr(q_distance, 3)} of the pole {ctx.nstr(pole, 10)}')


def _tail_precision(height, ctx: PrecisionContext) -> int:
    terms = (ctx.target_digits + 10) * math.log(10) / (2 * math.pi * (float(height) - 0.5)) + 12
    return max(32, 16 * math.ceil(terms / 16))


def cusp_tail(names: Sequence[str], tau, ctx: PrecisionContext) -> List[list]:
    """
    (2 pi i)^3 times the integrals of (1, 5 tau, 25 tau^2) F(tau) from tau to i infinity, summed term by term from
    the q-expansions.

    :param names: Forms without constant term.
    :param tau: Start point with Im tau >= switchover_height.
    :param ctx: Precision context.
    :return: Rows for the weights 1, 5 tau, 25 tau^2 and one column per form.
    """
    mp = ctx.mp
    tau = _as_tau(tau, ctx)
    if mp.im(tau) < switchover_height:
        raise ConfigurationError(f'q-antiderivatives are only summed above Im tau = {switchover_height}')

    forms = derived_forms_qexp(_tail_precision(mp.im(tau), ctx))
    columns = []
    for name in names:
        series = forms[name] if name in forms else None
        if series is None or series.valuation() < 1:
            raise ConfigurationError(f'{name} is not a cusp form at infinity; its tail integral diverges')

        moments = [mp.zero] * 3
        for n in range(series.offset, series.precision):
            c = series.coefficient(n)
            if c == 0:
                continue
            rate = ctx.two_pi_i * n
            exponential = ctx.convert(c) * mp.exp(rate * tau)
            for j in range(3):
                partial = sum((-1) ** m * math.factorial(j) // math.factorial(j - m) * tau ** (j - m) / rate ** (m + 1)
                              for m in range(j + 1))
                moments[j] -= exponential * partial
        columns.append([moments[0], 5 * moments[1], 25 * moments[2]])

    scale = ctx.two_pi_i ** 3
    return [[scale * column[i] for column in columns] for i in range(3)]


def integrate_form_path(names: Sequence[str], points: Sequence, ctx: PrecisionContext,
                        check_poles: bool = True) -> Estimate:
    """
    (2 pi i)^3 times the integrals of (1, 5 tau, 25 tau^2) F(tau) along a polygon, F running over the named forms.
    A polygon starting or ending at the cusp infinity leaves it vertically and uses q-antiderivatives above
    switchover_height.

    :param names: Level 50 forms.
    :param points: Vertices; the first or last may be cusp_infinity.
    :param ctx: Precision context.
    :param check_poles: Reject polygons passing too close to poles of meromorphic integrands.
    :return: Estimate whose value has rows for the weights and one column per form.
    """
    mp = ctx.mp
    names = list(names)
    unknown = [n for n in names if n not in level_fifty_forms]
    if unknown:
        raise ConfigurationError(f'cannot integrate {unknown}')
    if len(points) < 2:
        raise ConfigurationError('a path needs at least two points')

    vertices = [None if isinstance(p, UHPPoint) and p.is_infinity else p for p in points]
    if vertices[0] is None and vertices[-1] is None:
        raise ConfigurationError('a path from infinity to infinity is the empty path')
    if any(v is None for v in vertices[1:-1]):
        raise ConfigurationError('only the endpoints of a path may be the cusp at infinity')

    result = [[mp.zero] * len(names) for _ in range(3)]

    def add(block, sign):
        for i in range(3):
            for k in range(len(names)):
                result[i][k] += sign * block[i][k]

    finite = [_as_tau(v, ctx) for v in vertices if v is not None]
    for position, sign in ((0, -1), (-1, 1)):
        if vertices[position] is None:
            anchor = finite[position]
            top = mp.mpc(mp.re(anchor), max(mp.im(anchor), switchover_height))
            add(cusp_tail(names, top, ctx), sign)
            if top != anchor:
                finite.insert(len(finite) if position == -1 else 0, top)

    segments = [LineSegment(a, b, ctx) for a, b in zip(finite, finite[1:]) if a != b]
    if not segments:
        return Estimate(value=result, error_estimate=mp.zero)

    if check_poles and any(n in meromorphic_forms for n in names):
        for seg in segments:
            _check_clearance(seg.start, seg.end, ctx)

    scale = ctx.two_pi_i ** 3

    def integrand(tau):
        values = level_fifty_values(tau, ctx)
        weights = (1, 5 * tau, 25 * tau ** 2)
        return [scale * w * values[n] for w in weights for n in names]

    estimate = contour_quadrature(integrand, Contour(segments), ctx)
    add([[estimate.value[i * len(names) + k] for k in range(len(names))] for i in range(3)], 1)

    return Estimate(value=result, error_estimate=estimate.error_estimate)


@dataclass(frozen=True)
class GammaStar50Element:
    """
    Element W = [[a, b], [c, d]] of Gamma_0*(50), scaled to determinant one by 1/sqrt(e) where e = ad - bc is a
    divisor in lattice_divisors, e divides a and d, and 50 divides c.
    """
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        e = self.a * self.d - self.b * self.c
        if e not in lattice_divisors or self.a % e or self.d % e or self.c % 50:
            raise ConfigurationError(f'{self} is not an element of Gamma_0*(50)')

    @property
    def determinant(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def character(self) -> int:
        return 1 if self.determinant in (1, 25) else -1

    @property
    def cusp(self) -> UHPPoint:
        return cusp_infinity if self.c == 0 else UHPPoint(real=sympy.Rational(self.a, self.c))

    def act(self, tau):
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def weight_matrix(self) -> sympy.Matrix:
        """
        Exact matrix M with (1, 5 W tau, 25 (W tau)^2) F(W tau) d(W tau) = M (1, 5 tau, 25 tau^2) F(tau) d tau.
        """
        a, b, c, d = self.a, self.b, self.c, self.d
        matrix = sympy.Matrix([[d ** 2, sympy.Rational(2 * c * d, 5), sympy.Rational(c ** 2, 25)],
                               [5 * b * d, a * d + b * c, sympy.Rational(a * c, 5)],
                               [25 * b ** 2, 10 * a * b, a ** 2]])
        return matrix * sympy.Rational(self.character, self.determinant)

    @classmethod
    def identity(cls) -> 'GammaStar50Element':
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, n: int = 1) -> 'GammaStar50Element':
        return cls(1, n, 0, 1)

    @classmethod
    def atkin_lehner(cls, e: int) -> 'GammaStar50Element':
        matrices = {1: (1, 0, 0, 1), 2: (2, -1, 50, -24), 25: (25, 12, 50, 25), 50: (0, -1, 50, 0)}
        if e not in matrices:
            raise ConfigurationError(f'no Atkin-Lehner involution W_{e} on Gamma_0(50)')
        return cls(*matrices[e])


def cusp_period_integrals(gamma: GammaStar50Element, ctx: PrecisionContext, names: Sequence[str] = theorem_forms,
                          balance=1) -> Estimate:
    """
    (2 pi i)^3 times the integrals of (1, 5 tau, 25 tau^2) F from infinity to the cusp W infinity, computed as
    -J(W tau_1) + M J(tau_1) where J(tau) integrates from tau to infinity.

    :param gamma: Element W of Gamma_0*(50).
    :param ctx: Precision context.
    :param names: Forms integrated.
    :param balance: Ratio of the heights of tau_1 and W tau_1 is balance^2.
    :return: Estimate with rows for the weights and one column per form.
    """
    mp = ctx.mp
    if gamma.c == 0:
        start = mp.mpc(0, switchover_height)
    else:
        height = ctx.convert(balance) * mp.sqrt(gamma.determinant) / abs(gamma.c)
        start = mp.mpc(-mp.mpf(gamma.d) / gamma.c, height)
    image = gamma.act(start)

    inner = integrate_form_path(names, [start, cusp_infinity], ctx)
    outer = integrate_form_path(names, [image, cusp_infinity], ctx)
    matrix = gamma.weight_matrix()

    value = [[-outer.value[i][k] + sum(ctx.convert(matrix[i, j]) * inner.value[j][k] for j in range(3))
              for k in range(len(names))] for i in range(3)]
    error = outer.error_estimate + max(abs(ctx.convert(x)) for x in matrix) * inner.error_estimate
    logger.debug(f'Cusp integrals for {gamma}: tau_1 = {ctx.nstr(start, 8)}, W tau_1 = {ctx.nstr(image, 8)}')

    return Estimate(value=value, error_estimate=error)


def _lattice(ctx: PrecisionContext):
    return ctx.mp.re(ctx.two_pi_i ** 2) * ctx.sqrt5 / 2


def _reduce_modulo(value, lattice):
    return value - lattice * round(float(value / lattice))


def scaled_from_mixed(constants: Dict[str, object], ctx: PrecisionContext, alpha_b=None) -> Dict[str, tuple]:
    """
    Scaled periods (omega, eta, alpha) from the mixed period constants: the + row is -1/4 and the - row -1/10 of
    (w, e, a); the boundary row is (0, 0, alpha_b) with alpha_b = lattice / 5 unless given.
    """
    def value(name):
        return ctx.convert(constants[name])

    lattice = _lattice(ctx)
    return {
        '+': tuple(-value(n) / 4 for n in ('w+', 'e+', 'a+')),
        '-': tuple(-value(n) / 10 for n in ('w-', 'e-', 'a-')),
        'b': (ctx.mp.zero, ctx.mp.zero, lattice / 5 if alpha_b is None else ctx.convert(alpha_b)),
    }


@dataclass
class CocycleReport:
    """
    Outcome of the cusp integral congruence for one element of Gamma_0*(50).

    :ivar gamma: The element.
    :ivar lhs: Integral matrix, rows for the weights and columns (f50, F50, g50).
    :ivar r_plus: Integer coefficients of the + scaled periods per row.
    :ivar r_minus: Integer coefficients of the - scaled periods per row.
    :ivar rounding_residual: Largest distance of the solved coefficients to integers.
    :ivar residual: Largest relative residual of the congruence after lattice reduction.
    :ivar error_estimate: Quadrature error of the integrals.
    """
    gamma: GammaStar50Element
    lhs: List[list]
    r_plus: List[int]
    r_minus: List[int]
    rounding_residual: object
    residual: object
    error_estimate: object

    def passed(self, tolerance) -> bool:
        return self.rounding_residual <= tolerance and self.residual <= tolerance


def theorem1_check(gamma: GammaStar50Element, ctx: PrecisionContext, mixed_constants: Dict[str, object],
                   alpha_b=None, balance=1) -> CocycleReport:
    """
    Verifies that the cusp integrals of (f50, F50, g50) are integral combinations of the scaled periods up to the
    boundary term (chi (c^2/25, ac/5, a^2) - (0, 0, 1)) (0, 0, alpha_b) and the lattice in the g50 column.

    :param gamma: Element of Gamma_0*(50).
    :param ctx: Precision context.
    :param mixed_constants: Mixed period constants keyed 'w+', 'w-', 'e+', 'e-', 'a+', 'a-'.
    :param alpha_b: Boundary period, lattice / 5 by default.
    :param balance: Passed to cusp_period_integrals.
    :return: Solved cocycle values and residuals.
    """
    mp = ctx.mp
    estimate = cusp_period_integrals(gamma, ctx, balance=balance)
    lhs = estimate.value
    scaled = scaled_from_mixed(mixed_constants, ctx, alpha_b)
    plus, minus, boundary = scaled['+'], scaled['-'], scaled['b']
    lattice = _lattice(ctx)

    a, c, e = gamma.a, gamma.c, gamma.determinant
    cusp_vector = [sympy.Rational(c ** 2, 25 * e), sympy.Rational(a * c, 5 * e), sympy.Rational(a ** 2, e)]
    shift = [gamma.character * ctx.convert(v) - (1 if i == 2 else 0) for i, v in enumerate(cusp_vector)]

    r_plus, r_minus, rounding, residual = [], [], mp.zero, mp.zero
    scale = max([mp.one] + [abs(x) for row in lhs for x in row])
    for i in range(3):
        row = [lhs[i][k] - shift[i] * boundary[k] for k in range(3)]
        solved_plus, solved_minus = mp.re(row[0]) / plus[0], mp.im(row[0]) / mp.im(minus[0])
        rp, rm = int(mp.nint(solved_plus)), int(mp.nint(solved_minus))
        rounding = max(rounding, abs(solved_plus - rp), abs(solved_minus - rm))

        rest = [row[k] - rp * plus[k] - rm * minus[k] for k in range(3)]
        residual = max(residual, abs(rest[0]) / scale, abs(rest[1]) / scale,
                       (abs(mp.im(rest[2])) + abs(_reduce_modulo(mp.re(rest[2]), lattice))) / scale)
        r_plus.append(rp)
        r_minus.append(rm)

    if rounding > ctx.tolerance(integer_rounding_margin):
        raise NonIntegralCocycleError(f'cocycle values for {gamma} are {ctx.nstr(rounding, 3)} away from integers')
    logger.info(f'{gamma}: r+ = {r_plus}, r- = {r_minus}, residual {ctx.nstr(residual, 3)}')

    return CocycleReport(gamma=gamma, lhs=lhs, r_plus=r_plus, r_minus=r_minus, rounding_residual=rounding,
                         residual=residual, error_estimate=estimate.error_estimate)


def cm_period_b(ctx: PrecisionContext) -> Estimate:
    """
    b = (2 pi i)^3 times the integral of f_50 along the straight line from tau_- to tau_+.
    """
    estimate = integrate_form_path(['f50'], [tau_minus, tau_plus], ctx)
    return Estimate(value=estimate.value[0][0], error_estimate=estimate.error_estimate)


def _shifted_path(eps, ctx: PrecisionContext, apex=None) -> list:
    mp = ctx.mp
    lift = mp.mpc(0, ctx.sqrt2 * ctx.convert(eps) / 5)
    start, end = tau_minus.value(ctx) + lift, tau_plus.value(ctx) + lift
    if apex is None:
        return [start, end]
    return [start, mp.mpc(0, mp.im(start) + ctx.convert(apex)), end]


def shifted_integral(name: str, eps, ctx: PrecisionContext, apex=None) -> Estimate:
    """
    (2 pi i)^3 times the integral of g50 or F50 from tau_- to tau_+ shifted up by i sqrt(2) eps / 5, along the
    straight line or through the point raised by apex above the midpoint.
    """
    if name not in meromorphic_forms:
        raise ConfigurationError(f'regularized integrals are defined for {meromorphic_forms}, got {name!r}')
    estimate = integrate_form_path([name], _shifted_path(eps, ctx, apex), ctx, check_poles=False)
    return Estimate(value=estimate.value[0][0], error_estimate=estimate.error_estimate)


def counterterm(name: str, eps, ctx: PrecisionContext):
    """
    Divergent part subtracted from the shifted integrals of g50 and F50.
    """
    mp = ctx.mp
    eps = ctx.convert(eps)
    product = t50_derivative_at_cm(-1, ctx) * t50_derivative_at_cm(1, ctx)
    prefactor = ctx.two_pi_i * ctx.sqrt5
    if name == 'g50':
        return prefactor * (1 / eps + mp.log(-5 * product * eps ** 2))
    if name == 'F50':
        return prefactor * (-(1 / eps ** 3 + 1) / (5 * product) - ctx.convert(quartic_constant))
    raise ConfigurationError(f'no counterterm for {name!r}')


def regularized_limit(name: str, ctx: PrecisionContext, schedule: Optional[Sequence] = None,
                      apex=None) -> Estimate:
    """
    Limit eps -> 0 of the shifted integral plus its counterterm, by Richardson extrapolation.
    """
    schedule = ctx.epsilon_schedule() if schedule is None else list(schedule)
    samples, error = [], ctx.mp.zero
    for eps in schedule:
        estimate = shifted_integral(name, eps, ctx, apex)
        samples.append((eps, estimate.value + counterterm(name, eps, ctx)))
        error += estimate.error_estimate
        logger.debug(f'{name} at eps = {ctx.nstr(eps, 5)}: {ctx.nstr(samples[-1][1], 15)}')

    limit = limit_extrapolate(samples, ctx)
    return Estimate(value=limit.value, error_estimate=limit.error_estimate + error)


def regularized_c(ctx: PrecisionContext, schedule: Optional[Sequence] = None) -> Estimate:
    return regularized_limit('g50', ctx, schedule)


def regularized_d(ctx: PrecisionContext, schedule: Optional[Sequence] = None) -> Estimate:
    return regularized_limit('F50', ctx, schedule)


def contour_shift_check(ctx: PrecisionContext, apex=None, schedule: Optional[Sequence] = None) -> IdentityCheck:
    """
    Compares the regularized g50 integral along the straight line with the one through a raised midpoint; the
    difference must be an integer multiple of (2 pi i)^2 sqrt(5).
    """
    apex = ctx.sqrt2 / 10 if apex is None else ctx.convert(apex)
    straight = regularized_limit('g50', ctx, schedule)
    raised = regularized_limit('g50', ctx, schedule, apex=apex)
    multiple = (raised.value - straight.value) / (ctx.two_pi_i ** 2 * ctx.sqrt5)
    nearest = ctx.mp.nint(ctx.mp.re(multiple))
    logger.info(f'Contour shift changes c by {ctx.nstr(multiple, 12)} (2 pi i)^2 sqrt(5)')

    return compare('contour shift multiple', multiple, nearest, straight.error_estimate + raised.error_estimate)


def divergence_fit(name: str, ctx: PrecisionContext, eps=sympy.Rational(1, 1024)) -> Tuple[object, object]:
    """
    Fits I(eps) ~ C / eps^p to the raw shifted integrals at eps and eps / 2.

    :return: Exponent p and coefficient C.
    """
    mp = ctx.mp
    first = shifted_integral(name, eps, ctx).value
    second = shifted_integral(name, ctx.convert(eps) / 2, ctx).value
    exponent = mp.log(abs(second) / abs(first)) / mp.log(2)
    return exponent, second * (ctx.convert(eps) / 2) ** mp.nint(exponent)


def residue_at(name: str, pole, ctx: PrecisionContext, radius=None):
    """
    (1 / 2 pi i) times the integral of the named form over a small circle around a point.
    """
    mp = ctx.mp
    center = _as_tau(pole, ctx)
    radius = mp.im(center) / 8 if radius is None else ctx.convert(radius)

    def integrand(tau):
        return level_fifty_values(tau, ctx)[name]

    estimate = contour_quadrature(integrand, ArcSegment(center, radius, 0, 2 * mp.pi, ctx), ctx)
    return estimate.value / ctx.two_pi_i
