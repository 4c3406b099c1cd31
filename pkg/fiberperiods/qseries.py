import logging
from typing import Dict, List, Optional, Sequence, Union

import sympy

from .errors import ConfigurationError, InconsistentSystemError
from .numerics import PrecisionContext

logger = logging.getLogger(__name__)

Scalar = Union[int, sympy.Rational]


class QExpansion:
    """
    Truncated Laurent series sum_n c_n q^n over the rationals, known up to O(q^precision).

    :ivar coefficients: Exact coefficients c_offset .. c_(precision - 1).
    :ivar offset: Power of q of the first stored coefficient.
    :ivar label: Name used in logs and reports.
    :ivar weight: Modular weight, None when not a modular form.
    """

    def __init__(self, coefficients: Sequence[Scalar], offset: int = 0, label: str = '', weight: Optional[int] = None):
        self.coefficients = [sympy.Rational(c) for c in coefficients]
        self.offset = int(offset)
        self.label = label
        self.weight = weight

    @property
    def precision(self) -> int:
        return self.offset + len(self.coefficients)

    def __repr__(self):
        head = ', '.join(str(c) for c in self.coefficients[:6])
        return f'QExpansion({self.label or "?"}, offset={self.offset}, precision={self.precision}, [{head}, ...])'

    def coefficient(self, n: int) -> sympy.Rational:
        if n < self.offset:
            return sympy.Integer(0)
        if n >= self.precision:
            raise ConfigurationError(f'{self.label}: coefficient of q^{n} lies beyond the precision {self.precision}')
        return self.coefficients[n - self.offset]

    def truncate(self, precision: int) -> 'QExpansion':
        return QExpansion(self.coefficients[:max(0, precision - self.offset)], self.offset, self.label, self.weight)

    def normalized(self) -> 'QExpansion':
        """
        Drops leading zero coefficients.
        """
        start = next((i for i, c in enumerate(self.coefficients) if c != 0), len(self.coefficients))
        return QExpansion(self.coefficients[start:], self.offset + start, self.label, self.weight)

    def valuation(self) -> int:
        return self.normalized().offset

    def relabel(self, label: str, weight: Optional[int] = None) -> 'QExpansion':
        return QExpansion(self.coefficients, self.offset, label, weight if weight is not None else self.weight)

    def _spread(self, offset: int, precision: int) -> List[sympy.Rational]:
        return [self.coefficient(n) for n in range(offset, precision)]

    def __add__(self, other) -> 'QExpansion':
        if not isinstance(other, QExpansion):
            other = QExpansion.constant(other, self.precision)
        offset = min(self.offset, other.offset)
        precision = min(self.precision, other.precision)
        coefficients = [a + b for a, b in zip(self._spread(offset, precision), other._spread(offset, precision))]
        return QExpansion(coefficients, offset)

    __radd__ = __add__

    def __neg__(self) -> 'QExpansion':
        return QExpansion([-c for c in self.coefficients], self.offset, self.label, self.weight)

    def __sub__(self, other) -> 'QExpansion':
        return self + (-other)

    def __rsub__(self, other) -> 'QExpansion':
        return (-self) + other

    def __mul__(self, other) -> 'QExpansion':
        if not isinstance(other, QExpansion):
            factor = sympy.Rational(other)
            return QExpansion([factor * c for c in self.coefficients], self.offset)

        offset = self.offset + other.offset
        precision = min(self.precision + other.offset, other.precision + self.offset)
        a, b = self.coefficients, other.coefficients
        coefficients = []
        for n in range(precision - offset):
            coefficients.append(sum((a[i] * b[n - i] for i in range(max(0, n - len(b) + 1), min(n, len(a) - 1) + 1)),
                                    sympy.Integer(0)))
        return QExpansion(coefficients, offset)

    __rmul__ = __mul__

    def __truediv__(self, other) -> 'QExpansion':
        if not isinstance(other, QExpansion):
            return self * (1 / sympy.Rational(other))
        return self * other.invert()

    def __rtruediv__(self, other) -> 'QExpansion':
        return self.invert() * other

    def invert(self) -> 'QExpansion':
        """
        Reciprocal series; the leading coefficient must be known and non-zero.
        """
        series = self.normalized()
        if not series.coefficients:
            raise InconsistentSystemError(f'{self.label}: cannot invert a series that vanishes to its precision')

        a = series.coefficients
        length = len(a)
        b = [1 / a[0]]
        for n in range(1, length):
            b.append(-sum((a[i] * b[n - i] for i in range(1, n + 1)), sympy.Integer(0)) / a[0])

        return QExpansion(b, -series.offset)

    def __pow__(self, power: int) -> 'QExpansion':
        if not isinstance(power, int):
            raise ConfigurationError(f'only integer powers of q-expansions are supported, got {power!r}')
        if power < 0:
            return self.invert() ** (-power)

        if power == 0:
            return QExpansion.constant(1, self.precision - self.offset)

        result, base = None, self
        while power:
            if power & 1:
                result = base if result is None else result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def theta(self) -> 'QExpansion':
        """
        q d/dq.
        """
        return QExpansion([(self.offset + i) * c for i, c in enumerate(self.coefficients)], self.offset)

    def rescale(self, factor: int) -> 'QExpansion':
        """
        Substitutes q -> q^factor, i.e. tau -> factor tau.
        """
        if factor < 1:
            raise ConfigurationError(f'rescaling factor must be positive, got {factor}')
        coefficients = [sympy.Integer(0)] * ((len(self.coefficients) - 1) * factor + 1) if self.coefficients else []
        for i, c in enumerate(self.coefficients):
            coefficients[i * factor] = c
        # known up to q^(factor * precision), the gap after the last stored coefficient is zero
        coefficients.extend([sympy.Integer(0)] * (factor - 1))
        return QExpansion(coefficients, self.offset * factor)

    def hecke(self, p: int, weight: Optional[int] = None) -> 'QExpansion':
        """
        Hecke operator T_p on a form of the given weight: c_n -> c_(pn) + p^(weight-1) c_(n/p).
        """
        weight = self.weight if weight is None else weight
        if weight is None:
            raise ConfigurationError(f'{self.label}: Hecke action needs a weight')
        if self.offset < 0:
            raise ConfigurationError(f'{self.label}: Hecke action on a series with a pole at the cusp')

        count = (self.precision - 1) // p + 1
        coefficients = []
        for n in range(count):
            value = self.coefficient(n * p)
            if n % p == 0:
                value += p ** (weight - 1) * self.coefficient(n // p)
            coefficients.append(value)
        return QExpansion(coefficients, 0, f'{self.label}|T_{p}', weight)

    def evaluate(self, tau, ctx: PrecisionContext):
        """
        Sums the truncated series at q = exp(2 pi i tau).
        """
        mp = ctx.mp
        q = mp.expjpi(2 * ctx.convert(tau))
        total = mp.zero
        for c in reversed(self.coefficients):
            total = total * q + ctx.convert(c)
        return total * q ** self.offset

    def is_integral(self) -> bool:
        return all(c.q == 1 for c in self.coefficients)

    def denominator_lcm(self) -> int:
        return int(sympy.ilcm(1, 1, *[c.q for c in self.coefficients]))

    @classmethod
    def constant(cls, value: Scalar, precision: int) -> 'QExpansion':
        return cls([value] + [0] * max(precision - 1, 0), 0)


def euler_product(precision: int) -> QExpansion:
    """
    prod_(n >= 1) (1 - q^n) to O(q^precision) from the pentagonal number theorem.
    """
    coefficients = [0] * precision
    coefficients[0] = 1
    m = 1
    while True:
        first, second = m * (3 * m - 1) // 2, m * (3 * m + 1) // 2
        if first >= precision:
            break
        coefficients[first] = (-1) ** m
        if second < precision:
            coefficients[second] = (-1) ** m
        m += 1
    return QExpansion(coefficients, 0, 'euler')


def eta_quotient(exponents: Dict[int, int], precision: int, label: str = '') -> QExpansion:
    """
    q-expansion of prod_m eta(m tau)^(e_m) with sum_m m e_m divisible by 24.

    :param exponents: Map m -> e_m.
    :param precision: Number of coefficients computed after the leading one.
    :param label: Name of the result.
    :return: Expansion with integral offset sum_m m e_m / 24.
    """
    order = sum(m * e for m, e in exponents.items())
    if order % 24:
        raise ConfigurationError(f'eta quotient {exponents} has fractional order {order}/24 at the cusp')

    base = euler_product(precision)
    result = QExpansion.constant(1, precision)
    for m, e in sorted(exponents.items()):
        result = result * base.rescale(m).truncate(precision) ** e
    weight = sum(exponents.values()) // 2 if sum(exponents.values()) % 2 == 0 else None

    return QExpansion(result.coefficients, order // 24, label, weight)


def eisenstein_e2(precision: int) -> QExpansion:
    """
    Quasimodular E_2 = 1 - 24 sum sigma_1(n) q^n.
    """
    coefficients = [1] + [-24 * sympy.divisor_sigma(n, 1) for n in range(1, precision)]
    return QExpansion(coefficients, 0, 'E2', 2)
