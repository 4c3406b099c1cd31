from fractions import Fraction
from typing import Sequence, Union

import numpy as np
import sympy
from numpy.typing import NDArray

default_target_digits = 35  #: Decimal digits requested when nothing else is configured
default_guard_bits = 64  #: Extra binary digits carried on top of the target
minimum_working_bits = 512  #: Floor for the default working precision
integer_rounding_margin = 10  #: Digits given up when rounding numerical matrices to integers
epsilon_start = sympy.Rational(1, 16)  #: First regularization parameter of the limit schedule
epsilon_ratio = sympy.Rational(1, 2)  #: Geometric ratio of the limit schedule
epsilon_samples = 8  #: Number of regularization samples
cache_env_var = 'FIBERPERIODS_CACHE_DIR'  #: Environment variable holding the default cache directory

Number = Union[int, Fraction, sympy.Rational]


def rational(value: Union[Number, str]) -> sympy.Rational:
    """
    Converts integers, fractions and strings like '3/4' to an exact sympy rational.

    :param value: Value to convert.
    :return: Exact rational.
    """
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)

    return sympy.Rational(value)


def exact_matrix(rows: Sequence[Sequence[Number]]) -> sympy.Matrix:
    """
    Builds an exact sympy matrix from nested integer or rational rows.

    :param rows: Nested sequence of entries.
    :return: Exact matrix.
    """
    return sympy.Matrix([[rational(x) for x in row] for row in rows])


def as_object_array(matrix: sympy.Matrix) -> NDArray:
    """
    Converts an exact sympy matrix into a numpy object array of sympy rationals.

    :param matrix: Exact matrix.
    :return: Object array with the same entries.
    """
    return np.array(matrix.tolist(), dtype=object)


def is_integral(matrix: sympy.Matrix) -> bool:
    """
    Checks whether every entry of an exact matrix is an integer.

    :param matrix: Exact matrix.
    :return: True if all entries are integers.
    """
    return all(sympy.Rational(x).q == 1 for x in matrix)


def stirling_second(n: int, k: int) -> int:
    """
    Stirling numbers of the second kind, S(n, k).
    """
    return int(sympy.functions.combinatorial.numbers.stirling(n, k, kind=2))


def stirling_first(n: int, k: int) -> int:
    """
    Signed Stirling numbers of the first kind, s(n, k).
    """
    return int(sympy.functions.combinatorial.numbers.stirling(n, k, kind=1, signed=True))


def falling_factorial(x, j: int):
    """
    Computes x (x - 1) ... (x - j + 1) for any ring element x.

    :param x: Base value.
    :param j: Number of factors.
    :return: Falling factorial.
    """
    result = 1
    for i in range(j):
        result = result * (x - i)

    return result


def legendre_symbol_5(n: int) -> int:
    """
    Quadratic character modulo 5.

    :param n: Integer argument.
    :return: 0, 1 or -1.
    """
    return (0, 1, -1, -1, 1)[n % 5]


def denominator_lcm(values: Sequence[sympy.Rational]) -> int:
    """
    Least common multiple of the denominators of a list of rationals.

    :param values: Exact rationals.
    :return: Positive integer.
    """
    lcm = 1
    for v in values:
        lcm = sympy.ilcm(lcm, sympy.Rational(v).q)

    return int(lcm)
