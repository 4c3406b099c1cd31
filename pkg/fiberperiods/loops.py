import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import sympy

from .errors import ConfigurationError, NonIntegralCocycleError
from .numerics import PrecisionContext
from .utils import as_object_array, exact_matrix, is_integral

logger = logging.getLogger(__name__)

generator_count = 7  #: Generators gamma_1 .. gamma_7 of the fundamental group of the punctured t-line

#: Monodromy of the K3 periods around x = 0
k3_t_matrix = exact_matrix([[1, 0, 0],
                            [1, 1, 0],
                            [1, 2, 1]])

#: Involution exchanging the two sides of the K3 conifold
k3_w_matrix = exact_matrix([[0, 0, 2],
                            [0, -1, 0],
                            ['1/2', 0, 0]])

_letter_pattern = re.compile(r'g(\d+)(?:\^(-?\d+))?')


@dataclass(frozen=True)
class LoopWord:
    """
    Word in the generators gamma_1 .. gamma_7, read from left to right as the order in which loops are traversed.

    :ivar letters: Tuple of (generator index, exponent) with exponent +1 or -1.
    """
    letters: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        for index, exponent in self.letters:
            if not 1 <= index <= generator_count:
                raise ConfigurationError(f'generator index must lie in 1..{generator_count}, got {index}')
            if exponent not in (1, -1):
                raise ConfigurationError(f'letter exponents must be +1 or -1, got {exponent}')

    @classmethod
    def generator(cls, index: int) -> 'LoopWord':
        return cls(((index, 1),))

    @classmethod
    def parse(cls, text: str) -> 'LoopWord':
        """
        Reads words like 'g4^-1 g6^-1 g2^-1' or 'g7 g5^-1'; powers are expanded into single letters.

        :param text: Word in the g<index>^<power> notation, letters separated by blanks or '*'.
        :return: Parsed word, not reduced.
        """
        stripped = text.replace('*', ' ').strip()
        letters = []
        position = 0
        for match in _letter_pattern.finditer(stripped):
            if stripped[position:match.start()].strip():
                raise ConfigurationError(f'cannot parse loop word {text!r}')
            position = match.end()
            power = int(match.group(2) or 1)
            sign = 1 if power > 0 else -1
            letters.extend([(int(match.group(1)), sign)] * abs(power))
        if stripped[position:].strip():
            raise ConfigurationError(f'cannot parse loop word {text!r}')

        return cls(tuple(letters))

    def reduced(self) -> 'LoopWord':
        """
        Free reduction: cancels adjacent pairs g g^-1.
        """
        stack = []
        for letter in self.letters:
            if stack and stack[-1][0] == letter[0] and stack[-1][1] == -letter[1]:
                stack.pop()
            else:
                stack.append(letter)

        return LoopWord(tuple(stack))

    def inverse(self) -> 'LoopWord':
        return LoopWord(tuple((index, -exponent) for index, exponent in reversed(self.letters)))

    def __mul__(self, other: 'LoopWord') -> 'LoopWord':
        return LoopWord(self.letters + other.letters)

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    @property
    def generators(self) -> set:
        return {index for index, _ in self.letters}

    def __str__(self):
        if not self.letters:
            return '1'
        return ' '.join(f'g{index}' if exponent == 1 else f'g{index}^-1' for index, exponent in self.letters)


def as_word(word) -> LoopWord:
    """
    Accepts a LoopWord, a generator index or a string in the g<index> notation.
    """
    if isinstance(word, LoopWord):
        return word
    if isinstance(word, int):
        return LoopWord.generator(word)

    return LoopWord.parse(str(word))


class LoopMonodromyRep:
    """
    Representation of the loop group on the pulled-back K3 periods: continuing varrho along gamma gives
    M_gamma varrho, and M_(gamma gamma') = M_gamma M_gamma'.

    :ivar t_matrix: Exact monodromy T around x = 0.
    :ivar w_matrix: Exact involution W.
    :ivar generators: Exact matrices M_gamma_1 .. M_gamma_7 keyed by index.
    """

    def __init__(self, t_matrix: sympy.Matrix = k3_t_matrix, w_matrix: sympy.Matrix = k3_w_matrix):
        self.t_matrix = t_matrix
        self.w_matrix = w_matrix
        t, w = t_matrix, w_matrix
        t_inv = t.inv()

        self.generators = {
            1: t ** 5,
            2: -t_inv * w * t,
            3: -w,
            4: -t * w * t_inv,
            5: -w,
            6: t_inv * w * t_inv ** 2 * w * t_inv,
            7: -w,
        }

    def matrix(self, word) -> sympy.Matrix:
        """
        Exact monodromy matrix of a word.
        """
        result = sympy.eye(3)
        for index, exponent in as_word(word):
            m = self.generators[index]
            result = result * (m if exponent == 1 else m.inv())

        return result

    def numerical(self, word, ctx: PrecisionContext):
        """
        Monodromy matrix of a word as a matrix of context numbers.
        """
        m = self.matrix(word)
        return ctx.mp.matrix([[ctx.convert(x) for x in m.row(i)] for i in range(m.rows)])

    def involution_squares_to_one(self) -> bool:
        return self.w_matrix * self.w_matrix == sympy.eye(3)

    def determinants(self) -> Dict[int, sympy.Rational]:
        return {index: m.det() for index, m in self.generators.items()}


def cocycle_direction(index: int, rep: Optional[LoopMonodromyRep] = None) -> sympy.Matrix:
    """
    Primitive integral vector spanning the image of M_gamma - 1 for a generator whose monodromy is a reflection.

    :param index: Generator index.
    :param rep: Monodromy representation.
    :return: Exact 3 x 1 column with coprime integer entries and positive first entry.
    """
    rep = rep or LoopMonodromyRep()
    image = (rep.generators[index] - sympy.eye(3)).columnspace()
    if len(image) != 1:
        raise ConfigurationError(f'M_gamma_{index} - 1 has rank {len(image)}, expected 1')

    v = image[0]
    scale = sympy.ilcm(*[sympy.Rational(x).q for x in v])
    v = v * scale
    v = v / sympy.igcd(*[int(x) for x in v])
    if v[0] < 0 or (v[0] == 0 and next(x for x in v if x != 0) < 0):
        v = -v

    return v


def base_point_condition(terms: Iterable[Tuple[Sequence, object]], rep: Optional[LoopMonodromyRep] = None):
    """
    Exact row vector sum_i v_i (M_gamma_i - 1); a combination sum_i v_i . I(gamma_i) does not depend on the base
    point iff it vanishes.

    :param terms: Pairs (row vector v_i, word gamma_i).
    :param rep: Monodromy representation.
    :return: Exact 1 x 3 matrix.
    """
    rep = rep or LoopMonodromyRep()
    total = sympy.zeros(1, 3)
    for vector, word in terms:
        v = sympy.Matrix([[sympy.Rational(x) for x in vector]])
        total += v * (rep.matrix(word) - sympy.eye(3))

    return total


class Cocycle:
    """
    Map on loop words fixed by its values on generators and the law c(gamma gamma') = c(gamma) + M_gamma c(gamma').

    Values may be exact sympy columns or matrices of context numbers; with a precision context the monodromy is
    converted to context numbers as well.

    :ivar values: Values on generators keyed by index.
    :ivar rep: Monodromy representation.
    :ivar name: Label used in error messages.
    """

    def __init__(self, values: Dict[int, object], rep: Optional[LoopMonodromyRep] = None, name: str = '',
                 ctx: Optional[PrecisionContext] = None):
        self.values = dict(values)
        self.rep = rep or LoopMonodromyRep()
        self.name = name
        self.ctx = ctx

    def _matrix(self, index: int, exponent: int):
        word = LoopWord(((index, exponent),))
        if self.ctx is None:
            return self.rep.matrix(word)
        return self.rep.numerical(word, self.ctx)

    def _zero(self):
        sample = next(iter(self.values.values()))
        if self.ctx is None:
            return sympy.zeros(sample.rows, sample.cols)
        return self.ctx.mp.matrix(sample.rows, sample.cols)

    def _one(self):
        return sympy.eye(3) if self.ctx is None else self.ctx.mp.eye(3)

    def __call__(self, word):
        word = as_word(word)
        total = self._zero()
        transport = self._one()
        for index, exponent in word:
            if index not in self.values:
                raise ConfigurationError(f'cocycle {self.name} is not defined on gamma_{index}')
            m = self._matrix(index, exponent)
            if exponent == 1:
                total = total + transport * self.values[index]
            else:
                total = total - transport * m * self.values[index]
            transport = transport * m

        return total


class ZCocycle(Cocycle):
    """
    Integer valued cocycle; evaluation checks integrality of the result.
    """

    def __init__(self, values: Dict[int, Sequence[int]], rep: Optional[LoopMonodromyRep] = None, name: str = ''):
        columns = {index: sympy.Matrix([sympy.Integer(x) for x in value]) for index, value in values.items()}
        super(ZCocycle, self).__init__(columns, rep=rep, name=name)

    def __call__(self, word) -> sympy.Matrix:
        value = super(ZCocycle, self).__call__(word)
        if not is_integral(value):
            raise NonIntegralCocycleError(f'cocycle {self.name} takes the non-integral value {list(value)} on '
                                          f'{as_word(word)}')
        return value

    def satisfies_law(self, first, second) -> bool:
        """
        Exact check of c(ab) = c(a) + M_a c(b).
        """
        a, b = as_word(first), as_word(second)
        lhs = as_object_array(Cocycle.__call__(self, a * b))
        rhs = as_object_array(Cocycle.__call__(self, a) + self.rep.matrix(a) * Cocycle.__call__(self, b))

        return bool(np.array_equal(lhs, rhs))


def _with_shared_values(gamma2, gamma3, gamma4) -> Dict[int, Tuple[int, int, int]]:
    return {1: (0, 0, 0), 2: gamma2, 3: gamma3, 4: gamma4, 5: gamma3, 7: gamma3}


#: Values of the three reduced cocycles at z = 1/5^5 on the generators surviving the collision of t- and t+
reduced_cocycle_tables = {
    '+': _with_shared_values((-2, 2, -3), (-4, 0, -2), (-2, -2, -3)),
    '-': _with_shared_values((-2, 2, -3), (0, 0, 0), (2, 2, 3)),
    'b': _with_shared_values((-2, 2, -3), (-2, 0, -1), (-2, -2, -3)),
}


def reduced_cocycles(rep: Optional[LoopMonodromyRep] = None) -> Dict[str, ZCocycle]:
    """
    The cocycles r~+, r~- and r~b on the loop group at z = 1/5^5.
    """
    rep = rep or LoopMonodromyRep()
    return {name: ZCocycle(table, rep=rep, name=f'r~{name}') for name, table in reduced_cocycle_tables.items()}


def coboundary_residuals(rep: Optional[LoopMonodromyRep] = None) -> Dict[int, sympy.Matrix]:
    """
    Exact differences r~b(gamma) - (M_gamma - 1) e_3 on every generator where r~b is defined.
    """
    rep = rep or LoopMonodromyRep()
    e3 = sympy.Matrix([0, 0, 1])
    table = reduced_cocycle_tables['b']
    residuals = {}
    for index, value in table.items():
        residuals[index] = sympy.Matrix(value) - (rep.generators[index] - sympy.eye(3)) * e3
    logger.debug(f'Coboundary residuals of r~b: {residuals}')

    return residuals
