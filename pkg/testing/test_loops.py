import pytest
import sympy

from fiberperiods.errors import ConfigurationError, NonIntegralCocycleError
from fiberperiods.fibering import (deformation_consistency, period_one_word, regular_period_combination,
                                   residue_word)
from fiberperiods.loops import (LoopMonodromyRep, LoopWord, ZCocycle, as_word, base_point_condition,
                                coboundary_residuals, cocycle_direction, k3_w_matrix, reduced_cocycles)


@pytest.fixture(scope='module')
def rep():
    return LoopMonodromyRep()


def test_parse_word():
    word = LoopWord.parse('g4^-1 g6^-1 g2^-1')
    assert word.letters == ((4, -1), (6, -1), (2, -1))
    assert str(word) == 'g4^-1 g6^-1 g2^-1'
    assert LoopWord.parse('g2^2*g7').letters == ((2, 1), (2, 1), (7, 1))


@pytest.mark.parametrize('text', ['h3', 'g3 x', 'g8', 'g0'])
def test_parse_rejects_bad_words(text):
    with pytest.raises(ConfigurationError):
        LoopWord.parse(text)


def test_reduction_and_inverse():
    word = LoopWord.parse('g1 g2 g2^-1 g3')
    assert word.reduced().letters == ((1, 1), (3, 1))
    assert word.reduced().reduced() == word.reduced()
    assert (word * word.inverse()).reduced().letters == ()
    assert str(LoopWord()) == '1'
    assert as_word(5) == LoopWord.generator(5)


def test_involution_and_determinants(rep):
    assert rep.involution_squares_to_one()
    assert k3_w_matrix.det() == 1
    dets = rep.determinants()
    assert dets == {1: 1, 2: -1, 3: -1, 4: -1, 5: -1, 6: 1, 7: -1}


def test_word_matrix_is_multiplicative(rep):
    a, b = as_word('g2 g6^-1'), as_word('g4 g1')
    assert rep.matrix(a * b) == rep.matrix(a) * rep.matrix(b)
    assert rep.matrix(a * a.inverse()) == sympy.eye(3)


def test_gamma_one_is_fifth_power_of_t(rep):
    assert rep.matrix('g1') == sympy.Matrix([[1, 0, 0], [5, 1, 0], [25, 10, 1]])


@pytest.mark.parametrize('index, direction', [(2, (2, -2, 3)), (3, (2, 0, 1)), (4, (2, 2, 3)), (7, (2, 0, 1))])
def test_cocycle_directions(rep, index, direction):
    assert list(cocycle_direction(index, rep)) == list(direction)


def test_direction_needs_reflection(rep):
    with pytest.raises(ConfigurationError):
        cocycle_direction(1, rep)


def test_reduced_b_cocycle_is_coboundary(rep):
    assert all(r == sympy.zeros(3, 1) for r in coboundary_residuals(rep).values())


def test_reduced_cocycles_obey_law(rep):
    cocycles = reduced_cocycles(rep)
    for cocycle in cocycles.values():
        assert cocycle.satisfies_law('g2 g3', 'g4^-1')
        assert cocycle.satisfies_law('g7', 'g5^-1 g1')
        assert cocycle('g3 g3^-1') == sympy.zeros(3, 1)


def test_reduced_cocycle_undefined_on_gamma_six(rep):
    with pytest.raises(ConfigurationError):
        reduced_cocycles(rep)['+']('g6')


def test_non_integral_cocycle_value(rep):
    cocycle = ZCocycle({3: (1, 0, 0)}, rep=rep, name='test')
    with pytest.raises(NonIntegralCocycleError):
        cocycle('g3 g3')


def test_regular_combination_is_base_point_independent(rep):
    terms = [(vector, word) for vector, word in regular_period_combination]
    assert base_point_condition(terms, rep) == sympy.zeros(1, 3)


def test_period_one_word_is_base_point_independent(rep):
    assert base_point_condition([((1, 0, 0), period_one_word)], rep) == sympy.zeros(1, 3)


def test_single_loop_is_not_base_point_independent(rep):
    assert base_point_condition([((1, 0, 0), 'g2')], rep) == sympy.Matrix([[-3, -4, -2]])


def test_residue_loop_has_trivial_monodromy(rep):
    assert rep.matrix(residue_word) == sympy.eye(3)


def test_deformation_consistency():
    assert deformation_consistency()
    assert not deformation_consistency(m_zero=sympy.eye(4))
