from types import SimpleNamespace

import pytest

from fiberperiods import verification
from fiberperiods.cache import CacheStore
from fiberperiods.continuation import determinant_residuals, mixed_constant_names
from fiberperiods.fibering import residue_lattice
from fiberperiods.modular import CocycleReport
from fiberperiods.numerics import PrecisionContext
from fiberperiods.verification import (BananaCheck, CatalogCheck, CheckOutcome, CongruenceCheck, HeightRelationCheck,
                                       MagneticCheck, ModularCheck, MonodromyCheck, PeriodsCheck, VerificationSuite,
                                       reference_mixed_periods, theorem1_elements, tolerance_margins, verify_all)


@pytest.fixture(scope='module')
def ctx():
    return PrecisionContext.minimal(25)


@pytest.fixture
def suite(ctx, tmp_path):
    return VerificationSuite(ctx, use_reference=True, store=CacheStore(str(tmp_path)))


def test_reference_periods_satisfy_determinant_relations():
    ctx = PrecisionContext.minimal(40)
    constants = reference_mixed_periods(ctx)
    assert sorted(constants) == sorted(mixed_constant_names)
    assert all(residual < 1e-34 for residual in determinant_residuals(constants, ctx).values())


def test_reference_periods_are_real_or_imaginary(ctx):
    constants = reference_mixed_periods(ctx)
    for name in ('w+', 'e+', 'a+'):
        assert ctx.mp.im(constants[name]) == 0
    for name in ('w-', 'e-', 'a-', 'b', 'c', 'd'):
        assert ctx.mp.re(constants[name]) == 0


def test_outcome_collects_failures():
    outcome = CheckOutcome(name='sample')
    outcome.add_residual('small', 1e-30, 1e-20)
    outcome.require('holds', True)
    assert outcome.passed
    outcome.add_residual('large', 1e-10, 1e-20)
    outcome.require('broken', False)
    assert outcome.failures == ['large', 'broken']
    assert not outcome.passed


def test_tolerances_follow_margins(suite, ctx):
    assert suite.tolerance('monodromy.rounding') == ctx.tolerance(tolerance_margins['monodromy.rounding'])
    with pytest.raises(KeyError):
        suite.tolerance('unknown')


def test_periods_check(suite):
    outcome = suite.run([PeriodsCheck(suite)])['periods']
    assert outcome.passed, outcome.failures
    assert sorted(outcome.values) == ['Pi_1', 'Pi_2', 'Pi_3', 'Pi_4']


def test_monodromy_check(suite):
    outcomes = suite.run([MonodromyCheck(suite)])
    outcome = outcomes['monodromy']
    assert outcome.passed, outcome.failures
    assert outcome.exact['M_conifold'][0, 3] == -1
    assert outcome.conditions['deformation consistency']


def test_appendix_and_banana_checks(suite):
    suite.run([CatalogCheck(suite, rows=[0, 9]), BananaCheck(suite, levels=(2,))])
    assert suite.passed
    assert len(suite.outcomes['appendix'].residuals) == 2


def test_modular_check_with_few_terms(suite):
    outcome = suite.run([ModularCheck(suite, samples=4, terms=60)])['modular-build']
    assert outcome.passed, outcome.failures
    coefficients = outcome.exact['f coefficients']
    assert (coefficients[0], coefficients[1], coefficients[3]) == (1, 1, -7)


def test_forms_are_shared_and_grow(suite):
    small = suite.forms(40)
    assert suite.forms(36) is small
    assert suite.forms(80)['f'].precision >= 80


def test_magnetic_check_outcome(suite):
    outcome = suite.run([MagneticCheck(suite, primes=(3,), terms=96)])['hecke-magnetic']
    assert outcome.passed
    assert outcome.exact['failures p = 3'] == []


def test_height_relation_check_outcome(suite):
    outcome = suite.run([HeightRelationCheck(suite)])['l-relation']
    assert outcome.exact['root number'] in (1, -1)
    assert outcome.residuals['height relation'][0] < 1e-10


@pytest.mark.slow
def test_verify_all(tmp_path):
    suite = verify_all(PrecisionContext.minimal(35), store=CacheStore(str(tmp_path)))
    assert suite.passed, {name: outcome.failures for name, outcome in suite.outcomes.items()}


def test_congruence_check_uses_extracted_boundary_period(suite, ctx, monkeypatch):
    alpha_b = residue_lattice(ctx) / 5 + ctx.mp.mpf('1e-3')
    suite.scaled = SimpleNamespace(alpha=(ctx.mp.zero, ctx.mp.zero, ctx.mp.mpc(alpha_b, 0)),
                                   error_estimate=ctx.mp.zero)
    received = []

    def congruence(gamma, ctx, mixed_constants, alpha_b=None):
        received.append(alpha_b)
        return CocycleReport(gamma, [], [0, 0, 0], [0, 0, 0], ctx.mp.zero, ctx.mp.zero, ctx.mp.zero)

    monkeypatch.setattr(verification, 'theorem1_check', congruence)
    outcome = suite.run([CongruenceCheck(suite)])['theorem1']
    assert received == [alpha_b] * len(theorem1_elements)
    assert outcome.values['alpha_b'][0] == alpha_b
    assert any(gamma.a ** 2 % 5 == 4 for gamma in theorem1_elements)
