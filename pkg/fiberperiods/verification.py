import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .appendix import (appendix_coefficient_check, appendix_identity_check, banana_identity_check, banana_sample,
                       catalog_sample, identity_catalog)
from .cache import CacheStore, cached_forms
from .continuation import (check_symplectic, expected_monodromy, global_period_jets, mixed_period_matrix, monodromy,
                           period_jet)
from .fibering import (FiberPeriods, ScaledPeriods, conifold_parameter, default_base_point, deformation_consistency,
                       independence_base_points, period_one_identity, regular_period_combination,
                       regular_period_identity, residue_identity, sample_parameter, scaled_period_extraction,
                       t0_independence_check, verify_cocycle)
from .hypergeo import HypergeometricOperator
from .lfunction import TwistedLFunction, hecke_magnetic_check, height_relation_check, l_derivative_twist
from .modular import (GammaStar50Element, cm_period_b, contour_shift_check, hauptmodul_relation_check,
                      hecke_eigenform_failures, regularized_c, regularized_d, t50_derivative, t50_derivative_at_cm,
                      tau_minus, tau_plus, theorem1_check)
from .numerics import PrecisionContext
from .qseries import QExpansion

logger = logging.getLogger(__name__)

#: Mixed periods to 39 significant digits as (real part, imaginary part)
reference_mixed_strings = {
    'w+': ('320.871302959778116770497485624017226038', '0'),
    'w-': ('0', '-1536.675109826085372724756354590337175648'),
    'e+': ('-6.893856185212988044137977532235735104', '0'),
    'e-': ('0', '34.947789474177653892854041280741645293'),
    'a+': ('37.397710905400938350547117646682006554', '0'),
    'a-': ('0', '-252.169016964624605484461069839609176011'),
    'b': ('0', '-265.593780202397705806104094596997598070'),
    'd': ('0', '-1.434849336934471921847071711478709892'),
    'c': ('0', '6.128728877854787485401183630654047566'),
}

#: Digits given up by each check: its tolerance is 10^(-target_digits + margin)
tolerance_margins = {
    'periods.paths': 12,
    'monodromy.rounding': 15,
    'mixed.constants': 5,
    'mixed.determinants': 7,
    'mixed.structure': 7,
    'fiber.identity': 10,
    'fiber.cocycle': 15,
    'fiber.base_point': 15,
    'fiber.residue': 15,
    'scaled.periods': 15,
    'scaled.boundary': 20,
    'scaled.alpha_b': 23,
    'theorem1.rounding': 20,
    'theorem1.congruence': 20,
    'theorem2.b': 10,
    'theorem2.regularized': 25,
    'theorem2.contour_shift': 20,
    'modular.hauptmodul': 10,
    'modular.derivative': 10,
    'appendix.catalog': 15,
    'appendix.banana': 17,
    'outlook.height': 25,
}

hauptmodul_samples = 20  #: Sample points of the Hauptmodul relation
sample_seed = 50  #: Seed of the sample point generator
hecke_terms = 500  #: Coefficients of f checked for the eigenform relations
magnetic_terms = 300  #: Coefficients of g50 used by the magnetic check
magnetic_check_primes = (3, 7)
banana_levels = (2, 3, 4)
period_sample = sympy.Rational(1, 2 * 5 ** 5)  #: Default z of the periods check, halfway to the conifold point
theorem1_elements = (GammaStar50Element.identity(), GammaStar50Element.translation(),
                     GammaStar50Element(1, 0, 50, 1), GammaStar50Element(3, 1, 50, 17))


def reference_mixed_periods(ctx: PrecisionContext) -> Dict[str, object]:
    """
    Tabulated mixed periods converted into the given context.
    """
    return {name: ctx.mp.mpc(re, im) if re == '0' else ctx.mp.mpf(re)
            for name, (re, im) in reference_mixed_strings.items()}


@dataclass
class CheckOutcome:
    """
    Values, exact objects and residuals produced by one check.

    :ivar name: Name of the check.
    :ivar values: Numerical results as (value, error_estimate).
    :ivar exact: Exact results (integer matrices, cocycle values, root numbers).
    :ivar residuals: Residuals as (residual, tolerance).
    :ivar conditions: Exact yes/no conditions.
    :ivar elapsed: Wall time in seconds, excluded from report comparisons.
    """
    name: str
    values: Dict[str, Tuple[object, object]] = field(default_factory=dict)
    exact: Dict[str, object] = field(default_factory=dict)
    residuals: Dict[str, Tuple[object, object]] = field(default_factory=dict)
    conditions: Dict[str, bool] = field(default_factory=dict)
    elapsed: float = 0.0

    def add_value(self, label: str, value, error_estimate=0):
        self.values[label] = (value, error_estimate)

    def add_residual(self, label: str, residual, tolerance):
        self.residuals[label] = (residual, tolerance)
        if residual > tolerance:
            logger.warning(f'{self.name}: {label} residual {residual} exceeds {tolerance}')

    def require(self, label: str, condition: bool):
        self.conditions[label] = bool(condition)
        if not condition:
            logger.warning(f'{self.name}: condition {label} violated')

    @property
    def failures(self) -> List[str]:
        return [label for label, (residual, tol) in self.residuals.items() if residual > tol] + \
               [label for label, ok in self.conditions.items() if not ok]

    @property
    def passed(self) -> bool:
        return not self.failures


class VerificationSuite:
    """
    Shared state of a verification run: the precision context and the expensive intermediate objects used by
    several checks (mixed period matrix, q-expansions, loop integrals).

    :ivar ctx: Precision context.
    :ivar use_reference: Take the tabulated mixed periods instead of computing them.
    :ivar store: Cache for the q-expansions.
    :ivar outcomes: Outcomes of the checks run so far, by name.
    """

    def __init__(self, ctx: PrecisionContext, use_reference: bool = False, store: Optional[CacheStore] = None):
        self.ctx = ctx
        self.use_reference = use_reference
        self.store = store or CacheStore()
        self.outcomes: Dict[str, CheckOutcome] = {}
        self._fiber_periods = {}
        self._forms = None

    def tolerance(self, key: str):
        return self.ctx.tolerance(tolerance_margins[key])

    @cached_property
    def mixed(self):
        return mixed_period_matrix(self.ctx)

    @cached_property
    def mixed_constants(self) -> Dict[str, object]:
        if self.use_reference:
            return reference_mixed_periods(self.ctx)
        return self.mixed.constants

    @cached_property
    def scaled(self) -> ScaledPeriods:
        periods = self.fiber_periods(conifold_parameter, independence_base_points[0])
        return scaled_period_extraction(self.ctx, mixed_constants=self.mixed_constants, periods=periods)

    def forms(self, precision: int) -> Dict[str, QExpansion]:
        """
        Exact q-expansions known to at least the given precision, shared between checks.
        """
        if self._forms is None or self._forms['f'].precision < precision:
            self._forms = cached_forms(self.store, max(32, precision))
        return self._forms

    def fiber_periods(self, z=sample_parameter, base_point=default_base_point) -> FiberPeriods:
        key = (sympy.Rational(z), sympy.Rational(base_point))
        if key not in self._fiber_periods:
            self._fiber_periods[key] = FiberPeriods(key[0], self.ctx, base_point=key[1])
        return self._fiber_periods[key]

    def run(self, checks: Sequence['Check']) -> Dict[str, CheckOutcome]:
        """
        Runs the checks in order; numerical aborts propagate and end the run.
        """
        for check in checks:
            logger.info(f'Running {check.name}')
            start = time.perf_counter()
            outcome = check.run()
            outcome.elapsed = time.perf_counter() - start
            self.outcomes[check.name] = outcome
            logger.info(f'{check.name}: {"passed" if outcome.passed else "FAILED"} in {outcome.elapsed:.1f} s')

        return self.outcomes

    @property
    def passed(self) -> bool:
        return all(outcome.passed for outcome in self.outcomes.values())


class Check(ABC):
    """
    One verification of the report.

    :ivar suite: Suite providing context and shared objects.
    :ivar name: Name of the check.
    """
    name = ''

    def __init__(self, suite: VerificationSuite):
        self.suite = suite
        self.ctx = suite.ctx

    def outcome(self) -> CheckOutcome:
        return CheckOutcome(name=self.name)

    @abstractmethod
    def run(self) -> CheckOutcome:
        """
        Performs the computations and fills an outcome.
        """
        pass


class PeriodsCheck(Check):
    """
    Period vector of the quintic at a point between the base point and the conifold: continued along a straight path,
    along a detour through the upper half-plane, and summed directly from the Frobenius basis.
    """
    name = 'periods'

    def __init__(self, suite: VerificationSuite, z=period_sample):
        super(PeriodsCheck, self).__init__(suite)
        self.z = z

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        mp = self.ctx.mp
        z = self.ctx.convert(self.z)
        straight = period_jet(z, self.ctx)
        detour = period_jet(z, self.ctx, path=[z + mp.mpc(0, 1) * z / 2])
        direct = global_period_jets(HypergeometricOperator.quintic(), z, self.ctx)

        scale = mp.mnorm(direct, 1)
        tol = self.suite.tolerance('periods.paths')
        for i in range(straight.rows):
            outcome.add_value(f'Pi_{i + 1}', straight[i, 0], abs(straight[i, 0] - direct[i, 0]))
        outcome.add_residual('continuation vs Frobenius', mp.mnorm(straight - direct, 1) / scale, tol)
        outcome.add_residual('path independence', mp.mnorm(straight - detour, 1) / scale, tol)
        return outcome


class MonodromyCheck(Check):
    name = 'monodromy'

    def __init__(self, suite: VerificationSuite, around: Sequence[str] = ('0', 'conifold')):
        super(MonodromyCheck, self).__init__(suite)
        self.around = tuple(around)

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        op = HypergeometricOperator.quintic()
        computed = {}
        for center in self.around:
            result = monodromy(op, center, self.ctx)
            computed[center] = result.matrix
            outcome.exact[f'M_{center}'] = result.matrix
            outcome.add_residual(f'M_{center} rounding', result.residual, self.suite.tolerance('monodromy.rounding'))
            outcome.require(f'M_{center} symplectic', check_symplectic(result.matrix))
            outcome.require(f'M_{center} expected', result.matrix == expected_monodromy[center])
        if {'0', 'conifold'} <= set(computed):
            outcome.require('deformation consistency', deformation_consistency(computed['0'], computed['conifold']))
        return outcome


class MixedPeriodCheck(Check):
    name = 'mixed-periods'

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        result = self.suite.mixed
        reference = reference_mixed_periods(self.ctx)
        tol = self.suite.tolerance('mixed.constants')
        for label, value in result.constants.items():
            outcome.add_value(label, value, result.error_estimates[label])
            outcome.add_residual(f'{label} vs table', abs(value - reference[label]) / abs(reference[label]), tol)
        for label, residual in result.determinant_residuals.items():
            outcome.add_residual(f'determinant {label}', residual, self.suite.tolerance('mixed.determinants'))
        outcome.add_residual('structure', result.structure_residual, self.suite.tolerance('mixed.structure'))
        return outcome


class FiberIdentityCheck(Check):
    name = 'fiber-identity'

    def __init__(self, suite: VerificationSuite, z=sample_parameter):
        super(FiberIdentityCheck, self).__init__(suite)
        self.z = z

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        periods = self.suite.fiber_periods(self.z)
        for check in (period_one_identity(self.ctx, periods=periods),
                      regular_period_identity(self.ctx, periods=periods)):
            outcome.add_value(check.name, check.lhs, check.error_estimate)
            outcome.add_residual(check.name, check.residual, self.suite.tolerance('fiber.identity'))

        cocycle = verify_cocycle('g2', 'g3', self.z, self.ctx, periods=periods)
        outcome.add_residual(cocycle.name, cocycle.residual, self.suite.tolerance('fiber.cocycle'))
        independence = t0_independence_check(regular_period_combination, self.z, self.ctx)
        outcome.add_residual(independence.name, independence.residual, self.suite.tolerance('fiber.base_point'))
        return outcome


class ScaledPeriodCheck(Check):
    name = 'scaled-periods'

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        periods = self.suite.fiber_periods(conifold_parameter, independence_base_points[0])
        residue = residue_identity(self.ctx, periods=periods)
        outcome.add_residual(residue.name, residue.residual, self.suite.tolerance('fiber.residue'))

        scaled = self.suite.scaled
        for label, value in scaled.as_dict().items():
            outcome.add_value(label, value, scaled.error_estimate)
        for label, residual in scaled.residuals.items():
            outcome.add_residual(f'{label} solve', residual, self.suite.tolerance('scaled.periods'))

        for label, deviation in scaled.deviations.items():
            key = {'omega_b': 'scaled.boundary', 'eta_b': 'scaled.boundary', 'alpha_b': 'scaled.alpha_b'}.get(
                label, 'scaled.periods')
            outcome.add_residual(label, deviation, self.suite.tolerance(key))
        return outcome


class ModularCheck(Check):
    name = 'modular-build'

    def __init__(self, suite: VerificationSuite, samples: int = hauptmodul_samples, terms: int = hecke_terms):
        super(ModularCheck, self).__init__(suite)
        self.samples = samples
        self.terms = terms

    def sample_points(self) -> list:
        rng = np.random.default_rng(sample_seed)
        mp = self.ctx.mp
        return [mp.mpc(float(x), float(y)) for x, y in zip(rng.uniform(-0.5, 0.5, self.samples),
                                                            rng.uniform(0.05, 1.0, self.samples))]

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        relation = hauptmodul_relation_check(self.sample_points(), self.ctx)
        outcome.add_residual(relation.name, relation.residual, self.suite.tolerance('modular.hauptmodul'))

        f = self.suite.forms(self.terms + 1)['f']
        failures = hecke_eigenform_failures(f, self.terms)
        outcome.exact['f coefficients'] = [int(f.coefficient(n)) for n in range(1, 13)]
        outcome.require(f'f is a Hecke eigenform to {self.terms} terms', not failures)

        for sign, point in ((-1, tau_minus), (1, tau_plus)):
            closed = t50_derivative_at_cm(sign, self.ctx)
            numerical = t50_derivative(point, self.ctx)
            label = f"t50'(tau{'+' if sign > 0 else '-'})"
            outcome.add_value(label, closed)
            outcome.add_residual(label, abs(numerical - closed) / abs(closed),
                                 self.suite.tolerance('modular.derivative'))
        return outcome


class CongruenceCheck(Check):
    name = 'theorem1'

    def __init__(self, suite: VerificationSuite, elements: Sequence[GammaStar50Element] = theorem1_elements):
        super(CongruenceCheck, self).__init__(suite)
        self.elements = tuple(elements)

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        alpha_b = self.ctx.mp.re(self.suite.scaled.alpha[2])
        outcome.add_value('alpha_b', alpha_b, self.suite.scaled.error_estimate)
        for gamma in self.elements:
            report = theorem1_check(gamma, self.ctx, self.suite.mixed_constants, alpha_b=alpha_b)
            label = f'({gamma.a}, {gamma.b}, {gamma.c}, {gamma.d})'
            outcome.exact[f'r+ {label}'] = report.r_plus
            outcome.exact[f'r- {label}'] = report.r_minus
            outcome.add_residual(f'rounding {label}', report.rounding_residual,
                                 self.suite.tolerance('theorem1.rounding'))
            outcome.add_residual(f'congruence {label}', report.residual, self.suite.tolerance('theorem1.congruence'))
        return outcome


class CMIntegralCheck(Check):
    name = 'theorem2'

    def __init__(self, suite: VerificationSuite, schedule: Optional[Sequence] = None):
        super(CMIntegralCheck, self).__init__(suite)
        self.schedule = schedule

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        constants = self.suite.mixed_constants
        estimates = {'b': (cm_period_b(self.ctx), 'theorem2.b'),
                     'c': (regularized_c(self.ctx, self.schedule), 'theorem2.regularized'),
                     'd': (regularized_d(self.ctx, self.schedule), 'theorem2.regularized')}
        for label, (estimate, key) in estimates.items():
            outcome.add_value(label, estimate.value, estimate.error_estimate)
            outcome.add_residual(f'{label} vs mixed periods', abs(estimate.value - constants[label]) /
                                 abs(constants[label]), self.suite.tolerance(key))

        shift = contour_shift_check(self.ctx, schedule=self.schedule)
        outcome.exact['contour shift multiple'] = int(shift.rhs)
        outcome.add_residual(shift.name, shift.residual, self.suite.tolerance('theorem2.contour_shift'))
        return outcome


class CatalogCheck(Check):
    name = 'appendix'

    def __init__(self, suite: VerificationSuite, rows: Optional[Sequence[int]] = None, z=catalog_sample,
                 coefficients: int = 20):
        super(CatalogCheck, self).__init__(suite)
        self.rows = [identity_catalog[i] for i in rows] if rows is not None else list(identity_catalog)
        self.z = z
        self.coefficients = coefficients

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        tol = self.suite.tolerance('appendix.catalog')
        for row in self.rows:
            outcome.require(f'{row.label} coefficients', not appendix_coefficient_check(row, self.coefficients))
            check = appendix_identity_check(row, self.z, self.ctx)
            outcome.add_value(row.label, check.lhs, check.error_estimate)
            outcome.add_residual(row.label, check.residual, tol)
        return outcome


class BananaCheck(Check):
    name = 'banana'

    def __init__(self, suite: VerificationSuite, levels: Sequence[int] = banana_levels, z=banana_sample):
        super(BananaCheck, self).__init__(suite)
        self.levels = tuple(levels)
        self.z = z

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        for l in self.levels:
            check = banana_identity_check(l, self.z, self.ctx)
            outcome.add_value(f'l = {l}', check.lhs, check.error_estimate)
            outcome.add_residual(f'l = {l}', check.residual, self.suite.tolerance('appendix.banana'))
        return outcome


class MagneticCheck(Check):
    name = 'hecke-magnetic'

    def __init__(self, suite: VerificationSuite, primes: Sequence[int] = magnetic_check_primes,
                 terms: int = magnetic_terms):
        super(MagneticCheck, self).__init__(suite)
        self.primes = tuple(primes)
        self.terms = terms

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        forms = self.suite.forms(self.terms)
        for p in self.primes:
            report = hecke_magnetic_check(p, self.terms, forms)
            outcome.exact[f'a_{p}'] = report.eigenvalue
            outcome.exact[f'denominator p = {p}'] = report.denominator
            outcome.exact[f'failures p = {p}'] = report.failures
            outcome.require(f'g50|T_{p} - a_{p} g50 magnetic to {report.checked} terms', report.passed)
        return outcome


class HeightRelationCheck(Check):
    name = 'l-relation'

    def run(self) -> CheckOutcome:
        outcome = self.outcome()
        function = TwistedLFunction.from_newform(self.ctx)
        derivative = l_derivative_twist(self.ctx, function=function)
        outcome.exact['root number'] = function.root_number
        outcome.add_value("L'(f x chi, 2)", derivative.value, derivative.error_estimate)

        check = height_relation_check(self.ctx, self.suite.mixed_constants, derivative)
        outcome.add_value('height side', check.lhs, check.error_estimate)
        outcome.add_value('L-function side', check.rhs, check.error_estimate)
        outcome.add_residual(check.name, check.residual, self.suite.tolerance('outlook.height'))
        return outcome


#: Checks aggregated by verify-all, in dependency order
acceptance_checks = (PeriodsCheck, MonodromyCheck, MixedPeriodCheck, FiberIdentityCheck, ScaledPeriodCheck,
                     CMIntegralCheck, CongruenceCheck, ModularCheck, CatalogCheck, BananaCheck, MagneticCheck,
                     HeightRelationCheck)


def verify_all(ctx: PrecisionContext, use_reference: bool = False,
               store: Optional[CacheStore] = None) -> VerificationSuite:
    """
    Runs every acceptance check on a fresh suite.
    """
    suite = VerificationSuite(ctx, use_reference=use_reference, store=store)
    suite.run([cls(suite) for cls in acceptance_checks])
    logger.info(f'verify-all: {"passed" if suite.passed else "FAILED"}')

    return suite
