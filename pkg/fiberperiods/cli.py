import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from .appendix import banana_sample, catalog_sample, identity_catalog
from .cache import CacheStore
from .errors import ConfigurationError, PeriodsError, ToleranceError
from .fibering import sample_parameter
from .numerics import PrecisionContext
from .utils import cache_env_var, default_target_digits, epsilon_ratio, epsilon_samples, epsilon_start, rational
from .verification import (BananaCheck, CatalogCheck, Check, CheckOutcome, CMIntegralCheck, CongruenceCheck,
                           FiberIdentityCheck, HeightRelationCheck, MagneticCheck, MixedPeriodCheck, ModularCheck,
                           MonodromyCheck, PeriodsCheck, ScaledPeriodCheck, VerificationSuite, acceptance_checks,
                           banana_levels, hauptmodul_samples, hecke_terms, magnetic_check_primes, magnetic_terms,
                           period_sample, tolerance_margins)

logger = logging.getLogger(__name__)

report_schema_version = 1  #: Version of the report layout, bumped on any change of keys
minimum_digits = 10  #: Smallest target precision accepted on the command line
error_digits = 5  #: Significant digits of error estimates, residuals and tolerances in reports
output_formats = ('json', 'text')
commands = ('periods', 'monodromy', 'mixed-periods', 'fiber-identity', 'scaled-periods', 'modular-build', 'theorem1',
            'theorem2', 'appendix', 'banana', 'hecke-magnetic', 'l-relation', 'verify-all')


@dataclass
class RunConfig:
    """
    Settings of one command line run.

    :ivar target_digits: Decimal digits of the reported values.
    :ivar working_bits: Binary working precision, derived from target_digits when None.
    :ivar cache_dir: Directory of the coefficient cache, the environment default when None.
    :ivar output_format: 'json' or 'text'.
    :ivar output: File the report is written to, stdout when None.
    :ivar verbose: Log progress messages.
    :ivar reference_periods: Use the tabulated mixed periods instead of computing them.
    :ivar z: Sample parameter of the command as a rational or decimal string.
    :ivar around: Singular points for the monodromy command.
    :ivar rows: Catalog rows for the appendix command, counted from 1.
    :ivar levels: Banana levels.
    :ivar primes: Primes of the magnetic Hecke check.
    :ivar terms: Number of q-expansion coefficients, the command default when None.
    :ivar samples: Sample points of the Hauptmodul relation.
    :ivar epsilon_start: First regularization parameter.
    :ivar epsilon_ratio: Ratio of the regularization schedule.
    :ivar epsilon_samples: Number of regularization parameters.
    """
    target_digits: int = default_target_digits
    working_bits: Optional[int] = None
    cache_dir: Optional[str] = None
    output_format: str = 'json'
    output: Optional[str] = None
    verbose: bool = False
    reference_periods: bool = False
    z: Optional[str] = None
    around: Tuple[str, ...] = ('0', 'conifold')
    rows: Optional[Tuple[int, ...]] = None
    levels: Tuple[int, ...] = banana_levels
    primes: Tuple[int, ...] = magnetic_check_primes
    terms: Optional[int] = None
    samples: int = hauptmodul_samples
    epsilon_start: str = str(epsilon_start)
    epsilon_ratio: str = str(epsilon_ratio)
    epsilon_samples: int = epsilon_samples

    def __post_init__(self):
        if self.target_digits < minimum_digits:
            raise ConfigurationError(f'at least {minimum_digits} target digits are required, got {self.target_digits}')
        if self.output_format not in output_formats:
            raise ConfigurationError(f'unknown output format {self.output_format}, expected one of {output_formats}')
        if self.output is not None:
            directory = os.path.dirname(os.path.abspath(self.output))
            if not os.path.isdir(directory):
                raise ConfigurationError(f'report directory {directory} does not exist')
        if self.rows is not None and not all(1 <= row <= len(identity_catalog) for row in self.rows):
            raise ConfigurationError(f'catalog rows are numbered 1 to {len(identity_catalog)}, got {list(self.rows)}')
        if self.terms is not None and self.terms < 1:
            raise ConfigurationError(f'number of terms must be positive, got {self.terms}')
        if self.samples < 1 or self.epsilon_samples < 2:
            raise ConfigurationError('at least one sample point and two regularization parameters are required')

        if self.z is not None:
            self._exact('z', self.z)
        start = self._exact('epsilon start', self.epsilon_start)
        ratio = self._exact('epsilon ratio', self.epsilon_ratio)
        if not (0 < start < 1 and 0 < ratio < 1):
            raise ConfigurationError(f'regularization schedule needs 0 < start, ratio < 1, got {start}, {ratio}')

    @staticmethod
    def _exact(name: str, value: str) -> sympy.Rational:
        try:
            return rational(value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f'{name} {value!r} is not a rational or decimal number') from e

    @property
    def parameter(self) -> Optional[sympy.Rational]:
        """
        Exact value of z, None when the command default applies.
        """
        return None if self.z is None else self._exact('z', self.z)

    def context(self) -> PrecisionContext:
        return PrecisionContext(self.target_digits, self.working_bits)

    def schedule(self, ctx: PrecisionContext) -> list:
        return ctx.epsilon_schedule(rational(self.epsilon_start), rational(self.epsilon_ratio), self.epsilon_samples)


def build_checks(command: str, suite: VerificationSuite, config: RunConfig) -> List[Check]:
    """
    Checks performed by a command.

    :param command: One of commands.
    :param suite: Suite the checks run in.
    :param config: Command parameters.
    :return: Checks in execution order.
    """
    z = config.parameter

    def at(default):
        return default if z is None else z

    rows = None if config.rows is None else [row - 1 for row in config.rows]
    factories = {
        'periods': lambda: [PeriodsCheck(suite, at(period_sample))],
        'monodromy': lambda: [MonodromyCheck(suite, config.around)],
        'mixed-periods': lambda: [MixedPeriodCheck(suite)],
        'fiber-identity': lambda: [FiberIdentityCheck(suite, at(sample_parameter))],
        'scaled-periods': lambda: [ScaledPeriodCheck(suite)],
        'modular-build': lambda: [ModularCheck(suite, config.samples, config.terms or hecke_terms)],
        'theorem1': lambda: [CongruenceCheck(suite)],
        'theorem2': lambda: [CMIntegralCheck(suite, config.schedule(suite.ctx))],
        'appendix': lambda: [CatalogCheck(suite, rows, at(catalog_sample))],
        'banana': lambda: [BananaCheck(suite, config.levels, at(banana_sample))],
        'hecke-magnetic': lambda: [MagneticCheck(suite, config.primes, config.terms or magnetic_terms)],
        'l-relation': lambda: [HeightRelationCheck(suite)],
        'verify-all': lambda: [cls(suite) for cls in acceptance_checks],
    }
    if command not in factories:
        raise ConfigurationError(f'unknown command {command}, expected one of {list(commands)}')

    return factories[command]()


def decimal_string(value, ctx: PrecisionContext, digits: Optional[int] = None) -> str:
    """
    Decimal string of a real or complex number, complex values written as 'a+bj'.
    """
    digits = digits or ctx.target_digits
    value = ctx.convert(value)
    if isinstance(value, ctx.mp.mpc):
        re, im = value.real, value.imag
        if im == 0:
            return ctx.nstr(re, digits)
        if re == 0:
            return f'{ctx.nstr(im, digits)}j'
        return f'{ctx.nstr(re, digits)}{"-" if im < 0 else "+"}{ctx.nstr(abs(im), digits)}j'

    return ctx.nstr(value, digits)


def exact_value(value):
    """
    JSON form of exact objects: integers and rationals as strings, matrices and lists as nested lists.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, sympy.MatrixBase):
        return [[str(x) for x in row] for row in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [exact_value(x) for x in value]
    if isinstance(value, dict):
        return {str(k): exact_value(v) for k, v in value.items()}

    return str(value)


def outcome_report(outcome: CheckOutcome, ctx: PrecisionContext) -> dict:
    return {
        'passed': outcome.passed,
        'values': {label: {'value': decimal_string(value, ctx),
                           'error_estimate': decimal_string(error, ctx, error_digits)}
                   for label, (value, error) in outcome.values.items()},
        'exact': {label: exact_value(value) for label, value in outcome.exact.items()},
        'residuals': {label: {'residual': decimal_string(residual, ctx, error_digits),
                              'tolerance': decimal_string(tol, ctx, error_digits),
                              'passed': bool(residual <= tol)}
                      for label, (residual, tol) in outcome.residuals.items()},
        'conditions': dict(outcome.conditions),
        'failures': outcome.failures,
    }


def build_report(command: str, ctx: Optional[PrecisionContext], outcomes: Dict[str, CheckOutcome],
                 error: Optional[PeriodsError] = None) -> dict:
    """
    Report of a run. Apart from the timing field, identical runs give identical reports.
    """
    report = {'schema_version': report_schema_version, 'command': command,
              'passed': error is None and all(outcome.passed for outcome in outcomes.values())}
    if ctx is not None:
        report['target_digits'] = ctx.target_digits
        report['working_bits'] = ctx.working_bits
        report['tolerance_margins'] = dict(tolerance_margins)
        report['tolerances'] = {key: decimal_string(ctx.tolerance(margin), ctx, error_digits)
                                for key, margin in tolerance_margins.items()}
        report['checks'] = {name: outcome_report(outcome, ctx) for name, outcome in outcomes.items()}
    if error is not None:
        report['error'] = {'type': type(error).__name__, 'message': str(error), 'exit_code': error.exit_code}
    report['timing'] = {name: round(outcome.elapsed, 3) for name, outcome in outcomes.items()}

    return report


def run(command: str, config: RunConfig) -> Tuple[int, dict]:
    """
    Runs a command and collects its report.

    :param command: One of commands.
    :param config: Run settings.
    :return: Exit status (0 passed, 2 tolerance failure, 3 configuration error, 4 numerical abort) and report.
    """
    ctx, suite = None, None
    try:
        ctx = config.context()
        suite = VerificationSuite(ctx, use_reference=config.reference_periods, store=CacheStore(config.cache_dir))
        suite.run(build_checks(command, suite, config))
    except PeriodsError as e:
        logger.error(f'{command} aborted: {type(e).__name__}: {e}')
        return e.exit_code, build_report(command, ctx, suite.outcomes if suite else {}, e)

    report = build_report(command, ctx, suite.outcomes)
    if not report['passed']:
        failed = [name for name, outcome in suite.outcomes.items() if not outcome.passed]
        logger.warning(f'{command}: checks {failed} failed')
        return ToleranceError.exit_code, report

    return 0, report


def render_text(report: dict) -> str:
    lines = [f'{report["command"]}: {"passed" if report["passed"] else "FAILED"}']
    if 'target_digits' in report:
        lines[0] += f' ({report["target_digits"]} digits, {report["working_bits"]} bits)'
    for name, check in report.get('checks', {}).items():
        lines.append(f'[{name}] {"passed" if check["passed"] else "FAILED"} in {report["timing"][name]} s')
        for label, entry in check['values'].items():
            lines.append(f'  {label} = {entry["value"]}  (+- {entry["error_estimate"]})')
        for label, value in check['exact'].items():
            lines.append(f'  {label}: {value}')
        for label, entry in check['residuals'].items():
            lines.append(f'  {label}: residual {entry["residual"]} {"<=" if entry["passed"] else ">"} '
                         f'{entry["tolerance"]}')
        for label, ok in check['conditions'].items():
            lines.append(f'  {label}: {"holds" if ok else "VIOLATED"}')
    if 'error' in report:
        lines.append(f'error {report["error"]["type"]}: {report["error"]["message"]}')

    return '\n'.join(lines)


def render(report: dict, output_format: str) -> str:
    if output_format == 'text':
        return render_text(report)
    return json.dumps(report, indent=2)


class ArgumentParser(argparse.ArgumentParser):
    """
    Parser reporting usage errors as configuration errors.
    """

    def error(self, message):
        raise ConfigurationError(f'{self.prog}: {message}')


def build_parser() -> argparse.ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--digits', type=int, default=default_target_digits, help='Target decimal digits.')
    common.add_argument('--bits', type=int, default=None, help='Working precision in bits (default: derived).')
    common.add_argument('--cache-dir', default=None, help=f'Coefficient cache directory (default: ${cache_env_var}).')
    common.add_argument('--format', choices=output_formats, default='json', help='Report format (default: json).')
    common.add_argument('--output', default=None, help='Write the report to this file instead of stdout.')
    common.add_argument('--reference-periods', action='store_true',
                        help='Use the tabulated mixed periods instead of computing them.')
    common.add_argument('-v', '--verbose', action='store_true', help='Log progress.')

    parser = ArgumentParser(prog='fiberperiods',
                            description='High-precision periods of the quintic and the modular forms behind them.')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    def add(name: str, description: str) -> argparse.ArgumentParser:
        return subparsers.add_parser(name, parents=[common], help=description, description=description)

    add('periods', 'Period vector of the quintic, continued and summed directly.').add_argument(
        '--z', default=None, help='Parameter between 0 and 1/5^5 (default: 1/(2*5^5)).')
    add('monodromy', 'Integral monodromy matrices.').add_argument(
        '--around', nargs='+', choices=('0', 'conifold'), default=['0', 'conifold'], help='Singular points.')
    add('mixed-periods', 'Mixed period matrix at the conifold point.')
    add('fiber-identity', 'Fibering identities, cocycle law and base point independence.').add_argument(
        '--z', default=None, help='Parameter (default: 1/5^6).')
    add('scaled-periods', 'Residue identity and scaled periods at the conifold point.')
    modular = add('modular-build', 'Hauptmodul relation, Hecke eigenform and CM derivatives.')
    modular.add_argument('--terms', type=int, default=None, help=f'Coefficients checked (default: {hecke_terms}).')
    modular.add_argument('--samples', type=int, default=hauptmodul_samples, help='Sample points.')
    add('theorem1', 'Cocycle congruences for elements of the modular group.')
    theorem2 = add('theorem2', 'CM integral b, regularized integrals c and d, contour shift.')
    theorem2.add_argument('--epsilon-start', default=str(epsilon_start), help='First regularization parameter.')
    theorem2.add_argument('--epsilon-ratio', default=str(epsilon_ratio), help='Ratio of the schedule.')
    theorem2.add_argument('--epsilon-samples', type=int, default=epsilon_samples, help='Length of the schedule.')
    appendix = add('appendix', 'Catalog of fibering identities.')
    appendix.add_argument('--row', type=int, action='append', dest='rows', help='Catalog row from 1, repeatable.')
    appendix.add_argument('--z', default=None, help='Parameter (default: 1e-4).')
    banana = add('banana', 'Banana identities.')
    banana.add_argument('--l', type=int, action='append', dest='levels', help='Level, repeatable (default: 2 3 4).')
    banana.add_argument('--z', default=None, help='Parameter (default: 1e-3).')
    magnetic = add('hecke-magnetic', 'Magnetic property of g50 under Hecke operators.')
    magnetic.add_argument('--primes', type=int, nargs='+', default=list(magnetic_check_primes), help='Primes.')
    magnetic.add_argument('--terms', type=int, default=None, help=f'Coefficients (default: {magnetic_terms}).')
    add('l-relation', 'Root number, L-derivative of the twisted newform and the height relation.')
    add('verify-all', 'Every acceptance check.')

    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> Tuple[str, RunConfig]:
    args = build_parser().parse_args(argv)
    options = vars(args)

    config = RunConfig(target_digits=args.digits, working_bits=args.bits, cache_dir=args.cache_dir,
                       output_format=args.format, output=args.output, verbose=args.verbose,
                       reference_periods=args.reference_periods, z=options.get('z'),
                       around=tuple(options.get('around') or RunConfig.around),
                       rows=tuple(args.rows) if options.get('rows') else None,
                       levels=tuple(options.get('levels') or banana_levels),
                       primes=tuple(options.get('primes') or magnetic_check_primes), terms=options.get('terms'),
                       samples=options.get('samples', hauptmodul_samples),
                       epsilon_start=options.get('epsilon_start', str(epsilon_start)),
                       epsilon_ratio=options.get('epsilon_ratio', str(epsilon_ratio)),
                       epsilon_samples=options.get('epsilon_samples', epsilon_samples))

    return args.command, config


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        command, config = parse_args(argv)
    except ConfigurationError as e:
        print(e, file=sys.stderr)
        return e.exit_code

    logging.basicConfig(level=logging.INFO if config.verbose else logging.WARNING,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    status, report = run(command, config)
    text = render(report, config.output_format)
    if config.output is None:
        print(text)
    else:
        with open(config.output, 'w', encoding='utf-8') as file:
            file.write(text + '\n')
        logger.info(f'Report written to {config.output}')

    return status


if __name__ == '__main__':
    sys.exit(main())
