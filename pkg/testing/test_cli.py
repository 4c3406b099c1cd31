import json

import pytest
import sympy

from fiberperiods import cli
from fiberperiods.cli import (RunConfig, build_report, decimal_string, exact_value, main, parse_args, render_text,
                              run)
from fiberperiods.continuation import expected_monodromy
from fiberperiods.errors import ConfigurationError, StepCollapseError
from fiberperiods.numerics import PrecisionContext
from fiberperiods.verification import Check, tolerance_margins

#: Small precision flags shared by the end-to-end runs
fast = ['--digits', '20', '--bits', str(PrecisionContext.required_bits(20, 64))]


class FailingCheck(Check):
    name = 'failing'

    def run(self):
        outcome = self.outcome()
        outcome.add_residual('too large', self.ctx.mp.mpf(1), self.ctx.tolerance(0))
        return outcome


class AbortingCheck(Check):
    name = 'aborting'

    def run(self):
        raise StepCollapseError('step below precision floor')


def report_of(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_config_rejects_low_precision():
    with pytest.raises(ConfigurationError) as info:
        RunConfig(target_digits=9)
    assert info.value.exit_code == 3


def test_config_rejects_bad_values(tmp_path):
    for options in ({'output_format': 'xml'}, {'rows': (0,)}, {'z': 'abc'}, {'epsilon_ratio': '2'},
                    {'output': str(tmp_path / 'missing' / 'report.json')}):
        with pytest.raises(ConfigurationError):
            RunConfig(**options)


def test_parse_appendix_arguments():
    command, config = parse_args(['appendix', '--row', '1', '--row', '3', '--z', '1e-4', '--digits', '30'])
    assert command == 'appendix'
    assert config.rows == (1, 3)
    assert config.parameter == sympy.Rational(1, 10 ** 4)
    assert config.target_digits == 30
    assert config.output_format == 'json'


def test_parse_defaults():
    command, config = parse_args(['hecke-magnetic'])
    assert command == 'hecke-magnetic'
    assert config.primes == (3, 7)
    assert config.terms is None
    assert config.parameter is None


def test_usage_errors_exit_with_configuration_status(capsys):
    assert main(['unknown-command']) == 3
    assert main(['banana', '--digits', '5']) == 3
    assert main(['periods', '--z', 'not-a-number']) == 3
    assert 'fiberperiods' in capsys.readouterr().err


def test_decimal_strings():
    ctx = PrecisionContext.minimal(20)
    assert decimal_string(sympy.Rational(1, 4), ctx) == '0.25'
    assert decimal_string(ctx.mp.mpc(0, 2), ctx) == '2.0j'
    assert decimal_string(ctx.mp.mpc(1, -2), ctx) == '1.0-2.0j'
    assert decimal_string(ctx.pi, ctx, 5) == '3.1416'


def test_exact_values():
    assert exact_value(sympy.Matrix([[1, sympy.Rational(-1, 2)]])) == [['1', '-1/2']]
    assert exact_value([3, (True, sympy.Rational(2, 3))]) == ['3', [True, '2/3']]


def test_monodromy_command(capsys, tmp_path):
    assert main(['monodromy', '--around', '0', '--cache-dir', str(tmp_path)] + fast) == 0
    report = report_of(capsys)
    check = report['checks']['monodromy']
    assert report['passed'] and check['passed']
    assert check['exact']['M_0'] == exact_value(expected_monodromy['0'])
    assert check['conditions']['M_0 symplectic']
    assert sorted(report['tolerances']) == sorted(tolerance_margins)


def test_appendix_command(capsys, tmp_path):
    assert main(['appendix', '--row', '1', '--z', '1e-4', '--cache-dir', str(tmp_path)] + fast) == 0
    check = report_of(capsys)['checks']['appendix']
    assert len(check['residuals']) == 1
    assert all(entry['passed'] for entry in check['residuals'].values())
    assert all('error_estimate' in entry for entry in check['values'].values())


def test_reports_are_deterministic(tmp_path):
    config = RunConfig(target_digits=20, working_bits=PrecisionContext.required_bits(20, 64), levels=(2,),
                       cache_dir=str(tmp_path))
    first, second = run('banana', config), run('banana', config)
    assert first[0] == second[0] == 0
    first[1].pop('timing')
    second[1].pop('timing')
    assert json.dumps(first[1]) == json.dumps(second[1])


def test_configuration_error_inside_check(tmp_path):
    config = RunConfig(primes=(5,), terms=40, cache_dir=str(tmp_path))
    status, report = run('hecke-magnetic', config)
    assert status == 3
    assert report['error']['type'] == 'ConfigurationError'
    assert not report['passed']


def test_tolerance_failure_and_abort_statuses(monkeypatch, tmp_path):
    config = RunConfig(cache_dir=str(tmp_path))
    monkeypatch.setattr(cli, 'build_checks', lambda command, suite, config: [FailingCheck(suite)])
    status, report = run('periods', config)
    assert status == 2
    assert report['checks']['failing']['failures'] == ['too large']
    assert '>' in render_text(report)

    monkeypatch.setattr(cli, 'build_checks', lambda command, suite, config: [AbortingCheck(suite)])
    status, report = run('periods', config)
    assert status == 4
    assert report['error']['type'] == 'StepCollapseError'


def test_report_without_context():
    report = build_report('periods', None, {}, ConfigurationError('bad bits'))
    assert report['error']['exit_code'] == 3
    assert 'checks' not in report
    assert 'bad bits' in render_text(report)


def test_text_report_written_to_file(tmp_path):
    output = tmp_path / 'report.txt'
    assert main(['banana', '--l', '2', '--format', 'text', '--output', str(output), '--cache-dir', str(tmp_path)]
                + fast) == 0
    text = output.read_text()
    assert text.startswith('banana: passed')
    assert 'l = 2' in text


@pytest.mark.slow
def test_mixed_periods_command(capsys, tmp_path):
    assert main(['mixed-periods', '--digits', '35', '--cache-dir', str(tmp_path)]) == 0
    values = report_of(capsys)['checks']['mixed-periods']['values']
    assert values['w+']['value'].startswith('320.8713029597781167704974856')
    assert values['b']['value'].endswith('j')
