"""
Tests for the command line

Exit codes, artifact layout and run-to-run determinism.
"""

import json

import pytest

from cli import main, run
from constants import EXIT_CONFIG_ERROR, EXIT_HYPOTHESIS_FAILURE, EXIT_OK, ErrorCodes
from tests.helpers.test_data import algebra_section, certify_section, model_section, write_config


pytestmark = pytest.mark.integration


def read_json(path):
    return json.loads(path.read_text(encoding='utf-8'))


class TestModelSpectrumCommand:
    """model-spectrum writes the summary and both tables"""

    def test_success(self, tmp_path, tmp_out):
        path = write_config(tmp_path, {'seed': 1, 'model': model_section()})
        assert run(['model-spectrum', '--config', str(path), '--out', str(tmp_out)]) == EXIT_OK
        summary = read_json(tmp_out / 'model_summary.json')
        assert set(summary) == {'service', 'version', 'subcommand', 'success', 'config_hash', 'config', 'results'}
        assert summary['subcommand'] == 'model-spectrum'
        assert summary['success'] is True
        assert summary['config']['seed'] == 1
        assert len(summary['results']['spectrum']['levels']) == 3
        levels = (tmp_out / 'levels.csv').read_text().split('\n')
        assert levels[0] == 'level,multiplicity'
        assert (tmp_out / 'gaps.csv').exists()

    def test_deterministic(self, tmp_path):
        path = write_config(tmp_path, {'seed': 3, 'model': model_section()})
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert run(['model-spectrum', '--config', str(path), '--out', str(first)]) == EXIT_OK
        assert run(['model-spectrum', '--config', str(path), '--out', str(second)]) == EXIT_OK
        for name in ('model_summary.json', 'levels.csv', 'gaps.csv'):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_mu_sweep_not_accepted(self, tmp_path, tmp_out):
        path = write_config(tmp_path, {'model': model_section()})
        code = run(['model-spectrum', '--config', str(path), '--out', str(tmp_out), '--mu-sweep', '1e-1:1e-2'])
        assert code == EXIT_CONFIG_ERROR


class TestConfigErrors:
    """Malformed configs exit with code 2"""

    def test_unknown_key(self, tmp_path, tmp_out, cli_runner):
        path = write_config(tmp_path, {'model': model_section(cutof=5.0)})
        result = cli_runner.invoke(main, ['model-spectrum', '--config', str(path), '--out', str(tmp_out)])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert ErrorCodes.UNKNOWN_KEY in result.output

    def test_missing_file(self, tmp_path, tmp_out):
        assert run(['gap-certify', '--config', str(tmp_path / 'absent.json'), '--out', str(tmp_out)]) \
            == EXIT_CONFIG_ERROR

    def test_missing_section(self, tmp_path, tmp_out):
        path = write_config(tmp_path, {'model': model_section()})
        assert run(['validate-algebra', '--config', str(path), '--out', str(tmp_out)]) == EXIT_CONFIG_ERROR

    def test_missing_config_option(self):
        assert run(['gap-certify']) == EXIT_CONFIG_ERROR

    def test_negative_seed(self, tmp_path, tmp_out):
        path = write_config(tmp_path, {'model': model_section()})
        assert run(['model-spectrum', '--config', str(path), '--out', str(tmp_out), '--seed', '-1']) \
            == EXIT_CONFIG_ERROR


class TestGapCertifyCommand:
    """gap-certify exit codes follow the certificate"""

    def test_certified(self, tmp_path, tmp_out):
        path = write_config(tmp_path, {'certify': certify_section()})
        assert run(['gap-certify', '--config', str(path), '--out', str(tmp_out)]) == EXIT_OK
        summary = read_json(tmp_out / 'certificate.json')
        assert summary['results']['certified'] is True

    def test_refused(self, tmp_path, tmp_out, cli_runner):
        path = write_config(tmp_path, {'certify': certify_section(mu=0.1)})
        result = cli_runner.invoke(main, ['gap-certify', '--config', str(path), '--out', str(tmp_out)])
        assert result.exit_code == EXIT_HYPOTHESIS_FAILURE
        summary = read_json(tmp_out / 'certificate.json')
        assert summary['success'] is False
        assert summary['failure']['code'] == ErrorCodes.CERTIFICATE_FAILURE

    def test_mu_sweep_override(self, tmp_path, tmp_out):
        path = write_config(tmp_path, {'certify': certify_section(mu=0.1)})
        code = run(['gap-certify', '--config', str(path), '--out', str(tmp_out), '--mu-sweep', '1e-1:1e-3'])
        assert code == EXIT_OK
        summary = read_json(tmp_out / 'certificate.json')
        assert 'mu' not in summary['config']['certify']
        assert summary['config']['certify']['mu_list'] == pytest.approx([0.1, 0.01, 0.001])
        assert summary['results']['sweep']['first_certified_mu'] == pytest.approx(0.01)

    def test_hash_ignores_output_dir(self, tmp_path):
        path = write_config(tmp_path, {'certify': certify_section()})
        run(['gap-certify', '--config', str(path), '--out', str(tmp_path / 'a')])
        run(['gap-certify', '--config', str(path), '--out', str(tmp_path / 'b')])
        first = read_json(tmp_path / 'a' / 'certificate.json')
        second = read_json(tmp_path / 'b' / 'certificate.json')
        assert first['config_hash'] == second['config_hash']


class TestValidateAlgebraCommand:
    """validate-algebra is reproducible under a fixed seed"""

    def test_seed_reproducible(self, tmp_path):
        path = write_config(tmp_path, {'algebra': algebra_section()})
        for name in ('a', 'b'):
            assert run(['validate-algebra', '--config', str(path), '--out', str(tmp_path / name),
                        '--seed', '11']) == EXIT_OK
        assert (tmp_path / 'a' / 'algebra_report.json').read_bytes() == \
            (tmp_path / 'b' / 'algebra_report.json').read_bytes()

    def test_seed_changes_hash(self, tmp_path):
        path = write_config(tmp_path, {'algebra': algebra_section()})
        run(['validate-algebra', '--config', str(path), '--out', str(tmp_path / 'a'), '--seed', '1'])
        run(['validate-algebra', '--config', str(path), '--out', str(tmp_path / 'b'), '--seed', '2'])
        assert read_json(tmp_path / 'a' / 'algebra_report.json')['config_hash'] != \
            read_json(tmp_path / 'b' / 'algebra_report.json')['config_hash']
