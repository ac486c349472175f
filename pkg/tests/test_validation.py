"""
Unit tests for validation functions
"""
import json
from fractions import Fraction

import numpy as np
import pytest

from validation import (
    DEFAULT_TOLERANCES,
    HypothesisError,
    RunConfig,
    ValidationError,
    load_config,
    reject_unknown_keys,
    validate_config,
    validate_float,
    validate_flux,
    validate_grid,
    validate_int,
    validate_matrix,
    validate_mu_sweep,
    validate_positive,
    validate_spd,
)
from constants import ErrorCodes


class TestNumberValidation:
    """Tests for scalar validation"""

    def test_valid_int(self):
        assert validate_int(3, 'n', 1) == 3
        assert validate_int(np.int64(4), 'n') == 4

    def test_bool_is_not_int(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_int(True, 'n')
        assert exc_info.value.code == ErrorCodes.INVALID_CONFIG

    def test_int_below_minimum(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_int(0, 'samples', 1)
        assert 'at least 1' in exc_info.value.message

    def test_float_accepts_fraction_strings(self):
        assert validate_float('1/4', 'kappa') == 0.25

    def test_float_rejects_nan_and_text(self):
        with pytest.raises(ValidationError):
            validate_float(float('nan'), 'mu')
        with pytest.raises(ValidationError):
            validate_float('small', 'mu')

    def test_positive_is_strict(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_positive(0.0, 'mu')
        assert 'greater than' in exc_info.value.message


class TestFluxValidation:
    """Tests for rational flux"""

    @pytest.mark.parametrize("value,expected", [
        ('1/3', Fraction(1, 3)),
        (' 2/4 ', Fraction(1, 2)),
        (0, Fraction(0)),
        (Fraction(3, 7), Fraction(3, 7)),
    ])
    def test_rationals(self, value, expected):
        assert validate_flux(value) == expected

    @pytest.mark.parametrize("value", [0.3333, 'pi', '1/0', None, True])
    def test_non_rationals(self, value):
        with pytest.raises(ValidationError) as exc_info:
            validate_flux(value)
        assert exc_info.value.code == ErrorCodes.IRRATIONAL_FLUX


class TestMatrixValidation:
    """Tests for matrix inputs"""

    def test_real_matrix(self):
        matrix = validate_matrix([[1, 0], [0, 2]], 'metric', size=2)
        assert matrix.dtype == float
        assert matrix[1, 1] == 2.0

    def test_complex_entries(self):
        matrix = validate_matrix([[[1, 0], [0, 1]], [[0, -1], [2, 0]]], 'B', allow_complex=True)
        assert matrix[0, 1] == 1j
        assert matrix[1, 0] == -1j

    def test_not_square(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_matrix([[1, 2, 3], [4, 5, 6]], 'metric')
        assert exc_info.value.code == ErrorCodes.INVALID_MATRIX

    def test_wrong_size(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_matrix([[1.0]], 'metric', size=2)
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH

    def test_spd(self):
        validate_spd(np.array([[2.0, 1.0], [1.0, 2.0]]), 'W')
        with pytest.raises(ValidationError) as exc_info:
            validate_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), 'W')
        assert exc_info.value.code == ErrorCodes.NOT_POSITIVE_DEFINITE


class TestGridValidation:
    """Tests for per-axis grids and coupling sweeps"""

    def test_scalar_grid_broadcasts(self):
        assert validate_grid(8, 'kgrid', 2) == (8, 8)

    def test_grid_length(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_grid([4, 4, 4], 'kgrid', 2)
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH

    def test_mu_sweep_one_per_decade(self):
        assert validate_mu_sweep('1e-1:1e-4') == pytest.approx([1e-1, 1e-2, 1e-3, 1e-4])

    def test_mu_sweep_density(self):
        values = validate_mu_sweep('0.1:0.001', points_per_decade=2)
        assert len(values) == 5
        assert values[0] == 0.1
        assert values[-1] == 0.001

    @pytest.mark.parametrize("text", ['0.1', '0:0.1', 'a:b', '0.1:0.01:0.001'])
    def test_mu_sweep_malformed(self, text):
        with pytest.raises(ValidationError) as exc_info:
            validate_mu_sweep(text)
        assert exc_info.value.code == ErrorCodes.INVALID_CONFIG


class TestConfigValidation:
    """Tests for run configuration structure"""

    def test_minimal_config(self):
        config = validate_config({})
        assert config.seed == 0
        assert config.output_dir == 'out'
        assert config.tolerances == DEFAULT_TOLERANCES
        assert config.sections == {}

    def test_unknown_top_level_key(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_config({'sead': 1})
        assert exc_info.value.code == ErrorCodes.UNKNOWN_KEY
        assert 'sead' in exc_info.value.message

    def test_unknown_section_key(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_config({'model': {'cutof': 10}})
        assert exc_info.value.code == ErrorCodes.UNKNOWN_KEY

    def test_tolerance_override(self):
        config = validate_config({'tolerances': {'cocycle': 1e-8}})
        assert config.tolerances['cocycle'] == 1e-8
        assert config.tolerances['phase'] == DEFAULT_TOLERANCES['phase']

    def test_unknown_tolerance(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_config({'tolerances': {'gap': 1e-3}})
        assert exc_info.value.code == ErrorCodes.UNKNOWN_KEY

    def test_missing_section(self):
        with pytest.raises(ValidationError) as exc_info:
            RunConfig().section('hall')
        assert exc_info.value.code == ErrorCodes.INVALID_CONFIG

    def test_resolved_excludes_output_dir(self):
        first = validate_config({'seed': 3, 'output_dir': 'a', 'model': {'cutoff': 5}})
        second = validate_config({'seed': 3, 'output_dir': 'b', 'model': {'cutoff': 5}})
        assert first.resolved() == second.resolved()
        assert 'output_dir' not in first.resolved()
        assert first.resolved()['model'] == {'cutoff': 5}

    def test_reject_non_object(self):
        with pytest.raises(ValidationError) as exc_info:
            reject_unknown_keys([1, 2], {'a'}, 'model')
        assert exc_info.value.code == ErrorCodes.INVALID_CONFIG


class TestLoadConfig:
    """Tests for reading config files"""

    def test_load(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'seed': 7, 'model': {'cutoff': 12}}))
        config = load_config(path)
        assert config.seed == 7
        assert config.section('model')['cutoff'] == 12

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError) as exc_info:
            load_config(tmp_path / 'absent.json')
        assert exc_info.value.code == ErrorCodes.INVALID_CONFIG

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"seed": 1,')
        with pytest.raises(ValidationError) as exc_info:
            load_config(path)
        assert 'not valid JSON' in exc_info.value.message

    def test_example_configs_are_valid(self, config_dir):
        for path in sorted(config_dir.glob('*.json')):
            assert load_config(path).sections, path.name


class TestHypothesisError:
    """HypothesisError is a ValidationError with its own exit path"""

    def test_subclass(self):
        error = HypothesisError('no gap', ErrorCodes.NOT_IN_GAP)
        assert isinstance(error, ValidationError)
        assert error.code == ErrorCodes.NOT_IN_GAP
