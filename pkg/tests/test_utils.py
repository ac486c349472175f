"""
Tests for utils.py

JSON conversion, config hashing, artifact writers and response formatting
"""

import json
from fractions import Fraction

import numpy as np
import pytest

from constants import ErrorCodes
from utils import (
    canonical_json,
    config_hash,
    format_error_response,
    format_success_response,
    to_jsonable,
    write_csv,
    write_json,
)


class TestToJsonable:
    """Test suite for to_jsonable"""

    def test_fraction_and_complex(self):
        assert to_jsonable(Fraction(1, 3)) == "1/3"
        assert to_jsonable(1 + 2j) == [1.0, 2.0]
        assert to_jsonable(np.complex128(-1j)) == [0.0, -1.0]

    def test_numpy_values(self):
        converted = to_jsonable({'n': np.int64(3), 'x': np.float64(0.5), 'ok': np.bool_(True),
                                 'v': np.array([1.0, 2.0])})
        assert converted == {'n': 3, 'x': 0.5, 'ok': True, 'v': [1.0, 2.0]}
        assert type(converted['n']) is int
        assert type(converted['ok']) is bool

    def test_non_finite(self):
        assert to_jsonable([float('inf'), -np.inf, float('nan')]) == ["inf", "-inf", None]

    def test_nested_keys_become_strings(self):
        assert to_jsonable({1: (2, 3)}) == {'1': [2, 3]}


class TestConfigHash:
    """Test suite for the resolved-config digest"""

    def test_key_order_independent(self):
        assert config_hash({'a': 1, 'b': {'c': 2, 'd': 3}}) == config_hash({'b': {'d': 3, 'c': 2}, 'a': 1})

    def test_value_sensitive(self):
        assert config_hash({'seed': 1}) != config_hash({'seed': 2})

    def test_canonical_form(self):
        assert canonical_json({'b': 1, 'a': [1.5]}) == '{"a":[1.5],"b":1}'
        assert len(config_hash({})) == 64


class TestWriters:
    """Test suite for artifact writers"""

    def test_write_json_sorted(self, tmp_path):
        path = tmp_path / 'nested' / 'summary.json'
        write_json(path, {'z': 1, 'a': np.float64(0.25)})
        text = path.read_text()
        assert text.endswith('\n')
        assert text.index('"a"') < text.index('"z"')
        assert json.loads(text) == {'a': 0.25, 'z': 1}

    def test_write_json_deterministic(self, tmp_path):
        payload = {'levels': [np.pi, 3 * np.pi], 'flux': Fraction(1, 3)}
        write_json(tmp_path / 'a.json', payload)
        write_json(tmp_path / 'b.json', payload)
        assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()

    def test_write_csv_repr_floats(self, tmp_path):
        path = tmp_path / 'levels.csv'
        write_csv(path, ['level', 'multiplicity'], [[np.pi, 1], [0.1, np.int64(2)]])
        raw = path.read_bytes()
        assert b'\r\n' not in raw
        lines = raw.decode().split('\n')
        assert lines[0] == 'level,multiplicity'
        assert lines[1] == f'{np.pi!r},1'
        assert lines[2] == '0.1,2'

    def test_write_csv_list_cells(self, tmp_path):
        path = tmp_path / 'gaps.csv'
        write_csv(path, ['k', 'e'], [[[0.0, 0.5], 1.0]])
        assert path.read_text().split('\n')[1] == '"[0.0,0.5]",1.0'


class TestFormatErrorResponse:
    """Test suite for format_error_response function"""

    def test_error_response(self):
        response = format_error_response(ErrorCodes.UNKNOWN_KEY, "Unknown key 'sead'")
        assert response == {
            'success': False,
            'error': "Unknown key 'sead'",
            'error_code': ErrorCodes.UNKNOWN_KEY,
        }


class TestFormatSuccessResponse:
    """Test suite for format_success_response function"""

    def test_success_response(self):
        response = format_success_response({'levels': np.array([np.pi]), 'flux': Fraction(1, 3)})
        assert response['success'] is True
        assert response['results'] == {'levels': [pytest.approx(np.pi)], 'flux': '1/3'}
        json.dumps(response)
