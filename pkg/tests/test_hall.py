"""
Tests for the Hall conductance of gap projections

The link-variable method and the Kubo trace must agree and be integral.
Runs that solve many fibers are marked slow.
"""

from fractions import Fraction

import pytest

from constants import PROJECTION_TOLERANCE, TRUNCATED_PROJECTION_TOLERANCE, ErrorCodes
from lattice_sim import (
    HallResult,
    anchor_config,
    calibrate_orientation,
    gap_projection_pairing,
    hall_conductance,
    subband_chern_numbers,
)
from validation import ValidationError, HypothesisError
from tests.helpers.test_data import harper_config, lattice_config, sin2_potential


def morse_config(**overrides):
    """FD lattice with one well per cell and flux 1/3"""
    base = {
        'dim': 2,
        'potential': sin2_potential(2, quartic=False),
        'points_per_cell': 16,
        'kgrid': (4, 4),
        'wells': [[0.0, 0.0]],
        'mu': 0.05,
        'flux': Fraction(1, 3),
        'bands': 12,
    }
    base.update(overrides)
    return lattice_config(**base)


class TestHallResult:
    """Test suite for HallResult"""

    def test_agreement(self):
        result = HallResult(0.1, -1.0, 1.002, 0.998)
        assert result.agree
        assert result.integral
        assert result.chern == 1
        assert result.require_agreement() is result

    def test_disagreement(self):
        result = HallResult(0.1, -1.0, 1.0, 0.0)
        assert not result.agree
        with pytest.raises(HypothesisError) as exc_info:
            result.require_agreement()
        assert exc_info.value.code == ErrorCodes.METHODS_DISAGREE

    def test_non_integral(self):
        result = HallResult(0.1, -1.0, 0.5, 0.5)
        assert result.agree
        assert not result.integral
        with pytest.raises(HypothesisError):
            result.require_agreement()

    def test_to_dict(self):
        record = HallResult(0.1, -1.0, 1.0, 1.0).to_dict()
        assert record['lambda'] == -1.0
        assert record['agree'] is True

    def test_one_dimension_refused(self):
        with pytest.raises(ValidationError) as exc_info:
            hall_conductance(lattice_config(), 6.0)
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH


@pytest.mark.slow
class TestHarperChern:
    """Test suite for the flux 1/3 tight-binding anchor"""

    def test_calibration_signs(self):
        signs = calibrate_orientation()
        assert all(s in (-1, 1) for s in signs)

    def test_lowest_gap(self):
        result = hall_conductance(harper_config(), -1.366)
        assert result.require_agreement().chern == 1

    def test_upper_gap(self):
        result = hall_conductance(harper_config(), 1.366)
        assert result.agree and result.integral
        assert result.chern == -1

    def test_subband_sum_rule(self):
        cherns = subband_chern_numbers(harper_config())
        assert [round(c) for c in cherns] == [1, -2, 1]
        assert sum(cherns) == pytest.approx(0.0, abs=1e-9)

    def test_gap_required(self):
        with pytest.raises(HypothesisError) as exc_info:
            hall_conductance(harper_config(), 0.0)
        assert exc_info.value.code == ErrorCodes.NOT_IN_GAP


@pytest.mark.slow
class TestSemiclassicalChern:
    """Test suite for Chern numbers of gaps opened by deep wells"""

    def test_zero_flux(self):
        config = morse_config(flux=Fraction(0))
        result = hall_conductance(config, 3.0 * 3.141592653589793,
                                  fhs_grid=(12, 12), kubo_grid=(4, 4), kubo_radius=(1, 1))
        assert result.chern_a == pytest.approx(0.0, abs=1e-9)
        assert result.chern_b == pytest.approx(0.0, abs=1e-9)

    def test_morse_gap_is_trivial(self):
        """
        Link-variable method only

        The Kubo trace on a 4x4 grid with radius 1 cuts the kernel far inside
        its decay length, so chern_b is not asserted here; the Harper
        anchor tests cover that method at converged sizes.
        """
        result = hall_conductance(morse_config(), 3.0 * 3.141592653589793,
                                  fhs_grid=(24, 24), kubo_grid=(4, 4), kubo_radius=(1, 1))
        assert result.chern_a == pytest.approx(0.0, abs=1e-6)


@pytest.mark.slow
class TestGapPairing:
    """Area-cocycle pairing of the truncated Harper gap projections"""

    def test_lowest_gap_pairs_to_one(self):
        result = gap_projection_pairing(anchor_config(), -1.366)
        assert result.chern == pytest.approx(1.0, abs=0.01)
        assert abs(result.pairing) == pytest.approx(1.0, abs=0.01)
        assert 0.0 < result.idempotency < TRUNCATED_PROJECTION_TOLERANCE
        assert result.adjointness < 1e-10
        assert result.support > 0

    def test_upper_gap_pairs_to_minus_one(self):
        result = gap_projection_pairing(anchor_config(), 1.366)
        assert result.chern == pytest.approx(-1.0, abs=0.01)

    def test_pairing_matches_kubo_method(self):
        pairing = gap_projection_pairing(anchor_config(), -1.366)
        result = hall_conductance(anchor_config(), -1.366)
        assert pairing.chern == pytest.approx(result.chern_b, abs=1e-9)

    def test_untruncated_tolerance_refuses(self):
        with pytest.raises(HypothesisError) as exc_info:
            gap_projection_pairing(anchor_config(), -1.366, tol=PROJECTION_TOLERANCE)
        assert exc_info.value.code == ErrorCodes.NOT_A_PROJECTION

    def test_to_dict(self):
        record = gap_projection_pairing(anchor_config(), -1.366).to_dict()
        assert set(record) == {'mu', 'lambda', 'pairing', 'chern', 'idempotency', 'adjointness', 'support'}
        assert record['lambda'] == -1.366

    def test_one_dimension_refused(self):
        with pytest.raises(ValidationError) as exc_info:
            gap_projection_pairing(lattice_config(), 6.0)
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH
