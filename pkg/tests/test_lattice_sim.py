"""
Tests for lattice_sim.py

Gauge data, assembly on boxes and tori, magnetic translations, Bloch
spectra, gap emergence, spectral projections and localisation.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from constants import ErrorCodes
from lattice_sim import (
    GaugeData,
    assemble,
    bloch_spectrum,
    brillouin_grid,
    gap_emergence_sweep,
    localization_defect,
    magnetic_cell,
    magnetic_commutator_phase,
    magnetic_translation,
    model_wells,
    real_space_projection,
    riesz_projector,
    spectral_projection,
    torus_operator,
)
from models import PotentialSpec
from twisted_algebra import Multiplier, trace_gamma
from validation import ValidationError, HypothesisError
from tests.helpers.assertions import assert_projector
from tests.helpers.test_data import harper_config, lattice_config, sin2_potential


PI = math.pi
SQRT3 = math.sqrt(3.0)
HARPER_EDGES = [[-1 - SQRT3, -2.0], [1 - SQRT3, SQRT3 - 1], [2.0, 1 + SQRT3]]


def torus_spectrum(config, torus):
    return np.linalg.eigvalsh(torus_operator(config, torus).dense())


class TestGaugeData:
    """Test suite for Landau gauges"""

    @pytest.mark.parametrize("gauge", ["landau-x", "landau-y"])
    def test_plaquette_flux(self, gauge):
        data = GaugeData(2, Fraction(1, 3), gauge)
        flux = data.discrete_curl(0.1)
        assert flux == pytest.approx(np.full(len(flux), data.field * 0.01), abs=1e-14)

    @pytest.mark.parametrize("gauge", ["landau-x", "landau-y"])
    def test_psi_matches_multiplier(self, gauge, rng):
        data = GaugeData(2, Fraction(2, 5), gauge)
        sigma = data.multiplier()
        for gamma, other in rng.integers(-4, 5, size=(20, 2, 2)):
            assert data.sigma_from_psi(gamma, other) == pytest.approx(sigma.phase(gamma, other))

    def test_psi_is_translation_defect(self, rng):
        data = GaugeData(2, Fraction(1, 3), "landau-x")
        points = rng.uniform(-2, 2, size=(10, 2))
        gamma = np.array([2.0, -1.0])
        defect = data.vector_potential(points + gamma) - data.vector_potential(points)
        # d psi_gamma is constant for Landau gauges
        assert defect == pytest.approx(np.tile([0.0, -data.strength * gamma[0]], (10, 1)))

    def test_one_dimension_has_no_field(self):
        data = GaugeData(1)
        assert data.multiplier() == Multiplier.trivial(1)
        with pytest.raises(ValidationError) as exc_info:
            data.discrete_curl(0.1)
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH


class TestAssembly:
    """Test suite for fibers and torus operators"""

    def test_magnetic_cell(self):
        assert magnetic_cell(harper_config()) == (3, 1)
        assert magnetic_cell(harper_config(gauge='landau-y')) == (1, 3)
        assert magnetic_cell(lattice_config()) == (1,)

    def test_fiber_is_hermitian(self, rng):
        config = harper_config()
        op = assemble(config, k=rng.uniform(0, 2 * PI, 2))
        assert op.dim == 3
        assert op.hermiticity_defect() < 1e-15

    def test_fd_fiber_dimension(self):
        config = lattice_config(endomorphism=np.diag([0.0, 1.0]))
        op = assemble(config)
        assert op.dim == 64 * 2
        assert op.fiber_dim == 2

    def test_box_needs_integral_flux(self):
        with pytest.raises(ValidationError) as exc_info:
            assemble(harper_config(), box=(2, 2))
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH

    def test_torus_sides(self):
        with pytest.raises(ValidationError) as exc_info:
            torus_operator(harper_config(), (4, 3))
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH

    def test_free_particle_band(self):
        """V = 0, no flux: fiber eigenvalues are 2 mu m^2 (1 - cos((k + 2 pi j)/m))"""
        config = lattice_config(potential=PotentialSpec('zero', 1), wells=None, points_per_cell=16, mu=1.0)
        values = assemble(config, k=[0.3]).eigenvalues()
        expected = np.sort(2 * 16 ** 2 * (1 - np.cos((0.3 + 2 * PI * np.arange(16)) / 16)))
        assert values == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("gauge", ["landau-x", "landau-y"])
    def test_torus_is_union_of_fibers(self, gauge):
        config = harper_config(gauge=gauge)
        torus = (6, 6)
        cell = magnetic_cell(config)
        grid = tuple(t // c for t, c in zip(torus, cell))
        fibers = np.sort(np.concatenate([
            assemble(config, k=k).eigenvalues() for k in brillouin_grid(config, grid)
        ]))
        assert fibers == pytest.approx(torus_spectrum(config, torus), abs=1e-10)

    def test_fd_torus_is_union_of_fibers(self):
        config = lattice_config()
        fibers = np.sort(np.concatenate([
            assemble(config, k=k).eigenvalues() for k in brillouin_grid(config, (3,))
        ]))
        assert fibers == pytest.approx(torus_spectrum(config, (3,)), rel=1e-10, abs=1e-9)

    def test_gauge_choice_keeps_torus_spectrum(self):
        x = torus_spectrum(harper_config(gauge='landau-x'), (6, 6))
        y = torus_spectrum(harper_config(gauge='landau-y'), (6, 6))
        assert x == pytest.approx(y, abs=1e-10)


class TestMagneticTranslations:
    """Test suite for magnetic translations on the torus"""

    @pytest.mark.parametrize("gauge", ["landau-x", "landau-y"])
    def test_commutator_phase(self, gauge):
        phase = magnetic_commutator_phase(harper_config(gauge=gauge), (6, 6))
        assert phase == pytest.approx(np.exp(2j * PI / 3))

    @pytest.mark.parametrize("gamma", [(1, 0), (0, 1), (2, -1)])
    def test_translations_commute_with_hamiltonian(self, gamma):
        config = harper_config()
        h = torus_operator(config, (6, 6)).matrix
        t = magnetic_translation(config, gamma, (6, 6))
        assert abs(h @ t - t @ h).max() < 1e-12

    def test_fd_translations_commute_with_hamiltonian(self):
        config = lattice_config(dim=2, potential=sin2_potential(2), points_per_cell=16,
                                kgrid=(2, 2), wells=[[0.0, 0.0]], flux=Fraction(1, 3))
        h = torus_operator(config, (3, 3)).matrix
        for gamma in [(1, 0), (0, 1)]:
            t = magnetic_translation(config, gamma, (3, 3))
            assert abs(h @ t - t @ h).max() < 1e-9

    def test_translation_is_unitary(self):
        t = magnetic_translation(harper_config(), (1, 2), (6, 6))
        product = (t @ t.conj().T).toarray()
        assert np.abs(product - np.eye(36)).max() < 1e-14

    def test_non_integer_gamma(self):
        with pytest.raises(ValidationError) as exc_info:
            magnetic_translation(harper_config(), (0.5, 0), (6, 6))
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH

    def test_one_dimensional_commutator(self):
        with pytest.raises(ValidationError):
            magnetic_commutator_phase(lattice_config())


class TestBlochSpectrum:
    """Test suite for band structures"""

    @pytest.mark.parametrize("gauge", ["landau-x", "landau-y"])
    def test_harper_bands(self, gauge):
        bands = bloch_spectrum(harper_config(gauge=gauge))
        assert bands.band_edges() == pytest.approx(np.array(HARPER_EDGES), abs=1e-9)
        assert len(bands.gaps) == 2
        assert -1.366 in bands.gaps[0]
        assert bands.reliable_below == math.inf

    def test_harper_ids(self):
        bands = bloch_spectrum(harper_config())
        assert bands.cells_per_fiber == 3
        assert bands.ids(-1.366) == pytest.approx(1 / 3)
        assert bands.ids(1.366) == pytest.approx(2 / 3)
        assert bands.ids(10.0) == pytest.approx(1.0)
        grid, ids = bands.ids_samples(50)
        assert np.all(np.diff(ids) >= 0)

    def test_truncated_bands_limit_gaps(self):
        config = lattice_config(mu=0.02, bands=3)
        bands = bloch_spectrum(config)
        assert bands.energies.shape == (4, 3)
        assert bands.reliable_below < math.inf
        assert all(g.b <= bands.reliable_below for g in bands.gaps)
        assert len(bands.gaps) == 2

    def test_sparse_solver_matches_dense(self):
        dense = bloch_spectrum(lattice_config(mu=0.05, bands=4))
        sparse = bloch_spectrum(lattice_config(mu=0.05, bands=4, dense_limit=32))
        assert sparse.failed == ()
        assert sparse.energies == pytest.approx(dense.energies, abs=1e-7)

    def test_parallel_matches_serial(self):
        serial = bloch_spectrum(harper_config())
        threaded = bloch_spectrum(harper_config(threads=2))
        assert threaded.energies == pytest.approx(serial.energies, abs=1e-14)

    def test_brillouin_grid_order(self):
        kpoints = brillouin_grid(harper_config(), (2, 3))
        assert kpoints.shape == (6, 2)
        assert kpoints[1] == pytest.approx([0.0, 2 * PI / 3])
        assert kpoints[3] == pytest.approx([PI / 3, 0.0])


class TestGapEmergence:
    """Test suite for gap emergence against the model spectrum"""

    @pytest.fixture(scope="class")
    def sweep(self):
        config = lattice_config(points_per_cell=128)
        return gap_emergence_sweep(config, [0.02, 0.1, 0.05], 16.0)

    def test_rows_descend(self, sweep):
        assert [row.mu for row in sweep.rows] == [0.1, 0.05, 0.02]
        assert sweep.smallest(1)[0].mu == 0.02

    def test_levels_match_model(self, sweep):
        row = sweep.smallest(1)[0]
        assert row.model_values == pytest.approx([PI, 3 * PI, 5 * PI])
        assert row.band_centers == pytest.approx(row.model_values, abs=0.15)
        assert row.hausdorff < 0.15

    def test_gaps_open_between_levels(self, sweep):
        row = sweep.smallest(1)[0]
        first, second = row.detected_gaps[:2]
        assert first.a == pytest.approx(PI, abs=0.15)
        assert first.b == pytest.approx(3 * PI, abs=0.15)
        assert second.b == pytest.approx(5 * PI, abs=0.15)

    def test_trace_equals_rank(self, sweep):
        row = sweep.smallest(1)[0]
        assert len(row.ids_checks) == 2
        assert [check.model_count for check in row.ids_checks] == [1, 2]
        assert row.trace_equals_rank

    def test_convergence_in_mu(self, sweep):
        assert sweep.rows[-1].hausdorff < sweep.rows[0].hausdorff

    def test_model_wells(self):
        wells = model_wells(lattice_config())
        assert len(wells) == 1
        assert wells[0].hessian_half == pytest.approx(np.array([[PI ** 2]]))

    def test_no_wells(self):
        with pytest.raises(ValidationError) as exc_info:
            model_wells(lattice_config(wells=None))
        assert exc_info.value.code == ErrorCodes.INVALID_WELL


class TestSpectralProjection:
    """Test suite for gap projections"""

    def test_harper_projection(self):
        projection = spectral_projection(harper_config(), -1.366)
        assert projection.rank == 1
        assert projection.idempotency_defect() < 1e-12
        assert projection.hermiticity_defect() < 1e-14
        assert projection.riesz_defect < 1e-8

    def test_riesz_projector(self, rng):
        a = rng.standard_normal((5, 5))
        h = np.diag([-3.0, -2.0, 1.0, 2.0, 4.0])
        q, _ = np.linalg.qr(a)
        matrix = q @ h @ q.T
        p = riesz_projector(matrix, -4.0, 0.0)
        assert_projector(p, atol=1e-9)
        assert np.trace(p).real == pytest.approx(2.0)

    def test_inside_band(self):
        with pytest.raises(HypothesisError) as exc_info:
            spectral_projection(harper_config(), 0.0)
        assert exc_info.value.code == ErrorCodes.NOT_IN_GAP

    def test_above_computed_bands(self):
        with pytest.raises(HypothesisError) as exc_info:
            spectral_projection(lattice_config(mu=0.02, bands=2), 20.0)
        assert exc_info.value.code == ErrorCodes.NOT_IN_GAP

    def test_real_space_trace_is_density(self):
        element = real_space_projection(harper_config(), -1.366, kgrid=(6, 6), radius=(2, 2))
        assert element.multiplier == Multiplier.trivial(2)
        assert element.fiber_dim == 3
        assert trace_gamma(element).real == pytest.approx(1.0, abs=1e-12)

    def test_radius_must_fit(self):
        with pytest.raises(ValidationError) as exc_info:
            real_space_projection(harper_config(), -1.366, kgrid=(4, 4), radius=(2, 2))
        assert exc_info.value.code == ErrorCodes.DIMENSION_MISMATCH


class TestLocalization:
    """Test suite for localisation of gap projections near wells"""

    def test_defect_decreases_with_mu(self):
        defects = [
            localization_defect(lattice_config(mu=mu, points_per_cell=128, kgrid=(2,)), 2 * PI)
            for mu in (0.05, 0.02, 0.01)
        ]
        assert defects[0] > defects[1] > defects[2]
        assert defects[-1] < 0.1

    def test_empty_projection(self):
        assert localization_defect(lattice_config(mu=0.02), 1.0) == 0.0
