"""
Lattice discretisation of H(mu) = mu nabla_A^* nabla_A + B + V / mu

Sites live on a box of cells (the magnetic cell for Bloch fibers, a larger
torus for translation checks). A hop from site r to r' carries the Peierls
factor exp(i int_r^r' A); a hop that leaves the box through the side a picks
up the magnetic-periodic boundary factor exp(i k.a) exp(-i psi_a(s)), where s
is the wrapped target site. Coordinates are in units of the unit cell.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from joblib import Parallel, delayed

from constants import (
    GAP_MERGE_RELATIVE,
    DEFAULT_GAP_MARGIN,
    RIESZ_NODES,
    RIESZ_TOLERANCE,
    DEFAULT_FHS_GRID,
    DEFAULT_KUBO_GRID,
    DEFAULT_KUBO_RADIUS,
    CHERN_AGREEMENT,
    TRUNCATED_PROJECTION_TOLERANCE,
    ANCHOR_FLUX,
    ANCHOR_FERMI_LEVEL,
    ErrorCodes,
)
from cocycle_pairing import SymplecticData, build_area_cocycle, hall_cocycle, projection_pairing
from gap_certificate import CutoffProfile, GapInterval
from model_operator import WellSpec, model_levels, counting_function
from models import LatticeConfig, PotentialSpec
from twisted_algebra import AlgebraElement, Multiplier
from validation import ValidationError, HypothesisError

logger = logging.getLogger(__name__)


# -- gauge ------------------------------------------------------------------

@dataclass(frozen=True)
class GaugeData:
    """
    Landau gauge for flux theta per unit cell

    "landau-x": A = (0, -b x), psi_gamma(x) = -b gamma_1 x_2
    "landau-y": A = (b y, 0),  psi_gamma(x) =  b gamma_2 x_1
    with b = 2 pi theta, so gamma^*A - A = d psi_gamma and dA = -b.
    """

    dim: int
    flux: Fraction = Fraction(0)
    gauge: str = "landau-x"

    @property
    def strength(self):
        return 2.0 * np.pi * float(self.flux)

    @property
    def field(self):
        """dA as a 2-form coefficient."""
        return -self.strength

    def vector_potential(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        potential = np.zeros_like(points)
        if self.dim == 2:
            if self.gauge == "landau-x":
                potential[:, 1] = -self.strength * points[:, 0]
            else:
                potential[:, 0] = self.strength * points[:, 1]
        return potential

    def link_phase(self, starts, displacement):
        """exp(i int A) along straight links; the midpoint rule is exact for linear A."""
        displacement = np.asarray(displacement, dtype=float)
        middle = np.atleast_2d(starts) + 0.5 * displacement
        return np.exp(1j * (self.vector_potential(middle) @ displacement))

    def psi(self, gammas, points):
        """psi_gamma(x) row by row for gammas and points of shape (M, d)."""
        gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim == 1 or self.flux == 0:
            return np.zeros(max(len(gammas), len(points)))
        if self.gauge == "landau-x":
            return -self.strength * gammas[:, 0] * points[:, 1]
        return self.strength * gammas[:, 1] * points[:, 0]

    def multiplier(self):
        if self.dim == 1:
            return Multiplier.trivial(1)
        return Multiplier.landau(self.flux, self.gauge[-1])

    def sigma_from_psi(self, gamma, other):
        """exp(-i psi_gamma(gamma')) with base point 0."""
        return complex(np.exp(-1j * self.psi(gamma, other)[0]))

    def discrete_curl(self, h, samples=None):
        """
        Circulation of A around grid plaquettes of side h

        Args:
            h: Grid spacing
            samples: Plaquette corners (M, 2); a small default set otherwise

        Returns:
            np.ndarray: Flux per plaquette, to compare with field * h**2
        """
        if self.dim != 2:
            raise ValidationError("Plaquette fluxes need two dimensions", ErrorCodes.DIMENSION_MISMATCH)
        if samples is None:
            samples = np.array([[0.0, 0.0], [0.5, 0.25], [1.75, -3.0], [4.0, 2.5]])
        samples = np.atleast_2d(samples)
        ex, ey = np.array([h, 0.0]), np.array([0.0, h])
        corners = (samples, samples + ex, samples + ex + ey, samples + ey)
        steps = (ex, ey, -ex, -ey)
        circulation = np.zeros(len(samples))
        for start, step in zip(corners, steps):
            circulation += self.vector_potential(start + 0.5 * step) @ step
        return circulation


def gauge_of(config):
    return GaugeData(config.dim, config.flux, config.gauge)


def magnetic_cell(config):
    """Box of unit cells carrying the Bloch fibers."""
    if config.dim == 1:
        return (1,)
    return (config.q, 1) if config.gauge == "landau-x" else (1, config.q)


def _check_box(config, box):
    if len(box) != config.dim:
        raise ValidationError("Box must have one side per dimension", ErrorCodes.DIMENSION_MISMATCH)
    if config.dim == 2 and (box[0] * box[1]) % config.q:
        raise ValidationError(
            f"Box {box} does not carry an integral flux for theta = {config.flux}",
            ErrorCodes.DIMENSION_MISMATCH
        )


# -- assembly ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Stencil:
    """Box hopping pattern without Bloch phases; each entry knows its wrap vector."""

    box: tuple
    shape: tuple
    coordinates: np.ndarray
    onsite: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    shifts: np.ndarray
    endomorphism: np.ndarray

    @property
    def sites(self):
        return len(self.coordinates)

    @property
    def dim(self):
        return self.sites * self.endomorphism.shape[0]

    def matrix(self, k):
        phases = np.exp(1j * (self.shifts @ np.asarray(k, dtype=float)))
        forward = self.values * phases
        s = self.sites
        diag = np.arange(s)
        rows = np.concatenate([self.rows, self.cols, diag])
        cols = np.concatenate([self.cols, self.rows, diag])
        data = np.concatenate([forward, np.conj(forward), self.onsite.astype(complex)])
        scalar = sp.coo_matrix((data, (rows, cols)), shape=(s, s)).tocsr()
        n = self.endomorphism.shape[0]
        if n == 1:
            return (scalar + self.endomorphism[0, 0] * sp.identity(s, format="csr")).tocsr()
        return (sp.kron(scalar, sp.identity(n)) + sp.kron(sp.identity(s), sp.csr_matrix(self.endomorphism))).tocsr()


@lru_cache(maxsize=16)
def _stencil(config, box):
    _check_box(config, box)
    gauge = gauge_of(config)
    m = config.points_per_cell
    d = config.dim
    shape = tuple(b * m for b in box)
    sites = np.indices(shape).reshape(d, -1).T
    coords = sites / m
    if config.scheme == "fd":
        hop = -config.mu * m ** 2
        onsite = 2 * d * config.mu * m ** 2 + config.potential.values(coords) / config.mu
    else:
        hop = -config.mu
        onsite = config.potential.values(coords) / config.mu

    rows, cols, values, shifts = [], [], [], []
    index = np.arange(len(sites))
    for axis in range(d):
        target = sites.copy()
        target[:, axis] += 1
        wraps = target[:, axis] // shape[axis]
        target[:, axis] %= shape[axis]
        step = np.zeros(d)
        step[axis] = 1.0 / m
        a = np.zeros((len(sites), d))
        a[:, axis] = wraps * box[axis]
        link = gauge.link_phase(coords, step)
        boundary = np.exp(-1j * gauge.psi(a, target / m))
        rows.append(index)
        cols.append(np.ravel_multi_index(tuple(target.T), shape))
        values.append(hop * link * boundary)
        shifts.append(a)
    logger.debug("Stencil on box %s: %d sites", box, len(sites))
    return _Stencil(
        box=tuple(box), shape=shape, coordinates=coords, onsite=onsite,
        rows=np.concatenate(rows), cols=np.concatenate(cols),
        values=np.concatenate(values), shifts=np.concatenate(shifts),
        endomorphism=config.endomorphism,
    )


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse Hermitian matrix with site coordinates; fiber index runs fastest."""

    matrix: sp.csr_matrix
    coordinates: np.ndarray
    fiber_dim: int
    k: np.ndarray
    box: tuple

    @property
    def dim(self):
        return self.matrix.shape[0]

    def dense(self):
        return self.matrix.toarray()

    def hermiticity_defect(self):
        difference = self.matrix - self.matrix.conj().T
        return float(abs(difference).max()) if difference.nnz else 0.0

    def eigenvalues(self):
        return scipy.linalg.eigvalsh(self.dense())


def assemble(config, k=None, box=None):
    """
    Bloch fiber H(mu)(k) on the magnetic cell, or on a given box

    Args:
        config: LatticeConfig
        k: Bloch momentum (defaults to 0)
        box: Cells per axis; defaults to the magnetic cell

    Returns:
        DiscreteOperator

    Raises:
        ValidationError: If the box does not carry integral flux
    """
    box = tuple(box) if box is not None else magnetic_cell(config)
    stencil = _stencil(config, box)
    k = np.zeros(config.dim) if k is None else np.asarray(k, dtype=float).reshape(config.dim)
    return DiscreteOperator(stencil.matrix(k), stencil.coordinates, config.fiber_dim, k, stencil.box)


def default_torus(config):
    if config.torus is not None:
        return config.torus
    side = max(2, config.q)
    return (side,) * config.dim


def torus_operator(config, torus=None):
    """H(mu) on a torus of cells with magnetic-periodic boundary conditions."""
    torus = tuple(torus) if torus is not None else default_torus(config)
    if any(t % config.q for t in torus):
        raise ValidationError("Torus sides must be multiples of the flux denominator",
                              ErrorCodes.DIMENSION_MISMATCH)
    return assemble(config, box=torus)


def magnetic_translation(config, gamma, torus=None):
    """
    (T_gamma u)(r) = exp(-i psi_gamma(r - gamma)) u(r - gamma) on the torus

    Args:
        config: LatticeConfig
        gamma: Integer cell displacement
        torus: Cells per axis (multiples of q)

    Returns:
        scipy.sparse.csr_matrix: Unitary on the torus sites (x) fiber

    Raises:
        ValidationError: If gamma is not an integer vector of the right length
    """
    torus = tuple(torus) if torus is not None else default_torus(config)
    gamma = np.asarray(gamma)
    if gamma.shape != (config.dim,) or not np.allclose(gamma, np.round(gamma)):
        raise ValidationError(f"gamma must be an integer {config.dim}-vector", ErrorCodes.DIMENSION_MISMATCH)
    gamma = np.round(gamma).astype(np.int64)
    if any(t % config.q for t in torus):
        raise ValidationError("Torus sides must be multiples of the flux denominator",
                              ErrorCodes.DIMENSION_MISMATCH)
    gauge = gauge_of(config)
    m = config.points_per_cell
    shape = tuple(t * m for t in torus)
    sites = np.indices(shape).reshape(config.dim, -1).T
    source = sites - gamma * m
    wraps = np.floor_divide(source, shape)
    wrapped = source - wraps * np.array(shape)
    a = wraps * np.array(torus)
    phase = np.exp(-1j * gauge.psi(np.broadcast_to(gamma, sites.shape), source / m))
    phase *= np.exp(-1j * gauge.psi(a, wrapped / m))
    cols = np.ravel_multi_index(tuple(wrapped.T), shape)
    n = len(sites)
    scalar = sp.csr_matrix((phase, (np.arange(n), cols)), shape=(n, n))
    return sp.kron(scalar, sp.identity(config.fiber_dim), format="csr")


def magnetic_commutator_phase(config, torus=None):
    """
    Phase of T_1 T_2 T_1^-1 T_2^-1 for the two generators

    Raises:
        HypothesisError: If the commutator is not a multiple of the identity
    """
    if config.dim != 2:
        raise ValidationError("The commutator phase needs two dimensions", ErrorCodes.DIMENSION_MISMATCH)
    t1 = magnetic_translation(config, (1, 0), torus)
    t2 = magnetic_translation(config, (0, 1), torus)
    product = (t1 @ t2 @ t1.conj().T @ t2.conj().T).tocsr()
    phase = complex(product[0, 0])
    defect = abs(product - phase * sp.identity(product.shape[0])).max()
    if defect > 1e-12:
        raise HypothesisError(f"Commutator is not scalar (defect {defect:.3e})", ErrorCodes.INVALID_INPUT)
    return phase


# -- Bloch spectra ----------------------------------------------------------

def brillouin_grid(config, grid=None):
    """k_j = 2 pi i / (n_j P_j), flattened with the first axis slowest."""
    grid = tuple(grid) if grid is not None else tuple(config.kgrid)
    box = magnetic_cell(config)
    axes = [2.0 * np.pi * np.arange(n) / (n * p) for n, p in zip(grid, box)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _lower_bound(config):
    bound = float(np.linalg.eigvalsh(config.endomorphism).min())
    if config.scheme == "tb":
        bound -= 2 * config.dim * config.mu
    return bound - 1.0


def _fiber_eigensystem(config, k, index, count, vectors):
    """Lowest count eigenpairs of one fiber; all of them when count is None."""
    stencil = _stencil(config, magnetic_cell(config))
    matrix = stencil.matrix(k)
    dim = matrix.shape[0]
    if dim <= config.dense_limit:
        dense = matrix.toarray()
        subset = None if count is None or count >= dim else [0, count - 1]
        if vectors:
            values, vecs = scipy.linalg.eigh(dense, subset_by_index=subset)
            return values, vecs, True
        return scipy.linalg.eigh(dense, eigvals_only=True, subset_by_index=subset), None, True

    count = min(count or 16, dim - 2)
    rng = np.random.default_rng([config.seed, index])
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    try:
        values, vecs = spla.eigsh(matrix.tocsc(), k=count, sigma=_lower_bound(config), which="LM",
                                  v0=v0, tol=config.eig_tol)
        converged = True
    except spla.ArpackNoConvergence as exc:
        logger.warning("Eigensolver did not converge at k-point %d (%d of %d pairs)",
                       index, len(exc.eigenvalues), count)
        values, vecs, converged = exc.eigenvalues, exc.eigenvectors, False
    order = np.argsort(values.real)
    values = np.full(count, np.nan) if len(values) == 0 else values.real[order]
    if len(values) < count:
        values = np.concatenate([values, np.full(count - len(values), np.nan)])
    vecs = vecs[:, order] if vectors and vecs is not None and vecs.size else None
    return values, vecs, converged


def _solve_grid(config, kpoints, count, vectors):
    logger.debug("Solving %d fibers of dimension %d", len(kpoints),
                 _stencil(config, magnetic_cell(config)).dim)
    return Parallel(n_jobs=config.threads, prefer="threads")(
        delayed(_fiber_eigensystem)(config, k, i, count, vectors) for i, k in enumerate(kpoints)
    )


def _detect_gaps(energies, reliable_below):
    lows, highs = np.nanmin(energies, axis=0), np.nanmax(energies, axis=0)
    order = np.argsort(lows)
    gaps = []
    top = highs[order[0]]
    for j in order[1:]:
        tol = GAP_MERGE_RELATIVE * max(1.0, abs(top))
        if lows[j] > top + tol and lows[j] <= reliable_below:
            gaps.append(GapInterval(float(top), float(lows[j])))
        top = max(top, highs[j])
    return tuple(gaps)


@dataclass(frozen=True, eq=False)
class BandStructure:
    """
    Fiber eigenvalues over the magnetic Brillouin zone

    energies has shape (K, bands), ascending per row. Gaps are trusted only
    below reliable_below, the lowest value of the highest computed band.
    """

    kpoints: np.ndarray
    energies: np.ndarray
    cells_per_fiber: int
    gaps: tuple
    reliable_below: float
    failed: tuple = ()

    def ids(self, lam):
        """States per unit cell with energy <= lam."""
        lam = np.asarray(lam, dtype=float)
        counts = np.sum(self.energies[None, ...] <= lam.reshape(-1, 1, 1), axis=(1, 2))
        result = counts / (len(self.kpoints) * self.cells_per_fiber)
        return float(result[0]) if lam.ndim == 0 else result

    def band_edges(self):
        return np.stack([np.nanmin(self.energies, axis=0), np.nanmax(self.energies, axis=0)], axis=1)

    def band_centers(self):
        return self.band_edges().mean(axis=1)

    def ids_samples(self, count=200, upper=None):
        upper = min(np.nanmax(self.energies), self.reliable_below) if upper is None else upper
        grid = np.linspace(float(np.nanmin(self.energies)) - 0.5, float(upper), count)
        return grid, self.ids(grid)

    def gap_count_below(self, value):
        return sum(1 for g in self.gaps if g.a < value)


def bloch_spectrum(config, kgrid=None):
    """
    Band structure over the k-grid

    Args:
        config: LatticeConfig; config.bands limits the bands per fiber
        kgrid: Override of config.kgrid

    Returns:
        BandStructure; k-points whose solve did not converge are listed in failed
    """
    kpoints = brillouin_grid(config, kgrid)
    results = _solve_grid(config, kpoints, config.bands, vectors=False)
    energies = np.array([values for values, _, _ in results])
    failed = tuple(i for i, (_, _, ok) in enumerate(results) if not ok)
    dim = _stencil(config, magnetic_cell(config)).dim
    complete = config.bands is None or config.bands >= dim
    reliable = np.inf if complete else float(np.nanmin(energies[:, -1]))
    gaps = _detect_gaps(energies, reliable)
    cells = int(np.prod(magnetic_cell(config)))
    logger.info("Bloch spectrum: %d k-points, %d bands, %d gaps", len(kpoints), energies.shape[1], len(gaps))
    return BandStructure(kpoints, energies, cells, gaps, reliable, failed)


# -- gap emergence ----------------------------------------------------------

def model_wells(config):
    """Harmonic model at each lattice well: G = I, W = Hess V / 2, B-bar = B."""
    if len(config.wells) == 0:
        raise ValidationError("Lattice config declares no wells", ErrorCodes.INVALID_WELL)
    return [
        WellSpec(metric=np.eye(config.dim), hessian_half=config.potential.hessian_half(w),
                 fiber_endo=config.endomorphism, label=f"well {i}")
        for i, w in enumerate(config.wells)
    ]


@dataclass(frozen=True)
class IdsCheck:
    gap: GapInterval
    ids_value: float
    model_count: int

    @property
    def match(self):
        return abs(self.ids_value - self.model_count) < 1e-9


@dataclass(frozen=True, eq=False)
class EmergenceRow:
    mu: float
    detected_gaps: tuple
    model_gaps: tuple
    band_centers: np.ndarray
    model_values: np.ndarray
    level_distances: np.ndarray
    hausdorff: float
    ids_checks: tuple
    bands: BandStructure

    def gap_count_below(self, value):
        return self.bands.gap_count_below(value)

    @property
    def trace_equals_rank(self):
        return all(check.match for check in self.ids_checks)


@dataclass(frozen=True)
class EmergenceSweep:
    rows: tuple
    cutoff: float

    def smallest(self, count=2):
        return sorted(self.rows, key=lambda r: r.mu)[:count]


def _hausdorff(first, second):
    if len(first) == 0 or len(second) == 0:
        return float("inf")
    distances = np.abs(np.asarray(first)[:, None] - np.asarray(second)[None, :])
    return float(max(distances.min(axis=1).max(), distances.min(axis=0).max()))


def gap_emergence_sweep(config, mus, cutoff):
    """
    Detected lattice gaps against the model spectrum for each coupling

    Args:
        config: Template LatticeConfig with wells
        mus: Couplings; processed from largest to smallest
        cutoff: Energy window Lambda

    Returns:
        EmergenceSweep
    """
    wells = model_wells(config)
    model = model_levels(wells, cutoff)
    targets = np.repeat(model.expanded(), int(np.prod(magnetic_cell(config))))
    rows = []
    for mu in sorted(mus, reverse=True):
        bands = bloch_spectrum(config.with_updates(mu=float(mu)))
        centers = bands.band_centers()
        count = min(len(targets), len(centers))
        distances = np.abs(centers[:count] - targets[:count])
        checks = []
        for gap in bands.gaps:
            if gap.midpoint <= cutoff:
                checks.append(IdsCheck(gap, bands.ids(gap.midpoint), counting_function(model, gap.midpoint)))
        row = EmergenceRow(
            mu=float(mu),
            detected_gaps=bands.gaps,
            model_gaps=tuple(GapInterval(float(a), float(b)) for a, b in zip(model.values[:-1], model.values[1:])),
            band_centers=centers[:count],
            model_values=model.values,
            level_distances=distances,
            hausdorff=_hausdorff(centers[:count], model.values),
            ids_checks=tuple(checks),
            bands=bands,
        )
        logger.info("mu=%.4g: %d gaps, Hausdorff %.4g, trace=rank %s",
                    mu, len(bands.gaps), row.hausdorff, row.trace_equals_rank)
        rows.append(row)
    return EmergenceSweep(tuple(rows), float(cutoff))


# -- projections ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralProjection:
    """Per-k occupied eigenvectors (D, r) of the states below the Fermi level."""

    kpoints: np.ndarray
    occupied: tuple
    fermi_level: float
    riesz_defect: float = None

    @property
    def rank(self):
        return self.occupied[0].shape[1] if self.occupied else 0

    def projector(self, index):
        v = self.occupied[index]
        return v @ v.conj().T

    def idempotency_defect(self):
        return max(float(np.abs(p @ p - p).max()) for p in map(self.projector, range(len(self.occupied))))

    def hermiticity_defect(self):
        return max(float(np.abs(p - p.conj().T).max()) for p in map(self.projector, range(len(self.occupied))))

    def grid(self, shape):
        return np.stack(self.occupied).reshape(tuple(shape) + self.occupied[0].shape)


def riesz_projector(matrix, lower, lam, nodes=RIESZ_NODES):
    """(1 / 2 pi i) contour integral of (z - H)^-1 on the circle through lower and lam."""
    center, radius = 0.5 * (lower + lam), 0.5 * (lam - lower)
    angles = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
    identity = np.eye(matrix.shape[0])
    result = np.zeros_like(matrix, dtype=complex)
    for angle in angles:
        offset = radius * np.exp(1j * angle)
        result += offset * np.linalg.solve((center + offset) * identity - matrix, identity)
    return result / nodes


def spectral_projection(config, lam, margin=DEFAULT_GAP_MARGIN, kgrid=None, riesz_check=True):
    """
    Fiberwise projection onto the spectrum below lam

    Args:
        config: LatticeConfig
        lam: Energy in a spectral gap
        margin: Required distance from every computed eigenvalue
        kgrid: Override of config.kgrid
        riesz_check: Compare with a contour-integral projector on the first fiber

    Returns:
        SpectralProjection

    Raises:
        HypothesisError: NOT_IN_GAP if lam is within margin of a band,
            above the trusted window, or the rank varies with k
    """
    kpoints = brillouin_grid(config, kgrid)
    results = _solve_grid(config, kpoints, config.bands, vectors=True)
    top = min(float(values[-1]) for values, _, _ in results)
    dim = _stencil(config, magnetic_cell(config)).dim
    if config.bands is not None and config.bands < dim and lam >= top - margin:
        raise HypothesisError(f"lambda={lam} is above the computed bands", ErrorCodes.NOT_IN_GAP)
    occupied, ranks = [], set()
    for values, vecs, _ in results:
        if np.min(np.abs(values - lam)) < margin:
            raise HypothesisError(f"lambda={lam} lies inside a band", ErrorCodes.NOT_IN_GAP)
        rank = int(np.sum(values < lam))
        ranks.add(rank)
        occupied.append(vecs[:, :rank])
    if len(ranks) != 1:
        raise HypothesisError(f"lambda={lam} lies inside a band (ranks {sorted(ranks)})", ErrorCodes.NOT_IN_GAP)

    defect = None
    if riesz_check and dim <= config.dense_limit:
        matrix = _stencil(config, magnetic_cell(config)).matrix(kpoints[0]).toarray()
        lower = float(results[0][0][0]) - 1.0
        eig = occupied[0] @ occupied[0].conj().T
        defect = float(np.linalg.norm(riesz_projector(matrix, lower, lam) - eig))
        if defect > RIESZ_TOLERANCE:
            logger.warning("Riesz cross-check defect %.3e above %.1e", defect, RIESZ_TOLERANCE)
    return SpectralProjection(kpoints, tuple(occupied), float(lam), defect)


def real_space_projection(config, lam, kgrid=None, radius=None):
    """
    Gap projection as a finitely supported element over the magnetic lattice

    T(gamma) is the inverse discrete Fourier transform of P(k) on the k-grid,
    kept for |gamma_j| <= R_j.

    Returns:
        AlgebraElement with the trivial multiplier (magnetic translations of
        the magnetic cell commute) and fiber the magnetic-cell dimension
    """
    kgrid = tuple(kgrid) if kgrid is not None else (DEFAULT_KUBO_GRID if config.dim == 2 else tuple(config.kgrid))
    radius = tuple(radius) if radius is not None else (DEFAULT_KUBO_RADIUS if config.dim == 2 else (kgrid[0] // 2 - 1,))
    if len(radius) != config.dim or any(2 * r + 1 > n for r, n in zip(radius, kgrid)):
        raise ValidationError(f"Radius {radius} does not fit in the k-grid {kgrid}", ErrorCodes.DIMENSION_MISMATCH)
    projection = spectral_projection(config, lam, kgrid=kgrid, riesz_check=False)
    d = config.dim
    dim = _stencil(config, magnetic_cell(config)).dim
    if projection.rank == 0:
        return AlgebraElement.zero(Multiplier.trivial(d), dim)
    vectors = projection.grid(kgrid)
    blocks = np.einsum("...ir,...jr->...ij", vectors, vectors.conj())
    kernel = np.fft.ifftn(blocks, axes=tuple(range(d)))
    ranges = [np.arange(-r, r + 1) for r in radius]
    gammas = np.stack([g.ravel() for g in np.meshgrid(*ranges, indexing="ij")], axis=1)
    picked = kernel[tuple((gammas % np.array(kgrid)).T)]
    return AlgebraElement.from_arrays(Multiplier.trivial(d), gammas, picked, dim)


# -- Hall conductance -------------------------------------------------------

def _fhs_chern(vectors):
    """Lattice field strength from link variables on an (n1, n2, D, r) grid."""
    if vectors.shape[-1] == 0:
        return 0.0

    def link(axis):
        shifted = np.roll(vectors, -1, axis=axis)
        det = np.linalg.det(np.einsum("abir,abis->abrs", vectors.conj(), shifted))
        return det / np.abs(det)

    u1, u2 = link(0), link(1)
    curvature = np.angle(u1 * np.roll(u2, -1, axis=0) / (np.roll(u1, -1, axis=1) * u2))
    return float(curvature.sum() / (2.0 * np.pi))


def _kubo_raw(projection_element):
    """Re(-2 pi i tr_K(P, P, P)) with xi the identity on the magnetic lattice."""
    if len(projection_element) == 0:
        return 0.0
    value = hall_cocycle(SymplecticData.identity(2))(projection_element, projection_element, projection_element)
    return float((-2j * np.pi * value).real)


def anchor_config():
    """Harper model at flux 1/3: tight binding, V = 0, mu = 1."""
    return LatticeConfig(dim=2, potential=PotentialSpec("zero", 2), scheme="tb", points_per_cell=1,
                         kgrid=DEFAULT_FHS_GRID, mu=1.0, flux=ANCHOR_FLUX, gauge="landau-x")


@lru_cache(maxsize=1)
def calibrate_orientation(tol=CHERN_AGREEMENT):
    """
    Signs that make both Chern methods read +1 on the anchor's lowest gap

    Returns:
        tuple: (sign for the link-variable method, sign for the Kubo trace)

    Raises:
        HypothesisError: CALIBRATION_FAILURE if a magnitude is not 1
    """
    config = anchor_config()
    projection = spectral_projection(config, ANCHOR_FERMI_LEVEL, kgrid=DEFAULT_FHS_GRID, riesz_check=False)
    raw_a = _fhs_chern(projection.grid(DEFAULT_FHS_GRID))
    raw_b = _kubo_raw(real_space_projection(config, ANCHOR_FERMI_LEVEL, DEFAULT_KUBO_GRID, DEFAULT_KUBO_RADIUS))
    for name, raw in (("link-variable", raw_a), ("Kubo", raw_b)):
        if abs(abs(raw) - 1.0) > tol:
            raise HypothesisError(f"{name} calibration read {raw:.6f}, expected magnitude 1",
                                  ErrorCodes.CALIBRATION_FAILURE)
    logger.info("Orientation calibrated: raw values %.6f, %.6f", raw_a, raw_b)
    return int(np.sign(raw_a)), int(np.sign(raw_b))


@dataclass(frozen=True)
class HallResult:
    mu: float
    fermi_level: float
    chern_a: float
    chern_b: float
    tolerance: float = CHERN_AGREEMENT

    @property
    def agree(self):
        return abs(self.chern_a - self.chern_b) < self.tolerance

    @property
    def integral(self):
        return all(abs(c - round(c)) < self.tolerance for c in (self.chern_a, self.chern_b))

    @property
    def chern(self):
        return int(round(self.chern_a))

    def require_agreement(self):
        if not (self.agree and self.integral):
            raise HypothesisError(
                f"Chern methods disagree: {self.chern_a:.6f} vs {self.chern_b:.6f}",
                ErrorCodes.METHODS_DISAGREE
            )
        return self

    def to_dict(self):
        return {
            "mu": self.mu, "lambda": self.fermi_level,
            "chern_a": self.chern_a, "chern_b": self.chern_b, "chern": self.chern,
            "agree": self.agree, "integral": self.integral,
        }


def hall_conductance(config, lam, fhs_grid=DEFAULT_FHS_GRID, kubo_grid=DEFAULT_KUBO_GRID,
                     kubo_radius=DEFAULT_KUBO_RADIUS, tol=CHERN_AGREEMENT):
    """
    Chern number of the gap projection by two independent methods

    Args:
        config: Two-dimensional LatticeConfig
        lam: Fermi level in a gap
        fhs_grid: k-grid for the link-variable method
        kubo_grid, kubo_radius: k-grid and truncation of the real-space kernel
        tol: Agreement and integrality tolerance

    Returns:
        HallResult; disagreement is flagged there and logged, not averaged

    Raises:
        HypothesisError: If lam is not in a gap
    """
    if config.dim != 2:
        raise ValidationError("Hall conductance needs two dimensions", ErrorCodes.DIMENSION_MISMATCH)
    sign_a, sign_b = calibrate_orientation()
    projection = spectral_projection(config, lam, kgrid=fhs_grid, riesz_check=False)
    chern_a = sign_a * _fhs_chern(projection.grid(fhs_grid))
    chern_b = sign_b * _kubo_raw(real_space_projection(config, lam, kubo_grid, kubo_radius))
    result = HallResult(config.mu, float(lam), chern_a, chern_b, tol)
    if not result.agree:
        logger.warning("Chern methods disagree at mu=%.4g: %.6f vs %.6f", config.mu, chern_a, chern_b)
    logger.info("Hall conductance at mu=%.4g, lambda=%.4g: %.6f / %.6f", config.mu, lam, chern_a, chern_b)
    return result


@dataclass(frozen=True)
class GapPairing:
    """Area-cocycle pairing of a truncated gap projection, with its sign calibrated."""

    mu: float
    fermi_level: float
    pairing: float
    chern: float
    idempotency: float
    adjointness: float
    support: int

    def to_dict(self):
        return {
            "mu": self.mu, "lambda": self.fermi_level, "pairing": self.pairing, "chern": self.chern,
            "idempotency": self.idempotency, "adjointness": self.adjointness, "support": self.support,
        }


def gap_projection_pairing(config, lam, kgrid=DEFAULT_KUBO_GRID, radius=DEFAULT_KUBO_RADIUS,
                           tol=TRUNCATED_PROJECTION_TOLERANCE):
    """
    Pair the real-space gap projection with the Z^2 area cocycle

    The projection is truncated to |gamma_j| <= radius_j, so it is a
    projection only up to the truncation defect; tol bounds that defect
    relative to N_0(P). The Kubo calibration sign is applied, so the
    result reads the Chern number of the gap.

    Raises:
        ValidationError: If the lattice is not two-dimensional
        HypothesisError: If lam is not in a gap or the truncation defect exceeds tol
    """
    if config.dim != 2:
        raise ValidationError("Area-cocycle pairing needs two dimensions", ErrorCodes.DIMENSION_MISMATCH)
    _, sign_b = calibrate_orientation()
    p = real_space_projection(config, lam, kgrid, radius)
    result = projection_pairing(build_area_cocycle(SymplecticData.identity(2)), p, tol)
    logger.info("Area pairing at lambda=%.4g: %.6f (||P*P-P|| = %.2e)", lam, result.value, result.idempotency)
    return GapPairing(config.mu, float(lam), result.value, sign_b * result.value,
                      result.idempotency, result.adjointness, len(p))


def subband_chern_numbers(config, grid=DEFAULT_FHS_GRID):
    """
    Link-variable Chern number of every fiber band

    Raises:
        HypothesisError: NOT_IN_GAP if neighbouring bands touch
    """
    sign_a, _ = calibrate_orientation()
    kpoints = brillouin_grid(config, grid)
    results = _solve_grid(config, kpoints, None, vectors=True)
    energies = np.array([values for values, _, _ in results])
    if np.any(energies[:, :-1].max(axis=0) >= energies[:, 1:].min(axis=0)):
        raise HypothesisError("Bands overlap; subband Chern numbers are undefined", ErrorCodes.NOT_IN_GAP)
    vectors = np.stack([vecs for _, vecs, _ in results]).reshape(tuple(grid) + results[0][1].shape)
    return [sign_a * _fhs_chern(vectors[..., j:j + 1]) for j in range(vectors.shape[-1])]


# -- localisation -----------------------------------------------------------

def localization_defect(config, lam, kappa=0.4, cutoff=None):
    """
    ||(1 - J) P|| with J = phi(mu^-kappa dist(x, wells)) and P the projection below lam

    Returns:
        float: Largest fiber value over the k-grid
    """
    cutoff = cutoff or CutoffProfile()
    projection = spectral_projection(config, lam, riesz_check=False)
    coords = _stencil(config, magnetic_cell(config)).coordinates
    offsets = coords[:, None, :] - config.wells[None, :, :]
    offsets -= np.round(offsets)
    distance = np.linalg.norm(offsets, axis=2).min(axis=1)
    j, _ = cutoff.scaled(distance, config.mu, kappa)
    weight = np.repeat(1.0 - j, config.fiber_dim)
    if projection.rank == 0:
        return 0.0
    return max(float(np.linalg.norm(weight[:, None] * v, 2)) for v in projection.occupied)
