"""
Harmonic model operator at Morse wells.

Each well contributes K_j = -sum g^{ik} d_i d_k + x^T W x + B_j, whose
spectrum is {sum_i (2 n_i + 1) omega_i + beta : beta in spec(B_j)} with
omega_i^2 the eigenvalues of G W. The model operator is the direct sum over
wells; its spectrum does not depend on the coupling mu.
"""
import heapq
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from constants import (
    LEVEL_MERGE_RELATIVE,
    FD_POINTS_1D,
    FD_HALF_WIDTH_1D,
    FD_POINTS_2D,
    FD_HALF_WIDTH_2D,
    HERMITE_BASIS_SIZE,
    METRIC_DETERMINANT_TOLERANCE,
    ErrorCodes,
)
from gap_certificate import GapInterval
from validation import ValidationError, validate_spd, validate_hermitian

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WellSpec:
    """
    Quadratic data at one Morse well

    metric is the inverse metric G at the well, hessian_half is W = Hess V / 2
    for a scalar potential, fiber_endo is the frozen endomorphism B. For a
    matrix-valued potential pass hessian_fiber of shape (n, n, N, N) instead;
    such wells only have the non-exact Hermite spectrum.
    """

    metric: np.ndarray
    hessian_half: np.ndarray = None
    fiber_endo: np.ndarray = None
    hessian_fiber: np.ndarray = None
    label: str = ""
    basis_size: int = HERMITE_BASIS_SIZE

    def __post_init__(self):
        metric = validate_spd(np.atleast_2d(np.asarray(self.metric, dtype=float)), "metric")
        n = metric.shape[0]
        endo = self.fiber_endo
        endo = np.zeros((1, 1)) if endo is None else np.atleast_2d(np.asarray(endo, dtype=complex))
        validate_hermitian(endo, "fiber_endo")
        if self.hessian_fiber is None:
            if self.hessian_half is None:
                raise ValidationError("Well needs hessian_half or hessian_fiber", ErrorCodes.INVALID_WELL)
            hessian = validate_spd(np.atleast_2d(np.asarray(self.hessian_half, dtype=float)), "hessian_half")
            if hessian.shape != metric.shape:
                raise ValidationError("metric and hessian_half must have the same size",
                                      ErrorCodes.DIMENSION_MISMATCH)
            fiber = None
        else:
            fiber = np.asarray(self.hessian_fiber, dtype=complex)
            big_n = endo.shape[0]
            if fiber.shape != (n, n, big_n, big_n):
                raise ValidationError(f"hessian_fiber must have shape ({n}, {n}, {big_n}, {big_n})",
                                      ErrorCodes.DIMENSION_MISMATCH)
            flat = fiber.transpose(0, 2, 1, 3).reshape(n * big_n, n * big_n)
            validate_hermitian(flat, "hessian_fiber")
            if not np.allclose(fiber, fiber.transpose(1, 0, 2, 3)):
                raise ValidationError("hessian_fiber must be symmetric in the coordinate indices",
                                      ErrorCodes.INVALID_MATRIX)
            if np.linalg.eigvalsh(flat).min() <= 0:
                raise ValidationError("hessian_fiber must be positive definite", ErrorCodes.NOT_POSITIVE_DEFINITE)
            hessian = None
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "hessian_half", hessian)
        object.__setattr__(self, "fiber_endo", endo)
        object.__setattr__(self, "hessian_fiber", fiber)

    @property
    def dim(self):
        return self.metric.shape[0]

    @property
    def fiber_dim(self):
        return self.fiber_endo.shape[0]

    @property
    def is_scalar(self):
        return self.hessian_fiber is None

    def operator_hessian(self):
        """W as an (n, n, N, N) array, for both scalar and fiber-valued wells."""
        if self.is_scalar:
            return self.hessian_half[:, :, None, None] * np.eye(self.fiber_dim)[None, None]
        return self.hessian_fiber


@dataclass(frozen=True)
class ModelSpectrum:
    """Levels (value, multiplicity) up to the cutoff."""

    levels: tuple
    cutoff: float
    complete_below: bool
    exact: bool = True

    @property
    def values(self):
        return np.array([v for v, _ in self.levels], dtype=float)

    @property
    def multiplicities(self):
        return np.array([m for _, m in self.levels], dtype=int)

    @property
    def ground(self):
        return self.levels[0][0] if self.levels else None

    def expanded(self):
        """Level values repeated by multiplicity."""
        return np.repeat(self.values, self.multiplicities)

    def to_dict(self):
        return {
            "levels": [{"level": v, "multiplicity": m} for v, m in self.levels],
            "cutoff": self.cutoff,
            "complete_below": self.complete_below,
            "exact": self.exact,
        }


def _sqrtm_spd(matrix):
    values, vectors = np.linalg.eigh(matrix)
    return (vectors * np.sqrt(values)) @ vectors.T


def well_frequencies(w):
    """
    Oscillator frequencies omega_i = sqrt(eig(G W)) of a scalar well

    Args:
        w: WellSpec with a scalar Hessian

    Returns:
        ndarray: n positive frequencies, ascending

    Raises:
        ValidationError: If the well has a fiber-valued Hessian
    """
    if not w.is_scalar:
        raise ValidationError(
            "Closed-form frequencies need a scalar Hessian; use hermite_levels",
            ErrorCodes.INVALID_WELL
        )
    det = np.linalg.det(w.metric)
    if abs(det - 1.0) > METRIC_DETERMINANT_TOLERANCE:
        logger.warning("Well %s: metric determinant %.6g differs from 1", w.label or "?", det)
    squares = scipy.linalg.eigh(w.hessian_half, np.linalg.inv(w.metric), eigvals_only=True)
    return np.sqrt(np.sort(squares))


def _oscillator_energies(omegas, limit):
    """All sum_i (2 n_i + 1) omega_i <= limit, by best-first expansion over multi-indices."""
    omegas = np.asarray(omegas, dtype=float)
    start = (0,) * len(omegas)
    first = float(omegas.sum())
    if first > limit:
        return []
    heap = [(first, start)]
    seen = {start}
    energies = []
    while heap:
        energy, index = heapq.heappop(heap)
        if energy > limit:
            break
        energies.append(energy)
        for i in range(len(index)):
            step = index[:i] + (index[i] + 1,) + index[i + 1:]
            if step not in seen:
                seen.add(step)
                heapq.heappush(heap, (float(np.dot(2 * np.array(step) + 1, omegas)), step))
    return energies


def merge_levels(values, rel_tol=LEVEL_MERGE_RELATIVE):
    """
    Merge sorted values closer than rel_tol * max(1, |value|) into (value, multiplicity)

    The first value of each cluster is kept.
    """
    levels = []
    for value in sorted(float(v) for v in values):
        if levels and value - levels[-1][0] <= rel_tol * max(1.0, abs(levels[-1][0])):
            levels[-1][1] += 1
        else:
            levels.append([value, 1])
    return tuple((v, m) for v, m in levels)


def _inclusive(limit):
    return limit + 1e-12 * max(1.0, abs(limit))


def model_levels(wells, cutoff, rel_tol=LEVEL_MERGE_RELATIVE):
    """
    Spectrum of the model operator below the cutoff

    Args:
        wells: List of WellSpec
        cutoff: Energy Lambda
        rel_tol: Level-merging tolerance

    Returns:
        ModelSpectrum: complete_below is False only when a fiber-valued well's
            Hermite basis cannot resolve everything below the cutoff
    """
    if not np.isfinite(cutoff):
        raise ValidationError("Cutoff must be finite", ErrorCodes.INVALID_INPUT)
    values = []
    complete = True
    exact = True
    for well in wells:
        if well.is_scalar:
            omegas = well_frequencies(well)
            for beta in np.linalg.eigvalsh(well.fiber_endo):
                values.extend(e + beta for e in _oscillator_energies(omegas, _inclusive(cutoff - beta)))
        else:
            approx = hermite_levels(well, cutoff)
            values.extend(approx.expanded())
            complete = complete and approx.complete_below
            exact = False
    levels = merge_levels(values, rel_tol)
    logger.debug("Model spectrum: %d levels below %.6g from %d wells", len(levels), cutoff, len(wells))
    return ModelSpectrum(levels=levels, cutoff=float(cutoff), complete_below=complete, exact=exact)


def model_gaps(s):
    """
    Open intervals between consecutive levels

    Raises:
        ValidationError: If the spectrum is not complete below its cutoff
    """
    if not s.complete_below:
        raise ValidationError("Model spectrum is incomplete below the cutoff", ErrorCodes.INCOMPLETE_SPECTRUM)
    values = s.values
    return [GapInterval(float(a), float(b)) for a, b in zip(values[:-1], values[1:])]


def counting_function(s, lam):
    """
    rank E0(lambda): number of levels <= lambda with multiplicity

    Raises:
        ValidationError: If lambda exceeds the cutoff
    """
    if lam > s.cutoff:
        raise ValidationError(
            f"lambda={lam} exceeds the spectrum cutoff {s.cutoff}",
            ErrorCodes.CUTOFF_EXCEEDED
        )
    if not s.levels:
        return 0
    return int(s.multiplicities[s.values <= lam].sum())


def lowest_levels(w, count):
    """The lowest count eigenvalues of a scalar well, with multiplicity."""
    omegas = well_frequencies(w)
    cutoff = float(omegas.sum()) + float(np.linalg.eigvalsh(w.fiber_endo).min())
    step = 2.0 * float(omegas.min())
    while True:
        spectrum = model_levels([w], cutoff)
        expanded = spectrum.expanded()
        if len(expanded) >= count:
            return expanded[:count]
        cutoff += step


# -- finite-difference oracle ------------------------------------------------

def _minus_second_derivative(points, h):
    """Fourth-order stencil for -d^2/dy^2 with zero boundary values."""
    coeffs = np.array([1 / 12, -4 / 3, 5 / 2, -4 / 3, 1 / 12]) / h ** 2
    return sp.diags(coeffs, [-2, -1, 0, 1, 2], shape=(points, points), format="csr")


def fd_oscillator_levels(w, mu=1.0, count=5, points=None, half_width=None):
    """
    Lowest eigenvalues of mu(-sum g d d) + B + x^T W x / mu by finite differences

    Coordinates are changed by x = G^{1/2} y so the kinetic part is the flat
    Laplacian. The box is scaled with the oscillator length sqrt(mu) w^{-1/4},
    so the discretisation of K(mu) is a rescaled copy of that of K(1).

    Args:
        w: Scalar WellSpec with dim 1 or 2
        mu: Coupling > 0
        count: Number of eigenvalues
        points: Grid points per axis
        half_width: Box half-width in oscillator lengths

    Returns:
        ndarray: count lowest eigenvalues, ascending
    """
    if not w.is_scalar or w.dim not in (1, 2):
        raise ValidationError("The finite-difference oracle handles scalar wells in 1 or 2 dimensions",
                              ErrorCodes.INVALID_WELL)
    if mu <= 0:
        raise ValidationError("mu must be positive", ErrorCodes.INVALID_INPUT)
    root = _sqrtm_spd(w.metric)
    flat = root @ w.hessian_half @ root
    n = w.dim
    if points is None:
        points = FD_POINTS_1D if n == 1 else FD_POINTS_2D
    if half_width is None:
        half_width = FD_HALF_WIDTH_1D if n == 1 else FD_HALF_WIDTH_2D
    length = np.sqrt(mu) * np.linalg.eigvalsh(flat).min() ** -0.25
    grid = np.linspace(-half_width * length, half_width * length, points)
    h = grid[1] - grid[0]
    lap = _minus_second_derivative(points, h)
    if n == 1:
        kinetic = lap
        potential = flat[0, 0] * grid ** 2
    else:
        eye = sp.identity(points, format="csr")
        kinetic = sp.kron(lap, eye) + sp.kron(eye, lap)
        y1, y2 = np.meshgrid(grid, grid, indexing="ij")
        potential = (flat[0, 0] * y1 ** 2 + 2 * flat[0, 1] * y1 * y2 + flat[1, 1] * y2 ** 2).ravel()
    scalar = mu * kinetic + sp.diags(potential / mu)
    big_n = w.fiber_dim
    endo = w.fiber_endo.real if not np.iscomplex(w.fiber_endo).any() else w.fiber_endo
    op = sp.kron(scalar, sp.identity(big_n)) + sp.kron(sp.identity(scalar.shape[0]), sp.csr_matrix(endo))
    op = op.tocsc()
    shift = float(np.linalg.eigvalsh(w.fiber_endo).min()) - 1.0
    start = np.random.default_rng(0).standard_normal(op.shape[0]).astype(op.dtype)
    values = spla.eigsh(op, k=count, sigma=shift, which="LM", v0=start, return_eigenvectors=False)
    return np.sort(values.real)


@dataclass(frozen=True)
class MuInvarianceRow:
    mu: float
    eigenvalues: tuple
    deviation_from_unit: float
    deviation_from_exact: float


@dataclass(frozen=True)
class MuInvarianceReport:
    passed: bool
    tolerance: float
    exact_levels: tuple
    rows: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "exact_levels": list(self.exact_levels),
            "rows": [
                {
                    "mu": r.mu,
                    "eigenvalues": list(r.eigenvalues),
                    "deviation_from_unit": r.deviation_from_unit,
                    "deviation_from_exact": r.deviation_from_exact,
                }
                for r in self.rows
            ],
        }


def mu_invariance_check(w, mus, count=5, tolerance=2e-3, points=None):
    """
    Compare the discretised spectrum of K(mu) with K(1) and the closed form

    Returns:
        MuInvarianceReport: passed when every mu is within tolerance of both
    """
    mus = [float(m) for m in mus]
    if any(m <= 0 for m in mus):
        raise ValidationError("mu values must be positive", ErrorCodes.INVALID_INPUT)
    exact = lowest_levels(w, count)
    unit = fd_oscillator_levels(w, 1.0, count, points)
    rows = []
    for mu in sorted(mus):
        values = unit if mu == 1.0 else fd_oscillator_levels(w, mu, count, points)
        rows.append(MuInvarianceRow(
            mu=mu,
            eigenvalues=tuple(float(v) for v in values),
            deviation_from_unit=float(np.abs(values - unit).max()),
            deviation_from_exact=float(np.abs(values - exact).max()),
        ))
    passed = all(r.deviation_from_unit <= tolerance and r.deviation_from_exact <= tolerance for r in rows)
    return MuInvarianceReport(passed, tolerance, tuple(float(v) for v in exact), tuple(rows))


# -- Hermite-basis fallback --------------------------------------------------

def _axis_operators(s, size):
    """Position y and -d^2/dy^2 in the first size eigenfunctions of -d^2 + s^2 y^2."""
    big = size + 2
    lower = np.diag(np.sqrt(np.arange(1, big)), -1)
    y = (lower + lower.T) / np.sqrt(2.0 * s)
    y2 = y @ y
    kinetic = np.diag(s * (2 * np.arange(big) + 1.0)) - s ** 2 * y2
    return y[:size, :size], y2[:size, :size], kinetic[:size, :size]


def _axis_kron(ops, axis, n):
    result = np.ones((1, 1))
    for a in range(n):
        result = np.kron(result, ops[a] if a == axis else np.eye(ops[a].shape[0]))
    return result


def hermite_levels(w, cutoff, basis_size=None):
    """
    Non-exact spectrum of K_j by truncation to a product Hermite basis

    Levels are trusted up to half the highest basis energy along the stiffest
    axis; complete_below reports whether the cutoff lies in that range.

    Returns:
        ModelSpectrum: exact=False
    """
    size = basis_size or w.basis_size
    n, big_n = w.dim, w.fiber_dim
    root = _sqrtm_spd(w.metric)
    hess = np.einsum("ia,ikxy,kb->abxy", root, w.operator_hessian(), root)
    scales = [np.sqrt(max(np.trace(hess[a, a]).real / big_n, 1e-12)) for a in range(n)]
    axis_ops = [_axis_operators(s, size) for s in scales]
    positions = [_axis_kron([ops[0] for ops in axis_ops], a, n) for a in range(n)]
    dim = size ** n
    matrix = np.zeros((dim * big_n, dim * big_n), dtype=complex)
    for a in range(n):
        matrix += np.kron(_axis_kron([ops[2] for ops in axis_ops], a, n), np.eye(big_n))
        matrix += np.kron(_axis_kron([ops[1] for ops in axis_ops], a, n), hess[a, a])
        for b in range(n):
            if b != a:
                matrix += np.kron(positions[a] @ positions[b], hess[a, b])
    matrix += np.kron(np.eye(dim), w.fiber_endo)
    values = scipy.linalg.eigh(matrix, eigvals_only=True)
    trusted = 0.5 * min(s * (2 * size + 1) for s in scales)
    complete = cutoff <= trusted
    if not complete:
        logger.warning("Hermite basis of size %d resolves levels only up to %.6g < cutoff %.6g",
                       size, trusted, cutoff)
    kept = values[values <= _inclusive(min(cutoff, trusted))]
    return ModelSpectrum(levels=merge_levels(kept), cutoff=float(cutoff), complete_below=complete, exact=False)
