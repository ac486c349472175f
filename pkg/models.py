"""
Models and creation functions turning config sections into domain objects
"""
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from constants import (
    MIN_POINTS_PER_CELL,
    DENSE_FIBER_LIMIT,
    EIGEN_TOLERANCE,
    WELL_VALUE_TOLERANCE,
    DEFAULT_KUBO_GRID,
    DEFAULT_KUBO_RADIUS,
    ANCHOR_FLUX,
    ANCHOR_FERMI_LEVEL,
    ErrorCodes,
)
from gap_certificate import CertificateProblem, GapInterval
from model_operator import WellSpec
from twisted_algebra import Multiplier
from validation import (
    ValidationError,
    POTENTIAL_KEYS,
    WELL_KEYS,
    MU_CHECK_KEYS,
    HARPER_KEYS,
    reject_unknown_keys,
    validate_int,
    validate_float,
    validate_positive,
    validate_flux,
    validate_matrix,
    validate_hermitian,
    validate_spd,
    validate_grid,
    validate_mu_sweep,
)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """
    Periodic potential on R^d / Z^d (energy units)

    kinds: "zero"; "trigonometric" with terms (c, (p_1..p_d)) meaning
    c prod_i sin^{2 p_i}(pi x_i); "gaussian_wells" meaning
    depth prod_w (1 - exp(-d_w(x)^2 / (2 s_w^2))) with the periodic distance
    d_w(x)^2 = sum_i sin^2(pi (x_i - c_wi)) / pi^2.
    """

    kind: str
    dim: int
    terms: tuple = ()
    depth: float = 0.0
    centers: np.ndarray = None
    widths: np.ndarray = None

    def values(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "zero":
            return np.zeros(len(points))
        if self.kind == "trigonometric":
            s2 = np.sin(np.pi * points) ** 2
            total = np.zeros(len(points))
            for coeff, powers in self.terms:
                total += coeff * np.prod(s2 ** np.asarray(powers), axis=1)
            return total
        total = np.full(len(points), self.depth)
        for center, width in zip(self.centers, self.widths):
            dist2 = np.sum(np.sin(np.pi * (points - center)) ** 2, axis=1) / np.pi ** 2
            total *= 1.0 - np.exp(-dist2 / (2.0 * width ** 2))
        return total

    def hessian_half(self, point):
        """W = Hess V / 2 at a point."""
        x = np.asarray(point, dtype=float).reshape(self.dim)
        if self.kind == "zero":
            return np.zeros((self.dim, self.dim))
        if self.kind == "trigonometric":
            hess = np.zeros((self.dim, self.dim))
            s, c = np.sin(np.pi * x), np.cos(np.pi * x)
            for coeff, powers in self.terms:
                p = np.asarray(powers, dtype=float)
                u = s ** (2 * p)
                du = np.where(p > 0, 2 * p * np.pi * s ** np.maximum(2 * p - 1, 0) * c, 0.0)
                d2u = np.where(
                    p > 0,
                    2 * p * np.pi ** 2 * ((2 * p - 1) * s ** np.maximum(2 * p - 2, 0) * c ** 2 - s ** (2 * p)),
                    0.0,
                )
                for i in range(self.dim):
                    for j in range(self.dim):
                        others = [u[k] for k in range(self.dim) if k not in (i, j)]
                        rest = math.prod(others)
                        hess[i, j] += coeff * rest * (d2u[i] if i == j else du[i] * du[j])
            return 0.5 * hess
        # Gaussian wells: exact at a well centre, where the product factor vanishes
        for w, center in enumerate(self.centers):
            offset = np.sin(np.pi * (x - center))
            if np.allclose(offset, 0.0, atol=1e-12):
                others = [
                    1.0 - np.exp(-np.sum(np.sin(np.pi * (x - c)) ** 2) / np.pi ** 2 / (2.0 * s ** 2))
                    for v, (c, s) in enumerate(zip(self.centers, self.widths)) if v != w
                ]
                factor = self.depth * math.prod(others) / (2.0 * self.widths[w] ** 2)
                return factor * np.eye(self.dim)
        raise ValidationError("Gaussian-well Hessians are only available at well centres",
                              ErrorCodes.INVALID_WELL)


@dataclass(frozen=True, eq=False)
class LatticeConfig:
    """
    Discretisation of H(mu) = mu nabla_A^* nabla_A + B + V / mu on a cover of R^d / Z^d

    scheme "fd": m points per unit length, second-order differences with
    Peierls phases. scheme "tb": one site per cell with hop -mu (Harper model).
    """

    dim: int
    potential: PotentialSpec
    scheme: str = "fd"
    points_per_cell: int = 32
    kgrid: tuple = (8,)
    wells: np.ndarray = None
    endomorphism: np.ndarray = None
    mu: float = 1.0
    flux: Fraction = Fraction(0)
    gauge: str = "landau-x"
    dense_limit: int = DENSE_FIBER_LIMIT
    eig_tol: float = EIGEN_TOLERANCE
    bands: int = None
    threads: int = 1
    seed: int = 0
    torus: tuple = None
    mu_list: tuple = ()

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError("Lattice dimension must be 1 or 2", ErrorCodes.INVALID_CONFIG)
        if self.scheme not in ("fd", "tb"):
            raise ValidationError(f"Unknown scheme: {self.scheme}", ErrorCodes.INVALID_CONFIG)
        if self.scheme == "fd" and self.points_per_cell < MIN_POINTS_PER_CELL:
            raise ValidationError(
                f"Grid too coarse: {self.points_per_cell} < {MIN_POINTS_PER_CELL} points per cell",
                ErrorCodes.GRID_TOO_COARSE
            )
        if self.scheme == "tb" and self.points_per_cell != 1:
            object.__setattr__(self, "points_per_cell", 1)
        flux = validate_flux(self.flux)
        if self.dim == 1 and flux != 0:
            raise ValidationError("Flux is only defined in two dimensions", ErrorCodes.INVALID_CONFIG)
        object.__setattr__(self, "flux", flux)
        if self.gauge not in ("landau-x", "landau-y"):
            raise ValidationError(f"Unknown gauge: {self.gauge}", ErrorCodes.INVALID_CONFIG)
        if self.mu <= 0:
            raise ValidationError("mu must be positive", ErrorCodes.INVALID_CONFIG)
        if len(self.kgrid) != self.dim:
            raise ValidationError("kgrid must have one entry per dimension", ErrorCodes.DIMENSION_MISMATCH)
        endo = np.zeros((1, 1)) if self.endomorphism is None else np.atleast_2d(np.asarray(self.endomorphism, dtype=complex))
        validate_hermitian(endo, "endomorphism")
        object.__setattr__(self, "endomorphism", endo)
        wells = np.zeros((0, self.dim)) if self.wells is None else np.asarray(self.wells, dtype=float).reshape(-1, self.dim)
        object.__setattr__(self, "wells", wells)
        if self.torus is not None:
            torus = tuple(int(t) for t in self.torus)
            if len(torus) != self.dim or any(t % self.flux.denominator for t in torus):
                raise ValidationError("Torus sides must be multiples of the flux denominator",
                                      ErrorCodes.DIMENSION_MISMATCH)
            object.__setattr__(self, "torus", torus)
        self._check_potential()

    def _check_potential(self):
        m = self.points_per_cell
        axes = [np.arange(m) / m] * self.dim
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        if self.potential.values(grid).min() < -WELL_VALUE_TOLERANCE:
            raise ValidationError("Potential must be non-negative on the grid", ErrorCodes.INVALID_CONFIG)
        for well in self.wells:
            if not np.allclose(well * m, np.round(well * m), atol=1e-9):
                raise ValidationError(f"Well {well.tolist()} is not a grid point", ErrorCodes.INVALID_WELL)
            if abs(self.potential.values(well)[0]) > WELL_VALUE_TOLERANCE:
                raise ValidationError(f"Potential does not vanish at well {well.tolist()}", ErrorCodes.INVALID_WELL)
            validate_spd(self.potential.hessian_half(well), "potential Hessian at well")

    @property
    def q(self):
        return self.flux.denominator

    @property
    def fiber_dim(self):
        return self.endomorphism.shape[0]

    def with_updates(self, **changes):
        return replace(self, **changes)


def create_multiplier(section):
    """
    Build a Multiplier from an algebra/cocycle section

    Keys: rank (default 2), form in {"trivial", "antisymmetric", "landau-x",
    "landau-y", "matrix"}, flux ("p/q"), flux_matrix (rows of "p/q").
    """
    rank = validate_int(section.get("rank", 2), "rank", 1)
    form = section.get("form", "antisymmetric" if "flux" in section else "trivial")
    if form == "trivial":
        return Multiplier.trivial(rank)
    if form == "matrix":
        rows = section.get("flux_matrix")
        if not isinstance(rows, list) or len(rows) != rank:
            raise ValidationError(f"flux_matrix must have {rank} rows", ErrorCodes.INVALID_MATRIX)
        return Multiplier(tuple(tuple(validate_flux(x, "flux_matrix") for x in row) for row in rows))
    if rank != 2:
        raise ValidationError(f"form '{form}' needs rank 2", ErrorCodes.DIMENSION_MISMATCH)
    flux = validate_flux(section.get("flux", "0"))
    if form == "antisymmetric":
        return Multiplier.antisymmetric(flux)
    if form in ("landau-x", "landau-y"):
        return Multiplier.landau(flux, form[-1])
    raise ValidationError(f"Unknown multiplier form: {form}", ErrorCodes.INVALID_CONFIG)


def create_well(entry):
    """Build a WellSpec from a config entry (matrices row-major)"""
    reject_unknown_keys(entry, WELL_KEYS, "well")
    metric = validate_matrix(entry.get("metric"), "metric")
    n = metric.shape[0]
    endo = entry.get("fiber_endo")
    endo = validate_matrix(endo, "fiber_endo", allow_complex=True) if endo is not None else None
    fiber = entry.get("hessian_fiber")
    hessian = entry.get("hessian_half")
    if fiber is not None:
        big_n = endo.shape[0] if endo is not None else 1
        fiber = np.array([[validate_matrix(block, "hessian_fiber", big_n, True) for block in row] for row in fiber])
        hessian = None
    elif hessian is not None:
        hessian = validate_matrix(hessian, "hessian_half", n)
    basis = validate_int(entry.get("basis_size", 40), "basis_size", 4)
    return WellSpec(metric=metric, hessian_half=hessian, fiber_endo=endo, hessian_fiber=fiber,
                    label=str(entry.get("label", "")), basis_size=basis)


def create_wells(entries):
    if not isinstance(entries, list) or not entries:
        raise ValidationError("wells must be a non-empty list", ErrorCodes.INVALID_CONFIG)
    return [create_well(entry) for entry in entries]


@dataclass(frozen=True)
class ModelSettings:
    wells: list
    cutoff: float
    mu_check: dict = field(default=None)
    fd_count: int = 5


def create_model_settings(section):
    wells = create_wells(section.get("wells"))
    cutoff = validate_float(section.get("cutoff"), "cutoff")
    mu_check = section.get("mu_check")
    if mu_check is not None:
        reject_unknown_keys(mu_check, MU_CHECK_KEYS, "mu_check")
        mu_check = {
            "mus": [validate_positive(m, "mu_check.mus") for m in mu_check.get("mus", [0.5, 1.0, 2.0])],
            "count": validate_int(mu_check.get("count", 5), "mu_check.count", 1),
            "tolerance": validate_positive(mu_check.get("tolerance", 2e-3), "mu_check.tolerance"),
        }
    return ModelSettings(wells, cutoff, mu_check, validate_int(section.get("fd_count", 5), "fd_count", 1))


def create_potential(section, dim):
    """Build a PotentialSpec from a config section"""
    if section is None:
        return PotentialSpec("zero", dim)
    kind = section.get("kind") if isinstance(section, dict) else None
    if kind not in POTENTIAL_KEYS:
        raise ValidationError(f"Unknown potential kind: {kind}", ErrorCodes.INVALID_CONFIG)
    reject_unknown_keys(section, POTENTIAL_KEYS[kind], "potential")
    if kind == "zero":
        return PotentialSpec("zero", dim)
    if kind == "trigonometric":
        terms = []
        for term in section.get("terms", []):
            reject_unknown_keys(term, {"coefficient", "powers"}, "potential term")
            coeff = validate_float(term.get("coefficient"), "coefficient", minimum=0.0)
            powers = validate_grid(term.get("powers"), "powers", dim, minimum=0)
            terms.append((coeff, powers))
        return PotentialSpec("trigonometric", dim, terms=tuple(terms))
    centers = np.asarray(section.get("centers"), dtype=float).reshape(-1, dim)
    widths = np.array([validate_positive(w, "widths") for w in section.get("widths", [])])
    if len(widths) != len(centers):
        raise ValidationError("centers and widths must have equal length", ErrorCodes.DIMENSION_MISMATCH)
    depth = validate_positive(section.get("depth"), "depth")
    return PotentialSpec("gaussian_wells", dim, depth=depth, centers=centers, widths=widths)


def resolve_mu_list(section):
    """mu_list as written, or expanded from an "A:B" string"""
    value = section.get("mu_list")
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(validate_mu_sweep(value, section.get("points_per_decade", 1)))
    return tuple(validate_positive(m, "mu_list") for m in value)


def create_lattice_config(section, seed=0, threads=None):
    """
    Build a LatticeConfig from a simulate/hall section

    Args:
        section: Parsed section dict
        seed: Global seed
        threads: Command-line override for the worker count

    Returns:
        LatticeConfig
    """
    dim = validate_int(section.get("dim", 1), "dim", 1)
    scheme = section.get("scheme", "fd")
    default_m = 1 if scheme == "tb" else 32
    endo = section.get("endomorphism")
    return LatticeConfig(
        dim=dim,
        potential=create_potential(section.get("potential"), dim),
        scheme=scheme,
        points_per_cell=validate_int(section.get("points_per_cell", default_m), "points_per_cell", 1),
        kgrid=validate_grid(section.get("kgrid", 8), "kgrid", dim),
        wells=section.get("wells"),
        endomorphism=validate_matrix(endo, "endomorphism", allow_complex=True) if endo is not None else None,
        mu=validate_positive(section.get("mu", 1.0), "mu"),
        flux=validate_flux(section.get("flux", "0")),
        gauge=section.get("gauge", "landau-x"),
        dense_limit=validate_int(section.get("dense_limit", DENSE_FIBER_LIMIT), "dense_limit", 1),
        eig_tol=validate_positive(section.get("eig_tol", EIGEN_TOLERANCE), "eig_tol"),
        bands=validate_int(section["bands"], "bands", 1) if section.get("bands") is not None else None,
        threads=threads if threads is not None else validate_int(section.get("threads", 1), "threads", 1),
        seed=seed,
        torus=validate_grid(section["torus"], "torus", dim) if section.get("torus") is not None else None,
        mu_list=resolve_mu_list(section),
    )


@dataclass(frozen=True)
class CertifySettings:
    problem: CertificateProblem
    gap: GapInterval
    kappa: float
    mu: float = None
    mus: tuple = ()


def create_certify_settings(section):
    """Build the gap-certify inputs: problem data, model gap, kappa and couplings"""
    problem = CertificateProblem(
        c0=validate_positive(section.get("c0"), "c0"),
        metric_bound=validate_positive(section.get("metric_bound", 1.0), "metric_bound"),
        mode=section.get("mode", "flat"),
        constant=validate_positive(section.get("constant", 1.0), "constant"),
        lambda01=validate_float(section.get("lambda01", 0.0), "lambda01"),
        lambda02=validate_float(section.get("lambda02", 0.0), "lambda02"),
    )
    gap = GapInterval(validate_float(section.get("a1"), "a1"), validate_float(section.get("b1"), "b1"))
    kappa = validate_float(section.get("kappa", 0.4), "kappa")
    mu = validate_positive(section["mu"], "mu") if section.get("mu") is not None else None
    mus = resolve_mu_list(section)
    if mu is None and not mus:
        raise ValidationError("certify needs mu or mu_list", ErrorCodes.INVALID_CONFIG)
    return CertifySettings(problem, gap, kappa, mu, mus)


@dataclass(frozen=True)
class HarperPairingSettings:
    lattice: LatticeConfig
    fermi_level: float
    kgrid: tuple
    radius: tuple


def create_harper_pairing(section):
    """Tight-binding Harper lattice and truncation for the area-cocycle pairing"""
    reject_unknown_keys(section, HARPER_KEYS, "harper")
    kgrid = validate_grid(section.get("kgrid", list(DEFAULT_KUBO_GRID)), "kgrid", 2)
    radius = validate_grid(section.get("radius", list(DEFAULT_KUBO_RADIUS)), "radius", 2, 0)
    lattice = LatticeConfig(dim=2, potential=PotentialSpec("zero", 2), scheme="tb", points_per_cell=1,
                            kgrid=kgrid, mu=1.0, flux=validate_flux(section.get("flux", str(ANCHOR_FLUX))),
                            gauge="landau-x")
    fermi_level = validate_float(section.get("fermi_level", ANCHOR_FERMI_LEVEL), "fermi_level")
    return HarperPairingSettings(lattice, fermi_level, kgrid, radius)
