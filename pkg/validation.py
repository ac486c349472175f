"""
Input validation for run configurations and numeric arguments
"""
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from constants import (
    PHASE_TOLERANCE,
    COCYCLE_TOLERANCE,
    PROJECTION_TOLERANCE,
    CHERN_AGREEMENT,
    LEVEL_MERGE_RELATIVE,
    HERMITICITY_TOLERANCE,
    ErrorCodes,
)


class ValidationError(Exception):
    """Custom exception for validation errors"""
    def __init__(self, message, code):
        self.message = message
        self.code = code
        super().__init__(self.message)


class HypothesisError(ValidationError):
    """A mathematical hypothesis failed (certificate, gap, projection, agreement)"""


DEFAULT_TOLERANCES = {
    "phase": PHASE_TOLERANCE,
    "cocycle": COCYCLE_TOLERANCE,
    "projection": PROJECTION_TOLERANCE,
    "chern_agreement": CHERN_AGREEMENT,
    "level_merge": LEVEL_MERGE_RELATIVE,
}

TOP_LEVEL_KEYS = {"seed", "output_dir", "tolerances", "algebra", "cocycle", "model", "certify", "simulate", "hall"}

MULTIPLIER_KEYS = {"rank", "form", "flux", "flux_matrix"}

LATTICE_KEYS = {
    "dim", "scheme", "points_per_cell", "kgrid", "potential", "wells", "endomorphism",
    "mu", "flux", "gauge", "dense_limit", "eig_tol", "bands", "threads", "torus",
    "mu_list", "points_per_decade",
}

SECTION_KEYS = {
    "algebra": MULTIPLIER_KEYS | {"fiber_dim", "samples", "max_support", "coefficient_range"},
    "cocycle": MULTIPLIER_KEYS | {"kind", "vector", "xi", "degree", "table", "normalized",
                                  "samples", "max_support", "fiber_dim", "harper"},
    "model": {"wells", "cutoff", "mu_check", "fd_count"},
    "certify": {"a1", "b1", "mu", "mu_list", "points_per_decade", "kappa", "mode", "c0",
                "metric_bound", "constant", "lambda01", "lambda02"},
    "simulate": LATTICE_KEYS | {"cutoff", "ids_samples", "kappa"},
    "hall": LATTICE_KEYS | {"fermi_level", "gap_index", "fhs_grid", "kubo_grid", "kubo_radius"},
}

WELL_KEYS = {"label", "metric", "hessian_half", "fiber_endo", "hessian_fiber", "basis_size"}
POTENTIAL_KEYS = {
    "zero": {"kind"},
    "trigonometric": {"kind", "terms"},
    "gaussian_wells": {"kind", "depth", "centers", "widths"},
}
MU_CHECK_KEYS = {"mus", "count", "tolerance"}
HARPER_KEYS = {"flux", "fermi_level", "kgrid", "radius"}


@dataclass(frozen=True)
class RunConfig:
    """Schema-checked run configuration; sections stay plain dicts until parsed"""
    seed: int = 0
    output_dir: str = "out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    sections: dict = field(default_factory=dict)

    def section(self, name):
        """
        Return a section, raising if it is absent

        Raises:
            ValidationError: If the section is missing
        """
        if name not in self.sections:
            raise ValidationError(f"Config has no '{name}' section", ErrorCodes.INVALID_CONFIG)
        return self.sections[name]

    def resolved(self):
        """Plain dict echo of the resolved configuration; the output location is not part of it"""
        record = {"seed": self.seed, "tolerances": dict(self.tolerances)}
        record.update(self.sections)
        return record


def reject_unknown_keys(mapping, allowed, where):
    """
    Reject keys outside the allowed set

    Args:
        mapping: Parsed JSON object
        allowed: Set of accepted keys
        where: Location for error messages

    Raises:
        ValidationError: If mapping is not an object or has unknown keys
    """
    if not isinstance(mapping, dict):
        raise ValidationError(f"{where} must be an object", ErrorCodes.INVALID_CONFIG)
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ValidationError(
            f"Unknown key(s) in {where}: {', '.join(unknown)}",
            ErrorCodes.UNKNOWN_KEY
        )


def validate_int(value, name, minimum=None):
    """
    Validate an integer value

    Returns:
        int: Validated integer

    Raises:
        ValidationError: If value is not an integer or below minimum
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(f"{name} must be an integer", ErrorCodes.INVALID_CONFIG)
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be at least {minimum}", ErrorCodes.INVALID_CONFIG)
    return int(value)


def validate_float(value, name, minimum=None, strict=False):
    """
    Validate a finite real number

    Args:
        value: Number or "p/q" string
        name: Field name for error messages
        minimum: Optional lower bound
        strict: If True the bound is exclusive

    Returns:
        float: Validated value

    Raises:
        ValidationError: If not a finite number or out of range
    """
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be a number", ErrorCodes.INVALID_CONFIG)
    try:
        number = float(Fraction(value)) if isinstance(value, str) else float(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ValidationError(f"{name} must be a number", ErrorCodes.INVALID_CONFIG)
    if not math.isfinite(number):
        raise ValidationError(f"{name} must be finite", ErrorCodes.INVALID_CONFIG)
    if minimum is not None and (number <= minimum if strict else number < minimum):
        relation = "greater than" if strict else "at least"
        raise ValidationError(f"{name} must be {relation} {minimum}", ErrorCodes.INVALID_CONFIG)
    return number


def validate_positive(value, name):
    return validate_float(value, name, minimum=0.0, strict=True)


def validate_flux(value, name="flux"):
    """
    Validate a rational flux p/q

    Floats are refused: flux must be written as an integer, a Fraction or a
    "p/q" string.

    Returns:
        Fraction: Flux per unit cell

    Raises:
        ValidationError: IRRATIONAL_FLUX if the value is not an exact rational
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ValidationError(
        f"{name} must be a rational p/q written as a string, got {value!r}",
        ErrorCodes.IRRATIONAL_FLUX
    )


def _entry(value, name, allow_complex):
    if allow_complex and isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValidationError(f"{name} complex entries must be [re, im] pairs", ErrorCodes.INVALID_MATRIX)
        return complex(validate_float(value[0], name), validate_float(value[1], name))
    return validate_float(value, name)


def validate_matrix(value, name, size=None, allow_complex=False):
    """
    Validate a square row-major matrix

    Args:
        value: Nested list (entries numbers, or [re, im] pairs when complex)
        name: Field name
        size: Required dimension, if any
        allow_complex: Accept [re, im] entries

    Returns:
        ndarray: float or complex square matrix

    Raises:
        ValidationError: If not square or of the wrong size
    """
    if not isinstance(value, (list, tuple)) or not value:
        raise ValidationError(f"{name} must be a non-empty nested list", ErrorCodes.INVALID_MATRIX)
    rows = []
    for row in value:
        if not isinstance(row, (list, tuple)):
            raise ValidationError(f"{name} must be a list of rows", ErrorCodes.INVALID_MATRIX)
        rows.append([_entry(x, name, allow_complex) for x in row])
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise ValidationError(f"{name} must be square", ErrorCodes.INVALID_MATRIX)
    if size is not None and n != size:
        raise ValidationError(f"{name} must be {size}x{size}", ErrorCodes.DIMENSION_MISMATCH)
    return np.array(rows, dtype=complex if allow_complex else float)


def validate_hermitian(matrix, name, tol=HERMITICITY_TOLERANCE):
    if not np.allclose(matrix, np.conj(matrix.T), atol=tol, rtol=0):
        raise ValidationError(f"{name} must be Hermitian", ErrorCodes.INVALID_MATRIX)
    return matrix


def validate_spd(matrix, name):
    """
    Check a real symmetric positive-definite matrix

    Raises:
        ValidationError: NOT_POSITIVE_DEFINITE on failure
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"{name} must be square", ErrorCodes.INVALID_MATRIX)
    if not np.allclose(matrix, matrix.T, atol=HERMITICITY_TOLERANCE, rtol=0):
        raise ValidationError(f"{name} must be symmetric", ErrorCodes.NOT_POSITIVE_DEFINITE)
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise ValidationError(f"{name} must be positive definite", ErrorCodes.NOT_POSITIVE_DEFINITE)
    return matrix


def validate_grid(value, name, dim, minimum=1):
    """Validate a per-axis integer grid such as a k-grid"""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        value = [value] * dim
    if not isinstance(value, (list, tuple)) or len(value) != dim:
        raise ValidationError(f"{name} must list {dim} integers", ErrorCodes.DIMENSION_MISMATCH)
    return tuple(validate_int(v, name, minimum) for v in value)


def validate_mu_sweep(text, points_per_decade=1):
    """
    Expand an "A:B" sweep into log-spaced coupling values

    Args:
        text: "A:B" with A, B > 0
        points_per_decade: Sample density

    Returns:
        list: Couplings from A to B inclusive, in the order written

    Raises:
        ValidationError: If malformed or non-positive
    """
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ValidationError("--mu-sweep must look like A:B", ErrorCodes.INVALID_CONFIG)
    start = validate_positive(parts[0], "mu sweep start")
    stop = validate_positive(parts[1], "mu sweep stop")
    points_per_decade = validate_int(points_per_decade, "points_per_decade", 1)
    decades = abs(math.log10(stop) - math.log10(start))
    count = max(1, int(round(decades * points_per_decade))) + 1
    values = np.logspace(math.log10(start), math.log10(stop), count)
    values[0], values[-1] = start, stop
    return [float(v) for v in values]


def validate_tolerances(value):
    reject_unknown_keys(value, DEFAULT_TOLERANCES.keys(), "tolerances")
    tolerances = dict(DEFAULT_TOLERANCES)
    for key, tol in value.items():
        tolerances[key] = validate_positive(tol, f"tolerances.{key}")
    return tolerances


def validate_config(raw):
    """
    Validate a parsed run configuration

    Only the top level, tolerances and section key sets are checked here;
    the section contents are parsed by models.create_* before use.

    Args:
        raw: Parsed JSON object

    Returns:
        RunConfig: Validated configuration

    Raises:
        ValidationError: If the structure is invalid or has unknown keys
    """
    reject_unknown_keys(raw, TOP_LEVEL_KEYS, "config")
    seed = validate_int(raw.get("seed", 0), "seed", 0)
    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ValidationError("output_dir must be a non-empty string", ErrorCodes.INVALID_CONFIG)
    tolerances = validate_tolerances(raw.get("tolerances", {}))
    sections = {}
    for name, allowed in SECTION_KEYS.items():
        if name in raw:
            reject_unknown_keys(raw[name], allowed, name)
            sections[name] = raw[name]
    return RunConfig(seed=seed, output_dir=output_dir, tolerances=tolerances, sections=sections)


def load_config(path):
    """
    Read and validate a JSON config file

    Raises:
        ValidationError: If the file is missing, not JSON, or invalid
    """
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        raise ValidationError(f"Config file not found: {path}", ErrorCodes.INVALID_CONFIG)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"Config file is not valid JSON: {exc}", ErrorCodes.INVALID_CONFIG)
    return validate_config(raw)
