"""
Utility functions for responses, artifact writing and config hashing
"""
import csv
import hashlib
import json
import logging
from fractions import Fraction
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def to_jsonable(value):
    """
    Convert numpy scalars/arrays, Fractions and complex numbers to JSON types

    Args:
        value: Any nested structure of dicts, lists and numbers

    Returns:
        Plain Python structure; complex numbers become [re, im], Fractions "p/q"
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not np.isfinite(value):
        return None if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def canonical_json(value):
    """Sorted keys, compact separators: the form that gets hashed."""
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"))


def config_hash(resolved):
    """SHA-256 hex digest of the canonical resolved config."""
    return hashlib.sha256(canonical_json(resolved).encode("utf-8")).hexdigest()


def write_json(path, payload):
    """
    Write a JSON artifact deterministically

    Args:
        path: Target file
        payload: JSON-compatible structure (numpy values allowed)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.debug("Wrote %s", path)


def _cell(value):
    value = to_jsonable(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return json.dumps(value, separators=(",", ":"))
    return value


def write_csv(path, header, rows):
    """
    Write a CSV artifact with repr floats and "\\n" line endings

    Args:
        path: Target file
        header: Column names
        rows: Iterable of sequences matching header
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug("Wrote %s", path)


def format_error_response(error_code, error_message):
    """
    Format standardized error response

    Args:
        error_code: Error code from ErrorCodes
        error_message: Human-readable error message

    Returns:
        dict: Formatted error response
    """
    return {
        'success': False,
        'error': error_message,
        'error_code': error_code
    }


def format_success_response(results):
    """
    Format standardized success response

    Args:
        results: Report dictionary

    Returns:
        dict: Formatted success response
    """
    return {
        'success': True,
        'results': to_jsonable(results)
    }
