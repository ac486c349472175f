"""
Twisted group algebra C(Z^d, sigma-bar) tensored with N x N matrices.

An element is a finitely supported map gamma -> A(gamma) standing for
sum_gamma delta_gamma (x) A(gamma). The product is left twisted convolution

    (f * g)(gamma) = sum_{g1 + g2 = gamma} f(g1) g(g2) conj(sigma(g1, g2))

so that delta_a * delta_b = conj(sigma(a, b)) delta_{a + b}. The multiplier is
the bilinear phase sigma(m, n) = exp(i pi m^T Theta n).
"""
import itertools
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm

import numpy as np

from constants import (
    PHASE_TOLERANCE,
    PRUNE_THRESHOLD,
    EXACT_DENOMINATOR_LIMIT,
    KEY_RADIX_BITS,
    ErrorCodes,
)
from validation import ValidationError

logger = logging.getLogger(__name__)

_KEY_OFFSET = 1 << (KEY_RADIX_BITS - 1)


def as_fraction(value):
    """
    Convert a config value to an exact Fraction

    Args:
        value: int, Fraction, "p/q" string or float

    Returns:
        Fraction: Exact rational value (floats are taken by their repr)

    Raises:
        ValidationError: If the value is not a number
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise ValidationError("Flux entries must be numbers", ErrorCodes.INVALID_MATRIX)
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ValidationError(
        f"Cannot read {value!r} as a rational number",
        ErrorCodes.INVALID_MATRIX
    )


@dataclass(frozen=True)
class GroupSpec:
    """The group Z^d with the l1 word length."""

    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError("Group rank must be at least 1", ErrorCodes.INVALID_INPUT)

    @property
    def identity(self):
        return np.zeros(self.rank, dtype=np.int64)

    def length(self, gammas):
        """Word length l(gamma) = sum |gamma_i|, vectorised over leading axes."""
        return np.abs(np.asarray(gammas, dtype=np.int64)).sum(axis=-1)


@dataclass(frozen=True)
class Multiplier:
    """
    Bilinear multiplier sigma(m, n) = exp(i pi m^T Theta n) on Z^d

    Theta is held as exact Fractions. When the common denominator D is
    moderate the exponent is evaluated as an integer modulo 2D, so rational
    flux phases are bit-stable.
    """

    theta: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(x) for x in row) for row in self.theta)
        if not rows or any(len(row) != len(rows) for row in rows):
            raise ValidationError("Flux matrix must be square and non-empty", ErrorCodes.INVALID_MATRIX)
        object.__setattr__(self, "theta", rows)

    @classmethod
    def trivial(cls, rank):
        return cls(tuple((0,) * rank for _ in range(rank)))

    @classmethod
    def antisymmetric(cls, theta):
        """Theta = [[0, theta], [-theta, 0]] on Z^2."""
        t = as_fraction(theta)
        return cls(((0, t), (-t, 0)))

    @classmethod
    def landau(cls, theta, axis="x"):
        """
        Multiplier induced by a Landau gauge with flux theta per unit cell

        Args:
            theta: Flux per cell (rational)
            axis: "x" for A = (0, -b x), "y" for A = (b y, 0)

        Returns:
            Multiplier: Cohomologous to antisymmetric(theta)
        """
        t = as_fraction(theta)
        if axis == "x":
            return cls(((0, 2 * t), (0, 0)))
        if axis == "y":
            return cls(((0, 0), (-2 * t, 0)))
        raise ValidationError(f"Unknown Landau gauge axis: {axis}", ErrorCodes.INVALID_CONFIG)

    @property
    def rank(self):
        return len(self.theta)

    @property
    def group(self):
        return GroupSpec(self.rank)

    @cached_property
    def denominator(self):
        return lcm(*(x.denominator for row in self.theta for x in row))

    @property
    def is_exact(self):
        return self.denominator <= EXACT_DENOMINATOR_LIMIT

    @cached_property
    def _numerators(self):
        d = self.denominator
        return np.array([[int(x * d) for x in row] for row in self.theta], dtype=np.int64)

    @cached_property
    def _float_matrix(self):
        return np.array([[float(x) for x in row] for row in self.theta])

    def exponent(self, m, n):
        """Exact exponent m^T Theta n reduced modulo 2, for single group elements."""
        total = Fraction(0)
        for i, row in enumerate(self.theta):
            for j, entry in enumerate(row):
                total += int(m[i]) * entry * int(n[j])
        return total % 2

    def phase(self, m, n):
        """
        Evaluate sigma(m, n)

        Args:
            m, n: Integer arrays of shape (..., d); leading axes broadcast

        Returns:
            complex or ndarray: Unit-modulus phases
        """
        m = np.asarray(m, dtype=np.int64)
        n = np.asarray(n, dtype=np.int64)
        if self.is_exact:
            d = self.denominator
            e = np.einsum("...i,ij,...j->...", m, self._numerators, n) % (2 * d)
            result = np.exp(1j * np.pi * e / d)
        else:
            result = np.exp(1j * np.pi * np.einsum("...i,ij,...j->...", m, self._float_matrix, n))
        return complex(result) if np.ndim(result) == 0 else result

    def conj_phase(self, m, n):
        return np.conj(self.phase(m, n))

    def to_record(self):
        return {"theta": [[str(x) for x in row] for row in self.theta]}

    @classmethod
    def from_record(cls, record):
        return cls(tuple(tuple(Fraction(x) for x in row) for row in record["theta"]))


def _encode(gammas):
    """Pack rows of a (M, d) integer array into sortable int64 keys (d <= 3)."""
    keys = np.zeros(len(gammas), dtype=np.int64)
    for i in range(gammas.shape[1]):
        keys |= (gammas[:, i] + _KEY_OFFSET) << (KEY_RADIX_BITS * i)
    return keys


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """
    Finitely supported element of C(Z^d, sigma-bar) (x) M_N

    gammas has shape (S, d) and is sorted lexicographically; blocks has shape
    (S, N, N). Every stored block has Frobenius norm at least PRUNE_THRESHOLD.
    Use the constructors below rather than the raw initialiser.
    """

    multiplier: Multiplier
    fiber_dim: int
    gammas: np.ndarray
    blocks: np.ndarray

    __hash__ = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_arrays(cls, multiplier, gammas, blocks, fiber_dim=None):
        """
        Build an element from parallel arrays, summing repeated group elements

        Args:
            multiplier: Multiplier of the algebra
            gammas: Integer array (S, d)
            blocks: Complex array (S, N, N), or (S,) for scalar fiber
            fiber_dim: N; inferred from blocks when omitted

        Returns:
            AlgebraElement: Canonical (pruned, sorted) element

        Raises:
            ValidationError: INVALID_INPUT if an entry of rank <= 3 elements
                reaches 2**19 in absolute value
        """
        rank = multiplier.rank
        gammas = np.asarray(gammas, dtype=np.int64).reshape(-1, rank) if np.size(gammas) else np.zeros((0, rank), dtype=np.int64)
        blocks = np.asarray(blocks, dtype=complex)
        if fiber_dim is None:
            fiber_dim = blocks.shape[-1] if blocks.ndim == 3 else 1
        blocks = blocks.reshape(len(gammas), fiber_dim, fiber_dim)
        if len(gammas) == 0:
            return cls._canonical(multiplier, fiber_dim, gammas, blocks)
        keys, inverse = np.unique(gammas, axis=0, return_inverse=True)
        summed = np.zeros((len(keys), fiber_dim, fiber_dim), dtype=complex)
        np.add.at(summed, inverse.reshape(-1), blocks)
        return cls._canonical(multiplier, fiber_dim, keys, summed)

    @classmethod
    def from_blocks(cls, multiplier, blocks, fiber_dim=None):
        """
        Build an element from a mapping {gamma tuple: block}

        Scalars are accepted as blocks when fiber_dim is 1.
        """
        items = list(blocks.items())
        rank = multiplier.rank
        for gamma, _ in items:
            if len(gamma) != rank:
                raise ValidationError(
                    f"Group element {gamma} does not have rank {rank}",
                    ErrorCodes.DIMENSION_MISMATCH
                )
        if fiber_dim is None:
            fiber_dim = np.atleast_2d(np.asarray(items[0][1])).shape[0] if items else 1
        mats = []
        for gamma, block in items:
            mat = np.asarray(block, dtype=complex)
            if mat.size != fiber_dim * fiber_dim:
                raise ValidationError(
                    f"Block at {gamma} is not {fiber_dim}x{fiber_dim}",
                    ErrorCodes.INVALID_MATRIX
                )
            mats.append(mat.reshape(fiber_dim, fiber_dim))
        gammas = np.array([tuple(g) for g, _ in items], dtype=np.int64).reshape(-1, rank)
        mats = np.array(mats, dtype=complex).reshape(-1, fiber_dim, fiber_dim)
        return cls.from_arrays(multiplier, gammas, mats, fiber_dim)

    @classmethod
    def delta(cls, multiplier, gamma, block=None, fiber_dim=1):
        """delta_gamma (x) block, with the identity block by default."""
        if block is None:
            block = np.eye(fiber_dim)
        return cls.from_blocks(multiplier, {tuple(int(x) for x in gamma): block}, fiber_dim)

    @classmethod
    def zero(cls, multiplier, fiber_dim=1):
        return cls.from_arrays(multiplier, np.zeros((0, multiplier.rank)), np.zeros((0, fiber_dim, fiber_dim)), fiber_dim)

    @classmethod
    def identity(cls, multiplier, fiber_dim=1):
        return cls.delta(multiplier, (0,) * multiplier.rank, fiber_dim=fiber_dim)

    @classmethod
    def _canonical(cls, multiplier, fiber_dim, gammas, blocks):
        if multiplier.rank <= 3 and len(gammas) and np.abs(gammas).max() >= _KEY_OFFSET:
            raise ValidationError(
                f"Group element entries must satisfy |gamma_i| < {_KEY_OFFSET}",
                ErrorCodes.INVALID_INPUT
            )
        if len(gammas):
            norms = np.linalg.norm(blocks, axis=(1, 2))
            keep = norms >= PRUNE_THRESHOLD
            gammas, blocks = gammas[keep], blocks[keep]
            order = np.lexsort(gammas.T[::-1]) if len(gammas) else np.zeros(0, dtype=np.int64)
            gammas, blocks = gammas[order], blocks[order]
        gammas = np.ascontiguousarray(gammas, dtype=np.int64)
        blocks = np.ascontiguousarray(blocks, dtype=complex)
        gammas.setflags(write=False)
        blocks.setflags(write=False)
        return cls(multiplier, int(fiber_dim), gammas, blocks)

    # -- inspection ---------------------------------------------------------

    @property
    def rank(self):
        return self.multiplier.rank

    @property
    def support(self):
        return tuple(tuple(int(x) for x in row) for row in self.gammas)

    def __len__(self):
        return len(self.gammas)

    @cached_property
    def _lookup(self):
        if self.rank > 3:
            return {g: i for i, g in enumerate(self.support)}
        keys = _encode(self.gammas)
        order = np.argsort(keys, kind="stable")
        return keys[order], order

    def locate(self, query):
        """
        Indices of query group elements in the support, -1 where absent

        Args:
            query: Integer array (M, d) or a single element (d,)

        Returns:
            ndarray: int64 indices of shape (M,)
        """
        q = np.asarray(query, dtype=np.int64).reshape(-1, self.rank)
        if len(self.gammas) == 0 or len(q) == 0:
            return np.full(len(q), -1, dtype=np.int64)
        lookup = self._lookup
        if isinstance(lookup, dict):
            return np.array([lookup.get(tuple(int(x) for x in row), -1) for row in q], dtype=np.int64)
        keys, order = lookup
        inside = np.all(np.abs(q) < _KEY_OFFSET, axis=1)
        qk = _encode(np.where(inside[:, None], q, 0))
        pos = np.searchsorted(keys, qk).clip(max=len(keys) - 1)
        found = inside & (keys[pos] == qk)
        return np.where(found, order[pos], -1)

    def block(self, gamma):
        """Copy of A(gamma); zero matrix off the support."""
        idx = self.locate(gamma)[0]
        if idx < 0:
            return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex)
        return self.blocks[idx].copy()

    def coefficient(self, gamma):
        """Scalar coefficient for fiber_dim 1."""
        return complex(self.block(gamma)[0, 0])

    # -- linear structure ---------------------------------------------------

    def _combine(self, other, sign):
        _check_compatible(self, other)
        gammas = np.concatenate([self.gammas, other.gammas])
        blocks = np.concatenate([self.blocks, sign * other.blocks])
        return AlgebraElement.from_arrays(self.multiplier, gammas, blocks, self.fiber_dim)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, factor):
        return AlgebraElement._canonical(self.multiplier, self.fiber_dim, self.gammas.copy(), self.blocks * complex(factor))

    def __mul__(self, factor):
        if isinstance(factor, AlgebraElement):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return convolve(self, other)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return (
            self.multiplier == other.multiplier
            and self.fiber_dim == other.fiber_dim
            and np.array_equal(self.gammas, other.gammas)
            and np.array_equal(self.blocks, other.blocks)
        )

    def distance(self, other):
        """Largest block Frobenius norm of self - other."""
        diff = self - other
        if len(diff) == 0:
            return 0.0
        return float(np.linalg.norm(diff.blocks, axis=(1, 2)).max())

    def is_close(self, other, atol=PHASE_TOLERANCE):
        return self.distance(other) <= atol

    def __repr__(self):
        return f"AlgebraElement(rank={self.rank}, fiber_dim={self.fiber_dim}, support_size={len(self)})"


def _check_compatible(f, g):
    if f.fiber_dim != g.fiber_dim:
        raise ValidationError(
            f"Fiber dimensions differ: {f.fiber_dim} vs {g.fiber_dim}",
            ErrorCodes.DIMENSION_MISMATCH
        )
    if f.multiplier != g.multiplier:
        raise ValidationError("Elements carry different multipliers", ErrorCodes.MULTIPLIER_MISMATCH)


def convolve(f, g):
    """
    Twisted convolution f * g

    Args:
        f, g: AlgebraElements with equal fiber_dim and multiplier

    Returns:
        AlgebraElement: (f*g)(gamma) = sum f(g1) g(g2) conj(sigma(g1, g2))

    Raises:
        ValidationError: On fiber or multiplier mismatch
    """
    _check_compatible(f, g)
    sigma = f.multiplier
    n = f.fiber_dim
    if len(f) == 0 or len(g) == 0:
        return AlgebraElement.zero(sigma, n)
    sg = len(g)
    targets = (f.gammas[:, None, :] + g.gammas[None, :, :]).reshape(-1, f.rank)
    keys, inverse = np.unique(targets, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    acc = np.zeros((len(keys), n, n), dtype=complex)
    for i, gamma in enumerate(f.gammas):
        phases = sigma.conj_phase(gamma, g.gammas)
        products = np.matmul(f.blocks[i], g.blocks) * phases[:, None, None]
        np.add.at(acc, inverse[i * sg:(i + 1) * sg], products)
    return AlgebraElement._canonical(sigma, n, keys, acc)


def involute(f):
    """
    Involution f*(eta) = sigma(eta, -eta) A(-eta)^H

    With this rule delta_gamma^* * delta_gamma = delta_e.
    """
    gammas = -f.gammas
    phases = f.multiplier.phase(gammas, f.gammas)
    blocks = np.conj(np.swapaxes(f.blocks, 1, 2)) * np.reshape(phases, (-1, 1, 1))
    return AlgebraElement._canonical(f.multiplier, f.fiber_dim, gammas, blocks)


def trace_gamma(f):
    """Tr_Gamma(f): matrix trace of the block at the identity."""
    idx = f.locate(np.zeros(f.rank, dtype=np.int64))[0]
    if idx < 0:
        return 0j
    return complex(np.trace(f.blocks[idx]))


def trace_of_product(f, g):
    """
    Tr_Gamma(f * g) without forming the convolution

    Only the pairs (gamma, -gamma) contribute:
    sum_gamma Tr(f(gamma) g(-gamma)) conj(sigma(gamma, -gamma)).
    """
    _check_compatible(f, g)
    if len(f) == 0 or len(g) == 0:
        return 0j
    idx = g.locate(-f.gammas)
    mask = idx >= 0
    if not mask.any():
        return 0j
    gam = f.gammas[mask]
    phases = f.multiplier.conj_phase(gam, -gam)
    traces = np.einsum("nij,nji->n", f.blocks[mask], g.blocks[idx[mask]])
    return complex(np.sum(traces * phases))


def nu_norm(f, k):
    """
    Weighted l2 norm nu_k(f) = (sum (1 + l(gamma))^{2k} |f(gamma)|^2)^{1/2}

    Args:
        f: Scalar-fiber AlgebraElement
        k: Weight exponent, integer >= 0

    Raises:
        ValidationError: If fiber_dim > 1 (use block_nu_norm) or k < 0
    """
    if f.fiber_dim != 1:
        raise ValidationError(
            "nu_norm needs a scalar fiber; use block_nu_norm for matrix blocks",
            ErrorCodes.DIMENSION_MISMATCH
        )
    return block_nu_norm(f, k)


def block_nu_norm(a, k):
    """N_k(A) = (sum_{i,j} nu_k(A_ij)^2)^{1/2}, i.e. Frobenius aggregation per block."""
    if k < 0:
        raise ValidationError("Weight exponent k must be non-negative", ErrorCodes.INVALID_INPUT)
    if len(a) == 0:
        return 0.0
    weights = (1.0 + a.multiplier.group.length(a.gammas)) ** (2 * k)
    frob = np.sum(np.abs(a.blocks) ** 2, axis=(1, 2))
    return float(np.sqrt(np.sum(weights * frob)))


def norm_bounds(a):
    """
    Bracket the operator norm of left twisted convolution by a

    Returns:
        tuple: (max_gamma ||A(gamma)||, sum_gamma ||A(gamma)||) in spectral norm
    """
    if len(a) == 0:
        return 0.0, 0.0
    norms = np.linalg.norm(a.blocks, ord=2, axis=(1, 2))
    return float(norms.max()), float(norms.sum())


def ball(rank, radius):
    """Lexicographically sorted points of Z^rank with l1 length <= radius."""
    axis = range(-radius, radius + 1)
    points = [p for p in itertools.product(axis, repeat=rank) if sum(abs(x) for x in p) <= radius]
    return np.array(points, dtype=np.int64).reshape(-1, rank)


def left_regular_matrix(f, radius=None):
    """
    Truncated matrix of xi -> f * xi on l2(ball) (x) C^N

    Args:
        f: AlgebraElement
        radius: Ball radius; defaults to max(1, 3 max l(support))

    Returns:
        tuple: (dense matrix of shape (P N, P N), ball points (P, d))
    """
    if radius is None:
        longest = int(f.multiplier.group.length(f.gammas).max()) if len(f) else 0
        radius = max(1, 3 * longest)
    points = ball(f.rank, radius)
    index = {tuple(int(x) for x in p): i for i, p in enumerate(points)}
    n = f.fiber_dim
    matrix = np.zeros((len(points) * n, len(points) * n), dtype=complex)
    for gamma, block in zip(f.gammas, f.blocks):
        phases = f.multiplier.conj_phase(gamma, points)
        for col, (eta, phase) in enumerate(zip(points, phases)):
            row = index.get(tuple(int(x) for x in gamma + eta))
            if row is not None:
                matrix[row * n:(row + 1) * n, col * n:(col + 1) * n] += phase * block
    return matrix, points


@dataclass(frozen=True)
class MultiplierReport:
    passed: bool
    max_defect: float
    normalization_defect: float
    cocycle_defect: float
    modulus_defect: float
    symmetry_defect: float

    def to_dict(self):
        return {
            "passed": self.passed,
            "max_defect": self.max_defect,
            "normalization_defect": self.normalization_defect,
            "cocycle_defect": self.cocycle_defect,
            "modulus_defect": self.modulus_defect,
            "symmetry_defect": self.symmetry_defect,
        }


def validate_multiplier(sigma, samples, tol=PHASE_TOLERANCE):
    """
    Check normalisation and the cocycle relation on sampled triples

    Any object with a vectorised phase(m, n) method is accepted.

    Args:
        sigma: Multiplier-like object
        samples: Integer array (M, 3, d) of triples (g1, g2, g3)
        tol: Largest admissible phase defect

    Returns:
        MultiplierReport: Report; never raises on failure

    Raises:
        ValidationError: If samples is empty
    """
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size == 0:
        raise ValidationError("At least one sample triple is required", ErrorCodes.INVALID_INPUT)
    a, b, c = samples[:, 0], samples[:, 1], samples[:, 2]
    zero = np.zeros_like(a)
    normalization = max(
        np.abs(np.asarray(sigma.phase(a, zero)) - 1).max(),
        np.abs(np.asarray(sigma.phase(zero, a)) - 1).max(),
    )
    lhs = np.asarray(sigma.phase(a, b)) * np.asarray(sigma.phase(a + b, c))
    rhs = np.asarray(sigma.phase(a, b + c)) * np.asarray(sigma.phase(b, c))
    cocycle = np.abs(lhs - rhs).max()
    modulus = np.abs(np.abs(np.asarray(sigma.phase(a, b))) - 1).max()
    symmetry = np.abs(np.asarray(sigma.phase(a, -a)) - np.asarray(sigma.phase(-a, a))).max()
    worst = float(max(normalization, cocycle, modulus, symmetry))
    report = MultiplierReport(
        passed=worst <= tol,
        max_defect=worst,
        normalization_defect=float(normalization),
        cocycle_defect=float(cocycle),
        modulus_defect=float(modulus),
        symmetry_defect=float(symmetry),
    )
    if not report.passed:
        logger.warning("Multiplier check failed: max defect %.3e", worst)
    return report


def element_to_json(f):
    """Serialise an element as a JSON record with row-major [re, im] block entries."""
    record = {
        "multiplier": f.multiplier.to_record(),
        "fiber_dim": f.fiber_dim,
        "blocks": [
            {
                "gamma": [int(x) for x in gamma],
                "block": [[float(z.real), float(z.imag)] for z in block.reshape(-1)],
            }
            for gamma, block in zip(f.gammas, f.blocks)
        ],
    }
    return json.dumps(record, sort_keys=True)


def element_from_json(text):
    """Inverse of element_to_json."""
    try:
        record = json.loads(text)
        sigma = Multiplier.from_record(record["multiplier"])
        n = int(record["fiber_dim"])
        entries = record["blocks"]
        gammas = np.array([e["gamma"] for e in entries], dtype=np.int64).reshape(-1, sigma.rank)
        blocks = np.array(
            [[complex(re, im) for re, im in e["block"]] for e in entries], dtype=complex
        ).reshape(-1, n, n)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"Malformed algebra element record: {exc}", ErrorCodes.INVALID_INPUT)
    return AlgebraElement.from_arrays(sigma, gammas, blocks, n)


def random_element(rng, multiplier, fiber_dim=1, max_support=6, coefficient_range=1.0, radius=3):
    """
    Random element with at most max_support blocks drawn from the l-infinity box of radius

    Args:
        rng: numpy Generator
        multiplier: Multiplier of the algebra
        fiber_dim: N
        max_support: Largest number of support points
        coefficient_range: Real and imaginary parts are uniform in [-range, range]

    Returns:
        AlgebraElement
    """
    size = int(rng.integers(1, max_support + 1))
    gammas = rng.integers(-radius, radius + 1, size=(size, multiplier.rank))
    shape = (size, fiber_dim, fiber_dim)
    blocks = rng.uniform(-coefficient_range, coefficient_range, shape) \
        + 1j * rng.uniform(-coefficient_range, coefficient_range, shape)
    return AlgebraElement.from_arrays(multiplier, gammas, blocks, fiber_dim)
