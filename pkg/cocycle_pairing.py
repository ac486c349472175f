"""
Group cocycles on Z^d, the cyclic cocycles they induce on the twisted group
algebra, the symplectic area cocycle, the Hall cocycle and pairings with
projections.

Group cocycles are inhomogeneous: a k-cocycle takes k group elements. The
induced cyclic cocycle is

    tau_c#Tr(F0, ..., Fk) = sum Tr(F0(g0) ... Fk(gk)) c(g1, ..., gk)
                            * tr_Gamma(delta_g0 * ... * delta_gk)

summed over g0 + ... + gk = 0, where the trace of the delta product is the
phase prod_i conj(sigma(g0 + ... + g_{i-1}, g_i)).
"""
import itertools
import logging
from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from constants import (
    COCYCLE_TOLERANCE,
    PROJECTION_TOLERANCE,
    PAIRING_IMAGINARY_WARNING,
    ErrorCodes,
)
from twisted_algebra import (
    AlgebraElement,
    GroupSpec,
    convolve,
    involute,
    trace_gamma,
    trace_of_product,
    block_nu_norm,
)
from validation import ValidationError, HypothesisError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupCocycle:
    """
    A k-cocycle c: Gamma^k -> R

    evaluator takes k integer arrays of shape (M, d) and returns shape (M,).
    poly_bound is (C, (a_1, ..., a_k)) with |c| <= C prod (1 + l(g_i))^{a_i}.
    """

    degree: int
    evaluator: Callable
    normalized: bool
    poly_bound: tuple
    name: str = ""

    def __call__(self, *gammas):
        if len(gammas) != self.degree:
            raise ValidationError(
                f"Cocycle of degree {self.degree} called with {len(gammas)} arguments",
                ErrorCodes.DIMENSION_MISMATCH
            )
        if self.degree == 0:
            return float(self.evaluator())
        arrays = [np.asarray(g, dtype=np.int64) for g in gammas]
        single = all(a.ndim == 1 for a in arrays)
        arrays = np.broadcast_arrays(*[np.atleast_2d(a) for a in arrays])
        values = np.asarray(self.evaluator(*arrays), dtype=float)
        return float(values[0]) if single else values


@dataclass(frozen=True)
class SymplecticData:
    """
    Additive homomorphism xi: Z^d -> R^{2g}, stored as its (2g, d) matrix

    Row j is the period vector of the j-th harmonic form; the base point is
    folded into the homomorphism.
    """

    xi: np.ndarray

    def __post_init__(self):
        xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        if xi.shape[0] % 2:
            raise ValidationError(
                f"Symplectic data needs an even number of forms, got {xi.shape[0]}",
                ErrorCodes.DIMENSION_MISMATCH
            )
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def identity(cls, rank=2):
        return cls(np.eye(rank))

    @property
    def genus_dim(self):
        return self.xi.shape[0]

    @property
    def genus(self):
        return self.genus_dim // 2

    @property
    def rank(self):
        return self.xi.shape[1]

    def hom(self, gammas):
        """xi(gamma) for gammas of shape (..., d)."""
        return np.asarray(gammas, dtype=float) @ self.xi.T


@dataclass(frozen=True)
class CyclicCocycle:
    """A multilinear functional on (k+1)-tuples of AlgebraElements."""

    degree: int
    evaluator: Callable
    name: str = ""

    def __call__(self, *elements):
        if len(elements) != self.degree + 1:
            raise ValidationError(
                f"Cyclic {self.degree}-cocycle needs {self.degree + 1} arguments",
                ErrorCodes.DIMENSION_MISMATCH
            )
        return complex(self.evaluator(*elements))


# -- group cocycles ---------------------------------------------------------

def linear_cocycle(v):
    """The 1-cocycle c(g) = <v, g>."""
    v = np.asarray(v, dtype=float)
    bound = float(np.abs(v).max()) if v.size else 0.0
    return GroupCocycle(
        degree=1,
        evaluator=lambda g: g @ v,
        normalized=True,
        poly_bound=(bound, (1,)),
        name="linear",
    )


def build_area_cocycle(xi):
    """
    Symplectic area 2-cocycle of a homomorphism xi: Z^d -> R^{2g}

    Psi(g1, g2) = sum_j [xi_j(-g1) xi_{j+g}(g2) - xi_{j+g}(-g1) xi_j(g2)]

    Args:
        xi: SymplecticData

    Returns:
        GroupCocycle: Normalised, degree 2, bounded with exponents (2, 2)
    """
    if not isinstance(xi, SymplecticData):
        xi = SymplecticData(xi)
    g = xi.genus

    def evaluate(g1, g2):
        u = xi.hom(-g1)
        w = xi.hom(g2)
        return np.sum(u[:, :g] * w[:, g:] - u[:, g:] * w[:, :g], axis=1)

    # bilinear form B(e_a, e_b) on generators bounds |Psi| by C l(g1) l(g2)
    basis = np.eye(xi.rank, dtype=np.int64)
    pairs = np.array(list(itertools.product(range(xi.rank), repeat=2)))
    constant = float(np.abs(evaluate(basis[pairs[:, 0]], basis[pairs[:, 1]])).max())
    return GroupCocycle(
        degree=2,
        evaluator=evaluate,
        normalized=True,
        poly_bound=(constant, (2, 2)),
        name="area",
    )


def table_cocycle(degree, rank, table, normalized, bound=None):
    """
    Cocycle given by an explicit value table, zero off the table

    Args:
        degree: k
        rank: d
        table: Mapping {tuple of k group-element tuples: value}
        normalized: Declared normalisation flag (checked by verify_group_cocycle)
        bound: Optional (C, exponents); defaults to (max |value|, zeros)
    """
    lookup = {tuple(tuple(int(x) for x in g) for g in key): float(value) for key, value in table.items()}
    for key in lookup:
        if len(key) != degree or any(len(g) != rank for g in key):
            raise ValidationError(f"Table key {key} does not match degree {degree}, rank {rank}",
                                  ErrorCodes.DIMENSION_MISMATCH)

    def evaluate(*gammas):
        rows = zip(*[map(tuple, g.tolist()) for g in gammas])
        return np.array([lookup.get(tuple(row), 0.0) for row in rows])

    if bound is None:
        bound = (max((abs(v) for v in lookup.values()), default=0.0), (0,) * degree)
    return GroupCocycle(degree, evaluate, bool(normalized), tuple(bound), name="table")


@dataclass(frozen=True)
class CocycleReport:
    passed: bool
    identity_defect: float
    normalization_defect: float
    bound_violations: int
    samples: int

    def to_dict(self):
        return {
            "passed": self.passed,
            "identity_defect": self.identity_defect,
            "normalization_defect": self.normalization_defect,
            "bound_violations": self.bound_violations,
            "samples": self.samples,
        }


def coboundary(c, tuples):
    """
    Alternating sum (delta c)(g0, ..., gk) for tuples of shape (M, k+1, d)

    (delta c) = c(g1..gk) + sum_i (-1)^{i+1} c(.., g_i + g_{i+1}, ..) + (-1)^{k+1} c(g0..g_{k-1})
    """
    k = c.degree
    total = np.asarray(c(*[tuples[:, j] for j in range(1, k + 1)]), dtype=float)
    for i in range(k):
        args = [tuples[:, j] for j in range(i)]
        args.append(tuples[:, i] + tuples[:, i + 1])
        args.extend(tuples[:, j] for j in range(i + 2, k + 1))
        total = total + (-1) ** (i + 1) * np.asarray(c(*args), dtype=float)
    total = total + (-1) ** (k + 1) * np.asarray(c(*[tuples[:, j] for j in range(k)]), dtype=float)
    return total


def verify_group_cocycle(c, samples, tol=COCYCLE_TOLERANCE):
    """
    Check the cocycle identity, declared normalisation and polynomial bound

    Args:
        c: GroupCocycle of degree k
        samples: Integer array (M, k+1, d)
        tol: Identity defect tolerance

    Returns:
        CocycleReport: Never raises on failure
    """
    samples = np.asarray(samples, dtype=np.int64)
    if samples.ndim != 3 or samples.shape[1] != c.degree + 1:
        raise ValidationError(
            f"Samples must have shape (M, {c.degree + 1}, d)",
            ErrorCodes.DIMENSION_MISMATCH
        )
    k = c.degree
    identity_defect = float(np.abs(coboundary(c, samples)).max()) if k else 0.0

    normalization_defect = 0.0
    if c.normalized and k:
        args = [samples[:, j] for j in range(k)]
        zero = np.zeros_like(args[0])
        for slot in range(k):
            with_e = list(args)
            with_e[slot] = zero
            normalization_defect = max(normalization_defect, float(np.abs(c(*with_e)).max()))
        closing = list(args)
        closing[-1] = -np.sum(args[:-1], axis=0) if k > 1 else zero
        normalization_defect = max(normalization_defect, float(np.abs(c(*closing)).max()))

    violations = 0
    if k:
        constant, exponents = c.poly_bound
        args = [samples[:, j] for j in range(k)]
        values = np.abs(np.asarray(c(*args), dtype=float))
        length = GroupSpec(samples.shape[2]).length
        bound = constant * np.prod([(1.0 + length(a)) ** e for a, e in zip(args, exponents)], axis=0)
        violations = int(np.sum(values > bound * (1 + 1e-12) + tol))

    passed = identity_defect < tol and normalization_defect < tol and violations == 0
    if not passed:
        logger.info("Cocycle %s failed verification (identity defect %.3e)", c.name, identity_defect)
    return CocycleReport(passed, identity_defect, normalization_defect, violations, len(samples))


# -- induced cyclic cocycles ------------------------------------------------

def _check_elements(elements):
    first = elements[0]
    for other in elements[1:]:
        if other.fiber_dim != first.fiber_dim:
            raise ValidationError("Fiber dimensions differ", ErrorCodes.DIMENSION_MISMATCH)
        if other.multiplier != first.multiplier:
            raise ValidationError("Elements carry different multipliers", ErrorCodes.MULTIPLIER_MISMATCH)


def eval_tau_c_tr(c, *elements):
    """
    Evaluate tau_c#Tr(F0, ..., Fk)

    Iterates over the supports of F1..F_{k-1} and vectorises over Fk; F0 is
    looked up at g0 = -(g1 + ... + gk).

    Raises:
        ValidationError: On arity, fiber or multiplier mismatch, or a
            non-normalised cocycle
    """
    if len(elements) != c.degree + 1:
        raise ValidationError(
            f"tau_c for a {c.degree}-cocycle needs {c.degree + 1} elements",
            ErrorCodes.DIMENSION_MISMATCH
        )
    if not c.normalized:
        raise ValidationError(
            f"Cocycle '{c.name}' is not normalised; refusing to build tau_c",
            ErrorCodes.NOT_NORMALIZED
        )
    _check_elements(elements)
    f0 = elements[0]
    sigma = f0.multiplier
    k = c.degree
    if k == 0:
        return c() * trace_gamma(f0)
    if any(len(f) == 0 for f in elements):
        return 0j
    middle = elements[1:-1]
    last = elements[-1]
    total = 0j
    for picks in itertools.product(*(range(len(f)) for f in middle)):
        gammas = [f.gammas[i] for f, i in zip(middle, picks)]
        prefix = np.eye(f0.fiber_dim, dtype=complex)
        for f, i in zip(middle, picks):
            prefix = prefix @ f.blocks[i]
        partial = np.sum(gammas, axis=0) if gammas else np.zeros(f0.rank, dtype=np.int64)
        g0 = -(partial + last.gammas)
        pos = f0.locate(g0)
        mask = pos >= 0
        if not mask.any():
            continue
        g0 = g0[mask]
        gk = last.gammas[mask]
        m = len(g0)
        # phase of tr(delta_g0 * ... * delta_gk)
        phase = np.ones(m, dtype=complex)
        running = g0.copy()
        for g in gammas:
            step = np.broadcast_to(g, running.shape)
            phase *= sigma.conj_phase(running, step)
            running = running + step
        phase *= sigma.conj_phase(running, gk)
        args = [np.broadcast_to(g, gk.shape) for g in gammas] + [gk]
        cval = np.asarray(c(*args), dtype=float).reshape(m)
        mats = f0.blocks[pos[mask]] @ prefix @ last.blocks[mask]
        traces = np.einsum("nii->n", mats)
        total += complex(np.sum(traces * phase * cval))
    return total


def eval_tau_c(c, *elements):
    """
    Evaluate tau_c(f0, ..., fk) on scalar-fiber elements

    Raises:
        ValidationError: If an element has fiber_dim > 1, or c is not normalised
    """
    if any(f.fiber_dim != 1 for f in elements):
        raise ValidationError("tau_c takes scalar-fiber elements; use eval_tau_c_tr",
                              ErrorCodes.DIMENSION_MISMATCH)
    return eval_tau_c_tr(c, *elements)


def tau_cocycle(c):
    """tau_c#Tr packaged as a CyclicCocycle."""
    return CyclicCocycle(c.degree, lambda *fs: eval_tau_c_tr(c, *fs), name=f"tau_{c.name}")


@dataclass(frozen=True)
class CyclicReport:
    passed: bool
    cyclic_defect: float
    hochschild_defect: float
    samples: int

    def to_dict(self):
        return {
            "passed": self.passed,
            "cyclic_defect": self.cyclic_defect,
            "hochschild_defect": self.hochschild_defect,
            "samples": self.samples,
        }


def _relative(defect, scale):
    return abs(defect) / max(1.0, scale)


def verify_cyclic(phi, samples, tol=COCYCLE_TOLERANCE):
    """
    Check cyclicity and the Hochschild condition b phi = 0

    Args:
        phi: CyclicCocycle of degree k
        samples: Sequence of (k+2)-tuples of AlgebraElements; cyclicity uses
            the first k+1 entries
        tol: Relative defect tolerance

    Returns:
        CyclicReport
    """
    k = phi.degree
    cyclic = 0.0
    hochschild = 0.0
    for tup in samples:
        if len(tup) != k + 2:
            raise ValidationError(f"Samples for a cyclic {k}-cocycle need {k + 2} elements",
                                  ErrorCodes.DIMENSION_MISMATCH)
        fs = tup[:k + 1]
        base = phi(*fs)
        rotated = phi(fs[k], *fs[:k])
        cyclic = max(cyclic, _relative(rotated - (-1) ** k * base, abs(base) + abs(rotated)))

        terms = []
        for i in range(k + 1):
            args = list(tup[:i]) + [convolve(tup[i], tup[i + 1])] + list(tup[i + 2:])
            terms.append((-1) ** i * phi(*args))
        terms.append((-1) ** (k + 1) * phi(convolve(tup[k + 1], tup[0]), *tup[1:k + 1]))
        hochschild = max(hochschild, _relative(sum(terms), sum(abs(t) for t in terms)))
    passed = cyclic < tol and hochschild < tol
    return CyclicReport(passed, float(cyclic), float(hochschild), len(samples))


# -- Hall cocycle -----------------------------------------------------------

def derivation(t, xi, j):
    """
    delta_j(T)(gamma) = i xi_j(gamma) T(gamma)

    The finite-support form of the commutator with the j-th harmonic form.
    """
    if not isinstance(xi, SymplecticData):
        xi = SymplecticData(xi)
    if len(t) == 0:
        return t
    weights = 1j * xi.hom(t.gammas)[:, j]
    return AlgebraElement.from_arrays(t.multiplier, t.gammas, t.blocks * weights[:, None, None], t.fiber_dim)


def hall_cocycle(xi):
    """
    tr_K = sum_j c_{j, j+g}

    c_{j,k}(T0, T1, T2) = Tr_Gamma(T0 (delta_j T1 delta_k T2 - delta_k T1 delta_j T2)),
    the antisymmetrised form of Tr_Gamma(T0 [delta_j P, delta_k P]) at T1 = T2 = P.

    Args:
        xi: SymplecticData with even genus_dim

    Returns:
        CyclicCocycle of degree 2
    """
    if not isinstance(xi, SymplecticData):
        xi = SymplecticData(xi)
    g = xi.genus

    def evaluate(t0, t1, t2):
        _check_elements((t0, t1, t2))
        total = 0j
        for j in range(g):
            a1, b1 = derivation(t1, xi, j), derivation(t1, xi, j + g)
            a2, b2 = derivation(t2, xi, j), derivation(t2, xi, j + g)
            commutator = convolve(a1, b2) - convolve(b1, a2)
            total += trace_of_product(t0, commutator)
        return total

    return CyclicCocycle(2, evaluate, name="hall")


# -- pairing ----------------------------------------------------------------

def pairing_normalization(degree):
    """(-2 pi i)^m / m! for an even degree 2m."""
    m = degree // 2
    return (-2j * np.pi) ** m / factorial(m)


def projection_defect(p):
    """(||P*P - P||, ||P* - P||) in the N_0 norm."""
    return block_nu_norm(convolve(p, p) - p, 0), block_nu_norm(involute(p) - p, 0)


@dataclass(frozen=True)
class ProjectionPairing:
    """Normalised pairing together with the projection defects of P."""

    value: float
    idempotency: float
    adjointness: float

    def to_dict(self):
        return {"pairing": self.value, "idempotency": self.idempotency, "adjointness": self.adjointness}


def projection_pairing(c, p, tol=PROJECTION_TOLERANCE):
    """
    Pair an even group cocycle with a projection in the twisted algebra

    Returns (-2 pi i)^m / m! * tau_c#Tr(P, ..., P) for degree 2m, which is
    real for projections. Truncated projections are only approximately
    idempotent; pass a tol that matches the truncation.

    Args:
        c: Normalised GroupCocycle of even degree
        p: AlgebraElement with P*P = P and P* = P up to tol
        tol: Idempotency and self-adjointness tolerance, relative to N_0(P)

    Returns:
        ProjectionPairing

    Raises:
        ValidationError: Odd degree
        HypothesisError: If P fails the projection checks
    """
    if c.degree % 2:
        raise ValidationError("Pairing with projections needs an even-degree cocycle",
                              ErrorCodes.INVALID_INPUT)
    if len(p) == 0:
        return ProjectionPairing(0.0, 0.0, 0.0)
    idempotency, adjointness = projection_defect(p)
    scale = max(1.0, block_nu_norm(p, 0))
    if idempotency > tol * scale or adjointness > tol * scale:
        raise HypothesisError(
            f"Element is not a projection: ||P*P-P|| = {idempotency:.3e}, ||P*-P|| = {adjointness:.3e}",
            ErrorCodes.NOT_A_PROJECTION
        )
    raw = eval_tau_c_tr(c, *([p] * (c.degree + 1)))
    value = pairing_normalization(c.degree) * raw
    if abs(value.imag) > PAIRING_IMAGINARY_WARNING * max(1.0, abs(value)):
        logger.warning("Pairing has imaginary residue %.3e", value.imag)
    return ProjectionPairing(float(value.real), float(idempotency), float(adjointness))


def pair_with_projection(c, p, tol=PROJECTION_TOLERANCE):
    """Normalised pairing value only; see projection_pairing."""
    return projection_pairing(c, p, tol).value


def continuity_bound(c, *elements):
    """
    Finite-support bound C sum||F0|| prod_i sum (1 + l)^{a_i} ||F_i|| on |tau_c#Tr|

    A diagnostic of the inequality chain; no completion is involved.
    """
    constant, exponents = c.poly_bound
    if len(elements) != c.degree + 1:
        raise ValidationError("Wrong number of elements for the cocycle degree",
                              ErrorCodes.DIMENSION_MISMATCH)

    def weighted(f, a):
        if len(f) == 0:
            return 0.0
        weights = (1.0 + f.multiplier.group.length(f.gammas)) ** a
        return float(np.sum(weights * np.linalg.norm(f.blocks, axis=(1, 2))))

    bound = constant * weighted(elements[0], 0)
    for f, a in zip(elements[1:], exponents):
        bound *= weighted(f, a)
    return bound


@dataclass(frozen=True)
class CocycleSpec:
    """Parsed cocycle section: kind plus the constructed cocycle."""

    kind: str
    cocycle: GroupCocycle
    symplectic: SymplecticData = field(default=None)


def cocycle_from_config(section, rank):
    """
    Build a cocycle from a parsed config section

    Args:
        section: Dict with "kind" in {"linear", "area", "table"} and parameters
        rank: Group rank d

    Returns:
        CocycleSpec
    """
    kind = section["kind"]
    if kind == "linear":
        v = np.asarray(section["vector"], dtype=float)
        if v.shape != (rank,):
            raise ValidationError(f"Linear cocycle vector must have length {rank}",
                                  ErrorCodes.DIMENSION_MISMATCH)
        return CocycleSpec(kind, linear_cocycle(v))
    if kind == "area":
        xi_matrix = section.get("xi")
        xi = SymplecticData(np.eye(rank) if xi_matrix is None else np.asarray(xi_matrix, dtype=float))
        if xi.rank != rank:
            raise ValidationError(f"xi must have {rank} columns", ErrorCodes.DIMENSION_MISMATCH)
        return CocycleSpec(kind, build_area_cocycle(xi), xi)
    if kind == "table":
        table = {tuple(tuple(g) for g in entry["args"]): entry["value"] for entry in section["table"]}
        return CocycleSpec(kind, table_cocycle(section["degree"], rank, table, section.get("normalized", False)))
    raise ValidationError(f"Unknown cocycle kind: {kind}", ErrorCodes.INVALID_CONFIG)
