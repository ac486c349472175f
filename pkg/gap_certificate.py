"""
Gap-certificate arithmetic.

Given two operators related by localisation data (the eleven parameters of
CertificateParams) and a gap (a1, b1) of the first, the interval (a2, b2)
computed here is free of spectrum of the second whenever the hypotheses hold.
The estimators turn a coupling mu and a cutoff scale mu^kappa into those
parameters for the semiclassical problem.
"""
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from constants import (
    OPTIMAL_KAPPA,
    OPTIMAL_EXPONENT,
    DEFAULT_ESTIMATE_CONSTANT,
    CUTOFF_SAMPLES,
    PARTITION_TOLERANCE,
    SINGULAR_VALUE_FLOOR,
    ErrorCodes,
)
from validation import ValidationError, HypothesisError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GapInterval:
    """Open interval (a, b) with a < b."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValidationError(f"Gap interval needs a < b, got ({self.a}, {self.b})",
                                  ErrorCodes.INVALID_INPUT)

    @property
    def width(self):
        return self.b - self.a

    @property
    def midpoint(self):
        return 0.5 * (self.a + self.b)

    def __contains__(self, value):
        return self.a < value < self.b

    def contains_interval(self, other):
        return self.a <= other.a and other.b <= self.b

    def to_dict(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class CertificateParams:
    """
    lambda0_l: lower bounds of the operators; alpha_l: energy outside the
    wells; gamma_l: double-commutator bounds; beta_l, eps_l: comparison of
    the localised quadratic forms; rho: comparison of the localised norms.

    flat=True admits the exact values beta = rho = 1, eps = 0.
    """

    lambda01: float
    lambda02: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    gamma1: float
    gamma2: float
    eps1: float
    eps2: float
    rho: float
    flat: bool = False

    def __post_init__(self):
        checks = [
            (self.lambda01 <= 0 and self.lambda02 <= 0, "lambda01, lambda02 must be <= 0"),
            (self.alpha1 > 0 and self.alpha2 > 0, "alpha1, alpha2 must be > 0"),
            (self.beta1 >= 1 and self.beta2 >= 1, "beta1, beta2 must be >= 1"),
            (self.gamma1 >= 0 and self.gamma2 >= 0, "gamma1, gamma2 must be >= 0"),
        ]
        if self.flat:
            checks.append((self.eps1 >= 0 and self.eps2 >= 0, "eps1, eps2 must be >= 0"))
            checks.append((self.rho >= 1, "rho must be >= 1"))
        else:
            checks.append((self.eps1 > 0 and self.eps2 > 0, "eps1, eps2 must be > 0"))
            checks.append((self.rho > 1, "rho must be > 1"))
        for ok, message in checks:
            if not ok:
                raise ValidationError(message, ErrorCodes.INVALID_INPUT)

    def with_updates(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {
            "lambda01": self.lambda01, "lambda02": self.lambda02,
            "alpha1": self.alpha1, "alpha2": self.alpha2,
            "beta1": self.beta1, "beta2": self.beta2,
            "gamma1": self.gamma1, "gamma2": self.gamma2,
            "eps1": self.eps1, "eps2": self.eps2,
            "rho": self.rho, "flat": self.flat,
        }


def _a2_shape(a, alpha, beta, gamma, eps, lam0, rho):
    shifted = a + gamma
    return rho * (beta * (shifted + (shifted - lam0) ** 2 / (alpha - shifted)) + eps)


def a2_of(p, a1):
    """
    Lower end a2 = rho[beta1(a1 + gamma1 + (a1 + gamma1 - lambda01)^2 / (alpha1 - a1 - gamma1)) + eps1]

    Raises:
        HypothesisError: If alpha1 <= a1 + gamma1
    """
    if not p.alpha1 > a1 + p.gamma1:
        raise HypothesisError("alpha1 <= a1 + gamma1", ErrorCodes.CERTIFICATE_FAILURE)
    return _a2_shape(a1, p.alpha1, p.beta1, p.gamma1, p.eps1, p.lambda01, p.rho)


def b2_of(p, b1):
    """
    Upper end b2 = (s(alpha2 - gamma2) - alpha2 gamma2 + 2 lambda02 gamma2 - lambda02^2) / (alpha2 - 2 lambda02 + s)

    with s = (b1 / rho - eps2) / beta2.

    Raises:
        HypothesisError: If b1 / rho <= eps2 or the denominator is not positive
    """
    if not b1 / p.rho > p.eps2:
        raise HypothesisError("b1 / rho <= eps2", ErrorCodes.CERTIFICATE_FAILURE)
    s = (b1 / p.rho - p.eps2) / p.beta2
    denominator = p.alpha2 - 2 * p.lambda02 + s
    if not denominator > 0:
        raise HypothesisError("b2 denominator <= 0", ErrorCodes.CERTIFICATE_FAILURE)
    numerator = s * (p.alpha2 - p.gamma2) - p.alpha2 * p.gamma2 + 2 * p.lambda02 * p.gamma2 - p.lambda02 ** 2
    return numerator / denominator


def b1_of(p, b2):
    """
    Inverse of b2_of: the a2-shaped formula with the second set of parameters

    Raises:
        HypothesisError: If alpha2 <= b2 + gamma2
    """
    if not p.alpha2 > b2 + p.gamma2:
        raise HypothesisError("alpha2 <= b2 + gamma2", ErrorCodes.CERTIFICATE_FAILURE)
    return _a2_shape(b2, p.alpha2, p.beta2, p.gamma2, p.eps2, p.lambda02, p.rho)


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of certify_gap; interval is None when a hypothesis fails."""

    interval: GapInterval = None
    reason: str = None
    a2: float = None
    b2: float = None

    @property
    def certified(self):
        return self.interval is not None

    def to_dict(self):
        return {
            "certified": self.certified,
            "interval": self.interval.to_dict() if self.interval else None,
            "reason": self.reason,
            "a2": self.a2,
            "b2": self.b2,
        }


def certify_gap(p, g1):
    """
    Transfer the gap g1 of the first operator to a gap of the second

    Args:
        p: CertificateParams
        g1: GapInterval (a1, b1)

    Returns:
        CertificationResult: Interval (a2, b2), or the failed hypothesis
    """
    a1, b1 = g1.a, g1.b
    if not p.alpha1 > a1 + p.gamma1:
        return CertificationResult(reason="alpha1 <= a1 + gamma1")
    a2 = a2_of(p, a1)
    if not b1 / p.rho > p.eps2:
        return CertificationResult(reason="b1 / rho <= eps2", a2=a2)
    b2 = b2_of(p, b1)
    if not p.alpha2 > b2 + p.gamma2:
        return CertificationResult(reason="alpha2 <= b2 + gamma2", a2=a2, b2=b2)
    if not b2 > a2:
        return CertificationResult(reason="b2 <= a2", a2=a2, b2=b2)
    return CertificationResult(interval=GapInterval(a2, b2), a2=a2, b2=b2)


# -- localisation -----------------------------------------------------------

def _check_localization(alpha, lam, gamma, lam0):
    if gamma < 0:
        raise ValidationError("gamma must be non-negative", ErrorCodes.INVALID_INPUT)
    if not alpha > lam + gamma:
        raise HypothesisError("alpha <= lambda + gamma", ErrorCodes.CERTIFICATE_FAILURE)
    if lam < lam0:
        raise HypothesisError("lambda < lambda0", ErrorCodes.CERTIFICATE_FAILURE)


def localization_coefficient(alpha, lam, gamma, lam0):
    """Lower bound (alpha - lambda - gamma)/(alpha - lambda0) of ||J E u||^2 / ||E u||^2."""
    _check_localization(alpha, lam, gamma, lam0)
    return (alpha - lam - gamma) / (alpha - lam0)


def localization_complement(alpha, lam, gamma, lam0):
    """Upper bound (lambda + gamma - lambda0)/(alpha - lambda0) of ||J' E u||^2 / ||E u||^2."""
    _check_localization(alpha, lam, gamma, lam0)
    return (lam + gamma - lam0) / (alpha - lam0)


def localization_energy_bound(alpha, lam, gamma, lam0):
    """Bound on (A J E u, J E u) / ||E u||^2."""
    _check_localization(alpha, lam, gamma, lam0)
    excess = lam + gamma - lam0
    return lam + gamma - lam0 * excess / (alpha - lam0)


def _as_operator(j):
    j = np.asarray(j)
    return np.diag(j) if j.ndim == 1 else j


def double_commutator(a, j):
    """[J, [J, A]]"""
    inner = j @ a - a @ j
    return j @ inner - inner @ j


def ims_decomposition_check(a, j, j_c):
    """
    Frobenius defect of A = J A J + J' A J' + [J,[J,A]]/2 + [J',[J',A]]/2

    Args:
        a: Hermitian matrix
        j, j_c: Commuting pair (matrices, or vectors read as diagonals)

    Returns:
        float: Defect of the identity

    Raises:
        ValidationError: If J^2 + J'^2 != I to PARTITION_TOLERANCE
    """
    a = np.asarray(a)
    j = _as_operator(j)
    j_c = _as_operator(j_c)
    partition = j @ j + j_c @ j_c - np.eye(a.shape[0])
    if np.abs(partition).max() > PARTITION_TOLERANCE:
        raise ValidationError("J^2 + J'^2 is not the identity", ErrorCodes.PARTITION_OF_UNITY)
    rebuilt = j @ a @ j + j_c @ a @ j_c + 0.5 * double_commutator(a, j) + 0.5 * double_commutator(a, j_c)
    return float(np.linalg.norm(a - rebuilt))


def mv_equivalence_finite(p, q, t, tol=SINGULAR_VALUE_FLOOR):
    """
    Partial isometry U with U*U = P and UU* = Q from the polar part of T P

    Args:
        p, q: Hermitian projection matrices
        t: Matrix with Q T P = T, injective on range(P)
        tol: Smallest admissible singular value of T on range(P)

    Returns:
        ndarray: U

    Raises:
        ValidationError: If P or Q is not a projection, or Q T P != T
        HypothesisError: On rank mismatch or singular-value collapse
    """
    p, q, t = (np.asarray(m, dtype=complex) for m in (p, q, t))
    for name, m in (("P", p), ("Q", q)):
        if np.abs(m @ m - m).max() > 1e-10 or np.abs(m - m.conj().T).max() > 1e-10:
            raise ValidationError(f"{name} is not a Hermitian projection", ErrorCodes.NOT_A_PROJECTION)
    rank_p = int(round(np.trace(p).real))
    rank_q = int(round(np.trace(q).real))
    if rank_p != rank_q:
        raise HypothesisError(f"rank(P)={rank_p} differs from rank(Q)={rank_q}", ErrorCodes.NO_EQUIVALENCE)
    if np.abs(q @ t @ p - t).max() > tol * max(1.0, np.abs(t).max()):
        raise ValidationError("T does not map range(P) into range(Q)", ErrorCodes.INVALID_INPUT)
    if rank_p == 0:
        return np.zeros_like(t)
    values, vectors = np.linalg.eigh(p)
    basis = vectors[:, values > 0.5]
    left, singular, right_h = np.linalg.svd(t @ basis, full_matrices=False)
    if singular.min() <= tol:
        raise HypothesisError(
            f"T collapses range(P): smallest singular value {singular.min():.3e}",
            ErrorCodes.NO_EQUIVALENCE
        )
    return left @ right_h @ basis.conj().T


# -- cutoff profile ---------------------------------------------------------

def _mollifier(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def _mollifier_slope(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, _mollifier(t) / safe ** 2, 0.0)


@dataclass(frozen=True)
class CutoffProfile:
    """
    Smooth quadratic partition of unity on [0, inf)

    phi = cos(theta), phi' = sin(theta) with theta(r) = (pi/2) S(r - 1) and
    S(t) = f(t) / (f(t) + f(1 - t)), f(t) = exp(-1/t). So phi = 1 on [0, 1],
    phi = 0 on [2, inf) and phi^2 + phi'^2 = 1 exactly.
    """

    samples: int = CUTOFF_SAMPLES

    @staticmethod
    def step(t):
        f, g = _mollifier(t), _mollifier(1.0 - np.asarray(t, dtype=float))
        return f / (f + g)

    @staticmethod
    def step_slope(t):
        t = np.asarray(t, dtype=float)
        f, g = _mollifier(t), _mollifier(1.0 - t)
        df, dg = _mollifier_slope(t), _mollifier_slope(1.0 - t)
        return (df * g + f * dg) / (f + g) ** 2

    def angle(self, r):
        return 0.5 * np.pi * self.step(np.asarray(r, dtype=float) - 1.0)

    def phi(self, r):
        return np.cos(self.angle(r))

    def phi_complement(self, r):
        return np.sin(self.angle(r))

    def phi_slope(self, r):
        r = np.asarray(r, dtype=float)
        return -np.sin(self.angle(r)) * 0.5 * np.pi * self.step_slope(r - 1.0)

    def phi_complement_slope(self, r):
        r = np.asarray(r, dtype=float)
        return np.cos(self.angle(r)) * 0.5 * np.pi * self.step_slope(r - 1.0)

    def _sup(self, func):
        grid = np.linspace(1.0, 2.0, self.samples)
        values = np.abs(func(grid))
        i = int(np.argmax(values))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        refined = minimize_scalar(lambda r: -abs(float(func(r))), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
        return max(float(values[i]), -float(refined.fun))

    @property
    def sup_slopes(self):
        """(sup |d phi / dr|, sup |d phi' / dr|) for the unscaled profile."""
        return self._sup(self.phi_slope), self._sup(self.phi_complement_slope)

    def partition_defect(self, r):
        return float(np.abs(self.phi(r) ** 2 + self.phi_complement(r) ** 2 - 1.0).max())

    def smoothness_defect(self, width=0.02, points=2001):
        """Largest slope of phi or phi' within width of the gluing points r = 1 and r = 2."""
        near = np.concatenate([
            np.linspace(1.0 - width, 1.0 + width, points),
            np.linspace(2.0 - width, 2.0 + width, points),
        ])
        return float(max(np.abs(self.phi_slope(near)).max(), np.abs(self.phi_complement_slope(near)).max()))

    def scaled(self, distance, mu, kappa):
        """(phi(mu^-kappa |x|), phi'(mu^-kappa |x|)) for distances |x|."""
        r = np.asarray(distance, dtype=float) * mu ** (-kappa)
        return self.phi(r), self.phi_complement(r)


# -- estimators -------------------------------------------------------------

@dataclass(frozen=True)
class CertificateProblem:
    """
    Problem data for the estimators

    c0: Morse constant (V >= c0 |x - x0|^2 near wells); metric_bound: largest
    eigenvalue of the inverse metric; constant: explicit C for the O(.) terms
    in general mode; lambda01, lambda02: lower spectral bounds (<= 0).
    """

    c0: float
    metric_bound: float = 1.0
    mode: str = "flat"
    constant: float = DEFAULT_ESTIMATE_CONSTANT
    lambda01: float = 0.0
    lambda02: float = 0.0
    cutoff: CutoffProfile = field(default_factory=CutoffProfile)

    def __post_init__(self):
        if self.mode not in ("flat", "general"):
            raise ValidationError(f"Unknown estimator mode: {self.mode}", ErrorCodes.INVALID_CONFIG)
        if self.c0 <= 0 or self.metric_bound <= 0:
            raise ValidationError("c0 and metric_bound must be positive", ErrorCodes.INVALID_CONFIG)
        if self.lambda01 > 0 or self.lambda02 > 0:
            raise ValidationError("lambda01, lambda02 must be <= 0", ErrorCodes.INVALID_CONFIG)


def kappa_exponent(kappa):
    """s(kappa) = min(3 kappa - 1, 1 - 2 kappa)."""
    return min(3 * kappa - 1, 1 - 2 * kappa)


def optimal_kappa():
    """The maximiser of s(kappa) and the maximum: (2/5, 1/5)."""
    return Fraction(OPTIMAL_KAPPA), Fraction(OPTIMAL_EXPONENT)


def commutator_bound(mu, kappa, cutoff, metric_bound=1.0):
    """gamma = mu * g_max * sup |grad phi_mu|^2 over both cutoff functions."""
    slope, slope_c = cutoff.sup_slopes
    return mu ** (1 - 2 * kappa) * metric_bound * max(slope, slope_c) ** 2


def estimate_parameters(mu, kappa, cutoff, problem):
    """
    Certificate parameters at coupling mu and cutoff scale mu^kappa

    Args:
        mu: Coupling > 0
        kappa: Cutoff exponent; (0, 1/2) in flat mode, (1/3, 1/2) otherwise
        cutoff: CutoffProfile
        problem: CertificateProblem

    Returns:
        CertificateParams

    Raises:
        ValidationError: If kappa is out of range for the mode
    """
    if mu <= 0:
        raise ValidationError("mu must be positive", ErrorCodes.INVALID_INPUT)
    flat = problem.mode == "flat"
    low = 0.0 if flat else 1.0 / 3.0
    if not low < kappa < 0.5:
        raise ValidationError(
            f"kappa={kappa} outside ({low:.4g}, 1/2) for {problem.mode} mode",
            ErrorCodes.KAPPA_OUT_OF_RANGE
        )
    gamma = commutator_bound(mu, kappa, cutoff, problem.metric_bound)
    alpha = problem.c0 * mu ** (2 * kappa - 1)
    if flat:
        rho, beta, eps = 1.0, 1.0, 0.0
    else:
        c = problem.constant
        rho = beta = 1.0 + c * mu ** kappa
        eps = c * mu ** (3 * kappa - 1)
    return CertificateParams(
        lambda01=problem.lambda01, lambda02=problem.lambda02,
        alpha1=alpha, alpha2=alpha,
        beta1=beta, beta2=beta,
        gamma1=gamma, gamma2=gamma,
        eps1=eps, eps2=eps,
        rho=rho, flat=flat,
    )


@dataclass(frozen=True)
class SweepRow:
    mu: float
    params: CertificateParams
    result: CertificationResult

    def to_dict(self):
        row = {"mu": self.mu, "a2": self.result.a2, "b2": self.result.b2,
               "certified": self.result.certified, "reason": self.result.reason}
        row["params"] = self.params.to_dict()
        return row


@dataclass(frozen=True)
class CertificationSweep:
    rows: tuple
    first_certified_mu: float = None

    def to_dict(self):
        return {"rows": [r.to_dict() for r in self.rows], "first_certified_mu": self.first_certified_mu}


def certification_sweep(problem, gap, mus, kappa):
    """
    Certify the gap for each mu, largest mu first

    Returns:
        CertificationSweep: Rows in descending mu and the largest certified mu
    """
    rows = []
    for mu in sorted((float(m) for m in mus), reverse=True):
        params = estimate_parameters(mu, kappa, problem.cutoff, problem)
        rows.append(SweepRow(mu, params, certify_gap(params, gap)))
    first = next((r.mu for r in rows if r.result.certified), None)
    logger.info("Certification sweep over %d couplings: first certified mu = %s", len(rows), first)
    return CertificationSweep(tuple(rows), first)


def asymptotic_slope(mus, deltas):
    """Least-squares slope of log(delta) against log(mu)."""
    x = np.log(np.asarray(mus, dtype=float))
    y = np.log(np.asarray(deltas, dtype=float))
    if len(x) < 2 or not np.all(np.isfinite(y)):
        raise ValidationError("Slope fit needs two or more positive values", ErrorCodes.INVALID_INPUT)
    return float(np.polyfit(x, y, 1)[0])


def lower_edge_offsets(problem, a1, mus, kappa):
    """a2(mu) - a1 for each mu, skipping couplings where a2 is undefined."""
    out = []
    for mu in mus:
        params = estimate_parameters(mu, kappa, problem.cutoff, problem)
        if params.alpha1 > a1 + params.gamma1:
            out.append((float(mu), a2_of(params, a1) - a1))
    return out


def grid_search_kappa(step=1e-4):
    """Grid maximiser of s(kappa) over (1/3, 1/2)."""
    grid = np.arange(1.0 / 3.0 + step, 0.5, step)
    values = np.minimum(3 * grid - 1, 1 - 2 * grid)
    i = int(np.argmax(values))
    return float(grid[i]), float(values[i])

