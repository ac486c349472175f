"""
Section runners shared by the command line and the JSON service

Each runner takes a validated RunConfig, does the computation and returns a
Report: a JSON payload, optional CSV tables and a failure reason when a
mathematical hypothesis did not hold.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from constants import ErrorCodes
from cocycle_pairing import (
    cocycle_from_config,
    eval_tau_c_tr,
    hall_cocycle,
    pair_with_projection,
    tau_cocycle,
    verify_cyclic,
    verify_group_cocycle,
)
from gap_certificate import certification_sweep, certify_gap, estimate_parameters
from lattice_sim import (
    bloch_spectrum,
    gap_emergence_sweep,
    gap_projection_pairing,
    hall_conductance,
    localization_defect,
    model_wells,
)
from model_operator import (
    counting_function,
    model_gaps,
    model_levels,
    mu_invariance_check,
    well_frequencies,
)
from models import (
    create_certify_settings,
    create_harper_pairing,
    create_lattice_config,
    create_model_settings,
    create_multiplier,
)
from twisted_algebra import (
    AlgebraElement,
    convolve,
    involute,
    random_element,
    trace_gamma,
    trace_of_product,
    validate_multiplier,
)
from validation import ValidationError, HypothesisError, validate_int, validate_positive

logger = logging.getLogger(__name__)


@dataclass
class Report:
    """Outcome of one subcommand."""

    name: str
    summary_file: str
    payload: dict
    tables: dict = field(default_factory=dict)
    failure: dict = None

    @property
    def ok(self):
        return self.failure is None


def _failure(code, message):
    return {"code": code, "message": message}


def _relative(defect, scale):
    return float(defect) / max(1.0, float(scale))


def _size(f):
    return float(np.linalg.norm(f.blocks)) if len(f) else 0.0


# -- validate-algebra -------------------------------------------------------

def run_validate_algebra(config):
    """Identity suite for the twisted group algebra on random elements."""
    section = config.section("algebra")
    multiplier = create_multiplier(section)
    fiber_dim = validate_int(section.get("fiber_dim", 2), "fiber_dim", 1)
    samples = validate_int(section.get("samples", 1000), "samples", 1)
    max_support = validate_int(section.get("max_support", 6), "max_support", 1)
    coefficient_range = validate_positive(section.get("coefficient_range", 1.0), "coefficient_range")
    tol = config.tolerances["phase"]
    rng = np.random.default_rng(config.seed)

    triples = rng.integers(-10, 11, size=(samples, 3, multiplier.rank))
    multiplier_report = validate_multiplier(multiplier, triples, tol)

    defects = {"associativity": 0.0, "involution": 0.0, "anti_multiplicative": 0.0,
               "traciality": 0.0, "delta_relation": 0.0}
    for i in range(samples):
        f, g, h = (random_element(rng, multiplier, fiber_dim, max_support, coefficient_range) for _ in range(3))
        scale = _size(f) * _size(g) * _size(h)
        defects["associativity"] = max(defects["associativity"], _relative(
            convolve(convolve(f, g), h).distance(convolve(f, convolve(g, h))), scale))
        defects["involution"] = max(defects["involution"], _relative(involute(involute(f)).distance(f), _size(f)))
        defects["anti_multiplicative"] = max(defects["anti_multiplicative"], _relative(
            involute(convolve(f, g)).distance(convolve(involute(g), involute(f))), _size(f) * _size(g)))
        defects["traciality"] = max(defects["traciality"], _relative(
            abs(trace_of_product(f, g) - trace_of_product(g, f)), _size(f) * _size(g)))
        a, b = triples[i, 0], triples[i, 1]
        product = convolve(AlgebraElement.delta(multiplier, a), AlgebraElement.delta(multiplier, b))
        expected = AlgebraElement.delta(multiplier, a + b, np.conj(multiplier.phase(a, b)) * np.eye(1))
        defects["delta_relation"] = max(defects["delta_relation"], product.distance(expected))

    passed = multiplier_report.passed and all(v <= tol for v in defects.values())
    payload = {
        "multiplier": multiplier.to_record(),
        "fiber_dim": fiber_dim,
        "samples": samples,
        "multiplier_check": multiplier_report.to_dict(),
        "defects": defects,
        "tolerance": tol,
        "passed": passed,
    }
    failure = None if passed else _failure(ErrorCodes.INVALID_INPUT, "algebra identities exceed tolerance")
    logger.info("Algebra suite over %d samples: passed=%s", samples, passed)
    return Report("validate-algebra", "algebra_report.json", payload, failure=failure)


# -- pair-cocycle -----------------------------------------------------------

def _random_projection(rng, size, rank):
    q, _ = np.linalg.qr(rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size)))
    v = q[:, :rank]
    return v @ v.conj().T


def run_pair_cocycle(config):
    """Cocycle identity, cyclicity, Hall agreement and the vanishing pairing."""
    section = config.section("cocycle")
    multiplier = create_multiplier(section)
    spec = cocycle_from_config(section, multiplier.rank)
    c = spec.cocycle
    samples = validate_int(section.get("samples", 500), "samples", 1)
    fiber_dim = validate_int(section.get("fiber_dim", 2), "fiber_dim", 1)
    max_support = validate_int(section.get("max_support", 4), "max_support", 1)
    tol = config.tolerances["cocycle"]
    rng = np.random.default_rng(config.seed)

    group_tuples = rng.integers(-6, 7, size=(samples, c.degree + 1, multiplier.rank))
    payload = {"kind": spec.kind, "degree": c.degree, "normalized": c.normalized,
               "group_check": verify_group_cocycle(c, group_tuples, tol).to_dict()}
    passed = payload["group_check"]["passed"]

    def draw(count):
        return tuple(random_element(rng, multiplier, fiber_dim, max_support) for _ in range(count))

    if c.normalized:
        tuples = [draw(c.degree + 2) for _ in range(min(samples, 50))]
        cyclic = verify_cyclic(tau_cocycle(c), tuples, tol)
        payload["cyclic_check"] = cyclic.to_dict()
        passed = passed and cyclic.passed

    if spec.kind == "area":
        hall = hall_cocycle(spec.symplectic)
        worst = 0.0
        for _ in range(min(samples, 200)):
            fs = draw(3)
            lhs, rhs = hall(*fs), eval_tau_c_tr(c, *fs)
            worst = max(worst, _relative(abs(lhs - rhs), abs(lhs) + abs(rhs)))
        payload["hall_agreement"] = {"max_defect": worst, "passed": worst < tol}
        passed = passed and worst < tol

    if c.normalized and c.degree % 2 == 0:
        rank = max(1, fiber_dim // 2)
        block = _random_projection(rng, fiber_dim, rank)
        p = AlgebraElement.delta(multiplier, (0,) * multiplier.rank, block, fiber_dim)
        pairing = pair_with_projection(c, p, config.tolerances["projection"])
        trace = trace_gamma(p).real
        payload["constant_projection"] = {"rank": rank, "trace": trace, "pairing": pairing}
        passed = passed and abs(pairing) < tol and abs(trace - rank) < tol

    if section.get("harper") is not None:
        if spec.kind != "area" or multiplier.rank != 2 or section.get("xi") is not None:
            raise ValidationError("The Harper pairing needs the rank-2 area cocycle with xi the identity",
                                  ErrorCodes.INVALID_CONFIG)
        settings = create_harper_pairing(section["harper"])
        result = gap_projection_pairing(settings.lattice, settings.fermi_level, settings.kgrid, settings.radius)
        integral = abs(result.chern - round(result.chern)) < config.tolerances["chern_agreement"]
        payload["harper_pairing"] = dict(result.to_dict(), integral=integral)
        passed = passed and integral

    payload["passed"] = passed
    failure = None if passed else _failure(ErrorCodes.INVALID_INPUT, "cocycle checks exceed tolerance")
    return Report("pair-cocycle", "cocycle_report.json", payload, failure=failure)


# -- model-spectrum ---------------------------------------------------------

def run_model_spectrum(config):
    """Model spectrum below the cutoff, with the optional mu-invariance table."""
    settings = create_model_settings(config.section("model"))
    spectrum = model_levels(settings.wells, settings.cutoff, config.tolerances["level_merge"])
    gaps = model_gaps(spectrum) if spectrum.complete_below else []
    payload = {
        "spectrum": spectrum.to_dict(),
        "gaps": [g.to_dict() for g in gaps],
        "wells": [
            {"label": w.label, "frequencies": well_frequencies(w).tolist() if w.is_scalar else None}
            for w in settings.wells
        ],
    }
    failure = None
    if settings.mu_check is not None:
        checks = []
        for w in settings.wells:
            if w.is_scalar and w.dim <= 2:
                report = mu_invariance_check(w, settings.mu_check["mus"], settings.mu_check["count"],
                                             settings.mu_check["tolerance"])
                checks.append(report.to_dict())
        payload["mu_invariance"] = checks
        if not all(c["passed"] for c in checks):
            failure = _failure(ErrorCodes.INVALID_INPUT, "mu-invariance check exceeds tolerance")
    tables = {
        "levels.csv": (["level", "multiplicity"], [list(level) for level in spectrum.levels]),
        "gaps.csv": (["a", "b"], [[g.a, g.b] for g in gaps]),
    }
    return Report("model-spectrum", "model_summary.json", payload, tables, failure)


# -- gap-certify ------------------------------------------------------------

def run_gap_certify(config):
    """Certificate at one coupling, or the constructive sweep for mu0."""
    settings = create_certify_settings(config.section("certify"))
    payload = {"gap": settings.gap.to_dict(), "kappa": settings.kappa, "mode": settings.problem.mode}
    if settings.mus:
        sweep = certification_sweep(settings.problem, settings.gap, settings.mus, settings.kappa)
        payload["sweep"] = sweep.to_dict()
        certified = sweep.first_certified_mu is not None
        reason = "no coupling in the sweep is certified"
    else:
        params = estimate_parameters(settings.mu, settings.kappa, settings.problem.cutoff, settings.problem)
        result = certify_gap(params, settings.gap)
        payload["mu"] = settings.mu
        payload["params"] = params.to_dict()
        payload["result"] = result.to_dict()
        certified = result.certified
        reason = result.reason
    payload["certified"] = certified
    failure = None if certified else _failure(ErrorCodes.CERTIFICATE_FAILURE, reason)
    return Report("gap-certify", "certificate.json", payload, failure=failure)


# -- simulate ---------------------------------------------------------------

def _bands_rows(bands):
    rows = []
    for k, energies in zip(bands.kpoints, bands.energies):
        for index, energy in enumerate(energies):
            rows.append(list(k) + [index, energy])
    return rows


def run_simulate(config, threads=None):
    """Band structure, IDS and gaps; the gap-emergence sweep when mu_list is set."""
    section = config.section("simulate")
    lattice = create_lattice_config(section, config.seed, threads)
    cutoff = section.get("cutoff")
    samples = validate_int(section.get("ids_samples", 200), "ids_samples", 2)
    bands = bloch_spectrum(lattice)
    model = None
    if cutoff is not None and len(lattice.wells):
        model = model_levels(model_wells(lattice), validate_positive(cutoff, "cutoff"))

    gap_rows = []
    for gap in bands.gaps:
        ids_value = bands.ids(gap.midpoint)
        match = None
        if model is not None and gap.midpoint <= model.cutoff:
            match = abs(ids_value - counting_function(model, gap.midpoint)) < 1e-9
        gap_rows.append([gap.a, gap.b, ids_value, match])
    grid, ids = bands.ids_samples(samples)
    k_columns = [f"k{j + 1}" for j in range(lattice.dim)]
    tables = {
        "bands.csv": (k_columns + ["band", "energy"], _bands_rows(bands)),
        "ids.csv": (["lambda", "ids"], [[x, y] for x, y in zip(grid, ids)]),
        "gaps.csv": (["a", "b", "ids_value", "model_match"], gap_rows),
    }
    payload = {
        "mu": lattice.mu,
        "kpoints": len(bands.kpoints),
        "bands": int(bands.energies.shape[1]),
        "band_edges": bands.band_edges(),
        "gaps": [dict(g.to_dict(), ids_value=r[2], model_match=r[3]) for g, r in zip(bands.gaps, gap_rows)],
        "failed_kpoints": list(bands.failed),
    }
    failure = None
    if lattice.mu_list:
        if model is None:
            raise ValidationError("A mu sweep needs wells and a cutoff", ErrorCodes.INVALID_CONFIG)
        kappa = float(section.get("kappa", 0.4))
        sweep = gap_emergence_sweep(lattice, lattice.mu_list, model.cutoff)
        sweep_rows, summary = [], []
        for row in sweep.rows:
            defect = None
            if row.detected_gaps:
                lam = row.detected_gaps[0].midpoint
                defect = localization_defect(lattice.with_updates(mu=row.mu), lam, kappa)
            max_distance = float(row.level_distances.max()) if len(row.level_distances) else None
            sweep_rows.append([row.mu, len(row.detected_gaps), row.hausdorff, max_distance,
                               row.trace_equals_rank, defect])
            summary.append({
                "mu": row.mu,
                "detected_gaps": [g.to_dict() for g in row.detected_gaps],
                "band_centers": row.band_centers,
                "level_distances": row.level_distances,
                "hausdorff": row.hausdorff,
                "ids_checks": [
                    {"a": c.gap.a, "b": c.gap.b, "ids_value": c.ids_value,
                     "model_count": c.model_count, "match": c.match}
                    for c in row.ids_checks
                ],
                "localization_defect": defect,
            })
        tables["sweep.csv"] = (
            ["mu", "gap_count", "hausdorff", "max_level_distance", "trace_equals_rank", "localization_defect"],
            sweep_rows,
        )
        payload["sweep"] = summary
        if not all(r.trace_equals_rank for r in sweep.smallest(2)):
            failure = _failure(ErrorCodes.NOT_IN_GAP, "IDS differs from the model count at small mu")
    return Report("simulate", "simulate_summary.json", payload, tables, failure)


# -- hall -------------------------------------------------------------------

def _fermi_level(lattice, section):
    if section.get("fermi_level") is not None:
        return float(section["fermi_level"])
    index = validate_int(section.get("gap_index", 0), "gap_index", 0)
    gaps = bloch_spectrum(lattice).gaps
    if index >= len(gaps):
        raise HypothesisError(f"Gap {index} not found; {len(gaps)} gaps detected", ErrorCodes.NOT_IN_GAP)
    return gaps[index].midpoint


def run_hall(config, threads=None):
    """Chern numbers by both methods for each coupling."""
    section = config.section("hall")
    lattice = create_lattice_config(section, config.seed, threads)
    tol = config.tolerances["chern_agreement"]
    options = {}
    for key in ("fhs_grid", "kubo_grid", "kubo_radius"):
        if section.get(key) is not None:
            options[key] = tuple(int(v) for v in section[key])
    results = []
    for mu in (lattice.mu_list or (lattice.mu,)):
        current = lattice.with_updates(mu=float(mu))
        lam = _fermi_level(current, section)
        results.append(hall_conductance(current, lam, tol=tol, **options))
    rows = [[r.mu, r.fermi_level, r.chern_a, r.chern_b] for r in results]
    payload = {"results": [r.to_dict() for r in results]}
    failure = None
    bad = [r for r in results if not (r.agree and r.integral)]
    if bad:
        failure = _failure(ErrorCodes.METHODS_DISAGREE,
                           f"Chern methods disagree or are not integral at mu={[r.mu for r in bad]}")
    return Report("hall", "hall_summary.json", payload,
                  {"hall.csv": (["mu", "lambda", "chern_a", "chern_b"], rows)}, failure)


RUNNERS = {
    "validate-algebra": ("algebra", run_validate_algebra),
    "pair-cocycle": ("cocycle", run_pair_cocycle),
    "model-spectrum": ("model", run_model_spectrum),
    "gap-certify": ("certify", run_gap_certify),
    "simulate": ("simulate", run_simulate),
    "hall": ("hall", run_hall),
}
