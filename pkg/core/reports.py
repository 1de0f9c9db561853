"""
Assemblage des rapports de la commande `ivlab` : chaque sous-commande
produit un `Report` que la commande affiche, sérialise en JSON ou exporte
en CSV.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from django.conf import settings

from services import bounds, exact, ivstats, maxent, montecarlo
from services.bodies import Ball, Box, BodySpec, Translated, ambient_dim, intrinsic_dim
from services.checks import Check, failures

from .bodyexpr import format_body, parse_body
from .corpus import CUBE_SCALES, corpus

logger = logging.getLogger(__name__)

DEFAULT_THETAS = tuple(float(theta) for theta in np.linspace(-2.0, 2.0, 17))


@dataclass
class Report:
    body: str
    sequence: List[float] = field(default_factory=list)
    wills: Optional[float] = None
    delta: Optional[float] = None
    variance: Optional[float] = None
    entropy: Optional[float] = None
    estimates: List[montecarlo.MCEstimate] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)
    table_header: List[str] = field(default_factory=list)
    table_rows: List[List[float]] = field(default_factory=list)

    @property
    def failures(self) -> List[Check]:
        return failures(self.checks)

    @property
    def passed(self) -> bool:
        return not self.failures


def _describe(text: str, body: BodySpec, report: Optional[Report] = None) -> Report:
    a = exact.sequence_of(body)
    dist = ivstats.normalize(a)
    report = report or Report(body=text)
    report.sequence = list(a.values)
    report.wills = ivstats.wills(a)
    report.extras["log_wills"] = a.log_wills()
    report.delta = dist.mean
    report.variance = dist.variance
    report.entropy = dist.entropy
    report.extras.setdefault("canonical", format_body(body))
    return report


def exact_report(text: str) -> Report:
    body = parse_body(text)
    report = _describe(text, body)
    a = exact.sequence_of(body)
    report.extras.update({
        "ambient_dim": ambient_dim(body),
        "intrinsic_dim": intrinsic_dim(body),
    })
    report.checks.append(exact.nonnegativity_check(a))
    return report


def stats_report(text: str) -> Report:
    body = parse_body(text)
    report = _describe(text, body)
    a = exact.sequence_of(body)
    ulc = ivstats.ulc_check(a)
    report.extras.update({
        "probabilities": list(ivstats.normalize(a).probs),
        "structural_delta": ivstats.central_iv_of(body),
        "quermassintegrals": ivstats.quermassintegrals(a),
        "ulc": [asdict(row) for row in ulc.rows],
        "ulc_failing": ulc.failing_indices(),
    })
    report.checks += ivstats.distribution_checks(a)
    report.checks += ulc.as_checks()
    report.checks += ivstats.chevet_mcmullen_check(a)
    report.checks += ivstats.quermass_logconcavity_check(a)
    report.checks += ivstats.gf_scaling_check(a)
    return report


def bounds_report(text: str, thetas: Optional[Sequence[float]] = None) -> Report:
    body = parse_body(text)
    report = _describe(text, body)
    a = exact.sequence_of(body)
    thetas = DEFAULT_THETAS if thetas is None else tuple(thetas)
    stats = bounds.h_moments_from_sequence(a)
    bound_mean, bound_4n = bounds.variance_bound(stats)
    report.extras.update({
        "variance_bound": bound_mean,
        "variance_bound_4n": bound_4n,
        "variance_bound_sharp": bounds.variance_bound_sharp(stats),
        "variance_ratio": bound_mean / stats.variance if stats.variance > 0 else None,
        "eh": stats.eh,
        "eh2": stats.eh2,
        "var_h": stats.var_h,
    })
    betas = [-math.expm1(2.0 * theta) for theta in thetas]
    report.checks += bounds.variance_checks(a)
    report.checks += bounds.identity_checks(a)
    report.checks += bounds.mgf_checks(a, thetas)
    report.checks += bounds.information_mgf_check(a, betas)
    report.checks += bounds.mgf_identity_check(a, thetas)
    report.table_header = ["theta", "log_mgf", "log_mgf_bound"]
    report.table_rows = [
        [theta, bounds.log_mgf_lhs(a, theta), bounds.psi(theta) * (a.n + stats.mean)]
        for theta in thetas
    ]
    return report


def tails_report(text: str, grid: Optional[Sequence[float]] = None) -> Report:
    body = parse_body(text)
    report = _describe(text, body)
    tails = bounds.tail_report(exact.sequence_of(body), grid)
    report.extras["tails"] = [
        dict(asdict(row), in_headline_range=row.in_headline_range) for row in tails.rows
    ]
    report.checks += tails.checks()
    report.table_header = [
        "t", "upper_mass", "lower_mass", "two_sided_mass",
        "bennett_upper", "bennett_lower", "bernstein_upper", "bernstein_lower", "headline",
    ]
    report.table_rows = [
        [row.t, row.upper_mass, row.lower_mass, row.two_sided_mass,
         row.bennett_upper, row.bennett_lower, row.bernstein_upper, row.bernstein_lower, row.headline]
        for row in tails.rows
    ]
    return report


def maxent_report(text: str) -> Report:
    body = parse_body(text)
    report = _describe(text, body)
    a = exact.sequence_of(body)
    result = maxent.maxent_check(a)
    report.extras.update({
        "p": result.p,
        "matched_entropy": result.matched_entropy,
        "half_entropy": result.half_entropy,
        "matched_gap": result.matched_gap,
        "half_gap": result.half_gap,
        "cube_scale": maxent.cube_scale_of(a),
    })
    report.checks += list(result.checks)
    return report


# --- Rapports Monte Carlo ----------------------------------------------------

def _attach(report: Report, estimate: montecarlo.MCEstimate, reference: float) -> None:
    report.estimates.append(estimate)
    report.checks.append(montecarlo.compare(estimate, reference))
    report.extras.setdefault("exact", {})[estimate.estimator_id] = reference
    report.extras.setdefault("se_distance", {})[estimate.estimator_id] = estimate.se_distance(reference)


def _mc_report(text: str) -> tuple:
    body = parse_body(text)
    return body, _describe(text, body)


def mc_wills_report(text: str, samples=None, seed=None, **options) -> Report:
    body, report = _mc_report(text)
    rng = montecarlo.RngStream(_seed(seed))
    _attach(report, montecarlo.wills_estimate(body, samples, rng, **options), report.wills)
    return report


def mc_kubota_report(text: str, index: int = 1, samples=None, seed=None, **options) -> Report:
    body, report = _mc_report(text)
    rng = montecarlo.RngStream(_seed(seed))
    options.pop("pad", None)
    estimate = montecarlo.kubota_estimate(body, index, samples, rng, **options)
    _attach(report, estimate, report.sequence[index])
    return report


def mc_steiner_report(text: str, lam: float = 1.0, samples=None, seed=None, **options) -> Report:
    body, report = _mc_report(text)
    rng = montecarlo.RngStream(_seed(seed))
    options.pop("pad", None)
    estimate, reference = montecarlo.steiner_check(body, lam, samples, rng, **options)
    _attach(report, estimate, reference)
    return report


def mc_gf_report(text: str, lam: float = 1.0, samples=None, seed=None, **options) -> Report:
    body, report = _mc_report(text)
    rng = montecarlo.RngStream(_seed(seed))
    estimate = montecarlo.gf_estimate(body, lam, samples, rng, **options)
    _attach(report, estimate, montecarlo.gf_reference(body, lam))
    return report


def mc_beta_report(text: str, lam: float = 1.0, samples=None, seed=None, **options) -> Report:
    body, report = _mc_report(text)
    rng = montecarlo.RngStream(_seed(seed))
    estimate, reference = montecarlo.beta_integral_check(body, lam, samples, rng, **options)
    _attach(report, estimate, reference)
    return report


def mc_hmoments_report(text: str, samples=None, seed=None, **options) -> Report:
    body, report = _mc_report(text)
    rng = montecarlo.RngStream(_seed(seed))
    stats = bounds.h_moments_from_sequence(exact.sequence_of(body))
    eh, eh2 = montecarlo.h_moment_estimates(body, samples, rng, **options)
    _attach(report, eh, stats.eh)
    _attach(report, eh2, stats.eh2)
    return report


def mc_mu_report(text: str, samples=None, seed=None, **options) -> Report:
    body, report = _mc_report(text)
    rng = montecarlo.RngStream(_seed(seed))
    options.pop("pad", None)
    result = montecarlo.mu_sample_statistics(body, samples, rng, **options)
    for estimate, expected in zip(result.inside, result.inside_expected):
        _attach(report, estimate, expected)
    stats = bounds.h_moments_from_sequence(exact.sequence_of(body))
    _attach(report, result.information, stats.eh)
    return report


MC_REPORTS = {
    "mc-wills": mc_wills_report,
    "mc-kubota": mc_kubota_report,
    "mc-steiner": mc_steiner_report,
    "mc-beta": mc_beta_report,
    "mc-gf": mc_gf_report,
    "mc-hmoments": mc_hmoments_report,
    "mc-mu": mc_mu_report,
}


def _seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    return getattr(settings, "IV_LAB_SEED", 0)


# --- Vérification du corpus --------------------------------------------------

def _prefixed(prefix: str, checks: Sequence[Check]) -> List[Check]:
    return [
        Check(f"{prefix}:{check.check_id}", check.passed, check.lhs, check.rhs, check.advisory)
        for check in checks
    ]


def exact_suite(text: str, body: BodySpec) -> List[Check]:
    """Toutes les vérifications exactes pour un corps du corpus."""
    a = exact.sequence_of(body)
    checks = [exact.nonnegativity_check(a)]
    checks += ivstats.distribution_checks(a)
    checks += ivstats.ulc_check(a).as_checks()
    checks += ivstats.chevet_mcmullen_check(a)
    checks += ivstats.quermass_logconcavity_check(a)
    checks += ivstats.gf_scaling_check(a)
    checks.append(Check(
        "structural_delta",
        math.isclose(ivstats.central_iv_of(body), ivstats.central_iv(a), rel_tol=1e-9, abs_tol=1e-12),
        ivstats.central_iv_of(body),
        ivstats.central_iv(a),
    ))
    checks += bounds.variance_checks(a)
    checks += bounds.identity_checks(a)
    checks += bounds.mgf_checks(a, DEFAULT_THETAS)
    checks += bounds.tail_report(a).checks()
    checks += list(maxent.maxent_check(a).checks)
    return _prefixed(text, checks)


def _structural_suite() -> List[Check]:
    checks = []
    for n in range(1, 11):
        for s in CUBE_SCALES:
            checks += maxent.cube_law_checks(n, s)
    checks += exact.box_valuation_check(Box((1.0, 2.0, 3.0)), Translated((0.0, 1.0, 0.0), Box((1.0, 2.0, 3.0))))
    checks += exact.monotonicity_check(Box((1.0, 1.0, 1.0)), Box((1.0, 2.0, 3.0)))
    checks += exact.monotonicity_check(Box((1.0, 1.0, 1.0)), Ball(3, math.sqrt(3.0)))
    for p in np.linspace(0.0, 1.0, 11):
        checks.append(Check(
            f"binomial_entropy.p={p:g}",
            maxent.binomial_entropy(6, p) <= maxent.binomial_entropy(6, 0.5) + 1e-12,
            maxent.binomial_entropy(6, p),
            maxent.binomial_entropy(6, 0.5),
        ))
    checks += ivstats.large_set_trend_checks(exact.box_sequence([1.0, 2.0, 3.0]))
    return checks


def _mc_suite(seed: int, samples: Optional[int], **options) -> List[tuple]:
    """Oracles MC du corpus ; chaque oracle a son propre sous-flux."""
    streams = iter(range(1, 1000))
    results = []

    def stream():
        return montecarlo.RngStream(seed, next(streams))

    for text in ("box:1,2,3", "cube:2", "ball:2,1"):
        body = parse_body(text)
        estimate = montecarlo.wills_estimate(body, samples, stream(), **options)
        results.append((text, estimate, ivstats.wills(exact.sequence_of(body))))
    box = parse_body("box:1,2,3")
    for j in (1, 2):
        estimate = montecarlo.kubota_estimate(box, j, samples, stream(), **_without_pad(options))
        results.append(("box:1,2,3", estimate, exact.sequence_of(box)[j]))
    square = parse_body("box:1,1")
    for lam in (0.5, 1.0):
        estimate, reference = montecarlo.steiner_check(square, lam, samples, stream(), **_without_pad(options))
        results.append(("box:1,1", estimate, reference))
    for lam in (1.0, 2.0):
        estimate = montecarlo.gf_estimate(square, lam, samples, stream(), **options)
        results.append(("box:1,1", estimate, montecarlo.gf_reference(square, lam)))
        estimate, reference = montecarlo.beta_integral_check(square, lam, samples, stream(), **options)
        results.append(("box:1,1", estimate, reference))
    stats = bounds.h_moments_from_sequence(exact.sequence_of(box))
    eh, _ = montecarlo.h_moment_estimates(box, samples, stream(), **options)
    results.append(("box:1,2,3", eh, stats.eh))
    sampled = montecarlo.mu_sample_statistics(box, samples, stream(), **_without_pad(options))
    for estimate, expected in zip(sampled.inside, sampled.inside_expected):
        results.append(("box:1,2,3", estimate, expected))
    results.append(("box:1,2,3", sampled.information, stats.eh))
    return results


def _without_pad(options: dict) -> dict:
    return {key: value for key, value in options.items() if key != "pad"}


def corpus_verify(seed=None, samples=None, skip_mc: bool = False, **options) -> Report:
    seed = _seed(seed)
    report = Report(body="corpus")
    bodies = corpus()
    for text, body in bodies:
        report.checks += exact_suite(text, body)
    report.checks += _structural_suite()
    if not skip_mc:
        for text, estimate, reference in _mc_suite(seed, samples, **options):
            report.estimates.append(estimate)
            report.checks += _prefixed(text, [montecarlo.compare(estimate, reference)])
    failed = report.failures
    for check in failed:
        logger.warning("Échec %s : lhs=%s rhs=%s", check.check_id, check.lhs, check.rhs)
    advisory = [check for check in report.checks if check.advisory and not check.passed]
    report.extras.update({
        "bodies": [text for text, _ in bodies],
        "seed": seed,
        "checks": len(report.checks),
        "failures": len(failed),
        "advisory_failures": len(advisory),
    })
    logger.info(
        "Corpus : %s corps, %s vérifications, %s échec(s)", len(bodies), len(report.checks), len(failed)
    )
    return report
