"""
Couche distributionnelle : suite normalisée, fonctionnelle de Wills,
volume intrinsèque central, variance, entropie intrinsèque, contrôles
ULC / Chevet–McMullen, quermassintégrales et fonction génératrice.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy.special import entr, gammaln, logsumexp

from services.bodies import (
    Ball,
    BodyError,
    BodySpec,
    Box,
    Embedded,
    Point,
    Product,
    Scaled,
    Translated,
)
from services.checks import Check, close, leq
from services.exact import IVSequence, log_binom, log_kappa, scale_sequence, sequence_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IVDistribution:
    n: int
    probs: Tuple[float, ...]
    mean: float
    variance: float
    entropy: float


def _default_rtol(rel_tol: Optional[float]) -> float:
    return getattr(settings, "IV_LAB_ULC_RTOL", 1e-9) if rel_tol is None else rel_tol


def wills(a: IVSequence) -> float:
    try:
        return math.fsum(a.values)
    except OverflowError:
        return math.inf


def log_probabilities(a: IVSequence) -> np.ndarray:
    """log Vtilde_j = log V_j - log W, sans jamais former W."""
    return a.log_values() - a.log_wills()


def _probabilities(a: IVSequence) -> np.ndarray:
    total = wills(a)
    if math.isfinite(total) and not a.overflows:
        return a.array / total
    # W déborde (grands corps) : on passe par les logarithmes.
    return np.exp(log_probabilities(a))


def normalize(a: IVSequence) -> IVDistribution:
    probs = _probabilities(a)
    j = np.arange(a.n + 1)
    mean = float(np.dot(j, probs))
    variance = float(np.dot((j - mean) ** 2, probs))
    return IVDistribution(
        n=a.n,
        probs=tuple(float(p) for p in probs),
        mean=mean,
        variance=max(variance, 0.0),
        entropy=float(entr(probs).sum()),
    )


def central_iv(a: IVSequence) -> float:
    return normalize(a).mean


def central_iv_of(body: BodySpec) -> float:
    """
    Delta(K) par la structure du corps : somme s_i/(1+s_i) pour les pavés,
    additivité sur les produits, invariance par translation et plongement.
    Ne calcule jamais W, donc reste fini pour de très grands corps.
    """
    return _structural_delta(body, 1.0)


def _structural_delta(body: BodySpec, factor: float) -> float:
    if isinstance(body, Box):
        return math.fsum(factor * s / (1.0 + factor * s) for s in body.lengths)
    if isinstance(body, Point):
        return 0.0
    if isinstance(body, Product):
        return _structural_delta(body.left, factor) + _structural_delta(body.right, factor)
    if isinstance(body, Scaled):
        return _structural_delta(body.inner, factor * body.factor)
    if isinstance(body, (Translated, Embedded)):
        return _structural_delta(body.inner, factor)
    if isinstance(body, Ball):
        return central_iv(sequence_of(Ball(body.ambient_dim, factor * body.radius)))
    raise BodyError(f"Type de corps inconnu: {type(body).__name__}")


def variance(a: IVSequence) -> float:
    return normalize(a).variance


def intrinsic_entropy(a: IVSequence) -> float:
    """Entropie de Shannon (log naturel) de Z_K, avec 0 log 0 = 0."""
    return normalize(a).entropy


@dataclass(frozen=True)
class ULCRow:
    j: int
    lhs: float
    rhs: float
    passed: bool


@dataclass(frozen=True)
class ULCReport:
    rows: Tuple[ULCRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def failing_indices(self) -> List[int]:
        return [row.j for row in self.rows if not row.passed]

    def as_checks(self, prefix: str = "ulc") -> List[Check]:
        return [Check(f"{prefix}.j{row.j}", row.passed, row.rhs, row.lhs) for row in self.rows]


def ulc_check(a: IVSequence, rel_tol: Optional[float] = None) -> ULCReport:
    """
    j V_j^2 >= (j+1) V_{j+1} V_{j-1} pour j = 1..n-1, à rel_tol près.
    La comparaison se fait en log ; les lignes gardent les valeurs linéaires.
    """
    rel_tol = _default_rtol(rel_tol)
    if rel_tol < 0:
        raise BodyError("rel_tol doit être positif ou nul")
    v = a.array
    logs = a.log_values()
    rows = []
    for j in range(1, a.n):
        log_lhs = math.log(j) + 2.0 * logs[j]
        log_rhs = math.log(j + 1) + logs[j + 1] + logs[j - 1]
        passed = log_rhs == -math.inf or log_lhs + math.log1p(rel_tol) >= log_rhs
        with np.errstate(over="ignore"):
            lhs = j * v[j] ** 2
            rhs = (j + 1) * v[j + 1] * v[j - 1]
        rows.append(ULCRow(j, float(lhs), float(rhs), bool(passed)))
    return ULCReport(tuple(rows))


def chevet_mcmullen_check(a: IVSequence, rel_tol: Optional[float] = None) -> List[Check]:
    """
    log V_j <= j log V_1 - log j! pour tout j, et log W <= V_1.
    lhs et rhs des vérifications sont des logarithmes.
    """
    rel_tol = _default_rtol(rel_tol)
    logs = a.log_values()
    v1 = a.values[1] if a.n >= 1 else 0.0
    checks = []
    if a.n >= 1:
        for j in range(a.n + 1):
            if j == 0:
                rhs = 0.0
            elif v1 > 0:
                rhs = j * float(logs[1]) - float(gammaln(j + 1))
            else:
                rhs = -math.inf
            lhs = float(logs[j])
            ok = lhs == -math.inf or lhs <= rhs + rel_tol
            checks.append(Check(f"chevet_mcmullen.V{j}", bool(ok), lhs, rhs))
    checks.append(leq("chevet_mcmullen.wills", a.log_wills(), v1, slack=rel_tol * max(1.0, v1)))
    return checks


def log_quermassintegrals(a: IVSequence) -> np.ndarray:
    n = a.n
    j = np.arange(n + 1)
    return log_kappa(j) + a.log_values()[::-1] - log_binom(n, j)


def quermassintegrals(a: IVSequence) -> List[float]:
    """W_j^(n) = kappa_j V_{n-j} / C(n, j) pour j = 0..n."""
    with np.errstate(over="ignore"):
        return [float(w) for w in np.exp(log_quermassintegrals(a))]


def quermass_logconcavity_check(a: IVSequence, rel_tol: Optional[float] = None) -> List[Check]:
    """W_{j-1} W_{j+1} <= W_j^2, comparé en log (lhs et rhs sont des logarithmes)."""
    rel_tol = _default_rtol(rel_tol)
    w = log_quermassintegrals(a)
    checks = []
    for j in range(1, a.n):
        lhs = float(w[j - 1] + w[j + 1])
        rhs = float(2.0 * w[j])
        ok = lhs == -math.inf or lhs <= rhs + rel_tol
        checks.append(Check(f"quermass_logconcave.j{j}", bool(ok), lhs, rhs))
    return checks


def gf_eval(a: IVSequence, lam: float) -> float:
    """G(lambda) = sum_j lambda^j V_j."""
    if lam <= 0:
        raise BodyError("lambda doit être strictement positif")
    if a.overflows:
        with np.errstate(over="ignore"):
            return float(np.exp(log_gf_eval(a, lam)))
    # Horner sur les coefficients du plus haut degré au plus bas.
    return float(np.polyval(a.array[::-1], float(lam)))


def log_gf_eval(a: IVSequence, lam: float) -> float:
    if lam <= 0:
        raise BodyError("lambda doit être strictement positif")
    j = np.arange(a.n + 1)
    return float(logsumexp(a.log_values() + j * math.log(lam)))


def gf_log_derivative_at_1(a: IVSequence) -> float:
    """G'(1) / G(1), qui vaut Delta(K)."""
    j = np.arange(a.n + 1)
    if not a.overflows and math.isfinite(wills(a)):
        return float(np.dot(j, a.array) / wills(a))
    with np.errstate(divide="ignore"):
        return float(np.exp(logsumexp(np.log(j) + a.log_values()) - a.log_wills()))


def gf_scaling_check(a: IVSequence, lams: Sequence[float] = (0.1, 0.5, 1.0, 2.0, 10.0)) -> List[Check]:
    """G(lambda) = W(lambda K), comparés en log."""
    return [
        close(
            f"gf.scaling.lambda={lam:g}",
            log_gf_eval(a, lam),
            scale_sequence(a, lam).log_wills(),
            1e-12,
            abs_tol=1e-12,
        )
        for lam in lams
    ]


@dataclass(frozen=True)
class TrendRow:
    scale: float
    top_mass: float
    entropy: float


def large_set_trend(a: IVSequence, scales: Sequence[float] = (1.0, 10.0, 100.0, 1e3, 1e4)) -> List[TrendRow]:
    """
    Pour s croissant : la masse normalisée à l'indice dim K tend vers 1 et
    l'entropie intrinsèque vers 0.
    """
    nonzero = np.flatnonzero(a.array > 0)
    top = int(nonzero[-1]) if len(nonzero) else 0
    rows = []
    for scale in sorted(scales):
        dist = normalize(scale_sequence(a, scale))
        rows.append(TrendRow(float(scale), dist.probs[top], dist.entropy))
    return rows


def large_set_trend_checks(a: IVSequence, scales: Sequence[float] = (1.0, 10.0, 100.0, 1e3, 1e4)) -> List[Check]:
    rows = large_set_trend(a, scales)
    checks = []
    for previous, current in zip(rows, rows[1:]):
        checks.append(leq(f"large_set.top_mass.s={current.scale:g}", previous.top_mass, current.top_mass, slack=1e-12))
    for row in rows:
        # Fano : H(Z) <= h(1 - m) + (1 - m) log n, qui tend vers 0 avec m -> 1.
        miss = min(max(1.0 - row.top_mass, 0.0), 1.0)
        fano = float(entr(miss) + entr(1.0 - miss)) + miss * math.log(max(a.n, 1))
        checks.append(leq(f"large_set.entropy.s={row.scale:g}", row.entropy, fano, slack=1e-12))
    return checks


def index_gap(a: IVSequence) -> Tuple[float, float]:
    """
    n - Delta = sum_j (n - j) Vtilde_j, renvoyé avec son logarithme.
    Reste strictement positif même quand Delta s'arrondit à n.
    """
    j = np.arange(a.n + 1)
    with np.errstate(divide="ignore"):
        log_gap = float(logsumexp(np.log(a.n - j) + log_probabilities(a)))
    return math.exp(log_gap), log_gap


def distribution_checks(a: IVSequence) -> List[Check]:
    dist = normalize(a)
    gap, log_gap = index_gap(a)
    checks = [
        close("distribution.sum", math.fsum(dist.probs), 1.0, 1e-12),
        leq("distribution.nonnegative", -min(dist.probs), 0.0),
        leq("distribution.delta_nonnegative", 0.0, dist.mean),
        # Delta peut s'arrondir à n en flottant : l'écart est calculé en log.
        Check("distribution.delta_below_n", log_gap > -math.inf, gap, 0.0),
        leq("distribution.variance_nonnegative", 0.0, dist.variance),
        leq("distribution.entropy_nonnegative", 0.0, dist.entropy),
        close("distribution.v0", a.values[0], 1.0, 1e-12),
        close("distribution.delta_gf", gf_log_derivative_at_1(a), dist.mean, 1e-12, abs_tol=1e-12),
    ]
    return checks
