"""
Concentration de la variable Z_K : fonctions psi, psi*, phi, bornes de
Bennett, de Bernstein et borne globale, bornes de variance, et moments
exacts de l'information H_K reconstitués à partir de la suite.

Les quantités exponentielles sont calculées en log puis exponentiées.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from services.checks import Check, close, leq
from services.exact import IVSequence
from services.ivstats import log_probabilities, normalize

logger = logging.getLogger(__name__)

UPPER = "upper"
LOWER = "lower"


class BoundDomainError(ValueError):
    """Erreur levée lorsqu'un argument sort du domaine d'une borne."""


def psi(theta: float) -> float:
    """psi(s) = (e^{2s} - 2s - 1) / 2, +inf au-delà du domaine flottant."""
    with np.errstate(over="ignore"):
        return float(0.5 * (np.expm1(2.0 * theta) - 2.0 * theta))


def _exp(log_value: float) -> float:
    """exp qui sature à inf au lieu de lever OverflowError."""
    with np.errstate(over="ignore"):
        return float(np.exp(log_value))


def psi_star(s: float) -> float:
    """psi*(s) = ((1+s) log(1+s) - s) / 2, pour s > -1."""
    if s <= -1:
        raise BoundDomainError(f"psi* n'est défini que pour s > -1 (reçu {s})")
    return 0.5 * ((1.0 + s) * math.log1p(s) - s)


def phi(beta: float) -> float:
    """phi(s) = -s - log(1 - s), pour s < 1."""
    if beta >= 1:
        raise BoundDomainError(f"phi n'est défini que pour s < 1 (reçu {beta})")
    return -beta - math.log1p(-beta)


@dataclass(frozen=True)
class ConcentrationStats:
    n: int
    mean: float
    variance: float
    eh: float
    eh2: float

    @property
    def var_h(self) -> float:
        return self.eh2 - self.eh ** 2


def h_moments_from_sequence(a: IVSequence) -> ConcentrationStats:
    """
    E H = (n - EZ)/2 et 4 E H^2 = E(n - Z)^2 + 2 E(n - Z), calculés
    directement sur la loi normalisée.
    """
    dist = normalize(a)
    probs = np.asarray(dist.probs)
    gap = a.n - np.arange(a.n + 1)
    first = float(np.dot(gap, probs))
    second = float(np.dot(gap ** 2, probs))
    return ConcentrationStats(
        n=a.n,
        mean=dist.mean,
        variance=dist.variance,
        eh=first / 2.0,
        eh2=(second + 2.0 * first) / 4.0,
    )


def variance_bound(stats: ConcentrationStats) -> Tuple[float, float]:
    """(2(n + EZ), 4n)."""
    return 2.0 * (stats.n + stats.mean), 4.0 * stats.n


def variance_bound_sharp(stats: ConcentrationStats) -> float:
    """2(n - EZ), version affinée (niveau remarque)."""
    return 2.0 * (stats.n - stats.mean)


def _check_side(side: str) -> None:
    if side not in (UPPER, LOWER):
        raise BoundDomainError(f"Côté inconnu: {side!r} (attendu 'upper' ou 'lower')")


def _check_t(t: float) -> None:
    if not t >= 0:
        raise BoundDomainError(f"t doit être >= 0 (reçu {t})")


def log_bennett_tail(n: int, ez: float, t: float, side: str) -> float:
    _check_side(side)
    _check_t(t)
    scale = n + ez
    argument = t / scale if side == UPPER else -t / scale
    if argument <= -1:
        raise BoundDomainError(
            f"Borne inférieure de Bennett hors domaine : t={t} >= n + EZ = {scale}"
        )
    return -scale * psi_star(argument)


def bennett_tail(n: int, ez: float, t: float, side: str) -> float:
    return _exp(log_bennett_tail(n, ez, t, side))


def log_bernstein_tail(n: int, ez: float, t: float, side: str) -> float:
    _check_side(side)
    _check_t(t)
    scale = n + ez
    if side == UPPER:
        return -(t * t / 4.0) / (scale + t / 3.0)
    if t >= scale:
        raise BoundDomainError(
            f"Borne inférieure de Bernstein hors domaine : t={t} >= n + EZ = {scale}"
        )
    return -(t * t / 4.0) / (scale - t / 3.0)


def bernstein_tail(n: int, ez: float, t: float, side: str) -> float:
    return _exp(log_bernstein_tail(n, ez, t, side))


def headline_tail(n: int, t: float) -> float:
    """2 exp(-3 t^2 / (28 n)) avec t en unités d'indice (tau = t / sqrt(n))."""
    _check_t(t)
    if t > n:
        raise BoundDomainError(f"Borne globale valable pour 0 <= t <= n (t={t}, n={n})")
    return 2.0 * math.exp(-3.0 * t * t / (28.0 * n))


def log_mgf_lhs(a: IVSequence, theta: float) -> float:
    dist = normalize(a)
    j = np.arange(a.n + 1)
    return float(logsumexp(log_probabilities(a) + theta * (j - dist.mean)))


def mgf_lhs(a: IVSequence, theta: float) -> float:
    """m_K(theta) = sum_j Vtilde_j e^{theta (j - EZ)} par sommation directe."""
    return _exp(log_mgf_lhs(a, theta))


def mgf_bound(n: int, ez: float, theta: float) -> float:
    return _exp(psi(theta) * (n + ez))


def mgf_checks(a: IVSequence, thetas: Sequence[float]) -> List[Check]:
    ez = normalize(a).mean
    checks = []
    for theta in thetas:
        lhs = log_mgf_lhs(a, theta)
        rhs = psi(theta) * (a.n + ez)
        checks.append(leq(f"mgf.theta={theta:g}", lhs, rhs, slack=1e-12 * max(1.0, abs(rhs))))
    return checks


def information_mgf(a: IVSequence, beta: float) -> float:
    """
    log E exp(beta (H - EH)), reconstitué exactement :
    E e^{beta H} = E e^{theta (Z - n)} avec e^{2 theta} = 1 - beta.
    """
    if beta >= 1:
        raise BoundDomainError(f"beta doit être < 1 (reçu {beta})")
    theta = 0.5 * math.log1p(-beta)
    dist = normalize(a)
    j = np.arange(a.n + 1)
    log_e_beta_h = float(logsumexp(log_probabilities(a) + theta * (j - a.n)))
    eh = (a.n - dist.mean) / 2.0
    return log_e_beta_h - beta * eh


def information_mgf_check(a: IVSequence, betas: Sequence[float]) -> List[Check]:
    """E e^{beta (H - EH)} <= e^{n phi(beta)} (densité log-concave)."""
    checks = []
    for beta in betas:
        lhs = information_mgf(a, beta)
        rhs = a.n * phi(beta)
        checks.append(leq(f"information_mgf.beta={beta:g}", lhs, rhs, slack=1e-12 * max(1.0, abs(rhs))))
    return checks


def mgf_identity_check(a: IVSequence, thetas: Sequence[float]) -> List[Check]:
    """m_K(theta) = e^{-phi(beta) EH} E e^{beta (H - EH)} avec beta = 1 - e^{2 theta}."""
    stats = h_moments_from_sequence(a)
    checks = []
    for theta in thetas:
        beta = -math.expm1(2.0 * theta)
        rhs = -phi(beta) * stats.eh + information_mgf(a, beta)
        checks.append(close(f"mgf_identity.theta={theta:g}", log_mgf_lhs(a, theta), rhs, 1e-9, abs_tol=1e-12))
    return checks


def identity_checks(a: IVSequence, rel_tol: float = 1e-12) -> List[Check]:
    """EZ = n - 2 EH, VarZ = 4 (VarH - EH), et VarH <= n."""
    stats = h_moments_from_sequence(a)
    abs_tol = rel_tol * max(1.0, a.n)
    return [
        close("identity.mean", stats.mean, a.n - 2.0 * stats.eh, rel_tol, abs_tol=abs_tol),
        close("identity.variance", stats.variance, 4.0 * (stats.var_h - stats.eh), rel_tol, abs_tol=abs_tol),
        leq("varentropy.bound", stats.var_h, float(a.n), slack=abs_tol),
        leq("information.eh_nonnegative", 0.0, stats.eh),
    ]


def variance_checks(a: IVSequence) -> List[Check]:
    stats = h_moments_from_sequence(a)
    bound_mean, bound_4n = variance_bound(stats)
    slack = 1e-12 * max(1.0, a.n)
    return [
        leq("variance.bound_2n_plus", stats.variance, bound_mean, slack=slack),
        leq("variance.bound_4n", bound_mean, bound_4n, slack=slack),
        leq("variance.bound_sharp", stats.variance, variance_bound_sharp(stats), slack=slack, advisory=True),
    ]


@dataclass(frozen=True)
class TailRow:
    t: float
    upper_mass: float
    lower_mass: float
    two_sided_mass: float
    bennett_upper: float
    bennett_lower: Optional[float]
    bernstein_upper: float
    bernstein_lower: Optional[float]
    headline: Optional[float]

    @property
    def bennett_two_sided(self) -> float:
        return self.bennett_upper + (self.bennett_lower or 0.0)

    @property
    def bernstein_two_sided(self) -> float:
        return self.bernstein_upper + (self.bernstein_lower or 0.0)

    @property
    def in_headline_range(self) -> bool:
        return self.headline is not None


@dataclass(frozen=True)
class TailReport:
    n: int
    mean: float
    rows: Tuple[TailRow, ...]

    @property
    def grid(self) -> List[float]:
        return [row.t for row in self.rows]

    def checks(self) -> List[Check]:
        checks = []
        for row in self.rows:
            tag = f"t={row.t:g}"
            checks.append(leq(f"tail.upper.bennett.{tag}", row.upper_mass, row.bennett_upper, slack=1e-12))
            checks.append(leq(f"tail.upper.bernstein.{tag}", row.bennett_upper, row.bernstein_upper, slack=1e-12))
            if row.bennett_lower is None:
                # Hors domaine : Z >= 0 et t > EZ, la masse doit être nulle.
                checks.append(leq(f"tail.lower.empty.{tag}", row.lower_mass, 0.0))
            else:
                checks.append(leq(f"tail.lower.bennett.{tag}", row.lower_mass, row.bennett_lower, slack=1e-12))
                checks.append(leq(f"tail.lower.bernstein.{tag}", row.bennett_lower, row.bernstein_lower, slack=1e-12))
            checks.append(leq(f"tail.two_sided.bennett.{tag}", row.two_sided_mass, row.bennett_two_sided, slack=1e-12))
            if row.in_headline_range:
                checks.append(leq(f"tail.two_sided.bernstein_headline.{tag}", row.bernstein_two_sided, row.headline, slack=1e-12))
                checks.append(leq(f"tail.two_sided.headline.{tag}", row.two_sided_mass, row.headline, slack=1e-12))
        return checks

    def violations(self) -> List[Check]:
        return [check for check in self.checks() if not check.passed]


def default_tail_grid(n: int) -> List[float]:
    """{0.5, 1, ..., n}."""
    return [0.5 * k for k in range(1, 2 * n + 1)]


def tail_report(a: IVSequence, grid: Optional[Sequence[float]] = None) -> TailReport:
    """
    Masses de queue exactes (sommation directe, seuil fermé >= t) face aux
    bornes de Bennett, de Bernstein et à la borne globale.
    """
    n = a.n
    grid = default_tail_grid(n) if grid is None else list(grid)
    dist = normalize(a)
    probs = np.asarray(dist.probs)
    deviation = np.arange(n + 1) - dist.mean
    # Tolérance d'arrondi : un indice à la frontière est compté dans la queue.
    tol = 1e-9 * max(1.0, n)
    scale = n + dist.mean

    rows = []
    for t in grid:
        _check_t(t)
        upper = float(probs[deviation >= t - tol].sum())
        lower = float(probs[deviation <= -t + tol].sum())
        two_sided = float(probs[np.abs(deviation) >= t - tol].sum())
        lower_applicable = t < scale
        if t > n:
            logger.debug("t=%s hors du domaine de la borne globale (n=%s)", t, n)
        rows.append(TailRow(
            t=float(t),
            upper_mass=upper,
            lower_mass=lower,
            two_sided_mass=two_sided,
            bennett_upper=bennett_tail(n, dist.mean, t, UPPER),
            bennett_lower=bennett_tail(n, dist.mean, t, LOWER) if lower_applicable else None,
            bernstein_upper=bernstein_tail(n, dist.mean, t, UPPER),
            bernstein_lower=bernstein_tail(n, dist.mean, t, LOWER) if lower_applicable else None,
            headline=headline_tail(n, t) if t <= n else None,
        ))
    return TailReport(n=n, mean=dist.mean, rows=tuple(rows))
