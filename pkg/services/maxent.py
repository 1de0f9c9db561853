"""
Entropie maximale : lois binomiales de référence, cube mis à l'échelle
s_{d,n} et vérification exécutable du théorème « les cubes maximisent
l'entropie intrinsèque ».
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from django.conf import settings
from scipy.special import entr
from scipy.stats import binom

from services.bounds import BoundDomainError
from services.checks import Check, leq
from services.exact import IVSequence, box_sequence, scale_sequence
from services.ivstats import index_gap, normalize, ulc_check

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BinomialDist:
    n: int
    p: float
    probs: Tuple[float, ...]

    @property
    def mean(self) -> float:
        return self.n * self.p


def binomial(n: int, p: float) -> BinomialDist:
    if not 0.0 <= p <= 1.0:
        raise BoundDomainError(f"p doit appartenir à [0, 1] (reçu {p})")
    probs = binom.pmf(np.arange(n + 1), n, p)
    return BinomialDist(n=n, p=float(p), probs=tuple(float(q) for q in probs))


def s_for_target(d: float, n: int) -> float:
    """Échelle s telle que Delta(s Q_n) = d, soit d / (n - d)."""
    if not math.isfinite(d) or d < 0 or d >= n:
        raise BoundDomainError(f"Il faut 0 <= d < n (d={d}, n={n})")
    return d / (n - d)


def cube_scale_of(a: IVSequence) -> float:
    """
    Échelle du cube de même Delta que la suite. n - Delta est pris en log,
    pour rester exact quand Delta s'arrondit à n ; inf si l'écart est nul.
    """
    if a.n == 0:
        return 0.0
    gap, _ = index_gap(a)
    if gap <= 0:
        return math.inf
    return max(a.n - gap, 0.0) / gap


def scaled_cube_sequence(n: int, s: float) -> IVSequence:
    return scale_sequence(box_sequence([1.0] * n), s)


def binomial_entropy(n: int, p: float) -> float:
    """Entropie de Shannon de Bin(p, n), log naturel, par sommation directe."""
    return float(entr(np.asarray(binomial(n, p).probs)).sum())


@dataclass(frozen=True)
class MaxEntReport:
    n: int
    entropy: float
    p: float
    matched_entropy: float
    half_entropy: float
    ulc_passed: bool
    checks: Tuple[Check, ...]

    @property
    def matched_gap(self) -> float:
        return self.matched_entropy - self.entropy

    @property
    def half_gap(self) -> float:
        return self.half_entropy - self.entropy

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def maxent_check(a: IVSequence, slack: Optional[float] = None) -> MaxEntReport:
    """
    IntEnt(K) <= Ent[Bin(Delta/n, n)] <= Ent[Bin(1/2, n)], et rappel de
    l'hypothèse ULC. Les écarts sont rapportés sans affirmer l'unicité.
    """
    slack = getattr(settings, "IV_LAB_ENTROPY_SLACK", 1e-12) if slack is None else slack
    dist = normalize(a)
    n = a.n
    p = dist.mean / n if n else 0.0
    matched = binomial_entropy(n, p)
    half = binomial_entropy(n, 0.5)
    ulc = ulc_check(a)
    checks = (
        leq("maxent.matched_binomial", dist.entropy, matched, slack=slack),
        leq("maxent.half_binomial", dist.entropy, half, slack=slack),
        leq("maxent.binomial_ordering", matched, half, slack=slack),
        Check("maxent.ulc", ulc.passed),
    )
    if not all(check.passed for check in checks):
        logger.warning("Vérification d'entropie maximale en échec (n=%s, p=%.6g)", n, p)
    return MaxEntReport(
        n=n,
        entropy=dist.entropy,
        p=p,
        matched_entropy=matched,
        half_entropy=half,
        ulc_passed=ulc.passed,
        checks=checks,
    )


def cube_law_checks(n: int, s: float, rel_tol: float = 1e-12) -> List[Check]:
    """La loi normalisée du cube sQ_n est Bin(s/(1+s), n), entrée par entrée."""
    probs = np.asarray(normalize(scaled_cube_sequence(n, s)).probs)
    reference = np.asarray(binomial(n, s / (1.0 + s)).probs)
    checks = []
    for j, (lhs, rhs) in enumerate(zip(probs, reference)):
        ok = math.isclose(lhs, rhs, rel_tol=rel_tol, abs_tol=0.0)
        checks.append(Check(f"cube_law.n={n}.s={s:g}.j{j}", ok, float(lhs), float(rhs)))
    return checks
