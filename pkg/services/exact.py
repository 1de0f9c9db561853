"""
Suites exactes de volumes intrinsèques V_0..V_n.

Les formules fermées (boule, pavé) sont combinées par convolution des
polynômes générateurs : G_{CxK} = G_C * G_K. Tous les coefficients sont
positifs, il n'y a donc pas d'annulation numérique.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp

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

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IVSequence:
    """
    Suite V_0..V_n. Les log-valeurs sont portées à côté des valeurs : pour
    de grands n·log(s), V_j déborde en `inf` alors que log V_j reste exact.
    """

    values: Tuple[float, ...]
    logs: Optional[Tuple[float, ...]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if not values.size:
            raise BodyError("Une suite de volumes intrinsèques contient au moins V_0")
        if self.logs is None:
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.log(values)
        else:
            logs = np.asarray(self.logs, dtype=float).ravel()
            if logs.shape != values.shape:
                raise BodyError("Valeurs et log-valeurs de longueurs différentes")
            # Les entrées débordées sont reconstruites depuis le log.
            broken = ~np.isfinite(values)
            with np.errstate(over="ignore"):
                values = np.where(broken, np.exp(logs), values)
        object.__setattr__(self, "values", tuple(float(v) for v in values))
        object.__setattr__(self, "logs", tuple(float(v) for v in logs))

    @classmethod
    def from_logs(cls, logs) -> "IVSequence":
        logs = np.asarray(logs, dtype=float)
        with np.errstate(over="ignore"):
            return cls(np.exp(logs), logs)

    @property
    def n(self) -> int:
        return len(self.values) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def log_values(self) -> np.ndarray:
        """log V_j (−inf pour les zéros), exact même quand V_j déborde."""
        return np.asarray(self.logs, dtype=float)

    def log_wills(self) -> float:
        return float(logsumexp(self.log_values()))

    @property
    def overflows(self) -> bool:
        return not np.all(np.isfinite(self.array))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]


def log_convolve(la: np.ndarray, lb: np.ndarray) -> np.ndarray:
    """Convolution de deux suites données par leurs logarithmes."""
    la, lb = np.asarray(la, dtype=float), np.asarray(lb, dtype=float)
    out = np.full(len(la) + len(lb) - 1, -np.inf)
    for i, value in enumerate(la):
        if value == -np.inf:
            continue
        window = slice(i, i + len(lb))
        out[window] = np.logaddexp(out[window], value + lb)
    return out


def log_kappa(n) -> np.ndarray:
    """log du volume de la boule unité de R^n, calculé via log-gamma."""
    n = np.asarray(n, dtype=float)
    return 0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0)


def kappa(n: int) -> float:
    return float(np.exp(log_kappa(n)))


def omega(n: int) -> float:
    """Aire de la sphère unité de R^n : omega_n = n * kappa_n."""
    return n * kappa(n)


def log_binom(n: int, j) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    return gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)


def point_sequence(n: int) -> IVSequence:
    return embed_sequence(IVSequence((1.0,)), n)


def ball_sequence(n: int, r: float) -> IVSequence:
    if n < 1:
        raise BodyError("La dimension d'une boule doit être >= 1")
    if r < 0:
        raise BodyError("Le rayon doit être positif ou nul")
    if r == 0:
        return point_sequence(n)
    j = np.arange(n + 1)
    # Rapports kappa_n / kappa_{n-j} en log pour éviter tout débordement.
    logs = log_binom(n, j) + log_kappa(n) - log_kappa(n - j) + j * math.log(r)
    return IVSequence.from_logs(logs)


def box_sequence(lengths: Sequence[float]) -> IVSequence:
    """V_j = e_j(s_1, ..., s_n) par produit croissant des facteurs (1 + lambda s_i)."""
    coefficients = np.ones(1)
    logs = np.zeros(1)
    for s in sorted(float(v) for v in lengths):
        if s < 0:
            raise BodyError("Les longueurs doivent être positives ou nulles")
        with np.errstate(over="ignore", invalid="ignore"):
            coefficients = np.convolve(coefficients, [1.0, s])
        with np.errstate(divide="ignore"):
            logs = log_convolve(logs, [0.0, math.log(s) if s > 0 else -np.inf])
    return IVSequence(coefficients, logs)


def product_sequence(a: IVSequence, b: IVSequence) -> IVSequence:
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.convolve(a.array, b.array)
    return IVSequence(values, log_convolve(a.log_values(), b.log_values()))


def scale_sequence(a: IVSequence, lam: float) -> IVSequence:
    if lam < 0:
        raise BodyError("Le facteur d'échelle doit être positif ou nul")
    lam = float(lam)
    j = np.arange(a.n + 1)
    if lam == 0:
        return IVSequence(np.concatenate([[a.values[0]], np.zeros(a.n)]))
    with np.errstate(over="ignore", invalid="ignore"):
        values = a.array * np.power(lam, j)
    return IVSequence(values, a.log_values() + j * math.log(lam))


def embed_sequence(a: IVSequence, m: int) -> IVSequence:
    if m < 0:
        raise BodyError("Le nombre de dimensions ajoutées doit être >= 0")
    m = int(m)
    return IVSequence(
        np.concatenate([a.array, np.zeros(m)]),
        np.concatenate([a.log_values(), np.full(m, -np.inf)]),
    )


def sequence_of(body: BodySpec) -> IVSequence:
    if isinstance(body, Point):
        return point_sequence(body.ambient_dim)
    if isinstance(body, Ball):
        return ball_sequence(body.ambient_dim, body.radius)
    if isinstance(body, Box):
        return box_sequence(body.lengths)
    if isinstance(body, Product):
        return product_sequence(sequence_of(body.left), sequence_of(body.right))
    if isinstance(body, Scaled):
        return scale_sequence(sequence_of(body.inner), body.factor)
    if isinstance(body, Translated):
        # Invariance par déplacement.
        return sequence_of(body.inner)
    if isinstance(body, Embedded):
        return embed_sequence(sequence_of(body.inner), body.extra_dims)
    raise BodyError(f"Type de corps inconnu: {type(body).__name__}")


def steiner_polynomial(a: IVSequence, lam: float) -> float:
    """Volume du corps parallèle K + lam B_n : sum_j lam^(n-j) kappa_(n-j) V_j."""
    n = a.n
    j = np.arange(n + 1)
    kappas = np.exp(log_kappa(n - j))
    return float(np.sum(np.power(float(lam), n - j) * kappas * a.array))


def distance_integral(a: IVSequence, f: Callable[[float], float]) -> float:
    """
    Membre de droite de l'identité des intégrales de distance :
    f(0) V_n + sum_{j<n} (omega_{n-j} int_0^inf f(r) r^(n-j-1) dr) V_j.
    """
    n = a.n
    total = f(0.0) * a.values[n]
    for j in range(n):
        if a.values[j] == 0:
            continue
        power = n - j - 1
        radial, _ = integrate.quad(lambda r: f(r) * r ** power, 0.0, np.inf, limit=200)
        total += omega(n - j) * radial * a.values[j]
    return float(total)


def beta_integral(a: IVSequence, lam: float) -> float:
    """kappa_n lam^(-n) sum_j lam^j V_j(K) / V_j(B_n)."""
    if lam <= 0:
        raise BodyError("lambda doit être strictement positif")
    n = a.n
    unit_ball = ball_sequence(n, 1.0).array
    j = np.arange(n + 1)
    return float(kappa(n) * lam ** (-n) * np.sum(np.power(float(lam), j) * a.array / unit_ball))


def _axis_intervals(body: BodySpec) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(body, Box):
        return np.zeros(body.ambient_dim), np.asarray(body.lengths)
    if isinstance(body, Translated) and isinstance(body.inner, Box):
        lo = np.asarray(body.offset)
        return lo, lo + np.asarray(body.inner.lengths)
    raise BodyError("Vérification de valuation limitée aux pavés alignés sur les axes")


def box_valuation_check(c: BodySpec, k: BodySpec, rel_tol: float = 1e-12) -> list:
    """
    Valuation : V(C ∩ K) + V(C ∪ K) = V(C) + V(K), pour deux pavés alignés
    dont l'union est encore un pavé (ils ne diffèrent que sur un axe).
    """
    c_lo, c_hi = _axis_intervals(c)
    k_lo, k_hi = _axis_intervals(k)
    if c_lo.shape != k_lo.shape:
        raise BodyError("Les deux pavés doivent vivre dans le même espace")
    inter_lo, inter_hi = np.maximum(c_lo, k_lo), np.minimum(c_hi, k_hi)
    if np.any(inter_hi < inter_lo):
        raise BodyError("Intersection vide : l'union n'est pas convexe")
    differing = np.flatnonzero((c_lo != k_lo) | (c_hi != k_hi))
    if len(differing) > 1:
        raise BodyError("L'union de ces pavés n'est pas un pavé")
    union_lo, union_hi = np.minimum(c_lo, k_lo), np.maximum(c_hi, k_hi)

    lhs = box_sequence(inter_hi - inter_lo).array + box_sequence(union_hi - union_lo).array
    rhs = box_sequence(c_hi - c_lo).array + box_sequence(k_hi - k_lo).array
    return [
        close(f"valuation.V{j}", lhs[j], rhs[j], rel_tol, abs_tol=1e-12)
        for j in range(len(lhs))
    ]


def monotonicity_check(inner: BodySpec, outer: BodySpec, rel_tol: float = 1e-12) -> list:
    """V_j(inner) <= V_j(outer) ; l'inclusion des corps est à la charge de l'appelant."""
    small, large = sequence_of(inner), sequence_of(outer)
    if small.n != large.n:
        raise BodyError("Les deux corps doivent avoir la même dimension ambiante")
    checks = []
    for j, (lhs, rhs) in enumerate(zip(small.values, large.values)):
        checks.append(leq(f"monotone.V{j}", lhs, rhs, slack=rel_tol * max(1.0, rhs)))
    return checks


def nonnegativity_check(a: IVSequence) -> Check:
    smallest = float(a.array.min())
    return leq("sequence.nonnegative", -smallest, 0.0)
