"""
Oracles stochastiques indépendants des formules exactes :
estimateur de Kubota (projections sur rotations de Haar), intégrales de
distance par échantillonnage préférentiel (W(K), fonction génératrice,
intégrale bêta, moments de H_K), volume du corps parallèle par
acceptation-rejet, et échantillonneur exact de mu_K sur les produits
d'intervalles.

Reproductibilité : les échantillons sont découpés en blocs de taille fixe,
le bloc c utilise le sous-flux SeedSequence(seed, spawn_key=(stream, c)).
Les résultats sont concaténés dans l'ordre des blocs, donc identiques bit
à bit quel que soit le nombre de threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from scipy.stats import multivariate_t

from services.bodies import (
    Ball,
    BodySpec,
    Box,
    Embedded,
    Point,
    Product,
    Scaled,
    Translated,
    bounding_box,
    distance,
    enclosing_ball,
)
from services.checks import Check
from services.exact import (
    beta_integral,
    log_binom,
    log_kappa,
    sequence_of,
    steiner_polynomial,
)
from services.ivstats import gf_eval

logger = logging.getLogger(__name__)


class EstimatorInputError(ValueError):
    """Paramètre d'estimateur invalide (indice, nombre d'échantillons, graine...)."""


class EstimatorCapabilityError(RuntimeError):
    """Le corps n'admet pas de règle exacte pour cet estimateur."""


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    samples: int
    seed: int
    estimator_id: str

    def se_distance(self, exact: float) -> float:
        """|valeur - exact| en nombre d'erreurs standard (0 si accord à 1e-9 près)."""
        gap = abs(self.value - exact)
        if gap <= 1e-9 * max(1.0, abs(exact)):
            return 0.0
        if self.std_error == 0:
            return math.inf
        return gap / self.std_error


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_index: int = 0

    def __post_init__(self):
        if int(self.seed) < 0 or int(self.seed) >= 2 ** 64:
            raise EstimatorInputError("La graine doit être un entier 64 bits non signé")
        if int(self.stream_index) < 0:
            raise EstimatorInputError("stream_index doit être >= 0")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream_index", int(self.stream_index))

    def generator(self, chunk: Optional[int] = None) -> np.random.Generator:
        key = (self.stream_index,) if chunk is None else (self.stream_index, chunk)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))


RngLike = Union[RngStream, np.random.Generator]


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generator()


def _setting(name: str, value, default):
    return getattr(settings, name, default) if value is None else value


def chunk_plan(samples: int, chunk_size: Optional[int] = None) -> List[int]:
    """Découpage fixé par (samples, chunk_size), jamais par le nombre de threads."""
    chunk_size = int(_setting("IV_LAB_CHUNK", chunk_size, 10_000))
    if samples < 1:
        raise EstimatorInputError("Il faut au moins un échantillon")
    if chunk_size < 1:
        raise EstimatorInputError("La taille de bloc doit être >= 1")
    full, rest = divmod(int(samples), chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _run_chunks(worker: Callable, samples: int, rng: RngStream, chunk_size=None, threads=None) -> list:
    plan = chunk_plan(samples, chunk_size)
    threads = max(1, int(_setting("IV_LAB_THREADS", threads, 1)))
    generators = [rng.generator(index) for index in range(len(plan))]
    logger.debug("Plan MC : %s blocs, %s threads, graine %s/%s", len(plan), threads, rng.seed, rng.stream_index)
    if threads == 1 or len(plan) == 1:
        return [worker(size, gen) for size, gen in zip(plan, generators)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, plan, generators))


def _mean_estimate(values: np.ndarray, rng: RngStream, estimator_id: str, factor: float = 1.0) -> MCEstimate:
    m = len(values)
    mean = float(np.mean(values))
    spread = float(np.std(values, ddof=1)) if m > 1 else 0.0
    estimate = MCEstimate(
        value=factor * mean,
        std_error=abs(factor) * spread / math.sqrt(m),
        samples=m,
        seed=rng.seed,
        estimator_id=estimator_id,
    )
    logger.debug("%s = %.6g ± %.2g (%s échantillons)", estimator_id, estimate.value, estimate.std_error, m)
    return estimate


def compare(estimate: MCEstimate, exact: float, pass_se=None, fail_se=None) -> Check:
    """
    Accord MC / exact : succès sous pass_se erreurs standard, avertissement
    entre pass_se et fail_se, échec au-delà de fail_se.
    """
    pass_se = float(_setting("IV_LAB_SE_PASS", pass_se, 3.0))
    fail_se = float(_setting("IV_LAB_SE_FAIL", fail_se, 4.0))
    gap = estimate.se_distance(exact)
    if pass_se < gap <= fail_se:
        logger.warning(
            "%s : écart de %.2f erreurs standard (valeur %.6g, exact %.6g)",
            estimate.estimator_id, gap, estimate.value, exact,
        )
    return Check(f"mc.{estimate.estimator_id}", bool(gap <= fail_se), estimate.value, float(exact))


# --- Rotations de Haar -------------------------------------------------------

def haar_rotations(n: int, size: int, rng: RngLike) -> np.ndarray:
    """
    Lot `(size, n, n)` de rotations de Haar : QR d'une matrice gaussienne,
    correction de signe par diag(R), puis déterminant ramené à +1 en
    changeant le signe de la première colonne.
    """
    if n < 1:
        raise EstimatorInputError("La dimension doit être >= 1")
    gen = _as_generator(rng)
    gaussian = gen.standard_normal((size, n, n))
    q, r = np.linalg.qr(gaussian)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    q = q * signs[:, np.newaxis, :]
    flip = np.linalg.det(q) < 0
    q[flip, :, 0] *= -1.0
    return q


def haar_rotation(n: int, rng: RngLike) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1))
    return haar_rotations(n, 1, rng)[0]


# --- Estimateur de Kubota ----------------------------------------------------

def _projection_rule(body: BodySpec, factor: float = 1.0):
    if isinstance(body, Translated):
        return _projection_rule(body.inner, factor)
    if isinstance(body, Scaled):
        return _projection_rule(body.inner, factor * body.factor)
    if isinstance(body, Box):
        return "box", factor * np.asarray(body.lengths)
    if isinstance(body, Ball):
        return "ball", factor * body.radius
    raise EstimatorCapabilityError(
        f"Pas de volume de projection exact pour {type(body).__name__} "
        "(seuls Box, Ball et leurs translatés/dilatés sont pris en charge)"
    )


def zonotope_volume(generators: np.ndarray) -> np.ndarray:
    """
    Volume j-dimensionnel du zonotope engendré par les colonnes de
    `generators` (lot `(m, j, n)`) : somme des |det| des blocs j x j.
    """
    _, j, n = generators.shape
    if j == 0:
        return np.ones(generators.shape[0])
    volume = np.zeros(generators.shape[0])
    for subset in combinations(range(n), j):
        volume += np.abs(np.linalg.det(generators[:, :, list(subset)]))
    return volume


def kubota_estimate(
    body: BodySpec,
    j: int,
    samples: Optional[int] = None,
    rng: Optional[RngStream] = None,
    *,
    pre_rotation: Optional[np.ndarray] = None,
    chunk_size: Optional[int] = None,
    threads: Optional[int] = None,
    max_dim: Optional[int] = None,
) -> MCEstimate:
    """
    V_j ~ C(n,j) kappa_n / (kappa_j kappa_{n-j}) * E_Q Vol_j(P_j Q K).
    Pour une boule la projection ne dépend pas de Q : valeur exacte, variance nulle.
    """
    samples = int(_setting("IV_LAB_SAMPLES", samples, 100_000))
    rng = rng or RngStream(int(_setting("IV_LAB_SEED", None, 0)))
    kind, size = _projection_rule(body)
    chunk_plan(samples, chunk_size)
    n = body.ambient_dim
    if not 0 <= j <= n:
        raise EstimatorInputError(f"Indice j={j} hors de [0, {n}]")
    max_dim = int(_setting("IV_LAB_KUBOTA_MAX_DIM", max_dim, 12))
    if n > max_dim:
        raise EstimatorCapabilityError(f"Dimension {n} au-delà du plafond Kubota ({max_dim})")

    log_constant = log_binom(n, j) + log_kappa(n) - log_kappa(j) - log_kappa(n - j)
    constant = float(np.exp(log_constant))
    estimator_id = f"kubota.j{j}"

    if kind == "ball":
        value = constant * float(np.exp(log_kappa(j))) * size ** j
        return MCEstimate(value, 0.0, samples, rng.seed, estimator_id)
    if j == 0:
        return MCEstimate(1.0, 0.0, samples, rng.seed, estimator_id)

    lengths = size
    fixed = None if pre_rotation is None else np.asarray(pre_rotation, dtype=float)
    if fixed is not None and fixed.shape != (n, n):
        raise EstimatorInputError("La rotation préalable doit être une matrice n x n")

    def worker(count, gen):
        rotations = haar_rotations(n, count, gen)
        if fixed is not None:
            # Le corps tourné R0 K a pour arêtes les colonnes de Q R0 diag(s).
            rotations = rotations @ fixed
        generators = rotations[:, :j, :] * lengths[np.newaxis, np.newaxis, :]
        return zonotope_volume(generators)

    volumes = np.concatenate(_run_chunks(worker, samples, rng, chunk_size, threads))
    return _mean_estimate(volumes, rng, estimator_id, factor=constant)


# --- Intégrales de distance --------------------------------------------------

class _GaussianProposal:
    def __init__(self, center: np.ndarray, sigma: float):
        self.center = center
        self.sigma = sigma
        self.dim = len(center)

    def sample(self, count: int, gen: np.random.Generator) -> np.ndarray:
        return self.center + self.sigma * gen.standard_normal((count, self.dim))

    def log_pdf(self, points: np.ndarray) -> np.ndarray:
        squared = np.sum((points - self.center) ** 2, axis=1)
        return -0.5 * self.dim * math.log(2.0 * math.pi * self.sigma ** 2) - squared / (2.0 * self.sigma ** 2)


class _CauchyProposal:
    """Student multivarié à 1 degré de liberté : queues polynomiales."""

    def __init__(self, center: np.ndarray, sigma: float):
        self.dim = len(center)
        self.law = multivariate_t(loc=center, shape=sigma ** 2 * np.eye(self.dim), df=1)

    def sample(self, count: int, gen: np.random.Generator) -> np.ndarray:
        return np.asarray(self.law.rvs(size=count, random_state=gen)).reshape(count, self.dim)

    def log_pdf(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_1d(self.law.logpdf(points)).reshape(len(points))


PROPOSALS = {
    "gaussian": _GaussianProposal,
    "cauchy": _CauchyProposal,
}


def _proposal(body: BodySpec, kind: str, lam: float, pad: Optional[float]):
    pad = float(_setting("IV_LAB_PROPOSAL_PAD", pad, 1.0 / math.sqrt(2.0 * math.pi)))
    if pad <= 0:
        raise EstimatorInputError("Le pad de la proposition doit être > 0")
    center, radius = enclosing_ball(body)
    return PROPOSALS[kind](center, radius + pad / lam)


def _weighted_distances(body, proposal, count, gen):
    points = proposal.sample(count, gen)
    gaps = distance(body, points)
    return gaps, -proposal.log_pdf(points)


def distance_integral_estimate(
    body: BodySpec,
    f: Callable[[np.ndarray], np.ndarray],
    samples: Optional[int] = None,
    rng: Optional[RngStream] = None,
    *,
    lam: float = 1.0,
    proposal: str = "gaussian",
    pad: Optional[float] = None,
    chunk_size: Optional[int] = None,
    threads: Optional[int] = None,
    estimator_id: str = "distance_integral",
) -> MCEstimate:
    """
    Estimation sans biais de int f(dist(x, K)) dx par échantillonnage
    préférentiel. `f` reçoit un tableau de distances ; `lam` règle
    l'échelle de la proposition (sigma = rayon + pad / lam).
    """
    if lam <= 0:
        raise EstimatorInputError("lambda doit être strictement positif")
    if proposal not in PROPOSALS:
        raise EstimatorInputError(f"Proposition inconnue: {proposal}")
    samples = int(_setting("IV_LAB_SAMPLES", samples, 100_000))
    rng = rng or RngStream(int(_setting("IV_LAB_SEED", None, 0)))
    law = _proposal(body, proposal, lam, pad)

    def worker(count, gen):
        gaps, neg_log_q = _weighted_distances(body, law, count, gen)
        return f(gaps) * np.exp(neg_log_q)

    weights = np.concatenate(_run_chunks(worker, samples, rng, chunk_size, threads))
    return _mean_estimate(weights, rng, estimator_id)


def gf_estimate(body: BodySpec, lam: float, samples=None, rng=None, **options) -> MCEstimate:
    """int exp(-lambda^2 pi dist^2) dx, qui vaut lambda^(-n) G(lambda)."""
    if lam <= 0:
        raise EstimatorInputError("lambda doit être strictement positif")
    scale = math.pi * lam * lam
    options.setdefault("estimator_id", f"gf.lambda={lam:g}")
    return distance_integral_estimate(
        body, lambda gaps: np.exp(-scale * gaps ** 2), samples, rng, lam=lam, **options
    )


def gf_reference(body: BodySpec, lam: float) -> float:
    a = sequence_of(body)
    return lam ** (-a.n) * gf_eval(a, lam)


def wills_estimate(body: BodySpec, samples=None, rng=None, **options) -> MCEstimate:
    """int exp(-pi dist^2(x, K)) dx = W(K)."""
    options.setdefault("estimator_id", "wills")
    return gf_estimate(body, 1.0, samples, rng, **options)


def beta_integral_check(body: BodySpec, lam: float, samples=None, rng=None, **options) -> Tuple[MCEstimate, float]:
    """int dx / (1 + lambda dist)^(n+1), comparée à sa forme exacte."""
    if lam <= 0:
        raise EstimatorInputError("lambda doit être strictement positif")
    power = body.ambient_dim + 1
    options.setdefault("estimator_id", f"beta.lambda={lam:g}")
    options.setdefault("proposal", "cauchy")
    estimate = distance_integral_estimate(
        body, lambda gaps: (1.0 + lam * gaps) ** (-power), samples, rng, lam=lam, **options
    )
    return estimate, beta_integral(sequence_of(body), lam)


def h_moment_estimates(
    body: BodySpec,
    samples: Optional[int] = None,
    rng: Optional[RngStream] = None,
    *,
    pad: Optional[float] = None,
    chunk_size: Optional[int] = None,
    threads: Optional[int] = None,
) -> Tuple[MCEstimate, MCEstimate]:
    """
    E[pi dist^2] et E[(pi dist^2)^2] sous mu_K, par échantillonnage
    préférentiel auto-normalisé ; erreurs standard par la méthode delta.
    """
    samples = int(_setting("IV_LAB_SAMPLES", samples, 100_000))
    rng = rng or RngStream(int(_setting("IV_LAB_SEED", None, 0)))
    law = _proposal(body, "gaussian", 1.0, pad)

    def worker(count, gen):
        gaps, neg_log_q = _weighted_distances(body, law, count, gen)
        info = math.pi * gaps ** 2
        return np.stack([np.exp(neg_log_q - info), info])

    weights, info = np.concatenate(_run_chunks(worker, samples, rng, chunk_size, threads), axis=1)
    total = weights.sum()
    estimates = []
    for power, label in ((1, "h_moment.eh"), (2, "h_moment.eh2")):
        values = info ** power
        ratio = float(np.dot(weights, values) / total)
        error = float(np.sqrt(np.sum(weights ** 2 * (values - ratio) ** 2)) / total)
        estimates.append(MCEstimate(ratio, error, len(weights), rng.seed, label))
    logger.debug("E H = %.6g ± %.2g", estimates[0].value, estimates[0].std_error)
    return estimates[0], estimates[1]


# --- Formule de Steiner ------------------------------------------------------

def steiner_check(
    body: BodySpec,
    lam: float,
    samples: Optional[int] = None,
    rng: Optional[RngStream] = None,
    *,
    chunk_size: Optional[int] = None,
    threads: Optional[int] = None,
) -> Tuple[MCEstimate, float]:
    """
    Volume de {x : dist(x, K) <= lambda} par acceptation-rejet dans le pavé
    englobant gonflé de lambda, face au polynôme de Steiner exact.
    """
    if lam <= 0:
        raise EstimatorInputError("lambda doit être strictement positif")
    samples = int(_setting("IV_LAB_SAMPLES", samples, 100_000))
    rng = rng or RngStream(int(_setting("IV_LAB_SEED", None, 0)))
    lo, hi = bounding_box(body)
    lo, hi = lo - lam, hi + lam
    box_volume = float(np.prod(hi - lo))

    def worker(count, gen):
        points = lo + (hi - lo) * gen.random((count, len(lo)))
        return (distance(body, points) <= lam).astype(float)

    hits = np.concatenate(_run_chunks(worker, samples, rng, chunk_size, threads))
    m = len(hits)
    rate = float(hits.mean())
    estimate = MCEstimate(
        value=box_volume * rate,
        std_error=box_volume * math.sqrt(rate * (1.0 - rate) / m),
        samples=m,
        seed=rng.seed,
        estimator_id=f"steiner.lambda={lam:g}",
    )
    return estimate, steiner_polynomial(sequence_of(body), lam)


# --- Échantillonneur exact de mu_K sur les produits d'intervalles ------------

def _axis_intervals(body: BodySpec) -> List[Tuple[float, float]]:
    """(origine, longueur) par axe, si le corps est un produit d'intervalles."""
    if isinstance(body, Box):
        return [(0.0, s) for s in body.lengths]
    if isinstance(body, Point):
        return [(0.0, 0.0)] * body.ambient_dim
    if isinstance(body, Ball) and body.ambient_dim == 1:
        return [(-body.radius, 2.0 * body.radius)]
    if isinstance(body, Product):
        return _axis_intervals(body.left) + _axis_intervals(body.right)
    if isinstance(body, Translated):
        return [(lo + v, s) for (lo, s), v in zip(_axis_intervals(body.inner), body.offset)]
    if isinstance(body, Scaled):
        return [(body.factor * lo, body.factor * s) for lo, s in _axis_intervals(body.inner)]
    if isinstance(body, Embedded):
        return _axis_intervals(body.inner) + [(0.0, 0.0)] * body.extra_dims
    raise EstimatorCapabilityError(
        f"{type(body).__name__} ne se réduit pas à un produit d'intervalles"
    )


def _sample_axes(axes: Sequence[Tuple[float, float]], count: int, gen: np.random.Generator) -> np.ndarray:
    columns = []
    tail_scale = 1.0 / math.sqrt(2.0 * math.pi)
    for lo, s in axes:
        inside = gen.random(count) < s / (1.0 + s)
        uniform = lo + s * gen.random(count)
        # Demi-gaussienne de densité 2 exp(-pi t^2) sur t >= 0.
        tail = tail_scale * np.abs(gen.standard_normal(count))
        right = gen.random(count) < 0.5
        outside = np.where(right, lo + s + tail, lo - tail)
        columns.append(np.where(inside, uniform, outside))
    return np.column_stack(columns)


def mu_sampler_product(body: BodySpec, rng: RngLike, size: Optional[int] = None) -> np.ndarray:
    """
    Tirage exact selon mu_K proportionnelle à exp(-pi dist^2(x, K)) : axe par
    axe, uniforme sur [0, s] avec probabilité s/(1+s), sinon queue
    demi-gaussienne accrochée à une extrémité tirée au hasard.
    """
    axes = _axis_intervals(body)
    gen = _as_generator(rng)
    points = _sample_axes(axes, 1 if size is None else int(size), gen)
    return points[0] if size is None else points


@dataclass(frozen=True)
class MuSampleStats:
    inside: Tuple[MCEstimate, ...]
    inside_expected: Tuple[float, ...]
    information: MCEstimate


def mu_sample_statistics(
    body: BodySpec,
    samples: Optional[int] = None,
    rng: Optional[RngStream] = None,
    *,
    chunk_size: Optional[int] = None,
    threads: Optional[int] = None,
) -> MuSampleStats:
    """Fréquences d'appartenance par axe et E[pi dist^2] sur des tirages exacts."""
    samples = int(_setting("IV_LAB_SAMPLES", samples, 100_000))
    rng = rng or RngStream(int(_setting("IV_LAB_SEED", None, 0)))
    axes = _axis_intervals(body)
    lows = np.array([lo for lo, _ in axes])
    highs = np.array([lo + s for lo, s in axes])

    def worker(count, gen):
        points = _sample_axes(axes, count, gen)
        inside = (points >= lows) & (points <= highs)
        info = math.pi * distance(body, points) ** 2
        return np.column_stack([inside.astype(float), info])

    table = np.concatenate(_run_chunks(worker, samples, rng, chunk_size, threads))
    inside = tuple(
        _mean_estimate(table[:, axis], rng, f"mu.inside.axis{axis}")
        for axis in range(len(axes))
    )
    expected = tuple(s / (1.0 + s) for _, s in axes)
    information = _mean_estimate(table[:, -1], rng, "mu.information")
    return MuSampleStats(inside=inside, inside_expected=expected, information=information)
