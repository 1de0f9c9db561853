"""
Modèle compositionnel de corps convexes.

Chaque nœud est une valeur immuable qui sait projeter un lot de points
(tableau `(m, n)`) sur lui-même. La distance, l'appartenance et la boule
englobante en découlent. Les corps sont ancrés à une position canonique
(Box au coin origine, Ball centrée en 0) ; `Translated` déplace explicitement.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


class BodyError(ValueError):
    """Erreur levée pour un corps mal formé ou un point de mauvaise dimension."""


def _as_tuple(values, name: str) -> Tuple[float, ...]:
    try:
        converted = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise BodyError(f"{name}: valeurs réelles attendues") from exc
    if any(not math.isfinite(v) for v in converted):
        raise BodyError(f"{name}: valeurs finies attendues")
    return converted


def _nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise BodyError(f"{name} doit être un réel positif ou nul (reçu {value})")
    return value


@dataclass(frozen=True)
class Point:
    ambient_dim: int

    def __post_init__(self):
        if int(self.ambient_dim) < 1:
            raise BodyError("La dimension ambiante doit être >= 1")
        object.__setattr__(self, "ambient_dim", int(self.ambient_dim))

    @property
    def intrinsic_dim(self) -> int:
        return 0

    def _project(self, points: np.ndarray) -> np.ndarray:
        return np.zeros_like(points)

    def _enclosing_ball(self):
        return np.zeros(self.ambient_dim), 0.0

    def _bounding_box(self):
        zeros = np.zeros(self.ambient_dim)
        return zeros, zeros.copy()


@dataclass(frozen=True)
class Ball:
    ambient_dim: int
    radius: float

    def __post_init__(self):
        if int(self.ambient_dim) < 1:
            raise BodyError("La dimension ambiante doit être >= 1")
        object.__setattr__(self, "ambient_dim", int(self.ambient_dim))
        object.__setattr__(self, "radius", _nonnegative(self.radius, "radius"))

    @property
    def intrinsic_dim(self) -> int:
        return self.ambient_dim if self.radius > 0 else 0

    def _project(self, points: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(points, axis=1, keepdims=True)
        # Rayon nul : la boule est le point origine.
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(norms > self.radius, self.radius / norms, 1.0)
        return points * factor

    def _enclosing_ball(self):
        return np.zeros(self.ambient_dim), self.radius

    def _bounding_box(self):
        half = np.full(self.ambient_dim, self.radius)
        return -half, half


@dataclass(frozen=True)
class Box:
    """Parallélotope rectangle [0, s_1] x ... x [0, s_n]."""

    lengths: Tuple[float, ...]

    def __post_init__(self):
        lengths = _as_tuple(self.lengths, "lengths")
        if not lengths:
            raise BodyError("Une Box doit avoir au moins un axe")
        for value in lengths:
            _nonnegative(value, "length")
        object.__setattr__(self, "lengths", lengths)

    @property
    def ambient_dim(self) -> int:
        return len(self.lengths)

    @property
    def intrinsic_dim(self) -> int:
        return sum(1 for s in self.lengths if s > 0)

    def _project(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, 0.0, np.asarray(self.lengths))

    def _enclosing_ball(self):
        lengths = np.asarray(self.lengths)
        return lengths / 2.0, float(np.linalg.norm(lengths) / 2.0)

    def _bounding_box(self):
        return np.zeros(self.ambient_dim), np.asarray(self.lengths, dtype=float)


@dataclass(frozen=True)
class Product:
    """Produit direct orthogonal dans l'espace concaténé."""

    left: "BodySpec"
    right: "BodySpec"

    @property
    def ambient_dim(self) -> int:
        return self.left.ambient_dim + self.right.ambient_dim

    @property
    def intrinsic_dim(self) -> int:
        return self.left.intrinsic_dim + self.right.intrinsic_dim

    def _project(self, points: np.ndarray) -> np.ndarray:
        split = self.left.ambient_dim
        return np.hstack([
            self.left._project(points[:, :split]),
            self.right._project(points[:, split:]),
        ])

    def _enclosing_ball(self):
        left_center, left_radius = self.left._enclosing_ball()
        right_center, right_radius = self.right._enclosing_ball()
        return np.concatenate([left_center, right_center]), math.hypot(left_radius, right_radius)

    def _bounding_box(self):
        left_lo, left_hi = self.left._bounding_box()
        right_lo, right_hi = self.right._bounding_box()
        return np.concatenate([left_lo, right_lo]), np.concatenate([left_hi, right_hi])


@dataclass(frozen=True)
class Scaled:
    factor: float
    inner: "BodySpec"

    def __post_init__(self):
        object.__setattr__(self, "factor", _nonnegative(self.factor, "factor"))

    @property
    def ambient_dim(self) -> int:
        return self.inner.ambient_dim

    @property
    def intrinsic_dim(self) -> int:
        return self.inner.intrinsic_dim if self.factor > 0 else 0

    def _project(self, points: np.ndarray) -> np.ndarray:
        if self.factor == 0:
            return np.zeros_like(points)
        return self.factor * self.inner._project(points / self.factor)

    def _enclosing_ball(self):
        center, radius = self.inner._enclosing_ball()
        return self.factor * center, self.factor * radius

    def _bounding_box(self):
        lo, hi = self.inner._bounding_box()
        return self.factor * lo, self.factor * hi


@dataclass(frozen=True)
class Translated:
    offset: Tuple[float, ...]
    inner: "BodySpec"

    def __post_init__(self):
        offset = _as_tuple(self.offset, "offset")
        if len(offset) != self.inner.ambient_dim:
            raise BodyError(
                f"Translation de dimension {len(offset)} pour un corps de dimension "
                f"{self.inner.ambient_dim}"
            )
        object.__setattr__(self, "offset", offset)

    @property
    def ambient_dim(self) -> int:
        return self.inner.ambient_dim

    @property
    def intrinsic_dim(self) -> int:
        return self.inner.intrinsic_dim

    def _project(self, points: np.ndarray) -> np.ndarray:
        offset = np.asarray(self.offset)
        return offset + self.inner._project(points - offset)

    def _enclosing_ball(self):
        center, radius = self.inner._enclosing_ball()
        return center + np.asarray(self.offset), radius

    def _bounding_box(self):
        lo, hi = self.inner._bounding_box()
        offset = np.asarray(self.offset)
        return lo + offset, hi + offset


@dataclass(frozen=True)
class Embedded:
    """Le corps `inner x {0_m}` dans R^(n+m)."""

    inner: "BodySpec"
    extra_dims: int

    def __post_init__(self):
        if int(self.extra_dims) < 0:
            raise BodyError("extra_dims doit être >= 0")
        object.__setattr__(self, "extra_dims", int(self.extra_dims))

    @property
    def ambient_dim(self) -> int:
        return self.inner.ambient_dim + self.extra_dims

    @property
    def intrinsic_dim(self) -> int:
        return self.inner.intrinsic_dim

    def _project(self, points: np.ndarray) -> np.ndarray:
        split = self.inner.ambient_dim
        return np.hstack([
            self.inner._project(points[:, :split]),
            np.zeros((points.shape[0], self.extra_dims)),
        ])

    def _enclosing_ball(self):
        center, radius = self.inner._enclosing_ball()
        return np.concatenate([center, np.zeros(self.extra_dims)]), radius

    def _bounding_box(self):
        lo, hi = self.inner._bounding_box()
        zeros = np.zeros(self.extra_dims)
        return np.concatenate([lo, zeros]), np.concatenate([hi, zeros])


BodySpec = Union[Point, Ball, Box, Product, Scaled, Translated, Embedded]


def _as_batch(body: BodySpec, x) -> Tuple[np.ndarray, bool]:
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    if single:
        points = points[np.newaxis, :]
    if points.ndim != 2 or points.shape[1] != body.ambient_dim:
        raise BodyError(
            f"Dimension du point ({points.shape[-1]}) différente de la dimension "
            f"ambiante du corps ({body.ambient_dim})"
        )
    return points, single


def project(body: BodySpec, x) -> np.ndarray:
    """Point le plus proche de `x` dans le corps (accepte aussi un lot `(m, n)`)."""
    points, single = _as_batch(body, x)
    projected = body._project(points)
    return projected[0] if single else projected


def distance(body: BodySpec, x):
    points, single = _as_batch(body, x)
    gaps = np.linalg.norm(points - body._project(points), axis=1)
    return float(gaps[0]) if single else gaps


def contains(body: BodySpec, x, atol: float = 0.0):
    gaps = distance(body, x)
    if np.ndim(gaps) == 0:
        return bool(gaps <= atol)
    return gaps <= atol


def ambient_dim(body: BodySpec) -> int:
    return body.ambient_dim


def intrinsic_dim(body: BodySpec) -> int:
    return body.intrinsic_dim


def enclosing_ball(body: BodySpec) -> Tuple[np.ndarray, float]:
    """Boule couvrante (conservative, non minimale) : sert à dimensionner les propositions MC."""
    center, radius = body._enclosing_ball()
    return np.asarray(center, dtype=float), float(radius)


def bounding_box(body: BodySpec) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = body._bounding_box()
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
