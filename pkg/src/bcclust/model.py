"""Core interaction primitives: indicator kernels, metrics, neighborhoods, adjacency weights.

All operations here are pure reads over immutable particle snapshots and are
safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORMS = ("euclidean", "max", "manhattan")
SIGMA_MODES = ("symmetric", "stochastic")


class ClusteringError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ClusteringError):
    """Invalid parameter or configuration value."""


class DimensionMismatch(ClusteringError):
    """Operands have incompatible dimensions."""


@dataclass(frozen=True)
class InteractionSpec:
    """Confidence levels and metric choices gating pairwise interactions.

    eps1 bounds the distance between evolving positions, eps2 the distance
    between immutable static features.  sigma_mode selects the weight divisor:
    'symmetric' uses n (A symmetric, not row-stochastic), 'stochastic' uses the
    neighborhood size (row-stochastic, not symmetric).
    """

    eps1: float
    eps2: float = np.inf
    norm1: str = "euclidean"
    norm2: str = "euclidean"
    sigma_mode: str = "symmetric"

    def __post_init__(self):
        if self.eps1 < 0 or self.eps2 < 0:
            raise ConfigError("confidence levels must be nonnegative")
        if self.norm1 not in NORMS or self.norm2 not in NORMS:
            raise ConfigError(f"norm must be one of {NORMS}")
        if self.sigma_mode not in SIGMA_MODES:
            raise ConfigError(f"sigma_mode must be one of {SIGMA_MODES}")


class ParticleSet:
    """n particles with evolving positions and immutable static features.

    positions: (n, d1) array, features: (n, d2) array with d2 = 0 encoding
    "no static feature" (every feature distance is then zero and the eps2
    gate is vacuous).  Arrays are copied on construction and marked read-only;
    integrators return new instances sharing the feature array.
    """

    __slots__ = ("positions", "features", "t")

    def __init__(self, positions, features=None, t: float = 0.0):
        pos = np.array(positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ConfigError("positions must be a nonempty (n, d1) array")
        n = pos.shape[0]
        if features is None:
            feat = np.empty((n, 0))
        else:
            feat = np.array(features, dtype=float)
            if feat.ndim == 1:
                feat = feat[:, None]
            if feat.shape[0] != n:
                raise DimensionMismatch(
                    f"features rows {feat.shape[0]} != positions rows {n}"
                )
        pos.setflags(write=False)
        feat.setflags(write=False)
        self.positions = pos
        self.features = feat
        self.t = float(t)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d1(self) -> int:
        return self.positions.shape[1]

    @property
    def d2(self) -> int:
        return self.features.shape[1]

    def with_positions(self, positions: np.ndarray, t: float) -> "ParticleSet":
        """New snapshot with updated positions, sharing the feature array."""
        ps = ParticleSet.__new__(ParticleSet)
        pos = np.array(positions, dtype=float)
        pos.setflags(write=False)
        ps.positions = pos
        ps.features = self.features
        ps.t = float(t)
        return ps


@dataclass(frozen=True)
class NeighborhoodResult:
    """Sorted self-inclusive indices of the particles within both gates."""

    indices: np.ndarray
    count: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=int))
        object.__setattr__(self, "count", len(self.indices))


def chi(eps: float, dist: float):
    """Indicator of dist <= eps.  Boundary inclusive.  Works elementwise on arrays."""
    return np.where(np.asarray(dist) <= eps, 1, 0)


def distance(a, b, norm: str = "euclidean") -> float:
    """p-norm distance between two points for the selected metric tag."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise DimensionMismatch(f"points have shapes {a.shape} and {b.shape}")
    return _reduce_abs_diff(np.abs(a - b), norm, axis=-1)


def _reduce_abs_diff(d, norm, axis):
    if norm == "euclidean":
        return np.sqrt(np.sum(d * d, axis=axis))
    if norm == "max":
        return np.max(d, axis=axis)
    if norm == "manhattan":
        return np.sum(d, axis=axis)
    raise ConfigError(f"unknown norm {norm!r}")


def distances_to(points: np.ndarray, x: np.ndarray, norm: str) -> np.ndarray:
    """Distances from each row of points to x.  Zero-width points give all zeros."""
    if points.shape[1] == 0:
        return np.zeros(points.shape[0])
    return _reduce_abs_diff(np.abs(points - x[None, :]), norm, axis=1)


def pairwise_distances(points: np.ndarray, norm: str) -> np.ndarray:
    """Full (n, n) distance matrix.  Intended for moderate n only."""
    n = points.shape[0]
    if points.shape[1] == 0:
        return np.zeros((n, n))
    d = np.abs(points[:, None, :] - points[None, :, :])
    return _reduce_abs_diff(d, norm, axis=2)


def bbox_diameter(points: np.ndarray, norm: str) -> float:
    """Upper bound on the pairwise diameter via the bounding box."""
    if points.shape[1] == 0 or points.shape[0] == 0:
        return 0.0
    span = points.max(axis=0) - points.min(axis=0)
    return float(_reduce_abs_diff(span, norm, axis=0))


def _within_mask(points: np.ndarray, eps: float, norm: str) -> np.ndarray:
    """(n, n) boolean matrix of pairs within eps, avoiding the distance matrix.

    Euclidean thresholds (and any norm in one dimension, where all three
    coincide) compare squared distances computed from a single Gram matrix,
    which keeps the inner loop in BLAS.
    """
    n, d = points.shape
    if d == 0 or not np.isfinite(eps):
        return np.ones((n, n), dtype=bool)
    if d == 1 or norm == "euclidean":
        sq = np.einsum("ij,ij->i", points, points)
        g = points @ points.T
        d2 = sq[:, None] + sq[None, :] - 2.0 * g
        # rounding can push tiny true distances slightly negative or above eps^2
        mask = d2 <= eps * eps + 1e-30
        # the self distance is exactly zero; cancellation must not exclude it
        np.fill_diagonal(mask, True)
        return mask
    return pairwise_distances(points, norm) <= eps


def interaction_mask(ps: ParticleSet, spec: InteractionSpec) -> np.ndarray:
    """(n, n) boolean matrix of pairs passing both confidence gates."""
    mask = _within_mask(ps.positions, spec.eps1, spec.norm1)
    if ps.d2 > 0:
        mask &= _within_mask(ps.features, spec.eps2, spec.norm2)
    return mask


def neighborhood(ps: ParticleSet, i: int, spec: InteractionSpec) -> NeighborhoodResult:
    """Indices j with position gap <= eps1 and feature gap <= eps2.  Includes i."""
    if not 0 <= i < ps.n:
        raise ConfigError(f"particle index {i} out of range [0, {ps.n})")
    ok = distances_to(ps.positions, ps.positions[i], spec.norm1) <= spec.eps1
    if ps.d2 > 0:
        ok &= distances_to(ps.features, ps.features[i], spec.norm2) <= spec.eps2
    return NeighborhoodResult(np.nonzero(ok)[0])


def adjacency_weight(ps: ParticleSet, i: int, j: int, spec: InteractionSpec) -> float:
    """1/sigma_i if j is in the neighborhood of i, else 0."""
    if not 0 <= j < ps.n:
        raise ConfigError(f"particle index {j} out of range [0, {ps.n})")
    nb = neighborhood(ps, i, spec)
    if j not in nb.indices:
        return 0.0
    sigma = ps.n if spec.sigma_mode == "symmetric" else nb.count
    return 1.0 / sigma
