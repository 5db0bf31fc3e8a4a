"""Deterministic full-interaction integrator, cluster extraction and steady-state checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ClusteringError,
    ConfigError,
    InteractionSpec,
    ParticleSet,
    _reduce_abs_diff,
    _within_mask,
    bbox_diameter,
    distance,
    distances_to,
    pairwise_distances,
)
from .moments import MomentRecord


@dataclass(frozen=True)
class IntegratorConfig:
    """Explicit Euler configuration.

    dt <= 1 keeps every update a convex combination of the previous positions.
    The run stops early once the max per-step displacement (norm1 over each
    particle) drops below stop_tol.
    """

    dt: float
    t_final: float
    stop_tol: float = 1e-8
    record_every: int = 1

    def __post_init__(self):
        if not 0 < self.dt <= 1:
            raise ConfigError(f"dt must be in (0, 1], got {self.dt}")
        if self.t_final < self.dt:
            raise ConfigError("t_final must be at least dt")
        if self.stop_tol < 0:
            raise ConfigError("stop_tol must be nonnegative")
        if self.record_every < 1:
            raise ConfigError("record_every must be a positive integer")


@dataclass
class Trajectory:
    snapshots: list  # (t, positions copy), strictly increasing times
    moments: MomentRecord
    terminated_early: bool = False
    reason: str | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def final_positions(self) -> np.ndarray:
        return self.snapshots[-1][1]


@dataclass(frozen=True)
class Cluster:
    center: np.ndarray
    members: np.ndarray  # sorted particle indices
    weight: float
    feature_mean: np.ndarray
    feature_min: np.ndarray
    feature_max: np.ndarray


@dataclass
class ClusterSet:
    clusters: list
    features: np.ndarray  # (n, d2) static features of the source particles
    spec: InteractionSpec

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.clusters])


@dataclass(frozen=True)
class PairViolation:
    i: int
    k: int
    center_distance: float
    min_feature_gap: float


@dataclass
class SteadyStateReport:
    passed: bool
    violations: list


def _drift(ps: ParticleSet, spec: InteractionSpec,
           feature_mask: np.ndarray | None = None) -> np.ndarray:
    """Velocity of every particle under the bounded-confidence interaction.

    feature_mask may carry the precomputed (n, n) feature-gate matrix; features
    never move, so callers stepping in a loop compute it once.
    """
    x = ps.positions
    n = ps.n
    # When the whole cloud fits inside both confidence levels every pair
    # interacts and the velocity collapses to (mean - x) in either sigma mode.
    # O(n) instead of O(n^2); the sufficient condition uses the bounding box.
    if bbox_diameter(x, spec.norm1) <= spec.eps1 and (
        ps.d2 == 0 or bbox_diameter(ps.features, spec.norm2) <= spec.eps2
    ):
        return x.mean(axis=0)[None, :] - x
    mask = _within_mask(x, spec.eps1, spec.norm1)
    if ps.d2 > 0:
        if feature_mask is None:
            feature_mask = _within_mask(ps.features, spec.eps2, spec.norm2)
        mask &= feature_mask
    deg = mask.sum(axis=1)
    sigma = np.full(n, float(n)) if spec.sigma_mode == "symmetric" else deg.astype(float)
    w = mask.astype(float)
    return (w @ x - deg[:, None] * x) / sigma[:, None]


def euler_step(ps: ParticleSet, spec: InteractionSpec, dt: float,
               _feature_mask: np.ndarray | None = None) -> ParticleSet:
    """One synchronous explicit Euler step.  Features and t advance accordingly."""
    if not 0 < dt <= 1:
        raise ConfigError(f"dt must be in (0, 1], got {dt}")
    x_new = ps.positions + dt * _drift(ps, spec, _feature_mask)
    return ps.with_positions(x_new, ps.t + dt)


def _run(ps0, spec, cfg, step_fn, metadata):
    """Shared driver for the deterministic and Monte Carlo integrators."""
    record = MomentRecord.from_snapshot(ps0)
    snapshots = [(ps0.t, ps0.positions.copy())]
    ps = ps0
    n_steps = max(1, int(round(cfg.t_final / cfg.dt)))
    terminated = False
    reason = None
    for k in range(n_steps):
        nxt = step_fn(ps, k)
        disp = distances_to(nxt.positions - ps.positions, np.zeros(ps.d1), spec.norm1)
        max_disp = float(disp.max())
        ps = nxt
        if (k + 1) % cfg.record_every == 0:
            snapshots.append((ps.t, ps.positions.copy()))
            record.append(ps)
        if max_disp < cfg.stop_tol:
            terminated = True
            reason = f"max displacement {max_disp:.3e} below stop_tol at t={ps.t:g}"
            break
    if snapshots[-1][0] != ps.t:
        snapshots.append((ps.t, ps.positions.copy()))
        record.append(ps)
    return Trajectory(snapshots, record, terminated, reason, metadata)


def simulate(ps0: ParticleSet, spec: InteractionSpec, cfg: IntegratorConfig) -> Trajectory:
    """Iterate euler_step to t_final (or early stop), recording snapshots and moments."""
    meta = {"method": "euler", "dt": cfg.dt, "t_final": cfg.t_final,
            "sigma_mode": spec.sigma_mode}
    fmask = None
    if ps0.d2 > 0 and np.isfinite(spec.eps2):
        fmask = _within_mask(ps0.features, spec.eps2, spec.norm2)
    return _run(ps0, spec, cfg, lambda ps, k: euler_step(ps, spec, cfg.dt, fmask), meta)


def default_merge_tol(ps: ParticleSet, spec: InteractionSpec) -> float:
    """1e-3 times the position-domain diameter.

    Pass the INITIAL particle set: the initial data spans the domain, while a
    converged state has collapsed onto isolated points and its bounding box no
    longer reflects the domain scale.
    """
    diam = bbox_diameter(ps.positions, spec.norm1)
    return 1e-3 * diam if diam > 0 else 1e-9


class _DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def _cell_side(tol: float, dim: int, norm: str) -> float:
    # Side length such that any two points sharing a cell are within tol.
    if dim == 0:
        return tol
    if norm == "euclidean":
        return tol / math.sqrt(dim)
    if norm == "max":
        return tol
    return tol / dim  # manhattan


def _pair_within(pa, pb, fa, fb, tol, eps2, norm1, norm2):
    """True if any cross pair satisfies both gates.  Scans in blocks, early exit."""
    block = 512
    for s in range(0, pa.shape[0], block):
        dp = np.abs(pa[s:s + block, None, :] - pb[None, :, :])
        ok = _norm_reduce(dp, norm1) <= tol
        if fa.shape[1] > 0:
            df = np.abs(fa[s:s + block, None, :] - fb[None, :, :])
            ok &= _norm_reduce(df, norm2) <= eps2
        if ok.any():
            return True
    return False


def _norm_reduce(d, norm):
    if norm == "euclidean":
        return np.sqrt((d * d).sum(axis=-1))
    if norm == "max":
        return d.max(axis=-1)
    return d.sum(axis=-1)


def extract_clusters(ps: ParticleSet, merge_tol: float | None,
                     spec: InteractionSpec) -> ClusterSet:
    """Connected components of the merge graph.

    Edge (i, j) iff position distance <= merge_tol and feature distance <= eps2.
    Components are found with a union-find over a spatial grid: cells are sized
    so same-cell pairs are guaranteed edges, and adjacent cells are linked after
    an explicit cross-pair check, so the result matches the brute-force graph
    independent of traversal order.
    """
    if merge_tol is None:
        merge_tol = default_merge_tol(ps, spec)
    if merge_tol <= 0:
        raise ConfigError("merge_tol must be positive")
    n = ps.n
    use_features = ps.d2 > 0 and np.isfinite(spec.eps2) and (
        bbox_diameter(ps.features, spec.norm2) > spec.eps2
    )
    pos = ps.positions
    feat = ps.features if use_features else np.empty((n, 0))
    eps2 = spec.eps2

    s1 = _cell_side(merge_tol, ps.d1, spec.norm1)
    cols = [np.floor(pos[:, k] / s1).astype(np.int64) for k in range(ps.d1)]
    reach = [int(math.ceil(merge_tol / s1))] * ps.d1
    if use_features:
        s2 = _cell_side(eps2, feat.shape[1], spec.norm2)
        cols += [np.floor(feat[:, k] / s2).astype(np.int64) for k in range(feat.shape[1])]
        reach += [int(math.ceil(eps2 / s2))] * feat.shape[1]

    keys = list(zip(*(c.tolist() for c in cols)))
    cells: dict[tuple, list] = {}
    for idx, key in enumerate(keys):
        cells.setdefault(key, []).append(idx)

    dsu = _DisjointSet(n)
    for members in cells.values():
        first = members[0]
        for other in members[1:]:
            dsu.union(first, other)

    offsets = _neighbor_offsets(reach)
    for key, members in cells.items():
        a = np.asarray(members)
        for off in offsets:
            other = tuple(k + o for k, o in zip(key, off))
            if other not in cells:
                continue
            b = np.asarray(cells[other])
            if dsu.find(members[0]) == dsu.find(cells[other][0]):
                continue
            if _pair_within(pos[a], pos[b], feat[a], feat[b],
                            merge_tol, eps2, spec.norm1, spec.norm2):
                dsu.union(members[0], cells[other][0])

    roots: dict[int, list] = {}
    for i in range(n):
        roots.setdefault(dsu.find(i), []).append(i)

    clusters = []
    for members in sorted(roots.values(), key=lambda m: m[0]):
        idx = np.asarray(members)
        center = pos[idx].mean(axis=0)
        f = ps.features[idx]
        clusters.append(Cluster(
            center=center,
            members=idx,
            weight=len(idx) / n,
            feature_mean=f.mean(axis=0) if ps.d2 else np.empty(0),
            feature_min=f.min(axis=0) if ps.d2 else np.empty(0),
            feature_max=f.max(axis=0) if ps.d2 else np.empty(0),
        ))
    return ClusterSet(clusters, ps.features, spec)


def _neighbor_offsets(reach):
    """Nonzero lattice offsets within reach, one of each +/- pair."""
    grids = np.meshgrid(*(np.arange(-r, r + 1) for r in reach), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    out = []
    for off in offs:
        t = tuple(int(v) for v in off)
        if any(v != 0 for v in t) and t > tuple(-v for v in t):
            out.append(t)
    return out


def _min_feature_gap(fa: np.ndarray, fb: np.ndarray, norm: str) -> float:
    """Minimum cross distance between two static-feature sets."""
    if fa.shape[1] == 0:
        return 0.0
    from scipy.spatial import cKDTree

    p = {"euclidean": 2, "manhattan": 1, "max": np.inf}[norm]
    if fb.shape[0] > fa.shape[0]:
        fa, fb = fb, fa
    tree = cKDTree(fb)
    d, _ = tree.query(fa, k=1, p=p)
    return float(np.min(d))


def _sorted_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum cross distance between two sorted 1D arrays."""
    if a.shape[0] > b.shape[0]:
        a, b = b, a
    idx = np.searchsorted(b, a)
    lo = np.abs(a - b[np.maximum(idx - 1, 0)])
    hi = np.abs(a - b[np.minimum(idx, b.shape[0] - 1)])
    return float(min(lo.min(), hi.min()))


def verify_steady_state(cs: ClusterSet, spec: InteractionSpec) -> SteadyStateReport:
    """Pairwise stationarity test for an extracted cluster configuration.

    A pair of clusters passes when their centers are farther than eps1 apart or
    the minimum gap between their member features exceeds eps2.  An empty
    violation list characterizes a stationary sum of Dirac concentrations.
    """
    m = cs.n_clusters
    if m < 2:
        return SteadyStateReport(passed=True, violations=[])
    d2 = cs.features.shape[1]
    cdist = pairwise_distances(cs.centers(), spec.norm1)
    ii, kk = np.triu_indices(m, k=1)
    candidate = cdist[ii, kk] <= spec.eps1
    if d2 and candidate.any():
        # componentwise interval gaps lower-bound the true member gap, so
        # box-separated pairs pass without touching member features
        fmin = np.array([c.feature_min for c in cs.clusters])
        fmax = np.array([c.feature_max for c in cs.clusters])
        box_gap = np.maximum(0.0, np.maximum(fmin[ii] - fmax[kk],
                                             fmin[kk] - fmax[ii]))
        candidate &= _reduce_abs_diff(box_gap, spec.norm2, axis=1) <= spec.eps2
    if d2 == 1:
        member_feats = [np.sort(cs.features[c.members, 0]) for c in cs.clusters]
    violations = []
    for i, k in zip(ii[candidate], kk[candidate]):
        i, k = int(i), int(k)
        if d2 == 0:
            gap = 0.0
        elif d2 == 1:
            gap = _sorted_gap(member_feats[i], member_feats[k])
        else:
            gap = _min_feature_gap(cs.features[cs.clusters[i].members],
                                   cs.features[cs.clusters[k].members],
                                   spec.norm2)
        if gap > spec.eps2:
            continue
        violations.append(PairViolation(i, k, float(cdist[i, k]), gap))
    return SteadyStateReport(passed=not violations, violations=violations)
