"""Shape detection: polyline patterns, noise injection, detection error, sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ConfigError, InteractionSpec, ParticleSet
from .dynamics import default_merge_tol, extract_clusters
from .mfi import MfiConfig, mfi_simulate
from .rng import derive_seed

# Default letter-A geometry: feet at (0.1, 0.1) and (0.9, 0.1), apex at
# (0.5, 0.9), crossbar joining the stroke midpoints at height 0.5.
LETTER_A_SEGMENTS = (
    ((0.1, 0.1), (0.5, 0.9)),
    ((0.9, 0.1), (0.5, 0.9)),
    ((0.3, 0.5), (0.7, 0.5)),
)


@dataclass(frozen=True)
class Pattern:
    """Discrete point set sampled from a list of segments in [0,1]^2."""

    segments: tuple
    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    alpha: float
    dist: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError("noise fraction alpha must be positive")
        if self.dist not in ("uniform", "gaussian"):
            raise ConfigError("noise dist must be 'uniform' or 'gaussian'")


def sample_segments(segments, n: int) -> Pattern:
    """n points over the segments, allocated by length, equally spaced.

    Every segment receives at least one point; ties in the largest-remainder
    allocation go to earlier segments.  A single point sits at the midpoint,
    otherwise endpoints are included.
    """
    segments = tuple((tuple(map(float, a)), tuple(map(float, b))) for a, b in segments)
    if n < len(segments):
        raise ConfigError(f"need at least {len(segments)} points, got {n}")
    starts = np.array([s[0] for s in segments])
    ends = np.array([s[1] for s in segments])
    lengths = np.linalg.norm(ends - starts, axis=1)
    total = lengths.sum()
    if total <= 0:
        raise ConfigError("pattern has zero total length")
    quota = lengths / total * n
    counts = np.maximum(1, np.floor(quota).astype(int))
    while counts.sum() > n:
        counts[np.argmax(counts)] -= 1
    remainder = quota - counts
    while counts.sum() < n:
        k = int(np.argmax(remainder))
        counts[k] += 1
        remainder[k] = -np.inf
    pts = []
    for (a, b), m in zip(segments, counts):
        a, b = np.asarray(a), np.asarray(b)
        ts = np.array([0.5]) if m == 1 else np.linspace(0.0, 1.0, m)
        pts.append(a[None, :] + ts[:, None] * (b - a)[None, :])
    return Pattern(segments, np.vstack(pts))


def generate_letter_A(n: int) -> Pattern:
    """The three-stroke letter 'A' sampled to n points."""
    return sample_segments(LETTER_A_SEGMENTS, n)


def load_segments(path) -> tuple:
    """Read a pattern file: one 'x0 y0 x1 y1' segment per line, '#' comments."""
    segs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ConfigError(f"{path}:{lineno}: expected 4 reals, got {len(parts)}")
            x0, y0, x1, y1 = map(float, parts)
            segs.append(((x0, y0), (x1, y1)))
    if not segs:
        raise ConfigError(f"{path}: no segments found")
    return tuple(segs)


def perturb(pat: Pattern, ns: NoiseSpec) -> np.ndarray:
    """Additive noise x + alpha * theta, resampled until inside [0,1]^2."""
    rng = np.random.default_rng(ns.seed)
    out = np.empty_like(pat.points)
    for i, x in enumerate(pat.points):
        while True:
            if ns.dist == "uniform":
                theta = rng.uniform(-1.0, 1.0, size=2)
            else:
                theta = rng.standard_normal(2)
            cand = x + ns.alpha * theta
            if np.all((cand >= 0.0) & (cand <= 1.0)):
                out[i] = cand
                break
    return out


def error_measure(cs, pat: Pattern) -> float:
    """Mean over clusters of the minimum 2-norm distance to the pattern points."""
    if cs.n_clusters < 1:
        raise ConfigError("empty cluster set")
    centers = cs.centers()
    d = np.linalg.norm(centers[:, None, :] - pat.points[None, :, :], axis=2)
    return float(d.min(axis=1).mean())


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    eps1: float
    run: int
    seed: int
    error: float
    n_clusters: int
    centers: np.ndarray = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class SweepSummary:
    alpha: float
    eps1: float
    mean_error: float
    mean_clusters: float
    best: bool  # eps1 minimizing the mean error for this alpha


@dataclass
class SweepResult:
    rows: list
    summary: list


def sweep(pat: Pattern, alphas, eps1_list, runs_per_cell: int,
          noise_dist: str = "uniform", master_seed: int = 0,
          M: int = 10, dt: float = 0.5, t_final: float = 50.0,
          sigma_mode: str = "stochastic", merge_tol: float | None = None) -> SweepResult:
    """Noise/confidence sweep: perturb, integrate, extract, score.

    Per-cell seeds derive from (master_seed, alpha index, eps index, run), so
    identical seeds reproduce identical tables.
    """
    alphas = list(alphas)
    eps1_list = list(eps1_list)
    if not alphas or not eps1_list or runs_per_cell < 1:
        raise ConfigError("alphas, eps1_list and runs_per_cell must be nonempty")
    rows = []
    summary = []
    for ai, alpha in enumerate(alphas):
        cell_means = []
        for ei, eps1 in enumerate(eps1_list):
            errs, counts = [], []
            for run in range(runs_per_cell):
                seed = derive_seed(master_seed, ai, ei, run)
                noisy = perturb(pat, NoiseSpec(alpha, noise_dist, derive_seed(seed, 1)))
                ps0 = ParticleSet(noisy)
                spec = InteractionSpec(eps1=eps1, sigma_mode=sigma_mode)
                cfg = MfiConfig(M=M, dt=dt, t_final=t_final, seed=derive_seed(seed, 2))
                tr = mfi_simulate(ps0, spec, cfg)
                tol = default_merge_tol(ps0, spec) if merge_tol is None else merge_tol
                cs = extract_clusters(
                    ps0.with_positions(tr.final_positions, tr.snapshots[-1][0]),
                    tol, spec)
                err = error_measure(cs, pat)
                rows.append(SweepRow(alpha, eps1, run, seed, err, cs.n_clusters,
                                     cs.centers()))
                errs.append(err)
                counts.append(cs.n_clusters)
            cell_means.append((eps1, float(np.mean(errs)), float(np.mean(counts))))
        best_eps = min(cell_means, key=lambda c: c[1])[0]
        for eps1, mean_err, mean_cnt in cell_means:
            summary.append(SweepSummary(alpha, eps1, mean_err, mean_cnt,
                                        best=eps1 == best_eps))
    return SweepResult(rows, summary)
