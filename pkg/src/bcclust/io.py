"""CSV/manifest serialization.  All files are written atomically
(temp file + rename) with comma separators, '.' decimals and a header row."""

from __future__ import annotations

import csv
import io as _io
import os
import tempfile

import numpy as np

from .model import ConfigError, ParticleSet

_FLOAT_FMT = "%.17g"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return _FLOAT_FMT % v
    return str(v)


def atomic_write_text(path, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-out-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _write_csv(path, header, rows) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


# -- trajectory ---------------------------------------------------------------

def write_trajectory_csv(path, tr, features: np.ndarray) -> None:
    """Rows (t, i, x_1..x_d1, c_1..c_d2) for every snapshot."""
    d1 = tr.snapshots[0][1].shape[1]
    d2 = features.shape[1]
    header = (["t", "i"] + [f"x_{k + 1}" for k in range(d1)]
              + [f"c_{k + 1}" for k in range(d2)])
    def rows():
        for t, pos in tr.snapshots:
            for i in range(pos.shape[0]):
                yield [t, i, *pos[i], *features[i]]
    _write_csv(path, header, rows())


def read_trajectory_csv(path):
    """Returns (times, list of ParticleSet snapshots)."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        d1 = sum(1 for h in header if h.startswith("x_"))
        d2 = sum(1 for h in header if h.startswith("c_"))
        if d1 < 1:
            raise ConfigError(f"{path}: no position columns in header")
        data = [[float(v) for v in row] for row in rd]
    arr = np.asarray(data)
    times = np.unique(arr[:, 0])
    sets = []
    for t in times:
        block = arr[arr[:, 0] == t]
        block = block[np.argsort(block[:, 1])]
        pos = block[:, 2:2 + d1]
        feat = block[:, 2 + d1:2 + d1 + d2] if d2 else None
        sets.append(ParticleSet(pos, feat, t=t))
    return times, sets


# -- moments ------------------------------------------------------------------

def write_moments_csv(path, record) -> None:
    """Rows (t, u_1..u_d1, upper triangle of E)."""
    d1 = record.u[0].shape[0]
    header = ["t"] + [f"u_{k + 1}" for k in range(d1)]
    pairs = [(k, j) for k in range(d1) for j in range(k, d1)]
    header += [f"E_{k + 1}{j + 1}" for k, j in pairs]
    rows = ([t, *u, *[E[k, j] for k, j in pairs]]
            for t, u, E in zip(record.times, record.u, record.E))
    _write_csv(path, header, rows)


def read_moments_csv(path):
    """Returns (times, u array, E array with the full symmetric matrices)."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        d1 = sum(1 for h in header if h.startswith("u_"))
        data = [[float(v) for v in row] for row in rd]
    arr = np.asarray(data)
    times = arr[:, 0]
    u = arr[:, 1:1 + d1]
    pairs = [(k, j) for k in range(d1) for j in range(k, d1)]
    E = np.zeros((len(times), d1, d1))
    for col, (k, j) in enumerate(pairs):
        E[:, k, j] = arr[:, 1 + d1 + col]
        E[:, j, k] = arr[:, 1 + d1 + col]
    return times, u, E


# -- clusters -----------------------------------------------------------------

def write_clusters_csv(path, cs) -> None:
    """Rows (cluster_id, weight, center coords, feature mean/min/max)."""
    d1 = cs.centers().shape[1] if cs.n_clusters else 0
    d2 = cs.features.shape[1]
    header = ["cluster_id", "weight"] + [f"center_{k + 1}" for k in range(d1)]
    for stat in ("mean", "min", "max"):
        header += [f"feature_{stat}_{k + 1}" for k in range(d2)]
    def rows():
        for cid, c in enumerate(cs.clusters):
            yield [cid, c.weight, *c.center, *c.feature_mean,
                   *c.feature_min, *c.feature_max]
    _write_csv(path, header, rows())


def read_clusters_csv(path):
    """Returns (weights, centers, feature_means) arrays."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        d1 = sum(1 for h in header if h.startswith("center_"))
        d2 = sum(1 for h in header if h.startswith("feature_mean_"))
        data = [[float(v) for v in row] for row in rd]
    arr = np.asarray(data).reshape(len(data), -1)
    return (arr[:, 1], arr[:, 2:2 + d1], arr[:, 2 + d1:2 + d1 + d2])


# -- steady state -------------------------------------------------------------

def write_steady_state_csv(path, report) -> None:
    """One row per violating cluster pair; an empty body means stationary."""
    header = ["cluster_i", "cluster_k", "center_distance", "min_feature_gap"]
    rows = ([v.i, v.k, v.center_distance, v.min_feature_gap]
            for v in report.violations)
    _write_csv(path, header, rows)


# -- density histograms -------------------------------------------------------

def write_density_csv(path, tr, bins: int, lo: float = 0.0, hi: float = 1.0) -> None:
    """Per-snapshot position histogram on [lo, hi]^d, d in {1, 2}."""
    d1 = tr.snapshots[0][1].shape[1]
    if d1 not in (1, 2):
        raise ConfigError("density histograms support d1 in {1, 2}")
    edges = np.linspace(lo, hi, bins + 1)
    centers = (edges[:-1] + edges[1:]) / 2
    if d1 == 1:
        header = ["t", "bin", "x_center", "count"]
        def rows():
            for t, pos in tr.snapshots:
                counts, _ = np.histogram(pos[:, 0], bins=edges)
                for b in range(bins):
                    yield [t, b, centers[b], int(counts[b])]
    else:
        header = ["t", "bin_x", "bin_y", "x_center", "y_center", "count"]
        def rows():
            for t, pos in tr.snapshots:
                counts, _, _ = np.histogram2d(pos[:, 0], pos[:, 1],
                                              bins=(edges, edges))
                for bx in range(bins):
                    for by in range(bins):
                        yield [t, bx, by, centers[bx], centers[by],
                               int(counts[bx, by])]
    _write_csv(path, header, rows())


# -- shape sweeps -------------------------------------------------------------

def write_sweep_csv(path, result) -> None:
    _write_csv(path, ["alpha", "eps1", "seed", "E", "n_clusters"],
               ([r.alpha, r.eps1, r.seed, r.error, r.n_clusters]
                for r in result.rows))


def write_sweep_summary_csv(path, result) -> None:
    _write_csv(path, ["alpha", "eps1", "mean_E", "mean_n_clusters", "best"],
               ([s.alpha, s.eps1, s.mean_error, s.mean_clusters, int(s.best)]
                for s in result.summary))


# -- segmentation labels ------------------------------------------------------

def write_labels_csv(path, sr) -> None:
    w = sr.output.width
    _write_csv(path, ["row", "col", "cluster_id"],
               ([i // w, i % w, int(lab)] for i, lab in enumerate(sr.labels)))


# -- particles ----------------------------------------------------------------

def write_particles_csv(path, ps) -> None:
    header = ([f"x_{k + 1}" for k in range(ps.d1)]
              + [f"c_{k + 1}" for k in range(ps.d2)])
    rows = ([*ps.positions[i], *ps.features[i]] for i in range(ps.n))
    _write_csv(path, header, rows)


def read_particles_csv(path) -> ParticleSet:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        d1 = sum(1 for h in header if h.startswith("x_"))
        d2 = sum(1 for h in header if h.startswith("c_"))
        if d1 < 1:
            raise ConfigError(f"{path}: no position columns in header")
        data = [[float(v) for v in row] for row in rd]
    arr = np.asarray(data)
    return ParticleSet(arr[:, :d1], arr[:, d1:d1 + d2] if d2 else None)


# -- manifests ----------------------------------------------------------------

def write_manifest(path, params: dict) -> None:
    lines = [f"{k} = {params[k]}" for k in sorted(params)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: malformed line {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
