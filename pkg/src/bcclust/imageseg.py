"""Grayscale segmentation: PGM I/O, pixel/particle mapping, two-level clustering."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .model import ClusteringError, ConfigError, InteractionSpec, ParticleSet
from .dynamics import IntegratorConfig, default_merge_tol, extract_clusters, simulate
from .mfi import MfiConfig, mfi_simulate

# Largest pixel count handled by the exact O(n^2) integrator by default.
DETERMINISTIC_PIXEL_LIMIT = 2**14


class PgmParseError(ClusteringError):
    """Malformed PGM input; byte_offset points at the offending data."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


@dataclass
class GrayImage:
    """Row-major grid of intensities in [0, 1]."""

    width: int
    height: int
    intensities: np.ndarray  # flat, length width*height
    maxval: int = 255

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=float).ravel()
        if self.width < 1 or self.height < 1:
            raise ConfigError("image dimensions must be positive")
        if self.intensities.size != self.width * self.height:
            raise ConfigError(
                f"expected {self.width * self.height} samples, "
                f"got {self.intensities.size}")
        if self.intensities.min() < 0 or self.intensities.max() > 1:
            raise ConfigError("intensities must lie in [0, 1]")
        if not 1 <= self.maxval <= 65535:
            raise ConfigError("maxval must be in [1, 65535]")

    def grid(self) -> np.ndarray:
        return self.intensities.reshape(self.height, self.width)


class _TokenReader:
    """Whitespace/comment-aware token scanner tracking byte offsets."""

    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def skip_separators(self):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos:self.pos + 1]
            if c.isspace():
                self.pos += 1
            elif c == b"#":
                while self.pos < len(d) and d[self.pos:self.pos + 1] not in (b"\n", b""):
                    self.pos += 1
            else:
                break

    def next_int(self, what: str) -> int:
        self.skip_separators()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos:self.pos + 1].isdigit():
            self.pos += 1
        if self.pos == start:
            raise PgmParseError(f"expected {what}", start)
        return int(self.data[start:self.pos])


def load_grayscale(path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary) PGM file; intensity = sample / maxval."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise PgmParseError(f"bad magic {data[:2]!r}, expected P2 or P5", 0)
    binary = data[:2] == b"P5"
    rd = _TokenReader(data, 2)
    width = rd.next_int("width")
    height = rd.next_int("height")
    maxval = rd.next_int("maxval")
    if width < 1 or height < 1:
        raise PgmParseError(f"bad dimensions {width}x{height}", 2)
    if not 1 <= maxval <= 65535:
        raise PgmParseError(f"maxval {maxval} outside [1, 65535]", rd.pos)
    count = width * height
    if binary:
        # exactly one whitespace byte after maxval, then raw samples
        if rd.pos >= len(data) or not data[rd.pos:rd.pos + 1].isspace():
            raise PgmParseError("expected single whitespace before raster", rd.pos)
        start = rd.pos + 1
        bpp = 2 if maxval > 255 else 1
        need = count * bpp
        if len(data) - start < need:
            missing = (need - (len(data) - start) + bpp - 1) // bpp
            raise PgmParseError(f"raster truncated, {missing} samples missing",
                                len(data))
        raw = np.frombuffer(data, dtype=np.uint8, count=need, offset=start)
        if bpp == 2:  # big-endian two-byte samples
            samples = raw.reshape(-1, 2).astype(np.uint32)
            samples = samples[:, 0] * 256 + samples[:, 1]
        else:
            samples = raw.astype(np.uint32)
    else:
        samples = np.empty(count, dtype=np.uint32)
        for k in range(count):
            samples[k] = rd.next_int(f"sample {k} of {count}")
    if samples.max(initial=0) > maxval:
        bad = int(np.argmax(samples > maxval))
        raise PgmParseError(f"sample {bad} exceeds maxval {maxval}", rd.pos)
    return GrayImage(width, height, samples / maxval, maxval)


def write_image(img: GrayImage, path, format: str = "P5") -> None:
    """Write a PGM with maxval 255; intensities quantize by round-half-up."""
    if format not in ("P2", "P5"):
        raise ConfigError("format must be 'P2' or 'P5'")
    q = np.floor(np.clip(img.intensities, 0.0, 1.0) * 255 + 0.5).astype(np.uint8)
    header = f"{format}\n{img.width} {img.height}\n255\n".encode()
    if format == "P5":
        payload = header + q.tobytes()
    else:
        lines = []
        for r in range(img.height):
            row = q[r * img.width:(r + 1) * img.width]
            lines.append(" ".join(str(int(v)) for v in row))
        payload = header + ("\n".join(lines) + "\n").encode()
    _atomic_write_bytes(path, payload)


def _atomic_write_bytes(path, payload: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-pgm-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def image_to_particles(img: GrayImage) -> ParticleSet:
    """One particle per pixel at the pixel center, intensity as static feature.

    Row 0 maps to the top of the unit square (high y); this orientation is
    arbitrary for the clustering metric but fixed for reproducibility.
    """
    cols, rows = np.meshgrid(np.arange(img.width), np.arange(img.height))
    x = (cols.ravel() + 0.5) / img.width
    y = 1.0 - (rows.ravel() + 0.5) / img.height
    return ParticleSet(np.column_stack([x, y]), img.intensities[:, None])


@dataclass
class SegmentationResult:
    labels: np.ndarray  # per-pixel cluster id, flat row-major
    cluster_intensity: np.ndarray  # per-cluster mean of original intensities
    output: GrayImage
    clusters: object  # the underlying ClusterSet


def segment(img: GrayImage, spec: InteractionSpec, method: str = "auto",
            dt: float = 0.5, t_final: float = 50.0, M: int = 10,
            seed: int = 0, stop_tol: float = 1e-8,
            merge_tol: float | None = None) -> SegmentationResult:
    """Cluster pixels by position and intensity, rebuild the image from
    per-cluster means of the original intensities.

    method 'euler' runs the exact integrator, 'mfi' the subset algorithm;
    'auto' picks euler up to 2^14 pixels.
    """
    if spec.eps1 <= 0 or spec.eps2 <= 0:
        raise ConfigError("segmentation needs positive eps1 and eps2")
    ps0 = image_to_particles(img)
    if method == "auto":
        method = "euler" if ps0.n <= DETERMINISTIC_PIXEL_LIMIT else "mfi"
    if method == "euler":
        tr = simulate(ps0, spec, IntegratorConfig(dt, t_final, stop_tol))
    elif method == "mfi":
        tr = mfi_simulate(ps0, spec, MfiConfig(M, dt, t_final, seed, stop_tol))
    else:
        raise ConfigError(f"unknown method {method!r}")
    final = ps0.with_positions(tr.final_positions, tr.snapshots[-1][0])
    if merge_tol is None:
        merge_tol = default_merge_tol(ps0, spec)
    cs = extract_clusters(final, merge_tol, spec)
    labels = np.empty(ps0.n, dtype=int)
    means = np.empty(cs.n_clusters)
    out = np.empty(ps0.n)
    for cid, cluster in enumerate(cs.clusters):
        labels[cluster.members] = cid
        means[cid] = img.intensities[cluster.members].mean()
        out[cluster.members] = means[cid]
    return SegmentationResult(labels, means,
                              GrayImage(img.width, img.height, out), cs)


def threshold(sr: SegmentationResult, theta: float) -> GrayImage:
    """Binarize: clusters with mean intensity strictly below theta go black."""
    if not 0 <= theta <= 1:
        raise ConfigError("threshold must lie in [0, 1]")
    binary = np.where(sr.cluster_intensity[sr.labels] < theta, 0.0, 1.0)
    return GrayImage(sr.output.width, sr.output.height, binary)
