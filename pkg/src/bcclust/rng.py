"""Counter-based random streams for reproducible subset sampling.

Every draw is a pure function of (seed, step, particle, slot), so sampled
subsets do not depend on evaluation order or worker count.  The generator is a
splitmix64-style chain of multiply/xor finalizers over 64-bit counters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ConfigError

_U = np.uint64
_GOLDEN = _U(0x9E3779B97F4A7C15)
_C_STEP = _U(0xD2B74407B1CE6E93)
_C_PART = _U(0xCA5A826395121157)
_C_SLOT = _U(0x9E6C63D0876A9A63)
_C_RETRY = _U(0xB5297A4D3BE87F81)


def _fmix(z):
    # 64-bit wraparound is intended; numpy warns for scalar operands only
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
        return z ^ (z >> _U(31))


def _step_key(seed: int, step: int):
    with np.errstate(over="ignore"):
        return _fmix((_U(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
                     ^ (_U(step) + _U(1)) * _C_STEP)


def _particle_keys(seed: int, step: int, particles):
    base = _step_key(seed, step)
    with np.errstate(over="ignore"):
        return _fmix(base ^ (particles.astype(np.uint64) + _U(1)) * _C_PART)


def _bounded(keys, slots, bound: int):
    """Uniform integers in [0, bound) keyed by (key, slot).  Exact via rejection."""
    with np.errstate(over="ignore"):
        raw = _fmix(keys ^ (slots + _U(1)) * _C_SLOT)
    b = _U(bound)
    limit = _U((2**64 // bound) * bound - 1)  # accept raw <= limit
    bad = raw > limit
    while bad.any():
        raw = np.where(bad, _fmix(raw ^ _C_RETRY), raw)
        bad = raw > limit
    return raw % b


@dataclass(frozen=True)
class RngStream:
    """Keyed stream of M-subsets, one per (step, particle)."""

    seed: int

    def subsets(self, step: int, n: int, M: int, particles=None) -> np.ndarray:
        """Sampled index rows, shape (len(particles), M).

        Each row is an M-subset of {0..n-1} \\ {i} drawn uniformly without
        repetition, a pure function of (seed, step, i).
        """
        if particles is None:
            particles = np.arange(n)
        particles = np.asarray(particles, dtype=np.int64)
        if not 1 <= M <= n - 1:
            raise ConfigError(f"subset size {M} must be in [1, n-1] = [1, {n - 1}]")
        keys = _particle_keys(self.seed, step, particles)
        if 2 * M <= n - 1:
            return self._reject(keys, particles, n, M)
        return self._fisher_yates(keys, particles, n, M)

    def subset(self, step: int, i: int, n: int, M: int) -> np.ndarray:
        """Single subset for particle i; identical to the batch row."""
        return self.subsets(step, n, M, particles=np.array([i]))[0]

    def _reject(self, keys, particles, n, M):
        # Draw M values with replacement from the complement; retry rows that
        # collide.  Attempt a uses slots [a*M, (a+1)*M), so each row stays a
        # pure function of its own key.
        rows = np.arange(len(particles))
        out = np.empty((len(particles), M), dtype=np.int64)
        pending = rows
        attempt = 0
        while pending.size:
            slots = (np.arange(M, dtype=np.uint64) + _U(attempt * M))[None, :]
            v = _bounded(keys[pending][:, None], slots, n - 1).astype(np.int64)
            j = v + (v >= particles[pending][:, None])
            srt = np.sort(j, axis=1)
            dup = (srt[:, 1:] == srt[:, :-1]).any(axis=1) if M > 1 else np.zeros(len(pending), bool)
            ok = pending[~dup]
            out[ok] = j[~dup]
            pending = pending[dup]
            attempt += 1
        return out

    def _fisher_yates(self, keys, particles, n, M):
        # Partial shuffle of each row's complement; used when M is a large
        # fraction of n (the rejection path would rarely terminate).
        rows = len(particles)
        pool = np.broadcast_to(np.arange(n - 1), (rows, n - 1)).copy()
        pool += pool >= particles[:, None]  # complement of self
        r = np.arange(rows)
        for s in range(M):
            slot = np.full((rows,), s, dtype=np.uint64)
            pick = s + _bounded(keys, slot, n - 1 - s).astype(np.int64)
            tmp = pool[r, s].copy()
            pool[r, s] = pool[r, pick]
            pool[r, pick] = tmp
        return pool[:, :M]


def derive_seed(*parts: int) -> int:
    """Stable child seed from a tuple of integers."""
    h = _GOLDEN
    with np.errstate(over="ignore"):
        for p in parts:
            h = _fmix((h + _GOLDEN)
                      ^ (_U(int(p) & 0xFFFFFFFFFFFFFFFF) + _U(1)) * _C_PART)
    return int(h)
