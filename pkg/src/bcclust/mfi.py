"""Random-subset mean-field interaction integrator, O(M*N) per step.

Each particle averages over M indices sampled uniformly without repetition
from the other particles.  The kernel average is normalized so that dt * Abar
never exceeds 1: in symmetric mode Abar = (1/M) * sum of kernel indicators
(the Monte Carlo estimate of the interaction fraction), in stochastic mode
Abar is 1 whenever any sampled neighbor qualifies (the subset itself estimates
the row normalization).  A particle whose sample contains no qualifying
neighbor holds still.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ConfigError, InteractionSpec, ParticleSet, _reduce_abs_diff, distances_to
from .moments import MomentRecord
from .rng import RngStream
from .dynamics import Trajectory, _run


@dataclass(frozen=True)
class MfiConfig:
    M: int
    dt: float
    t_final: float
    seed: int
    stop_tol: float = 1e-8
    record_every: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError("subset size M must be at least 1")
        if not 0 < self.dt <= 1:
            raise ConfigError(f"dt must be in (0, 1], got {self.dt}")
        if self.t_final < self.dt:
            raise ConfigError("t_final must be at least dt")
        if self.stop_tol < 0:
            raise ConfigError("stop_tol must be nonnegative")
        if self.record_every < 1:
            raise ConfigError("record_every must be a positive integer")


def mfi_step(ps: ParticleSet, spec: InteractionSpec, cfg: MfiConfig, k: int,
             drift_scale: float = 1.0) -> ParticleSet:
    """One Monte Carlo step, reading only the step-k state.

    drift_scale multiplies Abar; the default 1.0 is the algorithm proper.
    Setting it to M/n with the full subset M = n-1 reproduces the deterministic
    Euler step in symmetric mode, which the tests use as an oracle.
    """
    n = ps.n
    if cfg.M > n - 1:
        raise ConfigError(f"M={cfg.M} exceeds the {n - 1} available partners")
    x = ps.positions
    subsets = RngStream(cfg.seed).subsets(k, n, cfg.M)  # (n, M)
    xj = x[subsets]  # (n, M, d1)
    w = _reduce_abs_diff(np.abs(xj - x[:, None, :]), spec.norm1, axis=2) <= spec.eps1
    if ps.d2 > 0:
        cj = ps.features[subsets]
        w &= _reduce_abs_diff(
            np.abs(cj - ps.features[:, None, :]), spec.norm2, axis=2) <= spec.eps2
    sw = w.sum(axis=1)
    active = sw > 0
    wsum = np.where(active, sw, 1).astype(float)
    xbar = (w[:, :, None] * xj).sum(axis=1) / wsum[:, None]
    if spec.sigma_mode == "symmetric":
        abar = sw / cfg.M
    else:
        abar = active.astype(float)
    abar = abar * drift_scale
    step = cfg.dt * abar[:, None] * (xbar - x)
    x_new = np.where(active[:, None], x + step, x)
    return ps.with_positions(x_new, ps.t + cfg.dt)


def mfi_simulate(ps0: ParticleSet, spec: InteractionSpec, cfg: MfiConfig) -> Trajectory:
    """Run the subset algorithm to t_final with the same stopping and
    recording rules as the deterministic integrator."""
    meta = {"method": "mfi", "M": cfg.M, "dt": cfg.dt, "t_final": cfg.t_final,
            "seed": cfg.seed, "sigma_mode": spec.sigma_mode}
    return _run(ps0, spec, cfg, lambda ps, k: mfi_step(ps, spec, cfg, k), meta)
