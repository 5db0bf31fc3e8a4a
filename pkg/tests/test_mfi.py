"""Random-subset integrator: determinism, convexity, oracle equivalence."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcclust.model import ConfigError, InteractionSpec, ParticleSet
from bcclust.dynamics import euler_step
from bcclust.mfi import MfiConfig, mfi_simulate, mfi_step

coord = st.floats(min_value=0, max_value=1, allow_nan=False)


@st.composite
def random_sets(draw, n_min=3, n_max=12, features=False):
    n = draw(st.integers(n_min, n_max))
    d = draw(st.integers(1, 2))
    pos = np.array(draw(st.lists(coord, min_size=n * d, max_size=n * d))).reshape(n, d)
    feat = None
    if features:
        feat = np.array(draw(st.lists(coord, min_size=n, max_size=n))).reshape(n, 1)
    return ParticleSet(pos, feat)


class TestMfiConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            MfiConfig(M=0, dt=0.5, t_final=1.0, seed=0)
        with pytest.raises(ConfigError):
            MfiConfig(M=5, dt=1.5, t_final=2.0, seed=0)
        with pytest.raises(ConfigError):
            MfiConfig(M=5, dt=0.5, t_final=0.1, seed=0)

    def test_M_larger_than_partners_rejected_at_step(self):
        ps = ParticleSet(np.zeros((4, 1)))
        cfg = MfiConfig(M=4, dt=0.5, t_final=1.0, seed=0)
        with pytest.raises(ConfigError):
            mfi_step(ps, InteractionSpec(eps1=1), cfg, 0)


class TestMfiStep:
    def test_no_qualifying_neighbor_holds_still(self):
        ps = ParticleSet([[0.0], [10.0], [20.0]])
        cfg = MfiConfig(M=2, dt=0.5, t_final=1.0, seed=0)
        nxt = mfi_step(ps, InteractionSpec(eps1=0.1), cfg, 0)
        np.testing.assert_array_equal(nxt.positions, ps.positions)

    def test_stochastic_halfway_jump_to_common_point(self):
        """All partners at one point: dt=0.5 moves the particle halfway there."""
        ps = ParticleSet([[0.0], [1.0], [1.0], [1.0]])
        cfg = MfiConfig(M=3, dt=0.5, t_final=1.0, seed=0)
        spec = InteractionSpec(eps1=2.0, sigma_mode="stochastic")
        nxt = mfi_step(ps, spec, cfg, 0)
        assert nxt.positions[0, 0] == pytest.approx(0.5)

    @given(random_sets(features=True), st.integers(0, 50),
           st.sampled_from(["symmetric", "stochastic"]), st.data())
    @settings(max_examples=60, deadline=None)
    def test_convex_combination(self, ps, k, mode, data):
        M = data.draw(st.integers(1, ps.n - 1))
        cfg = MfiConfig(M=M, dt=1.0, t_final=2.0, seed=5)
        spec = InteractionSpec(eps1=0.4, eps2=0.4, sigma_mode=mode)
        nxt = mfi_step(ps, spec, cfg, k)
        lo = ps.positions.min(axis=0) - 1e-12
        hi = ps.positions.max(axis=0) + 1e-12
        assert np.all(nxt.positions >= lo[None, :])
        assert np.all(nxt.positions <= hi[None, :])

    def test_features_shared_not_copied(self):
        rng = np.random.default_rng(0)
        ps = ParticleSet(rng.uniform(0, 1, (8, 1)), rng.uniform(0, 1, (8, 1)))
        cfg = MfiConfig(M=3, dt=0.5, t_final=1.0, seed=1)
        nxt = mfi_step(ps, InteractionSpec(eps1=0.5, eps2=0.5), cfg, 0)
        assert nxt.features is ps.features


class TestOracleEquivalence:
    @given(random_sets(n_min=3, n_max=30, features=True), st.integers(0, 20))
    @settings(max_examples=60, deadline=None)
    def test_full_subset_rescaled_matches_euler(self, ps, k):
        """M = n-1 with drift scaled by M/n reproduces the deterministic step."""
        spec = InteractionSpec(eps1=0.3, eps2=0.3, sigma_mode="symmetric")
        cfg = MfiConfig(M=ps.n - 1, dt=0.5, t_final=1.0, seed=3)
        via_mfi = mfi_step(ps, spec, cfg, k, drift_scale=(ps.n - 1) / ps.n)
        via_euler = euler_step(ps, spec, 0.5)
        np.testing.assert_allclose(via_mfi.positions, via_euler.positions,
                                   atol=1e-12, rtol=0)


class TestMfiSimulate:
    def test_bit_identical_reruns(self):
        rng = np.random.default_rng(9)
        ps = ParticleSet(rng.uniform(0, 1, (50, 1)))
        spec = InteractionSpec(eps1=0.3, sigma_mode="stochastic")
        cfg = MfiConfig(M=5, dt=0.5, t_final=5.0, seed=77)
        a = mfi_simulate(ps, spec, cfg)
        b = mfi_simulate(ps, spec, cfg)
        assert len(a.snapshots) == len(b.snapshots)
        for (ta, xa), (tb, xb) in zip(a.snapshots, b.snapshots):
            assert ta == tb
            np.testing.assert_array_equal(xa, xb)

    def test_seed_changes_trajectory(self):
        rng = np.random.default_rng(9)
        ps = ParticleSet(rng.uniform(0, 1, (50, 1)))
        spec = InteractionSpec(eps1=0.3, sigma_mode="stochastic")
        a = mfi_simulate(ps, spec, MfiConfig(M=5, dt=0.5, t_final=5.0, seed=1))
        b = mfi_simulate(ps, spec, MfiConfig(M=5, dt=0.5, t_final=5.0, seed=2))
        assert not np.array_equal(a.final_positions, b.final_positions)

    def test_metadata_records_seed(self):
        ps = ParticleSet(np.linspace(0, 1, 6)[:, None])
        cfg = MfiConfig(M=2, dt=0.5, t_final=1.0, seed=42)
        tr = mfi_simulate(ps, InteractionSpec(eps1=0.3), cfg)
        assert tr.metadata["seed"] == 42
        assert tr.metadata["method"] == "mfi"

    def test_features_never_move(self):
        rng = np.random.default_rng(10)
        ps = ParticleSet(rng.uniform(0, 1, (30, 1)), rng.uniform(0, 1, (30, 1)))
        spec = InteractionSpec(eps1=0.4, eps2=0.2, sigma_mode="stochastic")
        tr = mfi_simulate(ps, spec, MfiConfig(M=4, dt=0.5, t_final=5.0, seed=0))
        # snapshots only carry positions; the live set shares the feature array
        assert tr.metadata["M"] == 4
        nxt = mfi_step(ps, spec, MfiConfig(M=4, dt=0.5, t_final=5.0, seed=0), 0)
        np.testing.assert_array_equal(nxt.features, ps.features)

    def test_statistical_mean_conservation(self):
        """Symmetric-mode subsampling conserves the mean on average."""
        rng = np.random.default_rng(11)
        drifts = []
        for seed in range(20):
            ps = ParticleSet(rng.uniform(0, 1, (2000, 1)))
            spec = InteractionSpec(eps1=0.5, sigma_mode="symmetric")
            tr = mfi_simulate(ps, spec,
                              MfiConfig(M=10, dt=0.5, t_final=10.0, seed=seed))
            drifts.append(abs(float(tr.final_positions.mean()
                                    - ps.positions.mean())))
        assert np.mean(drifts) <= 5e-3
