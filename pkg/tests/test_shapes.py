"""Pattern sampling, noise injection, detection error, sweep plumbing."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcclust.model import ConfigError, InteractionSpec, ParticleSet
from bcclust.dynamics import extract_clusters
from bcclust.shapes import (
    LETTER_A_SEGMENTS,
    NoiseSpec,
    Pattern,
    error_measure,
    generate_letter_A,
    load_segments,
    perturb,
    sample_segments,
    sweep,
)


def point_to_segment_distance(p, a, b):
    a, b = np.asarray(a), np.asarray(b)
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return np.linalg.norm(p - (a + t * ab))


class TestSampleSegments:
    @given(st.integers(3, 400))
    @settings(max_examples=40)
    def test_counts_and_containment(self, n):
        pat = generate_letter_A(n)
        assert pat.n == n
        assert np.all(pat.points >= 0) and np.all(pat.points <= 1)

    @given(st.integers(3, 200))
    @settings(max_examples=30)
    def test_points_lie_on_segments(self, n):
        pat = generate_letter_A(n)
        for p in pat.points:
            d = min(point_to_segment_distance(p, a, b)
                    for a, b in LETTER_A_SEGMENTS)
            assert d <= 1e-12

    def test_three_points_one_per_segment(self):
        pat = generate_letter_A(3)
        for (a, b), p in zip(LETTER_A_SEGMENTS, pat.points):
            assert point_to_segment_distance(p, a, b) <= 1e-12

    def test_allocation_proportional_to_length(self):
        segs = (((0.0, 0.0), (0.9, 0.0)), ((0.0, 0.5), (0.1, 0.5)))
        pat = sample_segments(segs, 100)
        on_long = sum(point_to_segment_distance(p, *segs[0]) <= 1e-12
                      for p in pat.points)
        assert on_long == 90

    def test_endpoints_included(self):
        pat = sample_segments((((0.1, 0.1), (0.9, 0.9)),), 5)
        assert any(np.allclose(p, [0.1, 0.1]) for p in pat.points)
        assert any(np.allclose(p, [0.9, 0.9]) for p in pat.points)

    def test_too_few_points(self):
        with pytest.raises(ConfigError):
            generate_letter_A(2)

    def test_zero_length_pattern_rejected(self):
        with pytest.raises(ConfigError):
            sample_segments((((0.5, 0.5), (0.5, 0.5)),), 10)


class TestLoadSegments:
    def test_round_trip(self, tmp_path):
        f = tmp_path / "pat.txt"
        f.write_text("# comment line\n0.1 0.1 0.5 0.9\n0.9 0.1 0.5 0.9  # tail\n\n")
        segs = load_segments(f)
        assert segs == (((0.1, 0.1), (0.5, 0.9)), ((0.9, 0.1), (0.5, 0.9)))

    def test_malformed_line(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("0.1 0.2 0.3\n")
        with pytest.raises(ConfigError):
            load_segments(f)

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.txt"
        f.write_text("# nothing\n")
        with pytest.raises(ConfigError):
            load_segments(f)


class TestPerturb:
    def test_containment(self):
        pat = generate_letter_A(500)
        for dist in ("uniform", "gaussian"):
            pts = perturb(pat, NoiseSpec(alpha=0.2, dist=dist, seed=3))
            assert np.all(pts >= 0) and np.all(pts <= 1)

    def test_uniform_displacement_bound(self):
        pat = generate_letter_A(500)
        pts = perturb(pat, NoiseSpec(alpha=0.1, dist="uniform", seed=4))
        assert np.max(np.abs(pts - pat.points)) <= 0.1

    def test_seed_reproducible(self):
        pat = generate_letter_A(50)
        a = perturb(pat, NoiseSpec(0.05, "gaussian", seed=9))
        b = perturb(pat, NoiseSpec(0.05, "gaussian", seed=9))
        np.testing.assert_array_equal(a, b)

    def test_invalid_spec(self):
        with pytest.raises(ConfigError):
            NoiseSpec(alpha=0.0)
        with pytest.raises(ConfigError):
            NoiseSpec(alpha=0.1, dist="poisson")


class TestErrorMeasure:
    def _cluster_set(self, centers):
        ps = ParticleSet(np.asarray(centers, dtype=float))
        return extract_clusters(ps, 1e-9, InteractionSpec(eps1=1))

    def test_zero_on_pattern(self):
        pat = generate_letter_A(10)
        cs = self._cluster_set(pat.points[:4])
        assert error_measure(cs, pat) == pytest.approx(0.0, abs=1e-12)

    def test_single_cluster_distance(self):
        pat = sample_segments((((0.0, 0.0), (1.0, 0.0)),), 11)
        cs = self._cluster_set([[0.5, 0.25]])
        assert error_measure(cs, pat) == pytest.approx(0.25)

    def test_mean_of_two(self):
        pat = sample_segments((((0.0, 0.0), (1.0, 0.0)),), 101)
        cs = self._cluster_set([[0.2, 0.01], [0.8, 0.03]])
        assert error_measure(cs, pat) == pytest.approx(0.02)

    def test_translation_consistent(self):
        pat = generate_letter_A(20)
        shift = np.array([0.05, -0.03])
        moved = Pattern(pat.segments, pat.points + shift)
        cs1 = self._cluster_set(pat.points[:5] + 0.01)
        cs2 = self._cluster_set(pat.points[:5] + 0.01 + shift)
        assert error_measure(cs1, pat) == pytest.approx(
            error_measure(cs2, moved), abs=1e-12)

    def test_snapping_never_increases(self):
        rng = np.random.default_rng(5)
        pat = generate_letter_A(30)
        centers = rng.uniform(0, 1, (6, 2))
        cs = self._cluster_set(centers)
        base = error_measure(cs, pat)
        # snap the worst center onto its nearest pattern point
        d = np.linalg.norm(centers[:, None] - pat.points[None], axis=2)
        worst = int(d.min(axis=1).argmax())
        snapped = centers.copy()
        snapped[worst] = pat.points[d[worst].argmin()]
        assert error_measure(self._cluster_set(snapped), pat) <= base + 1e-12


class TestSweep:
    def test_deterministic_and_well_formed(self):
        pat = generate_letter_A(120)
        r1 = sweep(pat, [0.05], [0.1, 0.2], 2, master_seed=5, t_final=5.0)
        r2 = sweep(pat, [0.05], [0.1, 0.2], 2, master_seed=5, t_final=5.0)
        assert [(a.error, a.n_clusters) for a in r1.rows] == \
            [(b.error, b.n_clusters) for b in r2.rows]
        assert len(r1.rows) == 4
        assert len(r1.summary) == 2
        assert sum(s.best for s in r1.summary) == 1

    def test_empty_grid_rejected(self):
        pat = generate_letter_A(10)
        with pytest.raises(ConfigError):
            sweep(pat, [], [0.1], 1)
