"""
Unit tests for counter-based random streams
"""

import numpy as np
import pytest

from app.models import rng


class TestStreams:
    """Test stream keying and reproducibility"""

    def test_same_keys_same_draws(self):
        """Test that (seed, keys) fully determines the stream"""
        a = rng.uniforms(rng.stream(5, 1, 2), 10)
        b = rng.uniforms(rng.stream(5, 1, 2), 10)
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ(self):
        """Test that child keys give independent streams"""
        a = rng.uniforms(rng.stream(5, 1, 2), 10)
        b = rng.uniforms(rng.stream(5, 1, 3), 10)
        assert not np.array_equal(a, b)

    def test_negative_seed_rejected(self):
        """Test non-negative seeds and keys"""
        with pytest.raises(ValueError):
            rng.stream(-1)

    def test_derive_seed_deterministic(self):
        """Test derived replication seeds"""
        assert rng.derive_seed(3, 1, 7) == rng.derive_seed(3, 1, 7)
        assert rng.derive_seed(3, 1, 7) != rng.derive_seed(3, 1, 8)
        assert rng.derive_seed(3, 1, 7) >= 0


class TestVariates:
    """Test the distribution helpers"""

    def test_uniforms_strictly_inside_unit_interval(self):
        """Test 0 < u < 1 so the inverse CDF stays finite"""
        u = rng.uniforms(rng.stream(0), 100_000)
        assert u.min() > 0.0
        assert u.max() < 1.0
        assert u.mean() == pytest.approx(0.5, abs=0.01)

    def test_standard_normal_moments(self):
        """Test mean 0 and variance 1"""
        z = rng.standard_normal(rng.stream(1), 200_000)
        assert z.mean() == pytest.approx(0.0, abs=0.01)
        assert z.var() == pytest.approx(1.0, abs=0.02)

    def test_t3_centered_and_finite(self):
        """Test t3 draws are symmetric about zero and finite"""
        t = rng.student_t(rng.stream(2), 3.0, 400_000)
        assert np.median(t) == pytest.approx(0.0, abs=0.01)
        assert np.all(np.isfinite(t))

    @pytest.mark.parametrize("family", ["gaussian", "t1", "t3"])
    def test_draw_family_shapes(self, family):
        """Test every noise family fills the requested shape"""
        draws = rng.draw_family(rng.stream(3), family, (4, 5))
        assert draws.shape == (4, 5)
        assert np.all(np.isfinite(draws))

    def test_unknown_family(self):
        """Test unknown family names"""
        with pytest.raises(ValueError):
            rng.draw_family(rng.stream(0), "cauchy", 3)


class TestSubsets:
    """Test random subset helpers"""

    def test_random_subset_size_and_range(self):
        """Test a sorted size-k subset of range(n)"""
        subset = rng.random_subset(rng.stream(4), 10, 4)
        assert len(set(subset.tolist())) == 4
        assert subset.min() >= 0 and subset.max() < 10
        assert np.all(np.diff(subset) > 0)

    def test_subset_rows(self):
        """Test each row is a subset without repeats"""
        rows = rng.subset_rows(rng.stream(5), 8, 3, 50)
        assert rows.shape == (50, 3)
        assert all(len(set(row)) == 3 for row in rows.tolist())

    def test_subset_rows_full(self):
        """Test k = n returns every index"""
        rows = rng.subset_rows(rng.stream(5), 4, 4, 2)
        np.testing.assert_array_equal(np.sort(rows, axis=1), [[0, 1, 2, 3]] * 2)

    def test_bootstrap_indices(self):
        """Test with-replacement index matrix"""
        idx = rng.bootstrap_indices(rng.stream(6), 7, 20)
        assert idx.shape == (20, 7)
        assert idx.min() >= 0 and idx.max() < 7
