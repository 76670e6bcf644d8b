import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbchaos import (DegenerateMAD, InsufficientSamples,
                     jackknife_variance_ci, measurement_resample,
                     reject_outliers_modified_z)


def brute_force_jackknife(values):
    """Independent oracle: explicit leave-one-out loop."""
    x = np.asarray(values, float)
    n = x.size
    theta = np.array([np.var(np.delete(x, i), ddof=1) for i in range(n)])
    se = np.sqrt((n - 1) / n * np.sum((theta - theta.mean()) ** 2))
    return float(np.var(x, ddof=1)), float(se)


class TestJackknife:
    def test_constant_list(self):
        res = jackknife_variance_ci([3.0, 3.0, 3.0, 3.0])
        assert res.variance == 0.0
        assert res.stderr == 0.0
        assert res.interval == (0.0, 0.0)

    def test_small_list_exact(self):
        res = jackknife_variance_ci([1.0, 2.0, 3.0, 4.0])
        var, se = brute_force_jackknife([1.0, 2.0, 3.0, 4.0])
        assert res.variance == pytest.approx(var, abs=1e-14)
        assert res.stderr == pytest.approx(se, abs=1e-14)

    @given(st.lists(st.floats(-50, 50), min_size=3, max_size=10))
    @settings(max_examples=150, deadline=None)
    def test_matches_brute_force(self, values):
        res = jackknife_variance_ci(values)
        var, se = brute_force_jackknife(values)
        assert res.variance == pytest.approx(var, abs=1e-9)
        assert res.stderr == pytest.approx(se, rel=1e-9, abs=1e-9)

    def test_two_values_degenerate(self):
        res = jackknife_variance_ci([1.0, 2.0])
        assert res.variance == pytest.approx(0.5)
        assert res.stderr == 0.0

    def test_gaussian_asymptotics(self):
        rng = np.random.default_rng(42)
        x = rng.normal(0.0, 2.0, 4000)
        res = jackknife_variance_ci(x)
        # SE(variance) for a Gaussian is sigma^2 sqrt(2/(n-1))
        expected = 4.0 * np.sqrt(2.0 / (x.size - 1))
        assert res.stderr == pytest.approx(expected, rel=0.2)

    def test_too_short(self):
        with pytest.raises(InsufficientSamples):
            jackknife_variance_ci([1.0])


class TestModifiedZScore:
    def test_clean_data_untouched(self):
        x = [-1.0, -0.5, 0.0, 0.5, 1.0]
        kept, rejected = reject_outliers_modified_z(x)
        assert rejected.size == 0
        np.testing.assert_array_equal(kept, x)

    def test_planted_outlier(self):
        kept, rejected = reject_outliers_modified_z([0.0, 0.1, -0.1, 0.05, 50.0])
        assert list(rejected) == [4]
        assert 50.0 not in kept

    def test_degenerate_mad(self):
        with pytest.warns(DegenerateMAD):
            kept, rejected = reject_outliers_modified_z([2.0, 2.0, 2.0, 2.0])
        assert rejected.size == 0
        assert kept.size == 4

    def test_score_threshold_honored(self):
        # |0.6745 (x - med) / MAD| for the planted point barely above threshold
        x = np.array([0.0, 1.0, -1.0, 0.5, -0.5, 10.0])
        kept, rejected = reject_outliers_modified_z(x, threshold=3.5)
        med = np.median(x)
        mad = np.median(np.abs(x - med))
        score = 0.6745 * np.abs(x - med) / mad
        np.testing.assert_array_equal(rejected, np.nonzero(score > 3.5)[0])

    def test_too_short(self):
        with pytest.raises(ValueError):
            reject_outliers_modified_z([1.0, 2.0])

    def test_false_positive_rate(self):
        rng = np.random.default_rng(7)
        flagged = total = 0
        for _ in range(1000):
            x = rng.normal(0.0, 1.0, 20)
            _, rejected = reject_outliers_modified_z(x)
            flagged += rejected.size
            total += x.size
        assert flagged / total < 0.01


class TestMeasurementResample:
    def test_full_ensemble_exact(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(0, 1, 50)
        (stats,) = measurement_resample([vals], shots_per_point=50, seed=1)
        assert stats.mean == pytest.approx(vals.mean(), abs=1e-12)
        assert stats.variance == pytest.approx(np.var(vals, ddof=1), abs=1e-12)

    def test_seed_determinism(self):
        rng = np.random.default_rng(0)
        vals = [rng.normal(0, 1, 200) for _ in range(3)]
        a = measurement_resample(vals, 75, seed=9)
        b = measurement_resample(vals, 75, seed=9)
        assert all(x.mean == y.mean and x.variance == y.variance
                   for x, y in zip(a, b))

    def test_insufficient(self):
        with pytest.raises(InsufficientSamples):
            measurement_resample([np.arange(10.0)], 11, seed=0)

    def test_coverage(self):
        # true variance falls inside the 1-sd jackknife interval in >= 60%
        # of synthetic experiments (asymptotically ~68%)
        rng = np.random.default_rng(123)
        hits = trials = 0
        for k in range(300):
            pool = rng.normal(0.0, 1.0, 4000)
            (stats,) = measurement_resample([pool], 75, seed=k)
            lo, hi = stats.variance_interval
            hits += lo <= 1.0 <= hi
            trials += 1
        assert hits / trials >= 0.60
