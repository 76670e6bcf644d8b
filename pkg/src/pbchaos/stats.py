"""Measurement statistics: jackknife errors, outlier rejection, shot noise."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMAD, InsufficientSamples


@dataclass(frozen=True)
class JackknifeResult:
    variance: float
    stderr: float

    @property
    def interval(self):
        """1-s.d. confidence interval (variance - SE, variance + SE)."""
        return (self.variance - self.stderr, self.variance + self.stderr)


def jackknife_variance_ci(values) -> JackknifeResult:
    """Leave-one-out jackknife standard error of the sample variance.

    The point estimate is the unbiased sample variance (ddof = 1); the
    standard error is sqrt((n-1)/n * sum((theta_i - theta_bar)^2)) over
    the leave-one-out variance estimates theta_i.  With exactly two
    values the leave-one-out subsets are single points, so the standard
    error degenerates to zero.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        raise InsufficientSamples("jackknife needs at least 2 values")
    var_full = float(np.var(x, ddof=1))
    # leave-one-out variances, vectorized via sum identities
    s, s2 = x.sum(), np.sum(x * x)
    loo_mean = (s - x) / (n - 1)
    if n == 2:
        loo_var = np.zeros(n)
    else:
        loo_var = (s2 - x * x - (n - 1) * loo_mean**2) / (n - 2)
    se = float(np.sqrt((n - 1) / n * np.sum((loo_var - loo_var.mean()) ** 2)))
    return JackknifeResult(variance=var_full, stderr=se)


def reject_outliers_modified_z(values, threshold: float = 3.5):
    """Flag outliers by the modified Z-score 0.6745 (x - median) / MAD.

    Returns (kept_values, rejected_indices).  When the median absolute
    deviation vanishes the score is undefined; a DegenerateMAD warning is
    emitted and nothing is rejected.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 values for outlier rejection")
    med = np.median(x)
    mad = np.median(np.abs(x - med))
    if mad == 0.0:
        warnings.warn("MAD is zero; skipping outlier rejection", DegenerateMAD)
        return x.copy(), np.array([], dtype=int)
    score = 0.6745 * (x - med) / mad
    rejected = np.nonzero(np.abs(score) > threshold)[0]
    kept = np.delete(x, rejected)
    return kept, rejected


@dataclass
class ShotStatistics:
    """Finite-shot statistics of one resampled time point."""

    mean: float
    variance: float
    variance_stderr: float
    shots: int

    @property
    def variance_interval(self):
        return (self.variance - self.variance_stderr,
                self.variance + self.variance_stderr)


def measurement_resample(sample_values, shots_per_point: int, seed: int):
    """Emulate finite experimental statistics by subsampling an ensemble.

    Parameters
    ----------
    sample_values : sequence of 1-d arrays
        Per-time-point ensemble member values (e.g. z of every sample).
    shots_per_point : int >= 2
        Number of independent shots drawn (without replacement) per point.
    seed : int
        Base seed; each time point gets its own derived stream, so the
        result is independent of evaluation order.

    Returns
    -------
    list of ShotStatistics, one per time point.  If shots_per_point
    equals the ensemble size the full-ensemble statistics are reproduced
    exactly (the subsample is a permutation).
    """
    if shots_per_point < 2:
        raise ValueError("shots_per_point must be >= 2")
    out = []
    for k, vals in enumerate(sample_values):
        x = np.asarray(vals, dtype=float)
        if x.size < shots_per_point:
            raise InsufficientSamples(
                f"time point {k}: {x.size} ensemble members < {shots_per_point} shots")
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
        pick = rng.choice(x.size, size=shots_per_point, replace=False)
        sub = x[pick]
        jk = jackknife_variance_ci(sub)
        out.append(ShotStatistics(mean=float(sub.mean()), variance=jk.variance,
                                  variance_stderr=jk.stderr, shots=shots_per_point))
    return out
