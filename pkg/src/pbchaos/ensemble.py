"""Classical ensembles standing in for the quantum state.

A coherent spin state is mimicked by a Gaussian cloud on the Bloch
sphere: isotropic offsets of standard deviation 1/sqrt(N) along two
orthonormal tangent directions at the center, so that Var(z) approaches
the coherent-state value (1 - z0^2)/N.  The cloud is propagated through
the driven flow and its mean/variance observables are aggregated at the
requested times.

Randomness is drawn from counter-style streams keyed by (seed, sample
index): every sample owns its offsets and its static detuning shift, so
results are reproducible bit for bit at any parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import integrate
from .model import PhaseState, SystemParams

#: fixed-step resolution used for ensemble propagation
ENSEMBLE_STEPS_PER_PERIOD = 1000


@dataclass(frozen=True)
class CssSpec:
    """Coherent-spin-state cloud specification."""

    center: PhaseState
    n_atoms: int
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.n_atoms < 2:
            raise ValueError("n_atoms must be >= 2")


@dataclass(frozen=True)
class NoiseModel:
    """Technical-noise knobs for ensemble runs.

    sigma_delta is the rms of a static shot-to-shot detuning offset in
    units of Omega0 (slow drift, one draw per sample).  loss_tau_ms is
    the 1/e atom-loss time in milliseconds (None disables loss); whether
    80 ms is a loss constant or an observation span is ambiguous in the
    source data, so the value is always explicit here.  lambda_decay
    couples the atom loss into the nonlinearity, Lambda(t) proportional
    to N(t), while the detuning stays compensated.
    """

    sigma_delta: float = 0.0
    loss_tau_ms: float | None = None
    lambda_decay: bool = False

    def __post_init__(self):
        if self.sigma_delta < 0:
            raise ValueError("sigma_delta must be >= 0")
        if self.loss_tau_ms is not None and not self.loss_tau_ms > 0:
            raise ValueError("loss_tau_ms must be positive when enabled")

    @classmethod
    def off(cls) -> "NoiseModel":
        return cls()


@dataclass
class EnsembleSeries:
    """Aggregated observables of a propagated cloud at sample times."""

    times: np.ndarray               # dimensionless
    times_ms: np.ndarray | None     # physical, when an anchor is available
    mean_z: np.ndarray
    var_z: np.ndarray
    normalized_var_z: np.ndarray
    mean_y: np.ndarray              # y = sin(phi)
    var_y: np.ndarray
    n_atoms_t: np.ndarray
    survivors: np.ndarray
    z_samples: np.ndarray | None = field(default=None, repr=False)
    y_samples: np.ndarray | None = field(default=None, repr=False)

    def css_reference_var(self):
        """Coherent-state reference variance (1 - <z>^2) / N(t) in z units."""
        return (1.0 - self.mean_z**2) / self.n_atoms_t


def _sample_offsets(n_samples: int, seed: int, sigma: float) -> np.ndarray:
    """Two tangent-plane Gaussian offsets per sample from per-sample streams."""
    out = np.empty((n_samples, 2))
    for i in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        out[i] = rng.normal(0.0, sigma, 2)
    return out


def _detuning_offsets(n_samples: int, seed: int, sigma_delta: float) -> np.ndarray:
    out = np.empty(n_samples)
    for i in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i, 1)))
        out[i] = rng.normal(0.0, sigma_delta)
    return out


def sample_css_cartesian(spec: CssSpec) -> np.ndarray:
    """Sample the cloud as Bloch vectors, shape (n_samples, 3)."""
    z0, phi0 = spec.center.z, spec.center.phi
    s0 = spec.center.cartesian()
    if abs(z0) >= 1.0:
        # delta distribution at a pole
        return np.tile(s0, (spec.n_samples, 1))
    theta = math.acos(z0)
    e_theta = np.array([math.cos(theta) * math.cos(phi0),
                        math.cos(theta) * math.sin(phi0),
                        -math.sin(theta)])
    e_phi = np.array([-math.sin(phi0), math.cos(phi0), 0.0])
    d = _sample_offsets(spec.n_samples, spec.seed, 1.0 / math.sqrt(spec.n_atoms))
    pts = s0[None, :] + d[:, :1] * e_theta[None, :] + d[:, 1:] * e_phi[None, :]
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def sample_css(spec: CssSpec) -> list:
    """Sample the cloud as PhaseState points."""
    pts = sample_css_cartesian(spec)
    return [PhaseState.from_cartesian(p) for p in pts]


def evolve_ensemble(params: SystemParams, spec: CssSpec,
                    noise: NoiseModel = NoiseModel.off(),
                    sample_times=None,
                    steps_per_period: int = ENSEMBLE_STEPS_PER_PERIOD,
                    keep_samples: bool = False) -> EnsembleSeries:
    """Propagate a coherent-state cloud and aggregate its statistics.

    sample_times are dimensionless, ascending and start at 0.  Samples
    that lose finiteness are dropped from the statistics of all later
    times (survivors column); if more than 1 percent fail the run aborts.
    """
    if sample_times is None:
        raise ValueError("sample_times is required")
    times = np.asarray(sample_times, dtype=float)
    if times[0] != 0.0:
        raise ValueError("sample_times must start at 0")
    pts = sample_css_cartesian(spec)
    n = pts.shape[0]

    eps_off = None
    if noise.sigma_delta > 0:
        eps_off = _detuning_offsets(n, spec.seed, noise.sigma_delta)

    lam_factor = None
    loss_rate = 0.0
    if noise.loss_tau_ms is not None:
        # convert the physical loss time to dimensionless tau
        loss_tau = params.tau_from_ms(noise.loss_tau_ms)
        loss_rate = 1.0 / loss_tau
        if noise.lambda_decay:
            lam_factor = lambda tau: math.exp(-tau * loss_rate)

    snaps = integrate.rk4_batch(params, pts, times, steps_per_period,
                                eps_offsets=eps_off, lam_factor=lam_factor)

    alive = np.ones(n, dtype=bool)
    mean_z = np.empty(len(times))
    var_z = np.empty(len(times))
    mean_y = np.empty(len(times))
    var_y = np.empty(len(times))
    survivors = np.empty(len(times), dtype=int)
    z_keep = np.empty((len(times), n)) if keep_samples else None
    y_keep = np.empty((len(times), n)) if keep_samples else None

    for k in range(len(times)):
        S = snaps[k]
        alive &= np.isfinite(S).all(axis=1)
        if alive.mean() < 0.99:
            raise RuntimeError(
                f"more than 1% of samples failed by tau = {times[k]}")
        z = S[alive, 2]
        phi = np.arctan2(S[alive, 1], S[alive, 0])
        y = np.sin(phi)
        mean_z[k], var_z[k] = z.mean(), z.var()
        mean_y[k], var_y[k] = y.mean(), y.var()
        survivors[k] = int(alive.sum())
        if keep_samples:
            z_keep[k] = S[:, 2]
            y_keep[k] = np.sin(np.arctan2(S[:, 1], S[:, 0]))

    n_t = spec.n_atoms * np.exp(-times * loss_rate) if loss_rate else \
        np.full(len(times), float(spec.n_atoms))
    norm_var = var_z * n_t / (1.0 - mean_z**2)
    try:
        times_ms = np.array([params.ms_from_tau(t) for t in times])
    except ValueError:
        times_ms = None
    return EnsembleSeries(times=times, times_ms=times_ms, mean_z=mean_z,
                          var_z=var_z, normalized_var_z=norm_var,
                          mean_y=mean_y, var_y=var_y, n_atoms_t=n_t,
                          survivors=survivors, z_samples=z_keep, y_samples=y_keep)


def series_to_rows(series: EnsembleSeries, source: str = "classical"):
    """CSV rows matching the ensemble export schema."""
    header = ["t_dimensionless", "t_ms", "mean_z", "var_z", "normvar_z",
              "mean_y", "var_y", "n_atoms", "survivors", "source"]
    rows = []
    for k in range(len(series.times)):
        t_ms = series.times_ms[k] if series.times_ms is not None else float("nan")
        rows.append((series.times[k], t_ms, series.mean_z[k], series.var_z[k],
                     series.normalized_var_z[k], series.mean_y[k],
                     series.var_y[k], series.n_atoms_t[k],
                     series.survivors[k], source))
    return header, rows
