"""Stroboscopic map and Poincare sections of the driven flow.

The section samples every trajectory at tau = tau_offset + k T,
k = 0 .. n_periods, with T the driving period.  Seeds are propagated
independently; the section builder uses the vectorized fixed-step engine
by default ("fixed") or the adaptive scalar integrator per seed
("adaptive") when high pointwise accuracy matters more than throughput.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import integrate, model
from .integrate import DEFAULT_CONFIG, IntegratorConfig
from .model import PhaseState, SystemParams


@dataclass
class PoincareSection:
    """Stroboscopic samples per seed.

    points[i] is an array of shape (n_periods + 1, 2) holding the (z, phi)
    samples of seed i at consecutive section times; failed seeds are
    listed in failures as (seed_index, message) and get no points entry
    beyond the last good sample.
    """

    seeds: list
    tau_offset: float
    n_periods: int
    points: list
    failures: list = field(default_factory=list)

    def all_points(self) -> np.ndarray:
        """Stacked (n_total, 3) array of (seed_index, z, phi) rows."""
        rows = []
        for i, pts in enumerate(self.points):
            for k in range(pts.shape[0]):
                rows.append((i, pts[k, 0], pts[k, 1]))
        return np.array(rows) if rows else np.empty((0, 3))


def stroboscopic_map(params: SystemParams, state: PhaseState, n: int = 1,
                     tau_offset: float = 0.0,
                     config: IntegratorConfig = DEFAULT_CONFIG) -> PhaseState:
    """Apply the period-T stroboscopic map n times to a phase-space point."""
    if n < 1:
        raise ValueError("iterate count n must be >= 1")
    T = params.period
    traj = integrate.propagate(params, state, (tau_offset, tau_offset + n * T), config)
    return traj.final


def build_section(params: SystemParams, seeds, n_periods: int,
                  tau_offset: float = 0.0, engine: str = "fixed",
                  steps_per_period: int = 512,
                  config: IntegratorConfig = DEFAULT_CONFIG) -> PoincareSection:
    """Iterate the stroboscopic map for every seed, keeping all samples.

    Per-seed failures are recorded and never abort the batch.
    """
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    T = params.period
    times = tau_offset + T * np.arange(n_periods + 1)
    failures = []
    if engine == "fixed":
        s0 = np.array([s.cartesian() for s in seeds])
        snaps = integrate.rk4_batch(params, s0, times,
                                    steps_per_period=steps_per_period,
                                    tau_start=tau_offset)
        points = []
        for i in range(len(seeds)):
            zs = snaps[:, i, 2]
            phis = model.wrap_phase(np.arctan2(snaps[:, i, 1], snaps[:, i, 0]))
            bad = ~np.isfinite(zs) | ~np.isfinite(phis)
            if bad.any():
                k = int(np.argmax(bad))
                failures.append((i, f"non-finite state at section index {k}"))
                zs, phis = zs[:k], phis[:k]
            points.append(np.column_stack([zs, phis]))
    elif engine == "adaptive":
        cfg = config.with_(dense_times=tuple(times))
        points = []
        for i, seed in enumerate(seeds):
            try:
                traj = integrate.propagate(params, seed,
                                           (tau_offset, tau_offset + n_periods * T), cfg)
                points.append(np.column_stack([traj.z, traj.phi]))
            except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                failures.append((i, str(exc)))
                points.append(np.empty((0, 2)))
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return PoincareSection(seeds=seeds, tau_offset=tau_offset,
                           n_periods=n_periods, points=points, failures=failures)


# ---------------------------------------------------------------------------
# seed generators

def grid_seeds(nz: int = 40, nphi: int = 40, z_lim=(-0.95, 0.95),
               phi_lim=(0.0, model.TWO_PI)) -> list:
    """Uniform rectangular grid of seeds in the (z, phi) chart."""
    zs = np.linspace(z_lim[0], z_lim[1], nz)
    dphi = (phi_lim[1] - phi_lim[0]) / nphi
    phis = phi_lim[0] + dphi * (np.arange(nphi) + 0.5)
    return [PhaseState(z, phi) for z in zs for phi in phis]


def sphere_seeds(n: int, seed: int = 0) -> list:
    """Seeds drawn uniformly on the Bloch sphere (area-uniform in (z, phi))."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    zs = rng.uniform(-1.0, 1.0, n)
    phis = rng.uniform(0.0, model.TWO_PI, n)
    return [PhaseState(z, phi) for z, phi in zip(zs, phis)]


def contour_seeds(params: SystemParams, through: PhaseState, n: int,
                  span: float | None = None) -> list:
    """Seeds spread along the undriven energy contour through a point.

    The undriven flow is integrated for `span` time units (default: four
    driving periods) and sampled at n equally spaced times; every sample
    lies on the same level set of the undriven Hamiltonian.
    """
    p0 = params.with_(drive_amp=0.0)
    span = span if span is not None else 4.0 * params.period
    times = np.linspace(0.0, span, n, endpoint=False)
    cfg = DEFAULT_CONFIG.with_(dense_times=tuple(times))
    traj = integrate.propagate(p0, through, (0.0, span), cfg)
    return list(traj.states)


def section_to_rows(section: PoincareSection):
    """CSV rows (seed_index, k, z, phi) for :func:`pbchaos.output.write_csv`."""
    rows = []
    for i, pts in enumerate(section.points):
        for k in range(pts.shape[0]):
            rows.append((i, k, pts[k, 0], pts[k, 1]))
    return ["seed_index", "k", "z", "phi"], rows
