"""Periodic orbits, stability classification and chaos indicators.

Fixed points of the n-th iterate of the stroboscopic map are located with
a Newton shooting method whose Jacobian comes from the co-propagated
tangent frame.  The trace of the monodromy matrix over n periods
classifies stability: elliptic for |tr| < 2, hyperbolic for tr > 2,
inverse hyperbolic for tr < -2, parabolic in a small band around |tr| = 2.

The 2:1 resonance chain of the weakly driven system is seeded with
guesses spread along the undriven orbit whose frequency equals half the
driving frequency; that orbit is located by bisection on the measured
orbit period along a one-parameter family of starting points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import integrate, model
from .errors import NoConvergence, SingularJacobian
from .integrate import DEFAULT_CONFIG, IntegratorConfig
from .model import PhaseState, SystemParams, TangentFrame, wrap_delta

#: two located anchors closer than this (chart distance) are the same orbit
DEDUP_RADIUS = 1e-4

#: half-width of the |trace| - 2 band classified as parabolic
PARABOLIC_BAND = 1e-3


class Stability(str, enum.Enum):
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    INVERSE_HYPERBOLIC = "inverse_hyperbolic"
    PARABOLIC = "parabolic"


def classify_trace(trace: float, parabolic_band: float = PARABOLIC_BAND) -> Stability:
    if abs(abs(trace) - 2.0) < parabolic_band:
        return Stability.PARABOLIC
    if abs(trace) < 2.0:
        return Stability.ELLIPTIC
    return Stability.HYPERBOLIC if trace > 2.0 else Stability.INVERSE_HYPERBOLIC


@dataclass
class PeriodicOrbit:
    """A fixed point of the n-th iterate of the stroboscopic map."""

    anchor: PhaseState
    n: int
    tau_offset: float
    monodromy: np.ndarray
    newton_tol: float
    iterations: int
    minimal_period: int

    @property
    def trace(self) -> float:
        return float(np.trace(self.monodromy))

    @property
    def residue(self) -> float:
        """Greene residue (2 - tr) / 4; in (0, 1) for elliptic orbits."""
        return (2.0 - self.trace) / 4.0

    @property
    def stability(self) -> Stability:
        return classify_trace(self.trace)


# ---------------------------------------------------------------------------
# undriven fixed points

def _phi_pi_balance(params, z):
    return params.lam * z + params.epsilon - z / math.sqrt(1.0 - z * z)


def _phi_zero_balance(params, z):
    return params.lam * z + params.epsilon + z / math.sqrt(1.0 - z * z)


def _classify_flow_fixed_point(params, state):
    J = model.jacobian_canonical(params, state, 0.0)
    det = float(np.linalg.det(J))
    if abs(det) < 1e-12:
        return Stability.PARABOLIC
    return Stability.ELLIPTIC if det > 0 else Stability.HYPERBOLIC


def find_fixed_points_undriven(params: SystemParams, branch: str = "pi",
                               n_grid: int = 4001):
    """Fixed points of the undriven flow on the phi = pi (and/or 0) line.

    The drive amplitude is ignored.  Roots of dphi/dtau = 0 are bracketed
    on a fine z grid and refined with Brent's method; each root is
    classified from the eigenstructure of the linearized flow.

    Parameters
    ----------
    branch : "pi", "zero" or "both"
        Which phase line(s) to search.  The bifurcation structure lives
        on the pi branch (1 or 3 roots); the zero branch holds one more.

    Returns
    -------
    list of (PhaseState, Stability), sorted by z within each branch.
    """
    p0 = params.with_(drive_amp=0.0)
    branches = {"pi": [math.pi], "zero": [0.0], "both": [math.pi, 0.0]}[branch]
    out = []
    zs = np.linspace(-1.0 + 1e-9, 1.0 - 1e-9, n_grid)
    for phi in branches:
        bal = _phi_pi_balance if phi == math.pi else _phi_zero_balance
        vals = np.array([bal(p0, z) for z in zs])
        roots = []
        for i in range(len(zs) - 1):
            if vals[i] == 0.0:
                roots.append(zs[i])
            elif vals[i] * vals[i + 1] < 0:
                roots.append(brentq(lambda z: bal(p0, z), zs[i], zs[i + 1], xtol=1e-14))
        for z in sorted(roots):
            st = PhaseState(z, phi)
            out.append((st, _classify_flow_fixed_point(p0, st)))
    return out


# ---------------------------------------------------------------------------
# Newton shooting for periodic orbits

def _map_with_monodromy(params, state, n, tau_offset, config):
    final, frame = integrate.propagate_with_tangent(
        params, state, TangentFrame.identity(),
        (tau_offset, tau_offset + n * params.period), config)
    return final, frame.m


def find_periodic_orbit(params: SystemParams, guess: PhaseState, n: int,
                        tau_offset: float = 0.0, newton_tol: float = 1e-10,
                        max_iter: int = 50,
                        config: IntegratorConfig = DEFAULT_CONFIG) -> PeriodicOrbit:
    """Newton iteration on P^n(x) - x from a starting guess.

    Steps solve (M - I) dx = -(P^n(x) - x) with the monodromy M from
    tangent propagation; step length is capped to keep the iteration in
    the chart.  Convergence is quadratic near a nondegenerate orbit.

    Raises
    ------
    SingularJacobian
        If |det(M - I)| < 1e-12 (degenerate orbit family, e.g. an
        unperturbed resonant torus).
    NoConvergence
        After max_iter iterations without meeting newton_tol.
    """
    if n < 1:
        raise ValueError("orbit period n must be >= 1")
    x = np.array([guess.z, guess.phi], dtype=float)
    for it in range(max_iter):
        state = PhaseState(x[0], x[1])
        image, M = _map_with_monodromy(params, state, n, tau_offset, config)
        F = np.array([image.z - state.z, wrap_delta(image.phi - state.phi)])
        if math.hypot(F[0], F[1]) < newton_tol:
            return _finalize_orbit(params, state, n, tau_offset, M,
                                   newton_tol, it, config)
        J = M - np.eye(2)
        if abs(np.linalg.det(J)) < 1e-12:
            raise SingularJacobian(
                f"det(M - I) = {np.linalg.det(J):.3e} at {state}")
        dx = np.linalg.solve(J, -F)
        norm = math.hypot(dx[0], dx[1])
        if norm > 0.3:
            dx *= 0.3 / norm
        x = x + dx
        x[0] = min(0.999, max(-0.999, x[0]))
    raise NoConvergence(f"no periodic orbit within {max_iter} Newton steps from {guess}")


def _finalize_orbit(params, anchor, n, tau_offset, monodromy, newton_tol, it, config):
    minimal = n
    for d in range(1, n):
        if n % d:
            continue
        image = integrate.propagate(params, anchor,
                                    (tau_offset, tau_offset + d * params.period),
                                    config).final
        if anchor.distance(image) < 10.0 * max(newton_tol, 1e-12) + 1e-9:
            minimal = d
            break
    return PeriodicOrbit(anchor=anchor, n=n, tau_offset=tau_offset,
                         monodromy=monodromy, newton_tol=newton_tol,
                         iterations=it, minimal_period=minimal)


def orbit_rotation_check(params: SystemParams, orbit: PeriodicOrbit,
                         config: IntegratorConfig = DEFAULT_CONFIG) -> PhaseState:
    """Image of the anchor under a single period-T map.

    For a period-2 orbit this lands on the partner anchor of the same
    stability class (half a turn of the resonance chain per period);
    applying the map twice returns to the anchor.
    """
    return integrate.propagate(params, orbit.anchor,
                               (orbit.tau_offset, orbit.tau_offset + params.period),
                               config).final


# ---------------------------------------------------------------------------
# undriven orbit period and resonance-ring seeding

def undriven_orbit_period(params: SystemParams, start: PhaseState,
                          t_max: float = 400.0, samples_per_unit: float = 40.0) -> float:
    """Period of the closed undriven orbit through a starting point.

    Works for any closed orbit (librating or phase-circulating): the
    trajectory is sampled densely, the first return to the neighbourhood
    of the start is bracketed and the return time refined by minimizing
    the distance to the start.
    """
    p0 = params.with_(drive_amp=0.0)
    s0 = start.cartesian()
    n_samp = int(t_max * samples_per_unit)
    ts = np.linspace(0.0, t_max, n_samp)
    cfg = DEFAULT_CONFIG.with_(dense_times=tuple(ts), rel_tol=1e-10, abs_tol=1e-10)
    traj = integrate.propagate(p0, start, (0.0, t_max), cfg)
    pts = np.array([st.cartesian() for st in traj.states])
    d = np.linalg.norm(pts - s0, axis=1)
    scale = float(np.max(d))
    if scale < 1e-12:
        raise NoConvergence("starting point is a fixed point; no orbit period")
    # first local minimum that comes genuinely close to the start
    for i in range(2, n_samp - 1):
        if d[i] < 0.1 * scale and d[i] <= d[i - 1] and d[i] <= d[i + 1]:
            lo, hi = ts[i - 1], ts[i + 1]
            dist = lambda t: float(np.linalg.norm(
                integrate.propagate(p0, start, (0.0, t),
                                    DEFAULT_CONFIG).final.cartesian() - s0))
            res = minimize_scalar(dist, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            return float(res.x)
    raise NoConvergence("no return to the starting point within t_max")


def resonant_start(params: SystemParams, family, target_period: float | None = None,
                   xtol: float = 1e-8) -> PhaseState:
    """Starting point of the undriven orbit resonant with half the drive.

    The 2:1 resonance condition is period = 2 T.  `family` parametrizes a
    line of candidate starting points, either ("z", phi0, z_lo, z_hi) for
    points (z, phi0) or ("phi", z0, phi_lo, phi_hi) for points (z0, phi);
    the resonant parameter is found by bisection on the measured period.
    """
    target = target_period if target_period is not None else 2.0 * params.period

    kind, fixed, lo, hi = family
    if kind == "z":
        make = lambda a: PhaseState(a, fixed)
    elif kind == "phi":
        make = lambda a: PhaseState(fixed, a)
    else:
        raise ValueError("family kind must be 'z' or 'phi'")

    def defect(a):
        return undriven_orbit_period(params, make(a)) - target

    a_star = brentq(defect, lo, hi, xtol=xtol)
    return make(a_star)


def resonance_ring(params: SystemParams, family, n_guesses: int = 16) -> list:
    """Newton guesses spread along the resonant undriven orbit."""
    start = resonant_start(params, family)
    period = undriven_orbit_period(params, start)
    times = np.linspace(0.0, period, n_guesses, endpoint=False)
    p0 = params.with_(drive_amp=0.0)
    cfg = DEFAULT_CONFIG.with_(dense_times=tuple(times))
    traj = integrate.propagate(p0, start, (0.0, period), cfg)
    return list(traj.states)


def find_resonance_orbits(params: SystemParams, family, tau_offset: float = 0.0,
                          n_guesses: int = 16, newton_tol: float = 1e-10,
                          config: IntegratorConfig = DEFAULT_CONFIG) -> list:
    """Locate the period-2 orbit chain born of the 2:1 resonance.

    Runs the Newton search from a ring of guesses on the resonant
    undriven orbit, keeps converged orbits of minimal period 2 and
    deduplicates anchors within DEDUP_RADIUS.  With the pairing of the
    resonance chain intact this returns four anchors: two elliptic and
    two hyperbolic, partners mapped onto each other by the period-T map.

    Returns orbits sorted by (stability, z, phi) for determinism.
    """
    guesses = resonance_ring(params, family, n_guesses)
    found = []
    for g in guesses:
        try:
            orb = find_periodic_orbit(params, g, 2, tau_offset,
                                      newton_tol=newton_tol, config=config)
        except (NoConvergence, SingularJacobian):
            continue
        if orb.minimal_period != 2:
            continue
        if any(orb.anchor.distance(o.anchor) < DEDUP_RADIUS for o in found):
            continue
        found.append(orb)
    return sorted(found, key=lambda o: (o.stability.value, o.anchor.z, o.anchor.phi))


# ---------------------------------------------------------------------------
# Lyapunov exponents and chaos maps

def _initial_tangent(state: PhaseState) -> np.ndarray:
    """Deterministic unit tangent to the sphere at a point (z direction of the chart)."""
    s = state.cartesian()
    v = np.array([0.0, 0.0, 1.0]) - s[2] * s
    n = np.linalg.norm(v)
    if n < 1e-12:
        v = np.array([1.0, 0.0, 0.0]) - s[0] * s
        n = np.linalg.norm(v)
    return v / n


def lyapunov_exponent(params: SystemParams, state: PhaseState, n_periods: int,
                      renorm_every: int = 1, tau_offset: float = 0.0,
                      config: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """Finite-time maximal Lyapunov exponent (units of 1/tau).

    A tangent vector is co-propagated on the Bloch sphere and
    renormalized every renorm_every driving periods; the exponent is the
    accumulated log growth divided by the total time n_periods * T.
    Growth is measured in the sphere-tangent norm, which is pole-free and
    asymptotically chart independent.
    """
    if n_periods < 10:
        raise ValueError("n_periods must be >= 10 for a meaningful exponent")
    T = params.period
    s = state.cartesian()
    v = _initial_tangent(state)
    logsum = 0.0
    t = tau_offset
    for k in range(n_periods):
        u0 = np.concatenate([s, v])
        rhs = _tangent6_rhs(params)
        sol = integrate._run_ivp(params, rhs, u0, (t, t + T), config, None)
        u = sol.y[:, -1]
        s, v = u[:3], u[3:]
        t += T
        if (k + 1) % renorm_every == 0:
            norm = float(np.linalg.norm(v))
            logsum += math.log(norm)
            v = v / norm
    return logsum / (n_periods * T)


def _tangent6_rhs(params):
    def rhs(t, u):
        s, v = u[:3], u[3:]
        A = model.jacobian_cartesian(params, s, t)
        return np.concatenate([model.eom_cartesian(params, s, t), A @ v])
    return rhs


@dataclass(frozen=True)
class GridSpec:
    """Cell-centred rectangular grid covering [-1, 1] x [0, 2 pi)."""

    nz: int
    nphi: int
    z_lim: tuple = (-1.0, 1.0)
    phi_lim: tuple = (0.0, model.TWO_PI)

    def centers(self):
        dz = (self.z_lim[1] - self.z_lim[0]) / self.nz
        dphi = (self.phi_lim[1] - self.phi_lim[0]) / self.nphi
        zs = self.z_lim[0] + dz * (np.arange(self.nz) + 0.5)
        phis = self.phi_lim[0] + dphi * (np.arange(self.nphi) + 0.5)
        return zs, phis


@dataclass
class ChaosMap:
    """Per-cell finite-time Lyapunov exponents with a chaotic flag."""

    grid: GridSpec
    n_periods: int
    lam_threshold: float
    lam: np.ndarray          # (nz, nphi)
    chaotic: np.ndarray      # (nz, nphi) bool
    failures: list = field(default_factory=list)

    @property
    def chaotic_fraction(self) -> float:
        return float(np.mean(self.chaotic))


def default_lambda_threshold(params: SystemParams, n_periods: int) -> float:
    """Three e-foldings over the run: separates 1/t decay from true growth."""
    return 3.0 / (n_periods * params.period)


def chaos_map(params: SystemParams, grid: GridSpec, n_periods: int,
              lam_threshold: float | None = None, tau_offset: float = 0.0,
              steps_per_period: int = 400, jobs: int = 1) -> ChaosMap:
    """Finite-time Lyapunov exponent from every cell center of a grid.

    Cell centers are propagated as one batch with the fixed-step tangent
    engine (each cell independent, so the result does not depend on how
    the batch is partitioned).  Cells that lose finiteness are flagged as
    failures and excluded from the chaotic count.
    """
    if grid.nz < 1 or grid.nphi < 1:
        raise ValueError("grid must be non-empty")
    thr = lam_threshold if lam_threshold is not None else default_lambda_threshold(params, n_periods)
    zs, phis = grid.centers()
    cells = [PhaseState(z, phi) for z in zs for phi in phis]
    states0 = np.array([c.cartesian() for c in cells])
    tangents0 = np.array([_initial_tangent(c) for c in cells])

    if jobs > 1:
        from .parallel import run_indexed
        chunks = np.array_split(np.arange(len(cells)), min(jobs * 4, len(cells)))
        args = [(params, states0[idx], tangents0[idx], tau_offset,
                 n_periods, steps_per_period) for idx in chunks if len(idx)]
        parts = run_indexed(_chaos_chunk, args, jobs)
        logsums = np.concatenate([p for p in parts])
    else:
        _, _, logsums = integrate.rk4_batch_tangent(params, states0, tangents0,
                                                 tau_offset, n_periods,
                                                 steps_per_period)
    lam = logsums / (n_periods * params.period)
    lam = lam.reshape(grid.nz, grid.nphi)
    failures = []
    bad = ~np.isfinite(lam)
    if bad.any():
        for i, j in zip(*np.nonzero(bad)):
            failures.append((int(i), int(j), "non-finite exponent"))
    chaotic = np.where(np.isfinite(lam), lam > thr, False)
    return ChaosMap(grid=grid, n_periods=n_periods, lam_threshold=thr,
                    lam=lam, chaotic=chaotic, failures=failures)


def _chaos_chunk(params, states0, tangents0, tau_offset, n_periods, steps_per_period):
    _, _, logsums = integrate.rk4_batch_tangent(params, states0, tangents0,
                                             tau_offset, n_periods, steps_per_period)
    return logsums


# ---------------------------------------------------------------------------
# CSV row helpers

def orbits_to_rows(orbits):
    header = ["n", "z", "phi", "trace", "class"]
    rows = [(o.n, o.anchor.z, o.anchor.phi, o.trace, o.stability.value)
            for o in orbits]
    return header, rows


def chaosmap_to_rows(cmap: ChaosMap):
    header = ["z", "phi", "lambda", "chaotic"]
    zs, phis = cmap.grid.centers()
    rows = []
    for i, z in enumerate(zs):
        for j, phi in enumerate(phis):
            rows.append((z, phi, cmap.lam[i, j], int(cmap.chaotic[i, j])))
    return header, rows
