"""Time stepping for the driven flow.

Two engines live here:

* an adaptive embedded Runge-Kutta integrator (DOP853 by default, RK45 as
  an alternative) for single trajectories and tangent frames, with dense
  output at requested sample times;
* a fixed-step, fully vectorized classical RK4 used for large batches
  (ensembles, section galleries, Lyapunov maps) and as an independent
  cross-check of the adaptive path.

All propagation is carried out on the Bloch sphere, where the flow is
pole-free and norm conserving; (z, phi) values are views of the result.
The fixed-step engine advances every batch member with the same step
sequence but each member's update depends only on its own state, so
results are independent of how a batch is split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from . import model
from .errors import StepUnderflow
from .model import PhaseState, SystemParams, TangentFrame

#: hard floor for the adaptive step size
MIN_STEP = 1e-14


@dataclass(frozen=True)
class IntegratorConfig:
    """Error control and output options for :func:`propagate`.

    rel_tol / abs_tol default to 1e-12: at 1e-10 the energy drift over
    tau = 1000 exceeds the 1e-9 budget and the Bloch-norm drift exceeds
    1e-10, so the looser setting fails the module's own conservation
    contracts.  max_step = None means one twentieth of the driving
    period.  method is one of "dop853", "rk45" or "rk4" (fixed step,
    width fixed_step, defaulting to T/1000).
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: float | None = None
    dense_times: tuple | None = None
    method: str = "dop853"
    fixed_step: float | None = None

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.method not in ("dop853", "rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dense_times is not None:
            t = np.asarray(self.dense_times, dtype=float)
            if t.ndim != 1 or (len(t) > 1 and not np.all(np.diff(t) > 0)):
                raise ValueError("dense_times must be strictly increasing")
            object.__setattr__(self, "dense_times", tuple(t))

    def with_(self, **kw) -> "IntegratorConfig":
        return replace(self, **kw)


DEFAULT_CONFIG = IntegratorConfig()

_SCIPY_METHOD = {"dop853": "DOP853", "rk45": "RK45"}


@dataclass
class Trajectory:
    """Sampled trajectory: strictly increasing times with aligned states."""

    times: np.ndarray
    states: list
    frames: list | None = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if self.frames is not None and len(self.frames) != len(self.states):
            raise ValueError("frames must align with states")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def z(self) -> np.ndarray:
        return np.array([s.z for s in self.states])

    @property
    def phi(self) -> np.ndarray:
        return np.array([s.phi for s in self.states])

    @property
    def final(self) -> PhaseState:
        return self.states[-1]


def _max_step(params: SystemParams, config: IntegratorConfig) -> float:
    return config.max_step if config.max_step is not None else params.period / 20.0


def _run_ivp(params, rhs, y0, tau_span, config, t_eval):
    sol = solve_ivp(
        rhs,
        tau_span,
        y0,
        method=_SCIPY_METHOD[config.method],
        t_eval=t_eval,
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=_max_step(params, config),
        dense_output=False,
    )
    if not sol.success:
        raise StepUnderflow(sol.t[-1] if sol.t.size else tau_span[0], sol.message)
    return sol


def _rk4_span(rhs, y0, tau_span, step, t_eval):
    """Fixed-step classical RK4 over a span, hitting every t_eval exactly."""
    ta, tb = tau_span
    targets = [tb] if t_eval is None else list(t_eval)
    y = np.array(y0, dtype=float)
    t = ta
    out_t, out_y = [], []
    for tt in targets:
        if tt < t - 1e-12:
            raise ValueError("t_eval must lie inside the span, ascending")
        n = max(1, int(np.ceil((tt - t) / step - 1e-12)))
        h = (tt - t) / n
        for i in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = tt
        out_t.append(t)
        out_y.append(y.copy())
    return np.array(out_t), np.array(out_y).T


def propagate(params: SystemParams, state: PhaseState, tau_span,
              config: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Propagate a phase-space point over tau_span = (tau_a, tau_b).

    States are emitted at config.dense_times if given (must lie inside the
    span), otherwise at the integrator's accepted steps.

    Raises
    ------
    StepUnderflow
        If the step size collapses below the representable floor.
    """
    ta, tb = float(tau_span[0]), float(tau_span[1])
    if not tb > ta:
        raise ValueError("tau_span must satisfy tau_b > tau_a")
    t_eval = None
    if config.dense_times is not None:
        t_eval = np.asarray(config.dense_times)
        if t_eval[0] < ta - 1e-12 or t_eval[-1] > tb + 1e-12:
            raise ValueError("dense_times must lie within tau_span")
    s0 = state.cartesian()
    rhs = lambda t, s: model.eom_cartesian(params, s, t)
    if config.method == "rk4":
        step = config.fixed_step if config.fixed_step is not None else params.period / 1000.0
        times, ys = _rk4_span(rhs, s0, (ta, tb), step, t_eval)
    else:
        sol = _run_ivp(params, rhs, s0, (ta, tb), config, t_eval)
        times, ys = sol.t, sol.y
    states = [PhaseState.from_cartesian(ys[:, i]) for i in range(ys.shape[1])]
    return Trajectory(times=times, states=states)


def _tangent_rhs(params):
    """RHS of the 12-dimensional (state + 3x3 tangent) Bloch system."""
    def rhs(t, u):
        s = u[:3]
        S = u[3:].reshape(3, 3)
        A = model.jacobian_cartesian(params, s, t)
        return np.concatenate([model.eom_cartesian(params, s, t), (A @ S).ravel()])
    return rhs


def propagate_cartesian_tangent(params: SystemParams, s0, tau_span,
                                config: IntegratorConfig = DEFAULT_CONFIG):
    """Propagate a Bloch vector together with its 3x3 tangent propagator.

    Returns (s_final, S_final) where S_final maps initial Bloch-tangent
    displacements to final ones.  Building block for monodromy matrices
    and Lyapunov growth rates.
    """
    ta, tb = float(tau_span[0]), float(tau_span[1])
    if tb == ta:
        return np.array(s0, dtype=float), np.eye(3)
    u0 = np.concatenate([np.asarray(s0, dtype=float), np.eye(3).ravel()])
    rhs = _tangent_rhs(params)
    if config.method == "rk4":
        step = config.fixed_step if config.fixed_step is not None else params.period / 1000.0
        _, ys = _rk4_span(rhs, u0, (ta, tb), step, None)
        u = ys[:, -1]
    else:
        sol = _run_ivp(params, rhs, u0, (ta, tb), config, None)
        u = sol.y[:, -1]
    return u[:3], u[3:].reshape(3, 3)


def propagate_with_tangent(params: SystemParams, state: PhaseState,
                           frame: TangentFrame, tau_span,
                           config: IntegratorConfig = DEFAULT_CONFIG):
    """Propagate a point and its accumulated (z, phi) tangent frame.

    The tangent flow is integrated on the Bloch sphere (pole-free) and
    converted back to chart coordinates at the endpoints, so no chart
    switching is ever needed mid-span.  Returns (final_state, final_frame)
    with final_frame.m = M(tau_span) @ frame.m and det M = 1 up to
    integration error.
    """
    ta, tb = float(tau_span[0]), float(tau_span[1])
    if tb == ta:
        return state, TangentFrame(frame.m.copy())
    s1, S = propagate_cartesian_tangent(params, state.cartesian(), tau_span, config)
    final = PhaseState.from_cartesian(s1)
    M = model.chart_jacobian_inverse(s1) @ S @ model.chart_jacobian(state)
    return final, TangentFrame(M @ frame.m)


# ---------------------------------------------------------------------------
# vectorized fixed-step batch engine

def _batch_rhs(params, tau, S, eps_offsets, lam_factor):
    x, y, z = S[:, 0], S[:, 1], S[:, 2]
    lam = params.lam if lam_factor is None else params.lam * lam_factor(tau)
    b = lam * z + params.epsilon
    if eps_offsets is not None:
        b = b + eps_offsets
    w = 1.0 + params.drive_amp * np.sin(params.drive_freq * (tau + params.t0))
    return np.stack([-b * y, b * x + w * z, -w * y], axis=1)


def rk4_batch(params: SystemParams, states0: np.ndarray, sample_times,
              steps_per_period: int = 1000, eps_offsets=None, lam_factor=None,
              tau_start: float = 0.0):
    """Fixed-step RK4 of a whole batch of Bloch vectors at once.

    Parameters
    ----------
    states0 : array (n, 3)
        Initial Bloch vectors, one row per batch member.
    sample_times : ascending sequence with sample_times[0] >= tau_start
        Times at which snapshots are recorded (hit exactly).
    steps_per_period : int
        Nominal number of RK4 steps per driving period.
    eps_offsets : array (n,), optional
        Per-member static detuning offsets added to eps.
    lam_factor : callable tau -> float, optional
        Time-dependent rescaling of the nonlinearity (atom-loss model).
    tau_start : float
        Time at which the batch starts.

    Returns
    -------
    array (len(sample_times), n, 3) of snapshots.
    """
    S = np.array(states0, dtype=float)
    if S.ndim != 2 or S.shape[1] != 3:
        raise ValueError("states0 must have shape (n, 3)")
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or (len(times) > 1 and not np.all(np.diff(times) > 0)):
        raise ValueError("sample_times must be strictly increasing")
    if len(times) and times[0] < tau_start - 1e-12:
        raise ValueError("sample_times must not precede tau_start")
    step = params.period / steps_per_period
    out = np.empty((len(times), S.shape[0], 3))
    t = float(tau_start)
    idx = 0
    if len(times) and abs(times[0] - tau_start) <= 1e-15:
        out[0] = S
        idx = 1
    for j in range(idx, len(times)):
        tt = times[j]
        n = max(1, int(np.ceil((tt - t) / step - 1e-12)))
        h = (tt - t) / n
        for i in range(n):
            k1 = _batch_rhs(params, t, S, eps_offsets, lam_factor)
            k2 = _batch_rhs(params, t + 0.5 * h, S + 0.5 * h * k1, eps_offsets, lam_factor)
            k3 = _batch_rhs(params, t + 0.5 * h, S + 0.5 * h * k2, eps_offsets, lam_factor)
            k4 = _batch_rhs(params, t + h, S + h * k3, eps_offsets, lam_factor)
            S = S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = float(tt)
        out[j] = S
    return out


def _batch_tangent_rhs(params, tau, U):
    """RHS for batch rows (x, y, z, vx, vy, vz): state plus one tangent vector."""
    x, y, z = U[:, 0], U[:, 1], U[:, 2]
    vx, vy, vz = U[:, 3], U[:, 4], U[:, 5]
    b = params.lam * z + params.epsilon
    w = 1.0 + params.drive_amp * np.sin(params.drive_freq * (tau + params.t0))
    return np.stack([
        -b * y,
        b * x + w * z,
        -w * y,
        -b * vy - params.lam * y * vz,
        b * vx + (params.lam * x + w) * vz,
        -w * vy,
    ], axis=1)


def rk4_batch_tangent(params: SystemParams, states0: np.ndarray, tangents0: np.ndarray,
                      tau0: float, n_periods: int, steps_per_period: int = 400,
                      renorm_every: int = 1):
    """Batch state + tangent-vector propagation with periodic renormalization.

    Advances each row for n_periods driving periods starting at tau0,
    renormalizing the tangent vector every renorm_every periods and
    accumulating the log of its growth.  Returns
    (final_states (n,3), final_tangents (n,3), log_growth_sums (n,));
    the final tangents carry any growth since the last renormalization.
    """
    U = np.concatenate([np.array(states0, dtype=float),
                        np.array(tangents0, dtype=float)], axis=1)
    T = params.period
    h = T / steps_per_period
    logsum = np.zeros(U.shape[0])
    t = float(tau0)
    for k in range(n_periods):
        for i in range(steps_per_period):
            k1 = _batch_tangent_rhs(params, t, U)
            k2 = _batch_tangent_rhs(params, t + 0.5 * h, U + 0.5 * h * k1)
            k3 = _batch_tangent_rhs(params, t + 0.5 * h, U + 0.5 * h * k2)
            k4 = _batch_tangent_rhs(params, t + h, U + h * k3)
            U = U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = tau0 + (k + 1) * T
        if (k + 1) % renorm_every == 0:
            norms = np.linalg.norm(U[:, 3:], axis=1)
            norms = np.where(norms > 0, norms, 1.0)
            logsum += np.log(norms)
            U[:, 3:] /= norms[:, None]
    return U[:, :3], U[:, 3:], logsum
