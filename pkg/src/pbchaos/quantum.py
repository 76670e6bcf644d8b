"""Exact propagation of the collective-spin (N+1 level) system.

The fully symmetric sector of N two-level atoms is spanned by the Dicke
basis |J = N/2, m>, m = -J .. J.  In this basis the Hamiltonian

    H(t) = chi Jz^2 - Omega(t) Jx + delta Jz

is tridiagonal: Jz and Jz^2 are diagonal and Jx couples neighbouring m.
Propagation uses a midpoint-frozen Hamiltonian per step whose exponential
action is evaluated in a Krylov (Lanczos) subspace, which preserves the
norm to machine precision; the step size is checked by halving.

All evolution runs in dimensionless time tau = Omega0 t with
H/Omega0 = (Lambda/N) Jz^2 - w(tau) Jx + eps Jz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import ConvergenceFailure
from .model import PhaseState, SystemParams

#: Krylov subspace dimension for the per-step exponential
KRYLOV_DIM = 30


@dataclass(frozen=True)
class PhysParams:
    """Physical-unit view of the model parameters (angular frequencies).

    Consistent with the dimensionless set via Lambda = N chi / Omega0 and
    eps = delta / Omega0.
    """

    chi: float
    omega0: float
    delta: float
    drive_amp: float
    drive_freq: float       # rad/s
    t0_frac: float
    n_atoms: int

    @classmethod
    def from_system(cls, p: SystemParams) -> "PhysParams":
        om0 = p.omega0
        return cls(chi=p.lam * om0 / p.n_atoms, omega0=om0,
                   delta=p.epsilon * om0, drive_amp=p.drive_amp,
                   drive_freq=p.drive_freq * om0, t0_frac=p.t0_frac,
                   n_atoms=p.n_atoms)

    def to_system(self, n_chi: float | None = None) -> SystemParams:
        lam = self.n_atoms * self.chi / self.omega0
        return SystemParams(lam=lam, epsilon=self.delta / self.omega0,
                            drive_amp=self.drive_amp,
                            drive_freq=self.drive_freq / self.omega0,
                            t0_frac=self.t0_frac, n_atoms=self.n_atoms,
                            n_chi=n_chi if n_chi is not None else self.n_atoms * self.chi)


@dataclass
class CollectiveOps:
    """Structure-exploiting collective spin operators for total spin J = N/2.

    m holds the Jz eigenvalues; jx_off the superdiagonal of Jx, i.e.
    <m+1| Jx |m> = sqrt(J (J+1) - m (m+1)) / 2.
    """

    n_atoms: int
    m: np.ndarray
    jx_off: np.ndarray

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    def jz_dense(self) -> np.ndarray:
        return np.diag(self.m)

    def jz2_dense(self) -> np.ndarray:
        return np.diag(self.m**2)

    def jx_dense(self) -> np.ndarray:
        return np.diag(self.jx_off, 1) + np.diag(self.jx_off, -1)

    def jy_dense(self) -> np.ndarray:
        return 1j * (np.diag(self.jx_off, 1) - np.diag(self.jx_off, -1))


def build_collective_operators(n_atoms: int) -> CollectiveOps:
    """Jz, Jz^2 (diagonal) and Jx (tridiagonal) in the Dicke basis."""
    if n_atoms < 2:
        raise ValueError("n_atoms must be >= 2")
    J = n_atoms / 2.0
    m = np.arange(n_atoms + 1) - J
    m_low = m[:-1]
    jx_off = 0.5 * np.sqrt(J * (J + 1) - m_low * (m_low + 1))
    return CollectiveOps(n_atoms=n_atoms, m=m, jx_off=jx_off)


@dataclass
class QuantumState:
    """Amplitude vector over the Dicke basis, m = -N/2 .. N/2."""

    amplitudes: np.ndarray
    n_atoms: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.n_atoms + 1,):
            raise ValueError("amplitude vector must have length N + 1")
        if abs(self.norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {self.norm} deviates from 1")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "QuantumState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def css_state(n_atoms: int, z0: float, phi0: float) -> QuantumState:
    """Coherent spin state at polar angle arccos(z0) and azimuth phi0.

    The phase convention is c_m proportional to exp(-i m phi0), which
    gives <x> = sqrt(1-z0^2) cos(phi0) and <y> = sqrt(1-z0^2) sin(phi0)
    for the rescaled components (x, y, z) = 2 (Jx, Jy, Jz) / N.
    """
    if abs(z0) > 1.0:
        raise ValueError("|z0| must be <= 1")
    N = n_atoms
    J = N / 2.0
    k = np.arange(N + 1)          # k = J + m
    m = k - J
    amps = np.zeros(N + 1, dtype=complex)
    if z0 >= 1.0:
        amps[-1] = 1.0
    elif z0 <= -1.0:
        amps[0] = 1.0
    else:
        theta = math.acos(z0)
        log_c = math.log(math.cos(theta / 2.0))
        log_s = math.log(math.sin(theta / 2.0))
        log_bin = gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
        log_mag = 0.5 * log_bin + k * log_c + (N - k) * log_s
        amps = np.exp(log_mag - log_mag.max()) * np.exp(-1j * m * phi0)
        amps /= np.linalg.norm(amps)
    return QuantumState(amplitudes=amps, n_atoms=N)


def dicke_state(n_atoms: int, m: float) -> QuantumState:
    """Basis state |J = N/2, m>."""
    ops = build_collective_operators(n_atoms)
    idx = int(round(m + n_atoms / 2.0))
    if not 0 <= idx <= n_atoms or abs(ops.m[idx] - m) > 1e-9:
        raise ValueError(f"m = {m} is not a valid Jz eigenvalue for N = {n_atoms}")
    amps = np.zeros(n_atoms + 1, dtype=complex)
    amps[idx] = 1.0
    return QuantumState(amplitudes=amps, n_atoms=n_atoms)


# ---------------------------------------------------------------------------
# observables

def expect_observables(state: QuantumState):
    """(mean_z, var_z) of the rescaled imbalance z = 2 Jz / N."""
    ops = build_collective_operators(state.n_atoms)
    pr = np.abs(state.amplitudes) ** 2
    jz = float(np.sum(pr * ops.m))
    jz2 = float(np.sum(pr * ops.m**2))
    N = state.n_atoms
    mean_z = 2.0 * jz / N
    var_z = 4.0 * (jz2 - jz * jz) / N**2
    return mean_z, var_z


def normalized_var_z(state: QuantumState) -> float:
    """Variance of z referenced to the coherent state at the same <z>."""
    mean_z, var_z = expect_observables(state)
    return var_z * state.n_atoms / (1.0 - mean_z**2)


def expect_y(state: QuantumState) -> float:
    """<y> = 2 <Jy> / N from the tridiagonal structure of Jy."""
    ops = build_collective_operators(state.n_atoms)
    a = state.amplitudes
    jy = 2.0 * float(np.sum(ops.jx_off * np.imag(np.conj(a[1:]) * a[:-1])))
    return 2.0 * jy / state.n_atoms


def expect_energy(state: QuantumState, params: SystemParams, tau: float = 0.0) -> float:
    """<H>/Omega0 with H/Omega0 = (Lambda/N) Jz^2 - w(tau) Jx + eps Jz."""
    ops = build_collective_operators(state.n_atoms)
    a = state.amplitudes
    pr = np.abs(a) ** 2
    w = 1.0 + params.drive_amp * math.sin(params.drive_freq * (tau + params.t0))
    jx = 2.0 * float(np.real(np.sum(np.conj(a[1:]) * ops.jx_off * a[:-1])))
    return (params.lam / state.n_atoms * float(np.sum(pr * ops.m**2))
            - w * jx + params.epsilon * float(np.sum(pr * ops.m)))


# ---------------------------------------------------------------------------
# propagation

def _tridiag_matvec(diag, off, v):
    w = diag * v
    w[:-1] += off * v[1:]
    w[1:] += off * v[:-1]
    return w


def _lanczos_expm(diag, off, dt, v, m_max=KRYLOV_DIM):
    """exp(-i dt H) v for real symmetric tridiagonal H = (diag, off)."""
    n = v.size
    m_max = min(m_max, n)
    V = np.empty((m_max, n), dtype=complex)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return v.copy()
    V[0] = v / nrm
    w = _tridiag_matvec(diag, off, V[0])
    alpha[0] = float(np.real(np.vdot(V[0], w)))
    w = w - alpha[0] * V[0]
    used = 1
    for j in range(1, m_max):
        b = float(np.linalg.norm(w))
        if b < 1e-13:
            break
        beta[j - 1] = b
        V[j] = w / b
        w = _tridiag_matvec(diag, off, V[j]) - b * V[j - 1]
        alpha[j] = float(np.real(np.vdot(V[j], w)))
        w = w - alpha[j] * V[j]
        # full reorthogonalization keeps the small basis clean
        w = w - V[:j + 1].T @ (V[:j + 1].conj() @ w)
        used = j + 1
    ew, ev = eigh_tridiagonal(alpha[:used], beta[:used - 1])
    coef = ev @ (np.exp(-1j * dt * ew) * ev[0, :].conj())
    return nrm * (V[:used].T @ coef)


def _propagate_times(params, ops, psi0, sample_times, dt_max):
    drive = lambda tau: 1.0 + params.drive_amp * np.sin(
        params.drive_freq * (tau + params.t0))
    diag = (params.lam / params.n_atoms) * ops.m**2 + params.epsilon * ops.m
    psi = psi0.astype(complex).copy()
    out = []
    t = 0.0
    for te in sample_times:
        if te < t - 1e-15:
            raise ValueError("sample_times must be ascending from 0")
        if te > t:
            n_steps = max(1, int(math.ceil((te - t) / dt_max - 1e-12)))
            h = (te - t) / n_steps
            for i in range(n_steps):
                tm = t + (i + 0.5) * h
                psi = _lanczos_expm(diag, -drive(tm) * ops.jx_off, h, psi)
            t = te
        out.append(psi.copy())
    return out


def evolve_quantum(state: QuantumState, params, sample_times,
                   dt_max: float | None = None, check_halving: bool = True,
                   halving_tol: float = 1e-6):
    """Propagate a Dicke-basis state through the driven Hamiltonian.

    Parameters
    ----------
    state : QuantumState
    params : SystemParams or PhysParams
        Model parameters; a PhysParams is converted to its dimensionless
        equivalent.
    sample_times : ascending dimensionless times (first may be 0)
    dt_max : float
        Maximum step; defaults to one two-thousandth of the driving
        period.  Each step freezes the Hamiltonian at its midpoint and
        applies the exponential through a Lanczos subspace.
    check_halving : bool
        Re-run at dt_max/2 and compare the final (mean_z, var_z);
        a deviation above halving_tol raises ConvergenceFailure.

    Returns
    -------
    list of QuantumState aligned with sample_times.
    """
    if isinstance(params, PhysParams):
        params = params.to_system()
    if params.n_atoms != state.n_atoms:
        params = params.with_(n_atoms=state.n_atoms)
    ops = build_collective_operators(state.n_atoms)
    times = [float(t) for t in sample_times]
    dt = dt_max if dt_max is not None else params.period / 2000.0

    raw = _propagate_times(params, ops, state.amplitudes, times, dt)
    if check_halving:
        fine = _propagate_times(params, ops, state.amplitudes, [times[-1]], dt / 2.0)
        a = QuantumState(raw[-1] / np.linalg.norm(raw[-1]), state.n_atoms)
        b = QuantumState(fine[-1] / np.linalg.norm(fine[-1]), state.n_atoms)
        za, va = expect_observables(a)
        zb, vb = expect_observables(b)
        dev = max(abs(za - zb), abs(va - vb))
        if dev > halving_tol:
            raise ConvergenceFailure(
                f"halving dt changed final observables by {dev:.2e} > {halving_tol}")
    out = []
    for psi in raw:
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-8 * max(1.0, times[-1]):
            raise ConvergenceFailure(f"norm drifted to {nrm}")
        out.append(QuantumState(psi / nrm, state.n_atoms))
    return out


@lru_cache(maxsize=8)
def _jx_eigensystem(n_atoms: int):
    ops = build_collective_operators(n_atoms)
    ew, ev = eigh_tridiagonal(np.zeros(n_atoms + 1), ops.jx_off)
    return ew, ev


def rotate_pi2_x(state: QuantumState) -> QuantumState:
    """Apply exp(-i (pi/2) Jx): maps <Jz> after to <Jy> before.

    Converts the phase quadrature into the measured imbalance; composed
    four times it is the identity up to a global phase.
    """
    ew, ev = _jx_eigensystem(state.n_atoms)
    phases = np.exp(-1j * (math.pi / 2.0) * ew)
    psi = ev @ (phases * (ev.T @ state.amplitudes))
    psi /= np.linalg.norm(psi)
    return QuantumState(amplitudes=psi, n_atoms=state.n_atoms)


def quantum_series_rows(times, times_ms, states, n_atoms):
    """CSV rows in the ensemble schema with the source column set to quantum."""
    header = ["t_dimensionless", "t_ms", "mean_z", "var_z", "normvar_z",
              "mean_y", "var_y", "n_atoms", "survivors", "source"]
    rows = []
    for k, st in enumerate(states):
        mz, vz = expect_observables(st)
        nv = vz * n_atoms / (1.0 - mz**2)
        my = expect_y(st)
        rot = rotate_pi2_x(st)
        _, vy_q = expect_observables(rot)
        t_ms = times_ms[k] if times_ms is not None else float("nan")
        rows.append((times[k], t_ms, mz, vz, nv, my, vy_q, n_atoms, n_atoms, "quantum"))
    return header, rows
