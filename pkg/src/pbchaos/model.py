"""Driven two-mode condensate model.

The internal (Josephson) degree of freedom of a linearly coupled two-mode
condensate is described by the population imbalance z and the relative
phase phi.  In dimensionless form (energies in units of the bare coupling
Omega0, times tau = Omega0 * t) the Hamiltonian reads

    H(z, phi, tau) = (Lambda/2) z^2 - w(tau) sqrt(1 - z^2) cos(phi) + eps z

with the nonlinearity Lambda, the detuning eps and the modulated coupling
w(tau) = 1 + A sin(omega (tau + tau0)).  The canonical pair is (phi, z),
so Hamilton's equations are  dz/dtau = -dH/dphi,  dphi/dtau = +dH/dz.

The same flow expressed on the Bloch sphere, s = (x, y, z) with
x = sqrt(1-z^2) cos(phi), y = sqrt(1-z^2) sin(phi), is free of the
coordinate singularity at the poles and conserves |s| exactly; it is the
default integration chart used throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import PoleSingularity

TWO_PI = 2.0 * math.pi

#: default guard band for canonical-chart evaluations near the poles
POLE_GUARD = 1e-9

#: default physical nonlinearity N*chi as an angular frequency (rad/s),
#: used only to convert dimensionless times to milliseconds
DEFAULT_N_CHI = TWO_PI * 32.0


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless model parameters plus optional physical-unit anchor.

    Parameters
    ----------
    lam : float
        Nonlinearity Lambda = N*chi / Omega0.
    epsilon : float
        Detuning eps = delta / Omega0.
    drive_amp : float
        Relative modulation amplitude A >= 0 of the coupling.
    drive_freq : float
        Driving frequency omega in units of Omega0 (> 0).
    t0_frac : float
        Driving time offset t0 as a fraction of the period T = 2 pi / omega,
        in [0, 1).
    n_atoms : int
        Total atom number N (>= 2); sets hbar_eff = 2 / N.
    n_chi : float
        Physical nonlinearity N*chi as an angular frequency in rad/s.
        Only used to convert dimensionless times to physical ones via
        Omega0 = N*chi / Lambda.
    """

    lam: float
    epsilon: float = 0.0
    drive_amp: float = 0.0
    drive_freq: float = 1.0
    t0_frac: float = 0.0
    n_atoms: int = 700
    n_chi: float = DEFAULT_N_CHI

    def __post_init__(self):
        if not self.drive_freq > 0:
            raise ValueError("drive_freq must be positive")
        if self.drive_amp < 0:
            raise ValueError("drive_amp must be >= 0")
        if not 0.0 <= self.t0_frac < 1.0:
            raise ValueError("t0_frac must lie in [0, 1)")
        if self.n_atoms < 2:
            raise ValueError("n_atoms must be >= 2")

    @property
    def period(self) -> float:
        """Driving period T = 2 pi / omega in dimensionless time."""
        return TWO_PI / self.drive_freq

    @property
    def t0(self) -> float:
        """Driving time offset t0 in dimensionless time."""
        return self.t0_frac * self.period

    @property
    def hbar_eff(self) -> float:
        """Effective Planck constant 2 / N of the rescaled phase space."""
        return 2.0 / self.n_atoms

    @property
    def omega0(self) -> float:
        """Bare coupling Omega0 = N*chi / Lambda in rad/s (requires lam != 0)."""
        if self.lam == 0:
            raise ValueError("omega0 undefined for lam = 0 (no physical anchor)")
        return self.n_chi / self.lam

    def tau_from_ms(self, t_ms: float) -> float:
        """Convert a physical time in milliseconds to dimensionless tau."""
        return self.omega0 * t_ms * 1e-3

    def ms_from_tau(self, tau: float) -> float:
        """Convert dimensionless tau to a physical time in milliseconds."""
        return tau / self.omega0 * 1e3

    def with_(self, **kw) -> "SystemParams":
        """Copy with selected fields replaced."""
        return replace(self, **kw)


def wrap_phase(phi):
    """Reduce an angle (or array of angles) into [0, 2 pi)."""
    return np.mod(phi, TWO_PI)


def wrap_delta(dphi):
    """Reduce an angle difference into (-pi, pi]."""
    return -((-dphi + math.pi) % TWO_PI - math.pi)


@dataclass(frozen=True)
class PhaseState:
    """A classical phase-space point (z, phi).

    z is the population imbalance in [-1, 1]; phi is stored reduced
    modulo 2 pi.  The equivalent Bloch-sphere point is available through
    :meth:`cartesian`.
    """

    z: float
    phi: float

    def __post_init__(self):
        if abs(self.z) > 1.0 + 1e-12:
            raise ValueError(f"|z| must be <= 1, got {self.z}")
        object.__setattr__(self, "z", float(min(1.0, max(-1.0, self.z))))
        object.__setattr__(self, "phi", float(wrap_phase(self.phi)))

    def cartesian(self) -> np.ndarray:
        """Unit Bloch vector (x, y, z) of this point."""
        r = math.sqrt(max(0.0, 1.0 - self.z * self.z))
        return np.array([r * math.cos(self.phi), r * math.sin(self.phi), self.z])

    @classmethod
    def from_cartesian(cls, s) -> "PhaseState":
        """Project a Bloch vector back to (z, phi); phi = 0 at the poles."""
        x, y, z = float(s[0]), float(s[1]), float(s[2])
        return cls(z=min(1.0, max(-1.0, z)), phi=math.atan2(y, x))

    def distance(self, other: "PhaseState") -> float:
        """Chart distance sqrt(dz^2 + dphi^2) with phase wrapping."""
        return math.hypot(self.z - other.z, wrap_delta(self.phi - other.phi))


@dataclass
class TangentFrame:
    """Accumulated derivative of the flow in (z, phi) coordinates.

    For a Hamiltonian flow the frame matrix is area preserving,
    det(m) = 1 up to integration error.
    """

    m: np.ndarray

    @classmethod
    def identity(cls) -> "TangentFrame":
        return cls(np.eye(2))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.m))

    @property
    def trace(self) -> float:
        return float(np.trace(self.m))


# ---------------------------------------------------------------------------
# drive and Hamiltonian

def drive_value(params: SystemParams, tau) -> float:
    """Modulated coupling w(tau) = Omega(tau)/Omega0 = 1 + A sin(omega (tau + t0))."""
    return 1.0 + params.drive_amp * np.sin(params.drive_freq * (tau + params.t0))


def hamiltonian(params: SystemParams, state: PhaseState, tau: float = 0.0) -> float:
    """Energy of a phase-space point in units of Omega0."""
    z, phi = state.z, state.phi
    w = drive_value(params, tau)
    return (
        0.5 * params.lam * z * z
        - w * math.sqrt(max(0.0, 1.0 - z * z)) * math.cos(phi)
        + params.epsilon * z
    )


def hamiltonian_cartesian(params: SystemParams, s, tau: float = 0.0):
    """Energy from a Bloch vector; H = (Lambda/2) z^2 - w(tau) x + eps z."""
    w = drive_value(params, tau)
    return 0.5 * params.lam * s[..., 2] ** 2 - w * s[..., 0] + params.epsilon * s[..., 2]


# ---------------------------------------------------------------------------
# equations of motion

def eom_canonical(params: SystemParams, state: PhaseState, tau: float = 0.0,
                  pole_guard: float = POLE_GUARD):
    """Right-hand side (dz/dtau, dphi/dtau) in the canonical chart.

    Raises
    ------
    PoleSingularity
        If |z| >= 1 - pole_guard; switch to :func:`eom_cartesian` there.
    """
    z, phi = state.z, state.phi
    if abs(z) >= 1.0 - pole_guard:
        raise PoleSingularity(f"|z| = {abs(z)} too close to a pole")
    w = drive_value(params, tau)
    r = math.sqrt(1.0 - z * z)
    dz = -w * r * math.sin(phi)
    dphi = params.lam * z + w * z * math.cos(phi) / r + params.epsilon
    return dz, dphi


def eom_cartesian(params: SystemParams, s, tau: float = 0.0) -> np.ndarray:
    """Pole-free right-hand side for the Bloch vector s = (x, y, z).

    ds/dtau = (-(Lambda z + eps) y,  (Lambda z + eps) x + w z,  -w y);
    this is a rotation field, so |s| is conserved exactly.
    """
    x, y, z = s[0], s[1], s[2]
    b = params.lam * z + params.epsilon
    w = drive_value(params, tau)
    return np.array([-b * y, b * x + w * z, -w * y])


def jacobian_canonical(params: SystemParams, state: PhaseState, tau: float = 0.0,
                       pole_guard: float = POLE_GUARD) -> np.ndarray:
    """Linearization d(dz,dphi)/d(z,phi) of the canonical flow.

    The trace vanishes identically (divergence-free Hamiltonian flow).
    """
    z, phi = state.z, state.phi
    if abs(z) >= 1.0 - pole_guard:
        raise PoleSingularity(f"|z| = {abs(z)} too close to a pole")
    w = drive_value(params, tau)
    r = math.sqrt(1.0 - z * z)
    s_phi, c_phi = math.sin(phi), math.cos(phi)
    dzdz = w * z * s_phi / r
    dzdphi = -w * r * c_phi
    dphidz = params.lam + w * c_phi / r**3
    dphidphi = -w * z * s_phi / r
    return np.array([[dzdz, dzdphi], [dphidz, dphidphi]])


def jacobian_cartesian(params: SystemParams, s, tau: float = 0.0) -> np.ndarray:
    """Linearization of the Bloch-vector flow, used for tangent propagation."""
    x, y, z = s[0], s[1], s[2]
    b = params.lam * z + params.epsilon
    w = drive_value(params, tau)
    return np.array([
        [0.0, -b, -params.lam * y],
        [b, 0.0, params.lam * x + w],
        [0.0, -w, 0.0],
    ])


# ---------------------------------------------------------------------------
# chart Jacobians between (z, phi) and the Bloch sphere

def chart_jacobian(state: PhaseState) -> np.ndarray:
    """3x2 matrix d(x,y,z)/d(z,phi) at a non-pole point."""
    s = state.cartesian()
    x, y, z = s
    r2 = x * x + y * y
    if r2 <= 0.0:
        raise PoleSingularity("chart Jacobian undefined at a pole")
    return np.array([[-z * x / r2, -y], [-z * y / r2, x], [1.0, 0.0]])


def chart_jacobian_inverse(s) -> np.ndarray:
    """2x3 matrix d(z,phi)/d(x,y,z); left inverse of :func:`chart_jacobian`."""
    x, y = float(s[0]), float(s[1])
    r2 = x * x + y * y
    if r2 <= 0.0:
        raise PoleSingularity("chart Jacobian undefined at a pole")
    return np.array([[0.0, 0.0, 1.0], [-y / r2, x / r2, 0.0]])


# ---------------------------------------------------------------------------
# bifurcation threshold

def critical_lambda(epsilon: float) -> float:
    """Self-trapping bifurcation threshold (1 + |eps|^(2/3))^(3/2).

    Above this value the undriven system has one hyperbolic and two
    elliptic fixed points on the phi = pi line instead of a single
    elliptic one.
    """
    return (1.0 + abs(epsilon) ** (2.0 / 3.0)) ** 1.5
