"""Quadrotor rigid-body simulator, motor mixing, mass schedule and wind gusts.

State vector layout (12 entries):
``x, y, z, phi, theta, psi, vx, vy, vz, dphi, dtheta, dpsi``.

Gust disturbances are angular accelerations (rad/s^2) added to the roll,
pitch and yaw equations.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _backend
from .errors import ConfigurationError, DivergenceError, NumericalError, SaturationError

STATE_NAMES = ("x", "y", "z", "phi", "theta", "psi", "vx", "vy", "vz", "dphi", "dtheta", "dpsi")


@dataclass(frozen=True)
class QuadParams:
    m: float = 1.0
    g: float = 9.81
    l: float = 0.23
    Jx: float = 0.0075
    Jy: float = 0.0075
    Jz: float = 0.013
    b: float = 3.13e-5
    d: float = 7.5e-7

    def __post_init__(self):
        for name in ("m", "g", "l", "Jx", "Jy", "Jz", "b", "d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"QuadParams.{name} must be finite and > 0, got {value}")

    def phys(self) -> np.ndarray:
        """(m, g, l, Jx, Jy, Jz) as the kernels expect it."""
        return np.array([self.m, self.g, self.l, self.Jx, self.Jy, self.Jz])

    def with_mass(self, m: float) -> "QuadParams":
        return self if m == self.m else replace(self, m=m)


@dataclass(frozen=True, eq=False)
class QuadState:
    vec: np.ndarray = field(default_factory=lambda: np.zeros(12))
    t: float = 0.0

    def __post_init__(self):
        vec = np.array(self.vec, dtype=np.float64)
        if vec.shape != (12,):
            raise ConfigurationError(f"state vector must have 12 entries, got {vec.shape}")
        vec.flags.writeable = False
        object.__setattr__(self, "vec", vec)

    @classmethod
    def at(cls, x=0.0, y=0.0, z=0.0, phi=0.0, theta=0.0, psi=0.0, t=0.0) -> "QuadState":
        return cls(np.array([x, y, z, phi, theta, psi, 0, 0, 0, 0, 0, 0], dtype=float), t)

    def __getattr__(self, name):
        try:
            return float(self.vec[STATE_NAMES.index(name)])
        except ValueError:
            raise AttributeError(name) from None

    @property
    def position(self) -> np.ndarray:
        return self.vec[0:3]

    @property
    def attitude(self) -> np.ndarray:
        return self.vec[3:6]


@dataclass(frozen=True)
class ControlInputs:
    """u1 total thrust (N); u2, u3 roll/pitch differential thrust (N); u4 yaw torque (N m)."""

    u1: float
    u2: float = 0.0
    u3: float = 0.0
    u4: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3, self.u4])


@dataclass(frozen=True, eq=False)
class GustState:
    """First-order Gauss-Markov gust filter driven by per-step Gaussian noise."""

    d: np.ndarray
    tau_s: float = 0.3
    rho: float = 0.5
    q_std: float = 1.0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def __post_init__(self):
        if not self.tau_s > 0:
            raise ConfigurationError(f"gust correlation time must be > 0, got {self.tau_s}")
        d = np.array(self.d, dtype=np.float64)
        if d.shape != (3,) or not np.all(np.isfinite(d)):
            raise ConfigurationError("gust state must be 3 finite values")
        object.__setattr__(self, "d", d)

    @classmethod
    def create(cls, seed: int, tau_s: float = 0.3, rho: float = 0.5, q_std: float = 1.0,
               d0=(0.0, 0.0, 0.0)) -> "GustState":
        return cls(np.asarray(d0, dtype=float), tau_s, rho, q_std, np.random.default_rng(seed))


def dynamics_rhs(state: QuadState | np.ndarray, u: ControlInputs | np.ndarray, params: QuadParams,
                 gust=None) -> np.ndarray:
    """Time derivative of the 12-entry state."""
    s = state.vec if isinstance(state, QuadState) else np.ascontiguousarray(state, dtype=np.float64)
    uu = u.as_array() if isinstance(u, ControlInputs) else np.ascontiguousarray(u, dtype=np.float64)
    d = np.zeros(3) if gust is None else np.ascontiguousarray(gust, dtype=np.float64)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(uu)) and np.all(np.isfinite(d))):
        raise NumericalError("non-finite state, input or gust passed to dynamics_rhs")
    out = np.empty(12)
    _backend.kernels.quad_rhs(s, uu, params.phys(), d, out)
    return out


def mixing_matrix(params: QuadParams) -> np.ndarray:
    """Maps squared rotor speeds (Omega_1^2..Omega_4^2) to (u1, u2, u3, u4)."""
    b, d = params.b, params.d
    return np.array([
        [b, b, b, b],
        [0.0, -b, 0.0, b],
        [-b, 0.0, b, 0.0],
        [-d, d, -d, d],
    ])


def mix_motors(omegas_sq, params: QuadParams) -> ControlInputs:
    w = np.asarray(omegas_sq, dtype=np.float64)
    if w.shape != (4,):
        raise ConfigurationError("need four squared rotor speeds")
    if np.any(w < 0):
        raise ConfigurationError("squared rotor speeds must be >= 0")
    return ControlInputs(*(mixing_matrix(params) @ w))


def unmix(u: ControlInputs | np.ndarray, params: QuadParams, strict: bool = True) -> np.ndarray:
    """Squared rotor speeds realizing ``u``.

    With ``strict`` a negative entry raises :class:`SaturationError`;
    otherwise the raw (possibly negative) solution is returned.
    """
    uu = u.as_array() if isinstance(u, ControlInputs) else np.asarray(u, dtype=np.float64)
    b, d = params.b, params.d
    t, r, p, y = uu[0] / (4 * b), uu[1] / (2 * b), uu[2] / (2 * b), uu[3] / (4 * d)
    w = np.array([t - p - y, t - r + y, t + p - y, t + r + y])
    if strict and np.any(w < 0):
        raise SaturationError(f"inputs need negative squared rotor speed: {w}", omegas_sq=w)
    return w


def saturate_rotors(u: np.ndarray, params: QuadParams, omega_sq_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Clip the unmixed rotor commands into [0, omega_sq_max]; return (omegas_sq, realized u)."""
    w = np.clip(unmix(u, params, strict=False), 0.0, omega_sq_max)
    return w, mixing_matrix(params) @ w


def step(state: QuadState, u: ControlInputs | np.ndarray, params: QuadParams, gust=None,
         dt: float = 0.01, ceiling: float = 1e4) -> QuadState:
    """One RK4 step with input and gust held over the interval."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    uu = u.as_array() if isinstance(u, ControlInputs) else np.ascontiguousarray(u, dtype=np.float64)
    d = np.zeros(3) if gust is None else np.ascontiguousarray(gust, dtype=np.float64)
    out = np.empty(12)
    _backend.kernels.rk4_step(state.vec, uu, params.phys(), d, dt, out)
    t = state.t + dt
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > ceiling:
        raise DivergenceError(f"state left the ceiling {ceiling} at t={t:.3f}", t=t)
    if abs(out[3]) >= math.pi / 2 or abs(out[4]) >= math.pi / 2:
        raise DivergenceError(f"roll/pitch reached pi/2 at t={t:.3f}", t=t)
    return QuadState(out, t)


def gust_decay(tau_s: float, dt: float) -> float:
    return math.exp(-dt / tau_s)


def gust_step(gust: GustState, dt: float) -> GustState:
    """Advance the shaping filter one step.

    The noise sample is held over the step and the linear ODE is integrated
    exactly: ``d' = a d + tau (1 - a) rho q`` with ``a = exp(-dt / tau)``.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    a = gust_decay(gust.tau_s, dt)
    q = gust.rng.normal(0.0, gust.q_std, size=3) if gust.rho != 0 else np.zeros(3)
    d = a * gust.d + gust.tau_s * (1.0 - a) * gust.rho * q
    return GustState(d, gust.tau_s, gust.rho, gust.q_std, gust.rng)


def gust_stationary_variance(tau_s: float, rho: float, q_std: float, dt: float) -> float:
    """Per-component stationary variance of the discrete filter in :func:`gust_step`."""
    a = gust_decay(tau_s, dt)
    gain = tau_s * (1.0 - a) * rho
    return gain * gain * q_std * q_std / (1.0 - a * a)


def mass_schedule(t: float, schedule: Sequence[tuple[float, float]], base_mass: float = 1.0) -> float:
    """Piecewise-constant mass; each entry applies from its time onward (left-closed)."""
    if not schedule:
        return base_mass
    times = [float(s[0]) for s in schedule]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigurationError("mass schedule times must be strictly increasing")
    i = bisect.bisect_right(times, t) - 1
    return base_mass if i < 0 else float(schedule[i][1])


def hover_thrust(params: QuadParams, phi: float = 0.0, theta: float = 0.0) -> float:
    return params.m * params.g / (math.cos(phi) * math.cos(theta))
