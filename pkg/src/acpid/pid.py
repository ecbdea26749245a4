"""Incremental PID channel: frozen static gains plus tuner-written dynamic gains."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StaticGains:
    kp: float
    ki: float
    kd: float

    def as_array(self) -> np.ndarray:
        return np.array([self.kp, self.ki, self.kd])


@dataclass
class PidErrors:
    e_p: float = 0.0
    e_i: float = 0.0
    e_d: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.e_p, self.e_i, self.e_d])


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


class PidChannel:
    """One SISO axis.

    ``u = (K_static + K_dynamic) . (e_p, e_i, e_d)`` saturated to
    ``[u_min, u_max]``. The integral is a rectangle sum clamped to
    ``+-i_limit``; the derivative is a backward difference of the error,
    zero on the first update.
    """

    def __init__(self, static: StaticGains, u_min: float = -math.inf, u_max: float = math.inf,
                 i_limit: float = 10.0, wrap: bool = False):
        if u_min > u_max:
            raise ValueError("u_min must not exceed u_max")
        self._static = static
        self.u_min = u_min
        self.u_max = u_max
        self.i_limit = i_limit
        self.wrap = wrap
        self.dynamic = np.zeros(3)
        self.errors = PidErrors()
        self._prev_ep: float | None = None

    @property
    def static(self) -> StaticGains:
        return self._static

    def reset(self) -> None:
        self.dynamic = np.zeros(3)
        self.errors = PidErrors()
        self._prev_ep = None

    def update_errors(self, setpoint: float, measurement: float, dt: float) -> PidErrors:
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        e_p = setpoint - measurement
        if self.wrap:
            e_p = wrap_angle(e_p)
        e_i = self.errors.e_i + e_p * dt
        e_i = min(max(e_i, -self.i_limit), self.i_limit)
        e_d = 0.0 if self._prev_ep is None else (e_p - self._prev_ep) / dt
        self._prev_ep = e_p
        self.errors = PidErrors(e_p, e_i, e_d)
        return self.errors

    def set_dynamic(self, gains) -> None:
        self.dynamic = np.asarray(gains, dtype=np.float64).copy()

    def control(self) -> tuple[float, float]:
        """Return (raw, saturated) control."""
        s, k, e = self._static, self.dynamic, self.errors
        raw = ((s.kp + k[0]) * e.e_p + (s.ki + k[1]) * e.e_i) + (s.kd + k[2]) * e.e_d
        return raw, min(max(raw, self.u_min), self.u_max)
