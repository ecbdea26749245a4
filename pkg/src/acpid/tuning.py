"""Static-gain design for the SISO channels.

Near hover every channel is a double integrator ``s'' = k u`` with
``k = l/Jx, l/Jy, 1/Jz, 1/m`` for roll, pitch, yaw and altitude.

Two procedures are provided:

* :func:`pole_placement` matches the closed-loop characteristic polynomial
  to ``(s^2 + 2 zeta w s + w^2)(s + alpha w)``; the shipped defaults come
  from it.
* :func:`ziegler_nichols` runs the ultimate-cycle experiment on the sampled
  loop (proportional gain swept with a fixed probe derivative time, since a
  double integrator under P-only control has no finite ultimate gain) and
  applies a Ziegler-Nichols table. The result is checked on the same sampled
  loop; for these lag-free plants the ultimate cycle sits near the Nyquist
  rate and the table gains usually fail that check, which is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import QuadParams
from .pid import StaticGains

ZN_RULES = {
    # name: (Kp / Ku, Ti / Tu, Td / Tu)
    "classic": (0.6, 0.5, 0.125),
    "some-overshoot": (0.33, 0.5, 1.0 / 3.0),
    "no-overshoot": (0.2, 0.5, 1.0 / 3.0),
}

DESIGN = {
    # axis: (omega rad/s, zeta, alpha)
    "roll": (8.0, 0.8, 0.3),
    "pitch": (8.0, 0.8, 0.3),
    "yaw": (8.0, 0.8, 0.3),
    "alt": (3.0, 0.8, 0.3),
}


def plant_gain(axis: str, params: QuadParams) -> float:
    return {
        "roll": params.l / params.Jx,
        "pitch": params.l / params.Jy,
        "yaw": 1.0 / params.Jz,
        "alt": 1.0 / params.m,
    }[axis]


def pole_placement(k: float, omega: float, zeta: float = 0.8, alpha: float = 0.3) -> StaticGains:
    kd = (2.0 * zeta + alpha) * omega / k
    kp = (1.0 + 2.0 * zeta * alpha) * omega ** 2 / k
    ki = alpha * omega ** 3 / k
    return StaticGains(kp, ki, kd)


def default_gains(params: QuadParams | None = None) -> dict[str, StaticGains]:
    params = params or QuadParams()
    return {a: pole_placement(plant_gain(a, params), *DESIGN[a]) for a in DESIGN}


def simulate_siso(k: float, gains: StaticGains, dt: float = 0.01, n: int = 2000, setpoint: float = 1.0,
                  ceiling: float = 1e6) -> np.ndarray:
    """Unit-step response of the sampled double integrator under the PID law used by the loop."""
    y = v = ei = 0.0
    prev = None
    out = np.full(n, np.nan)
    h2 = 0.5 * dt * dt
    for i in range(n):
        e = setpoint - y
        ei += e * dt
        ed = 0.0 if prev is None else (e - prev) / dt
        prev = e
        a = k * (gains.kp * e + gains.ki * ei + gains.kd * ed)
        y += v * dt + h2 * a
        v += a * dt
        out[i] = y
        if abs(y) > ceiling:
            break
    return out


def is_stable(response: np.ndarray, setpoint: float = 1.0, tol: float = 0.02) -> bool:
    if np.any(np.isnan(response)):
        return False
    tail = response[-len(response) // 5:]
    return bool(np.max(np.abs(tail - setpoint)) < tol)


def settling_time(response: np.ndarray, dt: float, setpoint: float = 1.0, band: float = 0.05) -> float:
    outside = np.flatnonzero(np.abs(response - setpoint) > band * abs(setpoint))
    return 0.0 if outside.size == 0 else (outside[-1] + 1) * dt


@dataclass(frozen=True)
class ZieglerNicholsResult:
    k_ultimate: float
    t_ultimate: float
    rule: str
    gains: StaticGains
    stable: bool
    overshoot: float
    settling_time: float


def _grows(k: float, kp: float, kd: float, dt: float, n: int) -> bool:
    r = simulate_siso(k, StaticGains(kp, 0.0, kd), dt, n)
    if np.any(np.isnan(r)):
        return True
    e = np.abs(r - 1.0)
    q = n // 4
    return bool(e[-q:].max() > e[q:2 * q].max())


def ultimate_point(k: float, dt: float = 0.01, td_probe: float = 0.2, n: int = 4000) -> tuple[float, float]:
    """Gain and period of the sustained oscillation (bisection on growth vs decay)."""
    lo, hi = 1e-6, 1e6
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if _grows(k, mid, mid * td_probe, dt, n):
            hi = mid
        else:
            lo = mid
    ku = lo
    r = simulate_siso(k, StaticGains(ku, 0.0, ku * td_probe), dt, n)
    e = r[n // 2:] - 1.0
    crossings = np.flatnonzero(np.diff(np.signbit(e)))
    tu = 2.0 * float(np.mean(np.diff(crossings))) * dt if crossings.size > 2 else math.inf
    return ku, tu


def ziegler_nichols(k: float, dt: float = 0.01, td_probe: float = 0.2, rule: str = "classic",
                    n_check: int = 2000) -> ZieglerNicholsResult:
    if rule not in ZN_RULES:
        raise ValueError(f"unknown rule {rule!r}; choose from {sorted(ZN_RULES)}")
    ku, tu = ultimate_point(k, dt, td_probe)
    a, b, c = ZN_RULES[rule]
    kp = a * ku
    gains = StaticGains(kp, kp / (b * tu), kp * c * tu)
    r = simulate_siso(k, gains, dt, n_check)
    stable = is_stable(r)
    overshoot = float(np.nanmax(r) - 1.0) if stable else math.inf
    ts = settling_time(r, dt) if stable else math.inf
    return ZieglerNicholsResult(ku, tu, rule, gains, stable, overshoot, ts)
