"""Independent reference computations shared by the unit and acceptance tests."""
from __future__ import annotations

import math

import numpy as np

from acpid import dynamics as dyn
from acpid.dynamics import QuadParams, QuadState

P = QuadParams()


def second_transcription(state, u, p, gust):
    """Rigid-body accelerations written out term by term, independently of the kernels."""
    x, y, z, phi, theta, psi, xd, yd, zd, p_rate, q_rate, r_rate = (float(v) for v in state)
    u1, u2, u3, u4 = (float(v) for v in u)
    d1, d2, d3 = (float(v) for v in gust)
    m, g, l, jx, jy, jz = p.m, p.g, p.l, p.Jx, p.Jy, p.Jz
    phi_dd = q_rate * r_rate * (jy - jz) / jx + (l / jx) * u2 + d1
    theta_dd = p_rate * r_rate * (jz - jx) / jy + (l / jy) * u3 + d2
    psi_dd = p_rate * q_rate * (jx - jy) / jz + (1.0 / jz) * u4 + d3
    z_dd = (u1 / m) * math.cos(phi) * math.cos(theta) - g
    x_dd = (u1 / m) * (math.cos(phi) * math.sin(theta) * math.cos(psi) + math.sin(phi) * math.sin(psi))
    y_dd = (u1 / m) * (math.cos(phi) * math.sin(theta) * math.sin(psi) - math.sin(phi) * math.cos(psi))
    return np.array([xd, yd, zd, p_rate, q_rate, r_rate, x_dd, y_dd, z_dd, phi_dd, theta_dd, psi_dd])


def random_case(rng):
    state = np.concatenate([rng.uniform(-10, 10, 3), rng.uniform(-1.5, 1.5, 2), rng.uniform(-math.pi, math.pi, 1),
                            rng.uniform(-5, 5, 6)])
    u = np.array([rng.uniform(0, 30), *rng.uniform(-3, 3, 2), rng.uniform(-0.1, 0.1)])
    params = QuadParams(m=rng.uniform(0.5, 3), l=rng.uniform(0.1, 0.5), Jx=rng.uniform(0.005, 0.02),
                        Jy=rng.uniform(0.005, 0.02), Jz=rng.uniform(0.01, 0.04))
    return state, u, params, rng.normal(size=3)


def transcription_worst_error(n: int = 10_000, seed: int = 2024) -> float:
    """Largest relative gap between ``dynamics_rhs`` and the transcription over ``n`` random cases."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        state, u, params, gust = random_case(rng)
        a = dyn.dynamics_rhs(state, u, params, gust)
        b = second_transcription(state, u, params, gust)
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)))))
    return worst


def maneuver(dt: float, duration: float = 2.0) -> np.ndarray:
    """Final state of a 2 s tumbling climb with strong gyroscopic coupling."""
    s = QuadState(np.r_[0, 0, 5, 0.2, -0.1, 0.3, 1.0, -0.5, 0.2, 1.0, -0.8, 5.0])
    u = np.array([1.2 * P.m * P.g, 0.05, -0.04, 0.002])
    gust = np.array([0.5, -0.3, 0.1])
    for _ in range(int(round(duration / dt))):
        s = dyn.step(s, u, P, gust, dt)
    return s.vec


def richardson_order(dts=(0.02, 0.01, 0.005)) -> float:
    a, b, c = (maneuver(dt) for dt in dts)
    return math.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))
