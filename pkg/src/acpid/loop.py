"""Closed loop: four SISO axis controllers around the simulated quadrotor.

Per control step ``n`` (measurement ``s_n`` in hand):

1. each tuner finishes the update for step ``n-1`` now that ``s_n`` is known;
2. PID errors are formed from ``s_n``;
3. the gain network produces dynamic gains from
   ``(u[n-1], u[n-2], s_n, s_[n-1], e_n)``;
4. the PID law gives ``u_n``, and the identifier predicts ``s_[n+1]``;
5. commands are unmixed to rotor speeds and saturated;
6. the simulator advances one step with the current gust and mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, tuner as tn
from .config import AXES, ScenarioConfig
from .dynamics import GustState, QuadState
from .errors import DivergenceError
from .pid import PidChannel, wrap_angle
from .telemetry import StepLog, columns
from .trajectories import build as build_trajectory

AXIS_STATE_INDEX = {"roll": 3, "pitch": 4, "yaw": 5, "alt": 2}


def outer_position_law(ex: float, ey: float, dex: float, dey: float, psi: float, kp: float = 1.0,
                       kd: float = 1.6, g: float = 9.81, max_tilt: float = math.pi / 4,
                       ax_ff: float = 0.0, ay_ff: float = 0.0) -> tuple[float, float]:
    """Desired (roll, pitch) from horizontal position errors.

    A PD law gives world-frame accelerations, which are rotated by yaw and
    mapped to small tilt angles assuming thrust close to ``m g``.
    """
    ax = ax_ff + kp * ex + kd * dex
    ay = ay_ff + kp * ey + kd * dey
    c, s = math.cos(psi), math.sin(psi)
    theta_d = (ax * c + ay * s) / g
    phi_d = (ax * s - ay * c) / g
    return (min(max(phi_d, -max_tilt), max_tilt), min(max(theta_d, -max_tilt), max_tilt))


@dataclass
class AxisTelemetry:
    mu: float = 0.0
    sigma: float = 0.0
    s_m: float = 0.0
    reward: float = 0.0
    td: float = 0.0
    la: float = 0.0
    lc: float = 0.0


class AxisController:
    """PID channel plus an optional self-tuner for one axis."""

    def __init__(self, axis: str, pid: PidChannel, bundle: tn.TunerBundle | None, dt: float):
        self.axis = axis
        self.pid = pid
        self.tuner = bundle
        self.dt = dt
        self.u_hist: list[float] = []  # most recent last
        self.s_hist: list[float] = []
        self.pending: tn.StepContext | None = None
        self.s_m_prev: float | None = None
        self.reports: list[tn.TrainingReport] = []

    @property
    def baseline(self) -> bool:
        return self.tuner is None

    def step(self, setpoint: float, s: float) -> tuple[float, float, AxisTelemetry]:
        tel = AxisTelemetry()
        bundle = self.tuner
        if bundle is not None and self.pending is not None:
            e_track = setpoint - s
            report = tn.update(bundle, self.pending, s, tracking_error=e_track)
            self.reports.append(report)
            self.s_m_prev = self.pending.ident.s_m
            self.pending = None
            tel.reward, tel.td = report.reward, report.td_error
            tel.la, tel.lc = report.loss_actor, report.loss_critic

        errs = self.pid.update_errors(setpoint, s, self.dt)
        warm = bundle is not None and len(self.u_hist) >= 2
        gain_x = gain_trace = None
        if warm:
            raw = tn.gain_input(self.u_hist[-1], self.u_hist[-2], s, self.s_hist[-1], errs.as_array())
            gains, gain_x, gain_trace = tn.compute_dynamic_gains(bundle, raw)
            self.pid.set_dynamic(gains)
        u_raw, u_sat = self.pid.control()

        if warm:
            ident = tn.identify(bundle, u_raw, s, self.s_hist[-1])
            e = errs.as_array()
            u_static = float(np.dot(self.pid.static.as_array(), e))
            self.pending = tn.StepContext(
                gain_x=gain_x, gain_trace=gain_trace, gains=self.pid.dynamic.copy(), errors=e,
                u_static=u_static, u=u_raw, s_prev=s, s_prev2=self.s_hist[-1], ident=ident,
                s_m_prev=s if self.s_m_prev is None else self.s_m_prev, dt=self.dt,
            )
            tel.mu, tel.sigma, tel.s_m = ident.mu, ident.sigma, ident.s_m

        self.u_hist = (self.u_hist + [u_raw])[-2:]
        self.s_hist = (self.s_hist + [s])[-2:]
        return u_raw, u_sat, tel


def default_u_limit(axis: str, cfg: ScenarioConfig) -> float:
    """Symmetric command limit derived from rotor authority around hover."""
    p = cfg.params
    w_max = cfg.omega_max ** 2
    if axis in ("roll", "pitch"):
        return 0.5 * p.b * w_max
    if axis == "yaw":
        return 0.5 * p.d * w_max
    return p.m * p.g


@dataclass
class EpisodeResult:
    mode: str
    log: StepLog
    failed: bool = False
    reason: str = ""
    controllers: dict = field(default_factory=dict)


def build_controllers(cfg: ScenarioConfig, mode: str) -> dict[str, AxisController]:
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(AXES))
    out = {}
    for axis, ss in zip(AXES, seeds):
        s = cfg.axes[axis]
        lim = s.u_limit if s.u_limit is not None else default_u_limit(axis, cfg)
        pid = PidChannel(s.gains, -lim, lim, s.i_limit, wrap=(axis == "yaw"))
        bundle = None
        if mode == "adaptive" and axis in cfg.tuned_axes:
            bundle = tn.TunerBundle.create(cfg.tuner_for(axis), ss)
        out[axis] = AxisController(axis, pid, bundle, cfg.dt)
    return out


def run_episode(cfg: ScenarioConfig, mode: str) -> EpisodeResult:
    """Run one episode in ``"baseline"`` or ``"adaptive"`` mode."""
    if mode not in ("baseline", "adaptive"):
        raise ValueError(f"mode must be baseline or adaptive, got {mode!r}")
    traj = build_trajectory(cfg.trajectory.kind, **cfg.trajectory.params)
    ref0 = traj(0.0)
    state = QuadState.at(ref0.x, ref0.y, ref0.z, psi=ref0.psi)
    params = cfg.params
    nominal_mass = params.m
    w_max = cfg.omega_max ** 2
    gust = GustState.create(cfg.gust.seed, cfg.gust.tau_s, cfg.gust.rho, cfg.gust.q_std)
    ctrls = build_controllers(cfg, mode)
    dt = cfg.dt
    out = cfg.outer
    log = StepLog(columns())
    failed, reason = False, ""

    for n in range(cfg.n_steps):
        t = n * dt
        ref = traj(t)
        m = dynamics.mass_schedule(t, cfg.mass_schedule, params.m)
        plant = params.with_mass(m)
        v = state.vec
        if ref.phi is None:
            phi_d, theta_d = outer_position_law(ref.x - v[0], ref.y - v[1], ref.vx - v[6], ref.vy - v[7],
                                                v[5], out.kp, out.kd, params.g, out.max_tilt, ref.ax, ref.ay)
        else:
            phi_d, theta_d = ref.phi, ref.theta
        setpoints = {"roll": phi_d, "pitch": theta_d, "yaw": ref.psi, "alt": ref.z}

        row_axes = []
        cmd = {}
        for axis in AXES:
            c = ctrls[axis]
            u_raw, u_sat, tel = c.step(setpoints[axis], float(v[AXIS_STATE_INDEX[axis]]))
            cmd[axis] = u_sat
            e = c.pid.errors
            sg, dg = c.pid.static, c.pid.dynamic
            row_axes.append((setpoints[axis], e.e_p, e.e_i, e.e_d, sg.kp, sg.ki, sg.kd,
                             float(dg[0]), float(dg[1]), float(dg[2]), u_raw, u_sat, tel))

        u1 = nominal_mass * params.g / (math.cos(v[3]) * math.cos(v[4])) + cmd["alt"]
        u_req = np.array([u1, cmd["roll"], cmd["pitch"], cmd["yaw"]])
        w, u_applied = dynamics.saturate_rotors(u_req, plant, w_max)
        d = gust.d

        row = [t, m, *v.tolist(), ref.x, ref.y]
        for sp, ep, ei, ed, kps, kis, kds, kpd, kid, kdd, ur, us, _ in row_axes:
            row += [sp, ep, ei, ed, kps, kis, kds, kpd, kid, kdd, ur, us]
        row += [*u_applied.tolist(), *w.tolist(), *d.tolist()]
        for *_, tel in row_axes:
            row += [tel.mu, tel.sigma, tel.s_m, tel.reward, tel.td, tel.la, tel.lc]
        log.append(row)

        try:
            state = dynamics.step(state, u_applied, plant, d, dt, cfg.ceiling)
        except DivergenceError as exc:
            failed, reason = True, str(exc)
            break
        if cfg.gust.enabled:
            gust = dynamics.gust_step(gust, dt)

    return EpisodeResult(mode, log, failed, reason, ctrls)


def rmse(log: StepLog, axis: str, window: tuple[float, float] | None = None) -> float:
    """Root-mean-square tracking error of ``axis``; degrees for attitude, metres for altitude."""
    t = log["t"]
    sel = np.ones(t.size, dtype=bool) if window is None else (t >= window[0]) & (t < window[1])
    if not np.any(sel):
        raise ValueError(f"empty RMSE window {window}")
    err = log[f"{axis}_sp"][sel] - log[AXIS_COLUMN[axis]][sel]
    if axis == "yaw":
        err = np.array([wrap_angle(e) for e in err])
    value = float(np.sqrt(np.mean(err * err)))
    return math.degrees(value) if axis in ("roll", "pitch", "yaw") else value


AXIS_COLUMN = {"roll": "phi", "pitch": "theta", "yaw": "psi", "alt": "z"}
