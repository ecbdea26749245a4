"""Scenario configuration.

Scenario files are INI text (``configparser``). Every section and key is
optional; anything omitted keeps the defaults below. Unknown sections or
keys are rejected so typos do not silently fall back to defaults. See
``docs/config.md`` for the full schema.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .dynamics import QuadParams
from .errors import ConfigurationError
from .pid import StaticGains
from .tuner import TunerConfig
from .tuning import default_gains

AXES = ("roll", "pitch", "yaw", "alt")
MODES = ("baseline", "adaptive", "both")

# pole-placement design on the default plant, see acpid.tuning.DESIGN
DEFAULT_GAINS = default_gains()


@dataclass(frozen=True)
class AxisSettings:
    gains: StaticGains
    i_limit: float = 10.0
    u_limit: float | None = None
    gain_scale: tuple[float, float, float] | None = None
    gain_scale_fraction: float = 0.2

    def resolved_gain_scale(self) -> tuple[float, float, float]:
        if self.gain_scale is not None:
            return tuple(self.gain_scale)
        f = self.gain_scale_fraction
        return (abs(self.gains.kp) * f, abs(self.gains.ki) * f, abs(self.gains.kd) * f)


@dataclass(frozen=True)
class GustSettings:
    enabled: bool = False
    tau_s: float = 0.3
    rho: float = 0.5
    q_std: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class OuterSettings:
    kp: float = 1.0
    kd: float = 1.6
    max_tilt: float = math.pi / 4


@dataclass(frozen=True)
class TrajectorySettings:
    kind: str = "hover"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    duration: float = 10.0
    dt: float = 0.01
    seed: int = 0
    mode: str = "both"
    pin_gains: bool = False
    ceiling: float = 1e4
    trajectory: TrajectorySettings = field(default_factory=TrajectorySettings)
    mass_schedule: tuple[tuple[float, float], ...] = ()
    gust: GustSettings = field(default_factory=GustSettings)
    params: QuadParams = field(default_factory=QuadParams)
    omega_max: float = 500.0
    outer: OuterSettings = field(default_factory=OuterSettings)
    axes: dict = field(default_factory=lambda: {a: AxisSettings(DEFAULT_GAINS[a]) for a in AXES})
    tuner: TunerConfig = field(default_factory=TunerConfig)
    tuned_axes: tuple[str, ...] = AXES

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.dt > 0 or not self.duration > 0:
            raise ConfigurationError("duration and dt must be > 0")
        steps = self.duration / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigurationError(f"duration {self.duration} is not a whole number of dt={self.dt} steps")
        for a in self.tuned_axes:
            if a not in AXES:
                raise ConfigurationError(f"unknown tuned axis {a!r}")
        times = [t for t, _ in self.mass_schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigurationError("mass schedule times must be strictly increasing")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def tuner_for(self, axis: str) -> TunerConfig:
        scale = self.axes[axis].resolved_gain_scale()
        if self.pin_gains:
            scale = (0.0, 0.0, 0.0)
        return replace(self.tuner, gain_scale=tuple(scale))

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


# ---------------------------------------------------------------- parsing


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in re.split(r"[,\s]+", text.strip()) if p)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in re.split(r"[,\s]+", text.strip()) if p)


def _words(text: str) -> tuple[str, ...]:
    return tuple(p for p in re.split(r"[,\s]+", text.strip()) if p)


def _mass_schedule(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in re.split(r"[,;]", text):
        item = item.strip()
        if not item:
            continue
        t, m = item.split(":")
        out.append((float(t), float(m)))
    return tuple(out)


def _points(text: str) -> tuple[tuple[float, ...], ...]:
    out = []
    for item in text.split(";"):
        if item.strip():
            vals = _floats(item)
            if len(vals) != 5:
                raise ValueError("each waypoint needs 't x y z psi'")
            out.append(vals)
    return tuple(out)


_TRAJ_KEYS = {
    "hover": {"x", "y", "z", "psi"},
    "square": {"side", "side_time", "altitude", "psi"},
    "helix": {"radius", "pitch", "rev_per_s", "z0", "psi"},
    "waypoints": {"points"},
    "attitude": {"phi", "theta", "psi", "z", "step_time"},
}

_SCENARIO_KEYS = {"name": str, "duration": float, "dt": float, "seed": int, "mode": str,
                  "pin_gains": _bool, "ceiling": float}
_GUST_KEYS = {"enabled": _bool, "tau_s": float, "rho": float, "q_std": float, "seed": int}
_DYN_KEYS = {f.name: float for f in fields(QuadParams)} | {"omega_max": float}
_OUTER_KEYS = {"kp": float, "kd": float, "max_tilt": float}
_AXIS_KEYS = {"kp": float, "ki": float, "kd": float, "i_limit": float, "u_limit": float,
              "gain_scale": _floats, "gain_scale_fraction": float}
_TUNER_KEYS = {f.name: (float if f.type in ("float", float) else None) for f in fields(TunerConfig)}
_TUNER_KEYS.update({"hidden": _ints, "gain_scale": None, "residual": _bool, "axes": _words})
del _TUNER_KEYS["gain_scale"]


class _Source:
    """Locates the line of a key for diagnostics."""

    def __init__(self, text: str, path: str):
        self.lines = text.splitlines()
        self.path = path

    def where(self, section: str, key: str | None = None) -> str:
        current = None
        for i, line in enumerate(self.lines, 1):
            s = line.strip()
            m = re.match(r"\[(.+)\]", s)
            if m:
                current = m.group(1).strip()
                if key is None and current == section:
                    return f"{self.path}:{i}"
                continue
            if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
                return f"{self.path}:{i}"
        return self.path


def _read(src: _Source, sec: configparser.SectionProxy, schema: dict[str, Any]) -> dict[str, Any]:
    out = {}
    for key, text in sec.items():
        if key not in schema:
            raise ConfigurationError(f"{src.where(sec.name, key)}: unknown key '{key}' in [{sec.name}]")
        conv = schema[key]
        try:
            out[key] = conv(text) if conv is not None else text
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(
                f"{src.where(sec.name, key)}: bad value for [{sec.name}] {key} = {text!r}: {exc}") from None
    return out


def parse_config(text: str, path: str = "<string>") -> ScenarioConfig:
    src = _Source(text, path)
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None

    cfg = ScenarioConfig()
    kwargs: dict[str, Any] = {}
    axes = dict(cfg.axes)
    tuner_kwargs: dict[str, Any] = {}
    params_kwargs: dict[str, Any] = {}

    for name in cp.sections():
        sec = cp[name]
        if name == "scenario":
            kwargs.update(_read(src, sec, _SCENARIO_KEYS))
        elif name == "trajectory":
            items = dict(sec.items())
            kind = items.pop("type", "hover")
            if kind not in _TRAJ_KEYS:
                raise ConfigurationError(f"{src.where(name, 'type')}: unknown trajectory type {kind!r}")
            schema = {k: (_points if k == "points" else float) for k in _TRAJ_KEYS[kind]}
            schema["type"] = str
            vals = _read(src, sec, schema)
            vals.pop("type", None)
            kwargs["trajectory"] = TrajectorySettings(kind, vals)
        elif name == "mass":
            vals = _read(src, sec, {"schedule": _mass_schedule})
            kwargs["mass_schedule"] = vals.get("schedule", ())
        elif name == "gust":
            kwargs["gust"] = GustSettings(**_read(src, sec, _GUST_KEYS))
        elif name == "dynamics":
            vals = _read(src, sec, _DYN_KEYS)
            if "omega_max" in vals:
                kwargs["omega_max"] = vals.pop("omega_max")
            params_kwargs.update(vals)
        elif name == "outer":
            kwargs["outer"] = replace(cfg.outer, **_read(src, sec, _OUTER_KEYS))
        elif name.startswith("pid."):
            axis = name[4:]
            if axis not in AXES:
                raise ConfigurationError(f"{src.where(name)}: unknown axis section [{name}]")
            vals = _read(src, sec, _AXIS_KEYS)
            base = axes[axis]
            gains = StaticGains(vals.pop("kp", base.gains.kp), vals.pop("ki", base.gains.ki),
                                vals.pop("kd", base.gains.kd))
            if "gain_scale" in vals and len(vals["gain_scale"]) != 3:
                raise ConfigurationError(f"{src.where(name, 'gain_scale')}: gain_scale needs 3 values")
            axes[axis] = replace(base, gains=gains, **vals)
        elif name == "tuner":
            vals = _read(src, sec, _TUNER_KEYS)
            if "axes" in vals:
                kwargs["tuned_axes"] = vals.pop("axes")
            if "hidden" in vals:
                vals["hidden"] = tuple(vals["hidden"])
            tuner_kwargs.update(vals)
        else:
            raise ConfigurationError(f"{src.where(name)}: unknown section [{name}]")

    try:
        if params_kwargs:
            kwargs["params"] = replace(cfg.params, **params_kwargs)
        if tuner_kwargs:
            kwargs["tuner"] = replace(cfg.tuner, **tuner_kwargs)
        kwargs["axes"] = axes
        return replace(cfg, **kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc}") from None
    return parse_config(text, str(p))


def dump_config(cfg: ScenarioConfig) -> str:
    """Render a config back to INI text (round-trips through :func:`parse_config`)."""
    lines = ["[scenario]"]
    for key in _SCENARIO_KEYS:
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    lines += ["", "[trajectory]", f"type = {cfg.trajectory.kind}"]
    for key, val in cfg.trajectory.params.items():
        if key == "points":
            val = "; ".join(" ".join(repr(float(v)) for v in p) for p in val)
        lines.append(f"{key} = {_fmt(val)}")
    if cfg.mass_schedule:
        lines += ["", "[mass]", "schedule = " + ", ".join(f"{t!r}:{m!r}" for t, m in cfg.mass_schedule)]
    lines += ["", "[gust]"] + [f"{f.name} = {_fmt(getattr(cfg.gust, f.name))}" for f in fields(GustSettings)]
    lines += ["", "[dynamics]"] + [f"{f.name} = {_fmt(getattr(cfg.params, f.name))}" for f in fields(QuadParams)]
    lines.append(f"omega_max = {_fmt(cfg.omega_max)}")
    lines += ["", "[outer]"] + [f"{f.name} = {_fmt(getattr(cfg.outer, f.name))}" for f in fields(OuterSettings)]
    for axis in AXES:
        s = cfg.axes[axis]
        lines += ["", f"[pid.{axis}]", f"kp = {s.gains.kp!r}", f"ki = {s.gains.ki!r}", f"kd = {s.gains.kd!r}",
                  f"i_limit = {s.i_limit!r}", f"gain_scale_fraction = {s.gain_scale_fraction!r}"]
        if s.u_limit is not None:
            lines.append(f"u_limit = {s.u_limit!r}")
        if s.gain_scale is not None:
            lines.append("gain_scale = " + ", ".join(repr(float(v)) for v in s.gain_scale))
    lines += ["", "[tuner]", "axes = " + ", ".join(cfg.tuned_axes)]
    for f in fields(TunerConfig):
        if f.name == "gain_scale":
            continue
        lines.append(f"{f.name} = {_fmt(getattr(cfg.tuner, f.name))}")
    return "\n".join(lines) + "\n"


def _fmt(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    if isinstance(val, (tuple, list)):
        return ", ".join(_fmt(v) for v in val)
    return str(val)
