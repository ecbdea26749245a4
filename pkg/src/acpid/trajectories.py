"""Reference generators. Each returns a :class:`Reference` for a time ``t``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import ConfigurationError


@dataclass(frozen=True)
class Reference:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    psi: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    # attitude-mode references; None means "use the position loop"
    phi: float | None = None
    theta: float | None = None


Trajectory = Callable[[float], Reference]


def hover(x: float = 0.0, y: float = 0.0, z: float = 2.0, psi: float = 0.0) -> Trajectory:
    ref = Reference(x, y, z, psi)
    return lambda t: ref


def square(side: float = 4.0, side_time: float = 20.0, altitude: float = 2.0, psi: float = 0.0) -> Trajectory:
    """Constant-speed square starting at the origin: +x, +y, -x, -y, then hold."""
    if side <= 0 or side_time <= 0:
        raise ConfigurationError("square side and side_time must be > 0")
    speed = side / side_time
    corners = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side), (0.0, 0.0)]

    def ref(t: float) -> Reference:
        k = int(t // side_time)
        if k >= 4:
            return Reference(0.0, 0.0, altitude, psi)
        (x0, y0), (x1, y1) = corners[k], corners[k + 1]
        frac = (t - k * side_time) / side_time
        dx, dy = (x1 - x0) / side, (y1 - y0) / side
        return Reference(x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac, altitude, psi,
                         dx * speed, dy * speed)

    return ref


def helix(radius: float = 1.0, pitch: float = 0.5, rev_per_s: float = 0.1, z0: float = 1.0,
          psi: float = 0.0) -> Trajectory:
    """Counter-clockwise helix around the z axis starting at (radius, 0, z0)."""
    w = 2.0 * math.pi * rev_per_s
    climb = pitch * rev_per_s

    def ref(t: float) -> Reference:
        c, s = math.cos(w * t), math.sin(w * t)
        return Reference(radius * c, radius * s, z0 + climb * t, psi,
                         -radius * w * s, radius * w * c, climb,
                         -radius * w * w * c, -radius * w * w * s)

    return ref


def waypoints(points: Sequence[tuple[float, float, float, float, float]]) -> Trajectory:
    """Step references: each (t, x, y, z, psi) holds from its time onward."""
    if not points:
        raise ConfigurationError("waypoint trajectory needs at least one point")
    pts = sorted(points)
    refs = [Reference(x, y, z, psi) for _, x, y, z, psi in pts]

    def ref(t: float) -> Reference:
        out = refs[0]
        for (tk, *_), r in zip(pts, refs):
            if t >= tk:
                out = r
        return out

    return ref


def attitude(phi: float = 0.0, theta: float = 0.0, psi: float = 0.0, z: float = 2.0,
             step_time: float = 0.0) -> Trajectory:
    """Direct attitude references, applied from ``step_time`` (zero before)."""
    limit = math.pi / 4
    if abs(phi) > limit or abs(theta) > limit:
        raise ConfigurationError("attitude references must stay within +-pi/4")
    before = Reference(z=z, psi=0.0, phi=0.0, theta=0.0)
    after = Reference(z=z, psi=psi, phi=phi, theta=theta)
    return lambda t: after if t >= step_time else before


BUILDERS = {
    "hover": hover,
    "square": square,
    "helix": helix,
    "waypoints": waypoints,
    "attitude": attitude,
}


def build(kind: str, **kwargs) -> Trajectory:
    try:
        return BUILDERS[kind](**kwargs)
    except KeyError:
        raise ConfigurationError(f"unknown trajectory type {kind!r}; choose from {sorted(BUILDERS)}") from None
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for trajectory {kind!r}: {exc}") from None


def initial_position(traj: Trajectory) -> tuple[float, float, float, float]:
    r = traj(0.0)
    return r.x, r.y, r.z, r.psi
