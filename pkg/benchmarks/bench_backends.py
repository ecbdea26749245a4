"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_backends.py [--repeat 5] [--episode-seconds 5]

Each kernel is timed with :mod:`timeit` under both backends and the best of
``--repeat`` rounds is reported per call, followed by one adaptive episode of
the helix scenario under each backend.
"""
from __future__ import annotations

import argparse
import timeit
from dataclasses import replace

import numpy as np

from acpid import _backend, dynamics, mlp
from acpid.config import ScenarioConfig, TrajectorySettings
from acpid.dynamics import QuadParams, QuadState
from acpid.loop import run_episode


def kernel_cases():
    rng = np.random.default_rng(0)
    net = mlp.init_weights((7, 16, 16, 3), ("tanh", "tanh", "tanh"), 0)
    x, g = rng.normal(size=7), rng.normal(size=3)
    _, trace = mlp.forward(net, x)
    adam = mlp.AdamState.zeros_like(net)
    grads = rng.normal(size=net.params.size)
    p = QuadParams()
    s = QuadState(rng.normal(size=12) * 0.1)
    u, d = np.array([9.81, 0.01, -0.01, 0.0]), np.zeros(3)
    return {
        "mlp forward 7-16-16-3": lambda: mlp.forward(net, x),
        "mlp backward 7-16-16-3": lambda: mlp.backward(net, trace, g),
        "adam step (451 params)": lambda: mlp.adam_step(net, adam, grads),
        "dynamics rhs": lambda: dynamics.dynamics_rhs(s, u, p, d),
        "rk4 step": lambda: dynamics.step(s, u, p, d),
    }


def best_per_call(fn, number: int, repeat: int) -> float:
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000, help="calls per timing round")
    ap.add_argument("--episode-seconds", type=float, default=5.0, help="simulated duration of the episode run")
    args = ap.parse_args(argv)

    backends = _backend.available()
    print(f"backends: {', '.join(backends)} (active at import: {_backend.name})")
    cases = kernel_cases()
    results = {}
    for b in backends:
        _backend.use(b)
        results[b] = {name: best_per_call(fn, args.number, args.repeat) for name, fn in cases.items()}

    width = max(map(len, cases))
    print(f"{'kernel':<{width}} " + " ".join(f"{b + ' [us]':>14}" for b in backends)
          + ("    speedup" if len(backends) > 1 else ""))
    for name in cases:
        row = " ".join(f"{results[b][name] * 1e6:>14.2f}" for b in backends)
        if len(backends) > 1:
            row += f" {results['python'][name] / results['compiled'][name]:>10.2f}x"
        print(f"{name:<{width}} {row}")

    cfg = replace(ScenarioConfig(name="bench", trajectory=TrajectorySettings("helix", {})),
                  duration=args.episode_seconds)
    print(f"\nadaptive helix episode, {cfg.n_steps} steps:")
    for b in backends:
        _backend.use(b)
        t = min(timeit.repeat(lambda: run_episode(cfg, "adaptive"), number=1, repeat=max(1, args.repeat // 2)))
        print(f"  {b:<9} {t:8.3f} s  ({t / cfg.n_steps * 1e6:.1f} us/step)")


if __name__ == "__main__":
    main()
