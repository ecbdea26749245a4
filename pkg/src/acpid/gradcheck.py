"""Finite-difference gradient checks.

Two suites:

* :func:`check_mlp` compares :func:`acpid.mlp.backward` against central
  differences of a random linear functional of the network output, for
  every activation, over parameters and inputs;
* :func:`check_pipeline` builds one complete tuner step on random data and
  compares :func:`acpid.tuner.pipeline_gradients` against central
  differences of :func:`acpid.tuner.surrogate_loss` over every parameter of
  the gain, actor and critic networks, with the exploration noise held.

An entry passes when ``|analytic - numeric| <= rtol * max(|analytic|,
|numeric|) + atol``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mlp, tuner as tn
from .tuner import TunerConfig


@dataclass(frozen=True)
class CheckResult:
    name: str
    seed: int
    n_params: int
    max_rel_error: float
    worst_index: int
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name} seed={self.seed} params={self.n_params} "
                f"max_rel_err={self.max_rel_error:.3e}")


def central_difference(f, x: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Fourth-order central differences; the wide step keeps roundoff small
    for losses of order 100 while truncation stays near ``h**4``."""
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        old = x[i]
        step = h * max(1.0, abs(old))
        vals = []
        for k in (2, 1, -1, -2):
            x[i] = old + k * step
            vals.append(f(x))
        x[i] = old
        g[i] = (-vals[0] + 8.0 * vals[1] - 8.0 * vals[2] + vals[3]) / (12.0 * step)
    return g


def compare(analytic: np.ndarray, numeric: np.ndarray, rtol: float, atol: float) -> tuple[float, int, bool]:
    """(max relative error, its index, every entry within tolerance)."""
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    ok = diff <= rtol * scale + atol
    # reported figure only; entries below the absolute floor are judged by atol
    rel = diff / np.maximum(scale, 1e3 * atol)
    i = int(np.argmax(rel)) if rel.size else -1
    return (float(rel[i]) if rel.size else 0.0), i, bool(np.all(ok))


def check_mlp(seed: int, activation: str = "tanh", sizes=(4, 6, 5, 3), rtol: float = 1e-5,
              atol: float = 1e-8) -> CheckResult:
    rng = np.random.default_rng(seed)
    acts = (activation,) * (len(sizes) - 1)
    net = mlp.init_weights(sizes, acts, rng, bound=1.0)
    x = rng.normal(size=sizes[0])
    c = rng.normal(size=sizes[-1])

    out, trace = mlp.forward(net, x)
    g_params, g_in = mlp.backward(net, trace, c)
    analytic = np.concatenate([g_params, g_in])

    n = net.params.size

    def f(z):
        o, _ = mlp.forward(net.with_params(z[:n]), z[n:])
        return float(c @ o)

    numeric = central_difference(f, np.concatenate([net.params, x]))
    err, idx, ok = compare(analytic, numeric, rtol, atol)
    return CheckResult(f"mlp[{activation}]", seed, n, err, idx, ok)


def random_step(seed: int, config: TunerConfig | None = None, warm_steps: int = 20):
    """A tuner bundle and a completed step context built from random signals.

    The bundle is warmed on ``warm_steps`` random inputs so the running
    normalizers have non-trivial statistics.
    """
    rng = np.random.default_rng(seed)
    cfg = config or TunerConfig(gain_scale=(0.5, 0.3, 0.1))
    bundle = tn.TunerBundle.create(cfg, seed)
    # perturb away from the near-symmetric initialization so every path is exercised
    for name in ("gain_net", "actor_net", "critic_net"):
        net = getattr(bundle, name)
        setattr(bundle, name, net.with_params(rng.uniform(-1.0, 1.0, net.params.size)))
    for _ in range(warm_steps):
        bundle.gain_norm.update(rng.normal(size=7))
        bundle.id_norm.update(rng.normal(size=3))

    errors = rng.normal(size=3)
    s_prev, s_prev2 = rng.normal(scale=0.3, size=2)
    raw = tn.gain_input(rng.normal(), rng.normal(), s_prev, s_prev2, errors)
    gains, gx, gtrace = tn.compute_dynamic_gains(bundle, raw, update_stats=False)
    static = rng.uniform(0.5, 2.0, size=3)
    u_static = float(static @ errors)
    u = u_static + float(gains @ errors)
    ident = tn.identify(bundle, u, s_prev, s_prev2, eps=float(rng.normal()), update_stats=False)
    dt = 0.01
    # rates of order one keep the reward (and so the loss scale) moderate
    ctx = tn.StepContext(gx, gtrace, gains, errors, u_static, u, s_prev, s_prev2, ident,
                         s_m_prev=ident.s_m - dt * rng.normal(), dt=dt)
    s_next = s_prev + dt * rng.normal()
    v_next = float(rng.normal())
    return bundle, ctx, s_next, v_next


def check_pipeline(seed: int, config: TunerConfig | None = None, rtol: float = 1e-4,
                   atol: float = 1e-8) -> CheckResult:
    bundle, ctx, s_next, v_next = random_step(seed, config)
    cfg = bundle.config
    grads = tn.pipeline_gradients(bundle, ctx, s_next, v_next)
    rep = grads.report
    td_target = rep.reward + cfg.gamma * v_next

    nets = [bundle.gain_net, bundle.actor_net, bundle.critic_net]
    splits = np.cumsum([n.params.size for n in nets])[:-1]

    def f(z):
        pg, pa, pc = np.split(z, splits)
        return tn.surrogate_loss(cfg, nets[0].with_params(pg), nets[1].with_params(pa),
                                 nets[2].with_params(pc), ctx, s_next, td_target, rep.td_error)

    theta = np.concatenate([n.params for n in nets])
    numeric = central_difference(f, theta)
    analytic = np.concatenate([grads.gain, grads.actor, grads.critic])
    err, idx, ok = compare(analytic, numeric, rtol, atol)
    return CheckResult("pipeline", seed, theta.size, err, idx, ok)


def run_all(seeds=range(5)) -> list[CheckResult]:
    out = []
    for s in seeds:
        for act in mlp.ACTIVATIONS:
            out.append(check_mlp(s, act))
        out.append(check_pipeline(s))
    return out
