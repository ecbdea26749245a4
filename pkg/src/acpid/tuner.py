"""Actor-critic self-tuner for one SISO axis.

Three networks cooperate:

* the gain network maps the 7-vector ``(u[k-1], u[k-2], s[k-1], s[k-2],
  e_p, e_i, e_d)`` to bounded dynamic gain increments;
* the actor maps ``(u[k], s[k-1], s[k-2])`` to the mean and spread of a
  Gaussian over the next measurement, from which the estimate ``s_m`` is a
  reparameterized sample ``mu + sigma * eps``;
* the critic maps the same 3-vector to a state value.

All three are trained on the total loss ``L_a + L_c``. The gain network
receives it through the control input: ``dL/du`` (collected from the actor
and critic input gradients) times ``du/dK = (e_p, e_i, e_d)``, the errors
acting as fixed multipliers.

Within one update the TD target ``R + gamma * v'`` and the ``|delta|``
factor of the actor loss are constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import mlp
from .errors import ConfigurationError, NumericalError
from .mlp import AdamState, ForwardTrace, MlpNetwork

ENTROPY_COEF = math.sqrt(2.0 * math.pi * math.e)


@dataclass(frozen=True)
class TunerConfig:
    gamma: float = 0.9
    r1: float = 1.0
    r2: float = 0.1
    r3: float = 0.001
    w1: float = 1.0
    w2: float = 0.01
    w3: float = 1.0
    eta: float = 0.01
    gain_scale: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hidden: tuple[int, ...] = (16, 16)
    init_bound: float = 0.1
    lr_gain: float = 1e-3
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    sigma_min: float = 1e-3
    residual: bool = True
    tracking_weight: float = 0.0
    norm_floor: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError(f"gamma must be in [0, 1), got {self.gamma}")
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be > 0, got {self.eta}")
        if not self.sigma_min > 0:
            raise ConfigurationError("sigma_min must be > 0")
        if len(self.gain_scale) != 3 or any(s < 0 for s in self.gain_scale):
            raise ConfigurationError("gain_scale needs three non-negative entries")
        for name in ("r1", "r2", "r3", "w1", "w2", "w3", "tracking_weight"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")


class RunningNorm:
    """Running z-score (Welford) with a floor on the spread."""

    def __init__(self, n: int, floor: float = 1e-6):
        self.count = 0
        self.mean = np.zeros(n)
        self._m2 = np.zeros(n)
        self.floor = floor

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self._m2 = self._m2 + delta * (x - self.mean)

    @property
    def std(self) -> np.ndarray:
        var = self._m2 / self.count if self.count else np.zeros_like(self._m2)
        return np.maximum(np.sqrt(var), self.floor)

    def apply(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (normalized x, the spread used)."""
        std = self.std
        return (x - self.mean) / std, std


@dataclass
class TunerBundle:
    gain_net: MlpNetwork
    actor_net: MlpNetwork
    critic_net: MlpNetwork
    adam_gain: AdamState
    adam_actor: AdamState
    adam_critic: AdamState
    config: TunerConfig
    rng: np.random.Generator
    gain_norm: RunningNorm
    id_norm: RunningNorm
    incidents: list[str] = field(default_factory=list)

    @classmethod
    def create(cls, config: TunerConfig, seed: int | np.random.SeedSequence) -> "TunerBundle":
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        s_gain, s_actor, s_critic, s_noise = ss.spawn(4)
        h = tuple(config.hidden)
        hidden_acts = ("sigmoid",) * len(h)
        gain = mlp.init_weights((7, *h, 3), hidden_acts + ("tanh",), np.random.default_rng(s_gain),
                                config.init_bound)
        actor = mlp.init_weights((3, *h, 2), hidden_acts + ("linear",), np.random.default_rng(s_actor),
                                 config.init_bound)
        critic = mlp.init_weights((3, *h, 1), hidden_acts + ("linear",), np.random.default_rng(s_critic),
                                  config.init_bound)

        def adam(net, lr):
            return AdamState.zeros_like(net, lr, config.beta1, config.beta2, config.adam_eps)

        return cls(gain, actor, critic, adam(gain, config.lr_gain), adam(actor, config.lr_actor),
                   adam(critic, config.lr_critic), config, np.random.default_rng(s_noise),
                   RunningNorm(7, config.norm_floor), RunningNorm(3, config.norm_floor))


@dataclass(frozen=True, eq=False)
class Identification:
    mu: float
    sigma: float
    s_m: float
    v: float
    eps: float
    x: np.ndarray
    x_std: np.ndarray
    actor_trace: ForwardTrace
    critic_trace: ForwardTrace


@dataclass(frozen=True, eq=False)
class StepContext:
    """Everything one update needs about the step that produced ``u``."""

    gain_x: np.ndarray
    gain_trace: ForwardTrace
    gains: np.ndarray
    errors: np.ndarray
    u_static: float
    u: float
    s_prev: float
    s_prev2: float
    ident: Identification
    s_m_prev: float
    dt: float


@dataclass(frozen=True)
class TrainingReport:
    reward: float
    td_error: float
    loss_actor: float
    loss_critic: float
    loss_total: float
    grad_norm_gain: float
    grad_norm_actor: float
    grad_norm_critic: float
    v_next: float
    skipped: bool = False


@dataclass(frozen=True, eq=False)
class PipelineGradients:
    gain: np.ndarray
    actor: np.ndarray
    critic: np.ndarray
    dl_du: float
    report: TrainingReport


def _softplus(z: float) -> float:
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


def _sigmoid(z: float) -> float:
    return 0.5 * (1.0 + math.tanh(0.5 * z))


def gain_input(u1: float, u2: float, s1: float, s2: float, errors) -> np.ndarray:
    e = np.asarray(errors, dtype=np.float64)
    return np.array([u1, u2, s1, s2, e[0], e[1], e[2]])


def compute_dynamic_gains(bundle: TunerBundle, raw_input, update_stats: bool = True):
    """Dynamic gains for the 7-vector of recent inputs, outputs and errors.

    Returns ``(gains, normalized input, trace)``. Each gain lies in
    ``[-gain_scale, gain_scale]``.
    """
    raw = np.asarray(raw_input, dtype=np.float64)
    if update_stats:
        bundle.gain_norm.update(raw)
    x, _ = bundle.gain_norm.apply(raw)
    out, trace = mlp.forward(bundle.gain_net, x)
    # adding +0.0 folds the -0.0 produced by a zero scale into +0.0
    gains = np.asarray(bundle.config.gain_scale) * out + 0.0
    return gains, x, trace


def _actor_head(cfg: TunerConfig, out: np.ndarray, s_prev: float) -> tuple[float, float]:
    mu = float(out[0]) + (s_prev if cfg.residual else 0.0)
    sigma = _softplus(float(out[1])) + cfg.sigma_min
    return mu, sigma


def identify(bundle: TunerBundle, u: float, s_prev: float, s_prev2: float, eps: float | None = None,
             update_stats: bool = True) -> Identification:
    """Actor mean/spread, sampled estimate and critic value for (u, s[k-1], s[k-2])."""
    raw = np.array([u, s_prev, s_prev2], dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise NumericalError("non-finite identifier input")
    if update_stats:
        bundle.id_norm.update(raw)
    x, std = bundle.id_norm.apply(raw)
    out, a_trace = mlp.forward(bundle.actor_net, x)
    v_out, c_trace = mlp.forward(bundle.critic_net, x)
    mu, sigma = _actor_head(bundle.config, out, s_prev)
    if eps is None:
        eps = float(bundle.rng.standard_normal())
    s_m = mu + sigma * eps
    v = float(v_out[0])
    if not all(map(math.isfinite, (mu, sigma, s_m, v))):
        raise NumericalError("identifier produced a non-finite output")
    return Identification(mu, sigma, s_m, v, eps, x, std, a_trace, c_trace)


def value_of(bundle: TunerBundle, u: float, s_prev: float, s_prev2: float) -> float:
    x, _ = bundle.id_norm.apply(np.array([u, s_prev, s_prev2], dtype=np.float64))
    out, _ = mlp.forward(bundle.critic_net, x)
    return float(out[0])


def reward(config: TunerConfig, s_m: float, s: float, ds_m: float, ds: float, u: float,
           tracking_error: float = 0.0) -> float:
    """Quadratic penalty on identification error, its rate and the control effort (always <= 0)."""
    r = -config.r1 * (s_m - s) ** 2 - config.r2 * (ds_m - ds) ** 2 - config.r3 * u * u
    if config.tracking_weight:
        r -= config.tracking_weight * tracking_error * tracking_error
    return r


def td_error(config: TunerConfig, r_next: float, v_k: float, v_next: float) -> float:
    return r_next + config.gamma * v_next - v_k


def losses(config: TunerConfig, s_m: float, s: float, sigma: float, delta: float) -> tuple[float, float, float]:
    """(actor loss, critic loss, total)."""
    if not sigma > 0:
        raise ConfigurationError("sigma must be > 0")
    la = config.w1 * (s_m - s) ** 2 * (config.eta + abs(delta)) + config.w2 * math.sqrt(
        2.0 * math.pi * math.e * sigma * sigma)
    lc = config.w3 * delta * delta
    return la, lc, la + lc


def pipeline_gradients(bundle: TunerBundle, ctx: StepContext, s_next: float, v_next: float,
                       tracking_error: float = 0.0) -> PipelineGradients:
    """Gradients of the total loss w.r.t. all three networks for one completed step."""
    cfg = bundle.config
    idn = ctx.ident
    ds = (s_next - ctx.s_prev) / ctx.dt
    ds_m = (idn.s_m - ctx.s_m_prev) / ctx.dt
    r = reward(cfg, idn.s_m, s_next, ds_m, ds, ctx.u, tracking_error)
    delta = td_error(cfg, r, idn.v, v_next)
    la, lc, lt = losses(cfg, idn.s_m, s_next, idn.sigma, delta)

    dl_dsm = 2.0 * cfg.w1 * (idn.s_m - s_next) * (cfg.eta + abs(delta))
    dl_dsigma = dl_dsm * idn.eps + cfg.w2 * ENTROPY_COEF
    z_sigma = float(idn.actor_trace.output[1])
    actor_out_grad = np.array([dl_dsm, dl_dsigma * _sigmoid(z_sigma)])
    critic_out_grad = np.array([-2.0 * cfg.w3 * delta])

    g_actor, gin_actor = mlp.backward(bundle.actor_net, idn.actor_trace, actor_out_grad)
    g_critic, gin_critic = mlp.backward(bundle.critic_net, idn.critic_trace, critic_out_grad)
    dl_du = (gin_actor[0] + gin_critic[0]) / idn.x_std[0]

    gain_out_grad = dl_du * ctx.errors * np.asarray(cfg.gain_scale)
    g_gain, _ = mlp.backward(bundle.gain_net, ctx.gain_trace, gain_out_grad)

    report = TrainingReport(
        reward=r, td_error=delta, loss_actor=la, loss_critic=lc, loss_total=lt,
        grad_norm_gain=float(np.linalg.norm(g_gain)),
        grad_norm_actor=float(np.linalg.norm(g_actor)),
        grad_norm_critic=float(np.linalg.norm(g_critic)),
        v_next=v_next,
    )
    return PipelineGradients(g_gain, g_actor, g_critic, dl_du, report)


def surrogate_loss(cfg: TunerConfig, gain_net: MlpNetwork, actor_net: MlpNetwork, critic_net: MlpNetwork,
                   ctx: StepContext, s_next: float, td_target: float, delta_weight: float) -> float:
    """Total loss as a function of the network parameters, with the TD target
    and the ``|delta|`` factor frozen. Its gradient is what
    :func:`pipeline_gradients` returns; used for finite-difference checks."""
    out, _ = mlp.forward(gain_net, ctx.gain_x)
    gains = np.asarray(cfg.gain_scale) * out
    u = ctx.u_static + float(np.dot(gains, ctx.errors))
    x = ctx.ident.x.copy()
    x[0] = x[0] + (u - ctx.u) / ctx.ident.x_std[0]
    a_out, _ = mlp.forward(actor_net, x)
    c_out, _ = mlp.forward(critic_net, x)
    mu, sigma = _actor_head(cfg, a_out, ctx.s_prev)
    s_m = mu + sigma * ctx.ident.eps
    v = float(c_out[0])
    la = cfg.w1 * (s_m - s_next) ** 2 * (cfg.eta + abs(delta_weight)) + cfg.w2 * ENTROPY_COEF * sigma
    lc = cfg.w3 * (td_target - v) ** 2
    return la + lc


def update(bundle: TunerBundle, ctx: StepContext, s_next: float, v_next: float | None = None,
           tracking_error: float = 0.0) -> TrainingReport:
    """One ADAM step on each network from the completed step ``ctx``.

    ``v_next`` defaults to the critic's value of ``(u, s_next, s_prev)``
    under the current weights. A non-finite gradient or parameter skips the
    update, leaves the networks untouched and records an incident.
    """
    if v_next is None:
        v_next = value_of(bundle, ctx.u, s_next, ctx.s_prev)
    grads = pipeline_gradients(bundle, ctx, s_next, v_next, tracking_error)
    try:
        gain, adam_g = mlp.adam_step(bundle.gain_net, bundle.adam_gain, grads.gain)
        actor, adam_a = mlp.adam_step(bundle.actor_net, bundle.adam_actor, grads.actor)
        critic, adam_c = mlp.adam_step(bundle.critic_net, bundle.adam_critic, grads.critic)
    except NumericalError as exc:
        bundle.incidents.append(str(exc))
        return replace(grads.report, skipped=True)
    bundle.gain_net, bundle.adam_gain = gain, adam_g
    bundle.actor_net, bundle.adam_actor = actor, adam_a
    bundle.critic_net, bundle.adam_critic = critic, adam_c
    return grads.report


def snapshot(bundle: TunerBundle) -> dict:
    """The three networks in the :mod:`acpid.mlp` snapshot layout."""
    return {"gain": mlp.to_dict(bundle.gain_net), "actor": mlp.to_dict(bundle.actor_net),
            "critic": mlp.to_dict(bundle.critic_net)}


def restore(bundle: TunerBundle, data: dict) -> None:
    """Load networks saved by :func:`snapshot`; optimizer moments restart from zero."""
    nets = {k: mlp.from_dict(data[k]) for k in ("gain", "actor", "critic")}
    for key, attr in (("gain", "gain_net"), ("actor", "actor_net"), ("critic", "critic_net")):
        if nets[key].sizes != getattr(bundle, attr).sizes:
            raise ConfigurationError(f"{key} snapshot has sizes {nets[key].sizes}, "
                                     f"bundle expects {getattr(bundle, attr).sizes}")
    cfg = bundle.config
    bundle.gain_net, bundle.actor_net, bundle.critic_net = nets["gain"], nets["actor"], nets["critic"]
    bundle.adam_gain = AdamState.zeros_like(nets["gain"], cfg.lr_gain, cfg.beta1, cfg.beta2, cfg.adam_eps)
    bundle.adam_actor = AdamState.zeros_like(nets["actor"], cfg.lr_actor, cfg.beta1, cfg.beta2, cfg.adam_eps)
    bundle.adam_critic = AdamState.zeros_like(nets["critic"], cfg.lr_critic, cfg.beta1, cfg.beta2, cfg.adam_eps)
