"""Small dense feed-forward networks with manual backprop and ADAM.

Parameters of a network live in one flat float64 vector. Layer ``k`` occupies
a contiguous block: its weight matrix (``out x in``, row-major) followed by
its bias. Gradients and ADAM moments use the same layout, so the optimizer
is a single elementwise pass.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _backend
from .errors import ConfigurationError, NumericalError

ACTIVATIONS = {"linear": 0, "sigmoid": 1, "tanh": 2}
SNAPSHOT_FORMAT = "acpid-mlp"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True, eq=False)
class MlpNetwork:
    """Immutable dense network. ``sizes`` = (n_in, h1, ..., n_out)."""

    sizes: tuple[int, ...]
    activations: tuple[str, ...]
    params: np.ndarray
    _sizes_arr: np.ndarray = field(init=False, repr=False)
    _acts_arr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        acts = tuple(self.activations)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ConfigurationError(f"invalid layer sizes {sizes}")
        if len(acts) != len(sizes) - 1:
            raise ConfigurationError(f"{len(sizes) - 1} layers but {len(acts)} activations")
        for a in acts:
            if a not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {a!r}")
        params = np.array(self.params, dtype=np.float64, copy=True)
        if params.shape != (param_count(sizes),):
            raise ConfigurationError(
                f"parameter vector has shape {params.shape}, expected ({param_count(sizes)},)"
            )
        if not np.all(np.isfinite(params)):
            raise NumericalError("non-finite network parameter", layer=_layer_of(sizes, _first_bad(params)))
        params.flags.writeable = False
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "activations", acts)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "_sizes_arr", np.array(sizes, dtype=np.intp))
        object.__setattr__(self, "_acts_arr", np.array([ACTIVATIONS[a] for a in acts], dtype=np.intp))

    @property
    def n_layers(self) -> int:
        return len(self.activations)

    @property
    def n_in(self) -> int:
        return self.sizes[0]

    @property
    def n_out(self) -> int:
        return self.sizes[-1]

    def layers(self) -> list[tuple[np.ndarray, np.ndarray, str]]:
        """(weight, bias, activation) views for each layer."""
        out = []
        off = 0
        for k, act in enumerate(self.activations):
            n_in, n_out = self.sizes[k], self.sizes[k + 1]
            w = self.params[off:off + n_out * n_in].reshape(n_out, n_in)
            b = self.params[off + n_out * n_in:off + n_out * n_in + n_out]
            out.append((w, b, act))
            off += n_out * n_in + n_out
        return out

    def with_params(self, params: np.ndarray) -> "MlpNetwork":
        return MlpNetwork(self.sizes, self.activations, params)

    def layer_slices(self) -> list[slice]:
        out, off = [], 0
        for k in range(self.n_layers):
            n = self.sizes[k + 1] * self.sizes[k] + self.sizes[k + 1]
            out.append(slice(off, off + n))
            off += n
        return out


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """Cached intermediates of one forward call.

    ``pre`` concatenates every layer's pre-activation; ``post`` holds the
    input followed by every layer's output.
    """

    sizes: tuple[int, ...]
    pre: np.ndarray
    post: np.ndarray

    def __len__(self) -> int:
        return len(self.sizes) - 1

    def layer_pre(self, k: int) -> np.ndarray:
        off = sum(self.sizes[1:k + 1])
        return self.pre[off:off + self.sizes[k + 1]]

    def layer_post(self, k: int) -> np.ndarray:
        off = sum(self.sizes[:k + 1])
        return self.post[off:off + self.sizes[k + 1]]

    @property
    def input(self) -> np.ndarray:
        return self.post[:self.sizes[0]]

    @property
    def output(self) -> np.ndarray:
        return self.post[-self.sizes[-1]:]


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, net: MlpNetwork, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        n = net.params.size
        return cls(np.zeros(n), np.zeros(n), 0, lr, beta1, beta2, eps)


def param_count(sizes: Sequence[int]) -> int:
    return sum(sizes[k + 1] * sizes[k] + sizes[k + 1] for k in range(len(sizes) - 1))


def _first_bad(params: np.ndarray) -> int:
    bad = np.flatnonzero(~np.isfinite(params))
    return int(bad[0]) if bad.size else -1


def _layer_of(sizes: Sequence[int], index: int) -> int:
    off = 0
    for k in range(len(sizes) - 1):
        off += sizes[k + 1] * sizes[k] + sizes[k + 1]
        if index < off:
            return k
    return len(sizes) - 2


def init_weights(sizes: Sequence[int], activations: Sequence[str], seed: int | np.random.Generator,
                 bound: float = 0.1) -> MlpNetwork:
    """Uniform(-bound, bound) initialization, deterministic per seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = rng.uniform(-bound, bound, size=param_count(sizes))
    return MlpNetwork(tuple(sizes), tuple(activations), params)


def forward(net: MlpNetwork, x) -> tuple[np.ndarray, ForwardTrace]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (net.n_in,):
        raise ConfigurationError(f"input has shape {x.shape}, network expects ({net.n_in},)")
    pre = np.empty(sum(net.sizes[1:]))
    post = np.empty(sum(net.sizes))
    _backend.kernels.mlp_forward(net.params, net._sizes_arr, net._acts_arr, x, pre, post)
    trace = ForwardTrace(net.sizes, pre, post)
    return trace.output.copy(), trace


def backward(net: MlpNetwork, trace: ForwardTrace, output_grad) -> tuple[np.ndarray, np.ndarray]:
    """Return (dL/dparams, dL/dinput) for an upstream gradient dL/doutput."""
    if trace.sizes != net.sizes:
        raise ConfigurationError(f"trace sizes {trace.sizes} do not match network {net.sizes}")
    g = np.ascontiguousarray(output_grad, dtype=np.float64)
    if g.shape != (net.n_out,):
        raise ConfigurationError(f"output_grad has shape {g.shape}, expected ({net.n_out},)")
    grad_params = np.empty(net.params.size)
    grad_in = np.empty(net.n_in)
    work = np.empty(2 * max(net.sizes))
    _backend.kernels.mlp_backward(net.params, net._sizes_arr, net._acts_arr, trace.post, g,
                                  grad_params, grad_in, work)
    return grad_params, grad_in


def adam_step(net: MlpNetwork, state: AdamState, grads) -> tuple[MlpNetwork, AdamState]:
    """Bias-corrected ADAM with epsilon inside the square root.

    Raises :class:`NumericalError` naming the layer if any updated parameter
    is non-finite; ``net`` and ``state`` are left untouched in that case.
    """
    g = np.ascontiguousarray(grads, dtype=np.float64)
    if g.shape != net.params.shape:
        raise ConfigurationError(f"gradient shape {g.shape} != parameter shape {net.params.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericalError("non-finite gradient", layer=_layer_of(net.sizes, _first_bad(g)))
    t = state.t + 1
    new_p = np.empty_like(net.params)
    new_m = np.empty_like(state.m)
    new_v = np.empty_like(state.v)
    bad = _backend.kernels.adam_update(net.params, g, state.m, state.v, t, state.lr,
                                       state.beta1, state.beta2, state.eps, new_p, new_m, new_v)
    if bad >= 0:
        raise NumericalError("ADAM update produced a non-finite parameter",
                             layer=_layer_of(net.sizes, bad))
    new_state = AdamState(new_m, new_v, t, state.lr, state.beta1, state.beta2, state.eps)
    return net.with_params(new_p), new_state


def to_dict(net: MlpNetwork) -> dict:
    return {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "layers": [
            {
                "in": int(w.shape[1]),
                "out": int(w.shape[0]),
                "activation": act,
                "weight": w.tolist(),
                "bias": b.tolist(),
            }
            for w, b, act in net.layers()
        ],
    }


def from_dict(data: dict) -> MlpNetwork:
    if data.get("format") != SNAPSHOT_FORMAT:
        raise ConfigurationError(f"not an {SNAPSHOT_FORMAT} snapshot")
    if data.get("version") != SNAPSHOT_VERSION:
        raise ConfigurationError(f"unsupported snapshot version {data.get('version')}")
    layers = data["layers"]
    sizes = [layers[0]["in"]] + [layer["out"] for layer in layers]
    chunks = []
    for k, layer in enumerate(layers):
        if k and layer["in"] != layers[k - 1]["out"]:
            raise ConfigurationError(f"layer {k} input {layer['in']} does not chain")
        w = np.asarray(layer["weight"], dtype=np.float64)
        b = np.asarray(layer["bias"], dtype=np.float64)
        if w.shape != (layer["out"], layer["in"]) or b.shape != (layer["out"],):
            raise ConfigurationError(f"layer {k} array shapes do not match declared dims")
        chunks += [w.ravel(), b]
    return MlpNetwork(tuple(sizes), tuple(layer["activation"] for layer in layers),
                      np.concatenate(chunks))


def save(net: MlpNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(net), indent=1) + "\n")


def load(path: str | Path) -> MlpNetwork:
    return from_dict(json.loads(Path(path).read_text()))
