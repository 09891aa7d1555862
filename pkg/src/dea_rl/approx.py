"""Multilayer perceptrons with CReLU activations, hand-written backprop and Adam.

Parameters may carry a leading ensemble axis: a weight of shape ``(N, in, out)``
describes N independent networks evaluated in one batched matmul. Everything
here is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError


def crelu(x: np.ndarray) -> np.ndarray:
    """Concatenated ReLU along the last axis: ``[max(0, x), max(0, -x)]``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.concatenate([x, -x], axis=-1)
    return np.maximum(out, 0.0, out=out)


def crelu_backward(pre: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # subgradient 0 at the kink
    h = pre.shape[-1]
    return grad_out[..., :h] * (pre > 0) - grad_out[..., h:] * (pre < 0)


@dataclass
class MlpParams:
    """Weights ``(..., in, out)`` and biases ``(..., out)`` per layer.

    Hidden layers are followed by CReLU, so the input width of layer l+1 is twice
    the output width of layer l. The output layer is linear.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("weights and biases must be non-empty lists of equal length")
        for l in range(1, len(self.weights)):
            want = 2 * self.weights[l - 1].shape[-1]
            if self.weights[l].shape[-2] != want:
                raise ConfigError(
                    f"layer {l} expects input width {want} after CReLU, "
                    f"got {self.weights[l].shape[-2]}"
                )

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[-2]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[-1]

    @property
    def ensemble_shape(self) -> tuple[int, ...]:
        return self.weights[0].shape[:-2]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "MlpParams":
        return cls(list(arrays[0::2]), list(arrays[1::2]))

    def copy(self) -> "MlpParams":
        return MlpParams.from_arrays([a.copy() for a in self.arrays()])

    def zeros_like(self) -> "MlpParams":
        return MlpParams.from_arrays([np.zeros_like(a) for a in self.arrays()])

    def member(self, i: int) -> "MlpParams":
        """Slice one network out of an ensemble."""
        return MlpParams.from_arrays([a[i] for a in self.arrays()])


# Gradients share the parameter layout.
GradientSet = MlpParams


def init_mlp(
    rng: np.random.Generator,
    in_dim: int,
    hidden_sizes: Sequence[int],
    out_dim: int,
    ensemble: int | None = None,
) -> MlpParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases."""
    if in_dim < 1 or out_dim < 1 or any(h < 1 for h in hidden_sizes):
        raise ConfigError("layer widths must be positive")
    lead = () if ensemble is None else (ensemble,)
    fan_ins = [in_dim] + [2 * h for h in hidden_sizes]
    fan_outs = list(hidden_sizes) + [out_dim]
    weights, biases = [], []
    for fi, fo in zip(fan_ins, fan_outs):
        bound = 1.0 / np.sqrt(fi)
        weights.append(rng.uniform(-bound, bound, size=lead + (fi, fo)))
        biases.append(rng.uniform(-bound, bound, size=lead + (fo,)))
    return MlpParams(weights, biases)


def _add_bias(z: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if w.ndim > 2:
        return z + b[..., None, :]
    return z + b


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    squeeze: bool = False


def mlp_forward(params: MlpParams, x: np.ndarray, cache: ForwardCache | None = None) -> np.ndarray:
    """Evaluate the network. ``x`` is ``(in,)``, ``(B, in)`` or ``(N, B, in)``.

    With an ensemble of N networks a ``(B, in)`` input is shared by all members
    and the output is ``(N, B, out)``. Pass a ``ForwardCache`` to record what the
    backward pass needs.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.in_dim:
        raise ConfigError(f"input width {x.shape[-1]} does not match network input {params.in_dim}")
    squeeze = x.ndim == 1
    if squeeze:
        if params.ensemble_shape:
            raise ConfigError("ensemble forward needs a batched input")
        x = x[None, :]
    if cache is not None:
        cache.squeeze = squeeze
    h = x
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        if cache is not None:
            cache.inputs.append(h)
        z = _add_bias(h @ w, w, b)
        if l == last:
            h = z
        else:
            if cache is not None:
                cache.pre.append(z)
            h = crelu(z)
    return h[0] if squeeze else h


def mlp_backward(
    params: MlpParams,
    cache: ForwardCache,
    grad_out: np.ndarray,
    param_grads: bool = True,
    input_grad: bool = False,
) -> tuple[GradientSet | None, np.ndarray | None]:
    """Reverse-mode pass from ``d loss / d output``.

    Returns ``(gradients, d loss / d input)``; either may be skipped. When a
    shared ``(B, in)`` input fed an ensemble, the input gradient keeps the
    ensemble axis so callers can weight members before summing.
    """
    g = np.asarray(grad_out, dtype=np.float64)
    if cache.squeeze:
        g = g[None, :]
    n = len(params.weights)
    dws: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    dbs: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    grad_in = None
    for l in range(n - 1, -1, -1):
        w = params.weights[l]
        if param_grads:
            dws[l] = np.swapaxes(cache.inputs[l], -1, -2) @ g
            dbs[l] = g.sum(axis=-2)
        if l > 0:
            g = crelu_backward(cache.pre[l - 1], g @ np.swapaxes(w, -1, -2))
        elif input_grad:
            grad_in = g @ np.swapaxes(w, -1, -2)
            if cache.squeeze:
                grad_in = grad_in[0]
    grads = GradientSet(dws, dbs) if param_grads else None
    return grads, grad_in


def mlp_gradient(
    params: MlpParams,
    x: np.ndarray,
    loss: Callable[[np.ndarray], tuple[float, np.ndarray]],
) -> tuple[float, GradientSet]:
    """Value and parameter gradient of ``loss(mlp_forward(params, x))``.

    ``loss`` maps the network output to ``(value, d value / d output)``.
    """
    cache = ForwardCache()
    out = mlp_forward(params, x, cache)
    value, g = loss(out)
    if not np.isfinite(value):
        raise NumericalError(f"non-finite loss {value!r}")
    grads, _ = mlp_backward(params, cache, g)
    if not all(np.isfinite(a).all() for a in grads.arrays()):
        raise NumericalError("non-finite gradient")
    return float(value), grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: MlpParams, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    arrays = params.arrays()
    return AdamState(
        [np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays], 0, beta1, beta2, eps
    )


def adam_step(
    params: MlpParams, grads: GradientSet, state: AdamState, lr: float
) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam descent step. Inputs are not modified."""
    p_arrays, g_arrays = params.arrays(), grads.arrays()
    if len(p_arrays) != len(g_arrays) or any(p.shape != g.shape for p, g in zip(p_arrays, g_arrays)):
        raise ConfigError("gradient shapes do not match parameters")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return MlpParams.from_arrays(new_p), AdamState(new_m, new_v, t, b1, b2, state.eps)
