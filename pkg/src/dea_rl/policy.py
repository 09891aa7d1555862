"""Tanh-squashed Gaussian actor and entropy temperature."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .approx import (
    AdamState,
    ForwardCache,
    GradientSet,
    MlpParams,
    adam_step,
    init_mlp,
    mlp_backward,
    mlp_forward,
)
from .errors import NumericalError

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
TANH_EPS = 1e-6
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# (obs, actions) -> (aggregated Q per sample, d Q / d action per sample)
CriticFn = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

ActorParams = MlpParams


def init_actor(rng: np.random.Generator, obs_dim: int, act_dim: int, hidden_sizes) -> ActorParams:
    """Trunk plus a final layer whose outputs split into mean and log-std heads."""
    return init_mlp(rng, obs_dim, hidden_sizes, 2 * act_dim)


class PolicySample(NamedTuple):
    z: np.ndarray
    a: np.ndarray
    log_prob: np.ndarray
    mu: np.ndarray
    log_std: np.ndarray
    xi: np.ndarray


def _heads(actor: ActorParams, obs: np.ndarray, cache: ForwardCache | None = None):
    out = mlp_forward(actor, obs, cache)
    act_dim = out.shape[-1] // 2
    raw_log_std = out[..., act_dim:]
    return out[..., :act_dim], raw_log_std, np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)


def squashed_log_prob(xi: np.ndarray, log_std: np.ndarray, a: np.ndarray) -> np.ndarray:
    """log pi(a|s) of a = tanh(mu + sigma * xi), summed over action dims."""
    per_dim = -0.5 * xi**2 - log_std - _HALF_LOG_2PI - np.log(1.0 - a**2 + TANH_EPS)
    return per_dim.sum(axis=-1)


def _reparam(mu, log_std, xi) -> PolicySample:
    z = mu + np.exp(log_std) * xi
    a = np.tanh(z)
    return PolicySample(z, a, squashed_log_prob(xi, log_std, a), mu, log_std, xi)


def sample_action(actor: ActorParams, obs: np.ndarray, rng: np.random.Generator) -> PolicySample:
    mu, _, log_std = _heads(actor, obs)
    return _reparam(mu, log_std, rng.standard_normal(mu.shape))


def sample_with_noise(actor: ActorParams, obs: np.ndarray, xi: np.ndarray) -> PolicySample:
    mu, _, log_std = _heads(actor, obs)
    return _reparam(mu, log_std, np.asarray(xi, dtype=np.float64))


def deterministic_action(actor: ActorParams, obs: np.ndarray) -> np.ndarray:
    mu, _, _ = _heads(actor, obs)
    return np.tanh(mu)


def actor_loss_and_grad(
    actor: ActorParams, obs: np.ndarray, xi: np.ndarray, critic: CriticFn, alpha: float
) -> tuple[float, GradientSet, PolicySample, np.ndarray]:
    """Loss ``mean(alpha * log pi - Q)`` and its gradient for fixed noise ``xi``.

    Critic parameters are constants; only the action path carries gradient.
    Returns ``(loss, grads, sample, q)``.
    """
    cache = ForwardCache()
    mu, raw_log_std, log_std = _heads(actor, obs, cache)
    sample = _reparam(mu, log_std, xi)
    a = sample.a
    q, dq_da = critic(obs, a)
    batch = q.shape[0]
    loss = float(np.mean(alpha * sample.log_prob - q))
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite actor loss {loss!r}")

    one_minus = 1.0 - a * a
    d_z = (alpha / batch) * 2.0 * a * one_minus / (one_minus + TANH_EPS) - (dq_da / batch) * one_minus
    d_mu = d_z
    d_log_std = d_z * np.exp(log_std) * xi - alpha / batch
    inside = (raw_log_std >= LOG_STD_MIN) & (raw_log_std <= LOG_STD_MAX)
    grads, _ = mlp_backward(actor, cache, np.concatenate([d_mu, d_log_std * inside], axis=-1))
    return loss, grads, sample, q


def actor_update(
    actor: ActorParams,
    adam: AdamState,
    obs: np.ndarray,
    critic: CriticFn,
    alpha: float,
    lr: float,
    rng: np.random.Generator,
) -> tuple[ActorParams, AdamState, PolicySample, np.ndarray]:
    """One Adam step ascending ``mean(Q(s, a) - alpha * log pi(a|s))``."""
    mu_shape = (obs.shape[0], actor.out_dim // 2)
    xi = rng.standard_normal(mu_shape)
    _, grads, sample, q = actor_loss_and_grad(actor, obs, xi, critic, alpha)
    actor, adam = adam_step(actor, grads, adam, lr)
    return actor, adam, sample, q


@dataclass(frozen=True)
class AlphaState:
    log_alpha: float
    target_entropy: float
    lr: float

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @classmethod
    def create(cls, alpha_init: float, target_entropy: float, lr: float) -> "AlphaState":
        return cls(math.log(alpha_init), target_entropy, lr)


def alpha_update(state: AlphaState, log_probs: np.ndarray) -> AlphaState:
    """Gradient descent on J = log(alpha) * mean(-log pi - H_target), in log space.

    Entropy below target raises alpha, entropy above target lowers it.
    """
    grad = float(np.mean(-np.asarray(log_probs) - state.target_entropy))
    return replace(state, log_alpha=state.log_alpha - state.lr * grad)
