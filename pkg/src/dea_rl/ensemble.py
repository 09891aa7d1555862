"""Critic ensemble, disagreement, aggregation rules and critic training.

Ensemble values are laid out as ``(N, B)``: critic along axis 0, sample along
axis 1. All N critics are stored as one stacked ``MlpParams`` so a single
batched matmul evaluates the whole ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .approx import (
    AdamState,
    ForwardCache,
    MlpParams,
    adam_init,
    adam_step,
    init_mlp,
    mlp_backward,
    mlp_forward,
)
from .errors import ConfigError, NumericalError
from .policy import ActorParams, CriticFn, sample_action
from .replay import Batch

MIN_ALL = "min"
SUBSET_MIN = "subset_min"
MEAN = "mean"
DIRECTIONAL = "directional"


@dataclass(frozen=True)
class AggregationRule:
    kind: str
    m: int = 2

    def __post_init__(self):
        if self.kind not in (MIN_ALL, SUBSET_MIN, MEAN, DIRECTIONAL):
            raise ConfigError(f"unknown aggregation rule {self.kind!r}")

    def check(self, n: int) -> None:
        if n < 1:
            raise ConfigError("ensemble is empty")
        if self.kind == SUBSET_MIN and not 2 <= self.m <= n:
            raise ConfigError(f"subset size m={self.m} needs 2 <= m <= N={n}")
        if self.kind == DIRECTIONAL and n < 2:
            raise ConfigError("directional aggregation needs N >= 2")


@dataclass
class CriticEnsemble:
    active: MlpParams
    target: MlpParams
    adam: AdamState

    @property
    def n(self) -> int:
        return self.active.ensemble_shape[0]


def make_ensemble(rng: np.random.Generator, obs_dim: int, act_dim: int, hidden_sizes, n: int) -> CriticEnsemble:
    if n < 2:
        raise ConfigError("ensemble size must be at least 2")
    active = init_mlp(rng, obs_dim + act_dim, hidden_sizes, 1, ensemble=n)
    return CriticEnsemble(active, active.copy(), adam_init(active))


def _as_matrix(qs) -> tuple[np.ndarray, bool]:
    qs = np.asarray(qs, dtype=np.float64)
    if qs.ndim == 1:
        return qs[:, None], True
    return qs, False


def disagreement(qs) -> np.ndarray | float:
    """Mean pairwise absolute difference over axis 0.

    Evaluated from sorted gaps, ``sum_k k (N - k) gap_k / C(N, 2)``, which is
    nonnegative in floating point and zero exactly when all entries agree.
    """
    q, scalar = _as_matrix(qs)
    n = q.shape[0]
    if n < 2:
        raise ConfigError("disagreement needs at least two estimates")
    gaps = np.diff(np.sort(q, axis=0), axis=0)
    k = np.arange(1, n)
    coef = (k * (n - k)).astype(np.float64) * (2.0 / (n * (n - 1)))
    out = coef @ gaps
    return float(out[0]) if scalar else out


def directional_weights(n: int, kappa: float) -> np.ndarray:
    """Weights on the sorted estimates such that sum w_k q_(k) = mean + kappa * delta."""
    k = np.arange(1, n + 1)
    c = 2.0 * (2 * k - n - 1) / (n * (n - 1))
    return 1.0 / n + kappa * c


def aggregate_with_weights(
    qs, rule: AggregationRule, kappa: float = 0.0, rng: np.random.Generator | None = None
) -> tuple[np.ndarray | float, np.ndarray]:
    """Aggregate over axis 0 and return ``d value / d qs`` alongside.

    ``kappa`` is only read by the directional rule; ``rng`` only by subset-min,
    which draws one subset per call shared by every sample.
    """
    q, scalar = _as_matrix(qs)
    n, b = q.shape
    rule.check(n)
    cols = np.arange(b)
    weights = np.zeros_like(q)
    if rule.kind == MIN_ALL:
        idx = np.argmin(q, axis=0)
        value = q[idx, cols]
        weights[idx, cols] = 1.0
    elif rule.kind == SUBSET_MIN:
        if rng is None:
            raise ConfigError("subset-min aggregation needs an rng")
        subset = np.sort(rng.choice(n, size=rule.m, replace=False))
        idx = subset[np.argmin(q[subset], axis=0)]
        value = q[idx, cols]
        weights[idx, cols] = 1.0
    elif rule.kind == MEAN:
        value = q.mean(axis=0)
        weights[:] = 1.0 / n
    else:
        order = np.argsort(q, axis=0, kind="stable")
        w = directional_weights(n, kappa)
        value = (w[:, None] * np.take_along_axis(q, order, axis=0)).sum(axis=0)
        np.put_along_axis(weights, order, np.broadcast_to(w[:, None], q.shape), axis=0)
    if scalar:
        return float(value[0]), weights[:, 0]
    return value, weights


def aggregate(qs, rule: AggregationRule, kappa: float = 0.0, rng: np.random.Generator | None = None):
    return aggregate_with_weights(qs, rule, kappa, rng)[0]


def q_values(critics: MlpParams, s: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``(N, B)`` values of every critic at the state-action batch."""
    x = np.concatenate([np.atleast_2d(s), np.atleast_2d(a)], axis=-1)
    return mlp_forward(critics, x)[..., 0]


def actor_critic_fn(critics: MlpParams, rule: AggregationRule, kappa: float = 0.0) -> CriticFn:
    """Aggregated value and its action gradient, with critic parameters frozen."""

    def fn(s: np.ndarray, a: np.ndarray):
        obs_dim = s.shape[-1]
        cache = ForwardCache()
        q = mlp_forward(critics, np.concatenate([s, a], axis=-1), cache)[..., 0]
        value, w = aggregate_with_weights(q, rule, kappa)
        _, gin = mlp_backward(critics, cache, w[..., None], param_grads=False, input_grad=True)
        return value, gin[..., obs_dim:].sum(axis=0)

    return fn


@dataclass
class TargetBatchCache:
    """Per-sample pieces of the most recent mini-batch's target and prediction."""

    mean_target: np.ndarray
    delta_bar: np.ndarray
    log_prob_next: np.ndarray
    r: np.ndarray
    mean_active: np.ndarray | None = None
    delta: np.ndarray | None = None


def soft_target(r, next_value, next_log_prob, alpha: float, gamma: float):
    return r + gamma * (next_value - alpha * next_log_prob)


def critic_target(
    batch: Batch,
    target: MlpParams,
    actor: ActorParams,
    alpha: float,
    gamma: float,
    rule: AggregationRule,
    noise_rng: np.random.Generator,
    kappa_bar: float = 0.0,
    subset_rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, TargetBatchCache, np.ndarray]:
    """Soft Bellman target ``r + gamma * (agg(Q_target(s', a')) - alpha log pi(a'|s'))``.

    ``a'`` is drawn fresh from the policy. Returns ``(y, cache, aggregated)``.
    """
    nxt = sample_action(actor, batch.s_next, noise_rng)
    q_next = q_values(target, batch.s_next, nxt.a)
    agg = aggregate(q_next, rule, kappa_bar, subset_rng)
    y = soft_target(batch.r, agg, nxt.log_prob, alpha, gamma)
    if not np.isfinite(y).all():
        raise NumericalError("non-finite critic target")
    cache = TargetBatchCache(
        mean_target=q_next.mean(axis=0),
        delta_bar=disagreement(q_next),
        log_prob_next=nxt.log_prob,
        r=batch.r,
    )
    return y, cache, agg


def critic_loss_and_grad(
    active: MlpParams, batch: Batch, y: np.ndarray
) -> tuple[np.ndarray, MlpParams, np.ndarray]:
    """Per-critic ``mean((Q_i(s, a) - y)^2)``, its parameter gradient and ``q (N, B)``."""
    cache = ForwardCache()
    q = mlp_forward(active, np.concatenate([batch.s, batch.a], axis=-1), cache)[..., 0]
    err = q - y
    losses = np.mean(err * err, axis=1)
    if not np.isfinite(losses).all():
        raise NumericalError("non-finite critic loss")
    grads, _ = mlp_backward(active, cache, (2.0 / len(y)) * err[..., None])
    return losses, grads, q


def critic_update(
    ensemble: CriticEnsemble, batch: Batch, y: np.ndarray, lr: float
) -> tuple[CriticEnsemble, np.ndarray, np.ndarray]:
    """One Adam step per critic toward a shared ``y``.

    Returns ``(ensemble', losses (N,), q (N, B))``, with q evaluated before the step.
    """
    losses, grads, q = critic_loss_and_grad(ensemble.active, batch, y)
    active, adam = adam_step(ensemble.active, grads, ensemble.adam, lr)
    return replace(ensemble, active=active, adam=adam), losses, q


def polyak_update(target: MlpParams, active: MlpParams, tau: float) -> MlpParams:
    if not 0.0 < tau <= 1.0:
        raise ConfigError("tau must lie in (0, 1]")
    return MlpParams.from_arrays(
        [tau * a + (1.0 - tau) * t for t, a in zip(target.arrays(), active.arrays())]
    )
