"""Learnable directional aggregation parameters.

``kappa_bar`` scales target-ensemble disagreement inside the critic target and
``kappa`` scales active-ensemble disagreement in the actor's value. Both live in
(-1, 1) as ``tanh`` of an unconstrained raw scalar and move by the sign of the
Bellman residual only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ensemble import TargetBatchCache

DENOM_FLOOR = 1e-8


@dataclass(frozen=True)
class DirectionalParams:
    u_bar: float
    u: float
    lr_bar: float = 3e-4
    lr: float = 3e-4

    @classmethod
    def create(cls, kappa_bar: float = -0.8, kappa: float = 0.0, lr_bar: float = 3e-4, lr: float = 3e-4):
        if not (-1.0 < kappa_bar < 1.0 and -1.0 < kappa < 1.0):
            raise ValueError("initial kappa values must lie strictly inside (-1, 1)")
        return cls(float(np.arctanh(kappa_bar)), float(np.arctanh(kappa)), lr_bar, lr)

    @property
    def kappa_bar(self) -> float:
        return float(np.tanh(self.u_bar))

    @property
    def kappa(self) -> float:
        return float(np.tanh(self.u))


def residual(cache: TargetBatchCache, kappa_bar: float, kappa: float, gamma: float, alpha: float) -> np.ndarray:
    """``Q_kappa(s, a) - y_kappa_bar`` rebuilt from cached ensemble statistics."""
    predicted = cache.mean_active + kappa * cache.delta
    target = cache.r + gamma * (cache.mean_target + kappa_bar * cache.delta_bar - alpha * cache.log_prob_next)
    return predicted - target


def kappa_bar_grad(e: np.ndarray, gamma: float) -> float:
    return -gamma * float(np.mean(np.sign(e)))


def kappa_grad(e: np.ndarray) -> float:
    return float(np.mean(np.sign(e)))


def kappa_bar_update(params: DirectionalParams, e: np.ndarray, gamma: float) -> DirectionalParams:
    """Descent on the target-disagreement-weighted absolute residual, via the raw scalar."""
    g = kappa_bar_grad(e, gamma) * (1.0 - params.kappa_bar**2)
    return replace(params, u_bar=params.u_bar - params.lr_bar * g)


def kappa_update(params: DirectionalParams, e: np.ndarray) -> DirectionalParams:
    """Descent on the active-disagreement-weighted absolute residual.

    ``e`` must already reflect the freshly updated ``kappa_bar``.
    """
    g = kappa_grad(e) * (1.0 - params.kappa**2)
    return replace(params, u=params.u - params.lr * g)


def update_both(
    params: DirectionalParams,
    cache: TargetBatchCache,
    gamma: float,
    alpha: float,
    freeze_kappa_bar: bool = False,
    freeze_kappa: bool = False,
) -> DirectionalParams:
    """kappa_bar first, then kappa against residuals recomputed with the new kappa_bar."""
    if not freeze_kappa_bar:
        e = residual(cache, params.kappa_bar, params.kappa, gamma, alpha)
        params = kappa_bar_update(params, e, gamma)
    if not freeze_kappa:
        e = residual(cache, params.kappa_bar, params.kappa, gamma, alpha)
        params = kappa_update(params, e)
    return params


def kappa_bar_loss(cache: TargetBatchCache, kappa_bar: float, kappa: float, gamma: float, alpha: float) -> float:
    """Mean ``|residual| / delta_bar(s', a')``; for logging and gradient checks."""
    e = residual(cache, kappa_bar, kappa, gamma, alpha)
    return float(np.mean(np.abs(e) / np.maximum(cache.delta_bar, DENOM_FLOOR)))


def kappa_loss(cache: TargetBatchCache, kappa_bar: float, kappa: float, gamma: float, alpha: float) -> float:
    """Mean ``|residual| / delta(s, a)``; for logging and gradient checks."""
    e = residual(cache, kappa_bar, kappa, gamma, alpha)
    return float(np.mean(np.abs(e) / np.maximum(cache.delta, DENOM_FLOOR)))
