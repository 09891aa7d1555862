"""Evaluation protocol, final return, IQM, AULC and cross-method ranks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .env import Env
from .policy import ActorParams, deterministic_action


@dataclass(frozen=True)
class EvalRecord:
    step: int
    mean_return: float
    std_return: float


def evaluate(actor: ActorParams, env: Env, episodes: int, eval_seed) -> tuple[float, float]:
    """Undiscounted return of the deterministic policy over ``episodes`` resets.

    Start states come from ``eval_seed`` alone, so every checkpoint of a run is
    scored on the same episodes.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rng = np.random.default_rng(eval_seed)
    returns = []
    for _ in range(episodes):
        state, obs = env.reset(rng)
        total, done = 0.0, False
        while not done:
            state, obs, r, done = env.step(state, deterministic_action(actor, obs))
            total += r
        returns.append(total)
    return float(np.mean(returns)), float(np.std(returns))


def iqm(values: Sequence[float]) -> float:
    """Interquartile mean: drop floor(n/4) values from each tail, average the rest."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("iqm of an empty sequence")
    # trim_mean cuts int(0.25 * n) per tail
    return float(stats.trim_mean(values, 0.25))


def aulc(records: Sequence[EvalRecord]) -> float:
    """Mean evaluation return over uniformly spaced checkpoints."""
    if not records:
        raise ValueError("aulc needs at least one evaluation record")
    return float(np.mean([r.mean_return for r in records]))


def final_return(records: Sequence[EvalRecord]) -> float:
    return records[-1].mean_return


def rank_table(
    values: Mapping[str, Mapping[str, float]], higher_is_better: bool = True
) -> dict[str, float]:
    """Average rank per method across envs; ``values[method][env]``.

    Rank 1 is best; ties share the mean of their positions.
    """
    methods = sorted(values)
    if not methods:
        raise ValueError("empty rank table")
    envs = sorted({e for m in methods for e in values[m]})
    missing = [(m, e) for m in methods for e in envs if e not in values[m]]
    if missing:
        raise KeyError("rank table is missing cells: " + ", ".join(f"{m}/{e}" for m, e in missing))
    ranks = np.zeros(len(methods))
    for env in envs:
        col = np.array([values[m][env] for m in methods], dtype=np.float64)
        ranks += stats.rankdata(-col if higher_is_better else col, method="average")
    return {m: float(r / len(envs)) for m, r in zip(methods, ranks)}
