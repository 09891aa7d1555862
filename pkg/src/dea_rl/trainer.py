"""Training loop for SAC, REDQ and DEA, plus multi-seed sweeps.

Random streams are derived from the run seed with fixed offsets so that no
two consumers share a generator::

    STREAM_INIT    network initialisation
    STREAM_ENV     environment resets
    STREAM_ACTION  exploration (warmup uniform actions and policy samples)
    STREAM_BATCH   replay mini-batch indices
    STREAM_SUBSET  REDQ critic subsets
    STREAM_NOISE   reparameterisation noise inside updates
    STREAM_EVAL    evaluation start states
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import dea
from ._alloc import tune_allocator
from .approx import adam_init
from .config import RunConfig
from .ensemble import (
    DIRECTIONAL,
    MEAN,
    MIN_ALL,
    SUBSET_MIN,
    AggregationRule,
    CriticEnsemble,
    actor_critic_fn,
    critic_target,
    critic_update,
    disagreement,
    make_ensemble,
    polyak_update,
)
from .env import make_env
from .errors import ConfigError, NumericalError
from .metrics import EvalRecord, aulc, evaluate, final_return
from .policy import AlphaState, actor_update, alpha_update, init_actor, sample_action
from .replay import ReplayBuffer, Transition

log = logging.getLogger(__name__)

STREAM_INIT = 0
STREAM_ENV = 1
STREAM_ACTION = 2
STREAM_BATCH = 3
STREAM_SUBSET = 4
STREAM_NOISE = 5
STREAM_EVAL = 6

METRICS_HEADER = ["step", "eval_return_mean", "eval_return_std"]
KAPPA_HEADER = ["step", "kappa_bar", "kappa", "delta_mean", "delta_bar_mean"]
SUMMARY_HEADER = ["env", "method", "seed", "status", "final_return", "aulc"]


@dataclass(frozen=True)
class Method:
    name: str
    target_rule: AggregationRule
    actor_rule: AggregationRule

    @property
    def learns_kappa(self) -> bool:
        return self.target_rule.kind == DIRECTIONAL or self.actor_rule.kind == DIRECTIONAL


METHOD_RULES = {
    "sac": Method("sac", AggregationRule(MIN_ALL), AggregationRule(MIN_ALL)),
    "redq": Method("redq", AggregationRule(SUBSET_MIN, 2), AggregationRule(MEAN)),
    "dea": Method("dea", AggregationRule(DIRECTIONAL), AggregationRule(DIRECTIONAL)),
}


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def fmt(x: float) -> str:
    return f"{x:.9g}"


@dataclass
class RunArtifacts:
    config: RunConfig
    records: list[EvalRecord] = field(default_factory=list)
    kappa_rows: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)
    final_alpha: float = math.nan
    final_kappa_bar: float = math.nan
    final_kappa: float = math.nan
    actor: object = None
    critics: CriticEnsemble | None = None
    out_dir: Path | None = None

    @property
    def final_return(self) -> float:
        return final_return(self.records) if self.records else math.nan

    @property
    def aulc(self) -> float:
        return aulc(self.records) if self.records else math.nan


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_artifacts(art: RunArtifacts, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(
        out_dir / "metrics.csv",
        METRICS_HEADER,
        ([r.step, fmt(r.mean_return), fmt(r.std_return)] for r in art.records),
    )
    if art.config.method == "dea":
        write_csv(
            out_dir / "kappa.csv",
            KAPPA_HEADER,
            ([t, fmt(kb), fmt(k), fmt(d), fmt(db)] for t, kb, k, d, db in art.kappa_rows),
        )
    (out_dir / "run.json").write_text(json.dumps(art.config.to_dict(), indent=2, sort_keys=True) + "\n")
    art.out_dir = out_dir


# probe(kind, step, payload) sees every target and actor aggregate; used by tests.
Probe = Callable[[str, int, dict], None]


def train(
    config: RunConfig,
    method: Method | None = None,
    probe: Probe | None = None,
    write: bool = True,
) -> RunArtifacts:
    """Run one full training loop.

    Each environment step after warmup performs ``utd`` critic updates with
    Polyak averaging, then (DEA) the two directional parameter updates on the
    last mini-batch, one actor update and one temperature update. ``method``
    overrides the aggregation rules implied by ``config.method``.
    """
    tune_allocator()
    cfg = config.resolved()
    method = method or METHOD_RULES[cfg.method]
    env = make_env(cfg.env)
    spec = env.spec
    n = cfg.ensemble_size
    for rule in (method.target_rule, method.actor_rule):
        rule.check(n)
    hidden = [cfg.hidden_size] * cfg.hidden_layers

    init_rng = rng_for(cfg.seed, STREAM_INIT)
    env_rng = rng_for(cfg.seed, STREAM_ENV)
    action_rng = rng_for(cfg.seed, STREAM_ACTION)
    batch_rng = rng_for(cfg.seed, STREAM_BATCH)
    subset_rng = rng_for(cfg.seed, STREAM_SUBSET)
    noise_rng = rng_for(cfg.seed, STREAM_NOISE)
    eval_seed = [cfg.seed, STREAM_EVAL]

    critics: CriticEnsemble = make_ensemble(init_rng, spec.obs_dim, spec.act_dim, hidden, n)
    actor = init_actor(init_rng, spec.obs_dim, spec.act_dim, hidden)
    actor_adam = adam_init(actor)
    alpha = AlphaState.create(cfg.alpha_init, -cfg.h_target_scale * spec.act_dim, cfg.lr)
    kp = dea.DirectionalParams.create(cfg.kappa_bar_init, cfg.kappa_init, cfg.lr_kappa_bar, cfg.lr_kappa)
    buffer = ReplayBuffer(min(cfg.buffer_size, cfg.total_steps), spec.obs_dim, spec.act_dim)

    art = RunArtifacts(cfg)
    counters = dict(env_steps=0, critic_updates=0, actor_updates=0, alpha_updates=0,
                    kappa_bar_updates=0, kappa_updates=0)
    art.counters = counters
    out_dir = Path(cfg.out_dir) if (write and cfg.out_dir) else None

    state, obs = env.reset(env_rng)
    t = 0
    try:
        for t in range(1, cfg.total_steps + 1):
            if t <= cfg.warmup_steps:
                action = action_rng.uniform(-1.0, 1.0, size=spec.act_dim)
            else:
                action = sample_action(actor, obs, action_rng).a
            nxt_state, nxt_obs, r, truncated = env.step(state, action)
            buffer.push(Transition(obs, action, r, nxt_obs))
            counters["env_steps"] += 1
            if truncated:
                state, obs = env.reset(env_rng)
            else:
                state, obs = nxt_state, nxt_obs

            if t > cfg.warmup_steps:
                a_val = alpha.alpha
                for _ in range(cfg.utd):
                    batch = buffer.sample(cfg.batch_size, batch_rng)
                    y, cache, agg = critic_target(
                        batch, critics.target, actor, a_val, cfg.gamma, method.target_rule,
                        noise_rng, kp.kappa_bar, subset_rng,
                    )
                    critics, _, q = critic_update(critics, batch, y, cfg.lr)
                    critics.target = polyak_update(critics.target, critics.active, cfg.tau)
                    counters["critic_updates"] += 1
                    if probe is not None:
                        probe("target", t, {"y": y, "aggregate": agg, "critics": critics})
                cache.mean_active = q.mean(axis=0)
                cache.delta = disagreement(q)

                if method.learns_kappa:
                    if not cfg.freeze_kappa_bar:
                        counters["kappa_bar_updates"] += 1
                    if not cfg.freeze_kappa:
                        counters["kappa_updates"] += 1
                    kp = dea.update_both(kp, cache, cfg.gamma, a_val, cfg.freeze_kappa_bar, cfg.freeze_kappa)

                critic_fn = actor_critic_fn(critics.active, method.actor_rule, kp.kappa)
                actor, actor_adam, sample, q_actor = actor_update(
                    actor, actor_adam, batch.s, critic_fn, a_val, cfg.lr, noise_rng
                )
                counters["actor_updates"] += 1
                if probe is not None:
                    probe("actor", t, {"aggregate": q_actor, "log_prob": sample.log_prob})
                alpha = alpha_update(alpha, sample.log_prob)
                counters["alpha_updates"] += 1
                if not math.isfinite(alpha.log_alpha):
                    raise NumericalError("non-finite entropy temperature")
                if cfg.method == "dea":
                    art.kappa_rows.append(
                        (t, kp.kappa_bar, kp.kappa, float(np.mean(cache.delta)), float(np.mean(cache.delta_bar)))
                    )

            if t % cfg.eval_interval == 0:
                mean, std = evaluate(actor, env, cfg.eval_episodes, eval_seed)
                if not math.isfinite(mean):
                    raise NumericalError("non-finite evaluation return")
                art.records.append(EvalRecord(t, mean, std))
                log.info("%s/%s seed %d step %d return %.2f", cfg.env, cfg.method, cfg.seed, t, mean)
    except NumericalError as exc:
        if out_dir is not None:
            write_artifacts(art, out_dir)
        raise NumericalError(str(exc), step=t) from exc
    except FloatingPointError as exc:
        raise NumericalError(str(exc), step=t) from exc

    art.final_alpha = alpha.alpha
    art.final_kappa_bar = kp.kappa_bar
    art.final_kappa = kp.kappa
    art.actor = actor
    art.critics = critics
    if out_dir is not None:
        write_artifacts(art, out_dir)
    return art


def fit_frozen_buffer(
    critics: CriticEnsemble,
    actor,
    buffer: ReplayBuffer,
    steps: int,
    batch_size: int | None,
    gamma: float,
    lr: float,
    tau: float = 5e-3,
    alpha: float = 0.0,
    rule: AggregationRule = AggregationRule(MIN_ALL),
    seed: int = 0,
) -> CriticEnsemble:
    """Critic-only regression on a fixed buffer with a fixed actor.

    ``batch_size=None`` uses the whole buffer every step (deterministic gradients).
    """
    batch_rng = rng_for(seed, STREAM_BATCH)
    noise_rng = rng_for(seed, STREAM_NOISE)
    subset_rng = rng_for(seed, STREAM_SUBSET)
    everything = buffer.gather(np.arange(len(buffer)))
    for _ in range(steps):
        batch = everything if batch_size is None else buffer.sample(batch_size, batch_rng)
        y, _, _ = critic_target(batch, critics.target, actor, alpha, gamma, rule, noise_rng, 0.0, subset_rng)
        critics, _, _ = critic_update(critics, batch, y, lr)
        critics.target = polyak_update(critics.target, critics.active, tau)
    return critics


def _run_one(config: RunConfig) -> tuple[str, str, int, str, float, float]:
    try:
        art = train(config)
    except (NumericalError, ConfigError, FloatingPointError) as exc:
        log.warning("%s/%s seed %d failed: %s", config.env, config.method, config.seed, exc)
        return (config.env, config.method, config.seed, "failed", math.nan, math.nan)
    return (config.env, config.method, config.seed, "ok", art.final_return, art.aulc)


def sweep(
    template: RunConfig,
    seeds: Sequence[int],
    envs: Sequence[str] | None = None,
    methods: Sequence[str] | None = None,
    out_dir: str | Path | None = None,
    jobs: int = 1,
) -> list[tuple[str, str, int, str, float, float]]:
    """Independent runs over env x method x seed; one summary row per run.

    With an ``out_dir``, run ``(env, method, seed)`` writes to
    ``out_dir/env/method/seed_<seed>`` and the rows land in ``summary.csv``.
    A failed run is reported in its row and does not stop the others.
    """
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")
    envs = list(envs or [template.env])
    methods = list(methods or [template.method])
    configs = []
    for env in envs:
        for method in methods:
            for seed in seeds:
                sub = None
                if out_dir is not None:
                    sub = str(Path(out_dir) / env / method / f"seed_{seed}")
                configs.append(replace(template, env=env, method=method, seed=seed, out_dir=sub))
    for cfg in configs:
        cfg.resolved()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, configs))
    else:
        rows = [_run_one(cfg) for cfg in configs]
    if out_dir is not None:
        write_summary(Path(out_dir) / "summary.csv", rows)
    return rows


def write_summary(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(rows, key=lambda r: (r[0], r[1], r[2]))
    write_csv(
        path,
        SUMMARY_HEADER,
        (
            [env, method, seed, status, "" if status != "ok" else fmt(fr), "" if status != "ok" else fmt(au)]
            for env, method, seed, status, fr, au in ordered
        ),
    )
