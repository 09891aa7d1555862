"""One test per acceptance criterion; each records a PASS/FAIL line.

Criteria 8 and 9 need the full desk-interactive sweep (30 runs of 30k steps,
roughly two hours on one core). ``desk_runs`` caches it keyed by configuration
and package source, so reruns of an unchanged package reuse the runs.
"""

import csv
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from desk_runs import SEEDS, desk_sweep
from dea_rl.approx import init_mlp, mlp_forward, mlp_gradient
from dea_rl.config import RunConfig
from dea_rl.dea import kappa_bar_grad, kappa_bar_loss, kappa_grad, kappa_loss, residual
from dea_rl.ensemble import (
    DIRECTIONAL,
    MEAN,
    MIN_ALL,
    AggregationRule,
    TargetBatchCache,
    aggregate,
    disagreement,
    make_ensemble,
    q_values,
)
from dea_rl.env import make_env
from dea_rl.metrics import iqm
from dea_rl.policy import AlphaState, alpha_update, init_actor
from dea_rl.replay import ReplayBuffer, Transition
from dea_rl.report import collect_runs, read_kappa, summarize
from dea_rl.trainer import fit_frozen_buffer, train
from oracles import central_difference, max_rel_err


def record(number, ok, text):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_two_critic_degenerate_cases():
    start = time.perf_counter()
    q = np.random.default_rng(1).normal(scale=10.0, size=(2, 10_000))
    d = AggregationRule(DIRECTIONAL)
    err_min = np.abs(aggregate(q, d, -0.5) - aggregate(q, AggregationRule(MIN_ALL))).max()
    err_mean = np.abs(aggregate(q, d, 0.0) - aggregate(q, AggregationRule(MEAN))).max()
    elapsed = time.perf_counter() - start
    ok = err_min < 1e-12 and err_mean < 1e-12 and elapsed < 1.0
    record(1, ok, f"max |dir(-0.5) - min| = {err_min:.1e}, max |dir(0) - mean| = {err_mean:.1e}, {elapsed:.3f} s")


def test_criterion_02_sign_gradients_match_weighted_losses():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, h = 0.0, 1e-6
    for _ in range(100):
        b = 64
        cache = TargetBatchCache(
            mean_target=rng.normal(scale=5.0, size=b),
            delta_bar=rng.uniform(0.05, 3.0, size=b),
            log_prob_next=rng.normal(size=b),
            r=rng.uniform(0.0, 1.0, size=b),
            mean_active=rng.normal(scale=5.0, size=b),
            delta=rng.uniform(0.05, 3.0, size=b),
        )
        kb, k, gamma, alpha = rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95), 0.99, rng.uniform(0.0, 0.5)
        e = residual(cache, kb, k, gamma, alpha)
        assert np.abs(e).min() > 1e-3  # no residual sits at the kink
        fd_bar = (kappa_bar_loss(cache, kb + h, k, gamma, alpha) - kappa_bar_loss(cache, kb - h, k, gamma, alpha)) / (2 * h)
        fd = (kappa_loss(cache, kb, k + h, gamma, alpha) - kappa_loss(cache, kb, k - h, gamma, alpha)) / (2 * h)
        for numeric, closed in ((fd_bar, kappa_bar_grad(e, gamma)), (fd, kappa_grad(e))):
            worst = max(worst, abs(numeric - closed) / max(abs(closed), 1e-12) if closed else abs(numeric))
    elapsed = time.perf_counter() - start
    record(2, worst < 1e-4 and elapsed < 5.0, f"max relative error {worst:.1e} over 100 batches, {elapsed:.2f} s")


def test_criterion_03_disagreement_axioms():
    rng = np.random.default_rng(3)
    worst = {"nonneg": 0.0, "shift": 0.0, "scale": 0.0}
    zero_iff_equal = True
    for i in range(10_000):
        n = int(rng.integers(2, 11))
        q = np.full(n, rng.normal()) if i % 10 == 0 else rng.normal(scale=3.0, size=n)
        c = rng.uniform(-10.0, 10.0)
        d = disagreement(q)
        worst["nonneg"] = max(worst["nonneg"], -d)
        worst["shift"] = max(worst["shift"], abs(disagreement(q + c) - d))
        worst["scale"] = max(worst["scale"], abs(disagreement(c * q) - abs(c) * d))
        zero_iff_equal &= (d == 0.0) == bool(np.all(q == q[0]))
    ok = worst["nonneg"] <= 0.0 and worst["shift"] < 1e-12 and worst["scale"] < 1e-12 and zero_iff_equal
    record(3, ok, f"min delta >= 0, shift err {worst['shift']:.1e}, scale err {worst['scale']:.1e}, "
                  f"zero iff equal: {zero_iff_equal}")


def test_criterion_04_network_gradients():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        in_dim, out_dim = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        hidden = [int(h) for h in rng.integers(1, 6, size=rng.integers(1, 4))]
        params = init_mlp(rng, in_dim, hidden, out_dim)
        x = rng.normal(size=(6, in_dim))
        y = rng.normal(size=(6, out_dim))

        def loss(out):
            d = out - y
            return float(np.mean(d * d)), 2 * d / d.size

        _, grads = mlp_gradient(params, x, loss)
        numeric = central_difference(lambda: loss(mlp_forward(params, x))[0], params.arrays())
        worst = max(worst, max(max_rel_err(g, n) for g, n in zip(grads.arrays(), numeric)))
    record(4, worst < 1e-4, f"max relative error {worst:.1e} over 20 random CReLU networks")


def test_criterion_05_accounting_and_determinism(tmp_path):
    cfg = RunConfig(regime="desk-interactive", total_steps=3000, warmup_steps=1000, seed=5)
    times, arts = [], []
    for name in ("a", "b"):
        start = time.perf_counter()
        arts.append(train(RunConfig(**{**cfg.to_dict(), "out_dir": str(tmp_path / name)})))
        times.append(time.perf_counter() - start)
    c = arts[0].counters
    utd = cfg.resolved().utd
    counts_ok = (c["critic_updates"] == 2000 * utd and c["actor_updates"] == c["alpha_updates"] == 2000
                 and c["kappa_bar_updates"] == c["kappa_updates"] == 2000)
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("metrics.csv", "kappa.csv"))
    ok = counts_ok and same and max(times) < 60.0
    record(5, ok, f"critic {c['critic_updates']}, actor {c['actor_updates']}, alpha {c['alpha_updates']}, "
                  f"kappa {c['kappa_bar_updates']}/{c['kappa_updates']}; identical CSVs: {same}; "
                  f"{max(times):.1f} s per run")


def test_criterion_06_sac_equals_frozen_dea():
    def recorder(log):
        return lambda kind, step, payload: log.append(
            (kind, step, payload["aggregate"].tobytes(), payload.get("y", payload.get("log_prob")).tobytes())
        )

    sac, dea = [], []
    common = dict(regime="desk-interactive", total_steps=2000, warmup_steps=1000, seed=6)
    train(RunConfig(method="sac", **common), probe=recorder(sac), write=False)
    train(RunConfig(method="dea", kappa_bar_init=-0.5, kappa_init=-0.5, freeze_kappa_bar=True,
                    freeze_kappa=True, **common), probe=recorder(dea), write=False)
    mismatches = sum(a != b for a, b in zip(sac, dea))
    ok = len(sac) == len(dea) == 2000 and mismatches == 0
    record(6, ok, f"{len(sac)} target and actor aggregates compared, {mismatches} differ")


def test_criterion_07_gamma_zero_regression():
    rng = np.random.default_rng(7)
    env = make_env("pendulum")
    buffer = ReplayBuffer(8, env.spec.obs_dim, env.spec.act_dim)
    state, obs = env.reset(rng)
    for _ in range(8):
        a = rng.uniform(-1.0, 1.0, size=1)
        state, nxt, r, _ = env.step(state, a)
        buffer.push(Transition(obs, a, r, nxt))
        obs = nxt
    critics = make_ensemble(rng, 3, 1, [64, 64], 2)
    actor = init_actor(rng, 3, 1, [64, 64])
    critics = fit_frozen_buffer(critics, actor, buffer, 10_000, None, gamma=0.0, lr=3e-4, alpha=0.2)
    q = q_values(critics.active, buffer.s, buffer.a).mean(axis=0)
    err = float(np.abs(q - buffer.r).max())
    record(7, err < 1e-3, f"max |mean Q - r| = {err:.2e} over 8 buffered pairs after 10^4 full-buffer steps")


@pytest.fixture(scope="module")
def interactive_sweep():
    return desk_sweep("desk-interactive")


def test_criterion_08_directional_drift(interactive_sweep):
    fractions, finals = [], []
    for seed in SEEDS:
        rows = read_kappa(interactive_sweep / "pendulum" / "dea" / f"seed_{seed}" / "kappa.csv")
        fractions.append(float(np.mean(rows[:, 1] < 0)))
        finals.append(float(rows[-1, 2]))
    n_up = sum(k >= 0.0 for k in finals)
    ok = min(fractions) >= 0.8 and n_up >= 4
    record(8, ok, "kappa_bar < 0 on " + ", ".join(f"{f:.0%}" for f in fractions)
           + " of steps; final kappa " + ", ".join(f"{k:+.4f}" for k in finals) + f" ({n_up}/5 >= 0)")


def mean_rank(rows, method):
    row = next(r for r in rows if r["method"] == method)
    return (row["rank_final"] + row["rank_iqm"] + row["rank_aulc"]) / 3


def test_criterion_09_desk_learning(interactive_sweep):
    with open(interactive_sweep / "summary.csv", newline="") as f:
        summary = [r for r in csv.DictReader(f) if r["env"] == "pendulum"]
    finals = {m: [float(r["final_return"]) for r in summary if r["method"] == m and r["status"] == "ok"]
              for m in ("sac", "dea")}
    threshold = 0.9 * float(np.mean(finals["sac"]))
    dea_final = float(np.mean(finals["dea"]))
    rows = summarize(collect_runs([interactive_sweep]))
    ranks = {m: mean_rank(rows, m) for m in ("sac", "redq", "dea")}
    rank_ok = ranks["dea"] <= ranks["sac"] and ranks["dea"] <= ranks["redq"]
    ok = dea_final >= threshold and len(finals["dea"]) == 5 and rank_ok
    record(9, ok, f"DEA pendulum final {dea_final:.2f} vs X = 0.9 x SAC = {threshold:.2f} "
                  f"(IQM {iqm(finals['dea']):.2f}); desk-interactive mean ranks "
                  + ", ".join(f"{m} {r:.2f}" for m, r in ranks.items())
                  + "; desk-sample-efficient not run (about 50 min per run on one core)")


def test_criterion_10_alpha_direction_law():
    state = AlphaState.create(0.2, -0.5, 3e-4)
    h = state.target_entropy
    rng = np.random.default_rng(10)
    worst = 0.0
    for shift, sign in ((-1.0, +1.0), (+1.0, -1.0)):
        for _ in range(100):
            noise = rng.normal(size=32)
            log_probs = -(h + shift) + (noise - noise.mean())
            step = alpha_update(state, log_probs).log_alpha - state.log_alpha
            worst = max(worst, abs(step - sign * state.lr))
    record(10, worst < 1e-12, f"max |delta log_alpha -/+ lr| = {worst:.1e} for entropy 1 nat below/above target")
