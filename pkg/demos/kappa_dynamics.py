# # How the directional parameters move
#
# kappa_bar shapes the critic target, kappa shapes the value the actor climbs.
# Both step by the sign of the Bellman residual only. This script trains DEA on
# the pendulum for a few thousand steps and prints the two parameters together
# with the ensemble disagreement they multiply.
#
# Runtime: about 30 seconds on one core.

import numpy as np

from dea_rl import RunConfig, train
from dea_rl.dea import DirectionalParams, update_both
from dea_rl.ensemble import TargetBatchCache

# ## A single update by hand
#
# When every residual is negative (the actor-side value sits below the target),
# kappa_bar goes down and kappa goes up.

cache = TargetBatchCache(
    mean_target=np.array([3.0, 2.5]),
    delta_bar=np.array([0.4, 0.2]),
    log_prob_next=np.array([-1.0, -0.5]),
    r=np.array([0.9, 0.8]),
    mean_active=np.array([1.0, 1.2]),
    delta=np.array([0.3, 0.1]),
)
before = DirectionalParams.create(lr_bar=0.05, lr=0.05)
after = update_both(before, cache, gamma=0.99, alpha=0.2)
print(f"kappa_bar {before.kappa_bar:+.4f} -> {after.kappa_bar:+.4f}")
print(f"kappa     {before.kappa:+.4f} -> {after.kappa:+.4f}")

# ## Inside a training run

cfg = RunConfig(env="pendulum", method="dea", total_steps=5000, eval_interval=1000, seed=3)
art = train(cfg, write=False)
rows = np.array(art.kappa_rows)

print(f"\n{'step':>6} {'kappa_bar':>10} {'kappa':>9} {'delta':>8} {'delta_bar':>9}")
for step, kb, k, d, db in rows[:: len(rows) // 8]:
    print(f"{int(step):>6} {kb:>+10.5f} {k:>+9.5f} {d:>8.4f} {db:>9.4f}")

print("\nfraction of steps with kappa_bar < 0:", np.mean(rows[:, 1] < 0))
print("evaluation returns:", [round(r.mean_return, 1) for r in art.records])
