# # Desk-scale benchmark: SAC vs REDQ vs DEA
#
# Runs every method on both environments over several seeds and builds the
# report (CSV plus SVG learning curves and kappa trajectories).
#
# The full desk-interactive sweep is 30 runs of 30,000 steps, roughly two hours
# on one core. Pass --quick for a 3,000-step, 2-seed smoke version.
#
#     python demos/desk_benchmark.py --quick --out /tmp/desk

import argparse
from dataclasses import replace
from pathlib import Path

from dea_rl import RunConfig, sweep
from dea_rl.report import build_report

parser = argparse.ArgumentParser()
parser.add_argument("--quick", action="store_true")
parser.add_argument("--regime", default="desk-interactive")
parser.add_argument("--out", default="desk-benchmark")
args = parser.parse_args()

template = RunConfig(regime=args.regime)
seeds = [1, 2, 3, 4, 5]
if args.quick:
    template = replace(template, total_steps=3000, eval_interval=500)
    seeds = [1, 2]

# ## Training
#
# Each run lands in OUT/runs/<env>/<method>/seed_<n>; failures are marked in
# summary.csv and do not stop the rest.

runs = Path(args.out) / "runs"
rows = sweep(template, seeds, envs=["pendulum", "pointreach"], methods=["sac", "redq", "dea"], out_dir=runs)
for env, method, seed, status, final, area in rows:
    print(f"{env:<11} {method:<5} seed {seed}  {status:<6} final {final:8.2f}  aulc {area:8.2f}")

# ## Report
#
# Final return, IQM over seeds and AULC per env and method, plus the average
# rank of each method across environments (1 is best).

report = build_report([runs], Path(args.out) / "report")
print()
for r in report:
    print(f"{r['env']:<11} {r['method']:<5} final {r['final_return']:8.2f}  iqm {r['iqm']:8.2f}  "
          f"aulc {r['aulc']:8.2f}  ranks {r['rank_final']:.2f} / {r['rank_iqm']:.2f} / {r['rank_aulc']:.2f}")
print("\nfigures in", Path(args.out) / "report")
