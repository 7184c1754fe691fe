"""Convergence of the cross-entropy search, with a GA for comparison.

Runs both optimizers on a handful of channel draws and prints the best
fitness every few iterations. The full-size setting (N = M = 16, K = 4,
I = 1000) works too but takes minutes per run; the defaults here are small.
"""

import numpy as np

from sixdmm import SystemConfig
from sixdmm.harness import ExperimentSpec, run_experiment

config = SystemConfig(N=4, M=8, K=3)
spec = ExperimentSpec("convergence", sweep=("300:0.2", "300:0.6"), trials=3,
                      schemes=("6dmm-noma", "ga-noma"))
out = run_experiment(spec, config)

# history rows: scheme, sweep value, trial, t, best, iter_best, mean, penalty, clamped
curves = {}
for scheme, value, trial, t, best, *_ in out.history:
    curves.setdefault((scheme, value), {}).setdefault(t, []).append(best)

for (scheme, value), by_t in curves.items():
    ts = sorted(by_t)
    print(f"{scheme} I:rho={value}")
    for t in ts[::5] + ts[-1:]:
        print(f"  t={t:3d}  mean best={np.mean(by_t[t]):.4f}  over {len(by_t[t])} runs")

# note that runs stop at different t, so late points average fewer runs
for s in out.summary:
    print(f"{s['scheme']:>10} {s['sweep_value']:>8} final {s['mean_sum_rate']:.4f}"
          f" +- {s['std_error']:.4f}")
