"""NOMA, SDMA and OMA with a movable surface and with a fixed one, over transmit power.

Writes the usual result files to ``demo_power/`` so they can be plotted with
any tool; the same thing from the shell is

    sixdmm run --experiment power_sweep --trials 3 --out demo_power
"""

from sixdmm import SystemConfig
from sixdmm.harness import ExperimentSpec, run_experiment, write_experiment

config = SystemConfig(N=4, M=8, K=3)
spec = ExperimentSpec("power_sweep", sweep=(1.0, 5.0, 10.0), trials=3, out="demo_power")
out = run_experiment(spec, config)
write_experiment(out, spec.out, config, spec)

table = {(s["scheme"], s["sweep_value"]): s["mean_sum_rate"] for s in out.summary}
values = [str(v) for v in spec.values]
print(f"{'scheme':>10}" + "".join(f"{v + ' mW':>10}" for v in values))
for scheme in spec.scheme_names:
    print(f"{scheme:>10}" + "".join(f"{table[(scheme, v)]:10.4f}" for v in values))
print(f"tables in {spec.out}/")
