"""How much element mobility matters as users are added.

Compares the fully movable surface with per-element patches, partially
movable surfaces (60% and 30% of elements free) and a fixed half-wavelength
grid that cannot rotate.
"""

from sixdmm import SystemConfig
from sixdmm.harness import ExperimentSpec, run_experiment

config = SystemConfig(N=4, M=9)
values = (2, 3, 4)
spec = ExperimentSpec("user_sweep", sweep=values, trials=3)
out = run_experiment(spec, config)

table = {(s["scheme"], s["sweep_value"]): s["mean_sum_rate"] for s in out.summary}
print(f"{'scheme':>16}" + "".join(f"{'K=' + str(k):>9}" for k in values))
for scheme in spec.scheme_names:
    print(f"{scheme:>16}" + "".join(f"{table[(scheme, str(k))]:9.4f}" for k in values))
