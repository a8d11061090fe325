# Pumped cavity at 5 mW: quantum noise, correlations and inference.
#
# The phase quadrature Y_a of the intracavity field follows the mirror
# position almost perfectly, so measuring it pins x down far below the
# thermal spread.  A small ensemble (a few seconds) shows the effect; the
# bundled presets run the full-size version through the command line.

import numpy as np

from pendular.io import emit_series
from pendular.observables import compute_series
from pendular.params import derive_params, schiller_raw
from pendular.sde import EnsembleConfig, run_ensemble

p = derive_params(schiller_raw(laser_power=5e-3))
cfg = EnsembleConfig(1600, 1.5 * p.mirror_period, 0.01 / p.cavity_decay, record_stride=200,
                     base_seed=3, initial_state="thermal", block_size=100)
acc = run_ensemble(cfg, p)
s = compute_series(acc, p)
print(f"{acc.count} trajectories kept, {acc.diverged_count} diverged")

cols = ["sigma_x", "V_Xa", "V_Ya", "fano", "C_xYa", "C_xXa", "sigma_inf_x_Ya"]
print("  t (us) " + "".join(f"{c:>15s}" for c in cols))
for i in range(0, len(s), 6):
    print(f"{s.times[i] * 1e6:8.2f} " + "".join(f"{s[c][i]:15.4g}" for c in cols))

late = s.times > 0.5 * p.mirror_period
print(f"\nV(Y_a) exceeds V(X_a) at {np.mean(s['V_Ya'][late] > s['V_Xa'][late]):.0%} of later times")
print(f"inference from Y_a: {np.mean(s['sigma_inf_x_Ya'][late]):.2e} m, "
      f"thermal spread {np.mean(s['sigma_x'][late]):.2e} m")

emit_series(s, "pumped_5mw_demo.csv")
print("series written to pumped_5mw_demo.csv")
