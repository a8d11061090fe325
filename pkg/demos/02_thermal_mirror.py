# The mirror alone: thermal and coherent starts at 4.2 K, no pump.
#
# Positive-P averages are normally ordered, so a point-like ensemble still
# reports the zero-point spread A.  A thermal ensemble reports
# sqrt(k_B T / m omega_m^2), and a coherent start keeps its mean oscillation
# while the reservoir slowly widens it.

import math

import numpy as np

from pendular.observables import compute_series
from pendular.params import derive_params, schiller_raw, thermal_sigma_x
from pendular.sde import EnsembleConfig, run_ensemble

p = derive_params(schiller_raw(laser_power=0.0))
dt = 0.01 / p.cavity_decay
print(f"thermal sigma_x at 4.2 K: {thermal_sigma_x(4.2, p):.3e} m")

for start in ("thermal", "coherent"):
    cfg = EnsembleConfig(1600, p.mirror_period, dt, record_stride=600, base_seed=7,
                         initial_state=start, block_size=100)
    s = compute_series(run_ensemble(cfg, p), p, ["mean_x", "sigma_x"])
    print(f"\n{start} start, {cfg.n_trajectories} trajectories")
    print("   t (us)     mean x (m)     sigma_x (m)")
    for t, m, sx in zip(s.times[::4], s["mean_x"][::4], s["sigma_x"][::4]):
        print(f"{t * 1e6:9.2f}  {m: .4e}  {sx: .4e}")

# %% A coherent start has the zero-point spread A at t = 0 and the
# reservoir adds about 4 nbar gamma_m t to V(X_b).
growth = 1 + 4 * p.mean_occupation * p.mirror_damping * p.mirror_period
print(f"\nexpected sigma_x after one period ~ {p.position_scale * math.sqrt(growth):.2e} m")
