# Mean-field picture of the pendular cavity.
#
# The published bench-top parameters: a 10 mg mirror on a 26 kHz suspension
# closing a 1 cm cavity of finesse 15000, pumped at 1064 nm.

import math

import numpy as np

from pendular.classical import (
    ClassicalState,
    bistability_analysis,
    integrate_classical,
    pump_grid,
    steady_state_iterative,
)
from pendular.params import derive_params, schiller_raw

p = derive_params(schiller_raw(laser_power=5e-3))
print(f"gamma   = {p.cavity_decay:.4g} 1/s")
print(f"g       = {p.coupling:.4g} 1/(m s)")
print(f"gamma_m = {p.mirror_damping:.4g} 1/s")
print(f"A       = {p.position_scale:.4g} m (zero-point position spread)")

# %% Steady state by fixed-point iteration
ss = steady_state_iterative(p)
print(f"\nsteady state after {ss.iterations} iterations: |alpha|^2 = {abs(ss.alpha_ss)**2:.4g}, "
      f"x = {2 * p.position_scale * ss.beta_ss:.3e} m")

# %% Starting from an empty cavity the mirror never settles: it is kicked
# by the sudden radiation pressure and swings about the static offset,
# modulating the intracavity intensity at the mirror frequency.
dt = 0.01 / p.cavity_decay
run = integrate_classical(ClassicalState(0j, 0j), p, 0.0, 3 * p.mirror_period, dt, record_stride=100)
late = run.times > 10 / p.cavity_decay
I = run.intensity[late]
print(f"intensity self-pulsing: mean {I.mean():.4g}, relative half-swing {(I.max() - I.min()) / 2 / I.mean():.2%}")
print(f"mirror x between {run.x.min():.2e} and {run.x.max():.2e} m")

# %% At 100 mW the oscillation grows from period to period.
hi = p.with_(laser_power=0.1)
run = integrate_classical(ClassicalState(0j, 0j), hi, 0.0, 12 * hi.mirror_period, dt, record_stride=100)
per = int(round(hi.mirror_period / (run.times[1] - run.times[0])))
for k in range(0, 12, 3):
    seg = run.x[k * per:(k + 1) * per]
    print(f"period {k + 1:2d}: x in [{seg.min():.2e}, {seg.max():.2e}] m")

# %% Detuned cavity: the stationary intensity solves a cubic, with three
# positive roots (hysteresis) only above Delta = sqrt(3) gamma.
for dg in (1.0, math.sqrt(3), 2.0, 3.0):
    d = dg * p.cavity_decay
    counts = [len(bistability_analysis(p, d, e).intensity_roots) for e in pump_grid(p, d, n=41)]
    print(f"Delta = {dg:.3f} gamma: bistable={bistability_analysis(p, d).bistable}, "
          f"max roots over pump scan = {max(counts)}")
