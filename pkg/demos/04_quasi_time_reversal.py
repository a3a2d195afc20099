"""The quasi-time reversal of a Brownian path, and what it leaves unchanged.

Reverses the final excursion of one simulated path, then compares functional
laws over 4000 paths (a few seconds).
"""

import numpy as np

from circlab import CircleDiffusionModel, SimulationConfig, simulate_path
from circlab.qtr import apply_qtr, find_markers, invariance_test

bm = CircleDiffusionModel.constant(0.0, 1.0)
cfg = SimulationConfig(step_size=1e-3, n_paths=1, master_seed=12)
path = simulate_path(bm, cfg, 0)
m = find_markers(path)
print(f"tau = {m.tau:.3f}, last zero g = {m.g_tau:.3f}, exit at {m.terminal_sign:+d}")

image = apply_qtr(path, m)
before = path.times < m.g_tau
print("unchanged before g:", np.array_equal(path.positions[before], image.positions[before]))

# with resample=False the reflected sample times are kept, so tau is a grid point
exact = apply_qtr(path, m, resample=False)
print("exit value of the image:", np.interp(m.tau, exact.times, exact.positions))

# applying the map twice returns the path
back = apply_qtr(exact, m.transported(), resample=False)
print("round trip error:", np.max(np.abs(np.interp(path.times, back.times, back.positions) - path.positions)))

# %% laws of tau, g_tau, sup and fixed-time values agree for W and phi(W)
rep = invariance_test(SimulationConfig(step_size=1e-3, n_paths=4000, master_seed=5))
for row in rep.details["functionals"]:
    print(f"{row['name']:22s} stat {row['ks_stat']:.4f}  p {row['p_value']:.3f}")
print(rep.line())
