import time

import numpy as np

from pilotwave import states, ensembles

t_all = time.time()
L = 1.0
n_modes = 8
bgrid = states.box_grid(512, L)
coeffs = states.random_box_coefficients(n_modes, seed=42)
energies = states.box_energies(n_modes, L, 1.0)
T1 = 2 * np.pi / energies[0]
t_end = 5 * T1
dt_mesh = 5e-4
n_mesh = int(np.ceil(t_end / dt_mesh))
times = np.linspace(0.0, t_end, n_mesh + 1)
print("mesh points:", n_mesh + 1, "t_end:", t_end)

flow = states.box_superposition_flow(bgrid, coeffs, times, L, 1.0)
meas = ensembles.BoxMeasure(flow, L)
coarse = ensembles.CoarseGrid.for_measure(meas)  # 32 cells

rho0 = lambda x: np.ones(x.shape[0])
ens = ensembles.born_ensemble(rho0, meas, n=20000, seed=7, t_birth=0.0)

out_times = np.linspace(0.0, t_end, 21)
t0 = time.time()
series = ensembles.coarse_series(ens, flow, meas, coarse, out_times, substeps=1)
print("evolve seconds:", time.time() - t0)
h = series.h_coarse
print("H_coarse series:")
for t, hv in zip(series.times, h):
    print(f"  t={t:7.4f}  H={hv:.5f}  ratio={hv/h[0]:.4f}")
increments = np.diff(h)
ups = increments[increments > 0]
print("final/initial:", h[-1] / h[0], "(need <= 0.2)")
print("non-monotone increments:", ups.size, "max up:", ups.max() if ups.size else 0.0,
      "as frac of H0:", (ups.max() / h[0]) if ups.size else 0.0)
print("truncated:", series.truncated)
print("total seconds:", time.time() - t_all)
