import time

import numpy as np

from pilotwave import states, ensembles, trajectories

t_all = time.time()
L = 1.0
n_modes = 8
bgrid = states.box_grid(512, L)
energies = states.box_energies(n_modes, L, 1.0)
T1 = 2 * np.pi / energies[0]
t_end = 5 * T1
dt_mesh = 5e-4
n_mesh = int(np.ceil(t_end / dt_mesh))
times = np.linspace(0.0, t_end, n_mesh + 1)
out_times = np.linspace(0.0, t_end, 21)
rho0 = lambda x: np.ones(x.shape[0])

for seed in (42, 1, 2, 3):
    coeffs = states.random_box_coefficients(n_modes, seed=seed)
    flow = states.box_superposition_flow(bgrid, coeffs, times, L, 1.0)
    meas = ensembles.BoxMeasure(flow, L)
    ens = ensembles.born_ensemble(rho0, meas, n=20000, seed=7, t_birth=0.0)
    res = trajectories.advance(flow, ens.positions, 0.0, t_end,
                               record_times=out_times)
    line = [f"seed {seed}:"]
    for cells in (8, 12, 16, 32):
        coarse = ensembles.CoarseGrid(meas.origin, meas.extent, cells)
        hs = []
        for k, t in enumerate(out_times):
            pos = meas.fold(res.record_positions[k])
            c = coarse.histogram(pos)
            gam = coarse.gammas(meas, float(t))
            hs.append(ensembles.h_coarse(c, ens.n, gam))
        hs = np.array(hs)
        inc = np.diff(hs)
        ups = inc[inc > 0]
        line.append(f"cells={cells}: ratio={hs[-1]/hs[0]:.3f} "
                    f"nup={ups.size} maxup%={100*ups.max()/hs[0] if ups.size else 0:.1f}")
    print("\n  ".join(line), flush=True)
print("total seconds:", time.time() - t_all)
