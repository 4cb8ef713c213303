import sys
import time

import numpy as np

from pilotwave import states, ensembles, trajectories
from pilotwave.schrodinger import WaveFunction, Potential
from pilotwave.flow import PilotFlow

L = 1.0
bgrid = states.box_grid(512, L)
E1 = states.box_energies(1, L, 1.0)[0]
T1 = 2 * np.pi / E1
t_end = 5 * T1
rho0 = lambda x: np.ones(x.shape[0])
out_times = np.linspace(0.0, t_end, 21)


def run(mode_numbers, seed, dt_mesh, weights=None):
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * np.pi, len(mode_numbers))
    if weights is None:
        w = np.ones(len(mode_numbers))
    else:
        w = np.asarray(weights, dtype=float)
    w = w / np.sqrt(np.sum(w ** 2))
    amps = w * np.exp(1j * phases)
    energies = (np.array(mode_numbers) * np.pi / L) ** 2 / 2.0
    x = bgrid.axis()

    def factory(t):
        vals = np.zeros(bgrid.shape, dtype=complex)
        for nm, a, en in zip(mode_numbers, amps, energies):
            vals += a * np.sin(nm * np.pi * x / L) * np.exp(-1j * en * t)
        return WaveFunction.from_values(bgrid, vals, t)

    n_mesh = int(np.ceil(t_end / dt_mesh))
    times = np.linspace(0, t_end, n_mesh + 1)
    flow = PilotFlow.from_callable(factory, bgrid, 1.0, times,
                                   potential=Potential.free(1.0, 1))
    meas = ensembles.BoxMeasure(flow, L)
    ens = ensembles.born_ensemble(rho0, meas, n=10000, seed=7, t_birth=0.0)
    res = trajectories.advance(flow, ens.positions, 0.0, t_end,
                               record_times=out_times)
    out = {}
    for cells in (4, 8, 16):
        coarse = ensembles.CoarseGrid(meas.origin, meas.extent, cells)
        hs = []
        for k, t in enumerate(out_times):
            c = coarse.histogram(meas.fold(res.record_positions[k]))
            gam = coarse.gammas(meas, float(t))
            hs.append(ensembles.h_coarse(c, ens.n, gam))
        hs = np.array(hs)
        out[cells] = hs
    return out


cases = [
    ("5-12 s42", list(range(5, 13)), 42, 2.5e-4, None),
    ("9-16 s42", list(range(9, 17)), 42, 2.5e-4, None),
    ("sparse s42", [1, 2, 3, 4, 6, 8, 12, 16], 42, 2.5e-4, None),
    ("1-8 hi-w s42", list(range(1, 9)), 42, 5e-4, [1, 1, 2, 2, 3, 3, 4, 4]),
    ("5-12 s1", list(range(5, 13)), 1, 2.5e-4, None),
]

for label, mset, seed, dtm, w in cases:
    t0 = time.time()
    series = run(mset, seed, dtm, w)
    row = [f"{label} ({time.time()-t0:.0f}s):"]
    for cells, hs in series.items():
        inc = np.diff(hs)
        ups = inc[inc > 0]
        row.append(f"c{cells}: fin={hs[-1]/hs[0]:.2f} min={hs.min()/hs[0]:.2f} "
                   f"nup={ups.size} mx%={100*ups.max()/hs[0] if ups.size else 0:.0f}")
    print("  ".join(row))
    sys.stdout.flush()
print("done")
