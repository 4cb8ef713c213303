import time

import numpy as np

from pilotwave.grids import GridSpec
from pilotwave.schrodinger import Potential
from pilotwave.flow import PilotFlow
from pilotwave import states, ensembles

t_start = time.time()

# --- 1) Liouville closure on a spreading free Gaussian -------------------
grid = GridSpec(1, 512, 40.0, -20.0)
psi0 = states.gaussian_packet(grid, sigma=1.0)
pot = Potential.free(1)
flow = PilotFlow.from_propagation(psi0, pot, dt=0.01, n_intervals=150)  # t in [0, 1.5]
meas = ensembles.FlowMeasure(flow)

sig0 = 1.2


def rho0(x):
    return np.exp(-x[:, 0] ** 2 / (2 * sig0 ** 2))


ens = ensembles.born_ensemble(rho0, meas, n=2000, seed=11, t_birth=0.0)
print("f0 range:", ens.f0.min(), ens.f0.max())

# analytic f0 check: rho0/(norm * |psi0|^2)
norm = np.sqrt(2 * np.pi) * sig0
dens0 = flow.density_at(ens.positions, 0.0)
f0_ref = rho0(ens.positions) / norm / dens0
print("f0 vs analytic:", np.abs(ens.f0 - f0_ref).max())

ens1 = ensembles.evolve_ensemble(ens, flow, 1.5, substeps=2)
print("truncated:", ens1.truncated.size)
fx = ensembles.f_exact(ens1.positions, 1.5, flow, rho0, meas, 0.0, substeps=2)
closure = np.abs(fx.values - ens.f0)
print("f closure max:", np.nanmax(closure), "failed:", fx.failed.size)

# h_fine should match mean log f0
print("h_fine:", ensembles.h_fine(fx.values), "vs", np.mean(np.log(ens.f0)))

# determinism
ens_b = ensembles.born_ensemble(rho0, meas, n=2000, seed=11, t_birth=0.0)
print("resample identical:", np.array_equal(ens_b.positions, ens.positions))

# --- 2) equilibrium stability in a two-mode box ----------------------------
L = 1.0
bgrid = states.box_grid(512, L)
coeffs = np.array([1.0, 1.0]) / np.sqrt(2.0)
energies = states.box_energies(2, L, 1.0)
T1 = 2 * np.pi / energies[0]
n_mesh = 256
times = np.linspace(0.0, 2 * T1, 2 * n_mesh + 1)
bflow = states.box_superposition_flow(bgrid, coeffs, times, L, 1.0)
bmeas = ensembles.BoxMeasure(bflow, L)

pts, w = bmeas.quadrature(0.0)
print("quadrature sum:", w.sum(), "pts range:", pts.min(), pts.max())

coarse = ensembles.CoarseGrid.for_measure(bmeas)
gam = coarse.gammas(bmeas, 0.0)
print("gamma sum:", gam.sum(), "gamma min/max:", gam.min(), gam.max())

out_times = np.linspace(0.0, 2 * T1, 9)
t0 = time.time()
eq = ensembles.equilibrium_ensemble(bmeas, 20000, 5, 0.0)
eq_series = ensembles.coarse_series(eq, bflow, bmeas, coarse, out_times)
ctrl = ensembles.born_ensemble(lambda x: np.ones(x.shape[0]), bmeas, 20000, 6, 0.0)
ctrl_series = ensembles.coarse_series(ctrl, bflow, bmeas, coarse, out_times)
print("box run seconds:", time.time() - t0)
print("equilibrium worst sigma:", eq_series.worst_sigma)
print("control worst sigma:", ctrl_series.worst_sigma)
print("eq h_coarse series:", np.round(eq_series.h_coarse, 5))
print("ctrl h_coarse series:", np.round(ctrl_series.h_coarse, 5))

# --- 3) perturbed-potential stability on a harmonic ground state ---------
from pilotwave.schrodinger import Potential
from pilotwave import states as st

hgrid = GridSpec(1, 256, 24.0, -12.0)
psi_h = st.harmonic_ground_state(hgrid, omega=1.0, mass=1.0)
base = Potential.harmonic(1.0)
kick = Potential.harmonic(0.35, center=0.8)
t0 = time.time()
rep = ensembles.equilibrium_stability(
    psi_h, base, kick, n=8000, seed=3,
    times=np.linspace(0.0, 3.0, 7), mesh_dt=0.01,
    control_rho0=lambda x: np.exp(-(x[:, 0] - 1.0) ** 2),
    propagation_substeps=10)
print("kick run seconds:", time.time() - t0)
print("kick worst sigma:", rep.worst_sigma, "max dev:", rep.max_deviation)
print("kick control sigma:", rep.control_worst_sigma)

# --- 4) h_series on a short relaxation -----------------------------------
t0 = time.time()
hs = ensembles.h_series(ctrl, bflow, lambda x: np.ones(x.shape[0]), bmeas,
                        coarse, np.linspace(0.0, 2 * T1, 5))
print("h_series seconds:", time.time() - t0)
print("h_fine:", np.round(hs.h_fine, 6))
print("h_coarse:", np.round(hs.h_coarse, 5))
print("failed backward:", hs.failed_backward)
print(ensembles.export_h_series_text(hs))
print("total seconds:", time.time() - t_start)
