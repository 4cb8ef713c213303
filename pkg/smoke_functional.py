import time
import warnings

import numpy as np

from pilotwave import states, functional_equations as fe
from pilotwave.flow import PilotFlow
from pilotwave.grids import GridSpec
from pilotwave.schrodinger import Potential

t0 = time.time()

# --- gleason_residual worked examples ---
g_lin = fe.CandidateG.power(1)
g_sq = fe.CandidateG.power(2)
g_sqrt = fe.CandidateG.power(0.5)
g_off = fe.CandidateG.linear(1, 0.1)

print("sq (1/2,1/2):", fe.gleason_residual(g_sq, [np.array([0.5, 0.5])]))   # 0.5
print("sqrt (1/2,1/2):", fe.gleason_residual(g_sqrt, [np.array([0.5, 0.5])]),
      "expect", 1 - 2 * np.sqrt(0.5))

sets = fe.random_coefficient_sets(1000, seed=20260819)
sizes = [len(s) for s in sets]
print("sizes min/max:", min(sizes), max(sizes),
      "sum range:", min(np.sum(s) for s in sets), max(np.sum(s) for s in sets))
for A in (0.1, 1.0, 7.0):
    r = fe.gleason_residual(fe.CandidateG.linear(A), sets)
    print(f"linear A={A}: residual {r:.3e} (<1e-12: {r < 1e-12})")
for g in (g_sq, g_sqrt, g_off):
    r = fe.gleason_residual(g, sets)
    print(f"{g.label}: residual {r:.3e} (>0.01: {r > 0.01})")

# reproducibility
sets2 = fe.random_coefficient_sets(1000, seed=20260819)
print("reproducible:", all(np.array_equal(a, b) for a, b in zip(sets, sets2)))

# tabulated linear candidate passes
xs = np.linspace(0, 1, 101)
g_tab = fe.CandidateG.tabulated(xs, 3.0 * xs, label="tab 3x")
print("tabulated 3x residual:", fe.gleason_residual(g_tab, sets))

# negative power rejected
try:
    fe.CandidateG.power(-1)
    print("power(-1): NOT rejected (bad)")
except ValueError as e:
    print("power(-1) rejected:", e)

# --- cauchy_linearity_fit ---
fit = fe.cauchy_linearity_fit(xs, 3.0 * xs)
print("F=3x:", fit, "expect slope 3, dev 0")
fit = fe.cauchy_linearity_fit(xs, xs ** 2)
print("F=x^2 dev:", fit.deviation, "expect 0.5")
fit = fe.cauchy_linearity_fit(xs, xs + 0.1)
print("F=x+0.1 dev:", fit.deviation, "expect 0.1")

# --- report table ---
print()
print(fe.residual_table([g_lin, g_sq, g_sqrt, g_off], sets[:100]))
print()

# --- born_probabilities scale covariance ---
c = np.array([0.3 + 0.4j, -0.5, 0.2j, 0.1])
p1 = fe.born_probabilities(c)
p2 = fe.born_probabilities(3.7 * c)
print("scale covariance:", np.max(np.abs(p1 - p2)))

# --- destouches on spreading Gaussian ---
sigma0 = 0.7
grid = GridSpec(axis_count=1, points=1024, extent=80.0, origin=-40.0)
psi0 = states.gaussian_packet(grid, sigma=sigma0, center=0.0)
t_end = 3.0
flow = PilotFlow.from_propagation(psi0, Potential.free(1.0, 1), dt=0.05,
                                  n_intervals=60)
x0 = np.linspace(-1.2, 1.2, 9).reshape(-1, 1)

drift2 = fe.destouches_exponent_test(flow, 2.0, x0, 0.0, t_end, substeps=4)
print("drift(A=2):", drift2)

sig_end = sigma0 * np.sqrt(1 + (t_end / (2 * sigma0 ** 2)) ** 2)
for A in (1.0, 1.5, 3.0, 4.0):
    d = fe.destouches_exponent_test(flow, A, x0, 0.0, t_end, substeps=4)
    # analytic oracle: f(t) = [(2 pi s^2)^(-1/4) exp(-x0^2/(4 s0^2))]^(A-2)
    f0 = (2 * np.pi * sigma0 ** 2) ** (-0.25) * np.exp(-x0[:, 0] ** 2 / (4 * sigma0 ** 2))
    fe_ = (2 * np.pi * sig_end ** 2) ** (-0.25) * np.exp(-x0[:, 0] ** 2 / (4 * sigma0 ** 2))
    oracle = np.max(np.abs(fe_ ** (A - 2) - f0 ** (A - 2)))
    ratio = d / max(drift2, 1e-300)
    print(f"A={A}: drift {d:.6f} oracle {oracle:.6f} "
          f"rel err {abs(d - oracle) / oracle:.2%} ratio/A2 {ratio:.1e}")

# --- plane wave: divergence-free warning, tiny drift ---
pw_flow = states.static_flow(states.plane_wave(grid, (3,)), 1.0, span=2.0)
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    d = fe.destouches_exponent_test(pw_flow, 5.0, x0, 0.0, 2.0)
print("plane wave A=5 drift:", d, "warned:",
      any(issubclass(w.category, fe.NonDiscriminatingWarning) for w in caught))

print(f"total {time.time()-t0:.1f}s")
