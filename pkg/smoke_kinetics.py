import time

import numpy as np

from pilotwave import states, trajectories, kinetics as kin
from pilotwave.flow import PilotFlow
from pilotwave.grids import GridSpec
from pilotwave.schrodinger import Potential, WaveFunction

t0 = time.time()
rng = np.random.default_rng(11)

# --- kramers_moyal on synthetic paths ---
# pure Brownian jitter, zero drift: D2 -> D
D_true = 0.03
dt = 0.001
n_t, n_p = 201, 4000
steps = rng.normal(0.0, np.sqrt(2 * D_true * dt), (n_t - 1, n_p))
paths = np.concatenate([np.zeros((1, n_p)), np.cumsum(steps, axis=0)])
times = dt * np.arange(n_t)
est2 = kin.kramers_moyal_estimate(times, paths, lag=10 * dt, order=2, bins=8)
ok = est2.counts > 0
got = np.sum(est2.values[ok] * est2.counts[ok]) / np.sum(est2.counts[ok])
print(f"Brownian D2: {got:.4f} vs {D_true} (err {abs(got/D_true-1):.2%})")

# plane-wave paths: D1 = k/m, D2 = v^2 tau / 2
v = 1.7
paths_pw = np.linspace(0, 1, n_p)[None, :] + v * times[:, None]
est1 = kin.kramers_moyal_estimate(times, paths_pw, lag=5 * dt, order=1, bins=4)
est2pw = kin.kramers_moyal_estimate(times, paths_pw, lag=5 * dt, order=2, bins=4)
print("plane-wave D1:", np.unique(np.round(est1.values, 12)),
      "D2:", np.nanmax(est2pw.values), "bound:", v * v * 5 * dt / 2)

# stationary paths: D1 = 0
est0 = kin.kramers_moyal_estimate(times, np.ones((n_t, 16)), lag=dt, order=1, bins=2)
print("stationary D1:", np.nanmax(np.abs(est0.values[est0.counts > 0])))

# breathing Gaussian in a harmonic trap: node-free pilot paths
gho = GridSpec(axis_count=1, points=512, extent=24.0, origin=-12.0)
pot = Potential.harmonic(1.0, 1.0, 1)
psi_b = states.gaussian_packet(gho, sigma=0.5, center=0.0)
flow_b = PilotFlow.from_propagation(psi_b, pot, dt=5e-3, n_intervals=200,
                                    substeps=8)
x0 = np.linspace(-1.0, 1.0, 4000).reshape(-1, 1)
tau = 5e-3
rec_t = 0.6 + tau * np.arange(3)
res = trajectories.advance(flow_b, x0, 0.0, rec_t[-1], record_times=rec_t)
pos = res.record_positions[:, :, 0]

d2a = kin.kramers_moyal_estimate(rec_t[:2], pos[:2], lag=tau, order=2, bins=6)
d2b = kin.kramers_moyal_estimate(rec_t, pos, lag=2 * tau, order=2, bins=6)
ok = (d2a.counts > 0) & (d2b.counts > 0)
ratio = np.sum(d2a.values[ok] * d2a.counts[ok]) / \
    np.sum(d2b.values[ok] * d2a.counts[ok])
print(f"pilot D2(tau)/D2(2tau) = {ratio:.3f} (expect ~0.5)")

d1 = kin.kramers_moyal_estimate(rec_t[:2], pos[:2], lag=tau, order=1, bins=8)
vgrid = flow_b.velocity_at(d1.centers.reshape(-1, 1), rec_t[0])[0][:, 0]
ok = d1.counts > 0
err = np.max(np.abs(d1.values[ok] - vgrid[ok]) / np.max(np.abs(vgrid[ok])))
print(f"pilot D1 vs v: {err:.2%}")

# --- conditional velocity ---
g2 = GridSpec(axis_count=2, points=128, extent=16.0, origin=-8.0)
# product state: psi_S spreading-Gaussian-with-kick x psi_T ground-like
xs = g2.axis()
psi_s_1d = np.exp(-xs ** 2 / (4 * 0.8 ** 2) + 1j * 0.9 * xs)
psi_t_1d = np.exp(-xs ** 2 / (4 * 1.1 ** 2))
joint = kin.JointState(WaveFunction.from_values(
    g2, psi_s_1d[:, None] * psi_t_1d[None, :]), 1.0, 1.0)
cv = kin.conditional_velocity(joint)
g1 = GridSpec(axis_count=1, points=128, extent=16.0, origin=-8.0)
from pilotwave.schrodinger import velocity_field
vf = velocity_field(WaveFunction.from_values(g1, psi_s_1d))
ok = ~cv.flagged
err = np.max(np.abs(cv.values[ok] - vf.values[0][ok]))
print(f"product-state vbar err: {err:.2e}, flagged {np.sum(cv.flagged)}, "
      f"excluded {cv.excluded_weight:.2e}")

# real entangled state: vbar = 0
ent = psi_s_1d.real[:, None] * psi_t_1d[None, :] + \
    0.5 * np.exp(-((xs[:, None] - 1) ** 2 + (xs[None, :] + 1) ** 2) / 4)
cv0 = kin.conditional_velocity(kin.JointState(
    WaveFunction.from_values(g2, ent), 1.0, 1.0))
print("real entangled max|vbar|:", np.nanmax(np.abs(cv0.values)))

# two-mode entangled vs independent quadrature oracle
a_s = np.exp(-(xs - 1.0) ** 2 / 4 + 1j * 0.3 * xs)
b_s = np.exp(-(xs + 1.0) ** 2 / 4 - 1j * 0.2 * xs)
a_t = np.exp(-(xs - 0.5) ** 2 / 5)
b_t = np.exp(-(xs + 0.5) ** 2 / 3)
vals = a_s[:, None] * a_t[None, :] + 0.7 * b_s[:, None] * b_t[None, :]
js = kin.JointState(WaveFunction.from_values(g2, vals), 1.3, 1.0)
cv2 = kin.conditional_velocity(js)
# oracle written from scratch: FFT derivative along x_S, plain Riemann
# sums over x_T (exact for the periodic grid), no module calls
psi_grid = js.psi.amplitudes
k_ax = 2 * np.pi * np.fft.fftfreq(g2.points, d=g2.spacing)
dpsi_ds = np.fft.ifft(1j * k_ax[:, None] * np.fft.fft(psi_grid, axis=0), axis=0)
J = np.imag(np.conj(psi_grid) * dpsi_ds) / 1.3
num = np.sum(J, axis=1) * g2.spacing
den = np.sum(np.abs(psi_grid) ** 2, axis=1) * g2.spacing
mask = ~cv2.flagged & (np.abs(xs) < 5)
err = np.max(np.abs(cv2.values[mask] - num[mask] / den[mask]))
print(f"entangled vbar vs quadrature oracle: {err:.2e}")

# --- fp_step ---
n = 256
gw = GridSpec(axis_count=1, points=n, extent=2 * np.pi)
x = gw.axis()
dx = gw.spacing
w_uni = np.full(n, 1.0 / (2 * np.pi))
D = 0.01

f0 = kin.reduced_field(1.0 + 0.8 * np.exp(-(x - np.pi) ** 2 / 0.3),
                       0.0, D, w_uni, dx)
print("f0 mass:", np.sum(f0.values * w_uni) * dx)

# fixed point: f == 1
f1 = kin.fp_step(kin.ReducedField(np.ones(n), 0.0, D), 0.0, w_uni, dx, 1e-3)
print("f=1 fixed point drift:", np.max(np.abs(f1.values - 1)))

# local max decays, local min grows (non-uniform w)
w_var = 0.5 + 0.3 * np.cos(x)
w_var = w_var / (np.sum(w_var) * dx)
fb = 1.0 + 0.5 * np.cos(3 * x)
fb = fb / (np.sum(fb * w_var) * dx)
rf = kin.ReducedField(fb, 0.0, D)
stepped = kin.fp_step(rf, 0.0, w_var, dx, 1e-3, renormalize=False)
imax = int(np.argmax(fb))
imin = int(np.argmin(fb))
print("max decays:", stepped.values[imax] < fb[imax],
      " min grows:", stepped.values[imin] > fb[imin])

# stability bound raises
try:
    kin.fp_step(f0, 0.0, w_uni, dx, 1.0)
    print("stability: NOT raised (bad)")
except Exception as e:
    print("stability raised:", type(e).__name__)

# H-theorem rate match
dt_fp = 0.2 * dx * dx / (2 * D)
series = kin.fp_evolve(f0, 0.0, w_uni, dx, dt_fp, 400)
measured, formula = kin.h_valentini_rate(series, w_uni, dx)
mism = np.abs(measured - formula) / np.abs(formula)
print(f"H rate: all dH<=0 {np.all(measured <= 0)}, "
      f"worst mismatch {np.max(mism):.2%}")
h_start, _ = kin.h_valentini(series[0], w_uni, dx)
h_end, _ = kin.h_valentini(series[-1], w_uni, dx)
print(f"H {h_start:.4f} -> {h_end:.6f}")

# mass conservation over 1000 steps without renormalization
f_run = f0
for _ in range(1000):
    f_run = kin.fp_step(f_run, 0.0, w_uni, dx, dt_fp, renormalize=False)
print("mass drift 1000 steps:", abs(np.sum(f_run.values * w_uni) * dx - 1))

# D=0 pure transport: H constant within discretization
f_adv = kin.reduced_field(1.0 + 0.3 * np.sin(x), 0.0, 0.0, w_uni, dx)
vconst = 0.05
dt_adv = 0.5 * dx / vconst
ser_adv = kin.fp_evolve(f_adv, vconst, w_uni, dx, dt_adv, 50)
h0a, _ = kin.h_valentini(ser_adv[0], w_uni, dx)
h1a, _ = kin.h_valentini(ser_adv[-1], w_uni, dx)
print(f"pure transport H drift: {abs(h1a - h0a):.2e} (H0 {h0a:.4f})")

# --- master equation ---
w_m = 0.6 + 0.4 * np.sin(x) ** 2
w_m = w_m / (np.sum(w_m) * dx)
ker = kin.gaussian_kernel(w_m, dx, width=0.8, rate=1.0)
print("kernel stationarity ok (constructed)")

fm = 1.0 + 0.6 * np.cos(2 * x)
fm = fm / (np.sum(fm * w_m) * dx)
g1_ = np.ones(n)
hr = [kin.relative_entropy(fm, g1_, w_m, dx)]
fk = fm.copy()
for _ in range(300):
    fk = kin.master_step(fk, ker, 0.05)
    hr.append(kin.relative_entropy(fk, g1_, w_m, dx))
hr = np.array(hr)
print(f"H_r {hr[0]:.4f} -> {hr[-1]:.2e}, strictly decreasing: "
      f"{np.all(np.diff(hr) < 0)}, f->1 max dev {np.max(np.abs(fk - 1)):.2e}")
print("mass drift:", abs(np.sum(fk * w_m) * dx - 1))

# f == g stationary; identity-like kernel leaves f unchanged
print("f=g unchanged:", np.max(np.abs(kin.master_step(g1_, ker, 0.1) - 1)))
ker_id = kin.gaussian_kernel(w_m, dx, width=1e-4, rate=1.0)
print("delta kernel drift:", np.max(np.abs(kin.master_step(fm, ker_id, 0.1) - fm)))

# relative entropy closed form: f = 2 on left half, g = 1, uniform w
f_half = np.where(x < np.pi, 2.0, 0.0)
print("H_r(2*left):", kin.relative_entropy(f_half, g1_, w_uni, dx),
      "expect", np.log(2))

# Gibbs: H_r >= 0 for random normalized f
neg = 0
for k in range(100):
    fr = rng.uniform(0.1, 3.0, n)
    fr = fr / (np.sum(fr * w_m) * dx)
    if kin.relative_entropy(fr, g1_, w_m, dx) < 0:
        neg += 1
print("Gibbs violations:", neg)

# backward kernel: H_r grows
f_b = kin.master_step(fm, ker, -0.05)
print("backward H_r grows:",
      kin.relative_entropy(f_b, g1_, w_m, dx) > hr[0])

print(f"total {time.time()-t0:.1f}s")
