import numpy as np

from pilotwave import states, ensembles, trajectories

L = 1.0
bgrid = states.box_grid(512, L)
coeffs = np.array([1.0, 1.0]) / np.sqrt(2.0)
energies = states.box_energies(2, L, 1.0)
T1 = 2 * np.pi / energies[0]
times = np.linspace(0.0, 2 * T1, 513)
bflow = states.box_superposition_flow(bgrid, coeffs, times, L, 1.0)
bmeas = ensembles.BoxMeasure(bflow, L)

rho0 = lambda x: np.ones(x.shape[0])
ens = ensembles.born_ensemble(rho0, bmeas, n=4000, seed=6, t_birth=0.0)
t1 = 0.6366197723675814

res = trajectories.advance(bflow, ens.positions, 0.0, t1)
print("forward: clamped", res.step_clamped.sum(), "near", res.near_node.sum(),
      "truncated", res.truncated.size)

back = trajectories.advance(bflow, res.positions, t1, 0.0)
print("backward: clamped", back.step_clamped.sum(), "near", back.near_node.sum())

feet = back.positions
closure = np.abs(feet - ens.positions).max(axis=1)
print("closure max:", closure.max(), "median:", np.median(closure))

# per-point ln f error
fx = ensembles.f_exact(res.positions, t1, bflow, rho0, bmeas, 0.0)
dlnf = np.log(fx.values) - np.log(ens.f0)
order = np.argsort(dlnf)
print("sum dlnf:", dlnf.sum(), "mean:", dlnf.mean())
print("worst negative contributors:")
for i in order[:8]:
    print(f"  start={ens.positions[i,0]:.6f} end={res.positions[i,0]:.6f} "
          f"foot={feet[i,0]:.6f} closure={closure[i]:.2e} dlnf={dlnf[i]:.3f} "
          f"flag_fwd={res.near_node[i]} flag_bwd={back.near_node[i]}")
print("worst positive contributors:")
for i in order[-4:]:
    print(f"  start={ens.positions[i,0]:.6f} end={res.positions[i,0]:.6f} "
          f"foot={feet[i,0]:.6f} closure={closure[i]:.2e} dlnf={dlnf[i]:.3f}")

# how many rows have material dlnf error
print("rows |dlnf|>0.01:", int((np.abs(dlnf) > 0.01).sum()),
      " >0.1:", int((np.abs(dlnf) > 0.1).sum()),
      " >1:", int((np.abs(dlnf) > 1).sum()))
# where are they
bad = np.abs(dlnf) > 0.1
wall_dist = np.minimum(bmeas.fold(ens.positions)[:, 0],
                       L - bmeas.fold(ens.positions)[:, 0])
print("wall distance of bad rows:", np.sort(wall_dist[bad])[:12])
print("dlnf of unflagged rows max:", np.abs(dlnf[~(res.near_node | back.near_node)]).max())
