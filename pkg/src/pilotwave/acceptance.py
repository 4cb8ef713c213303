"""The numbered acceptance battery.

Ten self-contained checks, one per quantitative claim the package is
built around: equilibrium preservation, Liouville exactness, coarse
relaxation, counting bounds, the functional-equation probes, both
kinetic H theorems, doubling-map decay, transport identities, and the
deterministic limit of the jump moments.  Each check builds its own
scenario from library calls, so a failure localizes to physics or
numerics rather than to configuration plumbing.

Every criterion also carries a wall-clock budget; blowing the budget
fails the criterion even if the numbers are right.  Run them through
``run_all`` or individually as ``criterion_1()`` .. ``criterion_10()``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bernoulli_map as bmap
from . import ensembles, functional_equations as feq, kinetics, states, trajectories
from .flow import PilotFlow
from .grids import GridSpec
from .schrodinger import Potential

__all__ = ["CriterionResult", "run_all"] + [f"criterion_{k}" for k in range(1, 11)]


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"criterion {self.index:02d} {self.name}: {status} "
                f"({self.elapsed:.1f}s / {self.budget:.0f}s) {self.detail}")


def _finish(index, name, budget, start, ok, detail) -> CriterionResult:
    elapsed = time.perf_counter() - start
    if elapsed >= budget:
        ok = False
        detail += f"; OVER BUDGET ({elapsed:.1f}s >= {budget:.0f}s)"
    return CriterionResult(index=index, name=name, passed=bool(ok),
                           detail=detail, elapsed=elapsed, budget=budget)


def _box_flow(mode_numbers, phase_seed, dt_mesh, t_end, points=512):
    amps = np.full(len(mode_numbers), 1.0 / math.sqrt(len(mode_numbers)))
    phases = np.random.default_rng(phase_seed).uniform(
        0.0, 2.0 * np.pi, len(mode_numbers))
    coeffs = np.zeros(max(mode_numbers), dtype=complex)
    for m, a, ph in zip(mode_numbers, amps, phases):
        coeffs[m - 1] = a * np.exp(1j * ph)
    mesh = np.arange(0.0, t_end + 0.5 * dt_mesh, dt_mesh)
    if mesh[-1] < t_end:
        mesh = np.append(mesh, t_end)
    grid = states.box_grid(points, 1.0)
    return states.box_superposition_flow(grid, coeffs, mesh)


def _spreading_flow(sigma0=0.7, t_end=3.0, points=1024, extent=80.0,
                    dt=0.01, substeps=2):
    grid = GridSpec(axis_count=1, points=points, extent=extent,
                    origin=-extent / 2)
    psi0 = states.gaussian_packet(grid, sigma=sigma0, center=0.0)
    n_intervals = max(2, round(t_end / dt))
    return PilotFlow.from_propagation(psi0, Potential.free(1.0, 1),
                                      dt=t_end / n_intervals,
                                      n_intervals=n_intervals,
                                      substeps=substeps)


def criterion_1() -> CriterionResult:
    """Born sampling stays Born: cell deviations within sampling scale."""
    start = time.perf_counter()
    t1 = 4.0 / np.pi
    flow = _box_flow([1, 2], phase_seed=3, dt_mesh=1e-3, t_end=t1)
    measure = ensembles.BoxMeasure(flow, 1.0)
    coarse = ensembles.CoarseGrid.for_measure(measure, 32)
    ens = ensembles.equilibrium_ensemble(measure, 100_000, seed=12,
                                         t_birth=0.0)
    times = np.linspace(0.0, t1, 20)
    series = ensembles.coarse_series(ens, flow, measure, coarse, times)
    ok = series.worst_sigma < 5.0
    detail = (f"max |fbar-1| sqrt(count) = {series.worst_sigma:.2f} over "
              f"32 cells x 20 times (limit 5)")
    return _finish(1, "equilibrium_preservation", 120.0, start, ok, detail)


def criterion_2() -> CriterionResult:
    """f recovered by backward transport equals f at birth."""
    start = time.perf_counter()
    t_end = 3.0
    flow = _spreading_flow(t_end=t_end)
    measure = ensembles.FlowMeasure(flow)

    def rho0(x):
        return np.exp(-((x[:, 0] - 0.5) ** 2) / (2 * 0.5 ** 2))

    ens = ensembles.born_ensemble(rho0, measure, 1000, seed=5, t_birth=0.0)
    record = np.linspace(0.0, t_end, 5)
    res = trajectories.advance(flow, ens.positions, 0.0, t_end,
                               substeps=4, record_times=record)
    worst = 0.0
    for k, t in enumerate(record[1:], start=1):
        fx = ensembles.f_exact(res.record_positions[k], float(t), flow,
                               rho0, measure, 0.0, substeps=4)
        worst = max(worst, float(np.nanmax(np.abs(fx.values - ens.f0))))
    ok = worst < 1e-6 and not res.truncated.size
    detail = (f"max |f_exact - f0| = {worst:.2e} over 1000 paths x "
              f"{len(record) - 1} times (limit 1e-6)")
    return _finish(2, "liouville_exactness", 60.0, start, ok, detail)


def criterion_3() -> CriterionResult:
    """Uniform start in an 8-mode box loses 80% of coarse H by 5 periods."""
    start = time.perf_counter()
    t1 = 4.0 / np.pi
    t_end = 5.0 * t1
    flow = _box_flow([1, 2, 3, 4, 6, 8, 12, 16], phase_seed=1,
                     dt_mesh=2.5e-4, t_end=t_end)
    measure = ensembles.BoxMeasure(flow, 1.0)
    coarse = ensembles.CoarseGrid.for_measure(measure, 8)
    ens = ensembles.born_ensemble(lambda x: np.ones(x.shape[0]), measure,
                                  20_000, seed=7, t_birth=0.0)
    times = np.linspace(0.0, t_end, 21)
    series = ensembles.coarse_series(ens, flow, measure, coarse, times)
    h = series.h_coarse
    ratio = h[-1] / h[0]
    ups = np.diff(h) > 0
    big_ups = np.diff(h)[ups] / h[0]
    ok = ratio <= 0.2
    detail = (f"H(5 t1)/H(0) = {ratio:.3f} (limit 0.2, H(0) = {h[0]:.3f}); "
              f"reported: {int(np.sum(ups))} upward increments, largest "
              f"{(big_ups.max() if big_ups.size else 0.0):.1%} of H(0)")
    return _finish(3, "coarse_relaxation", 300.0, start, ok, detail)


def criterion_4() -> CriterionResult:
    """Counting optimum exact for every M <= 12; tail bounds hold."""
    from .typicality import (CellPartition, Complexion, boltzmann_optimum,
                             chebyshev_experiment, complexion_log_weight)
    from .scenarios import _compositions

    start = time.perf_counter()
    partitions = [
        (0.5, 0.5),
        (0.5, 0.3, 0.2),
        (0.3, 0.3, 0.2, 0.2),
        (0.7, 0.15, 0.1, 0.05),
    ]
    worst_gap = 0.0
    for gammas in partitions:
        part = CellPartition(np.array(gammas))
        for m_total in range(1, 13):
            best = max(
                complexion_log_weight(Complexion(np.array(occ, dtype=int)),
                                      part)
                for occ in _compositions(m_total, len(gammas)))
            opt = boltzmann_optimum(part, m_total)
            worst_gap = max(worst_gap, best - opt.log_weight)
    exhaustive_ok = worst_gap <= 1e-9

    part = CellPartition(np.array([0.3, 0.3, 0.2, 0.2]))
    cheb = [chebyshev_experiment(part, m, eps, 10_000, seed)
            for (m, eps), seed in zip(((100, 1.0), (100, 2.0), (1000, 2.0)),
                                      (101, 102, 103))]
    cheb_ok = all(r.satisfied for r in cheb)
    ok = exhaustive_ok and cheb_ok
    detail = (f"worst optimum gap {worst_gap:.1e} over "
              f"{len(partitions)} partitions x M<=12; tail fractions "
              + ", ".join(f"{r.empirical_fraction:.4f}<={r.bound:.4f}"
                          for r in cheb))
    return _finish(4, "typicality_bounds", 60.0, start, ok, detail)


def criterion_5() -> CriterionResult:
    """Additivity pins the quadratic law; so does exponent drift."""
    start = time.perf_counter()
    sets = feq.random_coefficient_sets(1000, seed=20260819)
    r_lin = feq.gleason_residual(feq.CandidateG.power(1), sets)
    r_others = [feq.gleason_residual(g, sets) for g in (
        feq.CandidateG.power(2), feq.CandidateG.power(0.5),
        feq.CandidateG.linear(1.0, 0.1))]
    gleason_ok = r_lin < 1e-12 and min(r_others) > 0.01

    t_end = 3.0
    flow = _spreading_flow(t_end=t_end)
    x0 = np.linspace(-1.2, 1.2, 9).reshape(-1, 1)
    drift2 = feq.destouches_exponent_test(flow, 2.0, x0, 0.0, t_end,
                                          substeps=4)
    ratios = []
    for a in (1.0, 1.5, 3.0, 4.0):
        drift = feq.destouches_exponent_test(flow, a, x0, 0.0, t_end,
                                             substeps=4)
        ratios.append(drift / max(drift2, 1e-12))
    drift_ok = min(ratios) > 100.0
    ok = gleason_ok and drift_ok
    detail = (f"linear residual {r_lin:.1e}, smallest nonlinear "
              f"{min(r_others):.3f}; drift(2) = {drift2:.1e}, smallest "
              f"drift ratio {min(ratios):.1e}")
    return _finish(5, "functional_discrimination", 60.0, start, ok, detail)


def criterion_6() -> CriterionResult:
    """Diffusive H theorem: monotone and on the predicted rate."""
    start = time.perf_counter()
    n = 256
    extent = 2 * np.pi
    dx = extent / n
    x = dx * np.arange(n)
    w = np.full(n, 1.0 / extent)
    diffusion = 0.01
    f0 = kinetics.reduced_field(1.0 + 0.8 * np.exp(-(x - np.pi) ** 2 / 0.3),
                                0.0, diffusion, w, dx)
    dt = 0.2 * dx * dx / (2 * diffusion)
    series = kinetics.fp_evolve(f0, 0.0, w, dx, dt, 400)
    try:
        measured, formula = kinetics.h_valentini_rate(series, w, dx,
                                                      strict=True)
        ok = True
        note = "strict H-rate check passed"
    except ValueError as exc:
        measured, formula = kinetics.h_valentini_rate(series, w, dx,
                                                      strict=False)
        ok = False
        note = str(exc)
    scale = max(np.max(np.abs(measured)), 1e-30)
    big = np.abs(measured) > 1e-11 * scale
    mismatch = np.max(np.abs(measured[big] - formula[big])
                      / np.abs(formula[big]))
    detail = (f"{note}; 400 steps on {n} points, worst resolvable rate "
              f"mismatch {mismatch:.2%} (limit 5%)")
    return _finish(6, "diffusive_h_theorem", 60.0, start, ok, detail)


def criterion_7() -> CriterionResult:
    """Jump relaxation: H_r strictly down to 1e-4, f pointwise to 1e-3."""
    start = time.perf_counter()
    n = 256
    extent = 2 * np.pi
    dx = extent / n
    x = dx * np.arange(n)
    w = np.full(n, 1.0 / extent)
    kernel = kinetics.gaussian_kernel(w, dx, width=0.8, rate=1.0)
    g = 1.0 + 0.8 * np.exp(-(x - np.pi) ** 2 / 0.3)
    g = g / (np.sum(g * w) * dx)
    ones = np.ones(n)
    hr = [kinetics.relative_entropy(g, ones, w, dx)]
    for _ in range(1400):
        g = kinetics.master_step(g, kernel, 0.05)
        hr.append(kinetics.relative_entropy(g, ones, w, dx))
    hr = np.array(hr)
    drop = hr[-1] / hr[0]
    fdev = float(np.max(np.abs(g - 1.0)))
    strictly = bool(np.all(np.diff(hr) < 0))
    ok = strictly and drop < 1e-4 and fdev < 1e-3
    detail = (f"H_r strictly decreasing: {strictly}; H_r(end)/H_r(0) = "
              f"{drop:.1e} (limit 1e-4); max |f-1| = {fdev:.1e} "
              f"(limit 1e-3)")
    return _finish(7, "master_equation_relaxation", 60.0, start, ok, detail)


def criterion_8() -> CriterionResult:
    """Doubling-map modes decay at m ln 2; a step flattens in one hit."""
    start = time.perf_counter()
    density = bmap.UnitDensity.from_bernoulli((1.0, 0.4, 0.2, 0.1, 0.05),
                                              512)
    try:
        fit = bmap.decay_rate_fit(density, 20, m_max=4)
        expected = np.log(2.0) * np.arange(1, 5)
        worst = float(np.max(np.abs(fit.rates[1:5] - expected) / expected))
        rates_ok = True
    except bmap.DecayRateError as exc:
        worst = math.nan
        rates_ok = False
        fit_err = str(exc)

    n = 512
    step_vals = np.where(np.arange(n) < n // 2, 2.0, 0.0)
    flattened = bmap.pf_step(bmap.UnitDensity.from_values(step_vals))
    step_dev = float(np.max(np.abs(flattened.values - 1.0)))
    step_ok = step_dev <= 1e-14

    ok = rates_ok and step_ok
    if rates_ok:
        detail = (f"worst rate error {worst:.2e} of m ln 2 (limit 1%); "
                  f"step flattening residual {step_dev:.1e}")
    else:
        detail = fit_err
    return _finish(8, "bernoulli_mode_decay", 10.0, start, ok, detail)


def criterion_9() -> CriterionResult:
    """Transport identities along guided paths in a free packet."""
    start = time.perf_counter()
    sigma0, t_end = 0.7, 3.0
    flow = _spreading_flow(sigma0=sigma0, t_end=t_end)
    record = np.linspace(0.0, t_end, 61)
    sig_ratio = math.sqrt(1 + (t_end / (2 * sigma0 ** 2)) ** 2)

    amp_worst = mod_worst = ph_worst = vol_worst = 0.0
    for x0 in (-1.5, -0.75, 0.5, 1.0):
        traj = trajectories.integrate_trajectory(
            flow, np.array([x0]), 0.0, t_end, substeps=4,
            record_times=record)
        amp = trajectories.amplitude_transport_check(flow, traj)
        rec = trajectories.psi_reconstruction_check(flow, traj)
        amp_worst = max(amp_worst, amp.residual_max)
        mod_worst = max(mod_worst, rec.modulus_residual_max)
        ph_worst = max(ph_worst, rec.phase_residual_max)
        bundle, _integral = trajectories.comoving_volume_check(
            flow, np.array([x0]), 1e-3, 0.0, t_end, substeps=4)
        vol_worst = max(vol_worst, abs(bundle / sig_ratio - 1.0))

    ok = (amp_worst < 0.01 and mod_worst < 1e-3 and ph_worst < 0.01
          and vol_worst < 5e-3)
    detail = (f"amplitude {amp_worst:.1e} (<1e-2), modulus "
              f"{mod_worst:.1e} (<1e-3), phase {ph_worst:.1e} rad "
              f"(<1e-2), volume vs sigma ratio {vol_worst:.1e} (<5e-3)")
    return _finish(9, "transport_identities", 60.0, start, ok, detail)


def criterion_10() -> CriterionResult:
    """Jump moments of deterministic paths: D2 linear in lag, D1 = v."""
    start = time.perf_counter()
    grid = GridSpec(axis_count=1, points=512, extent=24.0, origin=-12.0)
    psi0 = states.gaussian_packet(grid, sigma=0.5, center=0.0)
    flow = PilotFlow.from_propagation(psi0, Potential.harmonic(1.0, 1.0, 1),
                                      dt=5e-3, n_intervals=200, substeps=8)
    x0 = np.linspace(-1.0, 1.0, 4000).reshape(-1, 1)
    tau = 5e-3
    rec = 0.6 + tau * np.arange(3)
    res = trajectories.advance(flow, x0, 0.0, rec[-1], record_times=rec)
    pos = res.record_positions[:, :, 0]

    d2a = kinetics.kramers_moyal_estimate(rec[:2], pos[:2], lag=tau,
                                          order=2, bins=6)
    d2b = kinetics.kramers_moyal_estimate(rec, pos, lag=2 * tau,
                                          order=2, bins=6)
    good = (d2a.counts > 0) & (d2b.counts > 0)
    ratio = (np.sum(d2a.values[good] * d2a.counts[good])
             / np.sum(d2b.values[good] * d2a.counts[good]))

    d1 = kinetics.kramers_moyal_estimate(rec[:2], pos[:2], lag=tau,
                                         order=1, bins=8)
    v_grid = flow.velocity_at(d1.centers.reshape(-1, 1), rec[0])[0][:, 0]
    good1 = d1.counts > 0
    v_err = float(np.max(np.abs(d1.values[good1] - v_grid[good1]))
                  / np.max(np.abs(v_grid[good1])))

    ok = 0.4 <= ratio <= 0.6 and v_err < 0.02
    detail = (f"D2(tau)/D2(2 tau) = {ratio:.3f} (in [0.4, 0.6]); "
              f"D1 vs grid velocity {v_err:.2%} (limit 2%)")
    return _finish(10, "deterministic_jump_moments", 120.0, start, ok,
                   detail)


_CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4,
             criterion_5, criterion_6, criterion_7, criterion_8,
             criterion_9, criterion_10)


def run_all(indices=None) -> list[CriterionResult]:
    """Run the battery (or a subset by 1-based index), in order."""
    if indices is None:
        picked = _CRITERIA
    else:
        picked = [_CRITERIA[i - 1] for i in indices]
    return [fn() for fn in picked]
