"""Position ensembles, the density ratio f, and the two H functions.

An ensemble is a cloud of configuration points carrying the ratio
f = rho / rho_equilibrium evaluated at birth.  Along trajectories f is
exactly conserved, so the stored ``f0`` never changes; what changes is
where the points sit.  ``f_exact`` recovers f at any later time by
integrating the flow backward to the birth time, which doubles as a
numerical audit: forward transport followed by backward lookup must
reproduce ``f0`` to integration accuracy.

Coarse statistics compare cell occupation counts against the equilibrium
cell weights Gamma_alpha.  All reductions go through numpy's pairwise
summation, so reported values are stable to reordering at the 1e-12
level.

The physical domain need not be the solver's periodic box: a hard-wall
box lives on the half of a doubled domain, handled by
:class:`BoxMeasure`, which folds mirror images back and doubles the
density weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EnvelopeAcceptanceError
from .flow import PilotFlow
from . import trajectories


# ---------------------------------------------------------------------------
# reference measures
# ---------------------------------------------------------------------------

class FlowMeasure:
    """Equilibrium measure |psi|^2 over the full periodic box of a flow."""

    def __init__(self, flow: PilotFlow):
        self.flow = flow
        g = flow.grid
        self.axis_count = g.axis_count
        self.origin = np.full(g.axis_count, g.origin)
        self.extent = np.full(g.axis_count, g.extent)

    def fold(self, positions: np.ndarray) -> np.ndarray:
        return self.flow.grid.wrap(positions)

    def density(self, positions: np.ndarray, t: float) -> np.ndarray:
        return self.flow.density_at(self.fold(positions), t)

    def quadrature(self, t: float):
        """Grid points and normalized weights integrating this measure."""
        g = self.flow.grid
        pts = np.stack([c.ravel() for c in g.coordinates()], axis=1)
        w = self.flow.density_at(pts, t)
        w = np.clip(w, 0.0, None)
        return pts, w / np.sum(w)


class BoxMeasure:
    """Equilibrium measure of a hard-wall box solved on a doubled domain.

    Physical coordinates live in [0, length]; the solver's grid covers
    [0, 2 length) with the odd mirror image on the upper half.  Folding
    reflects mirror points back and the density weight doubles.
    """

    def __init__(self, flow: PilotFlow, length: float):
        if abs(flow.grid.extent - 2.0 * length) > 1e-12 * length:
            raise ValueError("flow grid must cover [0, 2 length)")
        self.flow = flow
        self.length = float(length)
        self.axis_count = flow.grid.axis_count
        self.origin = np.zeros(self.axis_count)
        self.extent = np.full(self.axis_count, self.length)

    def fold(self, positions: np.ndarray) -> np.ndarray:
        y = np.mod(positions, 2.0 * self.length)
        return np.where(y > self.length, 2.0 * self.length - y, y)

    def density(self, positions: np.ndarray, t: float) -> np.ndarray:
        return 2.0 * self.flow.density_at(self.fold(positions), t)

    def quadrature(self, t: float):
        g = self.flow.grid
        pts = np.stack([c.ravel() for c in g.coordinates()], axis=1)
        inside = np.all(pts < self.length, axis=1)
        pts = pts[inside]
        w = 2.0 * self.flow.density_at(pts, t)
        w = np.clip(w, 0.0, None)
        return pts, w / np.sum(w)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ensemble:
    """Point cloud with conserved density ratios.

    ``f0`` is f at birth and, by construction, forever; ``truncated``
    indexes points whose integration hit an unresolvable node and froze.
    """

    positions: np.ndarray
    f0: np.ndarray
    birth_time: float
    time: float
    seed: int
    truncated: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def __post_init__(self):
        if np.any(self.f0 <= 0) or not np.all(np.isfinite(self.f0)):
            raise ValueError("f0 must be positive and finite for every point")

    @property
    def n(self) -> int:
        return self.positions.shape[0]


def sample_density(rho0, origin, extent, n: int, seed: int,
                   envelope_factor: float = 1.05,
                   acceptance_floor: float = 1e-4,
                   probe_points: int = 4096) -> np.ndarray:
    """Rejection-sample ``n`` points from an unnormalized density.

    A flat envelope is sized from a probe grid; draws are batched from a
    seeded generator so results are bit-reproducible per seed.  If the
    measured acceptance rate falls below ``acceptance_floor`` the envelope
    is hopeless and an error suggests inverse-CDF sampling instead.
    """
    origin = np.atleast_1d(np.asarray(origin, dtype=float))
    extent = np.atleast_1d(np.asarray(extent, dtype=float))
    axes = origin.size
    per_axis = max(8, int(round(probe_points ** (1.0 / axes))))
    probes = np.stack(np.meshgrid(
        *[origin[a] + extent[a] * (np.arange(per_axis) + 0.5) / per_axis
          for a in range(axes)], indexing="ij"), axis=-1).reshape(-1, axes)
    ceiling = envelope_factor * float(np.max(rho0(probes)))
    if not (ceiling > 0) or not np.isfinite(ceiling):
        raise ValueError("density probe found no positive finite maximum")

    rng = np.random.default_rng(seed)
    out = []
    got = 0
    drawn = 0
    batch = max(4 * n, 8192)
    while got < n:
        x = origin + extent * rng.random((batch, axes))
        u = rng.random(batch)
        vals = rho0(x)
        if np.any(vals > ceiling * (1.0 + 1e-12)):
            raise ValueError("density exceeds its envelope; raise envelope_factor")
        acc = u * ceiling <= vals
        drawn += batch
        got += int(np.count_nonzero(acc))
        out.append(x[acc])
        if drawn >= batch and got / drawn < acceptance_floor:
            raise EnvelopeAcceptanceError(
                f"acceptance rate {got/drawn:.2e} below {acceptance_floor:.0e}; "
                "a flat envelope is unusable here, switch to inverse-CDF sampling")
    return np.concatenate(out, axis=0)[:n]


def born_ensemble(rho0, measure, n: int, seed: int, t_birth: float) -> Ensemble:
    """Sample positions from rho0 and record f0 against the measure."""
    pos = sample_density(rho0, measure.origin, measure.extent, n, seed)
    f0 = rho0(pos) / measure.density(pos, t_birth)
    norm = _density_norm(rho0, measure)
    return Ensemble(positions=pos, f0=f0 / norm, birth_time=t_birth,
                    time=t_birth, seed=seed)


def _density_norm(rho0, measure) -> float:
    """Normalization of rho0 over the measure's domain, by grid quadrature."""
    g = measure.flow.grid
    per_axis = g.points
    axes = measure.axis_count
    grids = [measure.origin[a] + measure.extent[a] * (np.arange(per_axis) + 0.5) / per_axis
             for a in range(axes)]
    pts = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, axes)
    dv = float(np.prod(measure.extent / per_axis))
    return float(np.sum(rho0(pts)) * dv)


def equilibrium_ensemble(measure, n: int, seed: int, t_birth: float) -> Ensemble:
    """Sample from the measure itself; f0 is exactly one."""
    pos = sample_density(lambda x: measure.density(x, t_birth),
                         measure.origin, measure.extent, n, seed)
    return Ensemble(positions=pos, f0=np.ones(n), birth_time=t_birth,
                    time=t_birth, seed=seed)


def evolve_ensemble(ens: Ensemble, flow: PilotFlow, t1: float,
                    substeps: int = 1) -> Ensemble:
    """Advance every point to t1; f0 rides along unchanged."""
    res = trajectories.advance(flow, ens.positions, ens.time, t1,
                               substeps=substeps)
    truncated = np.union1d(ens.truncated, res.truncated)
    return replace(ens, positions=res.positions, time=t1, truncated=truncated)


@dataclass
class FExactResult:
    values: np.ndarray
    failed: np.ndarray   # indices whose backward integration truncated


def f_exact(positions, t: float, flow: PilotFlow, rho0, measure,
            t_birth: float, substeps: int = 1,
            rho0_norm: float | None = None) -> FExactResult:
    """Recover f at (positions, t) by backing each point to its birth.

    f is constant along trajectories, so its value is the birth-time ratio
    at the backward foot point.  Points whose backward path truncates at a
    node are reported in ``failed`` and carry NaN.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    res = trajectories.advance(flow, positions, t, t_birth, substeps=substeps)
    norm = _density_norm(rho0, measure) if rho0_norm is None else rho0_norm
    vals = rho0(res.positions) / measure.density(res.positions, t_birth) / norm
    if res.truncated.size:
        vals = vals.copy()
        vals[res.truncated] = np.nan
    return FExactResult(values=vals, failed=res.truncated)


# ---------------------------------------------------------------------------
# coarse-graining
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoarseGrid:
    """Uniform coarse cells tiling a measure's domain exactly."""

    origin: np.ndarray
    extent: np.ndarray
    cells: int

    @classmethod
    def for_measure(cls, measure, cells: int | None = None) -> "CoarseGrid":
        if cells is None:
            cells = 32 if measure.axis_count == 1 else 16
        return cls(origin=np.atleast_1d(measure.origin).astype(float),
                   extent=np.atleast_1d(measure.extent).astype(float),
                   cells=int(cells))

    @property
    def axis_count(self) -> int:
        return self.origin.size

    def edges(self):
        return [np.linspace(self.origin[a], self.origin[a] + self.extent[a],
                            self.cells + 1) for a in range(self.axis_count)]

    def centers(self):
        e = self.edges()
        return [0.5 * (ax[1:] + ax[:-1]) for ax in e]

    def histogram(self, positions: np.ndarray, weights=None) -> np.ndarray:
        positions = np.atleast_2d(positions)
        h, _ = np.histogramdd(positions, bins=self.edges(), weights=weights)
        return h

    def gammas(self, measure, t: float) -> np.ndarray:
        """Equilibrium weight of every cell at time t; sums to 1."""
        pts, w = measure.quadrature(t)
        g = self.histogram(pts, weights=w)
        return g / np.sum(g)


def fbar(counts: np.ndarray, n: int, gammas: np.ndarray) -> np.ndarray:
    """Coarse density ratio per cell; zero-weight cells give zero."""
    out = np.zeros_like(gammas, dtype=float)
    occupied = gammas > 0
    out[occupied] = (counts[occupied] / n) / gammas[occupied]
    return out


def h_coarse(counts: np.ndarray, n: int, gammas: np.ndarray) -> float:
    """Coarse H = sum Gamma fbar ln fbar; empty cells contribute zero.

    Equals the relative entropy of the empirical cell distribution with
    respect to the equilibrium weights, hence never negative.
    """
    p = counts / n
    occupied = (p > 0) & (gammas > 0)
    return float(np.sum(p[occupied] * np.log(p[occupied] / gammas[occupied])))


def h_fine(f_values: np.ndarray) -> float:
    """Ensemble mean of ln f; the exact H up to sampling error."""
    vals = np.asarray(f_values)
    vals = vals[np.isfinite(vals)]
    return float(np.mean(np.log(vals)))


@dataclass
class HFunctions:
    h_fine: float
    h_coarse: float
    fbar: np.ndarray
    counts: np.ndarray
    failed_backward: int


def h_functions(ens: Ensemble, flow: PilotFlow, rho0, measure,
                coarse: CoarseGrid, substeps: int = 1) -> HFunctions:
    fx = f_exact(ens.positions, ens.time, flow, rho0, measure,
                 ens.birth_time, substeps=substeps)
    counts = coarse.histogram(measure.fold(ens.positions))
    gam = coarse.gammas(measure, ens.time)
    return HFunctions(
        h_fine=h_fine(fx.values),
        h_coarse=h_coarse(counts, ens.n, gam),
        fbar=fbar(counts, ens.n, gam),
        counts=counts,
        failed_backward=int(fx.failed.size),
    )


# ---------------------------------------------------------------------------
# time-series statistics
# ---------------------------------------------------------------------------

@dataclass
class CoarseSeries:
    times: np.ndarray
    counts: np.ndarray        # (n_times, cells...) occupation counts
    fbar: np.ndarray          # same shape, coarse ratios
    h_coarse: np.ndarray      # (n_times,)
    worst_sigma: float        # max over cells/times of |fbar-1| sqrt(count)
    truncated: int


def coarse_series(ens: Ensemble, flow: PilotFlow, measure, coarse: CoarseGrid,
                  times, substeps: int = 1) -> CoarseSeries:
    """Evolve once, histogram at every requested time.

    ``worst_sigma`` compares each cell deviation against its own sampling
    scale 1/sqrt(count); equilibrium ensembles should keep it below ~5.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    res = trajectories.advance(flow, ens.positions, ens.time, float(times[-1]),
                               substeps=substeps, record_times=times)
    counts = []
    ratios = []
    hs = []
    worst = 0.0
    for k, t in enumerate(times):
        pos = measure.fold(res.record_positions[k])
        c = coarse.histogram(pos)
        gam = coarse.gammas(measure, float(t))
        fb = fbar(c, ens.n, gam)
        hs.append(h_coarse(c, ens.n, gam))
        occupied = c > 0
        if occupied.any():
            dev = np.abs(fb[occupied] - 1.0) * np.sqrt(c[occupied])
            worst = max(worst, float(dev.max()))
        counts.append(c)
        ratios.append(fb)
    return CoarseSeries(times=times, counts=np.array(counts), fbar=np.array(ratios),
                        h_coarse=np.array(hs), worst_sigma=worst,
                        truncated=int(res.truncated.size))


@dataclass
class StabilityReport:
    max_deviation: float          # max over cells/times of |fbar - 1|
    worst_sigma: float            # same, scaled by sqrt(count) per cell
    series: CoarseSeries
    control_max_deviation: float | None = None
    control_worst_sigma: float | None = None
    control_series: CoarseSeries | None = None


def equilibrium_stability(psi0, potential, perturbation, n: int, seed: int,
                          times, mesh_dt: float,
                          control_rho0=None,
                          coarse: CoarseGrid | None = None,
                          substeps: int = 1,
                          propagation_substeps: int = 1) -> StabilityReport:
    """Kick the wave and watch equilibrium ride along unchanged.

    psi0 is propagated under ``potential`` plus the ``perturbation``
    (pass None for an unperturbed reference run); an ensemble born from
    the initial density is carried by the perturbed flow.  To linear
    order, and in fact exactly, f stays 1: the coarse deviation should
    sit at sampling-noise level throughout.  An optional off-equilibrium
    ``control_rho0`` run shows what a genuine deviation looks like.
    """
    pot = potential if perturbation is None else potential.combined(perturbation)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n_intervals = int(np.ceil((float(times[-1]) - psi0.time) / mesh_dt - 1e-12))
    flow = PilotFlow.from_propagation(psi0, pot, mesh_dt, n_intervals,
                                      substeps=propagation_substeps)
    measure = FlowMeasure(flow)
    coarse = coarse or CoarseGrid.for_measure(measure)
    eq = equilibrium_ensemble(measure, n, seed, flow.t0)
    eq_series = coarse_series(eq, flow, measure, coarse, times, substeps)
    report = StabilityReport(
        max_deviation=_max_deviation(eq_series),
        worst_sigma=eq_series.worst_sigma,
        series=eq_series,
    )
    if control_rho0 is not None:
        ctrl = born_ensemble(control_rho0, measure, n, seed + 1, flow.t0)
        ctrl_series = coarse_series(ctrl, flow, measure, coarse, times, substeps)
        report.control_max_deviation = _max_deviation(ctrl_series)
        report.control_worst_sigma = ctrl_series.worst_sigma
        report.control_series = ctrl_series
    return report


def _max_deviation(series: CoarseSeries) -> float:
    occ = series.counts > 0
    if not occ.any():
        return 0.0
    return float(np.abs(series.fbar[occ] - 1.0).max())


# ---------------------------------------------------------------------------
# text interfaces
# ---------------------------------------------------------------------------

@dataclass
class HSeries:
    times: np.ndarray
    h_fine: np.ndarray
    h_coarse: np.ndarray
    max_deviation: np.ndarray     # per time, max over occupied cells of |fbar-1|
    fbar: np.ndarray              # (n_times, cells...)
    counts: np.ndarray
    failed_backward: np.ndarray   # per time
    defect_median: np.ndarray     # per time, median |f_exact - f0|
    defect_max: np.ndarray        # per time, max |f_exact - f0|


def h_series(ens: Ensemble, flow: PilotFlow, rho0, measure,
             coarse: CoarseGrid, times, substeps: int = 1) -> HSeries:
    """Both H functions along an evolution, in one forward pass.

    H_fine comes from backward transport at each output time and is a
    transport diagnostic: f is conserved exactly, so any drift measures
    integration error.  The per-point defect |f_exact - f0| is reported
    as median and max; a small median with a large max is the signature
    of points whose history grazed a wavefunction node, where backward
    reconstruction is ill-conditioned.  H_coarse is free to fall as
    structure slips below the cell size.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    res = trajectories.advance(flow, ens.positions, ens.time, float(times[-1]),
                               substeps=substeps, record_times=times)
    norm = _density_norm(rho0, measure)
    fines, coarses, devs, ratios, all_counts = [], [], [], [], []
    fails, med_def, max_def = [], [], []
    for k, t in enumerate(times):
        pos = res.record_positions[k]
        fx = f_exact(pos, float(t), flow, rho0, measure, ens.birth_time,
                     substeps=substeps, rho0_norm=norm)
        c = coarse.histogram(measure.fold(pos))
        gam = coarse.gammas(measure, float(t))
        fb = fbar(c, ens.n, gam)
        occ = c > 0
        defect = np.abs(fx.values - ens.f0)
        defect = defect[np.isfinite(defect)]
        fines.append(h_fine(fx.values))
        coarses.append(h_coarse(c, ens.n, gam))
        devs.append(float(np.abs(fb[occ] - 1.0).max()) if occ.any() else 0.0)
        ratios.append(fb)
        all_counts.append(c)
        fails.append(fx.failed.size)
        med_def.append(float(np.median(defect)) if defect.size else 0.0)
        max_def.append(float(defect.max()) if defect.size else 0.0)
    return HSeries(times=times, h_fine=np.array(fines), h_coarse=np.array(coarses),
                   max_deviation=np.array(devs), fbar=np.array(ratios),
                   counts=np.array(all_counts), failed_backward=np.array(fails),
                   defect_median=np.array(med_def), defect_max=np.array(max_def))


def export_h_series_text(series: HSeries) -> str:
    """Delimited (t, H_fine, H_coarse, max|fbar-1|, defect quantiles) series."""
    lines = ["# t\th_fine\th_coarse\tmax_abs_fbar_minus_1"
             "\tliouville_defect_median\tliouville_defect_max"]
    for k in range(series.times.size):
        lines.append("\t".join(f"{v:.17g}" for v in
                               (series.times[k], series.h_fine[k],
                                series.h_coarse[k], series.max_deviation[k],
                                series.defect_median[k], series.defect_max[k])))
    return "\n".join(lines) + "\n"


def export_series_text(series: CoarseSeries) -> str:
    """Delimited dump of the coarse time series."""
    lines = ["# t\th_coarse\tmax_abs_fbar_minus_1"]
    for k, t in enumerate(series.times):
        fb = series.fbar[k]
        occ = series.counts[k] > 0
        dev = np.abs(fb[occ] - 1.0).max() if occ.any() else 0.0
        lines.append(f"{t:.17g}\t{series.h_coarse[k]:.17g}\t{dev:.17g}")
    return "\n".join(lines) + "\n"


def export_fbar_table(coarse: CoarseGrid, fbar_values: np.ndarray,
                      counts: np.ndarray) -> str:
    """Per-cell table: center coordinates, count, fbar."""
    centers = coarse.centers()
    axes = coarse.axis_count
    header = "\t".join([f"center_{a}" for a in range(axes)] + ["count", "fbar"])
    lines = ["# " + header]
    for idx in np.ndindex(fbar_values.shape):
        coords = [centers[a][idx[a]] for a in range(axes)]
        row = [f"{c:.17g}" for c in coords]
        row.append(f"{int(counts[idx])}")
        row.append(f"{fbar_values[idx]:.17g}")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
