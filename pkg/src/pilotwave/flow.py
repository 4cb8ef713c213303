"""Time-indexed guidance fields with interpolation between snapshots.

A :class:`PilotFlow` wraps a series of wavefunction snapshots on a shared
grid and a uniform (or at least monotone) time mesh.  Derived fields --
guiding velocity, its divergence, the along-path Lagrangian, density,
real and imaginary parts -- are computed spectrally per snapshot, spline
prefiltered once, and cached in small LRU groups so long runs do not hold
every derived array at once.

Spatial interpolation is periodic cubic (scipy's grid-wrap splines);
time interpolation is linear between the two bracketing snapshots.
Blending happens on the spline coefficient arrays, which is exact because
the spline transform is linear in the data.

Node neighbourhoods (density below ``node_epsilon`` times the snapshot
maximum) carry a flag; velocities there are zero by convention and any
sample touching them is reported flagged so integrators can shorten their
step or truncate.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import ndimage

from .grids import GridSpec
from .schrodinger import (
    NODE_EPSILON,
    Potential,
    WaveFunction,
    _as_mass_array,
    madelung_fields,
    propagate,
    quantum_force,
    quantum_potential,
    spectral_gradient,
)


def _prefilter(values: np.ndarray) -> np.ndarray:
    return ndimage.spline_filter(values, order=3, mode="grid-wrap", output=np.float64)


def _interp_cubic(coeffs: np.ndarray, index_coords) -> np.ndarray:
    return ndimage.map_coordinates(coeffs, index_coords, order=3,
                                   mode="grid-wrap", prefilter=False)


def _interp_linear(values: np.ndarray, index_coords) -> np.ndarray:
    return ndimage.map_coordinates(values, index_coords, order=1,
                                   mode="grid-wrap", prefilter=False)


class FieldSampler:
    """All interpolatable fields of a flow, frozen at one query time.

    Blended spline coefficients are built lazily per field on first use,
    so a velocity-only consumer never pays for the Lagrangian tables.
    """

    def __init__(self, flow: "PilotFlow", t: float):
        self.flow = flow
        self.t = float(t)
        i, w = flow._bracket(self.t)
        self._i = i
        self._w = w
        self._blended = {}

    def _field(self, group: str, name: str):
        key = (group, name)
        if key not in self._blended:
            lo = self.flow._group(group, self._i)[name]
            if self._w == 0.0:
                self._blended[key] = lo
            else:
                hi = self.flow._group(group, self._i + 1)[name]
                if isinstance(lo, list):
                    w = self._w
                    self._blended[key] = [(1.0 - w) * a + w * b for a, b in zip(lo, hi)]
                else:
                    self._blended[key] = (1.0 - self._w) * lo + self._w * hi
        return self._blended[key]

    def _coords(self, positions: np.ndarray):
        positions = np.atleast_2d(positions)
        idx = self.flow.grid.to_index_units(positions)
        return [idx[:, a] for a in range(self.flow.grid.axis_count)]

    def velocity(self, positions: np.ndarray):
        """Velocities (n, axes) and near-node flags (n,) at the query points."""
        coords = self._coords(positions)
        vel = self._field("kinematic", "vel")
        n = coords[0].shape[0]
        out = np.empty((n, self.flow.grid.axis_count))
        for a in range(self.flow.grid.axis_count):
            out[:, a] = _interp_cubic(vel[a], coords)
        return out, self._near_node(coords)

    def _near_node(self, coords) -> np.ndarray:
        if not (self.flow._group("kinematic", self._i)["has_nodes"]
                or (self._w > 0.0
                    and self.flow._group("kinematic", self._i + 1)["has_nodes"])):
            return np.zeros(coords[0].shape[0], dtype=bool)
        mask = self._field("kinematic", "mask")
        return _interp_linear(mask, coords) > 0.0

    def divergence(self, positions: np.ndarray) -> np.ndarray:
        return _interp_cubic(self._field("kinematic", "div"), self._coords(positions))

    def lagrangian(self, positions: np.ndarray) -> np.ndarray:
        return _interp_cubic(self._field("dynamic", "lag"), self._coords(positions))

    def grad_vq(self, positions: np.ndarray) -> np.ndarray:
        """Gradient of V + Q, shape (n, axes)."""
        coords = self._coords(positions)
        tables = self._field("dynamic", "gradvq")
        n = coords[0].shape[0]
        out = np.empty((n, self.flow.grid.axis_count))
        for a in range(self.flow.grid.axis_count):
            out[:, a] = _interp_cubic(tables[a], coords)
        return out

    def density(self, positions: np.ndarray) -> np.ndarray:
        return _interp_cubic(self._field("wave", "dens"), self._coords(positions))

    def psi(self, positions: np.ndarray) -> np.ndarray:
        coords = self._coords(positions)
        re = _interp_cubic(self._field("wave", "re"), coords)
        im = _interp_cubic(self._field("wave", "im"), coords)
        return re + 1j * im

    def near_node(self, positions: np.ndarray) -> np.ndarray:
        return self._near_node(self._coords(positions))


class PilotFlow:
    """Snapshot series plus everything needed to guide trajectories.

    Parameters
    ----------
    grid, masses, times
        Shared grid, per-axis masses, and the monotone snapshot time mesh.
    source
        Either a sequence of :class:`WaveFunction` (one per mesh time) or a
        callable ``t -> WaveFunction`` evaluated lazily and LRU-cached.
    potential
        The potential generating the evolution; needed for the Lagrangian
        and the Newton-consistency force.  Defaults to free.
    """

    def __init__(self, grid: GridSpec, masses, times, source,
                 potential: Potential | None = None,
                 node_epsilon: float = NODE_EPSILON):
        self.grid = grid
        self.masses = _as_mass_array(masses, grid.axis_count)
        self.times = np.asarray(times, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("need at least two snapshot times")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("snapshot times must be strictly increasing")
        self.node_epsilon = node_epsilon
        self.potential = potential if potential is not None else Potential.free(
            self.masses, grid.axis_count)
        self._source = source
        if not callable(source):
            source = list(source)
            if len(source) != self.times.size:
                raise ValueError("snapshot count does not match time mesh")
            self._snapshots = source
            self.snapshot = lambda i: self._snapshots[i]
        else:
            self.snapshot = lru_cache(maxsize=12)(self._make_snapshot)
        self._groups = {
            "kinematic": lru_cache(maxsize=8)(self._build_kinematic),
            "dynamic": lru_cache(maxsize=8)(self._build_dynamic),
            "wave": lru_cache(maxsize=8)(self._build_wave),
        }
        self.fields_at = lru_cache(maxsize=16)(self._make_sampler)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_snapshots(cls, snapshots, masses, potential=None,
                       node_epsilon: float = NODE_EPSILON) -> "PilotFlow":
        snapshots = list(snapshots)
        times = [s.time for s in snapshots]
        return cls(snapshots[0].grid, masses, times, snapshots, potential, node_epsilon)

    @classmethod
    def from_propagation(cls, psi0: WaveFunction, potential: Potential, dt: float,
                         n_intervals: int, substeps: int = 1,
                         node_epsilon: float = NODE_EPSILON) -> "PilotFlow":
        """Propagate ``psi0`` and keep every ``dt`` as a mesh snapshot.

        ``substeps`` extra split-step increments are taken inside each mesh
        interval when the potential demands a finer step than the mesh.
        """
        snapshots = [psi0]
        psi = psi0
        for _ in range(n_intervals):
            psi = propagate(psi, potential, dt / substeps, steps=substeps)
            snapshots.append(psi)
        times = psi0.time + dt * np.arange(n_intervals + 1)
        return cls(psi0.grid, potential.masses, times, snapshots, potential, node_epsilon)

    @classmethod
    def from_callable(cls, fn, grid: GridSpec, masses, times, potential=None,
                      node_epsilon: float = NODE_EPSILON) -> "PilotFlow":
        return cls(grid, masses, times, fn, potential, node_epsilon)

    # -- snapshot & field groups ------------------------------------------

    def _make_snapshot(self, i: int) -> WaveFunction:
        psi = self._source(self.times[i])
        if abs(psi.time - self.times[i]) > 1e-9 * max(1.0, abs(self.times[i])):
            raise ValueError("snapshot source returned a mismatched time")
        return psi

    def _group(self, group: str, i: int) -> dict:
        return self._groups[group](i)

    def _build_kinematic(self, i: int) -> dict:
        psi = self.snapshot(i)
        vel, div, mask = madelung_fields(psi, self.masses, self.node_epsilon)
        return {
            "vel": [_prefilter(vel[a]) for a in range(self.grid.axis_count)],
            "div": _prefilter(div),
            "mask": mask.astype(float),
            "has_nodes": bool(mask.any()),
            "raw_vel": vel,
        }

    def _build_dynamic(self, i: int) -> dict:
        psi = self.snapshot(i)
        kin = self._group("kinematic", i)
        q, qmask = quantum_potential(psi, self.masses, self.node_epsilon)
        v_ext = self.potential.evaluate(self.grid)
        kinetic = np.zeros(self.grid.shape)
        for a in range(self.grid.axis_count):
            kinetic += 0.5 * self.masses[a] * kin["raw_vel"][a] ** 2
        lag = kinetic - v_ext - q
        grad_q, _ = quantum_force(psi, self.masses, self.node_epsilon)
        grad_v = self.potential.gradient(self.grid)
        gradvq = [_prefilter(grad_q[a] + grad_v[a])
                  for a in range(self.grid.axis_count)]
        return {"lag": _prefilter(lag), "gradvq": gradvq, "q": q, "mask": qmask}

    def _build_wave(self, i: int) -> dict:
        psi = self.snapshot(i)
        return {
            "dens": _prefilter(psi.density()),
            "re": _prefilter(psi.amplitudes.real.copy()),
            "im": _prefilter(psi.amplitudes.imag.copy()),
        }

    # -- time lookup -------------------------------------------------------

    def _bracket(self, t: float):
        times = self.times
        slack = 1e-9 * max(1.0, times[-1] - times[0])
        if t < times[0] - slack or t > times[-1] + slack:
            raise ValueError(f"time {t} outside the snapshot mesh "
                             f"[{times[0]}, {times[-1]}]")
        t = min(max(t, times[0]), times[-1])
        i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2))
        w = (t - times[i]) / (times[i + 1] - times[i])
        return i, float(np.clip(w, 0.0, 1.0))

    def _make_sampler(self, t: float) -> FieldSampler:
        return FieldSampler(self, t)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def density_at(self, positions: np.ndarray, t: float) -> np.ndarray:
        return self.fields_at(float(t)).density(positions)

    def velocity_at(self, positions: np.ndarray, t: float):
        """Convenience wrapper: velocities and node flags at one time."""
        return self.fields_at(float(t)).velocity(positions)

    def psi_at(self, positions: np.ndarray, t: float) -> np.ndarray:
        return self.fields_at(float(t)).psi(positions)

    def max_divergence(self) -> float:
        """Largest |div v| over all snapshots; cheap flow-compressibility probe."""
        worst = 0.0
        for i in range(self.times.size):
            kin = self._group("kinematic", i)
            raw = kin["raw_vel"]
            div = np.zeros(self.grid.shape)
            for a in range(self.grid.axis_count):
                div += spectral_gradient(self.grid, raw[a])[a].real
            worst = max(worst, float(np.max(np.abs(div))))
        return worst
