"""Wavefunctions on periodic grids and their guidance-level derived fields.

Units are chosen so hbar = 1 throughout.  The propagator is the symmetric
split-step spectral scheme: a half kinetic step in Fourier space, a full
potential step in position space, a half kinetic step back.  For a free
particle the scheme is exact to roundoff, since the potential factor drops
out and the kinetic phases are applied in the eigenbasis.

Derived fields follow the hydrodynamic reading of the wavefunction: with
psi = a exp(iS), the guiding velocity along axis i is Im(d_i psi / psi)/m_i
and the quantum potential is -sum_i (1/2 m_i) (d_i^2 a)/a.  Both are
undefined at nodes; cells with |psi|^2 below ``node_epsilon`` times the grid
maximum are masked and carry the value zero.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import PropagationDivergedError, StabilityBoundError
from .grids import GridSpec

NODE_EPSILON = 1e-12
NORM_TOLERANCE = 1e-9

_SNAPSHOT_MAGIC = b"PWSNAP01"


def _as_mass_array(masses, axis_count) -> np.ndarray:
    m = np.atleast_1d(np.asarray(masses, dtype=float))
    if m.size == 1:
        m = np.full(axis_count, m[0])
    if m.size != axis_count:
        raise ValueError(f"need {axis_count} masses, got {m.size}")
    if np.any(m <= 0):
        raise ValueError("masses must be positive")
    return m


@dataclass(frozen=True)
class WaveFunction:
    """Immutable snapshot of psi on a grid at a fixed time.

    The amplitude array is marked read-only on construction; norm is
    checked against 1 within ``NORM_TOLERANCE``.
    """

    grid: GridSpec
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != self.grid.shape:
            raise ValueError(f"amplitudes shape {amps.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(amps.real)) or not np.all(np.isfinite(amps.imag)):
            raise ValueError("amplitudes contain non-finite values")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        n = self.norm()
        if abs(n - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"wavefunction norm {n!r} deviates from 1 beyond {NORM_TOLERANCE}")

    @classmethod
    def from_values(cls, grid: GridSpec, values, time: float = 0.0) -> "WaveFunction":
        """Build a snapshot from unnormalized values, normalizing them."""
        values = np.asarray(values, dtype=np.complex128)
        w = np.sqrt(np.sum(np.abs(values) ** 2) * grid.cell_volume)
        if w == 0 or not np.isfinite(w):
            raise ValueError("cannot normalize: zero or non-finite total weight")
        return cls(grid, values / w, time)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell_volume))

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_time(self, time: float) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes, time)


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """External potential plus the per-axis masses it acts with.

    ``kind`` is one of ``free``, ``harmonic``, ``box``, ``tabulated``.
    Use the classmethod constructors; they keep the parameter soup in one
    place and validate it.
    """

    kind: str
    masses: np.ndarray
    omegas: np.ndarray | None = None
    center: np.ndarray | float = 0.0
    box_bounds: tuple | None = None
    box_height: float = 0.0
    values: np.ndarray | None = None

    @classmethod
    def free(cls, masses=1.0, axis_count: int = 1) -> "Potential":
        return cls(kind="free", masses=_as_mass_array(masses, axis_count))

    @classmethod
    def harmonic(cls, omegas, masses=1.0, center=0.0) -> "Potential":
        om = np.atleast_1d(np.asarray(omegas, dtype=float))
        c = np.broadcast_to(np.asarray(center, dtype=float), om.shape).copy()
        return cls(kind="harmonic", masses=_as_mass_array(masses, om.size),
                   omegas=om, center=c)

    @classmethod
    def box(cls, bounds: tuple, height: float, masses=1.0, axis_count: int = 1) -> "Potential":
        """Finite well: zero inside ``bounds = (lo, hi)`` on every axis, ``height`` outside."""
        if height < 0:
            raise ValueError("box height must be non-negative")
        return cls(kind="box", masses=_as_mass_array(masses, axis_count),
                   box_bounds=(float(bounds[0]), float(bounds[1])), box_height=float(height))

    @classmethod
    def tabulated(cls, values: np.ndarray, masses=1.0) -> "Potential":
        values = np.asarray(values, dtype=float)
        return cls(kind="tabulated", masses=_as_mass_array(masses, values.ndim),
                   values=values)

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        if self.kind == "free":
            return np.zeros(grid.shape)
        if self.kind == "harmonic":
            coords = grid.coordinates()
            v = np.zeros(grid.shape)
            for i, x in enumerate(coords):
                v += 0.5 * self.masses[i] * self.omegas[i] ** 2 * (x - self.center[i]) ** 2
            return v
        if self.kind == "box":
            lo, hi = self.box_bounds
            coords = grid.coordinates()
            inside = np.ones(grid.shape, dtype=bool)
            for x in coords:
                inside &= (x >= lo) & (x <= hi)
            return np.where(inside, 0.0, self.box_height)
        if self.kind == "tabulated":
            if self.values.shape != grid.shape:
                raise ValueError("tabulated potential shape does not match grid")
            return self.values
        raise ValueError(f"unknown potential kind {self.kind!r}")

    def gradient(self, grid: GridSpec) -> np.ndarray:
        """Per-axis gradient of V, shape (axes, *grid.shape).

        Analytic for the closed forms; spectral for tabulated values (which
        must then be smooth and periodic to be trustworthy).  The box kind
        returns zero: its walls are step kinks with no usable grid gradient.
        """
        out = np.zeros((grid.axis_count,) + grid.shape)
        if self.kind == "harmonic":
            coords = grid.coordinates()
            for i, x in enumerate(coords):
                out[i] = self.masses[i] * self.omegas[i] ** 2 * (x - self.center[i])
        elif self.kind == "tabulated":
            for i, g in enumerate(spectral_gradient(grid, self.values)):
                out[i] = g.real
        return out

    def combined(self, other: "Potential") -> "Potential":
        """Analytic sum of two potentials where a closed form exists.

        Free terms drop out; two harmonic wells complete the square into a
        single well (the constant offset is discarded, shifting only a
        global phase).  Other combinations have no grid-free closed form
        here; evaluate both on a grid and use ``tabulated`` instead.
        """
        if self.masses.size != other.masses.size or np.any(self.masses != other.masses):
            raise ValueError("potentials act with different masses")
        if self.kind == "free":
            return other
        if other.kind == "free":
            return self
        if self.kind == "harmonic" and other.kind == "harmonic":
            w2 = self.omegas ** 2 + other.omegas ** 2
            num = self.omegas ** 2 * self.center + other.omegas ** 2 * other.center
            center = np.where(w2 > 0, num / np.where(w2 > 0, w2, 1.0), 0.0)
            return Potential.harmonic(np.sqrt(w2), self.masses, center)
        raise ValueError(f"no closed-form sum for kinds {self.kind!r} + {other.kind!r}")

    def max_stable_dt(self, grid: GridSpec, phase_limit: float = 0.1) -> float:
        """Largest step keeping the potential phase advance per step below
        ``phase_limit`` radians at the grid extremes.  Infinite for a free
        potential."""
        vmax = float(np.max(np.abs(self.evaluate(grid))))
        if vmax == 0.0:
            return np.inf
        return phase_limit / vmax


# ---------------------------------------------------------------------------
# spectral derivatives
# ---------------------------------------------------------------------------

def spectral_gradient(grid: GridSpec, values: np.ndarray) -> list:
    """Per-axis spectral derivatives of a (possibly complex) grid field."""
    ft = np.fft.fftn(values)
    k = grid.derivative_wavenumbers()
    out = []
    for axis in range(grid.axis_count):
        shape = [1] * grid.axis_count
        shape[axis] = grid.points
        out.append(np.fft.ifftn(ft * (1j * k.reshape(shape))))
    return out


def spectral_laplacian(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    ft = np.fft.fftn(values)
    k = grid.wavenumbers()
    k2 = np.zeros(grid.shape)
    for axis in range(grid.axis_count):
        shape = [1] * grid.axis_count
        shape[axis] = grid.points
        k2 = k2 + (k ** 2).reshape(shape)
    return np.fft.ifftn(-k2 * ft)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def propagate(psi: WaveFunction, potential: Potential, dt: float, steps: int = 1) -> WaveFunction:
    """Advance psi by ``steps`` symmetric split-step increments of ``dt``.

    Raises
    ------
    StabilityBoundError
        If ``dt`` exceeds the potential phase bound for this grid.
    PropagationDivergedError
        If any step produces a non-finite amplitude, naming the step.
    """
    grid = psi.grid
    bound = potential.max_stable_dt(grid)
    if abs(dt) > bound:
        raise StabilityBoundError(
            f"dt {dt} exceeds the potential phase bound {bound:.6g} "
            "(potential phase per step must stay below 0.1 rad)")
    masses = _as_mass_array(potential.masses, grid.axis_count)
    k = grid.wavenumbers()
    k2_over_m = np.zeros(grid.shape)
    for axis in range(grid.axis_count):
        shape = [1] * grid.axis_count
        shape[axis] = grid.points
        k2_over_m = k2_over_m + (k ** 2).reshape(shape) / masses[axis]
    half_kinetic = np.exp(-0.25j * dt * k2_over_m)
    v = potential.evaluate(grid)
    full_potential = np.exp(-1j * dt * v) if potential.kind != "free" else None

    amps = np.array(psi.amplitudes)
    for step in range(steps):
        ft = np.fft.fftn(amps) * half_kinetic
        if full_potential is not None:
            amps = np.fft.ifftn(ft) * full_potential
            ft = np.fft.fftn(amps) * half_kinetic
        else:
            ft = ft * half_kinetic
        amps = np.fft.ifftn(ft)
        if not np.all(np.isfinite(amps.real)) or not np.all(np.isfinite(amps.imag)):
            raise PropagationDivergedError(step)
    return WaveFunction(grid, amps, psi.time + steps * dt)


# ---------------------------------------------------------------------------
# derived fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VelocityField:
    """Guiding velocity on the grid with its node mask.

    ``values`` has shape ``(axis_count, *grid.shape)``; entries under the
    mask are zero by convention.
    """

    values: np.ndarray
    node_mask: np.ndarray


def node_mask(psi: WaveFunction, node_epsilon: float = NODE_EPSILON) -> np.ndarray:
    """Cells whose density falls below ``node_epsilon`` times the grid maximum."""
    rho = psi.density()
    return rho < node_epsilon * rho.max()


def velocity_field(psi: WaveFunction, masses=None,
                   node_epsilon: float = NODE_EPSILON) -> VelocityField:
    """Guiding velocity v_i = Im(d_i psi / psi)/m_i with node handling."""
    grid = psi.grid
    m = _as_mass_array(1.0 if masses is None else masses, grid.axis_count)
    mask = node_mask(psi, node_epsilon)
    grads = spectral_gradient(grid, psi.amplitudes)
    safe = np.where(mask, 1.0, psi.amplitudes)
    vals = np.empty((grid.axis_count,) + grid.shape)
    for i, dpsi in enumerate(grads):
        v = np.imag(dpsi / safe) / m[i]
        v[mask] = 0.0
        vals[i] = v
    return VelocityField(values=vals, node_mask=mask)


def probability_current(psi: WaveFunction, masses=None) -> np.ndarray:
    """j_i = Im(conj(psi) d_i psi)/m_i.  Finite everywhere, nodes included."""
    grid = psi.grid
    m = _as_mass_array(1.0 if masses is None else masses, grid.axis_count)
    grads = spectral_gradient(grid, psi.amplitudes)
    out = np.empty((grid.axis_count,) + grid.shape)
    for i, dpsi in enumerate(grads):
        out[i] = np.imag(np.conj(psi.amplitudes) * dpsi) / m[i]
    return out


def madelung_fields(psi: WaveFunction, masses=None,
                    node_epsilon: float = NODE_EPSILON):
    """Velocity and its divergence in one pass, sharing the FFTs.

    The divergence uses d_i v_i = Im(d_i^2 psi / psi - (d_i psi / psi)^2)/m_i,
    evaluated pointwise from smooth derivatives of psi.  That keeps the node
    regularization local: masking never feeds back into a global transform,
    so there is no ringing away from nodes.

    Returns ``(velocity, divergence, mask)``.
    """
    grid = psi.grid
    m = _as_mass_array(1.0 if masses is None else masses, grid.axis_count)
    mask = node_mask(psi, node_epsilon)
    safe = np.where(mask, 1.0, psi.amplitudes)
    ft = np.fft.fftn(psi.amplitudes)
    k = grid.wavenumbers()
    k_odd = grid.derivative_wavenumbers()
    vel = np.empty((grid.axis_count,) + grid.shape)
    div = np.zeros(grid.shape)
    for axis in range(grid.axis_count):
        shape = [1] * grid.axis_count
        shape[axis] = grid.points
        ik = (1j * k_odd).reshape(shape)
        dpsi = np.fft.ifftn(ik * ft)
        d2psi = np.fft.ifftn(-(k ** 2).reshape(shape) * ft)
        w = dpsi / safe
        vel[axis] = np.imag(w) / m[axis]
        div += np.imag(d2psi / safe - w * w) / m[axis]
    vel[:, mask] = 0.0
    div[mask] = 0.0
    return vel, div, mask


def velocity_divergence(psi: WaveFunction, masses=None,
                        node_epsilon: float = NODE_EPSILON) -> np.ndarray:
    """Divergence of the guiding velocity, zero under the node mask."""
    return madelung_fields(psi, masses, node_epsilon)[1]


def quantum_force(psi: WaveFunction, masses=None,
                  node_epsilon: float = NODE_EPSILON):
    """Gradient of the quantum potential, pointwise from derivatives of |psi|.

    With a = |psi| and Q = -sum_i (1/2 m_i) (d_i^2 a)/a, the j-component is
    d_j Q = -sum_i (1/2 m_i) [ d_j d_i^2 a / a - (d_i^2 a)(d_j a)/a^2 ].
    Returns ``(grad_q, mask)`` with grad_q of shape (axes, *grid.shape).
    """
    grid = psi.grid
    m = _as_mass_array(1.0 if masses is None else masses, grid.axis_count)
    a = np.abs(psi.amplitudes)
    mask = node_mask(psi, node_epsilon)
    safe_a = np.where(mask, 1.0, a)
    ft = np.fft.fftn(a)
    k = grid.wavenumbers()
    k_odd = grid.derivative_wavenumbers()

    def axis_factor(axis, power):
        shape = [1] * grid.axis_count
        shape[axis] = grid.points
        base = k_odd if power % 2 else k
        return ((1j * base) ** power).reshape(shape)

    d1 = [np.fft.ifftn(axis_factor(j, 1) * ft).real for j in range(grid.axis_count)]
    d2 = [np.fft.ifftn(axis_factor(i, 2) * ft).real for i in range(grid.axis_count)]
    grad_q = np.zeros((grid.axis_count,) + grid.shape)
    for j in range(grid.axis_count):
        acc = np.zeros(grid.shape)
        for i in range(grid.axis_count):
            d3 = np.fft.ifftn(axis_factor(j, 1) * axis_factor(i, 2) * ft).real
            acc += (-0.5 / m[i]) * (d3 / safe_a - d2[i] * d1[j] / safe_a ** 2)
        grad_q[j] = acc
    grad_q[:, mask] = 0.0
    return grad_q, mask


def quantum_potential(psi: WaveFunction, masses=None,
                      node_epsilon: float = NODE_EPSILON):
    """Q = -sum_i (1/2 m_i) (d_i^2 a)/a with a = |psi|.

    Returns ``(q, mask)``; q is zero under the mask.  For uniform masses the
    per-axis sum collapses to a single Laplacian.
    """
    grid = psi.grid
    m = _as_mass_array(1.0 if masses is None else masses, grid.axis_count)
    a = np.abs(psi.amplitudes)
    mask = node_mask(psi, node_epsilon)
    safe_a = np.where(mask, 1.0, a)
    if np.allclose(m, m[0]):
        q = -0.5 / m[0] * spectral_laplacian(grid, a).real / safe_a
    else:
        ft = np.fft.fftn(a)
        k = grid.wavenumbers()
        q = np.zeros(grid.shape)
        for axis in range(grid.axis_count):
            shape = [1] * grid.axis_count
            shape[axis] = grid.points
            d2 = np.fft.ifftn(-(k ** 2).reshape(shape) * ft).real
            q += -0.5 / m[axis] * d2 / safe_a
    q[mask] = 0.0
    return q, mask


def energy(psi: WaveFunction, potential: Potential) -> float:
    """Expectation of the Hamiltonian, kinetic part via Parseval."""
    grid = psi.grid
    masses = _as_mass_array(potential.masses, grid.axis_count)
    grads = spectral_gradient(grid, psi.amplitudes)
    kin = 0.0
    for i, dpsi in enumerate(grads):
        kin += np.sum(np.abs(dpsi) ** 2) * grid.cell_volume / (2.0 * masses[i])
    pot = np.sum(potential.evaluate(grid) * psi.density()) * grid.cell_volume
    return float(kin + pot)


def continuity_residual(before: WaveFunction, after: WaveFunction, masses=None) -> float:
    """Relative L2 residual of d_t rho + div j between two nearby snapshots.

    The time derivative is the centered difference of the two densities,
    the current divergence is evaluated spectrally at the midpoint.  Useful
    as a propagation health check; small for well-resolved evolutions.
    """
    if after.time == before.time:
        raise ValueError("snapshots must differ in time")
    grid = before.grid
    dt = after.time - before.time
    drho_dt = (after.density() - before.density()) / dt
    mid = WaveFunction.from_values(grid, 0.5 * (before.amplitudes + after.amplitudes),
                                   0.5 * (before.time + after.time))
    j = probability_current(mid, masses if masses is not None else 1.0)
    div_j = np.zeros(grid.shape)
    for i in range(grid.axis_count):
        div_j += spectral_gradient(grid, j[i])[i].real
    resid = drho_dt + div_j
    scale = np.sqrt(np.sum(drho_dt ** 2))
    if scale == 0.0:
        scale = np.sqrt(np.sum(mid.density() ** 2))
    return float(np.sqrt(np.sum(resid ** 2)) / scale)


# ---------------------------------------------------------------------------
# snapshot files
# ---------------------------------------------------------------------------

def save_snapshot(psi: WaveFunction, path) -> None:
    """Write a binary snapshot.

    Layout, all little-endian: an 8-byte magic tag, uint32 axis count,
    uint32 points per axis, float64 extent, float64 origin, float64 time,
    then the amplitudes as interleaved real/imaginary float64 pairs in C
    order.
    """
    g = psi.grid
    header = _SNAPSHOT_MAGIC + struct.pack(
        "<IIddd", g.axis_count, g.points, g.extent, g.origin, psi.time)
    flat = np.empty(psi.amplitudes.size * 2, dtype="<f8")
    flat[0::2] = psi.amplitudes.real.ravel()
    flat[1::2] = psi.amplitudes.imag.ravel()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(flat.tobytes())


def load_snapshot(path) -> WaveFunction:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _SNAPSHOT_MAGIC:
            raise ValueError(f"not a snapshot file (magic {magic!r})")
        axis_count, points, extent, origin, time = struct.unpack("<IIddd", fh.read(32))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    expected = 2 * points ** axis_count
    if raw.size != expected:
        raise ValueError(f"snapshot payload has {raw.size} values, expected {expected}")
    grid = GridSpec(axis_count=axis_count, points=points, extent=extent, origin=origin)
    amps = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
    return WaveFunction(grid, amps, time)


def to_table_text(psi: WaveFunction) -> str:
    """Small-grid human-readable dump: coordinates, Re psi, Im psi."""
    g = psi.grid
    if g.points ** g.axis_count > 65536:
        raise ValueError("grid too large for a text table; use save_snapshot")
    cols = [c.ravel() for c in g.coordinates()]
    amps = psi.amplitudes.ravel()
    names = [f"x{i}" for i in range(g.axis_count)] + ["re_psi", "im_psi"]
    lines = ["# " + "\t".join(names), f"# time = {psi.time!r}"]
    for row in zip(*cols, amps.real, amps.imag):
        lines.append("\t".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"
