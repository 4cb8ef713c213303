"""Reference wavefunctions used by tests, demos, and bundled scenarios.

Everything here returns normalized :class:`WaveFunction` snapshots (or a
flow built from them).  Wavenumbers are always commensurate with the
periodic grid, i.e. integer multiples of 2 pi / extent.

The hard-wall box lives on a doubled periodic domain: the eigenfunctions
sin(n pi x / L) on [0, L] extend oddly to [0, 2L) and are then exact
superpositions of two grid plane waves, so free spectral propagation
evolves them without any wall potential.  Everything physical happens in
[0, L]; the upper half is the mirror image.
"""

from __future__ import annotations

import numpy as np
from scipy.special import eval_hermite

from .flow import PilotFlow
from .grids import GridSpec
from .schrodinger import Potential, WaveFunction


def plane_wave(grid: GridSpec, modes, time: float = 0.0) -> WaveFunction:
    """exp(i k . x) with k_a = 2 pi modes[a] / extent along each axis."""
    modes = np.atleast_1d(np.asarray(modes, dtype=int))
    if modes.size != grid.axis_count:
        raise ValueError("one integer mode per axis")
    coords = grid.coordinates()
    phase = np.zeros(grid.shape)
    for a in range(grid.axis_count):
        phase = phase + (2.0 * np.pi * modes[a] / grid.extent) * coords[a]
    return WaveFunction.from_values(grid, np.exp(1j * phase), time)


def plane_wave_k(grid: GridSpec, modes) -> np.ndarray:
    """The wavevector belonging to :func:`plane_wave` with these modes."""
    modes = np.atleast_1d(np.asarray(modes, dtype=int))
    return 2.0 * np.pi * modes / grid.extent


def superposed_plane_waves(grid: GridSpec, mode_list, amplitudes,
                           time: float = 0.0) -> WaveFunction:
    vals = np.zeros(grid.shape, dtype=complex)
    coords = grid.coordinates()
    for modes, c in zip(mode_list, amplitudes):
        modes = np.atleast_1d(np.asarray(modes, dtype=int))
        phase = np.zeros(grid.shape)
        for a in range(grid.axis_count):
            phase = phase + (2.0 * np.pi * modes[a] / grid.extent) * coords[a]
        vals = vals + c * np.exp(1j * phase)
    return WaveFunction.from_values(grid, vals, time)


def gaussian_packet(grid: GridSpec, sigma, center=None, kick=0.0,
                    time: float = 0.0) -> WaveFunction:
    """Gaussian with position spread ``sigma`` per axis and optional kick.

    ``kick`` is a plain wavenumber; it need not be grid-commensurate since
    the envelope kills the wrap mismatch for packets well inside the box.
    """
    sig = np.broadcast_to(np.atleast_1d(np.asarray(sigma, float)),
                          (grid.axis_count,))
    if center is None:
        center = grid.origin + 0.5 * grid.extent
    cen = np.broadcast_to(np.atleast_1d(np.asarray(center, float)),
                          (grid.axis_count,))
    kik = np.broadcast_to(np.atleast_1d(np.asarray(kick, float)),
                          (grid.axis_count,))
    coords = grid.coordinates()
    expo = np.zeros(grid.shape, dtype=complex)
    for a in range(grid.axis_count):
        dx = coords[a] - cen[a]
        expo = expo - dx ** 2 / (4.0 * sig[a] ** 2) + 1j * kik[a] * dx
    return WaveFunction.from_values(grid, np.exp(expo), time)


def harmonic_eigenstate(grid: GridSpec, n: int, omega: float, mass: float = 1.0,
                        center: float | None = None, time: float = 0.0) -> WaveFunction:
    """1D oscillator eigenstate; grid normalization absorbs the constants."""
    if grid.axis_count != 1:
        raise ValueError("one axis only")
    if center is None:
        center = grid.origin + 0.5 * grid.extent
    x = grid.axis() - center
    u = np.sqrt(mass * omega) * x
    vals = eval_hermite(n, u) * np.exp(-0.5 * u ** 2)
    return WaveFunction.from_values(grid, vals.astype(complex), time)


def harmonic_ground_state(grid: GridSpec, omega: float, mass: float = 1.0,
                          center: float | None = None, time: float = 0.0) -> WaveFunction:
    return harmonic_eigenstate(grid, 0, omega, mass, center, time)


# ---------------------------------------------------------------------------
# hard-wall box on the doubled domain
# ---------------------------------------------------------------------------

def box_grid(points: int, length: float = 1.0) -> GridSpec:
    """Periodic grid covering [0, 2 L) for a box of size L."""
    return GridSpec(axis_count=1, points=points, extent=2.0 * length, origin=0.0)


def box_energies(n_modes: int, length: float = 1.0, mass: float = 1.0) -> np.ndarray:
    n = np.arange(1, n_modes + 1)
    return (n * np.pi / length) ** 2 / (2.0 * mass)


def box_superposition(grid: GridSpec, coefficients, length: float = 1.0,
                      mass: float = 1.0, time: float = 0.0) -> WaveFunction:
    """Odd-extended superposition sum_n c_n sin(n pi x / L) exp(-i E_n t)."""
    c = np.asarray(coefficients, dtype=complex)
    if abs(grid.extent - 2.0 * length) > 1e-12 * length:
        raise ValueError("grid must cover [0, 2L); use box_grid")
    x = grid.axis()
    energies = box_energies(c.size, length, mass)
    vals = np.zeros(grid.shape, dtype=complex)
    for n, (cn, en) in enumerate(zip(c, energies), start=1):
        vals += cn * np.sin(n * np.pi * x / length) * np.exp(-1j * en * time)
    return WaveFunction.from_values(grid, vals, time)


def box_superposition_flow(grid: GridSpec, coefficients, times,
                           length: float = 1.0, mass: float = 1.0) -> PilotFlow:
    """Lazily evaluated exact flow for a box-mode superposition."""
    coefficients = np.asarray(coefficients, dtype=complex)

    def factory(t: float) -> WaveFunction:
        return box_superposition(grid, coefficients, length, mass, time=t)

    return PilotFlow.from_callable(factory, grid, mass, times,
                                   potential=Potential.free(mass, grid.axis_count))


def random_box_coefficients(n_modes: int, seed: int) -> np.ndarray:
    """Equal-weight mode amplitudes with seeded random phases."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)
    return np.exp(1j * phases) / np.sqrt(n_modes)


# ---------------------------------------------------------------------------
# 2D states
# ---------------------------------------------------------------------------

def vortex_state(grid: GridSpec, winding: int = 1, sigma: float = 1.0,
                 time: float = 0.0) -> WaveFunction:
    """(x + i y)^w times a Gaussian envelope, centered in the box."""
    if grid.axis_count != 2:
        raise ValueError("two axes required")
    if winding < 1:
        raise ValueError("winding must be a positive integer")
    xc = grid.origin + 0.5 * grid.extent
    x, y = grid.coordinates()
    z = (x - xc) + 1j * (y - xc)
    vals = z ** winding * np.exp(-(np.abs(z) ** 2) / (4.0 * sigma ** 2))
    return WaveFunction.from_values(grid, vals, time)


def static_flow(psi: WaveFunction, masses, span: float = 1.0,
                potential: Potential | None = None) -> PilotFlow:
    """Two-snapshot constant-in-time flow around a single state.

    Handy for sampling instantaneous fields (circulation loops, field
    checks) through the same interpolation path as real evolutions.
    """
    pair = [psi, psi.with_time(psi.time + span)]
    return PilotFlow.from_snapshots(pair, masses, potential)


def entangled_harmonic_pair(grid: GridSpec, omega: float, masses,
                            mixing: float = 0.5, phase: float = 0.0,
                            time: float = 0.0) -> WaveFunction:
    """Two-mode entangled pair on a 2-axis grid.

    psi(x, y) = N [ phi0(x) phi0(y) + mixing e^{i phase} phi1(x) phi1(y) ]
    with oscillator modes phi_n.  ``mixing = 0`` gives a product state.
    """
    if grid.axis_count != 2:
        raise ValueError("two axes required")
    m = np.atleast_1d(np.asarray(masses, dtype=float))
    if m.size == 1:
        m = np.repeat(m, 2)
    center = grid.origin + 0.5 * grid.extent
    x = grid.axis() - center

    def mode(n, mass):
        u = np.sqrt(mass * omega) * x
        f = eval_hermite(n, u) * np.exp(-0.5 * u ** 2)
        return f / np.sqrt(np.sum(np.abs(f) ** 2) * grid.spacing)

    p0x, p0y = mode(0, m[0]), mode(0, m[1])
    p1x, p1y = mode(1, m[0]), mode(1, m[1])
    vals = np.outer(p0x, p0y) + mixing * np.exp(1j * phase) * np.outer(p1x, p1y)
    return WaveFunction.from_values(grid, vals, time)
