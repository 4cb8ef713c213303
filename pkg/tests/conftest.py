"""Shared fixtures: small reference states and flows reused across tests.

Everything expensive is session-scoped.  The free Gaussian has closed-form
spreading, the box superpositions have exact eigenmode evolution, and the
harmonic ground state is stationary, so each fixture doubles as an oracle.
"""

import numpy as np
import pytest

from pilotwave import states
from pilotwave.flow import PilotFlow
from pilotwave.grids import GridSpec
from pilotwave.schrodinger import Potential


def sigma_free(t, sigma0, mass=1.0):
    """Closed-form width of a free Gaussian packet."""
    return sigma0 * np.sqrt(1.0 + (t / (2.0 * mass * sigma0 ** 2)) ** 2)


@pytest.fixture(scope="session")
def gauss_grid():
    return GridSpec(axis_count=1, points=1024, extent=80.0, origin=-40.0)


@pytest.fixture(scope="session")
def gauss_flow(gauss_grid):
    """Free Gaussian, sigma0 = 0.7, propagated over three time units.

    After t = 3 the width has grown by a factor 3.2, so spreading is
    well developed while the tails still sit far from the box edge.
    """
    psi0 = states.gaussian_packet(gauss_grid, sigma=0.7, center=0.0)
    return PilotFlow.from_propagation(psi0, Potential.free(1.0, 1),
                                      dt=0.01, n_intervals=300, substeps=2)


@pytest.fixture(scope="session")
def plane_flow():
    """Single plane wave, mode 2, on a unit periodic box; k = 4 pi.

    128 points keep the cubic interpolation of psi itself below 1e-6
    between grid nodes; the velocity is constant so the trajectories
    are insensitive to resolution.
    """
    grid = GridSpec(axis_count=1, points=128, extent=1.0)

    def factory(t):
        k = 2.0 * np.pi * 2 / grid.extent
        phase = k * grid.axis() - 0.5 * k ** 2 * t
        from pilotwave.schrodinger import WaveFunction
        return WaveFunction.from_values(grid, np.exp(1j * phase), t)

    times = np.linspace(0.0, 2.0, 81)
    return PilotFlow.from_callable(factory, grid, 1.0, times,
                                   potential=Potential.free(1.0, 1))


@pytest.fixture(scope="session")
def ground_flow():
    """Harmonic ground state held static; velocity vanishes identically."""
    grid = GridSpec(axis_count=1, points=256, extent=24.0, origin=-12.0)
    psi = states.harmonic_ground_state(grid, omega=1.0)
    return states.static_flow(psi, 1.0, span=4.0,
                              potential=Potential.harmonic(1.0, 1.0, 0.0))


@pytest.fixture(scope="session")
def box2_flow():
    """Two lowest box modes with fixed phases over one beat period."""
    grid = states.box_grid(256, 1.0)
    coeffs = states.random_box_coefficients(2, seed=3)
    t_end = 4.0 / np.pi
    mesh = np.linspace(0.0, t_end, 641)
    return states.box_superposition_flow(grid, coeffs, mesh)
