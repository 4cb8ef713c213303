"""Trajectory integration, transport identities, and circulation.

Oracles: the plane wave moves points at k/m, the harmonic ground state
freezes them, and the free Gaussian carries x0 to x0 sigma(t)/sigma0.
The vortex states give exact 2 pi m circulation by phase winding.
"""

import numpy as np
import pytest

from pilotwave import states
from pilotwave.errors import NodeCollisionError
from pilotwave.flow import PilotFlow
from pilotwave.grids import GridSpec
from pilotwave.schrodinger import Potential
from pilotwave.trajectories import (
    advance,
    amplitude_transport_check,
    circulation,
    comoving_volume_check,
    integrate_trajectory,
    newton_consistency,
    psi_reconstruction_check,
)

from conftest import sigma_free


# ---------------------------------------------------------------------------
# guidance examples


def test_plane_wave_point_moves_at_k_over_m(plane_flow):
    # positions carry the periodic lift, so the straight line is the oracle
    k = 4.0 * np.pi
    traj = integrate_trajectory(plane_flow, [0.3], 0.0, 1.5, substeps=2)
    expected = 0.3 + k * traj.times
    assert np.max(np.abs(traj.positions[:, 0] - expected)) < 1e-8
    assert not traj.truncated


def test_ground_state_point_stays_put(ground_flow):
    traj = integrate_trajectory(ground_flow, [0.8], 0.0, 4.0, substeps=2)
    assert np.max(np.abs(traj.positions[:, 0] - 0.8)) < 1e-9
    assert np.max(np.abs(traj.velocities)) < 1e-8


def test_gaussian_point_rides_the_spreading_width(gauss_flow):
    for x0 in (-1.2, 0.5, 1.4):
        traj = integrate_trajectory(gauss_flow, [x0], 0.0, 3.0, substeps=4,
                                    record_times=np.linspace(0.0, 3.0, 7))
        expected = x0 * sigma_free(traj.times, 0.7) / 0.7
        assert np.max(np.abs(traj.positions[:, 0] - expected)
                      / np.maximum(np.abs(expected), 0.1)) < 5e-3


# ---------------------------------------------------------------------------
# transport identities


def test_amplitude_transport_plane_wave_factor_is_one(plane_flow):
    traj = integrate_trajectory(plane_flow, [0.25], 0.0, 1.0, substeps=2)
    check = amplitude_transport_check(plane_flow, traj)
    assert check.residual_max < 1e-8
    assert np.max(np.abs(check.volume_factors - 1.0)) < 1e-8


def test_amplitude_transport_gaussian_volume_is_sigma_ratio(gauss_flow):
    traj = integrate_trajectory(gauss_flow, [0.9], 0.0, 3.0, substeps=4,
                                record_times=np.linspace(0.0, 3.0, 13))
    check = amplitude_transport_check(gauss_flow, traj)
    assert check.residual_max < 0.01
    expected = sigma_free(traj.times, 0.7) / 0.7
    assert np.max(np.abs(check.volume_factors / expected - 1.0)) < 5e-3


def test_reconstruction_plane_wave_with_closed_form_action(plane_flow):
    # Lagrangian along the path is k^2/2m - 0, constant
    k = 4.0 * np.pi
    traj = integrate_trajectory(plane_flow, [0.1], 0.0, 1.25, substeps=2)
    check = psi_reconstruction_check(plane_flow, traj)
    assert check.modulus_residual_max < 1e-6
    assert check.phase_residual_max < 1e-6
    action = traj.action_integral[-1]
    expected = 0.5 * k ** 2 * 1.25
    assert abs(action - expected) < 1e-6 * expected


def test_reconstruction_ground_state_phase_runs_at_half_omega(ground_flow):
    # kinetic term zero, Q + V = omega/2: the action integral is the
    # negative of the phase advance of the stationary state
    traj = integrate_trajectory(ground_flow, [1.1], 0.0, 3.0, substeps=2,
                                record_times=np.linspace(0.0, 3.0, 16))
    check = psi_reconstruction_check(ground_flow, traj)
    assert check.modulus_residual_max < 1e-4
    assert abs(traj.action_integral[-1] - (-0.5 * 3.0)) < 1e-4


def test_reconstruction_free_gaussian(gauss_flow):
    traj = integrate_trajectory(gauss_flow, [0.6], 0.0, 1.0, substeps=4,
                                record_times=np.linspace(0.0, 1.0, 11))
    check = psi_reconstruction_check(gauss_flow, traj)
    assert check.modulus_residual_max < 1e-3
    assert check.phase_residual_max < 1e-3


def test_newton_consistency_plane_wave(plane_flow):
    traj = integrate_trajectory(plane_flow, [0.4], 0.0, 1.0, substeps=2,
                                record_times=np.linspace(0.0, 1.0, 21))
    assert newton_consistency(plane_flow, traj) < 1e-6


def test_newton_consistency_ground_state(ground_flow):
    traj = integrate_trajectory(ground_flow, [0.9], 0.0, 2.0, substeps=2,
                                record_times=np.linspace(0.0, 2.0, 21))
    assert newton_consistency(ground_flow, traj) < 1e-6


def test_newton_consistency_gaussian_mid_spread(gauss_flow):
    traj = integrate_trajectory(gauss_flow, [0.8], 0.5, 1.5, substeps=4,
                                record_times=np.linspace(0.5, 1.5, 41))
    assert newton_consistency(gauss_flow, traj) < 0.02


def test_comoving_volume_bundle_agrees_with_the_integral(gauss_flow):
    bundle, integral = comoving_volume_check(gauss_flow, [0.7], 1e-3,
                                             0.0, 3.0, substeps=4)
    sigma_ratio = sigma_free(3.0, 0.7) / 0.7
    assert abs(bundle / integral - 1.0) < 1e-3
    assert abs(integral / sigma_ratio - 1.0) < 5e-3


# ---------------------------------------------------------------------------
# bundle invariants


def test_trajectories_preserve_order(gauss_flow):
    starts = np.linspace(-1.5, 1.5, 31)[:, None]
    res = advance(gauss_flow, starts, 0.0, 3.0, substeps=4)
    assert res.truncated.size == 0
    order = np.diff(res.positions[:, 0])
    assert np.all(order > 0)


def test_forward_then_backward_returns_to_the_start(gauss_flow):
    starts = np.array([[-1.0], [0.3], [1.2]])
    fwd = advance(gauss_flow, starts, 0.0, 2.5, substeps=4)
    back = advance(gauss_flow, fwd.positions, 2.5, 0.0, substeps=4)
    extent = gauss_flow.grid.extent
    assert np.max(np.abs(back.positions - starts)) < 1e-6 * extent


def test_conserved_measure_along_a_bundle(gauss_flow):
    # a^2(X(t), t) times the comoving volume factor stays at its initial
    # value within 1%
    for x0 in (-0.9, 0.4, 1.1):
        traj = integrate_trajectory(gauss_flow, [x0], 0.0, 3.0, substeps=4,
                                    record_times=np.linspace(0.0, 3.0, 7))
        dens = np.array([gauss_flow.density_at(traj.positions[k][None, :],
                                               traj.times[k])[0]
                         for k in range(traj.times.size)])
        measure = dens * np.exp(traj.divergence_integral)
        assert np.max(np.abs(measure / measure[0] - 1.0)) < 0.01


def test_trajectory_export_has_one_row_per_sample(gauss_flow):
    traj = integrate_trajectory(gauss_flow, [0.5], 0.0, 1.0, substeps=2,
                                record_times=np.linspace(0.0, 1.0, 5))
    text = traj.export_text()
    lines = text.strip().splitlines()
    assert lines[0].startswith("# t\t")
    assert len(lines) == 2 + 5


# ---------------------------------------------------------------------------
# circulation


@pytest.fixture(scope="module")
def vortex_flow():
    grid = GridSpec(axis_count=2, points=128, extent=16.0, origin=-8.0)
    psi = states.vortex_state(grid, winding=1, sigma=1.0)
    return states.static_flow(psi, 1.0)


def test_circulation_vanishes_in_a_plain_packet_region():
    grid = GridSpec(axis_count=2, points=128, extent=16.0, origin=-8.0)
    psi = states.gaussian_packet(grid, sigma=1.5, center=0.0)
    flow = states.static_flow(psi, 1.0)
    square = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
    res = circulation(flow, 0.0, square)
    assert abs(res.mass_weighted) < 1e-6


def test_circulation_around_a_unit_vortex_is_two_pi(vortex_flow):
    theta = np.linspace(0.0, 2.0 * np.pi, 13)[:-1]
    loop = np.stack([1.5 * np.cos(theta), 1.5 * np.sin(theta)], axis=1)
    res = circulation(vortex_flow, 0.0, loop, samples_per_segment=64)
    assert abs(res.mass_weighted - 2.0 * np.pi) < 1e-4
    assert abs(res.winding - 1.0) < 2e-5


def test_circulation_doubles_for_a_double_winding():
    grid = GridSpec(axis_count=2, points=128, extent=16.0, origin=-8.0)
    psi = states.vortex_state(grid, winding=2, sigma=1.0)
    flow = states.static_flow(psi, 1.0)
    theta = np.linspace(0.0, 2.0 * np.pi, 13)[:-1]
    loop = np.stack([1.5 * np.cos(theta), 1.5 * np.sin(theta)], axis=1)
    res = circulation(flow, 0.0, loop, samples_per_segment=64)
    assert abs(res.mass_weighted - 4.0 * np.pi) < 1e-4


def test_circulation_refuses_loops_through_the_node(vortex_flow):
    square = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
    with pytest.raises(NodeCollisionError):
        circulation(vortex_flow, 0.0, square)
