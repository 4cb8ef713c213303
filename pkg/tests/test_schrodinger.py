"""Propagator, derived fields, and snapshot files.

The oracles are all closed forms: plane-wave dispersion phases, the
stationary harmonic ground state, and the free-Gaussian width law
sigma(t)^2 = sigma0^2 (1 + (t / 2 m sigma0^2)^2).
"""

import numpy as np
import pytest

from pilotwave import states
from pilotwave.errors import PropagationDivergedError, StabilityBoundError
from pilotwave.grids import GridSpec
from pilotwave.schrodinger import (
    Potential,
    WaveFunction,
    continuity_residual,
    energy,
    load_snapshot,
    node_mask,
    probability_current,
    propagate,
    quantum_potential,
    save_snapshot,
    to_table_text,
    velocity_field,
)

from conftest import sigma_free


def unit_grid(points=64, extent=1.0):
    return GridSpec(axis_count=1, points=points, extent=extent)


# ---------------------------------------------------------------------------
# grids


def test_grid_rejects_odd_or_tiny_point_counts():
    with pytest.raises(ValueError):
        GridSpec(axis_count=1, points=63, extent=1.0)
    with pytest.raises(ValueError):
        GridSpec(axis_count=1, points=4, extent=1.0)
    with pytest.raises(ValueError):
        GridSpec(axis_count=1, points=64, extent=-2.0)


def test_grid_wrap_is_idempotent_and_in_range():
    grid = GridSpec(axis_count=1, points=16, extent=3.0, origin=-1.0)
    x = np.linspace(-7.0, 9.0, 201)
    w = grid.wrap(x)
    assert np.all(w >= -1.0) and np.all(w < 2.0)
    assert np.allclose(grid.wrap(w), w, atol=1e-12)


def test_derivative_wavenumbers_zero_the_nyquist_bin():
    grid = unit_grid(points=32)
    k = grid.wavenumbers()
    kd = grid.derivative_wavenumbers()
    assert kd[16] == 0.0
    assert k[16] != 0.0
    mask = np.arange(32) != 16
    assert np.array_equal(k[mask], kd[mask])


# ---------------------------------------------------------------------------
# wavefunction container


def test_wavefunction_normalizes_and_freezes_amplitudes():
    grid = unit_grid()
    psi = WaveFunction.from_values(grid, np.ones(grid.shape) * 3.7)
    assert abs(psi.norm() - 1.0) < 1e-12
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0.0


def test_wavefunction_rejects_bad_norm_and_nonfinite():
    grid = unit_grid()
    with pytest.raises(ValueError):
        WaveFunction(grid, np.ones(grid.shape) * 2.0)
    vals = np.ones(grid.shape, dtype=complex)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        WaveFunction(grid, vals)


# ---------------------------------------------------------------------------
# propagation examples


def test_plane_wave_acquires_the_dispersion_phase():
    grid = unit_grid(points=64)
    psi0 = states.plane_wave(grid, 3)
    k = states.plane_wave_k(grid, 3)[0]
    dt = 1e-3
    psi1 = propagate(psi0, Potential.free(1.0, 1), dt, steps=10)
    expected = psi0.amplitudes * np.exp(-1j * k ** 2 * 10 * dt / 2.0)
    assert np.max(np.abs(psi1.amplitudes - expected)) < 1e-12


def test_harmonic_ground_state_density_is_stationary():
    grid = GridSpec(axis_count=1, points=256, extent=24.0, origin=-12.0)
    psi0 = states.harmonic_ground_state(grid, omega=1.0)
    pot = Potential.harmonic(1.0, 1.0, 0.0)
    psi1 = propagate(psi0, pot, dt=5e-4, steps=1000)
    assert np.max(np.abs(psi1.density() - psi0.density())) < 1e-8


def test_free_gaussian_spreads_at_the_analytic_rate():
    grid = GridSpec(axis_count=1, points=1024, extent=80.0, origin=-40.0)
    sigma0 = 0.7
    psi = states.gaussian_packet(grid, sigma=sigma0, center=0.0)
    pot = Potential.free(1.0, 1)
    x = grid.axis()
    for t_target in (1.0, 2.0, 3.0):
        psi = propagate(psi, pot, dt=0.005, steps=int(round(1.0 / 0.005)))
        rho = psi.density()
        var = np.sum(x ** 2 * rho) * grid.spacing
        measured = np.sqrt(var)
        assert abs(measured / sigma_free(t_target, sigma0) - 1.0) < 1e-3


def test_propagate_guards_dt_against_the_potential_phase_bound():
    grid = GridSpec(axis_count=1, points=128, extent=24.0, origin=-12.0)
    psi = states.harmonic_ground_state(grid, omega=1.0)
    pot = Potential.harmonic(1.0, 1.0, 0.0)
    bound = pot.max_stable_dt(grid)
    with pytest.raises(StabilityBoundError):
        propagate(psi, pot, dt=bound * 1.5)
    propagate(psi, pot, dt=bound * 0.5)


# ---------------------------------------------------------------------------
# velocity field examples


def test_velocity_of_plane_wave_is_k_over_m():
    grid = unit_grid(points=64)
    psi = states.plane_wave(grid, 2)
    k = states.plane_wave_k(grid, 2)[0]
    for mass in (1.0, 2.5):
        v = velocity_field(psi, masses=mass)
        assert np.max(np.abs(v.values[0] - k / mass)) < 1e-10
        assert not v.node_mask.any()


def test_velocity_of_a_real_wavefunction_vanishes():
    grid = GridSpec(axis_count=1, points=256, extent=24.0, origin=-12.0)
    psi = states.harmonic_ground_state(grid, omega=1.0)
    v = velocity_field(psi)
    # the residual concentrates in barely-unmasked tail cells, hence the
    # generous absolute floor
    assert np.max(np.abs(v.values)) < 1e-8


def test_velocity_of_two_wave_superposition_away_from_the_dips():
    # c (e^{ik1 x} + e^{ik2 x}) has v = (k1+k2)/2m wherever the cosine
    # envelope is well away from zero.
    grid = unit_grid(points=256)
    psi = states.superposed_plane_waves(grid, [(1,), (3,)], [1.0, 1.0])
    k1 = states.plane_wave_k(grid, 1)[0]
    k2 = states.plane_wave_k(grid, 3)[0]
    v = velocity_field(psi, masses=1.0)
    envelope = np.abs(psi.amplitudes)
    safe = envelope > 0.5 * envelope.max()
    assert np.max(np.abs(v.values[0][safe] - (k1 + k2) / 2.0)) < 1e-6


def test_probability_current_is_density_times_velocity():
    grid = unit_grid(points=128)
    psi = states.superposed_plane_waves(grid, [(1,), (2,)], [0.8, 0.6])
    j = probability_current(psi)
    v = velocity_field(psi)
    keep = ~v.node_mask
    assert np.allclose(j[0][keep], (psi.density() * v.values[0])[keep],
                       atol=1e-10)


# ---------------------------------------------------------------------------
# quantum potential examples


def test_quantum_potential_of_plane_wave_is_zero():
    grid = unit_grid(points=64)
    psi = states.plane_wave(grid, 4)
    q, mask = quantum_potential(psi)
    assert not mask.any()
    assert np.max(np.abs(q)) < 1e-9


def test_ground_state_q_plus_v_is_half_omega():
    # For the oscillator ground state Q + V = omega/2 pointwise.
    grid = GridSpec(axis_count=1, points=512, extent=30.0, origin=-15.0)
    omega = 1.0
    psi = states.harmonic_ground_state(grid, omega=omega)
    q, mask = quantum_potential(psi)
    v = Potential.harmonic(omega, 1.0, 0.0).evaluate(grid)
    total = (q + v)[~mask]
    assert np.max(np.abs(total - omega / 2.0)) < 1e-6


def test_node_cells_are_flagged():
    grid = unit_grid(points=128)
    # equal two-mode superposition has genuine zeros
    psi = states.superposed_plane_waves(grid, [(1,), (2,)],
                                        [1.0, 1.0])
    assert node_mask(psi).any()
    q, mask = quantum_potential(psi)
    assert mask.any()
    assert np.all(q[mask] == 0.0)


# ---------------------------------------------------------------------------
# invariants


def test_norm_continuity_and_energy_over_a_long_run():
    grid = GridSpec(axis_count=1, points=512, extent=40.0, origin=-20.0)
    psi = states.gaussian_packet(grid, sigma=1.0, center=-3.0, kick=1.2)
    pot = Potential.harmonic(0.7, 1.0, 0.0)
    e0 = energy(psi, pot)
    dt = 5e-4
    cur = psi
    for _ in range(20):
        cur = propagate(cur, pot, dt, steps=49)
        nxt = propagate(cur, pot, dt, steps=1)
        assert abs(nxt.norm() - 1.0) < 1e-9
        # residual between adjacent steps, so the finite-difference
        # window does not dominate the propagation defect
        assert continuity_residual(cur, nxt) < 1e-4
        assert abs(energy(nxt, pot) - e0) <= 1e-6 * abs(e0)
        cur = nxt


def test_propagation_diverged_error_carries_the_step():
    # a NaN planted in a tabulated potential blows up on the first step
    grid = unit_grid(points=32)
    psi = states.plane_wave(grid, 1)
    vals = np.zeros(grid.shape)
    vals[5] = np.nan
    pot = Potential.tabulated(vals, masses=1.0)
    with pytest.raises(PropagationDivergedError) as err:
        propagate(psi, pot, dt=1e-4, steps=3)
    assert err.value.step == 0


# ---------------------------------------------------------------------------
# potentials


def test_combined_potentials_merge_harmonic_wells():
    a = Potential.harmonic(1.0, 1.0, 0.0)
    b = Potential.harmonic(2.0, 1.0, 1.0)
    c = a.combined(b)
    assert c.kind == "harmonic"
    assert np.isclose(c.omegas[0], np.sqrt(5.0))
    # minimum sits at the weighted center (0*1 + 1*4)/5
    assert np.isclose(c.center[0], 0.8)
    assert a.combined(Potential.free(1.0, 1)) is a


def test_combined_rejects_mismatched_masses():
    a = Potential.harmonic(1.0, 1.0, 0.0)
    b = Potential.harmonic(1.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        a.combined(b)


# ---------------------------------------------------------------------------
# snapshot files


def test_snapshot_round_trip_is_bit_exact(tmp_path):
    grid = GridSpec(axis_count=1, points=64, extent=5.0, origin=-2.5)
    psi = states.gaussian_packet(grid, sigma=0.5, kick=2.0, time=1.25)
    path = tmp_path / "snap.bin"
    save_snapshot(psi, path)
    back = load_snapshot(path)
    assert back.grid == grid
    assert back.time == psi.time
    assert np.array_equal(back.amplitudes, psi.amplitudes)


def test_snapshot_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a snapshot at all")
    with pytest.raises(ValueError):
        load_snapshot(path)


def test_table_text_has_header_and_rows():
    grid = unit_grid(points=16)
    psi = states.plane_wave(grid, 1)
    text = to_table_text(psi)
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    assert len(lines) == 2 + 16
