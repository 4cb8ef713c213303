"""Trajectory integration along a pilot flow and the transport identities.

The integrator is classical RK4 on the interpolated velocity field, with
positions kept on the covering space (never wrapped) so displacements and
loop integrals are unambiguous; fields wrap coordinates internally.

Two integrals ride along each trajectory as augmented state:

* the accumulated velocity divergence, whose exponential gives the
  comoving-volume factor and, with the opposite sign, the amplitude
  transport factor;
* the accumulated Lagrangian (kinetic minus external minus quantum
  potential), which reproduces the phase advance of the wavefunction
  along the path.

Steps whose stage evaluations touch a node neighbourhood are retried at
half the step, down to ``step / 2**max_halvings``.  A particle still
flagged at the floor takes the floor-sized step anyway, against the
damped near-node field, and carries ``near_node`` and ``step_clamped``
flags; persistent flags signal under-resolution, not an error.  Only a
non-finite position truncates a particle, freezing it at its last good
value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NodeCollisionError
from .flow import PilotFlow

MAX_HALVINGS = 10  # min step = base step / 1024


@dataclass
class AdvanceResult:
    """Batch integration outcome.

    ``record_times`` / ``record_positions`` hold the requested sample
    times; integrals are cumulative from the start of the advance.
    """

    positions: np.ndarray
    divergence_integral: np.ndarray
    action_integral: np.ndarray
    truncated: np.ndarray          # indices frozen after a non-finite step
    step_clamped: np.ndarray       # bool per particle: any halving happened
    near_node: np.ndarray          # bool per particle: any flagged stage seen
    record_times: np.ndarray | None = None
    record_positions: np.ndarray | None = None
    record_div: np.ndarray | None = None
    record_action: np.ndarray | None = None


def _rk4_once(flow, x, t, h, with_integrals):
    s0 = flow.fields_at(round(t, 12))
    sm = flow.fields_at(round(t + 0.5 * h, 12))
    s1 = flow.fields_at(round(t + h, 12))
    v1, f1 = s0.velocity(x)
    x2 = x + (0.5 * h) * v1
    v2, f2 = sm.velocity(x2)
    x3 = x + (0.5 * h) * v2
    v3, f3 = sm.velocity(x3)
    x4 = x + h * v3
    v4, f4 = s1.velocity(x4)
    xn = x + (h / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
    flag = f1 | f2 | f3 | f4
    if not with_integrals:
        return xn, flag, f1, None, None
    d_inc = (h / 6.0) * (s0.divergence(x) + 2.0 * sm.divergence(x2)
                         + 2.0 * sm.divergence(x3) + s1.divergence(x4))
    a_inc = (h / 6.0) * (s0.lagrangian(x) + 2.0 * sm.lagrangian(x2)
                         + 2.0 * sm.lagrangian(x3) + s1.lagrangian(x4))
    return xn, flag, f1, d_inc, a_inc


def _step_adaptive(flow, x, t, h, depth, with_integrals, clamped, near):
    """One step of size h for every row of x, recursing on flagged rows.

    Returns new positions and the two integral increments; mutates the
    two flag arrays (views onto the caller's subset).  Halving is only
    useful for a particle whose later stages strayed near a node: one
    already inside the skirt at the start of the step stays flagged at
    any resolution, so it keeps its damped-field result immediately
    instead of recursing to the floor every step.
    """
    xn, flag, at_start, d_inc, a_inc = _rk4_once(flow, x, t, h, with_integrals)
    if not flag.any():
        return xn, d_inc, a_inc
    near |= flag
    retry = flag & ~at_start
    if depth >= MAX_HALVINGS or not retry.any():
        clamped[flag & ~at_start] = True
        return xn, d_inc, a_inc
    idx = np.nonzero(retry)[0]
    clamped[idx] = True
    sub_clamped = clamped[idx]
    sub_near = near[idx]
    half = 0.5 * h
    x_mid, d1, a1 = _step_adaptive(flow, x[idx], t, half, depth + 1,
                                   with_integrals, sub_clamped, sub_near)
    x_end, d2, a2 = _step_adaptive(flow, x_mid, t + half, half, depth + 1,
                                   with_integrals, sub_clamped, sub_near)
    xn[idx] = x_end
    if with_integrals:
        d_inc[idx] = d1 + d2
        a_inc[idx] = a1 + a2
    clamped[idx] = sub_clamped
    near[idx] = sub_near
    return xn, d_inc, a_inc


def _step_times(flow, t0, t1, substeps, record_times):
    lo, hi = (t0, t1) if t0 <= t1 else (t1, t0)
    span = hi - lo
    pts = [lo, hi]
    mesh = flow.times
    inside = mesh[(mesh > lo) & (mesh < hi)]
    pts.extend(inside.tolist())
    if record_times is not None:
        for t in np.atleast_1d(record_times):
            if t < lo - 1e-9 * max(span, 1.0) or t > hi + 1e-9 * max(span, 1.0):
                raise ValueError(f"record time {t} outside the integration window")
            pts.append(float(min(max(t, lo), hi)))
    pts = np.array(sorted(pts))
    keep = np.concatenate([[True], np.diff(pts) > 1e-12 * max(span, 1.0)])
    pts = pts[keep]
    if substeps > 1:
        refined = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            refined.extend(a + (b - a) * np.arange(1, substeps + 1) / substeps)
        pts = np.array(refined)
    if t0 > t1:
        pts = pts[::-1]
    return pts


def advance(flow: PilotFlow, positions, t0: float, t1: float,
            substeps: int = 1, with_integrals: bool = False,
            record_times=None) -> AdvanceResult:
    """Integrate a batch of configuration points from t0 to t1.

    ``t1 < t0`` integrates backward.  Snapshot mesh times inside the window
    always become step boundaries so the time interpolation stays linear
    within each RK4 step.
    """
    x = np.atleast_2d(np.array(positions, dtype=float))
    n = x.shape[0]
    div = np.zeros(n)
    act = np.zeros(n)
    clamped = np.zeros(n, dtype=bool)
    near = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)

    want_records = record_times is not None
    rec_ts = None
    records_x, records_d, records_a = [], [], []
    if want_records:
        rec_ts = np.atleast_1d(np.asarray(record_times, dtype=float))

    if t1 == t0:
        steps = np.array([t0])
    else:
        steps = _step_times(flow, t0, t1, substeps, rec_ts)

    span = max(abs(t1 - t0), 1.0)

    def maybe_record(t_now):
        if want_records and np.any(np.abs(rec_ts - t_now) <= 1e-9 * span):
            records_x.append(x.copy())
            records_d.append(div.copy())
            records_a.append(act.copy())

    maybe_record(steps[0])
    for a, b in zip(steps[:-1], steps[1:]):
        h = b - a
        idx = np.nonzero(~truncated)[0]
        if idx.size:
            sub_c = clamped[idx]
            sub_n = near[idx]
            xn, d_inc, a_inc = _step_adaptive(flow, x[idx], a, h, 0, with_integrals,
                                              sub_c, sub_n)
            bad = ~np.all(np.isfinite(xn), axis=1)
            if bad.any():
                xn[bad] = x[idx[bad]]
                truncated[idx[bad]] = True
                if with_integrals:
                    d_inc[bad] = 0.0
                    a_inc[bad] = 0.0
            x[idx] = xn
            if with_integrals:
                div[idx] += d_inc
                act[idx] += a_inc
            clamped[idx] = sub_c
            near[idx] = sub_n
        maybe_record(b)

    result = AdvanceResult(
        positions=x,
        divergence_integral=div,
        action_integral=act,
        truncated=np.nonzero(truncated)[0],
        step_clamped=clamped,
        near_node=near,
    )
    if want_records:
        result.record_times = rec_ts
        result.record_positions = np.array(records_x)
        result.record_div = np.array(records_d)
        result.record_action = np.array(records_a)
    return result


# ---------------------------------------------------------------------------
# single-trajectory records
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Sampled trajectory with its transport integrals.

    ``positions`` has shape (k, axes); the integrals are cumulative from
    ``times[0]``.  ``near_node`` / ``step_clamped`` mark samples whose
    preceding interval touched a node neighbourhood or needed halving.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    divergence_integral: np.ndarray
    action_integral: np.ndarray
    near_node: np.ndarray
    step_clamped: np.ndarray
    truncated: bool

    def export_text(self) -> str:
        axes = self.positions.shape[1]
        names = (["t"] + [f"x{i}" for i in range(axes)] + [f"v{i}" for i in range(axes)]
                 + ["divergence_integral", "action_integral"])
        lines = ["# " + "\t".join(names),
                 "# units: time, length, length/time, dimensionless, action"]
        for k in range(self.times.size):
            row = ([self.times[k]] + list(self.positions[k]) + list(self.velocities[k])
                   + [self.divergence_integral[k], self.action_integral[k]])
            lines.append("\t".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def integrate_trajectory(flow: PilotFlow, x0, t0: float, t1: float,
                         substeps: int = 1, record_times=None) -> Trajectory:
    """Integrate one configuration point, recording samples and integrals.

    By default samples land on every snapshot mesh time inside [t0, t1]
    plus both endpoints.
    """
    if record_times is None:
        lo, hi = (t0, t1) if t0 <= t1 else (t1, t0)
        mesh = flow.times[(flow.times > lo) & (flow.times < hi)]
        record_times = np.array(sorted({float(t0), *mesh.tolist(), float(t1)}))
        if t0 > t1:
            record_times = record_times[::-1]
    record_times = np.atleast_1d(np.asarray(record_times, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    res = advance(flow, x0[None, :], t0, t1, substeps=substeps,
                  with_integrals=True, record_times=record_times)
    order = np.argsort(record_times) if t0 <= t1 else np.argsort(-record_times)
    ts = record_times[order]
    # records were appended in integration order, which follows `order`
    pos = res.record_positions[:, 0, :]
    vel = np.empty_like(pos)
    flags = np.zeros(ts.size, dtype=bool)
    for k, t in enumerate(ts):
        v, f = flow.fields_at(float(t)).velocity(pos[k][None, :])
        vel[k] = v[0]
        flags[k] = f[0]
    return Trajectory(
        times=ts,
        positions=pos,
        velocities=vel,
        divergence_integral=res.record_div[:, 0],
        action_integral=res.record_action[:, 0],
        near_node=flags,
        step_clamped=np.repeat(res.step_clamped[0], ts.size),
        truncated=bool(res.truncated.size),
    )


# ---------------------------------------------------------------------------
# transport identities
# ---------------------------------------------------------------------------

@dataclass
class TransportCheck:
    residual_max: float
    residuals: np.ndarray
    volume_factors: np.ndarray


def amplitude_transport_check(flow: PilotFlow, traj: Trajectory) -> TransportCheck:
    """Compare |psi|^2 along the path against the damped initial value.

    The transported density is a^2(start) * exp(-integral of div v); the
    returned volume factors are exp(+integral), the comoving-volume
    stretch of the same path.
    """
    dens = np.array([flow.density_at(traj.positions[k][None, :], traj.times[k])[0]
                     for k in range(traj.times.size)])
    transported = dens[0] * np.exp(-traj.divergence_integral)
    residuals = np.abs(dens - transported) / dens[0]
    return TransportCheck(residual_max=float(residuals.max()),
                          residuals=residuals,
                          volume_factors=np.exp(traj.divergence_integral))


@dataclass
class ReconstructionCheck:
    modulus_residual_max: float
    phase_residual_max: float
    modulus_residuals: np.ndarray
    phase_residuals: np.ndarray


def psi_reconstruction_check(flow: PilotFlow, traj: Trajectory) -> ReconstructionCheck:
    """Rebuild psi along the path from its start value and the two integrals.

    Modulus uses half the divergence integral, phase uses the accumulated
    Lagrangian; phase residuals are wrapped to (-pi, pi].
    """
    vals = np.array([flow.psi_at(traj.positions[k][None, :], traj.times[k])[0]
                     for k in range(traj.times.size)])
    rebuilt = vals[0] * np.exp(-0.5 * traj.divergence_integral
                               + 1j * traj.action_integral)
    mod = np.abs(np.abs(vals) - np.abs(rebuilt)) / np.abs(vals[0])
    phase = np.angle(vals * np.conj(rebuilt))
    return ReconstructionCheck(
        modulus_residual_max=float(mod.max()),
        phase_residual_max=float(np.abs(phase).max()),
        modulus_residuals=mod,
        phase_residuals=phase,
    )


def newton_consistency(flow: PilotFlow, traj: Trajectory,
                       force_floor: float = 1e-3) -> float:
    """Max relative defect of m dv/dt = -grad(V + Q) along the trajectory.

    The acceleration is the centered difference of the sampled velocities;
    the force is interpolated from the grid.  Sample spacing sets the
    differencing error, so pass a trajectory recorded on a reasonably fine
    mesh.  ``force_floor`` regularizes flows where both sides vanish: the
    grid force there is pure spectral rounding debris (third derivatives
    of |psi| amplify machine noise to ~1e-10), and dividing one artifact
    by another would report garbage.  The default treats forces below
    1e-3 in natural units as zero; tighten it for dynamics that is weak
    but genuinely resolved.
    """
    if traj.times.size < 3:
        raise ValueError("need at least three samples")
    worst = 0.0
    m = flow.masses
    for k in range(1, traj.times.size - 1):
        dt2 = traj.times[k + 1] - traj.times[k - 1]
        accel = (traj.velocities[k + 1] - traj.velocities[k - 1]) / dt2
        force = -flow.fields_at(float(traj.times[k])).grad_vq(traj.positions[k][None, :])[0]
        defect = np.linalg.norm(m * accel - force)
        scale = np.linalg.norm(force) + force_floor
        worst = max(worst, defect / scale)
    return float(worst)


def comoving_volume_check(flow: PilotFlow, x0, delta: float,
                          t0: float, t1: float, substeps: int = 1):
    """Finite-bundle cross-check of the comoving volume factor.

    Integrates x0 +/- delta/2 along the first axis and compares the bundle
    stretch against exp(+divergence integral) of the central trajectory.
    Returns (bundle_factor, integral_factor).
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    offsets = np.zeros((3, x0.size))
    offsets[0, 0] = -0.5 * delta
    offsets[2, 0] = +0.5 * delta
    batch = x0[None, :] + offsets
    res = advance(flow, batch, t0, t1, substeps=substeps, with_integrals=True)
    stretch = (res.positions[2, 0] - res.positions[0, 0]) / delta
    return float(stretch), float(np.exp(res.divergence_integral[1]))


# ---------------------------------------------------------------------------
# circulation
# ---------------------------------------------------------------------------

@dataclass
class CirculationResult:
    """Loop integrals of the guidance field at fixed time.

    ``mass_weighted`` is the loop integral of sum_i m_i v_i dx_i (the
    phase-gradient circulation, an integer multiple of 2 pi around nodes);
    ``plain`` drops the mass factors.  ``winding`` is mass_weighted / 2 pi.
    """

    mass_weighted: float
    plain: float
    winding: float


def circulation(flow: PilotFlow, t: float, vertices,
                samples_per_segment: int = 32) -> CirculationResult:
    """Trapezoid circulation around a closed polygonal loop.

    The loop is closed automatically if the last vertex differs from the
    first.  Any sample inside a node neighbourhood raises
    :class:`NodeCollisionError`; deform the loop away from nodes.
    """
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    if verts.shape[0] < 3:
        raise ValueError("need at least three vertices")
    if not np.allclose(verts[0], verts[-1]):
        verts = np.vstack([verts, verts[0]])
    sampler = flow.fields_at(float(t))
    m = flow.masses
    total_w = 0.0
    total_p = 0.0
    for a, b in zip(verts[:-1], verts[1:]):
        s = np.linspace(0.0, 1.0, samples_per_segment + 1)
        pts = a[None, :] + s[:, None] * (b - a)[None, :]
        v, flags = sampler.velocity(pts)
        if flags.any():
            raise NodeCollisionError(
                "circulation loop passes through a node neighbourhood; "
                "deform the loop away from nodes")
        seg = b - a
        total_w += np.trapezoid(v @ (m * seg), s)
        total_p += np.trapezoid(v @ seg, s)
    return CirculationResult(mass_weighted=float(total_w), plain=float(total_p),
                             winding=float(total_w / (2.0 * np.pi)))
