"""Coarse-grained transport: jump moments, diffusion, master equation.

The trajectory picture gives exact conservation of the density ratio f.
Coupling the tracked system to an equilibrium bath and averaging over
the bath coordinate washes that exactness out into a genuinely
dissipative description, and this module implements that chain at desk
scale, in three stages.

First, jump moments.  :func:`kramers_moyal_estimate` measures the
transition moments D_n of a path ensemble directly.  Deterministic
guidance makes D_1 converge to the velocity field and every higher
moment vanish linearly in the lag, which is the quantitative meaning of
"no intrinsic diffusion" at the exact level.

Second, the reduced diffusion equation.  Once the bath average endows
the system with an effective diffusion constant D_t, the ratio f_S
obeys an advection-diffusion equation whose diffusive part is the
weighted flux divergence (D_t/w^2) d(w^2 df) with w = |psi_S|^2.
:func:`fp_step` advances it explicitly with monotone differencing, and
:func:`h_valentini_rate` checks the resulting H theorem: dH/dt equals
-D_t * integral of w (grad f)^2 / f, and is never positive.

Third, the master-equation form.  :class:`TransitionKernel` holds a
jump kernel with a built-in stationary solution, :func:`master_step`
applies the gain-loss balance, and :func:`relative_entropy` provides
the Lyapunov functional that decreases monotonically under it.  Running
the same step against the time-reversed kernel convention makes the
relative entropy grow, which is the arrow-of-time caveat attached to
the whole construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import StabilityBoundError
from .schrodinger import NODE_EPSILON, WaveFunction, probability_current

__all__ = [
    "ConditionalVelocity",
    "JointState",
    "KramersMoyalEstimate",
    "ReducedField",
    "TransitionKernel",
    "conditional_velocity",
    "fp_evolve",
    "fp_step",
    "gaussian_kernel",
    "h_valentini",
    "h_valentini_rate",
    "kramers_moyal_estimate",
    "master_step",
    "reduced_field",
    "relative_entropy",
]

#: Maximum internal dt halvings in master_step before giving up.
MASTER_MAX_HALVINGS = 8

#: Normalization slack for constructed fields and joint states.
NORM_SLACK = 1e-6


# ---------------------------------------------------------------------------
# Jump moments


@dataclass(frozen=True)
class KramersMoyalEstimate:
    """Binned D_n estimate; empty bins carry NaN and a zero count."""

    order: int
    lag: float
    centers: np.ndarray
    values: np.ndarray
    counts: np.ndarray


def kramers_moyal_estimate(times, positions, lag: float, order: int,
                           bins: int = 16, span=None) -> KramersMoyalEstimate:
    """Estimate D_n(x) = <(x(t+lag) - x(t))^n> / (n! lag) binned by x(t).

    ``positions`` has shape (len(times), n_paths) for one axis; the mesh
    must be uniform and finer than the lag, and the lag must sit on the
    mesh to within 1e-9 so no interpolation is needed.  Increment starts
    are pooled over every valid mesh time, so the estimate is sharpest
    when the underlying field varies little over the pooled window.
    """
    times = np.asarray(times, dtype=float)
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[0] != times.size:
        raise ValueError("positions must have shape (len(times), n_paths)")
    if times.size < 2:
        raise ValueError("need at least two mesh times")
    dt = times[1] - times[0]
    if np.any(np.abs(np.diff(times) - dt) > 1e-9 * max(dt, 1.0)):
        raise ValueError("time mesh must be uniform")
    steps = int(round(lag / dt))
    if steps < 1 or abs(steps * dt - lag) > 1e-9 * max(lag, 1.0):
        raise ValueError("lag must be a positive multiple of the mesh step")
    if order < 1:
        raise ValueError("order must be at least 1")

    starts = pos[:-steps].ravel()
    deltas = (pos[steps:] - pos[:-steps]).ravel()
    if span is None:
        span = (float(np.min(starts)), float(np.max(starts)))
    edges = np.linspace(span[0], span[1], bins + 1)
    which = np.digitize(starts, edges[1:-1])

    moments = deltas ** order
    values = np.full(bins, np.nan)
    counts = np.zeros(bins, dtype=int)
    for b in range(bins):
        sel = which == b
        counts[b] = int(np.sum(sel))
        if counts[b]:
            values[b] = np.mean(moments[sel]) / (factorial(order) * lag)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return KramersMoyalEstimate(order=order, lag=float(lag), centers=centers,
                                values=values, counts=counts)


# ---------------------------------------------------------------------------
# System + bath: conditional velocity


@dataclass(frozen=True)
class JointState:
    """Two-axis wavefunction over (x_S, x_T) with the two masses."""

    psi: WaveFunction
    mass_s: float
    mass_t: float

    def __post_init__(self):
        if self.psi.grid.axis_count != 2:
            raise ValueError("joint state needs a 2-axis wavefunction")
        if abs(self.psi.norm() - 1.0) > NORM_SLACK:
            raise ValueError("joint state must be normalized")
        if not (self.mass_s > 0 and self.mass_t > 0):
            raise ValueError("masses must be positive")


@dataclass(frozen=True)
class ConditionalVelocity:
    """Bath-averaged guidance velocity on the system axis.

    ``flagged`` marks columns whose bath marginal fell below the node
    threshold; their values are NaN and ``excluded_weight`` is the
    total marginal weight they carried.
    """

    values: np.ndarray
    flagged: np.ndarray
    excluded_weight: float


def conditional_velocity(joint: JointState,
                         node_epsilon: float = NODE_EPSILON
                         ) -> ConditionalVelocity:
    """Average the system velocity over the bath at equilibrium weight.

    Computed as a ratio of bath integrals, current over density, so the
    node-diverging pointwise velocity never appears: the current is
    finite everywhere.  Columns where the bath marginal itself nearly
    vanishes are flagged instead of divided through.
    """
    grid = joint.psi.grid
    dens = joint.psi.density()
    current = probability_current(joint.psi, (joint.mass_s, joint.mass_t))
    dx = grid.spacing
    marginal = np.sum(dens, axis=1) * dx
    flux = np.sum(current[0], axis=1) * dx

    floor = node_epsilon * float(np.max(marginal))
    flagged = marginal <= floor
    values = np.full(grid.points, np.nan)
    ok = ~flagged
    values[ok] = flux[ok] / marginal[ok]
    excluded = float(np.sum(marginal[flagged]) * dx)
    return ConditionalVelocity(values=values, flagged=flagged,
                               excluded_weight=excluded)


# ---------------------------------------------------------------------------
# Reduced diffusion equation


@dataclass(frozen=True)
class ReducedField:
    """The ratio f_S on the system grid at one time, with its D_t."""

    values: np.ndarray
    time: float
    diffusion: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("reduced field must live on one axis")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("f_S must be finite and non-negative")
        if self.diffusion < 0:
            raise ValueError("diffusion constant must be non-negative")
        object.__setattr__(self, "values", v)


def _mass(values: np.ndarray, weights: np.ndarray, spacing: float) -> float:
    return float(np.sum(values * weights) * spacing)


def reduced_field(values, time: float, diffusion: float,
                  weights, spacing: float) -> ReducedField:
    """Build a ReducedField normalized against the supplied |psi_S|^2."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    total = _mass(v, w, spacing)
    if not total > 0:
        raise ValueError("field carries no probability mass")
    return ReducedField(values=v / total, time=float(time),
                        diffusion=float(diffusion))


def _check_normalized(values, weights, spacing):
    total = _mass(values, weights, spacing)
    if abs(total - 1.0) > NORM_SLACK:
        raise ValueError(
            f"int f |psi|^2 dx = {total:.8f}, outside 1 +- {NORM_SLACK}")


def fp_step(field: ReducedField, vbar, weights, spacing: float,
            dt: float, renormalize: bool = True) -> ReducedField:
    """One explicit step of the reduced advection-diffusion equation.

    The diffusive term is the flux form (D/w^2) d(w^2 df), differenced
    with face-averaged weights; advection is first-order upwind.  Both
    pieces keep the update a convex combination of neighbors, so f stays
    non-negative and new extrema cannot appear, provided dt respects the
    diffusive bound dx^2 w^2 / (2 D (w^2_+ + w^2_-)) and the advective
    CFL dx / |vbar|; violating either raises with the bound named.
    Normalization is re-enforced after the step unless ``renormalize``
    is off, and a step never changes the total mass by more than the
    scheme's own telescoping error, so the factor is always near one.
    """
    f = field.values
    n = f.size
    w = np.broadcast_to(np.asarray(weights, dtype=float), (n,))
    v = np.broadcast_to(np.asarray(vbar, dtype=float), (n,))
    if not np.all(np.isfinite(v)):
        raise ValueError("conditional velocity must be finite on the grid")
    if np.any(w <= 0):
        raise ValueError("|psi_S|^2 must be strictly positive on the grid")
    _check_normalized(f, w, spacing)
    d = field.diffusion
    dx = float(spacing)

    w2 = w * w
    w2_plus = 0.5 * (w2 + np.roll(w2, -1))   # face i+1/2
    w2_minus = np.roll(w2_plus, 1)           # face i-1/2

    if d > 0:
        diff_bound = float(np.min(dx * dx * w2 / (2.0 * d * (w2_plus + w2_minus))))
        if dt > diff_bound * (1 + 1e-12):
            raise StabilityBoundError(
                f"dt = {dt:.3e} exceeds the diffusive stability bound "
                f"dx^2 w^2 / (2 D (w^2_+ + w^2_-)) = {diff_bound:.3e}")
    vmax = float(np.max(np.abs(v)))
    if vmax > 0:
        cfl = dx / vmax
        if dt > cfl * (1 + 1e-12):
            raise StabilityBoundError(
                f"dt = {dt:.3e} exceeds the advective CFL bound "
                f"dx / max|vbar| = {cfl:.3e}")

    lap = (w2_plus * (np.roll(f, -1) - f)
           - w2_minus * (f - np.roll(f, 1))) / (dx * dx * w2)
    upwind = np.where(v > 0, f - np.roll(f, 1), np.roll(f, -1) - f) / dx
    f_new = f + dt * (d * lap - v * upwind)

    if renormalize:
        total = _mass(f_new, w, spacing)
        f_new = f_new / total
    return ReducedField(values=f_new, time=field.time + dt,
                        diffusion=field.diffusion)


def fp_evolve(field: ReducedField, vbar, weights, spacing: float,
              dt: float, n_steps: int, refresh=None,
              refresh_stride: int = 1) -> list[ReducedField]:
    """Advance ``n_steps`` and return the full field sequence.

    ``refresh``, if given, is called as ``refresh(t)`` every
    ``refresh_stride`` steps to obtain the current conditional velocity;
    otherwise the supplied ``vbar`` is used throughout.
    """
    if refresh_stride < 1:
        raise ValueError("refresh_stride must be at least 1")
    out = [field]
    v = vbar
    for k in range(n_steps):
        if refresh is not None and k % refresh_stride == 0:
            v = refresh(out[-1].time)
        out.append(fp_step(out[-1], v, weights, spacing, dt))
    return out


def h_valentini(field: ReducedField, weights, spacing: float):
    """H = int f ln f |psi_S|^2 dx; returns (H, excluded mass).

    Cells with f = 0 contribute nothing (the x ln x limit) and their
    equilibrium weight is reported back as excluded mass.
    """
    f = field.values
    w = np.broadcast_to(np.asarray(weights, dtype=float), f.shape)
    pos = f > 0
    h = float(np.sum(f[pos] * np.log(f[pos]) * w[pos]) * spacing)
    excluded = float(np.sum(w[~pos]) * spacing)
    return h, excluded


def h_valentini_rate(series, weights, spacing: float,
                     strict: bool = True, floor: float | None = None):
    """Check the diffusive H theorem on a consecutive field series.

    For each adjacent pair the measured rate (H_{k+1} - H_k)/dt is
    compared with the theorem's right-hand side, -D int |psi_S|^2
    (grad f)^2 / f dx, evaluated at the midpoint field.  Returns the
    two arrays (measured, formula).  With ``strict`` on, a positive
    measured rate or a relative mismatch above 5% (once the rate is
    clearly above the numerical floor) raises ValueError.
    """
    fields = list(series)
    if len(fields) < 2:
        raise ValueError("need at least two consecutive fields")
    w = np.asarray(weights, dtype=float)
    measured = np.empty(len(fields) - 1)
    formula = np.empty(len(fields) - 1)
    for k in range(len(fields) - 1):
        a, b = fields[k], fields[k + 1]
        dt = b.time - a.time
        if not dt > 0:
            raise ValueError("fields must be in increasing time order")
        h0, _ = h_valentini(a, w, spacing)
        h1, _ = h_valentini(b, w, spacing)
        measured[k] = (h1 - h0) / dt
        mid = 0.5 * (a.values + b.values)
        good = mid > 0
        grad = (np.roll(mid, -1) - np.roll(mid, 1)) / (2 * spacing)
        wb = np.broadcast_to(w, mid.shape)
        integrand = np.zeros_like(mid)
        integrand[good] = wb[good] * grad[good] ** 2 / mid[good]
        formula[k] = -a.diffusion * float(np.sum(integrand) * spacing)

        if strict:
            if floor is None:
                h_scale = max(abs(h0), abs(h1), 1e-30)
                tol = 1e-12 * h_scale / dt
            else:
                tol = floor
            if measured[k] > tol:
                raise ValueError(
                    f"H increased between steps {k} and {k+1}: "
                    f"dH/dt = {measured[k]:.3e}")
            if abs(measured[k]) > 10 * tol:
                mismatch = abs(measured[k] - formula[k]) / abs(formula[k])
                if mismatch > 0.05:
                    raise ValueError(
                        f"H rate off the theorem value by {mismatch:.1%} "
                        f"at step {k} (measured {measured[k]:.3e}, "
                        f"formula {formula[k]:.3e})")
    return measured, formula


# ---------------------------------------------------------------------------
# Master equation


@dataclass(frozen=True)
class TransitionKernel:
    """Jump kernel K(x, x') >= 0 with its stationary solution.

    ``weights`` is |psi_S|^2 on the grid and ``stationary`` the solution
    g the kernel is built to hold fixed (identically one for kernels
    from :func:`gaussian_kernel`).  Construction verifies the discrete
    stationarity condition so a mis-built kernel fails fast.
    """

    matrix: np.ndarray
    stationary: np.ndarray
    weights: np.ndarray
    spacing: float

    def __post_init__(self):
        k = np.asarray(self.matrix, dtype=float)
        g = np.asarray(self.stationary, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        n = g.size
        if k.shape != (n, n) or w.shape != (n,):
            raise ValueError("kernel, stationary and weights sizes disagree")
        if np.any(k < 0):
            raise ValueError("kernel entries must be non-negative")
        if np.any(w <= 0) or np.any(g <= 0):
            raise ValueError("weights and stationary solution must be positive")
        object.__setattr__(self, "matrix", k)
        object.__setattr__(self, "stationary", g)
        object.__setattr__(self, "weights", w)
        resid = float(np.max(np.abs(self._rhs(g))))
        scale = float(np.max((k @ (w * g)) / w) * self.spacing) or 1.0
        if resid > 1e-9 * scale:
            raise ValueError(
                f"stored stationary solution is not stationary "
                f"(residual {resid:.3e})")

    def _rhs(self, f: np.ndarray) -> np.ndarray:
        """Gain-loss balance of the master equation for the ratio f."""
        k, w, dx = self.matrix, self.weights, self.spacing
        gain = (k @ (w * f)) / w
        loss = f * np.sum(k, axis=0)
        return (gain - loss) * dx


def gaussian_kernel(weights, spacing: float, width: float,
                    rate: float = 1.0) -> TransitionKernel:
    """Detailed-balance Gaussian jump kernel on a periodic grid.

    K(x, x') = rate * exp(-d(x,x')^2 / 2 width^2) * |psi_S(x)|^2 with d
    the minimum-image distance.  The |psi_S(x)|^2 factor makes K g
    Gamma symmetric under exchange of the two points, so g = 1 is
    stationary by construction for any symmetric profile.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    x = spacing * np.arange(n)
    span = spacing * n
    d = np.abs(x[:, None] - x[None, :])
    d = np.minimum(d, span - d)
    profile = np.exp(-d * d / (2.0 * width * width))
    matrix = rate * profile * w[:, None]
    return TransitionKernel(matrix=matrix, stationary=np.ones(n),
                            weights=w, spacing=float(spacing))


def master_step(values, kernel: TransitionKernel, dt: float) -> np.ndarray:
    """Explicit Euler step of the master equation for the ratio f.

    If the full step would drive f negative the step is split in two
    and retried, up to eight halvings; a kernel-dt combination still
    failing then raises StabilityBoundError.  A negative dt is accepted
    and realizes the time-reversed kernel convention, under which the
    relative entropy grows instead of shrinking.
    """
    f = np.asarray(values, dtype=float)
    if f.shape != kernel.stationary.shape:
        raise ValueError("field size does not match the kernel grid")

    def attempt(g: np.ndarray, step: float, depth: int) -> np.ndarray:
        out = g + step * kernel._rhs(g)
        if np.all(out >= 0):
            return out
        if depth >= MASTER_MAX_HALVINGS:
            raise StabilityBoundError(
                f"master_step could not keep f non-negative after "
                f"{MASTER_MAX_HALVINGS} dt halvings")
        half = attempt(g, 0.5 * step, depth + 1)
        return attempt(half, 0.5 * step, depth + 1)

    return attempt(f, float(dt), 0)


def relative_entropy(values, stationary, weights, spacing: float) -> float:
    """H_r = int |psi_S|^2 f ln(f/g) dx by direct quadrature."""
    f = np.asarray(values, dtype=float)
    g = np.broadcast_to(np.asarray(stationary, dtype=float), f.shape)
    w = np.broadcast_to(np.asarray(weights, dtype=float), f.shape)
    if np.any(g <= 0):
        raise ValueError("stationary solution must be positive")
    pos = f > 0
    terms = f[pos] * np.log(f[pos] / g[pos]) * w[pos]
    return float(np.sum(terms) * spacing)
