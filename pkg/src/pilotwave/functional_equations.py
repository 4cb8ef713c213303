"""Functional-equation arguments that pin down the quadratic law.

Two short derivations fix the probability weight without ever counting
trajectories.  The first postulates that the weight ``g`` assigned to a
group of orthogonal alternatives is the sum of the weights of its
members; additivity alone forces ``g(x) = Ax`` once ``g(0) = 0`` is
imposed, and the normalized law that follows is the quadratic one.  The
second postulates factorizability over independent subsystems, which
restricts the density to ``e^B |psi|^A``, and then lets the dynamics
choose the exponent: the ratio ``f = e^B |psi|^(A-2)`` is carried
unchanged along trajectories only when ``A = 2``, because for any other
exponent the compressibility of the flow shows up as a drift.

Both arguments are realized here as residual checkers rather than as
symbolic manipulation.  A candidate weight either satisfies its
functional equation on randomly drawn coefficient sets to machine
precision, or it fails by a visibly finite margin; an exponent either
rides the flow or it drifts.  The checkers treat additivity itself as
the defining property and make no attempt to certify differentiability
of the candidates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import trajectories
from .flow import PilotFlow

__all__ = [
    "CandidateG",
    "CauchyFit",
    "NonDiscriminatingWarning",
    "born_probabilities",
    "cauchy_linearity_fit",
    "destouches_exponent_test",
    "gleason_residual",
    "random_coefficient_sets",
    "residual_table",
]

#: Probe resolution used to certify that a candidate is finite on [0, 1].
_PROBE_POINTS = 257

#: A flow whose largest |div v| falls below this is treated as
#: divergence-free, in which case the exponent test cannot discriminate.
DIVERGENCE_FLOOR = 1e-8


class NonDiscriminatingWarning(UserWarning):
    """The supplied flow is divergence-free, so every exponent drifts
    equally little and the test says nothing about A."""


@dataclass(frozen=True, eq=False)
class CandidateG:
    """A candidate probability weight ``g`` on [0, 1].

    Construct through :meth:`power`, :meth:`linear` or :meth:`tabulated`;
    the constructor validates that the candidate is finite everywhere on
    the unit interval (in particular that ``g(0)`` is defined, which is
    what kills negative powers).
    """

    label: str
    _fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __post_init__(self):
        probe = np.linspace(0.0, 1.0, _PROBE_POINTS)
        with np.errstate(all="ignore"):
            values = np.asarray(self._fn(probe), dtype=float)
        if values.shape != probe.shape or not np.all(np.isfinite(values)):
            raise ValueError(
                f"candidate {self.label!r} is not finite on [0, 1]")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self._fn(x), dtype=float)

    @classmethod
    def power(cls, exponent: float) -> "CandidateG":
        p = float(exponent)
        if p == 1.0:
            label = "x"
        elif p == int(p):
            label = f"x^{int(p)}"
        else:
            label = f"x^{p:g}"
        return cls(label=label, _fn=lambda x: x ** p)

    @classmethod
    def linear(cls, slope: float, offset: float = 0.0) -> "CandidateG":
        a, b = float(slope), float(offset)
        label = f"{a:g}*x" if b == 0.0 else f"{a:g}*x{b:+g}"
        return cls(label=label, _fn=lambda x: a * x + b)

    @classmethod
    def tabulated(cls, xs, ys, label: str = "tabulated") -> "CandidateG":
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("tabulation needs matching 1-d xs and ys")
        if not (np.all(np.diff(xs) > 0)
                and abs(xs[0]) < 1e-12 and abs(xs[-1] - 1.0) < 1e-12):
            raise ValueError("tabulation grid must increase from 0 to 1")
        return cls(label=label, _fn=lambda x: np.interp(x, xs, ys))


def _validated_sets(coefficient_sets) -> list[np.ndarray]:
    out = []
    for k, raw in enumerate(coefficient_sets):
        c = np.asarray(raw, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError(f"coefficient set {k} is not a 1-d sequence")
        if np.any(c < -1e-15) or not np.all(np.isfinite(c)):
            raise ValueError(f"coefficient set {k} has negative entries")
        if np.sum(c) > 1.0 + 1e-12:
            raise ValueError(f"coefficient set {k} sums past 1")
        out.append(np.clip(c, 0.0, None))
    return out


def gleason_residual(g: CandidateG, coefficient_sets) -> float:
    """Worst additivity violation of ``g`` over the supplied sets.

    Each set holds the squared moduli of the expansion coefficients of a
    state over some basis.  The returned value is

        max over sets of | g(sum of entries) - sum of g(entry) |

    and vanishes exactly when ``g`` is linear through the origin.
    """
    worst = 0.0
    for c in _validated_sets(coefficient_sets):
        lhs = float(g(np.sum(c)))
        rhs = float(np.sum(g(c)))
        worst = max(worst, abs(lhs - rhs))
    return worst


def random_coefficient_sets(n_sets: int, seed: int,
                            min_size: int = 2, max_size: int = 8,
                            concentration: float = 1.0) -> list[np.ndarray]:
    """Seed-reproducible coefficient sets for the additivity checker.

    Sizes are drawn uniformly from ``min_size..max_size`` and the entries
    of each set from a symmetric Dirichlet distribution, so every set
    sums to one; half the sets are then scaled down by a uniform factor
    so that sub-normalized states are exercised as well.
    """
    if min_size < 1 or max_size < min_size:
        raise ValueError("need 1 <= min_size <= max_size")
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(int(n_sets)):
        size = int(rng.integers(min_size, max_size + 1))
        c = rng.dirichlet(np.full(size, float(concentration)))
        if rng.random() < 0.5:
            c = c * rng.uniform(0.2, 1.0)
        sets.append(c)
    return sets


def born_probabilities(amplitudes) -> np.ndarray:
    """Normalized law p(a) = |c_a|^2 / sum |c|^2; the constant-rescaling
    invariance of this expression is what makes the overall scale A drop
    out of the additivity argument."""
    c = np.asarray(amplitudes)
    w = np.abs(c) ** 2
    total = np.sum(w)
    if not total > 0:
        raise ValueError("amplitudes must not all vanish")
    return w / total


def residual_table(candidates: Sequence[CandidateG], coefficient_sets,
                   threshold: float = 1e-12) -> str:
    """Plain-text report: candidate, worst residual, verdict."""
    sets = _validated_sets(coefficient_sets)
    width = max(9, *(len(c.label) for c in candidates))
    lines = [f"{'candidate':<{width}}  {'residual':>12}  verdict"]
    for g in candidates:
        r = gleason_residual(g, sets)
        verdict = "admissible" if r < threshold else "excluded"
        lines.append(f"{g.label:<{width}}  {r:>12.3e}  {verdict}")
    return "\n".join(lines)


class CauchyFit(NamedTuple):
    slope: float
    deviation: float


def cauchy_linearity_fit(xs, ys) -> CauchyFit:
    """Fit F(x) = Ax through the origin and measure additivity failure.

    ``xs``/``ys`` tabulate F on a uniform grid starting at 0.  The
    deviation is the largest |F(x+y) - F(x) - F(y)| over tabulated pairs
    with x + y still on the grid; uniform spacing lets x + y land on a
    node exactly, so no interpolation enters.  The deviation vanishes
    iff the tabulated F is additive, i.e. linear with zero offset.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 3:
        raise ValueError("need matching 1-d tabulation with >= 3 points")
    spacing = np.diff(xs)
    if abs(xs[0]) > 1e-12 or np.any(np.abs(spacing - spacing[0]) > 1e-9):
        raise ValueError("tabulation grid must be uniform and start at 0")

    denom = float(np.sum(xs * xs))
    slope = float(np.sum(xs * ys) / denom) if denom > 0 else 0.0

    n = xs.size
    i = np.arange(n)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    keep = ii + jj < n
    dev = ys[(ii + jj)[keep]] - ys[ii[keep]] - ys[jj[keep]]
    return CauchyFit(slope=slope, deviation=float(np.max(np.abs(dev))))


def destouches_exponent_test(flow: PilotFlow, exponent: float, positions,
                             t0: float | None = None, t1: float | None = None,
                             samples: int = 33, substeps: int = 1) -> float:
    """Drift of f = |psi|^(A-2) along a bundle of trajectories.

    Advances the bundle from ``t0`` to ``t1``, samples |psi| along each
    path at ``samples`` evenly spaced times, and returns the largest
    |f(t) - f(t0)| seen anywhere in the bundle.  Transport of the
    density ratio makes this vanish identically for A = 2; for any other
    exponent the drift is of order the flow's integrated compressibility,
    which is why a divergence-free flow (plane wave, single eigenstate)
    draws a :class:`NonDiscriminatingWarning` instead of a verdict.
    """
    a = float(exponent)
    lo = flow.t0 if t0 is None else float(t0)
    hi = flow.t1 if t1 is None else float(t1)
    if not hi > lo:
        raise ValueError("need t1 > t0")
    if samples < 2:
        raise ValueError("need at least two sample times")

    if a != 2.0 and flow.max_divergence() < DIVERGENCE_FLOOR:
        warnings.warn(
            "flow is divergence-free everywhere; |psi| is constant along "
            "every trajectory and the exponent test cannot discriminate",
            NonDiscriminatingWarning, stacklevel=2)

    times = np.linspace(lo, hi, int(samples))
    result = trajectories.advance(flow, positions, lo, hi,
                                  substeps=substeps, record_times=times)
    alive = np.ones(result.positions.shape[0], dtype=bool)
    alive[result.truncated] = False
    if not np.any(alive):
        raise ValueError("every trajectory in the bundle was truncated")

    drift = 0.0
    f_ref = None
    for k, t in enumerate(times):
        psi = flow.psi_at(result.record_positions[k][alive], float(t))
        f_now = np.abs(psi) ** (a - 2.0)
        if f_ref is None:
            f_ref = f_now
        else:
            drift = max(drift, float(np.max(np.abs(f_now - f_ref))))
    return drift
