"""Relaxation under the Bernoulli shift, mode by mode.

The doubling map ``y -> 2y (mod 1)`` is the cheapest dynamical system
that mixes, and its transfer operator does to densities what a long
sequence of effectively random scattering events does to a pilot-wave
ensemble: every structure above the mean is halved in scale at each
step and dies geometrically.  The Perron-Frobenius relation

    rho_{n+1}(y) = (rho_n(y/2) + rho_n((y+1)/2)) / 2

has the Bernoulli polynomials as exact eigenfunctions, ``B_m`` decaying
by ``2**-m`` per step, so an initial density written as
``1 + sum C_m B_m`` relaxes to the uniform one at the rate ``m ln 2``
mode by mode.  In the continuum reading, one map step per cycle time
``tau0`` gives a collision-term relaxation time ``tau = 2 tau0``.

Densities here carry a dual representation.  The polynomial part is a
stored coefficient vector and is pushed through the map analytically,
via the multiplication theorem ``B_m(y/2) + B_m((y+1)/2) = 2^{1-m}
B_m(y)``, so spectral statements can be checked without least-squares
noise.  The grid values remain authoritative: whatever is not captured
by the stored coefficients is treated as a grid remainder and advected
by exact index arithmetic (even grid size makes ``y/2`` land on grid
points or half-grid points; the latter are filled by linear
interpolation, wrapping at the ends).  The remainder step is a convex
combination of old values, so a coefficient-free density can never go
negative, and the discrete sum is preserved to the last bit in exact
arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .errors import IllConditionedFitError, NotAsymptoticError

__all__ = [
    "DEFAULT_GRID_SIZE",
    "DecayFit",
    "DecayRateError",
    "DecomposeResult",
    "IllConditionedFitError",
    "MAX_MODE",
    "NotAsymptoticError",
    "UnitDensity",
    "bernoulli_decompose",
    "bernoulli_polynomial",
    "bernoulli_polynomial_coefficients",
    "collision_limit",
    "decay_rate_fit",
    "dump_coefficients",
    "dump_iterates",
    "pf_step",
]

#: Default number of grid points on [0, 1).
DEFAULT_GRID_SIZE = 1024

#: Highest Bernoulli-polynomial order the decomposition will fit.
MAX_MODE = 12

#: Slack on the discrete normalization invariant.
_NORM_TOL = 1e-9

#: Condition-number ceiling for the least-squares design matrix.
_COND_LIMIT = 1e10


class DecayRateError(RuntimeError):
    """A fitted mode decay rate disagrees with ``m ln 2`` beyond the
    tolerated percent."""


@lru_cache(maxsize=None)
def bernoulli_polynomial_coefficients(m: int) -> tuple[Fraction, ...]:
    """Exact coefficients of ``B_m`` in ascending powers of ``y``.

    Built from the defining recurrence ``B_m' = m B_{m-1}`` with the
    constant fixed by ``integral_0^1 B_m = 0``, entirely in rational
    arithmetic, so these double as an oracle for the floating-point
    evaluations elsewhere in the module.
    """
    if m < 0:
        raise ValueError("polynomial order must be non-negative")
    if m == 0:
        return (Fraction(1),)
    lower = bernoulli_polynomial_coefficients(m - 1)
    body = [Fraction(m) * c / (j + 1) for j, c in enumerate(lower)]
    constant = -sum(c / (j + 2) for j, c in enumerate(body))
    return (constant, *body)


@lru_cache(maxsize=None)
def bernoulli_polynomial(m: int) -> np.polynomial.Polynomial:
    """``B_m`` as a float-coefficient polynomial ready to evaluate."""
    coeffs = bernoulli_polynomial_coefficients(m)
    return np.polynomial.Polynomial([float(c) for c in coeffs])


@lru_cache(maxsize=None)
def _basis_matrix(n: int, m_max: int) -> np.ndarray:
    """Columns ``B_0 .. B_m_max`` evaluated on the n-point grid."""
    y = np.arange(n) / n
    return np.column_stack([bernoulli_polynomial(m)(y) for m in range(m_max + 1)])


def _polynomial_values(coefficients: Sequence[float], n: int) -> np.ndarray:
    basis = _basis_matrix(n, len(coefficients) - 1)
    return basis @ np.asarray(coefficients, dtype=float)


@dataclass(frozen=True)
class UnitDensity:
    """A probability density on [0, 1), sampled on a uniform grid.

    ``values`` live at the left edges ``y_i = i/n`` and are the
    authoritative representation.  ``coefficients`` record the part of
    the density that is being tracked analytically as ``sum C_m B_m``;
    the difference between the grid values and that polynomial is the
    grid remainder.  ``C_0`` must be exactly one, and the discrete
    integral (``C_0`` plus the remainder mean) must equal one.
    """

    values: np.ndarray
    coefficients: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 8 or values.size % 2:
            raise ValueError("values must be a 1-d array of even length >= 8")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs or abs(coeffs[0] - 1.0) > 1e-12:
            raise ValueError("C_0 must equal 1")
        if len(coeffs) - 1 > MAX_MODE:
            raise ValueError(f"stored modes are capped at m = {MAX_MODE}")
        if abs(self.integral() - 1.0) > _NORM_TOL:
            raise ValueError("density does not integrate to 1 on the grid")

    @property
    def grid(self) -> np.ndarray:
        n = self.values.size
        return np.arange(n) / n

    def polynomial_values(self) -> np.ndarray:
        """The tracked polynomial part evaluated on the grid."""
        return _polynomial_values(self.coefficients, self.values.size)

    def remainder(self) -> np.ndarray:
        """Grid content not captured by the stored coefficients."""
        return self.values - self.polynomial_values()

    def integral(self) -> float:
        # The polynomial part integrates to C_0 exactly (every B_m with
        # m >= 1 has zero mean on [0, 1]); the remainder is integrated
        # by the rectangle rule that pf_step preserves bit for bit.
        return self.coefficients[0] + float(np.mean(self.remainder()))

    @classmethod
    def uniform(cls, n: int = DEFAULT_GRID_SIZE) -> "UnitDensity":
        return cls(np.ones(n), (1.0,))

    @classmethod
    def from_bernoulli(cls, coefficients: Sequence[float],
                       n: int = DEFAULT_GRID_SIZE) -> "UnitDensity":
        """Density ``1 + sum_{m>=1} C_m B_m`` with the modes tracked."""
        coeffs = tuple(float(c) for c in coefficients)
        if not coeffs or coeffs[0] != 1.0:
            raise ValueError("coefficients must start with C_0 = 1")
        return cls(_polynomial_values(coeffs, n), coeffs)

    @classmethod
    def from_values(cls, values: np.ndarray) -> "UnitDensity":
        """Wrap raw grid samples, shifting by a constant so the
        discrete integral is exactly one."""
        values = np.asarray(values, dtype=float)
        return cls(values + (1.0 - np.mean(values)), (1.0,))


def pf_step(density: UnitDensity) -> UnitDensity:
    """One application of the Perron-Frobenius operator of ``2y mod 1``.

    The stored coefficients are scaled by ``2**-m`` exactly; the grid
    remainder is averaged over the two preimage branches, which for an
    even grid needs at most a two-point linear interpolation at
    half-grid points.  The discrete sum, and with it the normalization,
    is preserved identically.
    """
    n = density.values.size
    half = n // 2
    r = density.remainder()

    out = np.empty(n)
    # Even outputs: both branch points y/2 and y/2 + 1/2 are grid points.
    out[0::2] = 0.5 * (r[:half] + r[half:])
    # Odd outputs: both branch points are half-grid points; linear
    # interpolation between neighbours, the last one wrapping to r[0].
    r_next = np.roll(r, -1)
    left = 0.5 * (r[:half] + r_next[:half])
    right = 0.5 * (r[half:] + r_next[half:])
    out[1::2] = 0.5 * (left + right)

    new_coeffs = tuple(c / 2.0 ** m for m, c in enumerate(density.coefficients))
    return UnitDensity(_polynomial_values(new_coeffs, n) + out, new_coeffs)


class DecomposeResult(NamedTuple):
    """Least-squares Bernoulli coefficients and the fit residual."""

    coefficients: np.ndarray
    residual: float


def bernoulli_decompose(density: UnitDensity, m_max: int) -> DecomposeResult:
    """Project the grid values onto ``B_0 .. B_m_max`` by least squares.

    The fit always runs on the authoritative grid values, so it sees
    fit noise that the stored coefficients do not; ``residual`` is the
    root-mean-square mismatch of the reconstruction.
    """
    if not 0 <= m_max <= MAX_MODE:
        raise ValueError(f"m_max must lie in [0, {MAX_MODE}]")
    n = density.values.size
    if m_max + 1 >= n:
        raise IllConditionedFitError(
            f"cannot fit {m_max + 1} modes on a grid of {n} points")
    basis = _basis_matrix(n, m_max)
    scale = np.linalg.norm(basis, axis=0)
    scaled = basis / scale
    cond = np.linalg.cond(scaled)
    if cond > _COND_LIMIT:
        raise IllConditionedFitError(
            f"design matrix condition number {cond:.2e}; "
            "lower m_max or refine the grid")
    solution, *_ = np.linalg.lstsq(scaled, density.values, rcond=None)
    coefficients = solution / scale
    residual = float(np.sqrt(np.mean((basis @ coefficients - density.values) ** 2)))
    return DecomposeResult(coefficients, residual)


class DecayFit(NamedTuple):
    """Per-mode decay rates fitted from a pf_step iteration.

    ``rates[m]`` is the fitted rate for mode ``m`` (NaN when the mode
    was absent or underflowed before a fit window formed; index 0 is
    always NaN since the constant mode does not decay).  ``table`` has
    one row per iterate holding the fitted coefficients, and
    ``notices`` records every skipped mode.
    """

    rates: np.ndarray
    table: np.ndarray
    notices: tuple[str, ...]


#: A coefficient below this multiple of the initial scale is treated as
#: numerical floor rather than signal.
_UNDERFLOW_FACTOR = 1e-13

#: Relative tolerance on the fitted slope against m ln 2.
_RATE_RTOL = 0.01


def decay_rate_fit(density: UnitDensity, n_steps: int,
                   m_max: int | None = None) -> DecayFit:
    """Iterate the map and fit ``ln |C_m(n)|`` against ``n`` per mode.

    Every mode that survives long enough to fit is checked against the
    exact rate ``m ln 2``; a disagreement beyond one percent raises
    :class:`DecayRateError` for m <= 4, where the law is asserted
    rather than merely reported.  Modes that start at the numerical
    floor, or that underflow before three usable iterates exist, are
    skipped with a notice.
    """
    if n_steps < 4:
        raise ValueError("need at least 4 steps to fit a rate")
    if m_max is None:
        m_max = max(4, len(density.coefficients) - 1)
    table = np.empty((n_steps + 1, m_max + 1))
    current = density
    table[0] = bernoulli_decompose(current, m_max).coefficients
    for step in range(1, n_steps + 1):
        current = pf_step(current)
        table[step] = bernoulli_decompose(current, m_max).coefficients

    floor = _UNDERFLOW_FACTOR * max(1.0, float(np.max(np.abs(table[0]))))
    rates = np.full(m_max + 1, np.nan)
    notices: list[str] = []
    steps = np.arange(n_steps + 1)
    for m in range(1, m_max + 1):
        magnitudes = np.abs(table[:, m])
        if magnitudes[0] <= floor:
            notices.append(f"mode {m}: absent from the initial density")
            continue
        usable = magnitudes > floor
        if not np.all(usable):
            usable[int(np.argmin(usable)):] = False
        if int(np.count_nonzero(usable)) < 3:
            notices.append(f"mode {m}: underflowed before a fit window formed")
            continue
        slope = np.polyfit(steps[usable], np.log(magnitudes[usable]), 1)[0]
        rate = -slope
        rates[m] = rate
        target = m * math.log(2.0)
        if m <= 4 and abs(rate - target) > _RATE_RTOL * target:
            raise DecayRateError(
                f"mode {m} decays at {rate:.6f} per step, "
                f"expected {target:.6f} within {_RATE_RTOL:.0%}")
    return DecayFit(rates, table, tuple(notices))


#: Pointwise tolerance for the discrete collision-term relation.
_COLLISION_TOL = 1e-6

#: Subdominant modes must sit below this fraction of C_1.
_ASYMPTOTIC_RATIO = 0.01


def collision_limit(tau0: float, density: UnitDensity | None = None,
                    tolerance: float = _COLLISION_TOL) -> float:
    """Relaxation time of the map read as a coarse-grained collision term.

    One map step per cycle time ``tau0`` relaxes the slowest mode by
    ``e^{-ln 2}``, so the continuum relaxation time is
    ``tau = tau0 / (1 - e^{-ln 2}) = 2 tau0``.  When a density is
    supplied it must already be dominated by the ``B_1`` mode; the
    discrete relation ``rho_{n+1} - rho_n = -(rho_n - 1)(1 - e^{-ln 2})``
    is then verified pointwise on the grid.
    """
    if tau0 <= 0.0:
        raise ValueError("cycle time must be positive")
    tau = tau0 / (1.0 - math.exp(-math.log(2.0)))
    if density is None:
        return tau

    m_max = min(MAX_MODE, density.values.size - 2, max(4, len(density.coefficients) - 1))
    coefficients = bernoulli_decompose(density, m_max).coefficients
    leading = abs(coefficients[1])
    higher = float(np.max(np.abs(coefficients[2:]))) if m_max >= 2 else 0.0
    if leading == 0.0 or higher > _ASYMPTOTIC_RATIO * leading:
        raise NotAsymptoticError(
            "density is not in the asymptotic regime (modes above m = 1 "
            f"carry {higher:.3e} against C_1 = {leading:.3e}); "
            "apply more pf_step pre-iterations")
    stepped = pf_step(density)
    actual = stepped.values - density.values
    expected = -(density.values - 1.0) * (1.0 - math.exp(-math.log(2.0)))
    worst = float(np.max(np.abs(actual - expected)))
    if worst > tolerance:
        raise NotAsymptoticError(
            f"collision relation deviates by {worst:.3e} pointwise; "
            "apply more pf_step pre-iterations")
    return tau


def dump_iterates(path, densities: Sequence[UnitDensity]) -> None:
    """Write iterates as delimited text: step index, then grid values."""
    rows = np.column_stack([
        np.arange(len(densities), dtype=float),
        np.vstack([d.values for d in densities]),
    ])
    n = densities[0].values.size
    header = "n\t" + "\t".join(f"y{i}" for i in range(n))
    np.savetxt(path, rows, delimiter="\t", header=header, comments="")


def dump_coefficients(path, table: np.ndarray) -> None:
    """Write a coefficient table as delimited text: step, C_0, C_1, ..."""
    table = np.asarray(table, dtype=float)
    rows = np.column_stack([np.arange(table.shape[0], dtype=float), table])
    header = "n\t" + "\t".join(f"C{m}" for m in range(table.shape[1]))
    np.savetxt(path, rows, delimiter="\t", header=header, comments="")
