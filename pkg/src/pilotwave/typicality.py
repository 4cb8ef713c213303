"""Counting route to the equilibrium distribution.

Configurations of M independent systems are classified by their cell
occupation numbers; the multinomial weight of each complexion, its
entropy optimum, the Gaussian limit around that optimum, and the
Chebyshev and weak-law deviation bounds together say: almost every
configuration, counted by the equilibrium measure, looks equilibrated.

Everything is done in log space (log-gamma); weights overflow
spectacularly otherwise.  Exact integer cross-checks for small M live in
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import NotAsymptoticError

PARTITION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CellPartition:
    """Probability weights of the coarse cells."""

    gammas: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        object.__setattr__(self, "gammas", g)
        if np.any(g <= 0):
            raise ValueError("every cell weight must be positive")
        if abs(g.sum() - 1.0) > PARTITION_TOLERANCE:
            raise ValueError(f"cell weights sum to {g.sum()!r}, not 1")

    @property
    def cell_count(self) -> int:
        return self.gammas.size


@dataclass(frozen=True)
class Complexion:
    """Occupation numbers of one configuration of M systems."""

    occupations: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.occupations)
        if not np.issubdtype(m.dtype, np.integer):
            raise ValueError("occupations must be integers")
        if np.any(m < 0):
            raise ValueError("occupations must be non-negative")
        object.__setattr__(self, "occupations", m)

    @property
    def total(self) -> int:
        return int(self.occupations.sum())


def complexion_log_weight(c: Complexion, p: CellPartition) -> float:
    """ln of M!/(prod m!) times prod Gamma^m."""
    m = c.occupations
    if m.size != p.cell_count:
        raise ValueError("complexion and partition have different cell counts")
    return float(gammaln(c.total + 1) - np.sum(gammaln(m + 1))
                 + np.sum(m * np.log(p.gammas)))


@dataclass
class BoltzmannOptimum:
    continuous: np.ndarray     # M * Gamma_alpha
    occupations: np.ndarray    # the integer maximizer
    log_weight: float


def boltzmann_optimum(p: CellPartition, M: int) -> BoltzmannOptimum:
    """Most probable complexion: continuous optimum plus integer refinement.

    The continuous optimum is exactly proportional to the cell weights.
    Its integer neighbor is found by rounding down and then placing the
    leftover units greedily (each placement picks the cell with the best
    log-weight gain), followed by single-unit exchanges until no move
    improves.  For the multinomial weight the greedy step already lands
    on a maximizer; the exchange pass is a cheap certificate.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    cont = M * p.gammas
    occ = np.floor(cont).astype(int)
    # greedy placement of the remainder
    for _ in range(M - int(occ.sum())):
        gains = np.log(p.gammas) - np.log(occ + 1.0)
        best = int(np.argmax(gains))
        occ[best] += 1
    # exchange until locally optimal (the greedy start is already a
    # maximizer for this weight; the loop certifies it and costs little)
    for _ in range(16 * p.cell_count):
        with np.errstate(divide="ignore"):
            gain_add = np.log(p.gammas) - np.log(occ + 1.0)
            gain_remove = np.where(occ > 0, np.log(occ) - np.log(p.gammas), -np.inf)
        moves = gain_remove[:, None] + gain_add[None, :]
        np.fill_diagonal(moves, -np.inf)
        src, dst = np.unravel_index(np.argmax(moves), moves.shape)
        if moves[src, dst] <= 1e-12:
            break
        occ[src] -= 1
        occ[dst] += 1
    comp = Complexion(occ)
    return BoltzmannOptimum(continuous=cont, occupations=occ,
                            log_weight=complexion_log_weight(comp, p))


def gaussian_ratio(c: Complexion, p: CellPartition) -> float:
    """Gaussian-limit weight of a complexion near the optimum.

    Prefactor sqrt(2 pi M) / prod sqrt(2 pi m~) times the quadratic
    exponential in the deviations from the continuous optimum.  Only
    meaningful when every expected occupation is at least 10.
    """
    M = c.total
    if c.occupations.size != p.cell_count:
        raise ValueError("complexion and partition have different cell counts")
    m_opt = M * p.gammas
    if np.any(m_opt < 10):
        raise NotAsymptoticError(
            f"smallest expected occupation {m_opt.min():.3g} is below 10; "
            "use the exact complexion_log_weight instead")
    delta = c.occupations - m_opt
    log_pref = 0.5 * np.log(2 * np.pi * M) - 0.5 * np.sum(np.log(2 * np.pi * m_opt))
    return float(np.exp(log_pref - 0.5 * np.sum(delta ** 2 / m_opt)))


def gaussian_ratio_deltas(deltas, p: CellPartition, M: int) -> float:
    """Gaussian weight for explicit deviations; they must sum to zero."""
    deltas = np.asarray(deltas, dtype=float)
    if abs(deltas.sum()) > 1e-9 * max(1.0, np.abs(deltas).max()):
        raise ValueError("deviations must sum to zero: total occupation is fixed")
    m_opt = M * p.gammas
    if np.any(m_opt < 10):
        raise NotAsymptoticError(
            f"smallest expected occupation {m_opt.min():.3g} is below 10; "
            "use the exact complexion_log_weight instead")
    log_pref = 0.5 * np.log(2 * np.pi * M) - 0.5 * np.sum(np.log(2 * np.pi * m_opt))
    return float(np.exp(log_pref - 0.5 * np.sum(deltas ** 2 / m_opt)))


def sample_complexions(p: CellPartition, M: int, trials: int,
                       seed: int) -> np.ndarray:
    """Seeded multinomial draws, one complexion per row.

    The generator's multinomial is the chain of binomial conditionals,
    so draws are reproducible cell by cell for a given seed.
    """
    rng = np.random.default_rng(seed)
    return rng.multinomial(M, p.gammas, size=trials)


@dataclass
class ChebyshevResult:
    empirical_fraction: float
    bound: float
    standard_error: float
    trials: int
    M: int
    epsilon: float
    cell_index: int
    satisfied: bool

    def report(self) -> str:
        lines = [
            f"M = {self.M}, epsilon = {self.epsilon}, cell = {self.cell_index}, "
            f"trials = {self.trials}",
            f"deviation fraction = {self.empirical_fraction:.6g}",
            f"bound 1/(eps^2 M) = {self.bound:.6g}",
            f"standard error = {self.standard_error:.3g}",
            f"within bound + 3 SE: {'yes' if self.satisfied else 'NO'}",
        ]
        return "\n".join(lines)


def chebyshev_experiment(p: CellPartition, M: int, epsilon: float,
                         trials: int, seed: int,
                         cell_index: int = 0) -> ChebyshevResult:
    """Empirical tail fraction for one cell against the 1/(eps^2 M) bound.

    The deviation threshold is eps times the single-draw spread
    sqrt(Gamma (1 - Gamma)), as in the inequality; the empirical
    fraction should sit far below the bound for all but adversarial eps.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if trials < 100:
        raise ValueError("need at least 100 trials for a meaningful fraction")
    draws = sample_complexions(p, M, trials, seed)
    g = p.gammas[cell_index]
    threshold = epsilon * np.sqrt(g * (1.0 - g))
    deviations = np.abs(draws[:, cell_index] / M - g)
    frac = float(np.mean(deviations >= threshold))
    bound = 1.0 / (epsilon ** 2 * M)
    se = float(np.sqrt(max(frac, 1.0 / trials) * (1 - min(frac, 1.0)) / trials))
    return ChebyshevResult(
        empirical_fraction=frac, bound=bound, standard_error=se,
        trials=trials, M=M, epsilon=epsilon, cell_index=cell_index,
        satisfied=frac <= bound + 3 * se,
    )


@dataclass
class WeakLawBound:
    union_bound: float                 # Delta M / (eps^2 M)
    weighted_bound: float | None       # f_max / (eps^2 M), when f_max given
    subset_cells: int
    epsilon: float
    M: int


def weak_law_bound(subset_cells: int, epsilon: float, M: int,
                   f_max: float | None = None) -> WeakLawBound:
    """Union bound over a subset of cells, optionally f-weighted.

    With a smooth non-equilibrium weighting bounded by ``f_max``, the
    probability assigned to the deviation region is at most f_max times
    the equilibrium bound, so it still vanishes as M grows.
    """
    if subset_cells < 1:
        raise ValueError("subset must contain at least one cell")
    base = subset_cells / (epsilon ** 2 * M)
    weighted = None if f_max is None else f_max / (epsilon ** 2 * M)
    return WeakLawBound(union_bound=base, weighted_bound=weighted,
                        subset_cells=subset_cells, epsilon=epsilon, M=M)


@dataclass
class WeakLawResult:
    empirical_fraction: float
    bound: float
    standard_error: float
    subset_cells: int
    trials: int
    M: int
    epsilon: float
    satisfied: bool

    def report(self) -> str:
        lines = [
            f"M = {self.M}, epsilon = {self.epsilon}, "
            f"subset = first {self.subset_cells} cells, trials = {self.trials}",
            f"any-cell deviation fraction = {self.empirical_fraction:.6g}",
            f"bound DeltaM/(eps^2 M) = {self.bound:.6g}",
            f"standard error = {self.standard_error:.3g}",
            f"within bound + 3 SE: {'yes' if self.satisfied else 'NO'}",
        ]
        return "\n".join(lines)


def weak_law_experiment(p: CellPartition, M: int, epsilon: float,
                        subset_cells: int, trials: int,
                        seed: int) -> WeakLawResult:
    """Monte Carlo check of the multivariate (union) inequality.

    Counts trials where any of the first ``subset_cells`` cells deviates
    past its threshold; compares against Delta M/(eps^2 M).
    """
    if subset_cells < 1 or subset_cells > p.cell_count:
        raise ValueError("subset size must lie in [1, cell_count]")
    draws = sample_complexions(p, M, trials, seed)
    g = p.gammas[:subset_cells]
    thresholds = epsilon * np.sqrt(g * (1.0 - g))
    deviations = np.abs(draws[:, :subset_cells] / M - g)
    any_dev = np.any(deviations >= thresholds, axis=1)
    frac = float(np.mean(any_dev))
    bound = subset_cells / (epsilon ** 2 * M)
    se = float(np.sqrt(max(frac, 1.0 / trials) * (1 - min(frac, 1.0)) / trials))
    return WeakLawResult(
        empirical_fraction=frac, bound=bound, standard_error=se,
        subset_cells=subset_cells, trials=trials, M=M, epsilon=epsilon,
        satisfied=frac <= bound + 3 * se,
    )


def continuum_threshold(epsilon: float, subset_volume: float,
                        density: float) -> float:
    """Deviation threshold on |f - 1| in the continuum form of the law.

    For a region of configuration volume ``subset_volume`` where the
    equilibrium density is roughly ``density``, the cell inequality
    translates to |f - 1| >= epsilon / sqrt(volume * density).
    """
    if subset_volume <= 0 or density <= 0:
        raise ValueError("volume and density must be positive")
    return epsilon / np.sqrt(subset_volume * density)


def occupation_spread(p: CellPartition, M: int, trials: int, seed: int,
                      cell_index: int = 0) -> float:
    """Empirical standard deviation of m/M for one cell; scales as 1/sqrt(M)."""
    draws = sample_complexions(p, M, trials, seed)
    return float(np.std(draws[:, cell_index] / M))
