"""Pilot-wave dynamics and the statistical road to quantum equilibrium.

Subpackage map:

* :mod:`pilotwave.schrodinger` -- grids, wavefunctions, split-step
  propagation, guidance-level derived fields, snapshot files.
* :mod:`pilotwave.flow` / :mod:`pilotwave.trajectories` -- interpolated
  guidance fields, trajectory integration, transport identities.
* :mod:`pilotwave.ensembles` -- position ensembles, density ratios,
  coarse-graining, the two H functions.
* :mod:`pilotwave.typicality` -- multinomial complexion counting and the
  concentration bounds it implies.
* :mod:`pilotwave.functional_equations` -- additivity and exponent
  arguments pinning the quadratic probability law.
* :mod:`pilotwave.kinetics` -- coarse-grained transport: jump-moment
  estimates, conditional velocities, diffusive and master-equation
  relaxation with their H theorems.
* :mod:`pilotwave.bernoulli_map` -- the doubling-map caricature of
  relaxation with exact mode-by-mode decay rates.
* :mod:`pilotwave.scenarios` / :mod:`pilotwave.cli` -- configured runs
  producing data files, plots and a manifest.
"""

__version__ = "0.1.0"

from .errors import ConfigError, PilotwaveError
from .grids import GridSpec
from .schrodinger import (
    Potential,
    WaveFunction,
    continuity_residual,
    energy,
    load_snapshot,
    probability_current,
    propagate,
    quantum_potential,
    save_snapshot,
    velocity_field,
)
from .flow import PilotFlow
from .trajectories import (
    amplitude_transport_check,
    comoving_volume_check,
    integrate_trajectory,
    psi_reconstruction_check,
)
from .ensembles import (
    BoxMeasure,
    CoarseGrid,
    born_ensemble,
    coarse_series,
    equilibrium_ensemble,
    h_series,
)
from .typicality import (
    CellPartition,
    boltzmann_optimum,
    chebyshev_experiment,
    weak_law_experiment,
)
from .functional_equations import (
    CandidateG,
    cauchy_linearity_fit,
    destouches_exponent_test,
    gleason_residual,
)
from .kinetics import (
    conditional_velocity,
    fp_evolve,
    gaussian_kernel,
    h_valentini,
    kramers_moyal_estimate,
    master_step,
    reduced_field,
    relative_entropy,
)
from .bernoulli_map import (
    UnitDensity,
    bernoulli_decompose,
    collision_limit,
    decay_rate_fit,
    pf_step,
)
from .scenarios import load_scenario, run_scenario

__all__ = [
    "BoxMeasure",
    "CandidateG",
    "CellPartition",
    "CoarseGrid",
    "ConfigError",
    "GridSpec",
    "PilotFlow",
    "PilotwaveError",
    "Potential",
    "UnitDensity",
    "WaveFunction",
    "amplitude_transport_check",
    "bernoulli_decompose",
    "boltzmann_optimum",
    "born_ensemble",
    "cauchy_linearity_fit",
    "chebyshev_experiment",
    "coarse_series",
    "collision_limit",
    "comoving_volume_check",
    "conditional_velocity",
    "continuity_residual",
    "decay_rate_fit",
    "destouches_exponent_test",
    "energy",
    "equilibrium_ensemble",
    "fp_evolve",
    "gaussian_kernel",
    "gleason_residual",
    "h_series",
    "h_valentini",
    "integrate_trajectory",
    "kramers_moyal_estimate",
    "load_scenario",
    "load_snapshot",
    "master_step",
    "pf_step",
    "probability_current",
    "propagate",
    "psi_reconstruction_check",
    "quantum_potential",
    "reduced_field",
    "relative_entropy",
    "run_scenario",
    "save_snapshot",
    "velocity_field",
    "weak_law_experiment",
    "__version__",
]
