"""
Heat currents of open quantum systems from the hierarchical equations of
motion (HEOM) for Drude baths.

Modules
-------
bath         spectral densities, correlation functions, exponential fits
hierarchy    ADO index space and the HEOM generator
dynamics     steady-state solver and time propagation
observables  heat currents, energy balances, cycle accumulation, fidelity
redfield     second-order comparator
models       system models and benchmark builders
config, cli  TOML run configuration and command-line front end
"""

from .bath import (BathDecomposition, BathSpec, DecompositionError,
                   DecompositionWarning, DrudeSpectralDensity, QuadratureError,
                   correlation_quadrature, decompose, matsubara_decompose,
                   pade_decompose, validation_grid)
from .dynamics import (PropagationError, SolverOptions, SteadyStateError,
                       Trajectory, converged_steady_state, propagate,
                       steady_state)
from .hierarchy import (AdoState, HierarchySpace, HierarchyTooLarge,
                        apply_heom_rhs, assemble_operator, build_space)
from .models import (Drive, SystemModel, gibbs_state, single_bath_two_level,
                     three_level_engine, two_level_model)
from .observables import (CurrentsReport, currents_report, cycle_accumulate,
                          fidelity, heat_current, interaction_energy, power,
                          system_energy_current, tpc_residual)
from .redfield import (redfield_generator, redfield_heat_current,
                       redfield_steady_state)

__all__ = [
    "BathDecomposition", "BathSpec", "DecompositionError",
    "DecompositionWarning", "DrudeSpectralDensity", "QuadratureError",
    "correlation_quadrature", "decompose", "matsubara_decompose",
    "pade_decompose", "validation_grid", "PropagationError", "SolverOptions",
    "SteadyStateError", "Trajectory", "converged_steady_state", "propagate",
    "steady_state", "AdoState", "HierarchySpace", "HierarchyTooLarge",
    "apply_heom_rhs", "assemble_operator", "build_space", "Drive",
    "SystemModel", "gibbs_state", "single_bath_two_level",
    "three_level_engine", "two_level_model", "CurrentsReport",
    "currents_report", "cycle_accumulate", "fidelity", "heat_current",
    "interaction_energy", "power", "system_energy_current", "tpc_residual",
    "redfield_generator", "redfield_heat_current", "redfield_steady_state",
]

__version__ = "0.1.0"
