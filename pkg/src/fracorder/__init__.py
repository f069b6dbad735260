"""Spectral solver and fractional-order identification for ``dt y + L^s y = f``."""

from .config import ConfigError, ScenarioConfig, config_from_dict, load_config
from .kernel import BoundConstants, KernelEval, bound_constants, check_bounds, eval_kernel
from .objective import (
    Optimality,
    PenaltySpec,
    ReducedCostReport,
    Scenario,
    check_optimality,
    reduced_cost,
)
from .optimize import OptimizeReport, OptimizerConfig, grid_scan, newton_refine, solve
from .runner import RunArtifacts, emit, run
from .scenarios import builtin_scenarios, example1, example2
from .spectral_basis import (
    BasisKind,
    EigenBasis,
    SpectralField,
    build_basis,
    hs_norm,
    project,
    reconstruct,
)
from .state import StateEval, TimeSignal, energy_diagnostic, sensitivity_norms

__version__ = "0.1.0"

__all__ = [
    "BasisKind", "BoundConstants", "ConfigError", "EigenBasis", "KernelEval",
    "OptimizeReport", "Optimality", "OptimizerConfig", "PenaltySpec",
    "ReducedCostReport", "RunArtifacts", "Scenario", "ScenarioConfig",
    "SpectralField", "StateEval", "TimeSignal", "bound_constants", "build_basis",
    "builtin_scenarios", "check_bounds", "check_optimality", "config_from_dict",
    "emit", "energy_diagnostic", "eval_kernel", "example1", "example2", "grid_scan",
    "hs_norm", "load_config", "newton_refine", "project", "reconstruct",
    "reduced_cost", "run", "sensitivity_norms", "solve",
]
