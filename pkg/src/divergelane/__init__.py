"""Equilibrium lane-choice model, calibration, and data generation for a
two-exit traffic diverge with a bifurcating center lane."""

from .calibration import (
    CalibrationOptions,
    CalibrationResult,
    ConfigurationError,
    DataPoint,
    ExactSolverGuardError,
    MilpSystem,
    ViolationCount,
    build_milp,
    calibrate_exact,
    calibrate_search,
    count_violations,
)
from .datagen import SimulationConfig, generate_dataset, simulate_steady_state
from .equilibrium import (
    AuxiliaryAction,
    BoundaryBranchError,
    EquilibriumReport,
    SolverOptions,
    best_response,
    best_response_slope,
    nash_player_cost,
    solve_fixed_point,
    solve_grid_oracle,
    violation_magnitude,
)
from .fileio import (
    ParseError,
    format_coefficients,
    format_dataset,
    load_coefficients,
    load_dataset,
    parse_coefficients,
    parse_dataset,
    write_coefficients,
    write_dataset,
)
from .model import (
    CostCoefficients,
    DemandConfig,
    DivergeInstance,
    FeasibilityError,
    FlowDistribution,
    WardropResiduals,
    bifurcating_cost,
    check_uniqueness_condition,
    feed_through_cost,
    is_wardrop_equilibrium,
    uniqueness_margins,
    wardrop_residuals,
)

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryAction",
    "BoundaryBranchError",
    "CalibrationOptions",
    "CalibrationResult",
    "ConfigurationError",
    "CostCoefficients",
    "DataPoint",
    "DemandConfig",
    "DivergeInstance",
    "EquilibriumReport",
    "ExactSolverGuardError",
    "FeasibilityError",
    "FlowDistribution",
    "MilpSystem",
    "ParseError",
    "SimulationConfig",
    "SolverOptions",
    "ViolationCount",
    "WardropResiduals",
    "best_response",
    "best_response_slope",
    "bifurcating_cost",
    "build_milp",
    "calibrate_exact",
    "calibrate_search",
    "check_uniqueness_condition",
    "count_violations",
    "feed_through_cost",
    "format_coefficients",
    "format_dataset",
    "generate_dataset",
    "is_wardrop_equilibrium",
    "load_coefficients",
    "load_dataset",
    "nash_player_cost",
    "parse_coefficients",
    "parse_dataset",
    "simulate_steady_state",
    "solve_fixed_point",
    "solve_grid_oracle",
    "uniqueness_margins",
    "violation_magnitude",
    "wardrop_residuals",
    "write_coefficients",
    "write_dataset",
]
