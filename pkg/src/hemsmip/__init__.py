"""Residential energy scheduling with microgrid trading, solved to global
optimality by an in-house branch-and-bound."""

from .bnb import SolverOptions, solve
from .costs import disutility_cost, energy_cost, household_cost, storage_trajectory
from .io import load_scenario, save_scenario
from .model import ModelInstance, Solution, build_no_trade_model, build_unified_model
from .pareto import ParetoResult, compute_no_trade_bounds, solve_pareto, verify_pareto
from .report import emit_report
from .scenario import (Appliance, Household, Scenario, StorageSpec, case_study_scenario,
                       expand_virtual_appliances, validate_scenario)

__version__ = "0.1.0"

__all__ = [
    "Appliance", "Household", "ModelInstance", "ParetoResult", "Scenario", "Solution",
    "SolverOptions", "StorageSpec", "build_no_trade_model", "build_unified_model",
    "case_study_scenario", "compute_no_trade_bounds", "disutility_cost", "emit_report",
    "energy_cost", "expand_virtual_appliances", "household_cost", "load_scenario",
    "save_scenario", "solve", "solve_pareto", "storage_trajectory", "validate_scenario",
    "verify_pareto",
]
