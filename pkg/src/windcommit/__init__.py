"""Stochastic unit commitment with wind scenario trees, a built-in MILP
solver, rolling-horizon simulation, and LLM-assisted probability calibration."""

__version__ = "0.1.0"

from .scenario_tree import (ArParams, ProbabilityVector, QuantileSet, ScenarioTree,
                            apply_errors, branch_probabilities, build_error_tree,
                            default_probabilities, inverse_normal_cdf)
from .uc_model import (CostBreakdown, Generator, UcInstance, UcSolution,
                       build_milp, check_feasibility, decode_solution,
                       evaluate_solution)
from .milp import (MilpProblem, MilpSolution, SolveStatus, solve_lp, solve_milp)
from .agents import (ChatBackend, ErrorStats, HttpChatBackend, NullBackend,
                     ScriptedBackend, compute_error_stats, deterministic_calibration,
                     extract_prob_new, refine_probabilities,
                     validate_probability_vector)
from .simulator import (ComparisonSummary, SimulationConfig, SimulationReport,
                        StepRecord, assemble_window, compare_trials,
                        run_simulation, run_step)

__all__ = [
    "ArParams", "ProbabilityVector", "QuantileSet", "ScenarioTree",
    "apply_errors", "branch_probabilities", "build_error_tree",
    "default_probabilities", "inverse_normal_cdf",
    "CostBreakdown", "Generator", "UcInstance", "UcSolution",
    "build_milp", "check_feasibility", "decode_solution", "evaluate_solution",
    "MilpProblem", "MilpSolution", "SolveStatus", "solve_lp", "solve_milp",
    "ChatBackend", "ErrorStats", "HttpChatBackend", "NullBackend",
    "ScriptedBackend", "compute_error_stats", "deterministic_calibration",
    "extract_prob_new", "refine_probabilities", "validate_probability_vector",
    "ComparisonSummary", "SimulationConfig", "SimulationReport", "StepRecord",
    "assemble_window", "compare_trials", "run_simulation", "run_step",
]
