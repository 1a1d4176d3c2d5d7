"""Integrated patient-to-room and nurse-to-patient assignment."""
from .evaluator import (FeasibilityReport, InfeasibleSolutionError, ObjectiveBreakdown, SolutionStructureError,
                        check_feasibility, eval_total, walking_distance)
from .heuristic import HeuristicInfeasible, HeuristicResult, run_heuristic, solve_heuristic
from .instgen import PRESETS, GenConfig, fill_missing_real_data, generate_instance, generate_instances, preset
from .io import FormatError, load_instance, load_solution, save_instance, save_solution
from .kernels import BACKEND
from .mipexport import (ModelFile, export, export_full_mip, export_npa, export_pra, export_roster_bip, read_lp,
                        write_lp, write_mps)
from .model import Instance, Nurse, ObjectiveWeights, Patient, Room, Solution, validate_instance
from .oracle import BudgetExceeded, check_mip_point, enumerate_optimal
from .roster import RosterInfeasible, RosterRequest, check_roster, solve_roster

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetExceeded", "FeasibilityReport", "FormatError", "GenConfig", "HeuristicInfeasible",
    "HeuristicResult", "InfeasibleSolutionError", "Instance", "ModelFile", "Nurse", "ObjectiveBreakdown",
    "ObjectiveWeights", "PRESETS", "Patient", "Room", "RosterInfeasible", "RosterRequest", "Solution",
    "SolutionStructureError", "check_feasibility", "check_mip_point", "check_roster", "enumerate_optimal",
    "eval_total", "export", "export_full_mip", "export_npa", "export_pra", "export_roster_bip",
    "fill_missing_real_data", "generate_instance", "generate_instances", "load_instance", "load_solution",
    "preset", "read_lp", "run_heuristic", "save_instance", "save_solution", "solve_heuristic", "solve_roster",
    "validate_instance", "walking_distance", "write_lp", "write_mps",
]
