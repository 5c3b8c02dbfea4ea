from .model import (EQ, GE, INF, INFEASIBLE, ITERATION_LIMIT, LE, MAXIMIZE,
                    MINIMIZE, OPTIMAL, UNBOUNDED, LinearProgram, MilpProgram,
                    ProgramBuilder, Solution, check_feasible)
from .simplex import SolverOptions, solve_lp_simplex
from .branch_bound import solve_milp_bb
from .backends import (available_backends, get_backend, register_backend,
                       solve_lp, solve_milp)
from .lpformat import read_lp, write_lp

__all__ = [
    "EQ", "GE", "INF", "INFEASIBLE", "ITERATION_LIMIT", "LE", "MAXIMIZE",
    "MINIMIZE", "OPTIMAL", "UNBOUNDED", "LinearProgram", "MilpProgram",
    "ProgramBuilder", "Solution", "SolverOptions", "check_feasible",
    "solve_lp_simplex", "solve_milp_bb", "available_backends", "get_backend",
    "register_backend", "solve_lp", "solve_milp", "read_lp", "write_lp",
]
