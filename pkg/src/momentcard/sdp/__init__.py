"""Semidefinite programming: problem container, interior-point solver, SDPA I/O."""
from .problem import DIAGONAL, PSD, Block, SdpBuilder, SdpProblem, pack_inner, split_free_variables
from .sdpa import export_sdpa, load_sdpa, read_sdpa, write_sdpa
from .solver import (
    INFEASIBLE_SUSPECTED,
    MAX_ITER,
    NEAR_OPTIMAL,
    NUMERICAL_FAILURE,
    OPTIMAL,
    LpResult,
    SdpSolution,
    SolverConfig,
    solve,
    solve_lp,
)

__all__ = [
    "Block", "DIAGONAL", "INFEASIBLE_SUSPECTED", "LpResult", "MAX_ITER", "NEAR_OPTIMAL", "NUMERICAL_FAILURE",
    "OPTIMAL", "PSD", "SdpBuilder", "SdpProblem", "SdpSolution", "SolverConfig",
    "export_sdpa", "load_sdpa", "pack_inner", "read_sdpa", "solve", "solve_lp",
    "split_free_variables", "write_sdpa",
]
