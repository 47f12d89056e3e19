"""LP construction, solving, and flow decomposition."""

from .builder import (
    LpProblem,
    LpSolution,
    build_mcmf_lp,
    build_mcrn_lp,
    solve_lp,
)
from .decompose import decompose_commodity, decompose_paths, scale_paths_to, solver_noise
from .dump import write_lp
from .linprog import (
    EQ,
    GE,
    LE,
    LinearProgram,
    LpStatus,
    SimplexResult,
    solve_simplex,
)

__all__ = [
    "EQ",
    "GE",
    "LE",
    "LinearProgram",
    "LpProblem",
    "LpSolution",
    "LpStatus",
    "SimplexResult",
    "build_mcmf_lp",
    "build_mcrn_lp",
    "decompose_commodity",
    "decompose_paths",
    "scale_paths_to",
    "solver_noise",
    "solve_lp",
    "solve_simplex",
    "write_lp",
]
