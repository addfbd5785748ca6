"""isacbeam Configuration Module

Centralized defaults for the conic solver, the gamma_E outer search, rank-one
extraction, CSV output, parallelism and debug logging.

This module provides:
- Solver backend and tolerances
- Outer (1D) search schedule
- Extraction / PSD tolerances
- Output formatting constants
- Parallelism cap (ISACBEAM_THREADS)
- Debug flags (ISACBEAM_DEBUG)

Design: module-level instances hold the defaults. A scenario file overrides
them per run by building fresh instances (see config.scenario), never by
mutating the globals.

Example:
    from config import SOLVER, SEARCH

    tol = SOLVER.TOL_FEAS  # 1e-8
    n = SEARCH.N_GRID  # 64
"""

import os
from dataclasses import dataclass, field, replace

import psutil

# ============================================================================
# SOLVER CONFIGURATION
# ============================================================================


@dataclass(frozen=True)
class SolverConfig:
    """Conic solver backend and stopping tolerances.

    Attributes:
        BACKEND: cvxpy solver name ("CLARABEL" or "SCS")
        TOL_FEAS: Primal feasibility tolerance
        TOL_GAP: Duality gap tolerance (absolute and relative)
        MAX_ITERS: Iteration cap
        BLOCK_TOL: Block-structure tolerance of the real embedding
        REPLAY_SLACK: Factor on TOL_FEAS accepted when constraints are replayed
    """

    BACKEND: str = "CLARABEL"
    TOL_FEAS: float = 1e-8
    TOL_GAP: float = 1e-8
    MAX_ITERS: int = 200
    BLOCK_TOL: float = 1e-7
    REPLAY_SLACK: float = 10.0

    def backend_options(self) -> dict:
        """Translate tolerances into backend keyword arguments."""
        if self.BACKEND.upper() == "SCS":
            return {"eps_abs": self.TOL_FEAS, "eps_rel": self.TOL_GAP, "max_iters": self.MAX_ITERS}
        return {
            "tol_feas": self.TOL_FEAS,
            "tol_gap_abs": self.TOL_GAP,
            "tol_gap_rel": self.TOL_GAP,
            "max_iter": self.MAX_ITERS,
        }


# ============================================================================
# OUTER SEARCH CONFIGURATION
# ============================================================================


@dataclass(frozen=True)
class SearchConfig:
    """Grid-then-refine schedule over gamma_E.

    Attributes:
        GAMMA_LO: Lower end of the log grid
        N_GRID: Log-spaced points on (GAMMA_LO, gamma_hi]
        N_REFINE: Refinement rounds around the incumbent
        REFINE_POINTS: Linear points per refinement round
    """

    GAMMA_LO: float = 1e-6
    N_GRID: int = 64
    N_REFINE: int = 3
    REFINE_POINTS: int = 16

    def __post_init__(self):
        if self.GAMMA_LO <= 0:
            raise ValueError("GAMMA_LO must be positive")
        if self.N_GRID < 2:
            raise ValueError("N_GRID must be at least 2")
        if self.N_REFINE < 0 or self.REFINE_POINTS < 1:
            raise ValueError("refinement schedule must be non-negative")


# ============================================================================
# EXTRACTION CONFIGURATION
# ============================================================================


@dataclass(frozen=True)
class ExtractionConfig:
    """Tolerances for rank-one extraction and design invariants."""

    PSD_TOL: float = 1e-8  # relative to trace
    POWER_TOL: float = 1e-6  # relative to Q
    NULL_TOL: float = 1e-12  # g^H W g below this (relative) counts as zero
    SUM_TOL: float = 1e-10
    CU_TOL: float = 1e-9
    EVE_TOL: float = 1e-9
    RANK_RATIO: float = 1e-6  # second/first eigenvalue above this means rank > 1
    RANDOMIZATION_SAMPLES: int = 200
    RANDOMIZATION_SEED: int = 0


# ============================================================================
# OUTPUT CONFIGURATION
# ============================================================================


@dataclass(frozen=True)
class OutputConfig:
    """CSV formatting constants."""

    GAIN_FLOOR: float = 1e-12  # W/W
    DB_FLOOR: float = -120.0
    SIGNIFICANT_DIGITS: int = 9
    LINE_TERMINATOR: str = "\n"


# ============================================================================
# PARALLELISM
# ============================================================================


def _default_threads() -> int:
    env = os.environ.get("ISACBEAM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    cores = psutil.cpu_count(logical=False) or 1
    return max(1, min(cores, 8))


@dataclass(frozen=True)
class ParallelConfig:
    """Worker cap for independent gamma_E evaluations."""

    THREADS: int = field(default_factory=_default_threads)


# ============================================================================
# DEBUG FLAGS
# ============================================================================


@dataclass
class DebugConfig:
    """Debug flags and logging level."""

    ENABLE_DEBUG_LOGGING: bool = field(
        default_factory=lambda: os.environ.get("ISACBEAM_DEBUG", "") not in ("", "0")
    )
    LOG_LEVEL: str = "INFO"  # DEBUG, INFO, WARNING, ERROR, CRITICAL
    LOG_SOLVER_OUTPUT: bool = False  # pass verbose=True to the backend


# ============================================================================
# GLOBAL CONFIGURATION INSTANCES
# ============================================================================

SOLVER = SolverConfig()
SEARCH = SearchConfig()
EXTRACTION = ExtractionConfig()
OUTPUT = OutputConfig()
PARALLEL = ParallelConfig()
DEBUG = DebugConfig()


# ============================================================================
# HELPER FUNCTIONS
# ============================================================================


def with_overrides(base, **overrides):
    """Return a copy of a config instance with lower- or upper-case overrides.

    Example:
        >>> cfg = with_overrides(SOLVER, tol_feas=1e-7)
        >>> cfg.TOL_FEAS
        1e-07
    """
    return replace(base, **{key.upper(): value for key, value in overrides.items()})


def enable_debug_mode() -> None:
    """Enable debug logging and backend chatter for development."""
    DEBUG.ENABLE_DEBUG_LOGGING = True
    DEBUG.LOG_LEVEL = "DEBUG"
    DEBUG.LOG_SOLVER_OUTPUT = True


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "SOLVER",
    "SEARCH",
    "EXTRACTION",
    "OUTPUT",
    "PARALLEL",
    "DEBUG",
    "SolverConfig",
    "SearchConfig",
    "ExtractionConfig",
    "OutputConfig",
    "ParallelConfig",
    "DebugConfig",
    "with_overrides",
    "enable_debug_mode",
]
