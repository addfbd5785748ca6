"""isacbeam configuration package.

settings: solver/search/output defaults (module-level singletons)
scenario: JSON scenario schema, imported explicitly as config.scenario
"""

from config.settings import (
    DEBUG,
    EXTRACTION,
    OUTPUT,
    PARALLEL,
    SEARCH,
    SOLVER,
    DebugConfig,
    ExtractionConfig,
    OutputConfig,
    ParallelConfig,
    SearchConfig,
    SolverConfig,
    enable_debug_mode,
    with_overrides,
)

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
