"""isacbeam core package - secrecy-constrained ISAC transmit beamforming.

Modules:
    model: Array response, channels, SINRs, secrecy rate, beampattern metrics
    conic: Real-embedded conic problems and the cvxpy solve wrapper
    designs: Optimal, zero-forcing, separate and sensing-only designs
    oracle: Brute force, extraction fuzzing and closed-form fixtures
    experiments: Run/sweep/verify/feasibility orchestration and CSV output
    logging: Structured logging with run provenance and performance tracking
    errors: Exception hierarchy

Example:
    from core.logging import get_logger, log_performance, run_log

    logger = get_logger(__name__)
    logger.info("Sweep started")
"""

from core.logging import (
    PerformanceMonitor,
    error_boundary,
    get_logger,
    log_error,
    log_performance,
    performance_monitor,
    run_log,
    setup_logging,
)

__version__ = "0.1.0"

__all__ = [
    "setup_logging",
    "get_logger",
    "log_error",
    "run_log",
    "log_performance",
    "error_boundary",
    "PerformanceMonitor",
    "performance_monitor",
]
