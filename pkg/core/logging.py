"""
isacbeam Logging Framework

Five sinks, all configured by setup_logging():

    isacbeam.log     every record from every module (rotating)
    stderr           colour console at the requested level
    runs.log         provenance trail: scenario loads, solved designs, sweep points
    performance.log  one line per timed block, with resident memory
    errors.log       ERROR and above, with source location

Usage:
    from core.logging import get_logger, log_performance, run_log

    logger = get_logger(__name__)

    with log_performance("conic_solve", problem="sdr41"):
        solve(problem)

    run_log("DESIGN_SOLVED", design="optimal", matching_error=0.12)

stdout is never written here; it belongs to the CLI.
"""

import functools
import getpass
import logging
import logging.handlers
import os
import sys
import tempfile
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

import psutil

from config import DEBUG

LOG_DIR_ENV = "ISACBEAM_LOG_DIR"

MAIN_LOG = "isacbeam.log"
RUNS_LOG = "runs.log"
PERFORMANCE_LOG = "performance.log"
ERROR_LOG = "errors.log"

ROTATE_BYTES = 10 * 1024 * 1024
ROTATE_KEEP = 5

_fallback_dir: Optional[Path] = None


def _writable(path: Path) -> bool:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError:
        return False
    return True


def get_log_dir() -> Path:
    """
    Directory for the log files.

    $ISACBEAM_LOG_DIR is re-read on every call so tests can redirect it; the
    fallback (<project>/logs, else <tmp>/isacbeam_logs) is resolved once.
    """
    global _fallback_dir
    override = os.environ.get(LOG_DIR_ENV)
    if override and _writable(Path(override)):
        return Path(override)
    if _fallback_dir is None:
        project_logs = Path(__file__).resolve().parent.parent / "logs"
        _fallback_dir = (
            project_logs if _writable(project_logs) else Path(tempfile.gettempdir()) / "isacbeam_logs"
        )
        _fallback_dir.mkdir(parents=True, exist_ok=True)
    return _fallback_dir


# ============================================================================
# FORMATTERS
# ============================================================================

_RESET = "\033[0m"
_LEVEL_COLOURS = {
    logging.DEBUG: "\033[96m",
    logging.INFO: "\033[92m",
    logging.WARNING: "\033[93m",
    logging.ERROR: "\033[91m",
    logging.CRITICAL: "\033[1m\033[91m",
}


class ConsoleFormatter(logging.Formatter):
    """Level name coloured when the stream is a terminal."""

    def __init__(self, colour: bool):
        super().__init__("%(levelname)s | %(name)s | %(message)s")
        self.colour = colour

    def formatMessage(self, record: logging.LogRecord) -> str:
        if not self.colour or record.levelno not in _LEVEL_COLOURS:
            return super().formatMessage(record)
        plain = record.levelname
        record.levelname = f"{_LEVEL_COLOURS[record.levelno]}{plain}{_RESET}"
        try:
            return super().formatMessage(record)
        finally:
            record.levelname = plain


def _pairs(details: dict[str, Any]) -> str:
    return " ".join(f"{key}={value}" for key, value in details.items())


class RunFormatter(logging.Formatter):
    """timestamp | event | user | SUCCESS/FAILURE | key=value ..."""

    def format(self, record: logging.LogRecord) -> str:
        fields = (
            datetime.fromtimestamp(record.created).isoformat(),
            getattr(record, "event_type", record.getMessage()),
            getattr(record, "user", "unknown"),
            "SUCCESS" if getattr(record, "success", True) else "FAILURE",
            _pairs(getattr(record, "details", {})),
        )
        return " | ".join(fields)


class PerformanceFormatter(logging.Formatter):
    """timestamp | operation | duration | rss | key=value ..."""

    def format(self, record: logging.LogRecord) -> str:
        fields = (
            datetime.fromtimestamp(record.created).isoformat(),
            getattr(record, "operation", record.getMessage()),
            f"{getattr(record, 'duration_ms', 0.0):.2f}ms",
            f"rss={getattr(record, 'rss_mb', 0.0):.1f}MB",
            _pairs(getattr(record, "details", {})),
        )
        return " | ".join(fields)


# ============================================================================
# SETUP
# ============================================================================


def _rotating(path: Path, level: int, formatter: logging.Formatter) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(
        path, maxBytes=ROTATE_BYTES, backupCount=ROTATE_KEEP, encoding="utf-8"
    )
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def _dedicated(name: str, handler: logging.Handler) -> None:
    """Route a named logger to its own file only."""
    logger = logging.getLogger(name)
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG)
    logger.propagate = False


def setup_logging(
    log_level: int = logging.INFO,
    enable_console: bool = True,
    enable_file: bool = True,
    enable_runs: bool = True,
    enable_performance: bool = True,
) -> None:
    """
    Replace the root handlers with the isacbeam sinks.

    Args:
        log_level: Console threshold; files always get DEBUG (main) or ERROR (errors)
        enable_console: stderr handler
        enable_file: isacbeam.log
        enable_runs: runs.log provenance trail
        enable_performance: performance.log timings
    """
    log_dir = get_log_dir()
    stamp = "%Y-%m-%d %H:%M:%S"

    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(logging.DEBUG if DEBUG.ENABLE_DEBUG_LOGGING else min(log_level, logging.INFO))

    if enable_file:
        root.addHandler(
            _rotating(
                log_dir / MAIN_LOG,
                logging.DEBUG,
                logging.Formatter("%(asctime)s | %(name)s | %(levelname)s | %(message)s", stamp),
            )
        )
    if enable_console:
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(log_level)
        console.setFormatter(ConsoleFormatter(colour=sys.stderr.isatty()))
        root.addHandler(console)
    root.addHandler(
        _rotating(
            log_dir / ERROR_LOG,
            logging.ERROR,
            logging.Formatter(
                "%(asctime)s | %(name)s | %(levelname)s | %(pathname)s:%(lineno)d | %(message)s",
                stamp,
            ),
        )
    )

    if enable_runs:
        _dedicated("runs", _rotating(log_dir / RUNS_LOG, logging.INFO, RunFormatter()))
    if enable_performance:
        _dedicated(
            "performance", _rotating(log_dir / PERFORMANCE_LOG, logging.DEBUG, PerformanceFormatter())
        )


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


# ============================================================================
# STRUCTURED RECORDS
# ============================================================================


def log_error(
    message: str,
    exc_info: bool = False,
    context: Optional[dict[str, Any]] = None,
    logger_name: Optional[str] = None,
) -> None:
    """
    ERROR record with key=value context appended.

    Example:
        log_error("Sweep point failed", context={"r0": 3.0, "design": "zf"})
    """
    if context:
        message = " | ".join([message] + [f"{k}={v}" for k, v in context.items()])
    get_logger(logger_name or "error").error(message, exc_info=exc_info)


def _emit(logger_name: str, level: int, message: str, **attributes: Any) -> None:
    logger = logging.getLogger(logger_name)
    # handle() skips the logger's level; the handlers filter instead.
    record = logger.makeRecord(logger.name, level, "(isacbeam)", 0, message, (), None)
    record.__dict__.update(attributes)
    logger.handle(record)


def _user() -> str:
    try:
        return getpass.getuser()
    except Exception:
        return "unknown"


def run_log(event_type: str, success: bool = True, user: Optional[str] = None, **details: Any) -> None:
    """
    Append an event to the provenance trail (runs.log).

    Events used by the experiments layer: SCENARIO_LOADED, DESIGN_SOLVED,
    SUMMARY_WRITTEN, SWEEP_POINT, FEASIBILITY, VERIFY_RESULT.
    """
    _emit(
        "runs",
        logging.INFO,
        event_type,
        event_type=event_type,
        success=success,
        user=user or _user(),
        details=details,
    )


def _rss_mb() -> float:
    try:
        return psutil.Process(os.getpid()).memory_info().rss / (1024 * 1024)
    except (psutil.Error, OSError):
        return 0.0


@contextmanager
def log_performance(operation: str, logger_name: Optional[str] = None, **details: Any) -> Iterator[None]:
    """Time the enclosed block into performance.log, even when it raises."""
    started = time.perf_counter()
    try:
        yield
    finally:
        _emit(
            logger_name or "performance",
            logging.DEBUG,
            operation,
            operation=operation,
            duration_ms=(time.perf_counter() - started) * 1000.0,
            rss_mb=_rss_mb(),
            details=details,
        )


def error_boundary(
    fallback_value: Any = None, log_traceback: bool = True, reraise: bool = False
) -> Callable:
    """
    Log any exception escaping the decorated function, then return
    `fallback_value` (or re-raise with reraise=True).

    Example:
        @error_boundary(fallback_value=None)
        def solve_point():
            return solve_optimal(scene, grid, r0)
    """

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                log_error(
                    f"Exception in {func.__name__}: {e}",
                    exc_info=log_traceback,
                    context={"function": func.__qualname__, "error": type(e).__name__},
                )
                if reraise:
                    raise
                return fallback_value

        return wrapper

    return decorator


# ============================================================================
# AGGREGATED TIMINGS
# ============================================================================


@dataclass
class _Timing:
    count: int = 0
    total_ms: float = 0.0
    min_ms: float = float("inf")
    max_ms: float = 0.0

    def add(self, duration_ms: float) -> None:
        self.count += 1
        self.total_ms += duration_ms
        self.min_ms = min(self.min_ms, duration_ms)
        self.max_ms = max(self.max_ms, duration_ms)


class PerformanceMonitor:
    """
    Running min/max/avg/count per operation, shared by the solver threads.

    Example:
        with performance_monitor.measure("conic_solve", problem="sdr41"):
            solve(problem)
        performance_monitor.get_stats("conic_solve")["count"]
    """

    def __init__(self):
        self._timings: dict[str, _Timing] = {}
        self._lock = threading.Lock()
        self.logger = get_logger("performance_monitor")

    @contextmanager
    def measure(self, operation: str, **details: Any) -> Iterator[None]:
        started = time.perf_counter()
        try:
            with log_performance(operation, **details):
                yield
        finally:
            elapsed = (time.perf_counter() - started) * 1000.0
            with self._lock:
                self._timings.setdefault(operation, _Timing()).add(elapsed)

    def get_stats(self, operation: str) -> dict[str, float]:
        with self._lock:
            timing = self._timings.get(operation)
            if timing is None:
                return {"min_ms": 0.0, "max_ms": 0.0, "avg_ms": 0.0, "count": 0}
            return {
                "min_ms": timing.min_ms,
                "max_ms": timing.max_ms,
                "avg_ms": timing.total_ms / timing.count,
                "count": timing.count,
            }

    def report(self) -> None:
        """One DEBUG line per operation."""
        for operation in sorted(self._timings):
            stats = self.get_stats(operation)
            self.logger.debug(
                f"{operation}: {stats['count']} calls, avg {stats['avg_ms']:.1f}ms "
                f"(min {stats['min_ms']:.1f}, max {stats['max_ms']:.1f})"
            )

    def reset(self, operation: Optional[str] = None) -> None:
        with self._lock:
            if operation is None:
                self._timings.clear()
            else:
                self._timings.pop(operation, None)


performance_monitor = PerformanceMonitor()
