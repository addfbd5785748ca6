"""
Experiment orchestration behind the CLI.

    run_design        one design (or all four with "compare") -> beampattern/summary CSVs
    run_sweep         R0 sweep over all designs -> sweep.csv
    run_verify        extraction fuzzing, closed-form fixtures, oracle sandwich
    run_feasibility   maximum secrecy rate R*

CSV files use 9 significant digits, '.' decimals and '\\n' line endings, so
identical inputs give byte-identical files. Gains below the floor print as
-120 dB.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from config import OUTPUT
from config.scenario import ScenarioConfig
from core import designs, oracle
from core.designs import DesignReport, DesignSettings, RateSearchResult
from core.errors import (
    DimensionError,
    DomainError,
    InfeasibleError,
    IsacError,
    NumericalError,
)
from core.logging import error_boundary, get_logger, log_performance, run_log
from core.model import SampleGrid, Scene, power_to_db

logger = get_logger(__name__)

BEAMPATTERN_COLUMNS = (
    "angle_deg",
    "desired",
    "total_gain_db",
    "info_gain_db",
    "sensing_gain_db",
)
SUMMARY_COLUMNS = (
    "design",
    "matching_error",
    "secrecy_rate_bpshz",
    "cu_sinr_db",
    "max_eve_sinr_db",
    "gamma_e_star",
    "eta_star",
    "power_info_w",
    "power_sense_w",
    "solver_status",
    "wall_time_s",
)
SWEEP_COLUMNS = (
    "r0_bpshz",
    "error_optimal",
    "error_zf",
    "error_separate",
    "error_sensing_only",
    "feasible_optimal",
    "feasible_zf",
    "feasible_separate",
)
COMPARED_DESIGNS = ("optimal", "zf", "separate", "sensing_only")
CONSTRAINED_DESIGNS = ("optimal", "zf", "separate")

FUZZ_SIZES = (2, 4, 8)
FUZZ_TRIALS = 1000

ConfigSource = Union[ScenarioConfig, str, Path]


# ============================================================================
# CSV FORMATTING
# ============================================================================


def format_value(value) -> str:
    """Fixed CSV rendering: floats to 9 significant digits, None/nan empty, bools lower-case."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    value = float(value)
    if np.isnan(value):
        return ""
    # + 0.0 folds -0.0 into 0.0
    return f"{value + 0.0:.{OUTPUT.SIGNIFICANT_DIGITS}g}"


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator=OUTPUT.LINE_TERMINATOR)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    logger.debug(f"wrote {path}")
    return path


def _db(values) -> np.ndarray:
    return np.maximum(power_to_db(values, OUTPUT.GAIN_FLOOR), OUTPUT.DB_FLOOR)


def _relative_db(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    peak = float(values.max()) if values.size else 0.0
    if peak <= OUTPUT.GAIN_FLOOR:
        return np.full(values.shape, OUTPUT.DB_FLOOR)
    return _db(values / peak)


def beampattern_rows(report: DesignReport, normalize: bool = False) -> list[list]:
    """One row per sample angle; gains in dB, absolute or relative to each curve's own peak."""
    to_db = _relative_db if normalize else _db
    columns = zip(
        np.rad2deg(report.angles),
        report.desired,
        to_db(report.gain_total),
        to_db(report.gain_info),
        to_db(report.gain_sensing),
    )
    return [list(row) for row in columns]


def summary_row(report: DesignReport) -> list:
    eve = report.max_eve_sinr
    return [
        report.design_name,
        report.matching_error,
        report.secrecy_rate,
        float(_db(report.cu_sinr)),
        float(_db(eve)),
        report.gamma_e_star,
        report.eta,
        report.power_info,
        report.power_sense,
        report.diagnostics.status,
        report.diagnostics.wall_time_s,
    ]


def _failed_summary_row(design: str, status: str) -> list:
    return [design] + [None] * 8 + [status, None]


# ============================================================================
# RUN
# ============================================================================


@dataclass
class RunOutcome:
    """Reports and files from run_design; `failed` maps design name to status."""

    scenario: ScenarioConfig
    channel_hash: str
    reports: dict[str, DesignReport] = field(default_factory=dict)
    failed: dict[str, str] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)


def _as_config(source: ConfigSource) -> ScenarioConfig:
    return source if isinstance(source, ScenarioConfig) else ScenarioConfig.load(source)


def prepare(config: ScenarioConfig) -> tuple[Scene, SampleGrid, DesignSettings]:
    """Scene, sample grid and settings of a scenario; logs the channel hash."""
    scene = config.to_scene()
    grid = config.sample_grid(scene)
    digest = scene.channel_hash()
    run_log(
        "SCENARIO_LOADED",
        scenario=config.name,
        channel_hash=digest,
        n_antennas=scene.n_antennas,
        n_targets=scene.n_targets,
        n_eavesdroppers=len(scene.eavesdropper_indices),
    )
    return scene, grid, config.design_settings()


def _log_report(report: DesignReport, scenario: str) -> None:
    run_log(
        "DESIGN_SOLVED",
        scenario=scenario,
        design=report.design_name,
        r0=report.r0,
        matching_error=report.matching_error,
        secrecy_rate=report.secrecy_rate,
        n_solves=report.diagnostics.n_solves,
    )


def run_design(
    source: ConfigSource, out_dir: Optional[Union[str, Path]] = None, normalize: bool = False
) -> RunOutcome:
    """
    Solve the scenario's design and write its CSVs.

    A single design writes beampattern.csv and summary.csv (plus
    beampattern_normalized.csv with normalize). "compare" writes
    beampattern_<design>.csv per design and a four-row summary.csv; a
    benchmark design that cannot meet R0 gets a row with its status and no
    beampattern file.

    Raises:
        InfeasibleError: R0 above R* (single design, or the optimal design in compare)
        ConfigError: invalid scenario
    """
    config = _as_config(source)
    scene, grid, settings = prepare(config)
    out = Path(out_dir if out_dir is not None else config.output_dir)
    r0 = config.secrecy_rate_bpshz
    outcome = RunOutcome(scenario=config, channel_hash=scene.channel_hash())

    with log_performance("run_design", design=config.design, r0=r0):
        if config.design == "compare":
            max_rate = designs.search_secrecy_rate(scene, settings) if r0 > 0 else None
            for name in COMPARED_DESIGNS:
                try:
                    if name == "optimal":
                        report = designs.solve_optimal(scene, grid, r0, settings, max_rate)
                    else:
                        report = designs.run_named_design(name, scene, grid, r0, settings)
                except (InfeasibleError, DimensionError) as e:
                    if name == "optimal":
                        raise
                    logger.warning(f"{name} design unavailable at R0 = {r0}: {e}")
                    outcome.failed[name] = "infeasible"
                    continue
                except NumericalError as e:
                    logger.warning(f"{name} design failed at R0 = {r0}: {e}")
                    outcome.failed[name] = "numerical_failure"
                    continue
                outcome.reports[name] = report
        else:
            report = designs.run_named_design(config.design, scene, grid, r0, settings)
            outcome.reports[config.design] = report

    for report in outcome.reports.values():
        _log_report(report, config.name)

    if config.design == "compare":
        for name, report in outcome.reports.items():
            path = out / f"beampattern_{name}.csv"
            outcome.files.append(write_csv(path, BEAMPATTERN_COLUMNS, beampattern_rows(report)))
            if normalize:
                outcome.files.append(
                    write_csv(
                        out / f"beampattern_normalized_{name}.csv",
                        BEAMPATTERN_COLUMNS,
                        beampattern_rows(report, normalize=True),
                    )
                )
        rows = [
            summary_row(outcome.reports[name])
            if name in outcome.reports
            else _failed_summary_row(name, outcome.failed[name])
            for name in COMPARED_DESIGNS
        ]
    else:
        report = outcome.reports[config.design]
        outcome.files.append(
            write_csv(out / "beampattern.csv", BEAMPATTERN_COLUMNS, beampattern_rows(report))
        )
        if normalize:
            outcome.files.append(
                write_csv(
                    out / "beampattern_normalized.csv",
                    BEAMPATTERN_COLUMNS,
                    beampattern_rows(report, normalize=True),
                )
            )
        rows = [summary_row(report)]

    outcome.files.append(write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows))
    run_log(
        "SUMMARY_WRITTEN",
        scenario=config.name,
        channel_hash=outcome.channel_hash,
        path=str(out / "summary.csv"),
    )
    return outcome


# ============================================================================
# SWEEP
# ============================================================================


@dataclass(frozen=True)
class SweepRow:
    r0: float
    errors: dict[str, Optional[float]]
    feasible: dict[str, bool]

    def as_csv(self) -> list:
        return (
            [self.r0]
            + [self.errors.get(name) for name in COMPARED_DESIGNS]
            + [self.feasible.get(name, False) for name in CONSTRAINED_DESIGNS]
        )


@dataclass
class SweepOutcome:
    scenario: ScenarioConfig
    max_rate: Optional[float]
    rows: list[SweepRow] = field(default_factory=list)
    path: Optional[Path] = None


_INFEASIBLE = object()


def _sweep_point(
    name: str,
    scene: Scene,
    grid: SampleGrid,
    r0: float,
    settings: DesignSettings,
    max_rate: Optional[RateSearchResult],
):
    """
    Matching error of one design at one R0; _INFEASIBLE when R0 is out of its
    reach. Any other failure is logged and re-raised.
    """

    @error_boundary(reraise=True)
    def solve():
        try:
            if name == "optimal":
                return designs.solve_optimal(scene, grid, r0, settings, max_rate).matching_error
            return designs.run_named_design(name, scene, grid, r0, settings).matching_error
        except (InfeasibleError, DimensionError) as e:
            logger.info(f"{name} infeasible at R0 = {r0}: {e}")
            return _INFEASIBLE

    return solve()


def run_sweep(source: ConfigSource, out_dir: Optional[Union[str, Path]] = None) -> SweepOutcome:
    """
    Matching error of every design at each R0 of the scenario's sweep.

    R* and the sensing-only benchmark are computed once. Points are solved in
    sweep order; a design that cannot reach R0 leaves an empty error cell
    with feasible = false and the sweep carries on. Any other error (solver
    breakdown, bad input) aborts the sweep without writing sweep.csv.
    """
    config = _as_config(source)
    scene, grid, settings = prepare(config)
    out = Path(out_dir if out_dir is not None else config.output_dir)

    max_rate = None
    if any(r0 > 0 for r0 in config.sweep_bpshz):
        max_rate = designs.search_secrecy_rate(scene, settings)
    benchmark = designs.solve_sensing_only(scene, grid, settings).matching_error
    outcome = SweepOutcome(scenario=config, max_rate=None if max_rate is None else max_rate.rate)

    with log_performance("sweep", n_points=len(config.sweep_bpshz)):
        for r0 in config.sweep_bpshz:
            errors: dict[str, Optional[float]] = {"sensing_only": benchmark}
            feasible: dict[str, bool] = {}
            for name in CONSTRAINED_DESIGNS:
                value = _sweep_point(name, scene, grid, r0, settings, max_rate)
                ok = value is not _INFEASIBLE
                errors[name] = value if ok else None
                feasible[name] = ok
            row = SweepRow(r0=r0, errors=errors, feasible=feasible)
            outcome.rows.append(row)
            run_log(
                "SWEEP_POINT",
                success=feasible["optimal"],
                scenario=config.name,
                r0=r0,
                **{f"error_{k}": v for k, v in errors.items()},
            )

    outcome.path = write_csv(out / "sweep.csv", SWEEP_COLUMNS, (r.as_csv() for r in outcome.rows))
    return outcome


# ============================================================================
# FEASIBILITY
# ============================================================================


def run_feasibility(source: ConfigSource) -> RateSearchResult:
    """R* of the scenario; R0 is achievable iff R0 <= R*."""
    config = _as_config(source)
    scene, _, settings = prepare(config)
    result = designs.search_secrecy_rate(scene, settings)
    run_log(
        "FEASIBILITY",
        scenario=config.name,
        max_rate=result.rate,
        gamma_e=result.gamma_e,
        r0=config.secrecy_rate_bpshz,
        feasible=result.rate >= config.secrecy_rate_bpshz,
    )
    return result


# ============================================================================
# VERIFY
# ============================================================================


@dataclass
class VerifyOutcome:
    level: str
    lines: list[str] = field(default_factory=list)
    failures: int = 0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def add(self, passed: bool, label: str) -> None:
        self.lines.append(f"{'PASS' if passed else 'FAIL'} {label}")
        if not passed:
            self.failures += 1


def _verify_fuzz(outcome: VerifyOutcome, seed: int, trials: int) -> None:
    for n in FUZZ_SIZES:
        report = oracle.fuzz_proposition1(n, trials, seed + n)
        if report.passed:
            outcome.add(True, f"extraction N={n} ({trials} trials)")
            continue
        for failure in report.failures:
            outcome.add(
                False,
                f"{failure['clause']} extraction N={n} trial {failure['trial']} "
                f"(violation {failure['ratio']:.3g}x tolerance)",
            )


def _verify_cases(outcome: VerifyOutcome, settings: DesignSettings) -> None:
    for case_id in sorted(oracle.ANALYTIC_CASES):
        try:
            checks = oracle.check_analytic_case(case_id, settings)
        except IsacError as e:
            outcome.add(False, f"{case_id} ({type(e).__name__}: {e})")
            continue
        for check in checks:
            outcome.add(
                check.passed,
                f"{check.case_id}:{check.quantity} expected={check.expected:.9g} "
                f"measured={check.measured:.9g}",
            )


def _verify_sandwich(outcome: VerifyOutcome, settings: DesignSettings) -> None:
    for fixture in oracle.sandwich_fixtures():
        try:
            check = oracle.check_sandwich(fixture, settings)
        except IsacError as e:
            outcome.add(False, f"sandwich:{fixture.fixture_id} ({type(e).__name__}: {e})")
            continue
        outcome.add(
            check.passed,
            f"sandwich:{check.fixture_id} sdr={check.sdr_error:.9g} "
            f"oracle={check.oracle_error:.9g}",
        )


def run_verify(
    level: str = "fast",
    seed: int = 0,
    settings: DesignSettings = designs.DEFAULT_SETTINGS,
    trials: int = FUZZ_TRIALS,
) -> VerifyOutcome:
    """
    Self-checks. "fast": extraction fuzzing at N = 2, 4, 8 and the closed-form
    fixtures. "full": additionally the N = 2 brute-force sandwich.
    """
    if level not in ("fast", "full"):
        raise DomainError(f"verify level must be 'fast' or 'full', got {level!r}")
    outcome = VerifyOutcome(level=level)
    with log_performance("verify", level=level):
        _verify_fuzz(outcome, seed, trials)
        _verify_cases(outcome, settings)
        if level == "full":
            _verify_sandwich(outcome, settings)
    run_log(
        "VERIFY_RESULT",
        success=outcome.passed,
        level=level,
        checks=len(outcome.lines),
        failures=outcome.failures,
    )
    return outcome


__all__ = [
    "BEAMPATTERN_COLUMNS",
    "SUMMARY_COLUMNS",
    "SWEEP_COLUMNS",
    "format_value",
    "write_csv",
    "beampattern_rows",
    "summary_row",
    "RunOutcome",
    "prepare",
    "run_design",
    "SweepRow",
    "SweepOutcome",
    "run_sweep",
    "run_feasibility",
    "VerifyOutcome",
    "run_verify",
]
