"""Scenario files.

A scenario is one JSON document describing the array, the communication user
(CU), the targets, the design to run and the solver/search overrides. Units
are the ones a link budget is written in (degrees, dBm, dB, meters) and are
converted here; everything past this module works in radians, watts and
linear gains.

Example document (see scenarios/ for complete files):

    {
      "name": "fig1",
      "n_antennas": 8,
      "antenna_spacing_ratio": 0.5,
      "power_budget_dbm": 20,
      "cu": {"angle_deg": 0, "pathloss_db": -70, "noise_dbm": -60},
      "targets": [
        {"angle_deg": -30, "pathloss_db": -70, "eavesdropper": true, "noise_dbm": -60},
        {"angle_deg": 10, "pathloss_db": -70}
      ],
      "design": "optimal",
      "secrecy_rate_bpshz": 3.0,
      "beam_width_deg": 5,
      "n_samples": 201,
      "search": {"n_grid": 64},
      "solver": {"tol_feas": 1e-8},
      "output_dir": "results/fig1",
      "sweep_bpshz": [0.5, 1.0, 1.5]
    }

Unknown keys are rejected with ConfigError naming the key.
"""

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from config.settings import (
    EXTRACTION,
    PARALLEL,
    SEARCH,
    SOLVER,
    SearchConfig,
    SolverConfig,
    with_overrides,
)
from core.designs import DesignSettings
from core.errors import ConfigError, DomainError
from core.logging import get_logger
from core.model import (
    SampleGrid,
    Scene,
    Target,
    dbm_to_watts,
    desired_beampattern,
    pathloss_db_to_linear,
)

logger = get_logger(__name__)

DESIGN_CHOICES = ("optimal", "zf", "separate", "sensing_only", "compare")
DEFAULT_SWEEP = tuple(float(x) for x in np.arange(1, 9) * 0.5)

# Angles of the desk-scale benchmark scene, trusted and untrusted alike.
BENCHMARK_TARGET_ANGLES_DEG = (-10.0, 10.0, -30.0, 30.0, 80.0, -80.0, -50.0, 50.0)
BENCHMARK_EAVESDROPPER_ANGLES_DEG = (-30.0, 30.0)


def _check_keys(data: Any, allowed: set, where: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")
    return data


def _field_names(cls) -> set:
    return {f.name for f in fields(cls)}


def _require(data: dict, key: str, where: str) -> Any:
    if key not in data:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return data[key]


# ============================================================================
# TARGETS
# ============================================================================


@dataclass(frozen=True)
class TargetSpec:
    """
    One target (or the CU) as written in a scenario file.

    Attributes:
        angle_deg: Direction in degrees, within [-90, 90]
        pathloss_db: Reference path loss at 1 m in dB (e.g. -70)
        distance_m: Distance in meters
        eavesdropper: Target is untrusted
        noise_dbm: Receiver noise power (eavesdroppers and the CU)
    """

    angle_deg: float
    pathloss_db: float
    distance_m: float = 1.0
    eavesdropper: bool = False
    noise_dbm: Optional[float] = None

    def __post_init__(self):
        if not -90.0 <= self.angle_deg <= 90.0:
            raise ConfigError(f"angle_deg must lie in [-90, 90], got {self.angle_deg}")
        if not self.distance_m > 0:
            raise ConfigError(f"distance_m must be positive, got {self.distance_m}")
        if self.eavesdropper and self.noise_dbm is None:
            raise ConfigError(f"eavesdropper at {self.angle_deg} deg needs noise_dbm")

    @classmethod
    def from_dict(cls, data: Any, where: str) -> "TargetSpec":
        data = _check_keys(data, _field_names(cls), where)
        try:
            return cls(
                angle_deg=float(_require(data, "angle_deg", where)),
                pathloss_db=float(_require(data, "pathloss_db", where)),
                distance_m=float(data.get("distance_m", 1.0)),
                eavesdropper=bool(data.get("eavesdropper", False)),
                noise_dbm=None if data.get("noise_dbm") is None else float(data["noise_dbm"]),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{where}: {e}") from e

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "angle_deg": self.angle_deg,
            "pathloss_db": self.pathloss_db,
            "distance_m": self.distance_m,
        }
        if self.eavesdropper:
            out["eavesdropper"] = True
        if self.noise_dbm is not None:
            out["noise_dbm"] = self.noise_dbm
        return out

    def to_target(self) -> Target:
        noise = None if self.noise_dbm is None else dbm_to_watts(self.noise_dbm)
        return Target(
            angle=float(np.deg2rad(self.angle_deg)),
            distance=self.distance_m,
            reference_pathloss=pathloss_db_to_linear(self.pathloss_db),
            is_eavesdropper=self.eavesdropper,
            noise_power=noise,
        )


# ============================================================================
# SCENARIO
# ============================================================================


@dataclass(frozen=True)
class ScenarioConfig:
    """
    A validated scenario.

    search/solver hold only the overrides given in the file (lower-case keys
    of SearchConfig/SolverConfig); the defaults come from config.settings.
    """

    n_antennas: int
    power_budget_dbm: float
    cu: TargetSpec
    targets: tuple[TargetSpec, ...]
    name: str = "scenario"
    antenna_spacing_ratio: float = 0.5
    design: str = "optimal"
    secrecy_rate_bpshz: float = 0.0
    beam_width_deg: float = 5.0
    n_samples: int = 201
    search: tuple[tuple[str, Any], ...] = ()
    solver: tuple[tuple[str, Any], ...] = ()
    threads: Optional[int] = None
    output_dir: str = "results"
    sweep_bpshz: tuple[float, ...] = DEFAULT_SWEEP

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "sweep_bpshz", tuple(float(x) for x in self.sweep_bpshz))
        if self.n_antennas < 2:
            raise ConfigError(f"n_antennas must be at least 2, got {self.n_antennas}")
        if not self.antenna_spacing_ratio > 0:
            raise ConfigError("antenna_spacing_ratio must be positive")
        if self.cu.noise_dbm is None:
            raise ConfigError("cu needs noise_dbm")
        if not self.targets:
            raise ConfigError("targets must not be empty")
        if not any(t.eavesdropper for t in self.targets):
            raise ConfigError("at least one target must be an eavesdropper")
        if self.design not in DESIGN_CHOICES:
            raise ConfigError(f"design must be one of {list(DESIGN_CHOICES)}, got {self.design!r}")
        if self.secrecy_rate_bpshz < 0:
            raise ConfigError("secrecy_rate_bpshz must be non-negative")
        if not 0 < self.beam_width_deg <= 180:
            raise ConfigError(f"beam_width_deg must lie in (0, 180], got {self.beam_width_deg}")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be at least 1")
        sweep = self.sweep_bpshz
        if not sweep:
            raise ConfigError("sweep_bpshz must not be empty")
        if any(b < a for a, b in zip(sweep, sweep[1:])):
            raise ConfigError("sweep_bpshz must be sorted ascending")
        if sweep[0] < 0:
            raise ConfigError("sweep_bpshz values must be non-negative")
        # Fail early on bad overrides.
        self.solver_config()
        self.search_config()

    # ------------------------------------------------------------------
    # Loading
    # ------------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Any) -> "ScenarioConfig":
        data = _check_keys(data, _field_names(cls), "scenario")
        cu = TargetSpec.from_dict(_require(data, "cu", "scenario"), "cu")
        raw_targets = _require(data, "targets", "scenario")
        if not isinstance(raw_targets, list):
            raise ConfigError("targets must be a JSON list")
        targets = tuple(
            TargetSpec.from_dict(t, f"targets[{i}]") for i, t in enumerate(raw_targets)
        )
        search_keys = {f.name.lower() for f in fields(SearchConfig)}
        solver_keys = {f.name.lower() for f in fields(SolverConfig)}
        search = _check_keys(data.get("search", {}), search_keys, "search")
        solver = _check_keys(data.get("solver", {}), solver_keys, "solver")
        try:
            return cls(
                name=str(data.get("name", "scenario")),
                n_antennas=int(_require(data, "n_antennas", "scenario")),
                antenna_spacing_ratio=float(data.get("antenna_spacing_ratio", 0.5)),
                power_budget_dbm=float(_require(data, "power_budget_dbm", "scenario")),
                cu=cu,
                targets=targets,
                design=str(data.get("design", "optimal")),
                secrecy_rate_bpshz=float(data.get("secrecy_rate_bpshz", 0.0)),
                beam_width_deg=float(data.get("beam_width_deg", 5.0)),
                n_samples=int(data.get("n_samples", 201)),
                search=tuple(sorted(search.items())),
                solver=tuple(sorted(solver.items())),
                threads=None if data.get("threads") is None else int(data["threads"]),
                output_dir=str(data.get("output_dir", "results")),
                sweep_bpshz=tuple(data.get("sweep_bpshz", DEFAULT_SWEEP)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"scenario: {e}") from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScenarioConfig":
        """Read and validate a scenario file."""
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"scenario file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
        config = cls.from_dict(data)
        logger.info(f"Scenario loaded: {path} ({config.name}, design={config.design})")
        return config

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n_antennas": self.n_antennas,
            "antenna_spacing_ratio": self.antenna_spacing_ratio,
            "power_budget_dbm": self.power_budget_dbm,
            "cu": self.cu.to_dict(),
            "targets": [t.to_dict() for t in self.targets],
            "design": self.design,
            "secrecy_rate_bpshz": self.secrecy_rate_bpshz,
            "beam_width_deg": self.beam_width_deg,
            "n_samples": self.n_samples,
            "search": dict(self.search),
            "solver": dict(self.solver),
            "threads": self.threads,
            "output_dir": self.output_dir,
            "sweep_bpshz": list(self.sweep_bpshz),
        }

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    # ------------------------------------------------------------------
    # Conversion
    # ------------------------------------------------------------------

    def to_scene(self) -> Scene:
        """Scene in SI units; DomainError from the model becomes ConfigError."""
        try:
            return Scene.with_los_cu(
                n_antennas=self.n_antennas,
                antenna_spacing_ratio=self.antenna_spacing_ratio,
                targets=[t.to_target() for t in self.targets],
                cu=self.cu.to_target(),
                power_budget=dbm_to_watts(self.power_budget_dbm),
            )
        except DomainError as e:
            raise ConfigError(f"invalid scene: {e}") from e

    def sample_grid(self, scene: Scene) -> SampleGrid:
        try:
            return desired_beampattern(scene, float(np.deg2rad(self.beam_width_deg)), self.n_samples)
        except DomainError as e:
            raise ConfigError(f"invalid sample grid: {e}") from e

    def solver_config(self) -> SolverConfig:
        try:
            return with_overrides(SOLVER, **dict(self.solver))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"solver: {e}") from e

    def search_config(self) -> SearchConfig:
        try:
            return with_overrides(SEARCH, **dict(self.search))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"search: {e}") from e

    def design_settings(self) -> DesignSettings:
        """DesignSettings with this scenario's overrides."""
        return DesignSettings(
            solver=self.solver_config(),
            search=self.search_config(),
            extraction=EXTRACTION,
            threads=self.threads or PARALLEL.THREADS,
        )


# ============================================================================
# BENCHMARK SCENE
# ============================================================================


def benchmark_scenario(
    cu_angle_deg: float = 0.0,
    r0: float = 3.0,
    design: str = "optimal",
    output_dir: str = "results",
) -> ScenarioConfig:
    """
    Desk-scale benchmark: N = 8, eight targets, eavesdroppers at +-30 deg,
    -60 dBm noise everywhere, -70 dB path loss, Q = 20 dBm, M = 201, 5 deg beams.
    """
    targets = tuple(
        TargetSpec(
            angle_deg=angle,
            pathloss_db=-70.0,
            eavesdropper=angle in BENCHMARK_EAVESDROPPER_ANGLES_DEG,
            noise_dbm=-60.0 if angle in BENCHMARK_EAVESDROPPER_ANGLES_DEG else None,
        )
        for angle in BENCHMARK_TARGET_ANGLES_DEG
    )
    return ScenarioConfig(
        name=f"benchmark_cu{cu_angle_deg:g}",
        n_antennas=8,
        antenna_spacing_ratio=0.5,
        power_budget_dbm=20.0,
        cu=TargetSpec(angle_deg=cu_angle_deg, pathloss_db=-70.0, noise_dbm=-60.0),
        targets=targets,
        design=design,
        secrecy_rate_bpshz=r0,
        beam_width_deg=5.0,
        n_samples=201,
        output_dir=output_dir,
    )


__all__ = [
    "DESIGN_CHOICES",
    "DEFAULT_SWEEP",
    "TargetSpec",
    "ScenarioConfig",
    "benchmark_scenario",
]
