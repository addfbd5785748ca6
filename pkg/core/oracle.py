"""
Independent verifiers.

- brute_force_p1: exhaustive search over a discretised (w0, S, power split)
  set for N <= 3; an upper bound on the true optimum
- fuzz_proposition1: random relaxed points through the rank-one construction,
  with every guarantee measured
- analytic_cases / check_analytic_case: closed-form fixtures

Brute force never builds per-candidate beampatterns. Gains are linear in the
covariance, and with the least-squares eta the matching error of
R = q u u^H + (Q - q) Sigma is

    || P (q G_u + (Q - q) G_Sigma) ||^2,    P = I - d d^T / |D|

so per power split it is q^2 A_u + (Q - q)^2 B_Sigma + 2 q (Q - q) C_{u,Sigma}
with A, B and C precomputed once.
"""

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from config import EXTRACTION
from core import conic, designs
from core.designs import DEFAULT_SETTINGS, DesignSettings
from core.errors import CandidateBudgetError, ConfigError, DomainError, ExtractionError
from core.logging import get_logger, log_performance
from core.model import (
    BeamDesign,
    SampleGrid,
    Scene,
    Target,
    desired_beampattern,
    optimal_scale,
    steering_vector,
)

logger = get_logger(__name__)

CANDIDATE_BUDGET = 10**7


# ============================================================================
# BRUTE FORCE
# ============================================================================


@dataclass(frozen=True)
class BruteForceConfig:
    """
    Discretisation of the brute-force search.

    Attributes:
        n_antennas: 2 or 3
        discretization: Points per real dimension of the beam and eigenbasis grids
        power_levels: Fractions of Q given to the information beam
        restrict_real: Real-valued beams and covariances (required for N = 3)
        slack: delta; candidates count as feasible at R0 - delta
        max_candidates: Enumeration budget
    """

    n_antennas: int = 2
    discretization: int = 64
    power_levels: tuple[float, ...] = tuple(np.linspace(0.0, 1.0, 32))
    restrict_real: bool = True
    slack: float = 0.0
    max_candidates: int = CANDIDATE_BUDGET

    def __post_init__(self):
        if self.n_antennas not in (2, 3):
            raise ConfigError(f"brute force supports N = 2 or 3, got {self.n_antennas}")
        if self.n_antennas == 3 and not self.restrict_real:
            raise ConfigError("N = 3 brute force requires restrict_real")
        if self.discretization < 2:
            raise ConfigError("discretization must be at least 2")
        if not self.power_levels or any(not 0.0 <= f <= 1.0 for f in self.power_levels):
            raise ConfigError("power levels are fractions of the budget in [0, 1]")
        if self.slack < 0:
            raise ConfigError("slack must be non-negative")
        count = self.n_candidates
        if count > self.max_candidates:
            raise CandidateBudgetError(
                f"{count} candidates exceed the budget of {self.max_candidates}"
            )

    @property
    def n_beams(self) -> int:
        d = self.discretization
        return d if (self.n_antennas == 2 and self.restrict_real) else d * d

    @property
    def n_shapes(self) -> int:
        d = self.discretization
        if self.n_antennas == 2:
            return d * d if self.restrict_real else d * d * d
        return d**3 * (d * (d + 1) // 2)

    @property
    def n_candidates(self) -> int:
        return self.n_beams * self.n_shapes * len(self.power_levels)


@dataclass(frozen=True, eq=False)
class OracleResult:
    feasible: bool
    matching_error: float
    design: Optional[BeamDesign]
    slack: float
    n_candidates: int


def _beam_directions(cfg: BruteForceConfig) -> np.ndarray:
    """Unit beams u (rows), one per global phase class."""
    d = cfg.discretization
    if cfg.n_antennas == 2 and cfg.restrict_real:
        phi = np.linspace(0.0, np.pi, d, endpoint=False)
        return np.stack([np.cos(phi), np.sin(phi)], axis=1).astype(complex)
    if cfg.n_antennas == 2:
        chi = np.linspace(0.0, np.pi / 2, d)
        nu = np.linspace(0.0, 2 * np.pi, d, endpoint=False)
        c, n = np.meshgrid(chi, nu, indexing="ij")
        return np.stack([np.cos(c), np.sin(c) * np.exp(1j * n)], axis=-1).reshape(-1, 2)
    theta = np.linspace(0.0, np.pi, d)
    phi = np.linspace(0.0, np.pi, d, endpoint=False)
    t, p = np.meshgrid(theta, phi, indexing="ij")
    beams = np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)
    return beams.reshape(-1, 3).astype(complex)


def _rotation_3d(a: float, b: float, c: float) -> np.ndarray:
    def rz(x):
        return np.array([[np.cos(x), -np.sin(x), 0], [np.sin(x), np.cos(x), 0], [0, 0, 1]])

    ry = np.array([[np.cos(b), 0, np.sin(b)], [0, 1, 0], [-np.sin(b), 0, np.cos(b)]])
    return rz(a) @ ry @ rz(c)


def _covariance_shapes(cfg: BruteForceConfig) -> np.ndarray:
    """Unit-trace PSD matrices U diag(lambda) U^H, shape (n_shapes, N, N)."""
    d = cfg.discretization
    weights = np.linspace(0.0, 1.0, d)
    shapes = []
    if cfg.n_antennas == 2:
        if cfg.restrict_real:
            bases = []
            for alpha in np.linspace(0.0, np.pi, d, endpoint=False):
                c, s = np.cos(alpha), np.sin(alpha)
                bases.append(np.array([[c, -s], [s, c]]))
        else:
            bases = []
            for alpha in np.linspace(0.0, np.pi / 2, d):
                for nu in np.linspace(0.0, 2 * np.pi, d, endpoint=False):
                    bases.append(
                        np.array(
                            [
                                [np.cos(alpha), -np.sin(alpha) * np.exp(-1j * nu)],
                                [np.sin(alpha) * np.exp(1j * nu), np.cos(alpha)],
                            ]
                        )
                    )
        for basis, s in itertools.product(bases, weights):
            shapes.append((basis * np.array([s, 1.0 - s])) @ basis.conj().T)
        return np.array(shapes, dtype=complex)

    angles = np.linspace(0.0, np.pi, d, endpoint=False)
    simplex = [
        np.array([i, j, d - 1 - i - j]) / (d - 1)
        for i in range(d)
        for j in range(d - i)
    ]
    for a, b, c in itertools.product(angles, repeat=3):
        basis = _rotation_3d(a, b, c)
        for lam in simplex:
            shapes.append((basis * lam) @ basis.T)
    return np.array(shapes, dtype=complex)


def _beam_forms(channels: np.ndarray, beams: np.ndarray) -> np.ndarray:
    """|c^H u|^2 per (channel, beam), shape (K, n_beams)."""
    return np.abs(channels.conj() @ beams.T) ** 2


def _shape_forms(channels: np.ndarray, shapes: np.ndarray) -> np.ndarray:
    """c^H Sigma c per (channel, shape), shape (K, n_shapes)."""
    return np.real(np.einsum("ki,sij,kj->ks", channels.conj(), shapes, channels))


def _unit_gains(steering: np.ndarray, beams: np.ndarray, shapes: np.ndarray):
    """Unit-power beampatterns, shapes (n_beams, M) and (n_shapes, M)."""
    return _beam_forms(steering, beams).T, _shape_forms(steering, shapes).T


def brute_force_p1(
    scene: Scene, grid: SampleGrid, r0: float, cfg: Optional[BruteForceConfig] = None
) -> OracleResult:
    """
    Least matching error over the discretised candidate set meeting R0 - slack.

    Returns an infeasible OracleResult (error +inf, no design) when no
    candidate meets the threshold. Among equal errors the first candidate in
    (power level, beam, shape) order wins.
    """
    cfg = cfg or BruteForceConfig(n_antennas=scene.n_antennas)
    if cfg.n_antennas != scene.n_antennas:
        raise ConfigError(
            f"config is for N = {cfg.n_antennas}, scene has N = {scene.n_antennas}"
        )
    if grid.n_desired == 0:
        raise DomainError("brute force needs at least one desired sample")

    beams = _beam_directions(cfg)
    shapes = _covariance_shapes(cfg)
    q = scene.power_budget

    # Gains per unit power, projected onto the complement of the desired pattern.
    d = grid.desired
    proj = np.eye(grid.n_samples) - np.outer(d, d) / d.sum()
    unit_beams, unit_shapes = _unit_gains(grid.steering(scene), beams, shapes)
    gu = proj @ unit_beams.T
    gs = proj @ unit_shapes.T
    a_u = np.sum(gu * gu, axis=0)
    b_s = np.sum(gs * gs, axis=0)
    c_us = gu.T @ gs

    g = scene.cu_channel[None, :]
    h = scene.eavesdropper_channels
    cu_u = _beam_forms(g, beams)[0]
    cu_s = _shape_forms(g, shapes)[0]
    eve_u = _beam_forms(h, beams)
    eve_s = _shape_forms(h, shapes)
    noise = scene.eavesdropper_noise[:, None, None]

    best_err, best = np.inf, None
    with log_performance("brute_force", n_candidates=cfg.n_candidates):
        for level in cfg.power_levels:
            p_info, p_sense = level * q, (1.0 - level) * q
            gamma_cu = p_info * cu_u[:, None] / (p_sense * cu_s[None, :] + scene.cu_noise_power)
            gamma_eve = p_info * eve_u[:, :, None] / (p_sense * eve_s[:, None, :] + noise)
            rate = np.log2(1.0 + gamma_cu) - np.log2(1.0 + gamma_eve.max(axis=0))
            feasible = np.maximum(rate, 0.0) >= r0 - cfg.slack
            if not feasible.any():
                continue
            err = (
                p_info**2 * a_u[:, None]
                + p_sense**2 * b_s[None, :]
                + 2.0 * p_info * p_sense * c_us
            )
            err = np.where(feasible, err, np.inf)
            flat = int(np.argmin(err))
            if err.flat[flat] < best_err:
                best_err = float(err.flat[flat])
                best = (level, *np.unravel_index(flat, err.shape))

    if best is None:
        return OracleResult(False, float("inf"), None, cfg.slack, cfg.n_candidates)

    level, i, j = best
    w0 = np.sqrt(level * q) * beams[i]
    cov_s = (1.0 - level) * q * shapes[j]
    total = cov_s + np.outer(w0, w0.conj())
    design = BeamDesign(info_beam=w0, sensing_cov=cov_s, scale=optimal_scale(total, grid, scene))
    return OracleResult(True, max(best_err, 0.0), design, cfg.slack, cfg.n_candidates)


# ============================================================================
# EXTRACTION FUZZING
# ============================================================================


@dataclass
class FuzzReport:
    """
    Outcome of fuzz_proposition1.

    `worst` holds the largest violation/tolerance ratio seen per clause; a
    ratio above 1 is a failure and lands in `failures` with its inputs.
    """

    n_antennas: int
    n_trials: int
    seed: int
    n_general: int = 0
    n_rank_one: int = 0
    n_degenerate: int = 0
    worst: dict[str, float] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def failed_clauses(self) -> list[str]:
        return sorted({f["clause"] for f in self.failures})

    def raise_for_violations(self) -> None:
        if self.failures:
            first = self.failures[0]
            raise ExtractionError(
                first["clause"],
                f"{len(self.failures)} violations in {self.n_trials} trials; first at trial "
                f"{first['trial']} (ratio {first['ratio']:.3g})",
                details={"ratio": first["ratio"]},
            )


def _random_psd(rng: np.random.Generator, n: int, rank: int) -> np.ndarray:
    factor = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return factor @ factor.conj().T


def _random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def fuzz_proposition1(
    n_antennas: int,
    n_trials: int,
    seed: int,
    n_eavesdroppers: int = 2,
    settings=EXTRACTION,
    max_failures: int = 20,
) -> FuzzReport:
    """
    Random (W, S, g, h_k) through the rank-one construction.

    Draw mix: every tenth trial a rank-one W (the construction must return it
    unchanged up to phase), every tenth+1 a W with g^H W g = 0 (degenerate
    path, w0 = 0), the rest general full- or low-rank draws. Inputs are
    scaled to unit total trace.
    """
    if n_trials < 1:
        raise DomainError("n_trials must be at least 1")
    if n_antennas < 1:
        raise DomainError("n_antennas must be at least 1")
    rng = np.random.default_rng(seed)
    report = FuzzReport(n_antennas=n_antennas, n_trials=n_trials, seed=seed)
    report.worst = {clause: 0.0 for clause in designs.EXTRACTION_CLAUSES}
    report.worst["rank_one_identity"] = 0.0

    def record(trial: int, clause: str, ratio: float, inputs: dict) -> None:
        report.worst[clause] = max(report.worst.get(clause, 0.0), ratio)
        if ratio > 1.0 and len(report.failures) < max_failures:
            report.failures.append({"trial": trial, "clause": clause, "ratio": ratio, **inputs})

    for trial in range(n_trials):
        n = n_antennas
        g = _random_complex(rng, n)
        eves = np.array([_random_complex(rng, n) for _ in range(n_eavesdroppers)])
        kind = trial % 10
        if kind == 0:
            w_tilde = _random_psd(rng, n, 1)
            report.n_rank_one += 1
        elif kind == 1 and n > 1:
            proj = np.eye(n) - np.outer(g, g.conj()) / np.real(np.vdot(g, g))
            w_tilde = proj @ _random_psd(rng, n, n) @ proj
            report.n_degenerate += 1
        else:
            w_tilde = _random_psd(rng, n, int(rng.integers(1, n + 1)))
            report.n_general += 1
        s_tilde = _random_psd(rng, n, int(rng.integers(1, n + 1)))
        total = np.real(np.trace(w_tilde + s_tilde))
        w_tilde, s_tilde = w_tilde / total, s_tilde / total
        inputs = {"w_tilde": w_tilde, "s_tilde": s_tilde, "g": g, "eve_channels": eves}

        if kind == 1 and n > 1:
            try:
                design = designs.rank_one_extract(
                    w_tilde, s_tilde, 1.0, g, eves, allow_degenerate=True, settings=settings
                )
            except ExtractionError as exc:
                record(trial, exc.clause, exc.details.get(exc.clause, float("inf")), inputs)
                continue
            w_star, s_star = design.info_cov, design.sensing_cov
        else:
            _, w_star, s_star = designs.construct_rank_one(w_tilde, s_tilde, g)

        ratios = designs.extraction_violations(
            w_tilde, s_tilde, w_star, s_star, g, eves, settings=settings
        )
        for clause, ratio in ratios.items():
            record(trial, clause, ratio, inputs)

        if kind == 0:
            drift = float(np.max(np.abs(w_star - w_tilde)))
            tolerance = settings.SUM_TOL * max(1.0, float(np.real(np.trace(w_tilde))))
            record(trial, "rank_one_identity", drift / tolerance, inputs)

    logger.info(
        f"fuzz N={n_antennas}: {n_trials} trials, {len(report.failures)} failures, "
        f"worst={max(report.worst.values()):.3g}"
    )
    return report


# ============================================================================
# ANALYTIC CASES
# ============================================================================


@dataclass(frozen=True, eq=False)
class AnalyticCase:
    """
    A closed-form fixture.

    Attributes:
        case_id: Identifier
        derivation: How the expected values follow
        scene: Scene the case runs on (None when only matrices are involved)
        inputs: Extra inputs (R0, random matrices, ...)
        expected: Expected values by name
    """

    case_id: str
    derivation: str
    scene: Optional[Scene]
    inputs: dict
    expected: dict


@dataclass(frozen=True)
class CaseCheck:
    case_id: str
    quantity: str
    expected: float
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.measured - self.expected) <= self.tolerance


def _orthogonal_scene() -> Scene:
    """N = 2, eavesdropper at broadside (h = [1, 1]), CU channel [1, -1]; unit gains and noise."""
    eve = Target(
        angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=1.0
    )
    return Scene(
        n_antennas=2,
        antenna_spacing_ratio=0.5,
        targets=(eve,),
        cu_channel=steering_vector(np.pi / 2, 2, 0.5),
        cu_noise_power=1.0,
        power_budget=1.0,
    )


def _case_orthogonal_zf() -> AnalyticCase:
    scene = _orthogonal_scene()
    g2 = float(np.real(np.vdot(scene.cu_channel, scene.cu_channel)))
    return AnalyticCase(
        case_id="orthogonal_zf",
        derivation=(
            "g is orthogonal to the only eavesdropper, so all power on g leaks nothing: "
            "R* = log2(1 + Q ||g||^2 / sigma_0^2) and the ZF beam is parallel to g."
        ),
        scene=scene,
        inputs={},
        expected={
            "max_rate": float(np.log2(1.0 + scene.power_budget * g2 / scene.cu_noise_power)),
            "eve_sinr_zf": 0.0,
        },
    )


def _case_p6_orthogonal() -> AnalyticCase:
    scene = _orthogonal_scene()
    r0 = 1.0
    g2 = float(np.real(np.vdot(scene.cu_channel, scene.cu_channel)))
    return AnalyticCase(
        case_id="p6_orthogonal",
        derivation=(
            "With g orthogonal to h the only active constraint is |g^H w|^2 / sigma_0^2 >= 2^R0 - 1, "
            "met with least power by w along g: ||w||^2 = sigma_0^2 (2^R0 - 1) / ||g||^2."
        ),
        scene=scene,
        inputs={"r0": r0},
        expected={"info_power": scene.cu_noise_power * (2.0**r0 - 1.0) / g2},
    )


def _case_projector_null() -> AnalyticCase:
    rng = np.random.default_rng(7)
    n = 4
    g = _random_complex(rng, n)
    s_bar = _random_psd(rng, n, n)
    return AnalyticCase(
        case_id="projector_null",
        derivation="Q2 g = 0 for Q2 = I - g g^H / ||g||^2, so g^H Q2 S Q2^H g = 0 for every S.",
        scene=None,
        inputs={"g": g, "s_bar": s_bar},
        expected={"cu_leakage": 0.0},
    )


ANALYTIC_CASES = {
    "orthogonal_zf": _case_orthogonal_zf,
    "p6_orthogonal": _case_p6_orthogonal,
    "projector_null": _case_projector_null,
}


def analytic_cases(case_id: str) -> AnalyticCase:
    """Closed-form fixture by id; see ANALYTIC_CASES for the known ids."""
    try:
        return ANALYTIC_CASES[case_id]()
    except KeyError:
        raise DomainError(
            f"unknown analytic case {case_id!r}; known: {sorted(ANALYTIC_CASES)}"
        ) from None


def check_analytic_case(case_id: str, settings: DesignSettings = DEFAULT_SETTINGS) -> list[CaseCheck]:
    """Run the library on a fixture and compare with its expected values."""
    case = analytic_cases(case_id)
    checks = []
    if case_id == "orthogonal_zf":
        scene = case.scene
        rate = designs.max_secrecy_rate(scene, settings)
        checks.append(CaseCheck(case_id, "max_rate", case.expected["max_rate"], rate, 1e-3))
        grid = desired_beampattern(scene, np.deg2rad(10.0), 37)
        report = designs.solve_zf(scene, grid, 0.5 * case.expected["max_rate"], settings)
        checks.append(CaseCheck(case_id, "eve_sinr_zf", 0.0, report.max_eve_sinr, 1e-12))
    elif case_id == "p6_orthogonal":
        scene, r0 = case.scene, case.inputs["r0"]
        result = conic.solve(conic.build_p6_sdr(scene, r0, scene.power_budget), settings.solver)
        expected = case.expected["info_power"]
        measured = result.objective if result.is_optimal else float("nan")
        checks.append(CaseCheck(case_id, "info_power", expected, measured, 1e-6 * (1.0 + expected)))
    else:
        g, s_bar = case.inputs["g"], case.inputs["s_bar"]
        proj = conic.cu_projector(g)
        leak = float(np.real(np.vdot(g, proj @ s_bar @ proj.conj().T @ g)))
        scale = float(np.real(np.vdot(g, g) * np.trace(s_bar)))
        checks.append(CaseCheck(case_id, "cu_leakage", 0.0, leak, 1e-12 * scale))
    return checks


# ============================================================================
# ORACLE SANDWICH
# ============================================================================

# The discretised search may exceed the exact optimum by this factor.
SANDWICH_RTOL = 0.02


@dataclass(frozen=True, eq=False)
class SandwichFixture:
    """N = 2 scene with one eavesdropper at broadside and a real CU channel."""

    fixture_id: str
    scene: Scene
    grid: SampleGrid
    r0: float


@dataclass(frozen=True)
class SandwichCheck:
    fixture_id: str
    sdr_error: float
    oracle_error: float
    rtol: float = SANDWICH_RTOL

    @property
    def lower_ok(self) -> bool:
        return self.oracle_error >= self.sdr_error * (1.0 - 1e-6) - 1e-12

    @property
    def upper_ok(self) -> bool:
        return self.oracle_error <= self.sdr_error * (1.0 + self.rtol) + 1e-12

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok


_SANDWICH_CHANNELS = {
    "tilted": ((1.0, 0.2), 0.5),
    "mixed": ((0.8, -0.5), 1.0),
    "antipodal": ((0.7, -0.7), 1.5),
    "single_element": ((1.2, 0.0), 0.3),
    "weak": ((0.5, 1.0), 0.8),
}


def sandwich_fixtures() -> list[SandwichFixture]:
    """
    Fixtures on which real-valued brute force is exact up to discretisation.

    Every channel is real and the desired pattern is symmetric about
    broadside, so conjugating a design mirrors its beampattern without
    changing any constraint; the real part of an optimum is again optimal.
    Each R0 stays below the zero-forcing rate, so all fixtures are feasible.
    """
    eve = Target(
        angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=0.1
    )
    out = []
    for fixture_id, (g, r0) in _SANDWICH_CHANNELS.items():
        scene = Scene(
            n_antennas=2,
            antenna_spacing_ratio=0.5,
            targets=(eve,),
            cu_channel=np.array(g, dtype=complex),
            cu_noise_power=0.1,
            power_budget=1.0,
        )
        grid = desired_beampattern(scene, np.deg2rad(20.0), 61)
        out.append(SandwichFixture(fixture_id, scene, grid, r0))
    return out


def check_sandwich(
    fixture: SandwichFixture,
    settings: DesignSettings = DEFAULT_SETTINGS,
    cfg: Optional[BruteForceConfig] = None,
) -> SandwichCheck:
    """Exact optimum vs brute force (default 64 points per dimension) on one fixture."""
    sdr = designs.solve_optimal(fixture.scene, fixture.grid, fixture.r0, settings)
    oracle = brute_force_p1(fixture.scene, fixture.grid, fixture.r0, cfg)
    check = SandwichCheck(fixture.fixture_id, sdr.matching_error, oracle.matching_error)
    logger.info(
        f"sandwich {fixture.fixture_id}: sdr={check.sdr_error:.6g} "
        f"oracle={check.oracle_error:.6g} passed={check.passed}"
    )
    return check


__all__ = [
    "CANDIDATE_BUDGET",
    "BruteForceConfig",
    "OracleResult",
    "brute_force_p1",
    "FuzzReport",
    "fuzz_proposition1",
    "AnalyticCase",
    "CaseCheck",
    "ANALYTIC_CASES",
    "analytic_cases",
    "check_analytic_case",
    "SANDWICH_RTOL",
    "SandwichFixture",
    "SandwichCheck",
    "sandwich_fixtures",
    "check_sandwich",
]
