"""
Beamforming designs.

    optimal       relaxation + 1D search over gamma_E + rank-one extraction
    zf            information beam in the null space of all eavesdroppers
    separate      AN-free power minimisation, then sensing with the CU projected out
    sensing_only  benchmark with w0 = 0 (matching-error lower bound)

plus the maximum achievable secrecy rate R*, which decides feasibility.

Every design comes back as a DesignReport whose metrics are recomputed from
the extracted (w0, S, eta) in core.model, never copied from solver output.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from config import EXTRACTION, PARALLEL, SEARCH, SOLVER
from config.settings import ExtractionConfig, SearchConfig, SolverConfig
from core import conic
from core.errors import (
    DimensionError,
    DomainError,
    ExtractionError,
    InfeasibleError,
    NumericalError,
    SearchRangeError,
)
from core.logging import get_logger, log_performance
from core.model import (
    BeamDesign,
    SampleGrid,
    Scene,
    beampattern,
    eavesdropper_sinrs,
    matching_error,
    project_psd,
    secrecy_rate_from_sinrs,
    sinr_cu,
)

logger = get_logger(__name__)

# A report is feasible when its recomputed secrecy rate is at least R0 - RATE_SLACK.
RATE_SLACK = 1e-6
# solve_optimal accepts R0 up to R* + FEASIBILITY_SLACK.
FEASIBILITY_SLACK = 1e-4
# Singular values below this fraction of the largest span no eavesdropper direction.
ZF_RANK_TOL = 1e-10
# Matching error of the extracted design vs the relaxed optimum.
OBJECTIVE_RTOL = 1e-6


@dataclass(frozen=True)
class DesignSettings:
    """Per-run knobs shared by all designs."""

    solver: SolverConfig = SOLVER
    search: SearchConfig = SEARCH
    extraction: ExtractionConfig = EXTRACTION
    threads: int = field(default_factory=lambda: PARALLEL.THREADS)


DEFAULT_SETTINGS = DesignSettings()


# ============================================================================
# RANK-ONE EXTRACTION
# ============================================================================


def _hermitian(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


def _qf(vector: np.ndarray, matrix: np.ndarray) -> float:
    return float(np.real(np.vdot(vector, matrix @ vector)))


def _trace(matrix: np.ndarray) -> float:
    return float(np.real(np.trace(matrix)))


def _ratio(excess: float, tolerance: float) -> float:
    if excess <= 0.0:
        return 0.0
    return excess / tolerance if tolerance > 0.0 else float("inf")


def construct_rank_one(
    w_tilde: np.ndarray, s_tilde: np.ndarray, g: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Raw rank-one construction.

        w0 = W g / sqrt(g^H W g),  W* = w0 w0^H,  S* = W + S - W*

    A CU that receives nothing from W (g^H W g == 0) gives w0 = 0 and
    S* = W + S.
    """
    wg = w_tilde @ g
    cu = float(np.real(np.vdot(g, wg)))
    if cu <= 0.0:
        w0 = np.zeros_like(wg)
    else:
        w0 = wg / np.sqrt(cu)
    w_star = np.outer(w0, w0.conj())
    return w0, w_star, w_tilde + s_tilde - w_star


EXTRACTION_CLAUSES = (
    "sum_preservation",
    "info_dominance",
    "sensing_dominance",
    "cu_preservation",
    "eavesdropper_leakage",
)


def extraction_violations(
    w_tilde: np.ndarray,
    s_tilde: np.ndarray,
    w_star: np.ndarray,
    s_star: np.ndarray,
    g: np.ndarray,
    eve_channels: Optional[np.ndarray] = None,
    settings: ExtractionConfig = EXTRACTION,
) -> dict[str, float]:
    """
    Measured violation / tolerance for each extraction guarantee.

    A value above 1 means the clause fails:
        sum_preservation      S* + W* == W + S
        info_dominance        W - W* is PSD
        sensing_dominance     S* - S is PSD
        cu_preservation       g^H W* g == g^H W g
        eavesdropper_leakage  h_k^H W* h_k <= h_k^H W h_k for every eavesdropper
    """
    tr_w = _trace(w_tilde)
    tr_total = tr_w + _trace(s_tilde)
    out: dict[str, float] = {}

    drift = float(np.max(np.abs(s_star + w_star - w_tilde - s_tilde), initial=0.0))
    out["sum_preservation"] = _ratio(drift, settings.SUM_TOL * max(1.0, tr_total))

    min_info = float(np.linalg.eigvalsh(_hermitian(w_tilde - w_star)).min())
    out["info_dominance"] = _ratio(-min_info, settings.PSD_TOL * max(tr_w, 1e-300))

    min_sense = float(np.linalg.eigvalsh(_hermitian(s_star - s_tilde)).min())
    out["sensing_dominance"] = _ratio(-min_sense, settings.PSD_TOL * max(tr_total, 1e-300))

    floor = settings.NULL_TOL * tr_w
    cu_before, cu_after = _qf(g, w_tilde), _qf(g, w_star)
    out["cu_preservation"] = _ratio(
        abs(cu_after - cu_before),
        settings.CU_TOL * cu_before + floor * float(np.real(np.vdot(g, g))),
    )

    worst = 0.0
    for h in np.atleast_2d(eve_channels) if eve_channels is not None else ():
        before, after = _qf(h, w_tilde), _qf(h, w_star)
        tolerance = settings.EVE_TOL * before + floor * float(np.real(np.vdot(h, h)))
        worst = max(worst, _ratio(after - before, tolerance))
    out["eavesdropper_leakage"] = worst
    return out


def check_extraction(*args, **kwargs) -> dict[str, float]:
    """extraction_violations, raising ExtractionError on the first failing clause."""
    ratios = extraction_violations(*args, **kwargs)
    for clause in EXTRACTION_CLAUSES:
        if ratios[clause] > 1.0:
            raise ExtractionError(
                clause,
                f"violation is {ratios[clause]:.3g}x its tolerance",
                details={k: float(v) for k, v in ratios.items()},
            )
    return ratios


def _check_psd_input(name: str, matrix: np.ndarray, scale: float, settings: ExtractionConfig):
    min_eig = float(np.linalg.eigvalsh(_hermitian(matrix)).min())
    if min_eig < -settings.PSD_TOL * max(scale, 1e-300):
        raise DomainError(f"{name} is not PSD (least eigenvalue {min_eig:.3e})")


def rank_one_extract(
    w_tilde: np.ndarray,
    s_tilde: np.ndarray,
    eta_tilde: float,
    g: np.ndarray,
    eve_channels: Optional[np.ndarray] = None,
    allow_degenerate: bool = False,
    settings: ExtractionConfig = EXTRACTION,
) -> BeamDesign:
    """
    Equivalent rank-one design from a relaxed point (W, S, eta).

    The construction keeps W + S, the CU quadratic form and eta, and never
    raises an eavesdropper quadratic form; all of it is checked here and a
    failed check raises ExtractionError naming the clause.

    Raises:
        DomainError: W or S not PSD within tolerance
        ExtractionError: g^H W g ~ 0 without allow_degenerate ("degenerate"),
            or a violated guarantee
    """
    w_tilde = np.asarray(w_tilde, dtype=complex)
    s_tilde = np.asarray(s_tilde, dtype=complex)
    g = np.asarray(g, dtype=complex).reshape(-1)
    scale = _trace(w_tilde) + _trace(s_tilde)
    _check_psd_input("W", w_tilde, scale, settings)
    _check_psd_input("S", s_tilde, scale, settings)
    w_tilde, s_tilde = project_psd(w_tilde), project_psd(s_tilde)

    cu = _qf(g, w_tilde)
    null_level = settings.NULL_TOL * float(np.real(np.vdot(g, g))) * _trace(w_tilde)
    degenerate = cu <= null_level
    if degenerate and not allow_degenerate:
        raise ExtractionError(
            "degenerate",
            f"CU receives no information power (g^H W g = {cu:.3e})",
            details={"cu_quadratic_form": cu},
        )

    if degenerate:
        n = g.shape[0]
        w0, w_star = np.zeros(n, dtype=complex), np.zeros((n, n), dtype=complex)
        s_star = w_tilde + s_tilde
    else:
        w0, w_star, s_star = construct_rank_one(w_tilde, s_tilde, g)

    check_extraction(w_tilde, s_tilde, w_star, s_star, g, eve_channels, settings)
    return BeamDesign(info_beam=w0, sensing_cov=_hermitian(s_star), scale=float(eta_tilde))


# ============================================================================
# REPORTS
# ============================================================================


@dataclass(frozen=True, eq=False)
class OuterSearchTrace:
    """
    Every gamma_E evaluated by a grid-then-refine search, in increasing order.

    `values` holds the objective at each point (+inf for an infeasible point
    when minimising, -inf when maximising). `interval` is the bracket of the
    last refinement round.
    """

    gammas: np.ndarray
    values: np.ndarray
    interval: tuple[float, float]
    gamma_star: Optional[float]
    maximize: bool = False

    @property
    def best_value(self) -> float:
        if self.gamma_star is None:
            return float("-inf") if self.maximize else float("inf")
        return float(self.values[np.searchsorted(self.gammas, self.gamma_star)])

    @property
    def n_feasible(self) -> int:
        return int(np.isfinite(self.values).sum())


@dataclass(frozen=True)
class SolverDiagnostics:
    n_solves: int
    wall_time_s: float
    status: str
    iterations: int = 0
    primal_residual: float = float("nan")
    duality_gap: float = float("nan")
    randomized: bool = False


@dataclass(frozen=True, eq=False)
class DesignReport:
    """A design with its metrics and decomposed beampattern on the sample grid."""

    design_name: str
    design: BeamDesign
    r0: float
    matching_error: float
    secrecy_rate: float
    cu_sinr: float
    eve_sinrs: tuple[float, ...]
    angles: np.ndarray
    desired: np.ndarray
    gain_total: np.ndarray
    gain_info: np.ndarray
    gain_sensing: np.ndarray
    diagnostics: SolverDiagnostics
    trace: Optional[OuterSearchTrace] = None
    gamma_e_star: Optional[float] = None

    @property
    def eta(self) -> float:
        return self.design.scale

    @property
    def power_info(self) -> float:
        return self.design.info_power

    @property
    def power_sense(self) -> float:
        return self.design.sensing_power

    @property
    def max_eve_sinr(self) -> float:
        return max(self.eve_sinrs)

    @property
    def sensing_rank(self) -> int:
        return self.design.sensing_rank


def _make_report(
    name: str,
    design: BeamDesign,
    scene: Scene,
    grid: SampleGrid,
    r0: float,
    diagnostics: SolverDiagnostics,
    settings: DesignSettings,
    trace: Optional[OuterSearchTrace] = None,
    gamma_e_star: Optional[float] = None,
) -> DesignReport:
    broken = design.invariant_violations(scene.power_budget, settings.extraction)
    if broken:
        raise NumericalError(f"{name} design violates {', '.join(broken)}")

    cu = sinr_cu(design, scene)
    eves = eavesdropper_sinrs(design, scene)
    rate = secrecy_rate_from_sinrs(cu, eves)
    if rate < r0 - RATE_SLACK:
        raise NumericalError(f"{name} design reaches {rate:.6f} bps/Hz, below R0 = {r0}")

    report = DesignReport(
        design_name=name,
        design=design,
        r0=r0,
        matching_error=matching_error(design, grid, scene),
        secrecy_rate=rate,
        cu_sinr=cu,
        eve_sinrs=tuple(float(x) for x in eves),
        angles=grid.angles,
        desired=grid.desired,
        gain_total=beampattern(design.total_cov, grid.angles, scene),
        gain_info=beampattern(design.info_cov, grid.angles, scene),
        gain_sensing=beampattern(design.sensing_cov, grid.angles, scene),
        diagnostics=diagnostics,
        trace=trace,
        gamma_e_star=gamma_e_star,
    )
    logger.info(
        f"{name}: error={report.matching_error:.6g} rate={rate:.4f} bps/Hz "
        f"solves={diagnostics.n_solves} time={diagnostics.wall_time_s:.2f}s"
    )
    return report


def _diagnostics(
    result: conic.SolverResult,
    n_solves: int,
    started: float,
    randomized: bool = False,
) -> SolverDiagnostics:
    return SolverDiagnostics(
        n_solves=n_solves,
        wall_time_s=time.perf_counter() - started,
        status=result.status.value,
        iterations=result.iterations,
        primal_residual=result.primal_residual,
        duality_gap=result.duality_gap,
        randomized=randomized,
    )


# ============================================================================
# 1D SEARCH
# ============================================================================


def parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Order-preserving map, threaded when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def gamma_range(scene: Scene, search: SearchConfig = SEARCH) -> tuple[float, float]:
    """(GAMMA_LO, max_k Q ||h_k||^2 / sigma_k^2): the SINR cap of any eavesdropper."""
    norms = np.sum(np.abs(scene.eavesdropper_channels) ** 2, axis=1)
    hi = float(np.max(scene.power_budget * norms / scene.eavesdropper_noise))
    lo = search.GAMMA_LO
    return lo, max(hi, 10.0 * lo)


def _incumbent(evaluated: dict[float, tuple[float, Any]], maximize: bool) -> Optional[float]:
    feasible = [(-v if maximize else v, g) for g, (v, _) in evaluated.items() if np.isfinite(v)]
    return min(feasible)[1] if feasible else None


def grid_refine_search(
    evaluate: Callable[[float], tuple[float, Any]],
    lo: float,
    hi: float,
    search: SearchConfig = SEARCH,
    threads: int = 1,
    extra_points: Sequence[float] = (),
    maximize: bool = False,
) -> tuple[OuterSearchTrace, dict[float, tuple[float, Any]]]:
    """
    Log grid of N_GRID points on (lo, hi] (lo itself is excluded, hi is
    the last point), then N_REFINE rounds of REFINE_POINTS linear points
    strictly between the incumbent's neighbours; `lo` stands in as the left
    neighbour of the first grid point.

    `evaluate(gamma)` returns (value, payload) with a non-finite value for an
    infeasible point. Ties go to the smallest gamma, so threaded and serial
    runs pick the same point.
    """
    evaluated: dict[float, tuple[float, Any]] = {}

    def run(points) -> None:
        fresh = sorted({float(p) for p in points} - set(evaluated))
        for point, outcome in zip(fresh, parallel_map(evaluate, fresh, threads)):
            evaluated[point] = outcome

    grid = np.geomspace(lo, hi, search.N_GRID + 1)[1:]
    run(list(grid) + [p for p in extra_points if lo < p <= hi])
    interval = (lo, hi)
    for _ in range(search.N_REFINE):
        best = _incumbent(evaluated, maximize)
        if best is None:
            break
        points = sorted(evaluated)
        i = points.index(best)
        left = points[i - 1] if i > 0 else lo
        interval = (left, points[min(i + 1, len(points) - 1)])
        run(np.linspace(interval[0], interval[1], search.REFINE_POINTS + 2)[1:-1])

    gammas = np.array(sorted(evaluated))
    trace = OuterSearchTrace(
        gammas=gammas,
        values=np.array([evaluated[g][0] for g in gammas], dtype=float),
        interval=interval,
        gamma_star=_incumbent(evaluated, maximize),
        maximize=maximize,
    )
    return trace, evaluated


# ============================================================================
# MAXIMUM SECRECY RATE
# ============================================================================


@dataclass(frozen=True, eq=False)
class RateSearchResult:
    """
    R* with the gamma_E that attains it.

    `design` is the rank-one design extracted from the maximiser (eta = 0);
    its secrecy rate is R*.
    """

    rate: float
    gamma_e: float
    beta: float
    trace: OuterSearchTrace
    n_solves: int
    design: Optional[BeamDesign] = None


def search_secrecy_rate(scene: Scene, settings: DesignSettings = DEFAULT_SETTINGS) -> RateSearchResult:
    """1D search over gamma_E of log2((1 + beta_max(gamma_E)) / (1 + gamma_E))."""

    def evaluate(gamma: float):
        result = conic.solve(conic.build_rate_subproblem(scene, gamma), settings.solver)
        if not result.is_optimal:
            return float("-inf"), result
        beta = max(result.objective, 0.0)
        return float(np.log2((1.0 + beta) / (1.0 + gamma))), result

    lo, hi = gamma_range(scene, settings.search)
    with log_performance("rate_search", n_antennas=scene.n_antennas):
        trace, evaluated = grid_refine_search(
            evaluate, lo, hi, settings.search, settings.threads, maximize=True
        )
    if trace.gamma_star is None:
        raise NumericalError("every secrecy-rate subproblem failed to solve")

    result = evaluated[trace.gamma_star][1]
    tau = result["tau"]
    design = rank_one_extract(
        result["W"] / tau,
        result["S"] / tau,
        0.0,
        scene.cu_channel,
        scene.eavesdropper_channels,
        allow_degenerate=True,
        settings=settings.extraction,
    )
    rate = max(trace.best_value, 0.0)
    logger.info(f"R* = {rate:.6f} bps/Hz at gamma_E = {trace.gamma_star:.4g}")
    return RateSearchResult(
        rate=rate,
        gamma_e=trace.gamma_star,
        beta=max(result.objective, 0.0),
        trace=trace,
        n_solves=len(evaluated),
        design=design,
    )


def max_secrecy_rate(scene: Scene, settings: DesignSettings = DEFAULT_SETTINGS) -> float:
    """R* in bps/Hz; problem P1 at threshold R0 is feasible iff R* >= R0."""
    return search_secrecy_rate(scene, settings).rate


# ============================================================================
# DESIGNS
# ============================================================================


def solve_optimal(
    scene: Scene,
    grid: SampleGrid,
    r0: float,
    settings: DesignSettings = DEFAULT_SETTINGS,
    max_rate: Optional[RateSearchResult] = None,
) -> DesignReport:
    """
    Globally optimal design.

    For each gamma_E the relaxation is solved exactly; the best gamma_E is
    found by grid_refine_search and the relaxed point is turned into a
    rank-one design with the same objective.

    Args:
        max_rate: Precomputed R* search (reused by sweeps)

    Raises:
        InfeasibleError: R0 > R* (carries R*)
        SearchRangeError: no gamma_E on the grid admits a feasible point
    """
    if r0 < 0:
        raise DomainError(f"secrecy rate threshold must be non-negative, got {r0}")
    started = time.perf_counter()
    n_solves = 0
    if r0 > 0 and max_rate is None:
        max_rate = search_secrecy_rate(scene, settings)
        n_solves += max_rate.n_solves
    if max_rate is not None and max_rate.rate < r0 - FEASIBILITY_SLACK:
        raise InfeasibleError(
            f"R0 = {r0} bps/Hz exceeds the maximum secrecy rate {max_rate.rate:.6f} bps/Hz",
            max_rate=max_rate.rate,
        )

    def evaluate(gamma: float):
        result = conic.solve(conic.build_sdr41(scene, grid, gamma, r0), settings.solver)
        if not result.is_optimal:
            return float("inf"), result
        return result["t"] ** 2, result

    lo, hi = gamma_range(scene, settings.search)
    extra = (max_rate.gamma_e,) if max_rate is not None else ()
    with log_performance("outer_search", design="optimal", r0=r0):
        trace, evaluated = grid_refine_search(
            evaluate, lo, hi, settings.search, settings.threads, extra_points=extra
        )
    n_solves += len(evaluated)
    if trace.gamma_star is None:
        raise SearchRangeError(
            f"no gamma_E in [{lo:.3g}, {hi:.3g}] admits R0 = {r0} bps/Hz",
            max_rate=None if max_rate is None else max_rate.rate,
        )

    result = evaluated[trace.gamma_star][1]
    design = rank_one_extract(
        result["W"],
        result["S"],
        result["eta"],
        scene.cu_channel,
        scene.eavesdropper_channels,
        allow_degenerate=(r0 == 0),
        settings=settings.extraction,
    )
    relaxed = trace.best_value
    extracted = matching_error(design, grid, scene)
    if abs(extracted - relaxed) > OBJECTIVE_RTOL * max(relaxed, 1e-12):
        logger.warning(
            f"extracted matching error {extracted:.9g} differs from relaxed {relaxed:.9g}"
        )
    return _make_report(
        "optimal",
        design,
        scene,
        grid,
        r0,
        _diagnostics(result, n_solves, started),
        settings,
        trace=trace,
        gamma_e_star=trace.gamma_star,
    )


def zf_nullspace(eve_channels: np.ndarray, rank_tol: float = ZF_RANK_TOL) -> np.ndarray:
    """
    Orthonormal basis V2 of the null space of H = [h_1, ..., h_KE]^H, shape (N, N - rank).

    Singular values below rank_tol * sigma_max count as zero, so coincident
    eavesdroppers enlarge the null space.
    """
    h = np.atleast_2d(np.asarray(eve_channels, dtype=complex)).conj()
    return null_space(h, rcond=rank_tol)


def solve_zf(
    scene: Scene, grid: SampleGrid, r0: float, settings: DesignSettings = DEFAULT_SETTINGS
) -> DesignReport:
    """
    Zero-forcing design: w0 = sqrt(Q0) V2 V2^H g / ||V2^H g||.

    Raises:
        DimensionError: N <= K_E
        InfeasibleError: R0 above the zero-forcing rate log2(1 + Q ||V2^H g||^2 / sigma_0^2)
    """
    if r0 < 0:
        raise DomainError(f"secrecy rate threshold must be non-negative, got {r0}")
    n_eve = len(scene.eavesdropper_indices)
    if scene.n_antennas <= n_eve:
        raise DimensionError(
            f"zero-forcing needs N > K_E (N = {scene.n_antennas}, K_E = {n_eve})"
        )
    started = time.perf_counter()
    v2 = zf_nullspace(scene.eavesdropper_channels)
    g = scene.cu_channel
    coords = v2.conj().T @ g
    gain = float(np.linalg.norm(coords))
    if gain <= ZF_RANK_TOL * float(np.linalg.norm(g)):
        direction = np.zeros_like(g)
    else:
        direction = v2 @ coords / gain
    zf_cap = float(np.log2(1.0 + scene.power_budget * gain**2 / scene.cu_noise_power))

    result = conic.solve(conic.build_p5(scene, grid, direction, r0), settings.solver)
    if result.status is conic.SolverStatus.INFEASIBLE:
        raise InfeasibleError(
            f"zero-forcing cannot reach R0 = {r0} bps/Hz (limit {zf_cap:.6f})", max_rate=zf_cap
        )
    if not result.is_optimal:
        raise NumericalError(f"zero-forcing subproblem ended with status {result.status.value}")

    q0 = min(max(result["q0"], 0.0), scene.power_budget)
    design = BeamDesign(
        info_beam=np.sqrt(q0) * direction,
        sensing_cov=project_psd(result["S"]),
        scale=result["eta"],
    )
    return _make_report("zf", design, scene, grid, r0, _diagnostics(result, 1, started), settings)


def min_power_along(direction: np.ndarray, scene: Scene, r0: float) -> float:
    """
    Least power p with sqrt(p) u meeting the AN-free secrecy constraint for
    every eavesdropper; +inf when u cannot meet it at any power.
    """
    if r0 == 0:
        return 0.0
    u = direction / np.linalg.norm(direction)
    g = scene.cu_channel / np.sqrt(scene.cu_noise_power)
    h = scene.eavesdropper_channels / np.sqrt(scene.eavesdropper_noise)[:, None]
    rate = 2.0**r0
    margins = abs(np.vdot(g, u)) ** 2 - rate * np.abs(h.conj() @ u) ** 2
    worst = float(np.min(margins))
    if worst <= 0.0:
        return float("inf")
    return (rate - 1.0) / worst


def _separate_info_beam(
    scene: Scene, r0: float, settings: DesignSettings
) -> tuple[np.ndarray, bool, Optional[conic.SolverResult]]:
    n = scene.n_antennas
    if r0 == 0:
        return np.zeros(n, dtype=complex), False, None

    q = scene.power_budget
    result = conic.solve(conic.build_p6_sdr(scene, r0, q), settings.solver)
    if result.status is conic.SolverStatus.INFEASIBLE:
        raise InfeasibleError(f"no AN-free beam reaches R0 = {r0} bps/Hz within {q:.4g} W")
    if not result.is_optimal:
        raise NumericalError(f"power minimisation ended with status {result.status.value}")

    w = project_psd(result["W"])
    eigvals, eigvecs = np.linalg.eigh(w)
    candidates = [eigvecs[:, -1]]
    cfg = settings.extraction
    randomized = eigvals[-2] > cfg.RANK_RATIO * eigvals[-1]
    if randomized:
        rng = np.random.default_rng(cfg.RANDOMIZATION_SEED)
        root = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
        draws = rng.standard_normal((n, cfg.RANDOMIZATION_SAMPLES)) + 1j * rng.standard_normal(
            (n, cfg.RANDOMIZATION_SAMPLES)
        )
        samples = root @ draws
        candidates += [samples[:, i] for i in range(samples.shape[1])]
        logger.info(f"power minimisation returned rank > 1; randomising {len(candidates)} beams")

    powers = [min_power_along(u, scene, r0) for u in candidates]
    best = int(np.argmin(powers))
    if not powers[best] <= q * (1.0 + cfg.POWER_TOL):
        raise NumericalError("no rank-one beam meets the secrecy constraint within the budget")
    u = candidates[best] / np.linalg.norm(candidates[best])
    return np.sqrt(min(powers[best], q)) * u, randomized, result


def solve_separate(
    scene: Scene, grid: SampleGrid, r0: float, settings: DesignSettings = DEFAULT_SETTINGS
) -> DesignReport:
    """
    Separate design: least-power AN-free information beam, then sensing
    covariance confined to the orthogonal complement of g.

    At R0 = 0 the information beam is zero and the whole budget goes to a
    sensing covariance that still avoids g.

    Raises:
        InfeasibleError: power minimisation infeasible at the budget
        NumericalError: no rank-one beam recovered
    """
    if r0 < 0:
        raise DomainError(f"secrecy rate threshold must be non-negative, got {r0}")
    started = time.perf_counter()
    w0, randomized, first = _separate_info_beam(scene, r0, settings)
    n_solves = 0 if first is None else 1

    problem = conic.build_p7(scene, grid, w0)
    result = conic.solve(problem, settings.solver)
    n_solves += 1
    if not result.is_optimal:
        raise NumericalError(f"sensing stage ended with status {result.status.value}")

    sensing = _hermitian(conic.sensing_from_p7(problem, project_psd(result["S_bar"])))
    design = BeamDesign(info_beam=w0, sensing_cov=sensing, scale=result["eta"])
    return _make_report(
        "separate",
        design,
        scene,
        grid,
        r0,
        _diagnostics(result, n_solves, started, randomized=randomized),
        settings,
    )


def solve_sensing_only(
    scene: Scene, grid: SampleGrid, settings: DesignSettings = DEFAULT_SETTINGS
) -> DesignReport:
    """Benchmark with no information beam; the least matching error any design can reach."""
    started = time.perf_counter()
    result = conic.solve(conic.build_sensing_only(scene, grid), settings.solver)
    if not result.is_optimal:
        raise NumericalError(f"sensing-only problem ended with status {result.status.value}")
    design = BeamDesign(
        info_beam=np.zeros(scene.n_antennas, dtype=complex),
        sensing_cov=project_psd(result["S"]),
        scale=result["eta"],
    )
    return _make_report(
        "sensing_only", design, scene, grid, 0.0, _diagnostics(result, 1, started), settings
    )


DESIGNS: dict[str, Callable[..., DesignReport]] = {
    "optimal": solve_optimal,
    "zf": solve_zf,
    "separate": solve_separate,
    "sensing_only": lambda scene, grid, r0, settings=DEFAULT_SETTINGS: solve_sensing_only(
        scene, grid, settings
    ),
}


def run_named_design(
    name: str,
    scene: Scene,
    grid: SampleGrid,
    r0: float,
    settings: DesignSettings = DEFAULT_SETTINGS,
) -> DesignReport:
    """Dispatch by design name ("optimal", "zf", "separate", "sensing_only")."""
    try:
        solver = DESIGNS[name]
    except KeyError:
        raise DomainError(f"unknown design {name!r}; choose from {sorted(DESIGNS)}") from None
    return solver(scene, grid, r0, settings=settings)


__all__ = [
    "DesignSettings",
    "DEFAULT_SETTINGS",
    "construct_rank_one",
    "extraction_violations",
    "check_extraction",
    "rank_one_extract",
    "OuterSearchTrace",
    "SolverDiagnostics",
    "DesignReport",
    "RateSearchResult",
    "parallel_map",
    "gamma_range",
    "grid_refine_search",
    "search_secrecy_rate",
    "max_secrecy_rate",
    "solve_optimal",
    "zf_nullspace",
    "solve_zf",
    "min_power_along",
    "solve_separate",
    "solve_sensing_only",
    "DESIGNS",
    "run_named_design",
]
