"""
Conic subproblems over real-embedded Hermitian variables.

A ConicProblem is a small, explicit standard form:

    minimize (or maximize)  c(x)
    subject to              e_i(x) == 0          (linear equalities)
                            f_j(x) >= 0          (linear inequalities)
                            ||r(x)||_2 <= t(x)   (at most one second-order cone)
                            X_b >= 0             (one PSD cone per Hermitian block)

where every form is affine in the Hermitian blocks X_b (through
Re tr(C X_b)) and in free real scalars. Builders below compile the matching
error subproblem for a fixed gamma_E, the zero-forcing and separate-design
subproblems, the AN-free power minimisation and the secrecy-rate
subproblem. `solve` hands a problem to cvxpy with every block stored as its
real symmetric embedding [[Re X, -Im X], [Im X, Re X]].

SINR rows are built on noise-normalised channels (h / sigma) so that every
constraint is O(1) in magnitude.

Solver trouble never raises: it comes back as SolverResult.status.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Union

import cvxpy as cp
import numpy as np
from scipy.linalg import null_space

from config import DEBUG, EXTRACTION, SOLVER, SolverConfig
from core.errors import DomainError, NumericalError
from core.logging import get_logger, performance_monitor
from core.model import SampleGrid, Scene

logger = get_logger(__name__)

# Block asymmetry above this (relative) is repaired with a warning.
BLOCK_WARN_TOL = 1e-10

Value = Union[np.ndarray, float]


# ============================================================================
# REAL EMBEDDING
# ============================================================================


def embed_hermitian(matrix: np.ndarray) -> np.ndarray:
    """
    Real symmetric 2N x 2N embedding [[Re X, -Im X], [Im X, Re X]].

    Eigenvalues of the embedding are those of X, each twice.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > 1e-10 * scale:
        raise DomainError("matrix is not Hermitian")
    return _embed_batch(matrix[None])[0]


def _embed_batch(matrices: np.ndarray) -> np.ndarray:
    """Embed a stack (L, N, N) of Hermitian matrices into (L, 2N, 2N)."""
    re, im = matrices.real, matrices.imag
    top = np.concatenate([re, -im], axis=2)
    bottom = np.concatenate([im, re], axis=2)
    return np.concatenate([top, bottom], axis=1)


def extract_hermitian(
    embedding: np.ndarray,
    block_tol: float = SOLVER.BLOCK_TOL,
    warn_tol: float = BLOCK_WARN_TOL,
) -> np.ndarray:
    """
    Recover X from a (possibly noisy) real embedding.

    Re X is the average of the diagonal blocks and Im X the skew-symmetrised
    off-diagonal block. Deviations from the block structure above `warn_tol`
    are logged; above `block_tol` they raise NumericalError.
    """
    embedding = np.asarray(embedding, dtype=float)
    if embedding.ndim != 2 or embedding.shape[0] != embedding.shape[1] or embedding.shape[0] % 2:
        raise DomainError(f"embedding must be 2N x 2N, got shape {embedding.shape}")
    n = embedding.shape[0] // 2
    a, b = embedding[:n, :n], embedding[:n, n:]
    c, d = embedding[n:, :n], embedding[n:, n:]

    re = 0.25 * (a + d + a.T + d.T)
    im_raw = 0.5 * (c - b)
    im = 0.5 * (im_raw - im_raw.T)
    matrix = re + 1j * im

    scale = max(1.0, float(np.max(np.abs(embedding), initial=0.0)))
    deviation = np.max(np.abs(embedding - _embed_batch(matrix[None])[0]), initial=0.0) / scale
    if deviation > block_tol:
        raise NumericalError(
            f"embedding violates the complex block structure by {deviation:.3e} "
            f"(tolerance {block_tol:.1e})"
        )
    if deviation > warn_tol:
        logger.warning(f"Repaired block structure of solver output (deviation {deviation:.3e})")
    return matrix


def hermitian_basis(n: int) -> np.ndarray:
    """
    Real-orthogonal basis of N x N Hermitian matrices, shape (N^2, N, N).

    Re tr(B_i X) reads off Re X_jj, Re X_jk and Im X_jk (j < k) in turn, so a
    matrix equality X == A is the N^2 linear equalities Re tr(B_i (X - A)) == 0.
    """
    basis = []
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = sym[k, j] = 0.5
            basis.append(sym)
            skew = np.zeros((n, n), dtype=complex)
            skew[j, k] = 0.5j
            skew[k, j] = -0.5j
            basis.append(skew)
    return np.array(basis)


# ============================================================================
# PROBLEM DATA
# ============================================================================


@dataclass(frozen=True)
class HermitianVariable:
    """An N x N Hermitian PSD block, solved as its 2N x 2N real embedding."""

    name: str
    dim: int

    @property
    def embedded_dim(self) -> int:
        return 2 * self.dim


@dataclass(frozen=True, eq=False)
class AffineForm:
    """
    Vector-valued affine function of the problem variables.

        value[l] = sum_b Re tr(blocks[b][l] @ X_b) + sum_s scalars[s][l] * x_s + constant[l]

    Block coefficients are Hermitian with shape (L, N, N); scalar
    coefficients and the constant have shape (L,).
    """

    size: int
    blocks: Mapping[str, np.ndarray] = field(default_factory=dict)
    scalars: Mapping[str, np.ndarray] = field(default_factory=dict)
    constant: Optional[np.ndarray] = None

    def __post_init__(self):
        blocks = {}
        for name, coeffs in self.blocks.items():
            coeffs = np.asarray(coeffs, dtype=complex)
            if coeffs.ndim == 2:
                coeffs = coeffs[None]
            if coeffs.ndim != 3 or coeffs.shape[0] != self.size or coeffs.shape[1] != coeffs.shape[2]:
                raise DomainError(f"block coefficients for {name!r} have shape {coeffs.shape}")
            blocks[name] = coeffs
        scalars = {}
        for name, coeffs in self.scalars.items():
            coeffs = np.broadcast_to(np.asarray(coeffs, dtype=float), (self.size,)).copy()
            scalars[name] = coeffs
        constant = np.zeros(self.size) if self.constant is None else self.constant
        constant = np.broadcast_to(np.asarray(constant, dtype=float), (self.size,)).copy()
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "scalars", scalars)
        object.__setattr__(self, "constant", constant)

    @classmethod
    def scalar(
        cls,
        blocks: Optional[Mapping[str, np.ndarray]] = None,
        scalars: Optional[Mapping[str, float]] = None,
        constant: float = 0.0,
    ) -> "AffineForm":
        """Size-1 form from (N, N) block coefficients and float scalar coefficients."""
        return cls(
            size=1,
            blocks={k: np.asarray(v)[None] for k, v in (blocks or {}).items()},
            scalars={k: np.array([v], dtype=float) for k, v in (scalars or {}).items()},
            constant=np.array([constant]),
        )

    def scaled(self, factor: float) -> "AffineForm":
        return AffineForm(
            size=self.size,
            blocks={k: v * factor for k, v in self.blocks.items()},
            scalars={k: v * factor for k, v in self.scalars.items()},
            constant=self.constant * factor,
        )

    @property
    def variables(self) -> set[str]:
        return set(self.blocks) | set(self.scalars)

    def _terms(self, values: Mapping[str, Value]) -> list[np.ndarray]:
        terms = []
        for name, coeffs in self.blocks.items():
            matrix = np.asarray(values[name], dtype=complex)
            terms.append(np.real(np.einsum("lij,ji->l", coeffs, matrix)))
        for name, coeffs in self.scalars.items():
            terms.append(coeffs * float(values[name]))
        return terms

    def evaluate(self, values: Mapping[str, Value]) -> np.ndarray:
        """Value of the form at complex block values and float scalars."""
        return self.constant + sum(self._terms(values), np.zeros(self.size))

    def magnitude(self, values: Mapping[str, Value]) -> np.ndarray:
        """Sum of absolute term values; the scale residuals are measured against."""
        return np.abs(self.constant) + sum((np.abs(t) for t in self._terms(values)), np.zeros(self.size))


@dataclass(frozen=True)
class LinearConstraint:
    """`form == 0` when listed as an equality, `form >= 0` as an inequality."""

    label: str
    form: AffineForm


@dataclass(frozen=True)
class SecondOrderCone:
    """||residual||_2 <= bound, with `bound` a size-1 form."""

    bound: AffineForm
    residual: AffineForm

    @property
    def dim(self) -> int:
        return self.residual.size + 1


@dataclass(frozen=True, eq=False)
class ConicProblem:
    """
    Compiled conic program.

    Attributes:
        name: Builder name, used in logs ("sdr41", "p5", ...)
        blocks: PSD Hermitian blocks
        scalars: Free real scalars
        objective: Size-1 form
        equalities / inequalities: Linear constraints
        cone: Optional second-order cone
        maximize: Sense of the objective
        metadata: Builder inputs needed to interpret the solution. A builder
            that can prove infeasibility from its inputs stores the reason
            under "infeasibility" and `solve` reports INFEASIBLE without
            calling the backend.
    """

    name: str
    blocks: tuple[HermitianVariable, ...]
    scalars: tuple[str, ...]
    objective: AffineForm
    equalities: tuple[LinearConstraint, ...] = ()
    inequalities: tuple[LinearConstraint, ...] = ()
    cone: Optional[SecondOrderCone] = None
    maximize: bool = False
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        dims = {b.name: b.dim for b in self.blocks}
        if len(dims) != len(self.blocks) or set(dims) & set(self.scalars):
            raise DomainError(f"{self.name}: duplicate variable names")
        if self.objective.size != 1:
            raise DomainError(f"{self.name}: objective must be scalar")

        forms = [("objective", self.objective)]
        forms += [(c.label, c.form) for c in self.equalities + self.inequalities]
        if self.cone is not None:
            if self.cone.bound.size != 1:
                raise DomainError(f"{self.name}: cone bound must be scalar")
            forms += [("cone bound", self.cone.bound), ("cone residual", self.cone.residual)]

        for label, form in forms:
            for name, coeffs in form.blocks.items():
                if name not in dims:
                    raise DomainError(f"{self.name}/{label}: undeclared block {name!r}")
                if coeffs.shape[1] != dims[name]:
                    raise DomainError(
                        f"{self.name}/{label}: block {name!r} is {dims[name]}x{dims[name]}, "
                        f"coefficients are {coeffs.shape[1]}x{coeffs.shape[2]}"
                    )
            for name in form.scalars:
                if name not in self.scalars:
                    raise DomainError(f"{self.name}/{label}: undeclared scalar {name!r}")

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def block_sizes(self) -> tuple[int, ...]:
        """Sizes of the real PSD cones (2N per Hermitian block)."""
        return tuple(b.embedded_dim for b in self.blocks)

    @property
    def residual_dim(self) -> int:
        return 0 if self.cone is None else self.cone.residual.size

    def count(self, prefix: str) -> int:
        """Number of constraints whose label starts with `prefix`."""
        return sum(1 for c in self.equalities + self.inequalities if c.label.startswith(prefix))

    def summary(self) -> dict[str, object]:
        return {
            "name": self.name,
            "psd_blocks": list(self.block_sizes),
            "scalars": list(self.scalars),
            "equalities": len(self.equalities),
            "inequalities": len(self.inequalities),
            "soc_dim": 0 if self.cone is None else self.cone.dim,
        }

    # ------------------------------------------------------------------
    # Replay
    # ------------------------------------------------------------------

    def violations(self, values: Mapping[str, Value]) -> dict[str, float]:
        """
        Relative violation of every constraint at complex block values.

        Each entry is |violation| / (1 + magnitude of the constraint's terms);
        PSD entries are the negative part of the least eigenvalue relative to
        1 + trace.
        """
        out: dict[str, float] = {}
        for c in self.equalities:
            val, mag = c.form.evaluate(values), c.form.magnitude(values)
            out[c.label] = float(np.max(np.abs(val) / (1.0 + mag)))
        for c in self.inequalities:
            val, mag = c.form.evaluate(values), c.form.magnitude(values)
            out[c.label] = float(np.max(np.maximum(-val, 0.0) / (1.0 + mag)))
        if self.cone is not None:
            r = self.cone.residual.evaluate(values)
            t = float(self.cone.bound.evaluate(values)[0])
            mag = np.linalg.norm(self.cone.residual.magnitude(values)) + abs(t)
            out["cone"] = max(float(np.linalg.norm(r)) - t, 0.0) / (1.0 + mag)
        for block in self.blocks:
            matrix = np.asarray(values[block.name], dtype=complex)
            min_eig = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T)).min())
            trace = abs(float(np.real(np.trace(matrix))))
            out[f"psd:{block.name}"] = max(-min_eig, 0.0) / (1.0 + trace)
        return out

    def max_violation(self, values: Mapping[str, Value]) -> float:
        return max(self.violations(values).values(), default=0.0)


# ============================================================================
# SOLVER CONTRACT
# ============================================================================


class SolverStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


_STATUS_MAP = {
    cp.OPTIMAL: SolverStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolverStatus.OPTIMAL,
    cp.INFEASIBLE: SolverStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolverStatus.INFEASIBLE,
    cp.USER_LIMIT: SolverStatus.MAX_ITERATIONS,
}


@dataclass(frozen=True, eq=False)
class SolverResult:
    """
    Outcome of one conic solve.

    `values` holds complex Hermitian matrices for blocks and floats for
    scalars; it is empty unless the status is OPTIMAL. When the status is
    OPTIMAL, `primal_residual` (the replayed relative violation) is within
    REPLAY_SLACK * TOL_FEAS.
    """

    problem: str
    status: SolverStatus
    values: Mapping[str, Value]
    objective: float
    primal_residual: float
    duality_gap: float
    iterations: int
    solve_time: float
    backend: str

    @property
    def is_optimal(self) -> bool:
        return self.status is SolverStatus.OPTIMAL

    def __getitem__(self, name: str) -> Value:
        return self.values[name]


def _expression(form: AffineForm, blocks: dict, scalars: dict):
    terms = []
    for name, coeffs in form.blocks.items():
        embedded = 0.5 * _embed_batch(coeffs)
        flat = embedded.reshape(form.size, -1, order="F")
        y = blocks[name]
        terms.append(cp.Constant(flat) @ cp.reshape(y, (y.shape[0] * y.shape[1],), order="F"))
    for name, coeffs in form.scalars.items():
        terms.append(cp.Constant(coeffs) * scalars[name])
    expr = cp.Constant(form.constant)
    for term in terms:
        expr = expr + term
    return expr


def _duality_gap(stats) -> float:
    extra = getattr(stats, "extra_stats", None)
    primal = getattr(extra, "obj_val", None)
    dual = getattr(extra, "obj_val_dual", None)
    if primal is None or dual is None:
        return float("nan")
    return float(abs(primal - dual) / (1.0 + abs(primal)))


def solve(problem: ConicProblem, settings: SolverConfig = SOLVER) -> SolverResult:
    """
    Solve a ConicProblem with the configured cvxpy backend.

    Each Hermitian block N x N becomes a 2N x 2N PSD variable tied to the
    complex block pattern by linear equalities. A backend "optimal" is only
    reported as OPTIMAL when the extracted complex point replays every
    constraint within REPLAY_SLACK * TOL_FEAS; otherwise the result is a
    NUMERICAL_FAILURE.
    """
    backend = settings.BACKEND.upper()
    certificate = problem.metadata.get("infeasibility")
    if certificate:
        logger.debug(f"{problem.name}: infeasible before solving: {certificate}")
        return _failed(problem.name, SolverStatus.INFEASIBLE, backend, 0.0)

    blocks = {}
    constraints = []
    for block in problem.blocks:
        n = block.dim
        y = cp.Variable((2 * n, 2 * n), PSD=True, name=block.name)
        constraints += [y[:n, :n] == y[n:, n:], y[:n, n:] == -y[n:, :n]]
        blocks[block.name] = y
    scalars = {name: cp.Variable(name=name) for name in problem.scalars}

    for c in problem.equalities:
        constraints.append(_expression(c.form, blocks, scalars) == 0)
    for c in problem.inequalities:
        constraints.append(_expression(c.form, blocks, scalars) >= 0)
    if problem.cone is not None:
        bound = _expression(problem.cone.bound, blocks, scalars)[0]
        constraints.append(cp.SOC(bound, _expression(problem.cone.residual, blocks, scalars)))

    objective = _expression(problem.objective, blocks, scalars)[0]
    sense = cp.Maximize(objective) if problem.maximize else cp.Minimize(objective)
    program = cp.Problem(sense, constraints)

    started = time.perf_counter()
    try:
        with performance_monitor.measure("conic_solve", problem=problem.name, backend=backend):
            program.solve(solver=backend, verbose=DEBUG.LOG_SOLVER_OUTPUT, **settings.backend_options())
    except cp.error.SolverError as e:
        logger.warning(f"{problem.name}: backend {backend} failed: {e}")
        return _failed(problem.name, SolverStatus.NUMERICAL_FAILURE, backend, time.perf_counter() - started)

    stats = program.solver_stats
    iterations = int(getattr(stats, "num_iters", None) or 0)
    solve_time = float(getattr(stats, "solve_time", None) or (time.perf_counter() - started))
    status = _STATUS_MAP.get(program.status, SolverStatus.NUMERICAL_FAILURE)
    if status is not SolverStatus.OPTIMAL:
        logger.debug(f"{problem.name}: backend status {program.status}")
        return _failed(problem.name, status, backend, solve_time, iterations)

    try:
        values: dict[str, Value] = {
            name: extract_hermitian(y.value) for name, y in blocks.items()
        }
    except NumericalError as e:
        logger.warning(f"{problem.name}: {e}")
        return _failed(problem.name, SolverStatus.NUMERICAL_FAILURE, backend, solve_time, iterations)
    values.update({name: float(x.value) for name, x in scalars.items()})

    residual = problem.max_violation(values)
    if residual > settings.REPLAY_SLACK * settings.TOL_FEAS:
        logger.warning(
            f"{problem.name}: backend reported {program.status} but replayed residual is "
            f"{residual:.3e}"
        )
        return _failed(
            problem.name, SolverStatus.NUMERICAL_FAILURE, backend, solve_time, iterations, residual
        )

    return SolverResult(
        problem=problem.name,
        status=SolverStatus.OPTIMAL,
        values=values,
        objective=float(problem.objective.evaluate(values)[0]),
        primal_residual=residual,
        duality_gap=_duality_gap(stats),
        iterations=iterations,
        solve_time=solve_time,
        backend=backend,
    )


def _failed(
    name: str,
    status: SolverStatus,
    backend: str,
    solve_time: float,
    iterations: int = 0,
    residual: float = float("nan"),
) -> SolverResult:
    return SolverResult(
        problem=name,
        status=status,
        values={},
        objective=float("nan"),
        primal_residual=residual,
        duality_gap=float("nan"),
        iterations=iterations,
        solve_time=solve_time,
        backend=backend,
    )


# ============================================================================
# BUILDERS
# ============================================================================


def _outer(vector: np.ndarray) -> np.ndarray:
    return np.outer(vector, vector.conj())


def _sample_outers(grid: SampleGrid, scene: Scene) -> np.ndarray:
    """A_m = a(theta_m) a^H(theta_m), shape (M, N, N)."""
    steering = grid.steering(scene)
    return np.einsum("mi,mj->mij", steering, steering.conj())


def _normalized_channels(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """g / sigma_0 and rows h_k / sigma_k."""
    g = scene.cu_channel / np.sqrt(scene.cu_noise_power)
    h = scene.eavesdropper_channels / np.sqrt(scene.eavesdropper_noise)[:, None]
    return g, h


def _power_equality(scene: Scene, block_names: tuple[str, ...], extra_scalars=()):
    """(sum of traces + extra scalars) / Q - 1 == 0."""
    n = scene.n_antennas
    q = scene.power_budget
    form = AffineForm.scalar(
        blocks={name: np.eye(n) / q for name in block_names},
        scalars={name: 1.0 / q for name in extra_scalars},
        constant=-1.0,
    )
    return LinearConstraint("power", form)


def _matching_cone(
    grid: SampleGrid,
    blocks: Mapping[str, np.ndarray],
    scalars: Optional[Mapping[str, np.ndarray]] = None,
    constant: Optional[np.ndarray] = None,
) -> SecondOrderCone:
    """||eta * P - gains||_2 <= t with gains = sum of <coeffs_m, block> + scalar terms + constant."""
    m = grid.n_samples
    scalar_terms = {"eta": grid.desired.copy()}
    for name, coeffs in (scalars or {}).items():
        scalar_terms[name] = -np.asarray(coeffs, dtype=float)
    residual = AffineForm(
        size=m,
        blocks={name: -coeffs for name, coeffs in blocks.items()},
        scalars=scalar_terms,
        constant=None if constant is None else -np.asarray(constant, dtype=float),
    )
    return SecondOrderCone(bound=AffineForm.scalar(scalars={"t": 1.0}), residual=residual)


def build_sdr41(scene: Scene, grid: SampleGrid, gamma_e: float, r0: float) -> ConicProblem:
    """
    Relaxed matching-error problem for a fixed eavesdropper SINR cap gamma_E.

    Variables W, S (PSD), eta, t. Constraints: tr W + tr S = Q; per
    eavesdropper h~^H W h~ <= gamma_E (h~^H S h~ + 1); at the CU
    g~^H W g~ >= beta (g~^H S g~ + 1) with beta = 2^R0 (1 + gamma_E) - 1;
    ||eta P - <A_m, W + S>|| <= t. Minimises t.
    """
    if not gamma_e > 0:
        raise DomainError(f"gamma_e must be positive, got {gamma_e}")
    if r0 < 0:
        raise DomainError(f"secrecy rate threshold must be non-negative, got {r0}")
    g, h = _normalized_channels(scene)
    beta = 2.0**r0 * (1.0 + gamma_e) - 1.0
    outers = _sample_outers(grid, scene)

    inequalities = []
    for k, h_k in zip(scene.eavesdropper_indices, h):
        hh = _outer(h_k)
        form = AffineForm.scalar(blocks={"W": -hh, "S": gamma_e * hh}, constant=gamma_e)
        inequalities.append(LinearConstraint(f"eve_sinr[{k}]", form.scaled(1.0 / (1.0 + gamma_e))))
    gg = _outer(g)
    cu = AffineForm.scalar(blocks={"W": gg, "S": -beta * gg}, constant=-beta)
    inequalities.append(LinearConstraint("cu_sinr", cu.scaled(1.0 / (1.0 + beta))))

    n = scene.n_antennas
    return ConicProblem(
        name="sdr41",
        blocks=(HermitianVariable("W", n), HermitianVariable("S", n)),
        scalars=("eta", "t"),
        objective=AffineForm.scalar(scalars={"t": 1.0}),
        equalities=(_power_equality(scene, ("W", "S")),),
        inequalities=tuple(inequalities),
        cone=_matching_cone(grid, {"W": outers, "S": outers}),
        metadata={"gamma_e": gamma_e, "r0": r0, "beta": beta},
    )


def build_p5(
    scene: Scene, grid: SampleGrid, zf_direction: np.ndarray, r0: float
) -> ConicProblem:
    """
    Zero-forcing subproblem with the information beam fixed to sqrt(Q0) w~.

    Variables S (PSD), Q0 >= 0, eta, t. tr S + Q0 = Q and
    Q0 |g~^H w~|^2 >= (2^R0 - 1)(g~^H S g~ + 1). A zero direction pins
    Q0 = 0. Since Q0 <= Q and g~^H S g~ >= 0, Q |g~^H w~|^2 < 2^R0 - 1
    certifies infeasibility (always the case for a zero direction at R0 > 0).
    """
    if r0 < 0:
        raise DomainError(f"secrecy rate threshold must be non-negative, got {r0}")
    direction = np.asarray(zf_direction, dtype=complex).reshape(-1)
    if direction.shape[0] != scene.n_antennas:
        raise DomainError("zf direction length does not match the array")
    g, _ = _normalized_channels(scene)
    cu_gain = float(abs(np.vdot(g, direction)) ** 2)
    rhs = 2.0**r0 - 1.0
    outers = _sample_outers(grid, scene)
    gg = _outer(g)

    secrecy = AffineForm.scalar(blocks={"S": -rhs * gg}, scalars={"q0": cu_gain}, constant=-rhs)
    inequalities = [
        LinearConstraint("q0_nonneg", AffineForm.scalar(scalars={"q0": 1.0 / scene.power_budget})),
        LinearConstraint("secrecy", secrecy.scaled(2.0**-r0)),
    ]
    equalities = [_power_equality(scene, ("S",), extra_scalars=("q0",))]
    if np.linalg.norm(direction) == 0.0:
        equalities.append(
            LinearConstraint("q0_zero", AffineForm.scalar(scalars={"q0": 1.0 / scene.power_budget}))
        )

    metadata = {"zf_direction": direction, "r0": r0}
    if scene.power_budget * cu_gain < rhs:
        metadata["infeasibility"] = (
            f"Q |g~^H w~|^2 = {scene.power_budget * cu_gain:.6g} is below 2^R0 - 1 = {rhs:.6g}"
        )

    info_gains = np.abs(grid.steering(scene).conj() @ direction) ** 2
    return ConicProblem(
        name="p5",
        blocks=(HermitianVariable("S", scene.n_antennas),),
        scalars=("q0", "eta", "t"),
        objective=AffineForm.scalar(scalars={"t": 1.0}),
        equalities=tuple(equalities),
        inequalities=tuple(inequalities),
        cone=_matching_cone(grid, {"S": outers}, scalars={"q0": info_gains}),
        metadata=metadata,
    )


def cu_projector(g: np.ndarray) -> np.ndarray:
    """Q2 = I - g g^H / ||g||^2, the projector onto the orthogonal complement of g."""
    g = np.asarray(g, dtype=complex).reshape(-1)
    norm2 = float(np.real(np.vdot(g, g)))
    if norm2 == 0.0:
        raise DomainError("CU channel is zero")
    return np.eye(g.shape[0]) - np.outer(g, g.conj()) / norm2


def build_p7(scene: Scene, grid: SampleGrid, w0_fixed: np.ndarray) -> ConicProblem:
    """
    Sensing stage of the separate design with w0 fixed.

    The sensing covariance is written S = U S_bar U^H with U (N x (N-1)) an
    orthonormal basis of the orthogonal complement of g, so Q2 = U U^H and
    Q2 S Q2^H = S: no artificial noise reaches the CU. S_bar ((N-1) x (N-1),
    PSD) carries no direction the constraints leave free.
    tr S_bar + ||w0||^2 = Q. `sensing_from_p7` maps S_bar back to S.
    """
    w0 = np.asarray(w0_fixed, dtype=complex).reshape(-1)
    info_power = float(np.real(np.vdot(w0, w0)))
    q = scene.power_budget
    if info_power > q * (1.0 + EXTRACTION.POWER_TOL):
        raise DomainError(f"information beam uses {info_power:.4g} W of a {q:.4g} W budget")
    info_power = min(info_power, q)
    proj = cu_projector(scene.cu_channel)
    basis = null_space(scene.cu_channel.conj()[None, :])
    outers = _sample_outers(grid, scene)
    reduced = np.einsum("ia,mij,jb->mab", basis.conj(), outers, basis)
    info_gains = np.abs(grid.steering(scene).conj() @ w0) ** 2

    power = LinearConstraint(
        "power",
        AffineForm.scalar(blocks={"S_bar": np.eye(basis.shape[1]) / q}, constant=info_power / q - 1.0),
    )
    return ConicProblem(
        name="p7",
        blocks=(HermitianVariable("S_bar", basis.shape[1]),),
        scalars=("eta", "t"),
        objective=AffineForm.scalar(scalars={"t": 1.0}),
        equalities=(power,),
        cone=_matching_cone(grid, {"S_bar": reduced}, constant=info_gains),
        metadata={"w0": w0, "projector": proj, "basis": basis},
    )


def sensing_from_p7(problem: ConicProblem, s_bar: np.ndarray) -> np.ndarray:
    """S = U S_bar U^H for a problem built by build_p7."""
    basis = problem.metadata["basis"]
    return basis @ np.asarray(s_bar, dtype=complex) @ basis.conj().T


def build_p6_sdr(scene: Scene, r0: float, power_cap: float) -> ConicProblem:
    """
    AN-free transmit power minimisation, relaxed.

    min tr W  s.t.  g~^H W g~ - 2^R0 h~_k^H W h~_k >= 2^R0 - 1 for every
    eavesdropper, tr W <= power_cap, W PSD. Since g~^H W g~ <= power_cap ||g~||^2,
    power_cap ||g~||^2 < 2^R0 - 1 certifies infeasibility.
    """
    if r0 < 0:
        raise DomainError(f"secrecy rate threshold must be non-negative, got {r0}")
    if not power_cap > 0:
        raise DomainError(f"power cap must be positive, got {power_cap}")
    g, h = _normalized_channels(scene)
    rate = 2.0**r0
    gg = _outer(g)
    n = scene.n_antennas

    inequalities = []
    for k, h_k in zip(scene.eavesdropper_indices, h):
        form = AffineForm.scalar(blocks={"W": gg - rate * _outer(h_k)}, constant=-(rate - 1.0))
        inequalities.append(LinearConstraint(f"secrecy[{k}]", form.scaled(1.0 / rate)))
    inequalities.append(
        LinearConstraint(
            "power_cap", AffineForm.scalar(blocks={"W": -np.eye(n) / power_cap}, constant=1.0)
        )
    )
    metadata = {"r0": r0, "power_cap": power_cap}
    reach = power_cap * float(np.real(np.vdot(g, g)))
    if reach < rate - 1.0:
        metadata["infeasibility"] = f"Q ||g~||^2 = {reach:.6g} is below 2^R0 - 1 = {rate - 1.0:.6g}"
    return ConicProblem(
        name="p6",
        blocks=(HermitianVariable("W", n),),
        scalars=(),
        objective=AffineForm.scalar(blocks={"W": np.eye(n)}),
        inequalities=tuple(inequalities),
        metadata=metadata,
    )


def build_sensing_only(scene: Scene, grid: SampleGrid) -> ConicProblem:
    """Matching error over S alone with tr S = Q (no information beam)."""
    outers = _sample_outers(grid, scene)
    return ConicProblem(
        name="sensing_only",
        blocks=(HermitianVariable("S", scene.n_antennas),),
        scalars=("eta", "t"),
        objective=AffineForm.scalar(scalars={"t": 1.0}),
        equalities=(_power_equality(scene, ("S",)),),
        cone=_matching_cone(grid, {"S": outers}),
    )


def build_rate_subproblem(scene: Scene, gamma_e: float) -> ConicProblem:
    """
    Largest CU SINR beta for a fixed eavesdropper cap gamma_E.

    The ratio g~^H W g~ / (g~^H S g~ + 1) is linearised with the change of
    variables (W', S', tau) = tau (W, S, 1), tau = 1 / (g~^H S g~ + 1):

        max g~^H W' g~
        s.t. g~^H S' g~ + tau = 1
             h~_k^H W' h~_k <= gamma_E (h~_k^H S' h~_k + tau)
             tr W' + tr S' = Q tau,  tau >= 0,  W', S' PSD

    W = W' / tau and S = S' / tau recover the design.
    """
    if not gamma_e > 0:
        raise DomainError(f"gamma_e must be positive, got {gamma_e}")
    g, h = _normalized_channels(scene)
    gg = _outer(g)
    n = scene.n_antennas
    q = scene.power_budget

    inequalities = [LinearConstraint("tau_nonneg", AffineForm.scalar(scalars={"tau": 1.0}))]
    for k, h_k in zip(scene.eavesdropper_indices, h):
        hh = _outer(h_k)
        form = AffineForm.scalar(blocks={"W": -hh, "S": gamma_e * hh}, scalars={"tau": gamma_e})
        inequalities.append(LinearConstraint(f"eve_sinr[{k}]", form.scaled(1.0 / (1.0 + gamma_e))))
    equalities = (
        LinearConstraint(
            "normalization", AffineForm.scalar(blocks={"S": gg}, scalars={"tau": 1.0}, constant=-1.0)
        ),
        LinearConstraint(
            "power", AffineForm.scalar(blocks={"W": np.eye(n) / q, "S": np.eye(n) / q}, scalars={"tau": -1.0})
        ),
    )
    return ConicProblem(
        name="rate",
        blocks=(HermitianVariable("W", n), HermitianVariable("S", n)),
        scalars=("tau",),
        objective=AffineForm.scalar(blocks={"W": gg}),
        equalities=equalities,
        inequalities=tuple(inequalities),
        maximize=True,
        metadata={"gamma_e": gamma_e},
    )


__all__ = [
    "embed_hermitian",
    "extract_hermitian",
    "hermitian_basis",
    "HermitianVariable",
    "AffineForm",
    "LinearConstraint",
    "SecondOrderCone",
    "ConicProblem",
    "SolverStatus",
    "SolverResult",
    "solve",
    "cu_projector",
    "build_sdr41",
    "build_p5",
    "build_p7",
    "sensing_from_p7",
    "build_p6_sdr",
    "build_sensing_only",
    "build_rate_subproblem",
]
