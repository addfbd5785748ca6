"""
Physical and metric layer.

Array response of a uniform linear array, line-of-sight channels, the SINRs
at the communication user (CU) and at eavesdropping targets, the secrecy
rate, transmit beampattern gains and the beampattern matching error.

Conventions:
    - angles in radians (degrees only at the config boundary)
    - powers in watts, channel gains linear
    - a^H X a is evaluated as a real number; Hermitian inputs are assumed

Everything here is a pure function of immutable values. Arrays stored on
Scene, SampleGrid and BeamDesign are made read-only on construction.
"""

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from config import EXTRACTION, OUTPUT
from core.errors import DomainError

# Tolerance on angles read back from degrees before the [-pi/2, pi/2] check.
_ANGLE_SLACK = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def _hermitian(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


# ============================================================================
# UNIT CONVERSIONS
# ============================================================================


def dbm_to_watts(dbm: float) -> float:
    """-60 dBm -> 1e-9 W."""
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def watts_to_dbm(watts: float) -> float:
    return float(10.0 * np.log10(watts) + 30.0)


def pathloss_db_to_linear(loss_db: float) -> float:
    """Path loss given as a (negative) dB figure, e.g. -70 dB -> 1e-7."""
    return float(10.0 ** (loss_db / 10.0))


def power_to_db(values, floor: float = OUTPUT.GAIN_FLOOR) -> np.ndarray:
    """10*log10 with values below `floor` clamped to it (1e-12 -> -120 dB)."""
    values = np.asarray(values, dtype=float)
    return 10.0 * np.log10(np.maximum(values, floor))


# ============================================================================
# ARRAY RESPONSE AND CHANNELS
# ============================================================================


def steering_vector(angle: float, n_antennas: int, spacing_ratio: float) -> np.ndarray:
    """
    ULA steering vector a(theta).

    Element n equals exp(j*2*pi*n*(d/lambda)*sin(theta)); element 0 is 1.

    Example:
        >>> steering_vector(np.pi / 2, 2, 0.5)
        array([ 1.+0.j, -1.+0.j])
    """
    if n_antennas < 1:
        raise DomainError(f"n_antennas must be >= 1, got {n_antennas}")
    phase = 2.0 * np.pi * spacing_ratio * np.sin(angle)
    return np.exp(1j * phase * np.arange(n_antennas))


def steering_matrix(angles: Sequence[float], n_antennas: int, spacing_ratio: float) -> np.ndarray:
    """Steering vectors stacked as rows, shape (len(angles), n_antennas)."""
    if n_antennas < 1:
        raise DomainError(f"n_antennas must be >= 1, got {n_antennas}")
    phases = 2.0 * np.pi * spacing_ratio * np.sin(np.asarray(angles, dtype=float))
    return np.exp(1j * np.outer(phases, np.arange(n_antennas)))


@dataclass(frozen=True)
class Target:
    """
    A sensing target, possibly an eavesdropper.

    Attributes:
        angle: Direction theta_k in radians
        distance: D_k in meters
        reference_pathloss: Theta_k, linear; amplitude is sqrt(Theta_k / D_k^2)
        is_eavesdropper: Target is untrusted
        noise_power: sigma_k^2 in watts (required for eavesdroppers only)
    """

    angle: float
    distance: float
    reference_pathloss: float
    is_eavesdropper: bool = False
    noise_power: Optional[float] = None

    def __post_init__(self):
        if not self.distance > 0:
            raise DomainError(f"target distance must be positive, got {self.distance}")
        if not self.reference_pathloss > 0:
            raise DomainError(
                f"reference path loss must be positive, got {self.reference_pathloss}"
            )
        if self.is_eavesdropper and not (self.noise_power is not None and self.noise_power > 0):
            raise DomainError("eavesdropper targets need a positive noise power")

    @property
    def amplitude(self) -> float:
        return float(np.sqrt(self.reference_pathloss / self.distance**2))


def los_channel(target: Target, n_antennas: int, spacing_ratio: float) -> np.ndarray:
    """h_k = sqrt(Theta_k / D_k^2) * a(theta_k); its norm is sqrt(N) * alpha_k."""
    if not target.distance > 0:
        raise DomainError(f"target distance must be positive, got {target.distance}")
    return target.amplitude * steering_vector(target.angle, n_antennas, spacing_ratio)


# ============================================================================
# SCENE
# ============================================================================


@dataclass(frozen=True, eq=False)
class Scene:
    """
    Array geometry, targets, CU channel, noise powers and power budget.

    Invariants (checked on construction):
        N > 1, 1 <= K_E <= K, target angles in [-pi/2, pi/2],
        power_budget > 0, cu_noise_power > 0, len(cu_channel) == N
    """

    n_antennas: int
    antenna_spacing_ratio: float
    targets: tuple[Target, ...]
    cu_channel: np.ndarray
    cu_noise_power: float
    power_budget: float

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        channel = np.asarray(self.cu_channel, dtype=complex).reshape(-1)
        object.__setattr__(self, "cu_channel", _frozen(channel))

        if self.n_antennas <= 1:
            raise DomainError(f"need N > 1 antennas, got {self.n_antennas}")
        if channel.shape[0] != self.n_antennas:
            raise DomainError(
                f"CU channel has {channel.shape[0]} entries, expected {self.n_antennas}"
            )
        if not self.power_budget > 0:
            raise DomainError(f"power budget must be positive, got {self.power_budget}")
        if not self.cu_noise_power > 0:
            raise DomainError(f"CU noise power must be positive, got {self.cu_noise_power}")
        n_eve = sum(1 for t in self.targets if t.is_eavesdropper)
        if n_eve < 1:
            raise DomainError("scene needs at least one eavesdropper")
        for target in self.targets:
            if abs(target.angle) > np.pi / 2 + _ANGLE_SLACK:
                raise DomainError(f"target angle {target.angle} outside [-pi/2, pi/2]")

    @classmethod
    def with_los_cu(
        cls,
        n_antennas: int,
        antenna_spacing_ratio: float,
        targets: Sequence[Target],
        cu: Target,
        power_budget: float,
    ) -> "Scene":
        """Build a scene whose CU channel is line-of-sight from `cu` (angle, distance, path loss)."""
        if cu.noise_power is None:
            raise DomainError("CU needs a noise power")
        return cls(
            n_antennas=n_antennas,
            antenna_spacing_ratio=antenna_spacing_ratio,
            targets=tuple(targets),
            cu_channel=los_channel(cu, n_antennas, antenna_spacing_ratio),
            cu_noise_power=cu.noise_power,
            power_budget=power_budget,
        )

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @cached_property
    def eavesdropper_indices(self) -> tuple[int, ...]:
        return tuple(k for k, t in enumerate(self.targets) if t.is_eavesdropper)

    @cached_property
    def target_channels(self) -> np.ndarray:
        """LoS channels of all K targets as rows, shape (K, N)."""
        rows = [los_channel(t, self.n_antennas, self.antenna_spacing_ratio) for t in self.targets]
        return _frozen(np.vstack(rows))

    @cached_property
    def eavesdropper_channels(self) -> np.ndarray:
        """Rows h_k for k in the eavesdropper set, shape (K_E, N)."""
        return _frozen(self.target_channels[list(self.eavesdropper_indices)])

    @cached_property
    def eavesdropper_noise(self) -> np.ndarray:
        return _frozen(
            np.array([self.targets[k].noise_power for k in self.eavesdropper_indices], dtype=float)
        )

    def channel(self, k: int) -> np.ndarray:
        if not 0 <= k < self.n_targets:
            raise DomainError(f"target index {k} out of range")
        return self.target_channels[k]

    def channel_hash(self) -> str:
        """SHA-256 of g, h_1 ... h_K stacked as little-endian complex128."""
        stacked = np.vstack([self.cu_channel[None, :], self.target_channels])
        return hashlib.sha256(stacked.astype("<c16").tobytes()).hexdigest()


# ============================================================================
# SAMPLE GRID
# ============================================================================


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Sample angles, the binary desired beampattern on them, and the beam width."""

    angles: np.ndarray
    desired: np.ndarray
    beam_width: float

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).reshape(-1)
        desired = np.asarray(self.desired, dtype=float).reshape(-1)
        if angles.shape != desired.shape:
            raise DomainError("angles and desired beampattern must have the same length")
        if not np.all(np.isin(desired, (0.0, 1.0))):
            raise DomainError("desired beampattern must be binary")
        object.__setattr__(self, "angles", _frozen(angles))
        object.__setattr__(self, "desired", _frozen(desired))

    @property
    def n_samples(self) -> int:
        return int(self.angles.shape[0])

    @property
    def n_desired(self) -> int:
        return int(self.desired.sum())

    @cached_property
    def desired_mask(self) -> np.ndarray:
        return _frozen(self.desired > 0.5)

    def steering(self, scene: Scene) -> np.ndarray:
        """Steering rows a(theta_m) for every sample, shape (M, N)."""
        return steering_matrix(self.angles, scene.n_antennas, scene.antenna_spacing_ratio)


def window_mask(angles: np.ndarray, target_angles: Sequence[float], beam_width: float) -> np.ndarray:
    """True where |angle - theta_k| < beam_width / 2 for some target (strict)."""
    angles = np.asarray(angles, dtype=float)
    centers = np.asarray(target_angles, dtype=float)
    distance = np.abs(angles[:, None] - centers[None, :])
    return np.any(distance < beam_width / 2.0, axis=1)


def desired_beampattern(scene: Scene, beam_width: float, n_samples: int) -> SampleGrid:
    """
    Uniform grid over [-pi/2, pi/2] (both ends included) with the desired
    beampattern equal to 1 inside the window of any target, trusted or not.
    """
    if n_samples < 2:
        raise DomainError(f"need at least 2 samples, got {n_samples}")
    if not scene.targets:
        raise DomainError("desired beampattern needs at least one target")
    angles = np.linspace(-np.pi / 2, np.pi / 2, n_samples)
    mask = window_mask(angles, [t.angle for t in scene.targets], beam_width)
    if not mask.any():
        raise DomainError("no sample falls inside any target window; refine the grid")
    return SampleGrid(angles=angles, desired=mask.astype(float), beam_width=beam_width)


# ============================================================================
# BEAM DESIGN
# ============================================================================


@dataclass(frozen=True, eq=False)
class BeamDesign:
    """
    Decision variables (w0, S, eta).

    Attributes:
        info_beam: Information beamformer w0, length N
        sensing_cov: Sensing (artificial noise) covariance S, N x N Hermitian PSD
        scale: Beampattern scaling eta
    """

    info_beam: np.ndarray
    sensing_cov: np.ndarray
    scale: float

    def __post_init__(self):
        w0 = np.asarray(self.info_beam, dtype=complex).reshape(-1)
        s = np.asarray(self.sensing_cov, dtype=complex)
        if s.shape != (w0.shape[0], w0.shape[0]):
            raise DomainError(f"sensing covariance shape {s.shape} does not match N={w0.shape[0]}")
        object.__setattr__(self, "info_beam", _frozen(w0))
        object.__setattr__(self, "sensing_cov", _frozen(s))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def n_antennas(self) -> int:
        return int(self.info_beam.shape[0])

    @cached_property
    def info_cov(self) -> np.ndarray:
        return _frozen(np.outer(self.info_beam, self.info_beam.conj()))

    @cached_property
    def total_cov(self) -> np.ndarray:
        return _frozen(self.sensing_cov + self.info_cov)

    @property
    def info_power(self) -> float:
        return float(np.real(np.vdot(self.info_beam, self.info_beam)))

    @property
    def sensing_power(self) -> float:
        return float(np.real(np.trace(self.sensing_cov)))

    @property
    def total_power(self) -> float:
        return self.info_power + self.sensing_power

    @property
    def sensing_rank(self) -> int:
        return int(sensing_beams(self.sensing_cov).shape[1])

    def invariant_violations(self, power_budget: float, settings=EXTRACTION) -> list[str]:
        """Names of violated design invariants (empty when the design is valid)."""
        violations = []
        s = self.sensing_cov
        if np.max(np.abs(s - s.conj().T), initial=0.0) > settings.PSD_TOL * max(power_budget, 1.0):
            violations.append("sensing_hermitian")
        min_eig = float(np.linalg.eigvalsh(_hermitian(s)).min())
        if min_eig < -settings.PSD_TOL * max(power_budget, 1.0):
            violations.append("sensing_psd")
        if abs(self.total_power - power_budget) > settings.POWER_TOL * power_budget:
            violations.append("power_budget")
        return violations


def project_psd(matrix: np.ndarray) -> np.ndarray:
    """Nearest Hermitian PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    eigvals, eigvecs = np.linalg.eigh(_hermitian(np.asarray(matrix, dtype=complex)))
    eigvals = np.clip(eigvals, 0.0, None)
    return _hermitian((eigvecs * eigvals) @ eigvecs.conj().T)


def sensing_beams(sensing_cov: np.ndarray, rank_ratio: float = EXTRACTION.RANK_RATIO) -> np.ndarray:
    """
    Sensing beams from the eigendecomposition of S.

    Returns an (N, m) matrix whose columns are sqrt(lambda_i) u_i for the m
    eigenvalues above rank_ratio * lambda_max, so that beams @ beams^H ~ S.
    A zero covariance gives m = 0.
    """
    eigvals, eigvecs = np.linalg.eigh(_hermitian(np.asarray(sensing_cov, dtype=complex)))
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    top = eigvals[0] if eigvals.size else 0.0
    if top <= 0:
        return np.zeros((sensing_cov.shape[0], 0), dtype=complex)
    keep = eigvals > rank_ratio * top
    return eigvecs[:, keep] * np.sqrt(eigvals[keep])


# ============================================================================
# SINR AND SECRECY
# ============================================================================


def _quadratic_form(vector: np.ndarray, matrix: np.ndarray) -> float:
    return float(np.real(np.vdot(vector, matrix @ vector)))


def sinr_cu(design: BeamDesign, scene: Scene) -> float:
    """|g^H w0|^2 / (g^H S g + sigma_0^2)."""
    g = scene.cu_channel
    signal = abs(np.vdot(g, design.info_beam)) ** 2
    return float(signal / (_quadratic_form(g, design.sensing_cov) + scene.cu_noise_power))


def sinr_eavesdropper(design: BeamDesign, target_index: int, scene: Scene) -> float:
    """|h_k^H w0|^2 / (h_k^H S h_k + sigma_k^2) for an eavesdropping target k."""
    if target_index not in scene.eavesdropper_indices:
        raise DomainError(f"target {target_index} is not an eavesdropper")
    h = scene.channel(target_index)
    noise = scene.targets[target_index].noise_power
    signal = abs(np.vdot(h, design.info_beam)) ** 2
    return float(signal / (_quadratic_form(h, design.sensing_cov) + noise))


def eavesdropper_sinrs(design: BeamDesign, scene: Scene) -> np.ndarray:
    """SINR of every eavesdropper, in target order."""
    return np.array([sinr_eavesdropper(design, k, scene) for k in scene.eavesdropper_indices])


def secrecy_rate_from_sinrs(cu_sinr: float, eve_sinrs: Sequence[float]) -> float:
    eve_sinrs = np.asarray(eve_sinrs, dtype=float)
    if eve_sinrs.size == 0:
        raise DomainError("secrecy rate needs at least one eavesdropper")
    rates = np.log2(1.0 + cu_sinr) - np.log2(1.0 + eve_sinrs)
    return float(np.min(np.maximum(rates, 0.0)))


def secrecy_rate(design: BeamDesign, scene: Scene) -> float:
    """min over eavesdroppers of (log2(1+SINR_cu) - log2(1+SINR_k))^+, in bps/Hz."""
    return secrecy_rate_from_sinrs(sinr_cu(design, scene), eavesdropper_sinrs(design, scene))


# ============================================================================
# BEAMPATTERN
# ============================================================================


def beampattern_gain(cov_total: np.ndarray, angle: float, scene: Scene) -> float:
    """a^H(theta) R a(theta) for the total covariance R = S + w0 w0^H."""
    a = steering_vector(angle, scene.n_antennas, scene.antenna_spacing_ratio)
    return _quadratic_form(a, np.asarray(cov_total, dtype=complex))


def beampattern(cov: np.ndarray, angles: Sequence[float], scene: Scene) -> np.ndarray:
    """Vectorised beampattern_gain over many angles."""
    steering = steering_matrix(angles, scene.n_antennas, scene.antenna_spacing_ratio)
    return np.real(np.einsum("mi,ij,mj->m", steering.conj(), np.asarray(cov, dtype=complex), steering))


def matching_residual(
    cov_total: np.ndarray, scale: float, grid: SampleGrid, scene: Scene
) -> np.ndarray:
    """eta * P(theta_m) - a^H(theta_m) R a(theta_m) per sample."""
    return scale * grid.desired - beampattern(cov_total, grid.angles, scene)


def matching_error(design: BeamDesign, grid: SampleGrid, scene: Scene) -> float:
    """Sum over samples of |eta * P(theta_m) - a^H(theta_m) (S + w0 w0^H) a(theta_m)|^2."""
    residual = matching_residual(design.total_cov, design.scale, grid, scene)
    return float(np.dot(residual, residual))


def optimal_scale(cov_total: np.ndarray, grid: SampleGrid, scene: Scene) -> float:
    """
    Least-squares eta for a fixed covariance.

    With a binary desired pattern this is the mean gain over the desired set.
    """
    if grid.n_desired == 0:
        raise DomainError("optimal scale needs at least one desired sample")
    gains = beampattern(cov_total, grid.angles, scene)
    return float(gains[grid.desired_mask].sum() / grid.n_desired)


__all__ = [
    "Target",
    "Scene",
    "SampleGrid",
    "BeamDesign",
    "dbm_to_watts",
    "watts_to_dbm",
    "pathloss_db_to_linear",
    "power_to_db",
    "steering_vector",
    "steering_matrix",
    "los_channel",
    "window_mask",
    "desired_beampattern",
    "project_psd",
    "sensing_beams",
    "sinr_cu",
    "sinr_eavesdropper",
    "eavesdropper_sinrs",
    "secrecy_rate_from_sinrs",
    "secrecy_rate",
    "beampattern_gain",
    "beampattern",
    "matching_residual",
    "matching_error",
    "optimal_scale",
]
