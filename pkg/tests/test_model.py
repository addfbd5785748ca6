"""
Unit tests for the physical and metric layer (core.model)

Tests unit conversions, the ULA steering vector, scene validation, the
desired beampattern, SINRs, the secrecy rate and beampattern metrics.
"""

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import DomainError
from core.model import (
    BeamDesign,
    SampleGrid,
    Scene,
    Target,
    beampattern,
    beampattern_gain,
    dbm_to_watts,
    desired_beampattern,
    eavesdropper_sinrs,
    matching_error,
    optimal_scale,
    pathloss_db_to_linear,
    power_to_db,
    project_psd,
    secrecy_rate,
    secrecy_rate_from_sinrs,
    sensing_beams,
    sinr_cu,
    sinr_eavesdropper,
    steering_vector,
    watts_to_dbm,
    window_mask,
)
from tests.scenes import small_scene


def two_antenna_scene() -> Scene:
    """Eavesdropper at broadside (h = [1, 1]); CU channel orthogonal to it."""
    eve = Target(angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=1.0)
    return Scene(
        n_antennas=2,
        antenna_spacing_ratio=0.5,
        targets=(eve,),
        cu_channel=np.array([1.0, -1.0]),
        cu_noise_power=1.0,
        power_budget=1.0,
    )


def half_and_half_design() -> BeamDesign:
    """w0 = [1, -1] / 2 (0.5 W) plus S = 0.25 I (0.5 W)."""
    return BeamDesign(info_beam=np.array([0.5, -0.5]), sensing_cov=0.25 * np.eye(2), scale=1.0)


def random_psd(seed: int, n: int, rank: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return v @ v.conj().T


# ============================================================================
# UNIT CONVERSION TESTS
# ============================================================================


class TestUnits(unittest.TestCase):
    """Test dBm / dB conversions."""

    def test_dbm_to_watts(self):
        """Test -60 dBm is a nanowatt and 20 dBm is 0.1 W."""
        self.assertAlmostEqual(dbm_to_watts(-60.0), 1e-9, delta=1e-21)
        self.assertAlmostEqual(dbm_to_watts(20.0), 0.1, places=12)

    def test_watts_to_dbm_inverts(self):
        """Test watts_to_dbm undoes dbm_to_watts."""
        self.assertAlmostEqual(watts_to_dbm(dbm_to_watts(13.0)), 13.0, places=9)

    def test_pathloss(self):
        """Test a -70 dB path loss is 1e-7."""
        self.assertAlmostEqual(pathloss_db_to_linear(-70.0), 1e-7, delta=1e-19)

    def test_power_to_db_floor(self):
        """Test gains below 1e-12 clamp to -120 dB."""
        db = power_to_db([1.0, 0.0, 1e-15, 10.0])
        np.testing.assert_allclose(db, [0.0, -120.0, -120.0, 10.0])


# ============================================================================
# STEERING VECTOR TESTS
# ============================================================================


class TestSteeringVector(unittest.TestCase):
    """Test the ULA array response."""

    def test_endfire_two_elements(self):
        """Test a(pi/2) for N=2, d/lambda=0.5 is [1, -1]."""
        np.testing.assert_allclose(steering_vector(np.pi / 2, 2, 0.5), [1.0, -1.0], atol=1e-12)

    def test_broadside_is_all_ones(self):
        """Test a(0) is the all-ones vector."""
        np.testing.assert_allclose(steering_vector(0.0, 5, 0.5), np.ones(5))

    def test_rejects_empty_array(self):
        """Test N < 1 raises DomainError."""
        with self.assertRaises(DomainError):
            steering_vector(0.0, 0, 0.5)

    @settings(deadline=None, max_examples=50)
    @given(
        angle=st.floats(min_value=-np.pi / 2, max_value=np.pi / 2),
        n=st.integers(min_value=1, max_value=16),
    )
    def test_unit_modulus(self, angle, n):
        """Test every element has modulus one and the first element is 1."""
        a = steering_vector(angle, n, 0.5)
        np.testing.assert_allclose(np.abs(a), np.ones(n), atol=1e-12)
        self.assertAlmostEqual(a[0], 1.0)


# ============================================================================
# SCENE TESTS
# ============================================================================


class TestScene(unittest.TestCase):
    """Test scene validation and channel bookkeeping."""

    def test_channel_norm(self):
        """Test ||h_k|| = sqrt(N) * sqrt(Theta / D^2)."""
        target = Target(angle=0.3, distance=2.0, reference_pathloss=4.0, is_eavesdropper=True, noise_power=1.0)
        scene = Scene.with_los_cu(
            6, 0.5, [target], Target(angle=0.0, distance=1.0, reference_pathloss=1.0, noise_power=1.0), 1.0
        )
        self.assertAlmostEqual(np.linalg.norm(scene.channel(0)), np.sqrt(6.0), places=12)

    def test_eavesdropper_bookkeeping(self):
        """Test eavesdropper indices, channels and noise follow target order."""
        scene = small_scene(eve_angles_deg=(-40.0, 50.0), trusted_angles_deg=(0.0,))
        self.assertEqual(scene.eavesdropper_indices, (0, 1))
        self.assertEqual(scene.eavesdropper_channels.shape, (2, 4))
        np.testing.assert_allclose(scene.eavesdropper_noise, [0.1, 0.1])

    def test_rejects_single_antenna(self):
        """Test N = 1 is rejected."""
        with self.assertRaises(DomainError):
            small_scene(n_antennas=1)

    def test_rejects_scene_without_eavesdropper(self):
        """Test a scene needs at least one eavesdropper."""
        with self.assertRaises(DomainError):
            small_scene(eve_angles_deg=())

    def test_rejects_bad_angle(self):
        """Test angles outside [-pi/2, pi/2] are rejected."""
        eve = Target(angle=2.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=1.0)
        with self.assertRaises(DomainError):
            Scene(2, 0.5, (eve,), np.ones(2), 1.0, 1.0)

    def test_rejects_bad_power_and_noise(self):
        """Test non-positive power budget or CU noise is rejected."""
        eve = Target(angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=1.0)
        with self.assertRaises(DomainError):
            Scene(2, 0.5, (eve,), np.ones(2), 1.0, 0.0)
        with self.assertRaises(DomainError):
            Scene(2, 0.5, (eve,), np.ones(2), 0.0, 1.0)

    def test_rejects_channel_length_mismatch(self):
        """Test a CU channel of the wrong length is rejected."""
        eve = Target(angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=1.0)
        with self.assertRaises(DomainError):
            Scene(3, 0.5, (eve,), np.ones(2), 1.0, 1.0)

    def test_target_validation(self):
        """Test zero distance and a noiseless eavesdropper are rejected."""
        with self.assertRaises(DomainError):
            Target(angle=0.0, distance=0.0, reference_pathloss=1.0)
        with self.assertRaises(DomainError):
            Target(angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True)

    def test_channel_index_out_of_range(self):
        """Test channel(k) rejects an unknown target."""
        with self.assertRaises(DomainError):
            small_scene().channel(5)

    def test_channel_hash_is_stable(self):
        """Test identical scenes hash identically and a moved CU changes the hash."""
        first = small_scene().channel_hash()
        self.assertEqual(first, small_scene().channel_hash())
        self.assertEqual(len(first), 64)
        self.assertNotEqual(first, small_scene(cu_angle_deg=25.0).channel_hash())

    def test_arrays_are_read_only(self):
        """Test channel arrays cannot be mutated in place."""
        scene = small_scene()
        with self.assertRaises(ValueError):
            scene.cu_channel[0] = 0.0


# ============================================================================
# DESIRED BEAMPATTERN TESTS
# ============================================================================


class TestDesiredBeampattern(unittest.TestCase):
    """Test the sample grid and the binary desired pattern."""

    def test_window_is_strict(self):
        """Test a sample exactly half a beam width away is outside the window."""
        mask = window_mask(np.array([0.05, 0.049, -0.05]), [0.0], 0.1)
        np.testing.assert_array_equal(mask, [False, True, False])

    def test_grid_covers_both_ends(self):
        """Test the grid spans [-pi/2, pi/2] inclusive."""
        grid = desired_beampattern(small_scene(), np.deg2rad(10.0), 61)
        self.assertEqual(grid.n_samples, 61)
        self.assertAlmostEqual(grid.angles[0], -np.pi / 2)
        self.assertAlmostEqual(grid.angles[-1], np.pi / 2)

    def test_windows_include_trusted_and_eavesdroppers(self):
        """Test every target, trusted or not, gets a window."""
        scene = small_scene()
        grid = desired_beampattern(scene, np.deg2rad(10.0), 181)
        for target in scene.targets:
            nearest = int(np.argmin(np.abs(grid.angles - target.angle)))
            self.assertEqual(grid.desired[nearest], 1.0)
        self.assertEqual(grid.desired[0], 0.0)

    def test_too_few_samples(self):
        """Test M < 2 is rejected."""
        with self.assertRaises(DomainError):
            desired_beampattern(small_scene(), 0.1, 1)

    def test_empty_window_rejected(self):
        """Test a grid too coarse to hit any window is rejected."""
        scene = small_scene(eve_angles_deg=(-40.0,), trusted_angles_deg=())
        with self.assertRaises(DomainError):
            desired_beampattern(scene, np.deg2rad(1.0), 2)

    def test_non_binary_pattern_rejected(self):
        """Test SampleGrid only accepts 0/1 desired values."""
        with self.assertRaises(DomainError):
            SampleGrid(angles=np.zeros(2), desired=np.array([0.5, 1.0]), beam_width=0.1)


# ============================================================================
# SINR AND SECRECY TESTS
# ============================================================================


class TestSinr(unittest.TestCase):
    """Test SINRs and the secrecy rate against hand-computed values."""

    def setUp(self):
        self.scene = two_antenna_scene()
        self.design = half_and_half_design()

    def test_design_powers(self):
        """Test info, sensing and total power."""
        self.assertAlmostEqual(self.design.info_power, 0.5)
        self.assertAlmostEqual(self.design.sensing_power, 0.5)
        self.assertEqual(self.design.invariant_violations(1.0), [])

    def test_cu_sinr(self):
        """Test |g^H w0|^2 / (g^H S g + 1) = 1 / 1.5."""
        self.assertAlmostEqual(sinr_cu(self.design, self.scene), 2.0 / 3.0, places=12)

    def test_eavesdropper_sinr_zero(self):
        """Test an information beam orthogonal to h leaks nothing."""
        self.assertAlmostEqual(sinr_eavesdropper(self.design, 0, self.scene), 0.0, places=12)
        np.testing.assert_allclose(eavesdropper_sinrs(self.design, self.scene), [0.0], atol=1e-12)

    def test_secrecy_rate(self):
        """Test the secrecy rate is log2(5/3)."""
        self.assertAlmostEqual(secrecy_rate(self.design, self.scene), np.log2(5.0 / 3.0), places=12)

    def test_secrecy_rate_takes_worst_eavesdropper(self):
        """Test the min over eavesdroppers, clipped at zero."""
        self.assertAlmostEqual(secrecy_rate_from_sinrs(3.0, [1.0, 0.0]), 1.0)
        self.assertEqual(secrecy_rate_from_sinrs(1.0, [3.0]), 0.0)

    def test_secrecy_rate_needs_eavesdropper(self):
        """Test an empty eavesdropper list is rejected."""
        with self.assertRaises(DomainError):
            secrecy_rate_from_sinrs(1.0, [])

    def test_trusted_target_is_not_an_eavesdropper(self):
        """Test sinr_eavesdropper rejects a trusted target index."""
        scene = small_scene()
        design = BeamDesign(np.zeros(4), np.eye(4) / 4.0, 1.0)
        with self.assertRaises(DomainError):
            sinr_eavesdropper(design, 1, scene)

    def test_power_budget_violation_reported(self):
        """Test invariant_violations flags a design off the budget."""
        design = BeamDesign(np.array([1.0, 0.0]), np.eye(2), 1.0)
        self.assertIn("power_budget", design.invariant_violations(1.0))

    def test_shape_mismatch(self):
        """Test S must be N x N."""
        with self.assertRaises(DomainError):
            BeamDesign(np.zeros(2), np.eye(3), 0.0)


# ============================================================================
# BEAMPATTERN TESTS
# ============================================================================


class TestBeampattern(unittest.TestCase):
    """Test beampattern gains and the matching error."""

    def setUp(self):
        self.scene = two_antenna_scene()
        self.design = half_and_half_design()

    def test_gain_at_broadside_and_endfire(self):
        """Test hand values of a^H R a at 0 and pi/2."""
        r = self.design.total_cov
        self.assertAlmostEqual(beampattern_gain(r, 0.0, self.scene), 0.5, places=12)
        self.assertAlmostEqual(beampattern_gain(r, np.pi / 2, self.scene), 1.5, places=12)

    def test_vectorised_matches_scalar(self):
        """Test beampattern agrees with beampattern_gain sample by sample."""
        angles = np.linspace(-1.2, 1.2, 7)
        r = self.design.total_cov
        expected = [beampattern_gain(r, a, self.scene) for a in angles]
        np.testing.assert_allclose(beampattern(r, angles, self.scene), expected, atol=1e-12)

    def test_matching_error_hand_value(self):
        """Test the error on a two-sample grid."""
        grid = SampleGrid(angles=np.array([0.0, np.pi / 2]), desired=np.array([1.0, 0.0]), beam_width=0.1)
        # residuals: 1 - 0.5 and 0 - 1.5
        self.assertAlmostEqual(matching_error(self.design, grid, self.scene), 0.25 + 2.25, places=12)

    def test_optimal_scale_is_desired_mean(self):
        """Test the least-squares eta is the mean gain on the desired set."""
        grid = SampleGrid(angles=np.array([0.0, np.pi / 2]), desired=np.array([1.0, 1.0]), beam_width=0.1)
        self.assertAlmostEqual(optimal_scale(self.design.total_cov, grid, self.scene), 1.0, places=12)

    def test_optimal_scale_minimises(self):
        """Test no other eta beats the least-squares one."""
        scene = small_scene()
        grid = desired_beampattern(scene, np.deg2rad(10.0), 61)
        cov = random_psd(3, 4, 2)
        cov *= 1.0 / np.trace(cov).real
        eta = optimal_scale(cov, grid, scene)
        best = matching_error(BeamDesign(np.zeros(4), cov, eta), grid, scene)
        for shifted in (eta * 0.9, eta * 1.1):
            self.assertGreater(matching_error(BeamDesign(np.zeros(4), cov, shifted), grid, scene), best)


# ============================================================================
# PSD HELPERS
# ============================================================================


class TestPsdHelpers(unittest.TestCase):
    """Test PSD projection and sensing beam recovery."""

    def test_zero_covariance_has_no_beams(self):
        """Test a zero S yields an N x 0 beam matrix."""
        self.assertEqual(sensing_beams(np.zeros((3, 3))).shape, (3, 0))

    def test_projection_clips_negative_eigenvalues(self):
        """Test diag(1, -1) projects onto diag(1, 0)."""
        np.testing.assert_allclose(project_psd(np.diag([1.0, -1.0])), np.diag([1.0, 0.0]), atol=1e-12)

    @settings(deadline=None, max_examples=30)
    @given(seed=st.integers(min_value=0, max_value=10_000), n=st.integers(min_value=2, max_value=6))
    def test_projection_is_psd_and_idempotent(self, seed, n):
        """Test project_psd output is PSD and a fixed point."""
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        projected = project_psd(x + x.conj().T)
        self.assertGreaterEqual(np.linalg.eigvalsh(projected).min(), -1e-10)
        np.testing.assert_allclose(project_psd(projected), projected, atol=1e-9)

    @settings(deadline=None, max_examples=30)
    @given(seed=st.integers(min_value=0, max_value=10_000), rank=st.integers(min_value=1, max_value=4))
    def test_sensing_beams_reconstruct(self, seed, rank):
        """Test beams @ beams^H recovers a random PSD matrix of known rank."""
        s = random_psd(seed, 4, rank)
        beams = sensing_beams(s)
        self.assertEqual(beams.shape[1], rank)
        np.testing.assert_allclose(beams @ beams.conj().T, s, atol=1e-9 * max(1.0, np.abs(s).max()))
        design = BeamDesign(np.zeros(4), s, 0.0)
        self.assertEqual(design.sensing_rank, rank)


if __name__ == "__main__":
    unittest.main()
