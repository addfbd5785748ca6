"""
Unit tests for the beamforming designs (core.designs)

Tests rank-one extraction, the gamma_E grid-then-refine search, the maximum
secrecy rate and the optimal, zero-forcing, separate and sensing-only
designs on small scenes.
"""

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from config import SearchConfig
from core import designs
from core.designs import (
    EXTRACTION_CLAUSES,
    check_extraction,
    construct_rank_one,
    gamma_range,
    grid_refine_search,
    min_power_along,
    parallel_map,
    rank_one_extract,
    run_named_design,
    search_secrecy_rate,
    solve_optimal,
    solve_separate,
    solve_sensing_only,
    solve_zf,
    zf_nullspace,
)
from core.errors import DimensionError, DomainError, ExtractionError, InfeasibleError
from core.model import Scene, Target, secrecy_rate
from tests.scenes import fast_settings, small_grid, small_scene


def random_psd(rng: np.random.Generator, n: int, rank: int) -> np.ndarray:
    v = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return v @ v.conj().T


def orthogonal_scene() -> Scene:
    """N = 2, eavesdropper at broadside (h = [1, 1]), CU channel g = [1, -1], unit noise and power."""
    eve = Target(angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=1.0)
    return Scene(2, 0.5, (eve,), np.array([1.0, -1.0]), 1.0, 1.0)


# ============================================================================
# RANK-ONE EXTRACTION TESTS
# ============================================================================


class TestRankOneExtraction(unittest.TestCase):
    """Test the construction and its checked guarantees."""

    @settings(deadline=None, max_examples=60)
    @given(
        seed=st.integers(min_value=0, max_value=2**31 - 1),
        n=st.integers(min_value=2, max_value=8),
        rank=st.integers(min_value=1, max_value=8),
    )
    def test_guarantees_hold(self, seed, n, rank):
        """Test every clause holds for random PSD inputs."""
        rng = np.random.default_rng(seed)
        w = random_psd(rng, n, min(rank, n))
        s = random_psd(rng, n, max(1, n - rank))
        g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        eves = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
        w0, w_star, s_star = construct_rank_one(w, s, g)
        ratios = check_extraction(w, s, w_star, s_star, g, eves)
        self.assertEqual(set(ratios), set(EXTRACTION_CLAUSES))
        self.assertTrue(all(r <= 1.0 for r in ratios.values()))
        np.testing.assert_allclose(w_star, np.outer(w0, w0.conj()))

    def test_rank_one_input_is_reproduced(self):
        """Test W = w w^H extracts w up to a phase."""
        w = np.array([1.0, 1.0j, -0.5])
        g = np.array([1.0, 0.0, 0.0])
        design = rank_one_extract(np.outer(w, w.conj()), np.eye(3) * 0.1, 2.0, g)
        np.testing.assert_allclose(design.info_cov, np.outer(w, w.conj()), atol=1e-12)
        np.testing.assert_allclose(design.sensing_cov, np.eye(3) * 0.1, atol=1e-12)
        self.assertEqual(design.scale, 2.0)

    def test_degenerate_without_permission(self):
        """Test g^H W g = 0 raises the degenerate clause."""
        w = np.diag([0.0, 1.0])
        with self.assertRaises(ExtractionError) as ctx:
            rank_one_extract(w, np.eye(2), 1.0, np.array([1.0, 0.0]))
        self.assertEqual(ctx.exception.clause, "degenerate")

    def test_degenerate_allowed(self):
        """Test a degenerate point moves W into the sensing covariance."""
        w = np.diag([0.0, 1.0])
        design = rank_one_extract(w, np.eye(2), 1.0, np.array([1.0, 0.0]), allow_degenerate=True)
        np.testing.assert_allclose(design.info_beam, np.zeros(2))
        np.testing.assert_allclose(design.sensing_cov, w + np.eye(2))

    def test_non_psd_input(self):
        """Test an indefinite W is rejected."""
        with self.assertRaises(DomainError):
            rank_one_extract(np.diag([1.0, -1.0]), np.eye(2), 1.0, np.ones(2))

    def test_broken_construction_names_clause(self):
        """Test an over-sized W* fails info_dominance."""
        rng = np.random.default_rng(7)
        w, s = random_psd(rng, 3, 2), random_psd(rng, 3, 3)
        g = rng.standard_normal(3) + 0j
        with self.assertRaises(ExtractionError) as ctx:
            check_extraction(w, s, 1.5 * w, s - 0.5 * w, g)
        self.assertEqual(ctx.exception.clause, "info_dominance")
        self.assertIn("info_dominance", ctx.exception.details)


# ============================================================================
# SEARCH TESTS
# ============================================================================


class TestSearch(unittest.TestCase):
    """Test the 1D grid-then-refine search and its helpers."""

    def test_parallel_map_preserves_order(self):
        """Test threaded map returns results in input order."""
        items = list(range(20))
        self.assertEqual(parallel_map(lambda x: x * x, items, threads=4), [x * x for x in items])

    def test_gamma_range(self):
        """Test the upper end is Q ||h||^2 / sigma^2."""
        lo, hi = gamma_range(small_scene(), SearchConfig())
        self.assertEqual(lo, SearchConfig().GAMMA_LO)
        self.assertAlmostEqual(hi, 4.0 / 0.1)

    def test_refine_finds_minimum(self):
        """Test a smooth minimum is bracketed and approached."""
        search = SearchConfig(N_GRID=16, N_REFINE=3, REFINE_POINTS=8)
        trace, evaluated = grid_refine_search(lambda g: ((g - 0.37) ** 2, None), 1e-3, 1.0, search)
        self.assertLessEqual(trace.interval[0], 0.37)
        self.assertGreaterEqual(trace.interval[1], 0.37)
        self.assertLess(abs(trace.gamma_star - 0.37), 0.01)
        self.assertTrue(np.all(np.diff(trace.gammas) > 0))
        self.assertEqual(len(evaluated), len(trace.gammas))

    def test_maximize(self):
        """Test the search maximises when asked."""
        trace, _ = grid_refine_search(lambda g: (-abs(g - 0.5), None), 0.01, 1.0, maximize=True)
        self.assertLess(abs(trace.gamma_star - 0.5), 0.01)
        self.assertAlmostEqual(trace.best_value, -abs(trace.gamma_star - 0.5))

    def test_all_infeasible(self):
        """Test an all-infeasible search reports no incumbent."""
        trace, _ = grid_refine_search(lambda g: (float("inf"), None), 0.1, 1.0, SearchConfig(N_GRID=4))
        self.assertIsNone(trace.gamma_star)
        self.assertEqual(trace.n_feasible, 0)
        self.assertEqual(trace.best_value, float("inf"))

    def test_threads_do_not_change_result(self):
        """Test serial and threaded searches agree exactly."""
        search = SearchConfig(N_GRID=12, N_REFINE=2, REFINE_POINTS=5)

        def f(g):
            return (np.cos(7.0 * g) + g, None)

        serial, _ = grid_refine_search(f, 0.01, 2.0, search, threads=1)
        threaded, _ = grid_refine_search(f, 0.01, 2.0, search, threads=4)
        self.assertEqual(serial.gamma_star, threaded.gamma_star)
        np.testing.assert_array_equal(serial.gammas, threaded.gammas)

    def test_extra_points_are_evaluated(self):
        """Test extra points inside (lo, hi] join the grid and the rest are dropped."""
        trace, _ = grid_refine_search(
            lambda g: (g, None), 0.1, 1.0, SearchConfig(N_GRID=2, N_REFINE=0), extra_points=(0.1, 0.5, 7.0)
        )
        np.testing.assert_allclose(trace.gammas, [np.sqrt(0.1), 0.5, 1.0])

    def test_grid_is_open_at_lower_end(self):
        """Test the log grid covers (lo, hi] with lo excluded and hi included."""
        lo, hi = 1e-3, 1.0
        trace, _ = grid_refine_search(lambda g: (g, None), lo, hi, SearchConfig(N_GRID=8, N_REFINE=0))
        self.assertEqual(len(trace.gammas), 8)
        self.assertGreater(trace.gammas.min(), lo)
        self.assertEqual(trace.gammas.max(), hi)

    def test_refine_below_first_grid_point(self):
        """Test a minimum at the lower end refines toward lo without reaching it."""
        lo, hi = 1e-3, 1.0
        search = SearchConfig(N_GRID=8, N_REFINE=2, REFINE_POINTS=4)
        trace, _ = grid_refine_search(lambda g: (g, None), lo, hi, search)
        first_grid_point = np.geomspace(lo, hi, 9)[1]
        self.assertGreater(trace.gammas.min(), lo)
        self.assertLess(trace.gamma_star, first_grid_point)
        self.assertEqual(trace.interval[0], lo)


# ============================================================================
# ZERO-FORCING GEOMETRY
# ============================================================================


class TestZeroForcingGeometry(unittest.TestCase):
    """Test the null space and the AN-free power helper."""

    def test_nullspace_orthogonal(self):
        """Test V2 is orthonormal and orthogonal to every eavesdropper channel."""
        scene = small_scene(eve_angles_deg=(-40.0, 50.0))
        v2 = zf_nullspace(scene.eavesdropper_channels)
        self.assertEqual(v2.shape, (4, 2))
        np.testing.assert_allclose(v2.conj().T @ v2, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(scene.eavesdropper_channels.conj() @ v2, 0.0, atol=1e-12)

    def test_coincident_eavesdroppers(self):
        """Test two eavesdroppers in the same direction remove one dimension only."""
        h = np.ones((2, 3))
        self.assertEqual(zf_nullspace(h).shape, (3, 2))

    def test_min_power_along(self):
        """Test hand values on the orthogonal two-antenna scene."""
        scene = orthogonal_scene()
        self.assertAlmostEqual(min_power_along(np.array([1.0, -1.0]), scene, 1.0), 0.5)
        self.assertEqual(min_power_along(np.array([1.0, 1.0]), scene, 1.0), float("inf"))
        self.assertEqual(min_power_along(np.array([1.0, 1.0]), scene, 0.0), 0.0)


# ============================================================================
# MAXIMUM SECRECY RATE
# ============================================================================


class TestMaxSecrecyRate(unittest.TestCase):
    """Test R* against the closed form on an orthogonal scene."""

    def test_orthogonal_scene(self):
        """Test R* = log2(1 + Q ||g||^2 / sigma^2) when g is orthogonal to h."""
        result = search_secrecy_rate(orthogonal_scene(), fast_settings())
        self.assertAlmostEqual(result.rate, np.log2(3.0), delta=1e-3)
        self.assertIsNotNone(result.design)
        self.assertAlmostEqual(secrecy_rate(result.design, orthogonal_scene()), result.rate, delta=1e-3)
        self.assertGreater(result.n_solves, 0)


# ============================================================================
# DESIGN TESTS
# ============================================================================


class TestDesigns(unittest.TestCase):
    """Test every design on the small scene at R0 = 1."""

    @classmethod
    def setUpClass(cls):
        cls.scene = small_scene()
        cls.grid = small_grid(cls.scene)
        cls.settings = fast_settings()
        cls.r0 = 1.0
        cls.max_rate = search_secrecy_rate(cls.scene, cls.settings)
        cls.optimal = solve_optimal(cls.scene, cls.grid, cls.r0, cls.settings, max_rate=cls.max_rate)
        cls.zf = solve_zf(cls.scene, cls.grid, cls.r0, cls.settings)
        cls.separate = solve_separate(cls.scene, cls.grid, cls.r0, cls.settings)
        cls.sensing = solve_sensing_only(cls.scene, cls.grid, cls.settings)

    def test_secrecy_constraint_met(self):
        """Test each constrained design reaches R0."""
        for report in (self.optimal, self.zf, self.separate):
            with self.subTest(design=report.design_name):
                self.assertGreaterEqual(report.secrecy_rate, self.r0 - 1e-6)

    def test_power_budget(self):
        """Test every design spends exactly Q."""
        for report in (self.optimal, self.zf, self.separate, self.sensing):
            with self.subTest(design=report.design_name):
                self.assertAlmostEqual(report.power_info + report.power_sense, 1.0, delta=1e-6)

    def test_scale_nonnegative(self):
        """Test eta comes out nonnegative although it is unconstrained."""
        for report in (self.optimal, self.zf, self.separate, self.sensing):
            with self.subTest(design=report.design_name):
                self.assertGreaterEqual(report.eta, -1e-9)

    def test_ordering(self):
        """Test sensing-only <= optimal <= zero-forcing and separate."""
        opt = self.optimal.matching_error
        self.assertLessEqual(self.sensing.matching_error, opt * (1 + 1e-6) + 1e-9)
        self.assertLessEqual(opt, self.zf.matching_error * (1 + 1e-4) + 1e-9)
        self.assertLessEqual(opt, self.separate.matching_error * (1 + 1e-2) + 1e-9)

    def test_zero_forcing_leaks_nothing(self):
        """Test the ZF information beam is invisible to the eavesdropper."""
        h = self.scene.eavesdropper_channels[0]
        self.assertLess(abs(np.vdot(h, self.zf.design.info_beam)) ** 2, 1e-10)

    def test_separate_sensing_avoids_cu(self):
        """Test the separate design puts no sensing power on the CU channel."""
        g = self.scene.cu_channel
        self.assertLess(float(np.real(g.conj() @ self.separate.design.sensing_cov @ g)), 1e-8)

    def test_optimal_report_fields(self):
        """Test the optimal report carries its search trace and gamma_E*."""
        self.assertIsNotNone(self.optimal.trace)
        self.assertIn(self.optimal.gamma_e_star, list(self.optimal.trace.gammas))
        self.assertIn(self.max_rate.gamma_e, list(self.optimal.trace.gammas))
        self.assertEqual(self.optimal.diagnostics.status, "optimal")
        self.assertGreater(self.optimal.diagnostics.n_solves, 1)
        self.assertEqual(len(self.optimal.gain_total), self.grid.n_samples)
        np.testing.assert_allclose(
            self.optimal.gain_total, self.optimal.gain_info + self.optimal.gain_sensing, atol=1e-9
        )

    def test_sensing_only_has_no_information_beam(self):
        """Test the benchmark has w0 = 0 and zero CU SINR."""
        self.assertEqual(self.sensing.power_info, 0.0)
        self.assertEqual(self.sensing.cu_sinr, 0.0)


class TestDesignEdges(unittest.TestCase):
    """Test infeasible, degenerate and invalid inputs."""

    def setUp(self):
        self.scene = small_scene()
        self.grid = small_grid(self.scene)
        self.settings = fast_settings()

    def test_optimal_infeasible_carries_max_rate(self):
        """Test R0 above R* raises InfeasibleError with R* attached."""
        with self.assertRaises(InfeasibleError) as ctx:
            solve_optimal(self.scene, self.grid, 10.0, self.settings)
        self.assertIsNotNone(ctx.exception.max_rate)
        self.assertLess(ctx.exception.max_rate, 10.0)

    def test_zf_infeasible(self):
        """Test R0 above the zero-forcing limit raises InfeasibleError."""
        with self.assertRaises(InfeasibleError):
            solve_zf(self.scene, self.grid, 10.0, self.settings)

    def test_zf_blind_to_cu_is_infeasible(self):
        """Test a CU inside the eavesdropper span reports infeasible with a zero limit."""
        scene = small_scene(cu_angle_deg=-40.0, eve_angles_deg=(-40.0,))
        with self.assertRaises(InfeasibleError) as ctx:
            solve_zf(scene, small_grid(scene), 0.5, self.settings)
        self.assertAlmostEqual(ctx.exception.max_rate, 0.0, delta=1e-9)

    def test_zf_needs_more_antennas_than_eavesdroppers(self):
        """Test N <= K_E raises DimensionError."""
        scene = small_scene(n_antennas=2, eve_angles_deg=(-40.0, 40.0))
        with self.assertRaises(DimensionError):
            solve_zf(scene, small_grid(scene), 1.0, self.settings)

    def test_separate_infeasible(self):
        """Test the separate design fails when g equals h."""
        eve = Target(angle=0.0, distance=1.0, reference_pathloss=1.0, is_eavesdropper=True, noise_power=0.1)
        scene = Scene(2, 0.5, (eve,), np.ones(2), 0.1, 1.0)
        with self.assertRaises(InfeasibleError):
            solve_separate(scene, small_grid(scene), 1.0, self.settings)

    def test_separate_at_zero_rate_avoids_cu(self):
        """Test R0 = 0 gives w0 = 0 with all power sensed off the CU channel."""
        separate = solve_separate(self.scene, self.grid, 0.0, self.settings)
        sensing = solve_sensing_only(self.scene, self.grid, self.settings)
        g = self.scene.cu_channel
        s = separate.design.sensing_cov
        leak = float(np.real(g.conj() @ s @ g))
        self.assertLessEqual(leak, 1e-8 * float(np.real(np.vdot(g, g))) * np.trace(s).real)
        self.assertEqual(separate.power_info, 0.0)
        self.assertAlmostEqual(separate.power_sense, self.scene.power_budget, delta=1e-6)
        self.assertGreaterEqual(separate.matching_error, sensing.matching_error * (1 - 1e-6) - 1e-9)
        self.assertEqual(separate.diagnostics.n_solves, 1)

    def test_degraded_eavesdropper_has_no_secrecy(self):
        """Test R* = 0 when the eavesdropper sees the CU channel with the same noise."""
        scene = small_scene(cu_angle_deg=-40.0, eve_angles_deg=(-40.0,))
        np.testing.assert_allclose(scene.cu_channel, scene.eavesdropper_channels[0])
        self.assertLessEqual(designs.max_secrecy_rate(scene, self.settings), 1e-4)

    def test_sensing_only_scales_with_budget(self):
        """Test doubling Q doubles eta and keeps the pattern shape."""
        base = solve_sensing_only(self.scene, self.grid, self.settings)
        doubled_scene = small_scene(power_budget=2.0)
        doubled = solve_sensing_only(doubled_scene, small_grid(doubled_scene), self.settings)
        self.assertAlmostEqual(doubled.eta / base.eta, 2.0, delta=1e-4)
        np.testing.assert_allclose(
            doubled.gain_total / 2.0, base.gain_total, atol=1e-4 * float(base.gain_total.max())
        )

    def test_optimal_at_zero_rate(self):
        """Test R0 = 0 gives (nearly) the sensing-only error."""
        optimal = solve_optimal(self.scene, self.grid, 0.0, self.settings)
        sensing = solve_sensing_only(self.scene, self.grid, self.settings)
        self.assertAlmostEqual(optimal.matching_error, sensing.matching_error, delta=1e-4 * max(1.0, sensing.matching_error))

    def test_negative_rate(self):
        """Test R0 < 0 is rejected by every constrained design."""
        for solver in (solve_optimal, solve_zf, solve_separate):
            with self.subTest(design=solver.__name__):
                with self.assertRaises(DomainError):
                    solver(self.scene, self.grid, -1.0, self.settings)

    def test_unknown_design_name(self):
        """Test run_named_design rejects unknown names."""
        with self.assertRaises(DomainError):
            run_named_design("beamsteer", self.scene, self.grid, 1.0, self.settings)

    def test_named_dispatch(self):
        """Test the name table covers all four designs."""
        self.assertEqual(set(designs.DESIGNS), {"optimal", "zf", "separate", "sensing_only"})
        report = run_named_design("sensing_only", self.scene, self.grid, 3.0, self.settings)
        self.assertEqual(report.design_name, "sensing_only")


if __name__ == "__main__":
    unittest.main()
