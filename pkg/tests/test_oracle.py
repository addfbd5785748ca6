"""
Unit tests for the independent verifiers (core.oracle)

Tests brute-force enumeration, extraction fuzzing (including a deliberately
broken construction), the closed-form fixtures and the brute-force sandwich.
"""

import unittest
from unittest.mock import patch

import numpy as np
import pytest

from core import designs
from core.errors import CandidateBudgetError, ConfigError, DomainError, ExtractionError
from core.model import matching_error, secrecy_rate
from core.oracle import (
    ANALYTIC_CASES,
    BruteForceConfig,
    SandwichCheck,
    analytic_cases,
    brute_force_p1,
    check_analytic_case,
    check_sandwich,
    fuzz_proposition1,
    sandwich_fixtures,
)
from tests.scenes import fast_settings, small_grid, small_scene


_construct_rank_one = designs.construct_rank_one


def _oversized_construction(w_tilde, s_tilde, g):
    """Doubles W*, keeping W* + S* = W + S."""
    w0, w_star, _ = _construct_rank_one(w_tilde, s_tilde, g)
    return np.sqrt(2.0) * w0, 2.0 * w_star, w_tilde + s_tilde - 2.0 * w_star


# ============================================================================
# BRUTE FORCE TESTS
# ============================================================================


class TestBruteForceConfig(unittest.TestCase):
    """Test discretisation validation and candidate counting."""

    def test_default_fits_budget(self):
        """Test the default N = 2 grid stays within the candidate budget."""
        cfg = BruteForceConfig()
        self.assertEqual(cfg.n_candidates, 64 * 64 * 64 * 32)

    def test_unsupported_size(self):
        """Test only N = 2 and N = 3 are supported."""
        with self.assertRaises(ConfigError):
            BruteForceConfig(n_antennas=4)

    def test_complex_three_antennas_rejected(self):
        """Test N = 3 requires real restriction."""
        with self.assertRaises(ConfigError):
            BruteForceConfig(n_antennas=3, discretization=4, restrict_real=False)

    def test_budget_exceeded(self):
        """Test an oversized enumeration raises CandidateBudgetError."""
        with self.assertRaises(CandidateBudgetError):
            BruteForceConfig(n_antennas=3, discretization=64)

    def test_bad_power_levels(self):
        """Test power fractions outside [0, 1] are rejected."""
        with self.assertRaises(ConfigError):
            BruteForceConfig(power_levels=(0.5, 1.5))


class TestBruteForce(unittest.TestCase):
    """Test the exhaustive search on two- and three-antenna scenes."""

    def setUp(self):
        self.fixture = sandwich_fixtures()[0]
        self.cfg = BruteForceConfig(discretization=16, power_levels=tuple(np.linspace(0.0, 1.0, 11)))

    def test_returned_design_is_consistent(self):
        """Test the reported error and rate match the returned design."""
        scene, grid, r0 = self.fixture.scene, self.fixture.grid, self.fixture.r0
        result = brute_force_p1(scene, grid, r0, self.cfg)
        self.assertTrue(result.feasible)
        self.assertGreaterEqual(secrecy_rate(result.design, scene), r0 - 1e-9)
        measured = matching_error(result.design, grid, scene)
        self.assertAlmostEqual(measured, result.matching_error, delta=1e-9 * max(1.0, measured))
        self.assertAlmostEqual(result.design.total_power, scene.power_budget, places=12)

    def test_infeasible_threshold(self):
        """Test an unreachable R0 gives an infeasible result."""
        result = brute_force_p1(self.fixture.scene, self.fixture.grid, 50.0, self.cfg)
        self.assertFalse(result.feasible)
        self.assertEqual(result.matching_error, float("inf"))
        self.assertIsNone(result.design)

    def test_slack_only_widens(self):
        """Test a positive slack never increases the best error."""
        scene, grid, r0 = self.fixture.scene, self.fixture.grid, self.fixture.r0
        strict = brute_force_p1(scene, grid, r0, self.cfg)
        loose = brute_force_p1(
            scene, grid, r0, BruteForceConfig(discretization=16, power_levels=self.cfg.power_levels, slack=0.1)
        )
        self.assertLessEqual(loose.matching_error, strict.matching_error)

    def test_size_mismatch(self):
        """Test the config must match the scene's antenna count."""
        with self.assertRaises(ConfigError):
            brute_force_p1(self.fixture.scene, self.fixture.grid, 0.5, BruteForceConfig(n_antennas=3, discretization=4))

    def test_three_antennas(self):
        """Test the real N = 3 enumeration runs and returns a budget-exact design."""
        scene = small_scene(n_antennas=3)
        grid = small_grid(scene)
        cfg = BruteForceConfig(n_antennas=3, discretization=6, power_levels=(0.0, 0.5, 1.0))
        result = brute_force_p1(scene, grid, 0.0, cfg)
        self.assertTrue(result.feasible)
        self.assertAlmostEqual(result.design.total_power, 1.0, places=12)
        measured = matching_error(result.design, grid, scene)
        self.assertAlmostEqual(measured, result.matching_error, delta=1e-9 * max(1.0, measured))


# ============================================================================
# FUZZ TESTS
# ============================================================================


class TestFuzz(unittest.TestCase):
    """Test the extraction fuzzer."""

    def test_clean_run(self):
        """Test the real construction passes every clause."""
        for n in (2, 4, 8):
            with self.subTest(n=n):
                report = fuzz_proposition1(n, 200, seed=n)
                self.assertTrue(report.passed, report.failed_clauses())
                self.assertEqual(report.n_rank_one, 20)
                self.assertEqual(report.n_degenerate, 20)
                self.assertEqual(report.n_general, 160)
                self.assertIn("rank_one_identity", report.worst)
                self.assertLessEqual(max(report.worst.values()), 1.0)

    def test_deterministic(self):
        """Test the same seed gives the same worst ratios."""
        first = fuzz_proposition1(4, 50, seed=11)
        second = fuzz_proposition1(4, 50, seed=11)
        self.assertEqual(first.worst, second.worst)

    def test_broken_construction_is_caught(self):
        """Test a construction that oversizes W* fails with named clauses."""
        with patch.object(designs, "construct_rank_one", side_effect=_oversized_construction):
            report = fuzz_proposition1(3, 30, seed=5)
        self.assertFalse(report.passed)
        self.assertIn("info_dominance", report.failed_clauses())
        self.assertIn("cu_preservation", report.failed_clauses())
        with self.assertRaises(ExtractionError):
            report.raise_for_violations()

    def test_bad_arguments(self):
        """Test zero trials or antennas are rejected."""
        with self.assertRaises(DomainError):
            fuzz_proposition1(2, 0, seed=0)
        with self.assertRaises(DomainError):
            fuzz_proposition1(0, 10, seed=0)


# ============================================================================
# ANALYTIC CASE TESTS
# ============================================================================


class TestAnalyticCases(unittest.TestCase):
    """Test the closed-form fixtures against the library."""

    def test_every_case_passes(self):
        """Test each fixture's checks pass."""
        for case_id in ANALYTIC_CASES:
            with self.subTest(case=case_id):
                checks = check_analytic_case(case_id, fast_settings())
                self.assertTrue(checks)
                for check in checks:
                    self.assertTrue(check.passed, check)

    def test_unknown_case(self):
        """Test an unknown id raises DomainError."""
        with self.assertRaises(DomainError):
            analytic_cases("no_such_case")

    def test_case_metadata(self):
        """Test fixtures carry a derivation and expected values."""
        case = analytic_cases("p6_orthogonal")
        self.assertTrue(case.derivation)
        self.assertAlmostEqual(case.expected["info_power"], 0.5)


# ============================================================================
# SANDWICH TESTS
# ============================================================================


class TestSandwich(unittest.TestCase):
    """Test the exact optimum against brute force."""

    def test_check_logic(self):
        """Test the lower and upper bounds of a sandwich check."""
        self.assertTrue(SandwichCheck("a", 1.0, 1.01).passed)
        self.assertFalse(SandwichCheck("b", 1.0, 0.9).lower_ok)
        self.assertFalse(SandwichCheck("c", 1.0, 1.1).upper_ok)

    def test_fixtures(self):
        """Test five N = 2 fixtures with real channels."""
        fixtures = sandwich_fixtures()
        self.assertEqual(len(fixtures), 5)
        for fixture in fixtures:
            self.assertEqual(fixture.scene.n_antennas, 2)
            np.testing.assert_allclose(fixture.scene.cu_channel.imag, 0.0)

    def test_brute_force_never_beats_optimum(self):
        """Test the discretised search stays above the exact optimum."""
        fixture = sandwich_fixtures()[0]
        cfg = BruteForceConfig(discretization=32)
        check = check_sandwich(fixture, designs.DEFAULT_SETTINGS, cfg)
        self.assertTrue(check.lower_ok, check)


@pytest.mark.slow
class TestSandwichFull(unittest.TestCase):
    """Test every fixture at the default discretisation."""

    def test_all_fixtures(self):
        """Test sdr <= brute force <= (1 + rtol) sdr on every fixture."""
        for fixture in sandwich_fixtures():
            with self.subTest(fixture=fixture.fixture_id):
                check = check_sandwich(fixture)
                self.assertTrue(check.passed, check)


if __name__ == "__main__":
    unittest.main()
