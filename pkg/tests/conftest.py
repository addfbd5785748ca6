"""
Pytest configuration and fixtures for isacbeam tests.

This module provides shared fixtures and configuration for all tests.
"""

import os
import tempfile

# SET ENVIRONMENT VARIABLES BEFORE ANY IMPORTS
# Test collection imports core modules, and core.logging resolves its
# directory from ISACBEAM_LOG_DIR; ISACBEAM_THREADS fixes the worker count.
_test_log_dir = os.path.join(tempfile.gettempdir(), "isacbeam_test_logs")
os.environ["ISACBEAM_LOG_DIR"] = _test_log_dir
os.environ.setdefault("ISACBEAM_THREADS", "2")

import pytest

from tests.scenes import benchmark_scene, fast_settings, small_grid, small_scene


def pytest_configure(config):
    """
    Called before test collection begins.
    Ensures ISACBEAM_LOG_DIR is set to a writable temp directory.
    """
    if "ISACBEAM_LOG_DIR" not in os.environ:
        os.environ["ISACBEAM_LOG_DIR"] = _test_log_dir


@pytest.fixture(autouse=True)
def set_log_dir(tmp_path, monkeypatch):
    """Each test logs into its own temporary directory."""
    log_dir = tmp_path / "logs"
    monkeypatch.setenv("ISACBEAM_LOG_DIR", str(log_dir))


@pytest.fixture
def scene():
    """N = 4, one eavesdropper at -40 deg, one trusted target at 0 deg, CU at 20 deg."""
    return small_scene()


@pytest.fixture
def grid(scene):
    return small_grid(scene)


@pytest.fixture
def settings():
    return fast_settings()


@pytest.fixture(scope="session")
def desk_scene():
    """Desk-scale benchmark scene with the CU at 0 deg."""
    return benchmark_scene(0.0)
