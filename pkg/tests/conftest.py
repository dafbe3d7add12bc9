"""
Pytest configuration for thinprobe tests.
"""
import logging
import sys
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from thinprobe.config import Settings, set_settings  # noqa: E402
from thinprobe.geometry import build_curve, extract_probe_subdomain  # noqa: E402

SCENARIO_DIR = project_root / "scenarios"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


@pytest.fixture(autouse=True)
def default_settings():
    """Every test starts from the built-in defaults (no thinprobe.yaml, no env)."""
    set_settings(Settings())
    yield
    set_settings(Settings())


@pytest.fixture(autouse=True)
def package_logger():
    """Undo the CLI handler so caplog sees package records."""
    yield
    logger = logging.getLogger("thinprobe")
    for handler in [h for h in logger.handlers if getattr(h, "_thinprobe", False)]:
        logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def straight_sub():
    curve = build_curve("straight", [], 0.1, 1.0)
    return extract_probe_subdomain(curve, 0.0, 0.1, 1.0, 2)


@pytest.fixture
def sine_sub():
    curve = build_curve("sine", [0.5, 2.0], 0.1, 1.0)
    return extract_probe_subdomain(curve, 0.0, 0.1, 1.0, 2)


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR
