"""
Test thinprobe project structure and the shipped scenario corpus.
"""
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import pytest

ROOT = Path(__file__).parent.parent
SCENARIOS = sorted((ROOT / "scenarios").glob("*.yaml"))


def test_root_files_exist():
    """Test that required root files exist."""
    required_files = [
        "pyproject.toml",
        "setup.py",
        "README.md",
        "DESIGN.md",
        "requirements.txt",
        "thinprobe/__init__.py",
        "thinprobe/version.py",
    ]
    for filename in required_files:
        assert (ROOT / filename).exists(), f"Required file missing: {filename}"


def test_pyproject_declares_entry_point():
    """Test the console script and runtime dependencies are declared."""
    content = (ROOT / "pyproject.toml").read_text(encoding="utf-8")
    assert 'thinprobe = "thinprobe.cli:main"' in content
    for package in ("numpy", "scipy", "sympy", "pyyaml", "jsonschema", "joblib"):
        assert package in content, f"dependency {package} not declared"


def test_scenario_corpus_present():
    """Test one scenario per experiment type ships with the repo."""
    from thinprobe.scenario import EXPERIMENTS, load_scenario

    kinds = {load_scenario(path).kind for path in SCENARIOS}
    assert kinds == set(EXPERIMENTS)


@pytest.mark.parametrize("path", SCENARIOS, ids=[p.stem for p in SCENARIOS])
def test_scenario_validates(path):
    """Test every shipped scenario passes the schema and builds its family."""
    from thinprobe.scenario import load_scenario

    scenario = load_scenario(path)
    assert scenario.name == path.stem
    assert len(scenario.digest) == 64
    if scenario.kind != "selfcheck":
        family = scenario.family()
        assert family.dim in (2, 3)


def test_sweep_scenarios_use_four_eps():
    """Test sweeps and theorem checks run on the 0.2 .. 0.025 ladder."""
    from thinprobe.scenario import load_scenario

    for path in SCENARIOS:
        scenario = load_scenario(path)
        if scenario.kind in ("sweep", "theorem-check", "lower-bound"):
            assert scenario.eps_list == [0.2, 0.1, 0.05, 0.025]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
