"""
Test thinprobe imports and public exports.
"""
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import importlib

import pytest

MODULES = [
    "cgo",
    "cli",
    "config",
    "errors",
    "experiments",
    "families",
    "fields",
    "geometry",
    "identity",
    "log",
    "model",
    "probe",
    "quadrature",
    "registry",
    "report",
    "scenario",
    "solver",
    "version",
]


@pytest.mark.parametrize("name", MODULES)
def test_module_imports(name):
    """Every submodule imports on its own."""
    module = importlib.import_module(f"thinprobe.{name}")
    assert module.__name__ == f"thinprobe.{name}"


def test_package_exports():
    """Everything in __all__ resolves."""
    import thinprobe

    for name in thinprobe.__all__:
        assert hasattr(thinprobe, name), f"thinprobe.{name} missing"


def test_module_all_lists_resolve():
    """Module __all__ lists name real attributes."""
    for name in MODULES:
        module = importlib.import_module(f"thinprobe.{name}")
        for symbol in getattr(module, "__all__", []):
            assert hasattr(module, symbol), f"thinprobe.{name}.{symbol} missing"


def test_error_hierarchy():
    """Every library error derives from ThinProbeError; only CheckFailed maps to exit 2."""
    from thinprobe import errors

    classes = [obj for obj in vars(errors).values() if isinstance(obj, type) and issubclass(obj, Exception)]
    for cls in classes:
        assert issubclass(cls, errors.ThinProbeError)
    assert errors.CheckFailed.exit_code == 2
    assert errors.ConfigurationError.exit_code == 1
    assert errors.CflError("dt too large", step=3).step == 3


def test_entry_point_callable():
    """The console script target exists."""
    from thinprobe.cli import main
    assert callable(main)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
