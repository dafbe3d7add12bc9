"""
Test thinprobe.version functionality.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import pytest

from thinprobe import version


def test_version_constants():
    assert version.VERSION == version.__version__ == version.get_version()
    assert version.BASE_VERSION == "0.3.0-alpha"


def test_base_version_is_semantic():
    numbers = version.BASE_VERSION.split("-")[0].split(".")
    assert len(numbers) == 3
    assert all(part.isdigit() for part in numbers)


def test_pip_version_is_pep440():
    assert version.PIP_VERSION == "0.3.0a0"


def test_version_dict_fields():
    info = version.get_version_dict()
    assert info == {
        "full": version.__version__,
        "base": "0.3.0-alpha",
        "branch": "main",
        "build": "41",
        "date": "20261012",
        "commit": "5e0c9ab",
    }


def test_unparsed_version_falls_back(monkeypatch):
    monkeypatch.setattr(version, "__version__", "0.3.0")
    info = version.get_version_dict()
    assert info["branch"] == "unknown"
    assert info["base"] == "0.3.0-alpha"
    assert version.get_base_version() == "0.3.0-alpha"


def test_dev_branch_pip_version(monkeypatch):
    monkeypatch.setattr(version, "__version__", "0.3.0-alpha_dev_7-20261012-abc1234")
    assert version.get_pip_version() == "0.3.0a0.dev7"


def test_package_exports_version():
    import thinprobe

    assert thinprobe.__version__ == version.__version__


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
