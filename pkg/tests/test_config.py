"""
Test settings resolution: defaults, YAML file, environment.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import pytest

from thinprobe.config import DEFAULT_SETTINGS, Settings, call_with_settings, get_settings, load_settings, set_settings
from thinprobe.errors import ConfigurationError


def test_defaults_without_file(tmp_path, monkeypatch):
    """Test defaults apply when no settings file exists."""
    monkeypatch.chdir(tmp_path)
    settings = load_settings(environ={})
    assert settings == Settings()
    assert settings.n_jobs == DEFAULT_SETTINGS["n_jobs"]


def test_file_overrides_defaults(tmp_path):
    """Test a YAML file overrides defaults."""
    path = tmp_path / "thinprobe.yaml"
    path.write_text("n_jobs: 3\nslope_tolerance: 0.2\n", encoding="utf-8")
    settings = load_settings(path, environ={})
    assert settings.n_jobs == 3
    assert settings.slope_tolerance == 0.2


def test_environment_wins(tmp_path):
    """Test THINPROBE_* variables override the file."""
    path = tmp_path / "thinprobe.yaml"
    path.write_text("n_jobs: 3\n", encoding="utf-8")
    settings = load_settings(path, environ={"THINPROBE_N_JOBS": "5"})
    assert settings.n_jobs == 5
    assert isinstance(settings.n_jobs, int)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "thinprobe.yaml"
    path.write_text("no_such_setting: 1\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="no_such_setting"):
        load_settings(path, environ={})


def test_bad_value_rejected(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(ConfigurationError, match="n_jobs"):
        load_settings(None, environ={"THINPROBE_N_JOBS": "many"})


def test_missing_explicit_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_settings(tmp_path / "absent.yaml", environ={})


def test_non_mapping_file(tmp_path):
    path = tmp_path / "thinprobe.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="mapping"):
        load_settings(path, environ={})


def test_updated_coerces():
    settings = Settings().updated(n_jobs="2", floor=1e-12)
    assert settings.n_jobs == 2
    assert settings.floor == 1e-12


def test_call_with_settings_installs():
    """Test worker-side helper installs the given settings before calling."""
    custom = Settings().updated(max_s_eps=0.7)
    assert call_with_settings(custom, lambda: get_settings().max_s_eps) == 0.7
    set_settings(Settings())


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
