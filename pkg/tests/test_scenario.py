"""
Test scenario validation, loading and overrides.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import hashlib

import pytest
import yaml

from thinprobe.errors import ConfigurationError
from thinprobe.scenario import Scenario, load_scenario, schema_errors, validate_scenario

MINIMAL = {"name": "demo", "experiment": {"type": "identity"}}


def test_minimal_document_is_valid():
    assert schema_errors(MINIMAL) == []


def test_sweep_needs_term():
    errors = schema_errors({"experiment": {"type": "sweep"}})
    assert ("experiment", "'term' is a required property") in errors


def test_unknown_keys_rejected_with_path():
    errors = schema_errors({"experiment": {"type": "identity"}, "geometry": {"curve": {"id": "sine", "amp": 1}}})
    assert [path for path, _ in errors] == ["geometry.curve"]
    assert "amp" in errors[0][1]


def test_every_violation_reported():
    document = {"experiment": {"type": "identity", "counts": [2, 65]}, "cgo": {"mu": -1}, "extra": 1}
    paths = {path for path, _ in schema_errors(document)}
    assert {"<root>", "cgo.mu", "experiment.counts.0"} <= paths
    with pytest.raises(ConfigurationError, match="schema violation"):
        validate_scenario(document, "demo.yaml")


def test_load_yaml(tmp_path):
    path = tmp_path / "demo.yaml"
    path.write_text(yaml.safe_dump({"experiment": {"type": "selfcheck"}}))
    scenario = load_scenario(path)
    assert scenario.name == "demo"
    assert scenario.kind == "selfcheck"
    assert scenario.digest == hashlib.sha256(path.read_bytes()).hexdigest()
    assert scenario.formats == ("csv", "json")
    assert scenario.output_directory == str(Path("runs") / "demo")


def test_load_toml(tmp_path):
    pytest.importorskip("tomllib")
    path = tmp_path / "demo.toml"
    path.write_text('name = "toml-demo"\n\n[experiment]\ntype = "identity"\n\n[geometry]\neps = 0.05\n')
    scenario = load_scenario(path)
    assert scenario.name == "toml-demo"
    assert scenario.eps == 0.05


@pytest.mark.parametrize(
    "text,match",
    [("experiment: [unclosed", "invalid YAML"), ("- 1\n- 2\n", "mapping"), ("experiment: {type: nope}", "schema")],
)
def test_load_errors(tmp_path, text, match):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigurationError, match=match):
        load_scenario(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_scenario(tmp_path / "absent.yaml")


def test_eps_and_eps_list():
    scenario = Scenario.from_dict({**MINIMAL, "geometry": {"eps_list": [0.2, 0.1]}})
    assert scenario.eps_list == [0.2, 0.1]
    assert scenario.eps == 0.2
    assert Scenario.from_dict(MINIMAL).eps_list == [0.1]


def test_overrides():
    scenario = Scenario.from_dict(MINIMAL).with_overrides(eps=[0.2, 0.1], refine=2, seed=7, output="out", jobs=2)
    assert scenario.eps_list == [0.2, 0.1]
    assert scenario.experiment["refine"] == 2
    assert scenario.seed == 7
    assert scenario.output_directory == "out"
    assert scenario.settings == {"n_jobs": 2}
    with pytest.raises(ConfigurationError):
        Scenario.from_dict(MINIMAL).with_overrides(refine=0)


def test_overrides_leave_original_untouched():
    scenario = Scenario.from_dict(MINIMAL)
    scenario.with_overrides(seed=3)
    assert scenario.seed == 0
    assert "refine" not in scenario.experiment


def test_family_from_scenario():
    document = {
        "experiment": {"type": "identity", "counts": [17, 17], "n_time": 9},
        "geometry": {"dim": 2, "l": 0.5, "curve": {"id": "linear-tilt", "params": [0.05]}},
        "cgo": {"alphas": [0.9, 0.8, 0.625, 0.8], "direction": [-0.6, -0.8]},
        "model": {"family": "flux-gap", "H": {"id": "identity"}, "pair": {"psi": "bubble"}},
    }
    family = Scenario.from_dict(document).family()
    assert family.l == 0.5
    assert family.curve == {"id": "linear-tilt", "params": [0.05], "L": 1.0}
    assert family.direction == (-0.6, -0.8)
    assert family.counts == (17, 17)
    assert family.psi == "bubble"
    assert family.flux_offset["amplitude"] == 0.1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
