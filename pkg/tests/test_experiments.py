"""
Test the experiment runners behind ``thinprobe run``.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import copy
import json
import math

import pytest

from thinprobe.cli import main
from thinprobe.errors import ConfigurationError
from thinprobe.experiments import FAIL, INFO, PASS, run_experiment
from thinprobe.scenario import Scenario, load_scenario

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"

SINE_NOZZLE = {"dim": 2, "kind": "nozzle", "curve": {"id": "sine", "params": [0.5, 2.0], "L": 1.0}, "eps": 0.1}


def _solve_scenario(checks, **experiment):
    return Scenario.from_dict({
        "name": "solve-test",
        "geometry": dict(SINE_NOZZLE),
        "model": {"base": {"id": "mms-mapped"}},
        "solver": {"n1": 9, "n_eta": 9, "T": 0.002},
        "experiment": {"type": "solve", "checks": checks, **experiment},
    })


def _check(result, name):
    return next(c for c in result.checks if c.name == name)


# ============================================================================
# solve
# ============================================================================


def test_constant_checks_hold_to_roundoff():
    scenario = _solve_scenario(
        ["constant"],
        triplets=[
            {"H": {"id": "identity"}, "F": {"id": "constant-advection"}},
            {"H": {"id": "cubic-with-floor", "params": {"delta": 0.5}}, "F": {"id": "burgers-like"}},
        ],
    )
    result = run_experiment(scenario)
    assert result.passed
    assert [c.verdict for c in result.checks] == [PASS, PASS]
    assert all(entry["drift"] <= 1e-12 for entry in result.details["constant"])


def test_pair_check_reports_measurements():
    scenario = _solve_scenario(["pair"], bump={"amplitude": 1.0, "exponent": 0.0, "radius": 0.05})
    result = run_experiment(scenario, dump_fields=True)
    check = _check(result, "shared-datum flux mismatch")
    assert check.verdict == INFO
    pair = result.details["pair"]
    assert set(pair["report"]["flux_mismatch"]) == {"gamma_1", "gamma_2", "gamma_3", "gamma_4"}
    assert pair["report"]["max_flux_mismatch"] > 0
    assert max(pair["report"]["trace_mismatch"].values()) == 0.0
    assert pair["bump_amplitude"] == pytest.approx(1.0)
    assert math.isfinite(pair["holder_quotient"])
    assert len(result.traces) == 4
    assert set(result.fields) == {"pair_u1", "pair_u2"}


def test_heat_mode_needs_straight_curve():
    with pytest.raises(ConfigurationError, match="straight"):
        run_experiment(_solve_scenario(["heat-mode"]))


@pytest.mark.slow
def test_heat_mode_error_and_rate():
    result = run_experiment(load_scenario(SCENARIO_DIR / "solve-heat.yaml"))
    assert result.passed
    heat = result.details["heat_mode"]
    levels, C = heat["levels"], heat["constant"]
    assert len(levels) == 3
    assert all(r["error"] <= C * (r["h"] ** 2 + r["dt"]) * (1 + 1e-9) for r in levels[1:])
    assert min(heat["orders"]) >= 0.9
    assert _check(result, "heat-mode observed rate in h^2 + dt").verdict == PASS


@pytest.mark.slow
def test_shipped_solve_mms_passes():
    result = run_experiment(load_scenario(SCENARIO_DIR / "solve-mms.yaml"))
    assert result.passed, [c for c in result.checks if c.verdict == FAIL]
    assert all(entry["drift"] <= 1e-12 for entry in result.details["constant"])
    assert all(min(entry["orders"]) >= 1.8 for entry in result.details["mms"])


# ============================================================================
# identity
# ============================================================================


def test_ablation_needs_slab():
    scenario = Scenario.from_dict({
        "geometry": dict(SINE_NOZZLE),
        "experiment": {"type": "identity", "counts": [9, 9], "n_time": 3, "tolerance": 1.0, "ablation": True},
    })
    with pytest.raises(ConfigurationError, match="slab"):
        run_experiment(scenario)


@pytest.mark.slow
def test_identity_residual_drops_per_doubling():
    result = run_experiment(load_scenario(SCENARIO_DIR / "identity-2d.yaml"))
    assert result.passed
    check = _check(result, "residual drop per doubling")
    assert check.verdict == PASS
    assert result.details["refined"]["rule"] == "129x129x65"


@pytest.mark.slow
def test_slab_ablation_inflates_residual():
    result = run_experiment(load_scenario(SCENARIO_DIR / "identity-3d-slab.yaml"))
    assert result.passed
    assert _check(result, "slab ablation inflation").measured >= 1e3
    assert result.details["ablated_relative_residual"] >= 1e3 * result.details["report"]["relative_residual"]["re"]


# ============================================================================
# sweeps
# ============================================================================


def test_zero_gap_sweep_is_degenerate():
    scenario = Scenario.from_dict({
        "geometry": {**SINE_NOZZLE, "eps_list": [0.2, 0.1, 0.05, 0.025]},
        "model": {"family": "flux-gap", "pair": {"flux_offset": {"amplitude": 0.0, "exponent": 0.0}}},
        "experiment": {"type": "sweep", "term": "I3", "counts": [9, 9], "n_time": 3},
    })
    result = run_experiment(scenario)
    check = _check(result, "I3 slope")
    assert check.verdict == "degenerate (floored)"
    assert result.passed
    assert result.details["sweep"]["slope"] is None


@pytest.mark.slow
@pytest.mark.parametrize("term,predicted", [("I5", 4.855), ("I6", 4.855)])
def test_state_gap_sweeps_meet_prediction(term, predicted):
    result = run_experiment(load_scenario(SCENARIO_DIR / f"sweep-{term}.yaml"))
    sweep = result.details["sweep"]
    assert sweep["predicted"] == pytest.approx(predicted)
    assert sweep["predicted_unit_window"] == pytest.approx(predicted - 1.0)
    assert sweep["verdict"] == PASS
    assert sweep["slope"] >= predicted - sweep["tolerance"]
    assert len(result.tables["sweep.csv"].rows) == 4


# ============================================================================
# rdc
# ============================================================================


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_rdc_source_gap_is_eps_squared(eps):
    document = copy.deepcopy(load_scenario(SCENARIO_DIR / "rdc.yaml").data)
    document["geometry"]["eps"] = eps
    result = run_experiment(Scenario.from_dict(document))
    assert result.passed
    gap = _check(result, "source gap at probe point")
    assert gap.predicted == pytest.approx(eps**2, rel=1e-15)
    assert gap.measured == pytest.approx(eps**2, rel=1e-10)
    assert _check(result, "flux gap at probe point").measured <= 1e-14


# ============================================================================
# command line flags
# ============================================================================


def test_run_flags_reach_the_scenario(tmp_path):
    document = {
        "name": "flags",
        "geometry": dict(SINE_NOZZLE),
        "experiment": {"type": "identity", "counts": [9, 9], "n_time": 3, "tolerance": 1.0},
    }
    path = tmp_path / "flags.yaml"
    path.write_text(json.dumps(document))
    out = tmp_path / "run"
    assert main(["run", str(path), "--quad-refine", "2", "--seed", "7", "--output", str(out)]) == 0
    results = json.loads((out / "results.json").read_text())
    assert results["details"]["report"]["rule"] == "17x17x5"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["overrides"]["refine"] == "2"


def test_dump_fields_writes_field_tables(tmp_path):
    scenario = _solve_scenario(["pair"], bump={"amplitude": 1.0, "radius": 0.05})
    path = tmp_path / "pair.yaml"
    path.write_text(json.dumps(scenario.data))
    out = tmp_path / "run"
    assert main(["run", str(path), "--dump-fields", "--jobs", "2", "--output", str(out)]) == 0
    assert (out / "field_pair_u1.csv").read_text().splitlines()[0] == "t,x1,eta,value"
    assert (out / "field_pair_u2.csv").exists()
    assert (out / "measurements.csv").exists()
    assert json.loads((out / "manifest.json").read_text())["settings"]["n_jobs"] == 2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
