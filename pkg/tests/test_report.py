"""
Test run directories, manifests and the cross-run summary.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import hashlib
import json
import math

import pytest

from thinprobe.errors import ReportError
from thinprobe.experiments import Check, RunResult, Table
from thinprobe.report import (
    MANIFEST_FILE,
    RESULTS_FILE,
    format_summary,
    load_run,
    summarize,
    write_json,
    write_run,
    write_summary,
)
from thinprobe.scenario import Scenario


def _result(name="demo", verdict="PASS"):
    result = RunResult(name, "identity")
    result.add(Check("identity", "relative residual", 0.0, 1.234567e-9, 1e-6, verdict))
    result.add(Check("identity", "note only", verdict="INFO"))
    result.details = {"value": complex(1.0, -2.0), "missing": math.nan}
    result.tables["terms.csv"] = Table(("term", "re", "ok"), [("I1", 0.1, True), ("I2", None, False)])
    return result


def _scenario(name="demo", formats=None):
    document = {"name": name, "experiment": {"type": "identity"}}
    if formats:
        document["output"] = {"formats": formats}
    return Scenario.from_dict(document)


def test_write_run_layout(tmp_path):
    directory = write_run(_result(), _scenario(), tmp_path / "run")
    names = sorted(p.name for p in directory.iterdir())
    assert names == [MANIFEST_FILE, RESULTS_FILE, "terms.csv"]
    assert (directory / "terms.csv").read_text().splitlines() == ["term,re,ok", "I1,0.1,true", "I2,,false"]

    results = json.loads((directory / RESULTS_FILE).read_text())
    assert results["passed"] is True
    assert results["details"]["value"] == {"re": 1.0, "im": -2.0}
    assert results["details"]["missing"] is None

    manifest = json.loads((directory / MANIFEST_FILE).read_text())
    assert manifest["scenario"]["name"] == "demo"
    assert manifest["experiment"] == "identity"
    files = {f["name"]: f["sha256"] for f in manifest["files"]}
    assert files[RESULTS_FILE] == hashlib.sha256((directory / RESULTS_FILE).read_bytes()).hexdigest()


def test_json_only_run_skips_tables(tmp_path):
    directory = write_run(_result(), _scenario(formats=["json"]), tmp_path / "run")
    assert not (directory / "terms.csv").exists()
    assert (directory / RESULTS_FILE).exists()


def test_runs_are_byte_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    first = write_run(_result(), _scenario(), tmp_path / "a")
    second = write_run(_result(), _scenario(), tmp_path / "b")
    for name in (MANIFEST_FILE, RESULTS_FILE, "terms.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    manifest = json.loads((first / MANIFEST_FILE).read_text())
    assert manifest["created_utc"] == "1970-01-01T00:00:00+00:00"


def test_load_run_errors(tmp_path):
    with pytest.raises(ReportError, match="not a run directory"):
        load_run(tmp_path)
    (tmp_path / RESULTS_FILE).write_text("{not json")
    with pytest.raises(ReportError, match="unreadable"):
        load_run(tmp_path)
    write_json(tmp_path / RESULTS_FILE, {"scenario": "x"})
    with pytest.raises(ReportError, match="checks"):
        load_run(tmp_path)


def test_summary_puts_failures_first(tmp_path):
    good = write_run(_result("good"), _scenario("good"), tmp_path / "good")
    bad = write_run(_result("bad", "FAIL"), _scenario("bad"), tmp_path / "bad")
    summary = summarize([good, bad])
    assert not summary.passed
    assert summary.rows[0]["run"] == "bad"
    assert summary.rows[0]["verdict"] == "FAIL"
    assert [r["run"] for r in summary.rows[1:]] == ["good", "good", "bad"]
    with pytest.raises(ReportError):
        summarize([])


def test_format_summary(tmp_path):
    run = write_run(_result(), _scenario(), tmp_path / "run")
    text = format_summary(summarize([run]))
    lines = text.splitlines()
    assert lines[0].split() == ["run", "experiment", "check", "predicted", "measured", "tolerance", "verdict"]
    assert set(lines[1].replace(" ", "")) == {"-"}
    assert "1.235e-09" in text
    assert "INFO" in text


def test_write_summary(tmp_path):
    run = write_run(_result(), _scenario(), tmp_path / "run")
    out = write_summary(summarize([run]), tmp_path / "summary")
    assert (out / "summary.txt").exists()
    assert json.loads((out / "summary.json").read_text())["passed"] is True


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
