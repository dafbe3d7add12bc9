"""
Run directories and the cross-run summary.

A run directory holds ``manifest.json`` (scenario hash, tool version,
timestamp, written files), ``results.json`` and the experiment CSVs.  JSON is
written with sorted keys and CSV floats with ``repr`` so re-running a
scenario reproduces the files byte for byte; ``SOURCE_DATE_EPOCH`` pins the
manifest timestamp.
"""

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import get_settings
from .errors import ReportError
from .solver import write_measurements
from .version import get_version_dict

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.json"
MANIFEST_FILE = "manifest.json"
SUMMARY_COLUMNS = ("run", "experiment", "check", "predicted", "measured", "tolerance", "verdict")


def _clean(value):
    """JSON-safe copy: numpy scalars unwrapped, complex split, non-finite floats to null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": _clean(value.real), "im": _clean(value.imag)}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path, data):
    text = json.dumps(_clean(data), sort_keys=True, indent=2, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return path


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table(path, table):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _timestamp():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch else datetime.now(timezone.utc)
    return moment.replace(microsecond=0).isoformat()


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_run(result, scenario, directory=None, overrides=None):
    """Write every artifact of ``result`` into its run directory and return the directory."""
    directory = Path(directory or scenario.output_directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in scenario.formats:
        for name, table in sorted(result.tables.items()):
            written.append(write_table(directory / name, table))
        if result.traces:
            written.append(write_measurements(directory / "measurements.csv", result.traces))
        for name, field_ in sorted(result.fields.items()):
            written.append(field_.to_csv(directory / f"field_{name}.csv"))
    written.append(write_json(directory / RESULTS_FILE, result.as_dict()))

    manifest = {
        "scenario": {"name": scenario.name, "path": str(scenario.source), "sha256": scenario.digest},
        "experiment": result.experiment,
        "version": get_version_dict(),
        "created_utc": _timestamp(),
        "seed": scenario.seed,
        "overrides": overrides or {},
        "settings": asdict(get_settings()),
        "files": [{"name": Path(p).name, "sha256": _sha256(p)} for p in sorted(written, key=lambda p: Path(p).name)],
    }
    write_json(directory / MANIFEST_FILE, manifest)
    logger.info("results written to %s", directory)
    return directory


# ============================================================================
# Summary across runs
# ============================================================================


def load_run(directory):
    path = Path(directory) / RESULTS_FILE
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ReportError(f"{directory}: no {RESULTS_FILE} (not a run directory?)") from None
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ReportError(f"{path}: unreadable ({e})") from e
    if not isinstance(data, dict) or not isinstance(data.get("checks"), list):
        raise ReportError(f"{path}: missing 'checks' list")
    return data


@dataclass(frozen=True)
class Summary:
    rows: tuple

    @property
    def passed(self):
        return all(row["verdict"] != "FAIL" for row in self.rows)

    def as_dict(self):
        return {"passed": self.passed, "rows": list(self.rows)}


def summarize(directories):
    """Merge the checks of several runs, FAIL rows first, run order otherwise kept."""
    if not directories:
        raise ReportError("report needs at least one run directory")
    rows = []
    for directory in directories:
        data = load_run(directory)
        for check in data["checks"]:
            try:
                rows.append({
                    "run": data.get("scenario") or Path(directory).name,
                    "experiment": check["experiment"],
                    "check": check["name"],
                    "predicted": check.get("predicted"),
                    "measured": check.get("measured"),
                    "tolerance": check.get("tolerance"),
                    "verdict": check["verdict"],
                })
            except (KeyError, TypeError) as e:
                raise ReportError(f"{directory}: malformed check entry ({e})") from e
    rows.sort(key=lambda r: r["verdict"] != "FAIL")
    return Summary(tuple(rows))


def _format(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def format_summary(summary):
    """Plain-text table, numbers to 4 significant digits."""
    cells = [SUMMARY_COLUMNS] + [tuple(_format(row[c]) for c in SUMMARY_COLUMNS) for row in summary.rows]
    widths = [max(len(line[k]) for line in cells) for k in range(len(SUMMARY_COLUMNS))]
    lines = ["  ".join(text.ljust(w) for text, w in zip(line, widths)).rstrip() for line in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def write_summary(summary, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "summary.txt").write_text(format_summary(summary) + "\n", encoding="utf-8")
    write_json(directory / "summary.json", summary.as_dict())
    return directory


__all__ = [
    "MANIFEST_FILE",
    "RESULTS_FILE",
    "Summary",
    "format_summary",
    "load_run",
    "summarize",
    "write_json",
    "write_run",
    "write_summary",
    "write_table",
]
