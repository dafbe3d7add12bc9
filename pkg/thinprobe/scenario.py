"""
Scenario files.

A scenario is a YAML (or TOML) document describing one experiment: the
geometry, the CGO probe, the model and pair recipe, solver grids, the
experiment itself and where results go.  Documents are validated against
``SCENARIO_SCHEMA`` before anything is computed; every violation is reported
with its dotted key path and unknown keys are rejected at every level.
"""

import copy
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import yaml
from jsonschema import Draft202012Validator

from .config import DEFAULT_SETTINGS
from .errors import ConfigurationError
from .families import FAMILIES, PairFamily, make_family
from .geometry import CURVE_IDS, KINDS

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    tomllib = None

logger = logging.getLogger(__name__)

EXPERIMENTS = ("selfcheck", "identity", "sweep", "solve", "theorem-check", "rdc", "lower-bound")
SOLVE_CHECKS = ("mms", "heat-mode", "constant", "pair")
TERM_NAMES = ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8",
              "I21", "I22", "I41", "I42", "I43", "I44", "I45", "I46")

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_ODD_COUNT = {"type": "integer", "minimum": 3}
_VECTOR = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 3}

_REGISTRY_BLOCK = {
    "type": "object",
    "additionalProperties": False,
    "required": ["id"],
    "properties": {
        "id": {"type": "string"},
        "params": {"type": ["object", "null"]},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "C": _POSITIVE,
    },
}

_GEOMETRY = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "dim": {"enum": [2, 3]},
        "kind": {"enum": list(KINDS)},
        "curve": {
            "type": "object",
            "additionalProperties": False,
            "required": ["id"],
            "properties": {
                "id": {"enum": list(CURVE_IDS)},
                "params": {"type": "array", "items": _NUMBER},
                "L": _POSITIVE,
            },
        },
        "eps": _POSITIVE,
        "eps_list": {"type": "array", "items": _POSITIVE, "minItems": 1},
        "l": _POSITIVE,
        "b1": _NUMBER,
    },
}

_CGO = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lam": _POSITIVE,
        "mu": _POSITIVE,
        "direction": _VECTOR,
        "case": {"enum": ["a", "b"]},
        "alphas": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "minItems": 4,
            "maxItems": 4,
        },
        "product_choice": {"oneOf": [{"enum": ["theorem", "proof"]}, {"type": "number"}]},
    },
}

_PAIR = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "q": {"type": ["number", "null"]},
        "psi": {"enum": ["bubble", "unit-bubble", "constant", "ramp"]},
        "transverse": {"enum": ["simple", "clamped", "none"]},
        "cross": {"enum": ["simple", "clamped", "open"]},
        "amplitude": _NUMBER,
        "gradient_flux": {"type": "boolean"},
        "flux_offset": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {"amplitude": _NUMBER, "exponent": _NUMBER, "component": {"type": "integer", "minimum": 0}},
        },
        "source_offset": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {"amplitude": _NUMBER, "exponent": _NUMBER},
        },
        "holder_constant": _POSITIVE,
    },
}

_BASE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["id"],
    "properties": {
        "id": {"enum": ["constant", "trig-mapped", "mms-mapped", "heat-mode", "plane-wave"]},
        "value": _NUMBER,
        "k": {"oneOf": [_NUMBER, _VECTOR]},
        "offset": _NUMBER,
        "amplitude": _NUMBER,
    },
}

_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "family": {"enum": sorted(FAMILIES)},
        "H": _REGISTRY_BLOCK,
        "F": _REGISTRY_BLOCK,
        "f": _REGISTRY_BLOCK,
        "base": _BASE,
        "pair": _PAIR,
    },
}

_SOLVER = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n1": {"type": "integer", "minimum": 5},
        "n_eta": {"type": "integer", "minimum": 5},
        "nt": {"type": "integer", "minimum": 2},
        "T": _POSITIVE,
        "t0": _NUMBER,
    },
}

_BUMP = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"amplitude": _NUMBER, "exponent": _NUMBER, "radius": _POSITIVE},
}

_EXPERIMENT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": list(EXPERIMENTS)},
        "term": {"enum": list(TERM_NAMES)},
        "tolerance": _POSITIVE,
        "refine": {"type": "integer", "minimum": 1},
        "counts": {"type": "array", "items": _ODD_COUNT, "minItems": 2, "maxItems": 3},
        "n_time": _ODD_COUNT,
        "T1": _NUMBER,
        "window_scale": _POSITIVE,
        "point": _VECTOR,
        "source": {"enum": ["closed-form", "solver"]},
        "convergence": {"type": "boolean"},
        "ablation": {"type": "boolean"},
        "checks": {"type": "array", "items": {"enum": list(SOLVE_CHECKS)}, "minItems": 1},
        "refinements": {"type": "integer", "minimum": 2},
        "order": _POSITIVE,
        "triplets": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {"H": _REGISTRY_BLOCK, "F": _REGISTRY_BLOCK},
            },
        },
        "variant": {"enum": ["theorem", "proof"]},
        "samples": {"type": "integer", "minimum": 100},
        "draws": {"type": "integer", "minimum": 1},
        "velocity": _REGISTRY_BLOCK,
        "bump": _BUMP,
    },
    "allOf": [
        {"if": {"properties": {"type": {"const": "sweep"}}}, "then": {"required": ["term"]}},
    ],
}

_OUTPUT = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "directory": {"type": "string"},
        "formats": {"type": "array", "items": {"enum": ["csv", "json"]}, "uniqueItems": True},
    },
}

_SETTINGS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {key: _NUMBER for key in DEFAULT_SETTINGS},
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "thinprobe scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "geometry": _GEOMETRY,
        "cgo": _CGO,
        "model": _MODEL,
        "solver": _SOLVER,
        "experiment": _EXPERIMENT,
        "output": _OUTPUT,
        "settings": _SETTINGS,
    },
}


# ============================================================================
# Validation
# ============================================================================


def _key_path(error):
    path = ".".join(str(p) for p in error.absolute_path)
    return path or "<root>"


def schema_errors(document):
    """Every schema violation as ``(dotted.key.path, message)``, sorted by path."""
    validator = Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: (_key_path(e), e.message))
    return [(_key_path(e), e.message) for e in errors]


def validate_scenario(document, source="<scenario>"):
    problems = schema_errors(document)
    if problems:
        lines = "\n".join(f"  {path}: {message}" for path, message in problems)
        raise ConfigurationError(f"{source}: {len(problems)} schema violation(s)\n{lines}")
    return document


# ============================================================================
# Loading
# ============================================================================


def _parse(path, raw):
    if path.suffix.lower() == ".toml":
        if tomllib is None:
            raise ConfigurationError(f"{path}: TOML scenarios need Python 3.11+ (tomllib)")
        try:
            return tomllib.loads(raw.decode("utf-8"))
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
            raise ConfigurationError(f"{path}: invalid TOML ({e})") from e
    try:
        return yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{path}: invalid YAML ({e})") from e


def load_scenario(path):
    """Read, hash and validate a scenario file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigurationError(f"cannot read scenario {path}: {e}") from e
    document = _parse(path, raw)
    if not isinstance(document, dict):
        raise ConfigurationError(f"{path}: a scenario must be a mapping at the top level")
    validate_scenario(document, str(path))
    logger.debug("scenario %s validated", path)
    return Scenario(document, str(path), hashlib.sha256(raw).hexdigest())


@dataclass(frozen=True)
class Scenario:
    data: dict
    source: str = "<inline>"
    digest: str = ""

    @classmethod
    def from_dict(cls, document, source="<inline>"):
        validate_scenario(document, source)
        text = yaml.safe_dump(document, sort_keys=True).encode("utf-8")
        return cls(copy.deepcopy(document), source, hashlib.sha256(text).hexdigest())

    def section(self, name):
        return self.data.get(name) or {}

    @property
    def name(self):
        return self.data.get("name") or Path(self.source).stem

    @property
    def experiment(self):
        return self.data["experiment"]

    @property
    def kind(self):
        return self.experiment["type"]

    @property
    def seed(self):
        return int(self.data.get("seed", 0))

    @property
    def settings(self):
        return dict(self.section("settings"))

    @property
    def eps_list(self):
        geometry = self.section("geometry")
        if geometry.get("eps_list"):
            return [float(e) for e in geometry["eps_list"]]
        return [float(geometry.get("eps", 0.1))]

    @property
    def eps(self):
        geometry = self.section("geometry")
        return float(geometry["eps"]) if "eps" in geometry else self.eps_list[0]

    @property
    def output_directory(self):
        return self.section("output").get("directory") or str(Path("runs") / self.name)

    @property
    def formats(self):
        return tuple(self.section("output").get("formats") or ("csv", "json"))

    def with_overrides(self, eps=None, refine=None, seed=None, output=None, jobs=None):
        """Copy with command line overrides applied (and re-validated)."""
        data = copy.deepcopy(self.data)
        if eps:
            geometry = data.setdefault("geometry", {})
            geometry["eps_list"] = [float(e) for e in eps]
            geometry["eps"] = float(eps[0])
        if refine is not None:
            data["experiment"]["refine"] = int(refine)
        if seed is not None:
            data["seed"] = int(seed)
        if output is not None:
            data.setdefault("output", {})["directory"] = str(output)
        if jobs is not None:
            data.setdefault("settings", {})["n_jobs"] = int(jobs)
        validate_scenario(data, f"{self.source} (with overrides)")
        return Scenario(data, self.source, self.digest)

    def family(self):
        """Pair family described by the geometry, cgo, model and experiment blocks."""
        geometry = self.section("geometry")
        cgo = self.section("cgo")
        model = self.section("model")
        experiment = self.experiment
        kwargs = {}
        for key in ("dim", "kind", "l", "b1"):
            if key in geometry:
                kwargs[key] = geometry[key]
        if "curve" in geometry:
            curve = geometry["curve"]
            kwargs["curve"] = {"id": curve["id"], "params": list(curve.get("params", [])), "L": curve.get("L", 1.0)}
        for key in ("lam", "mu", "case", "product_choice"):
            if key in cgo:
                kwargs[key] = cgo[key]
        if "direction" in cgo:
            kwargs["direction"] = tuple(float(v) for v in cgo["direction"])
        if "alphas" in cgo:
            kwargs["alphas"] = tuple(float(v) for v in cgo["alphas"])
        for key in ("H", "F", "base"):
            if key in model:
                kwargs[key] = dict(model[key])
        kwargs.update(model.get("pair", {}))
        for key in ("n_time", "T1", "window_scale"):
            if key in experiment:
                kwargs[key] = experiment[key]
        for key in ("counts", "point"):
            if key in experiment:
                kwargs[key] = tuple(experiment[key])
        try:
            if "family" in model:
                return make_family(model["family"], **kwargs)
            return PairFamily(**kwargs)
        except TypeError as e:
            raise ConfigurationError(f"{self.source}: cannot build the pair family ({e})") from e


__all__ = [
    "EXPERIMENTS",
    "SCENARIO_SCHEMA",
    "SOLVE_CHECKS",
    "Scenario",
    "load_scenario",
    "schema_errors",
    "validate_scenario",
]
