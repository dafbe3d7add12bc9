"""
thinprobe - numerical lab for operator identification in thin domains.

Builds thin nozzle and slab geometries around a curve, CGO probe solutions
of the backward heat operator, manufactured pairs of balance laws, and
checks the integral identity, its per-term scaling in eps and the
stability bounds on flux and source gaps.
"""

from .cgo import CgoParams, eval_cgo, make_cgo, schedule_s
from .config import Settings, get_settings, load_settings, set_settings
from .errors import (
    CheckFailed,
    ConfigurationError,
    GeometryError,
    HypothesisError,
    SolverError,
    SweepError,
    ThinProbeError,
)
from .families import PairFamily, make_family
from .geometry import Curve, Frame, ProbeSubdomain, build_curve, extract_probe_subdomain, rotation_frame
from .identity import IdentityReport, decompose_I4, eval_terms_2d, eval_terms_3d, lower_bound_check_I43, term_scaling_sweep
from .model import ManufacturedPair, manufacture_identity_pair, rdc_to_balance, rotate_flux, validate_admissibility
from .probe import ExponentTable, SweepResult, fit_slope, flux_gap, source_gap, tau1, tau_case_a, theorem_bound_check
from .quadrature import QuadRule
from .registry import ConfigTriplet, make_triplet
from .scenario import Scenario, load_scenario
from .solver import Grid2D, SpaceTimeField, make_grid, solve_forward, solve_pair_with_shared_dirichlet
from .version import __version__, get_version

__all__ = [
    "CgoParams",
    "CheckFailed",
    "ConfigTriplet",
    "ConfigurationError",
    "Curve",
    "ExponentTable",
    "Frame",
    "GeometryError",
    "Grid2D",
    "HypothesisError",
    "IdentityReport",
    "ManufacturedPair",
    "PairFamily",
    "ProbeSubdomain",
    "QuadRule",
    "Scenario",
    "Settings",
    "SolverError",
    "SpaceTimeField",
    "SweepError",
    "SweepResult",
    "ThinProbeError",
    "__version__",
    "build_curve",
    "decompose_I4",
    "eval_cgo",
    "eval_terms_2d",
    "eval_terms_3d",
    "extract_probe_subdomain",
    "fit_slope",
    "flux_gap",
    "get_settings",
    "get_version",
    "load_scenario",
    "load_settings",
    "lower_bound_check_I43",
    "make_cgo",
    "make_family",
    "make_grid",
    "make_triplet",
    "manufacture_identity_pair",
    "rdc_to_balance",
    "rotate_flux",
    "rotation_frame",
    "schedule_s",
    "set_settings",
    "solve_forward",
    "solve_pair_with_shared_dirichlet",
    "source_gap",
    "tau1",
    "tau_case_a",
    "term_scaling_sweep",
    "theorem_bound_check",
    "validate_admissibility",
]
