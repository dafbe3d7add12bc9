"""
Stability exponents, gap metrics and slope fits.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import linregress

from .cgo import alpha_product, beta_case_a, beta_case_b
from .config import call_with_settings, get_settings
from .errors import GeometryError, HypothesisError, ScheduleError, SweepError
from .model import SampleRegion, check_lateral_conditions, validate_admissibility

logger = logging.getLogger(__name__)

# Flux components entering the gap metric, per geometry
GAP_COMPONENTS = {
    (2, "nozzle"): (1,),
    (3, "nozzle"): (0, 2),
    (3, "slab"): (2,),
}


# ============================================================================
# Exponents
# ============================================================================


def tau_case_a(l, p):
    """Flux stability exponent for the alpha product ``p``."""
    if not 0 < p < 1:
        raise ScheduleError(f"exponent product must lie in (0, 1), got {p}")
    if not 0 < l < 1 + p:
        raise ScheduleError(f"l = {l} outside (0, 1 + p) = (0, {1 + p:g})")
    if l <= 1 / (1 + p):
        return p * l
    if l < 1:
        return (1 - l * (1 - p)) / 2
    return (1 - l + p) / 2


def tau1(alpha_a, alpha_b, variant="theorem"):
    """Source stability exponent a b^2 / (1 + a b).

    ``variant`` only labels the pair: (a1, a3) for the theorem statement,
    (a2, a4) for the proof.
    """
    if variant not in ("theorem", "proof"):
        raise ScheduleError(f"variant must be 'theorem' or 'proof', got {variant!r}")
    for a in (alpha_a, alpha_b):
        if not 0 < a < 1:
            raise ScheduleError(f"Hölder exponents must lie in (0, 1), got {a}")
    return alpha_a * alpha_b**2 / (1 + alpha_a * alpha_b)


@dataclass(frozen=True)
class ExponentTable:
    l: float
    p: float
    alphas: tuple
    tau_theorem: float
    tau_proof: float
    tau1_theorem: float
    tau1_proof: float
    beta_case_a: float
    beta_case_b: float

    @classmethod
    def build(cls, l, alphas, product_choice="theorem"):
        alphas = tuple(float(a) for a in alphas)
        a1, a2, a3, a4 = alphas
        p = alpha_product(alphas, product_choice)
        return cls(
            l=float(l),
            p=p,
            alphas=alphas,
            tau_theorem=tau_case_a(l, a2 * a3),
            tau_proof=tau_case_a(l, a3 * a4),
            tau1_theorem=tau1(a1, a3, "theorem"),
            tau1_proof=tau1(a2, a4, "proof"),
            beta_case_a=beta_case_a(l, p),
            beta_case_b=beta_case_b(a2, a4),
        )

    @property
    def discrepancy(self):
        """The theorem and proof alpha products differ."""
        a1, a2, a3, a4 = self.alphas
        return not math.isclose(a2 * a3, a3 * a4, rel_tol=0, abs_tol=1e-15)

    @property
    def tau1_discrepancy(self):
        return not math.isclose(self.tau1_theorem, self.tau1_proof, rel_tol=0, abs_tol=1e-15)

    def tau(self, case, variant="theorem"):
        if case == "a":
            return self.tau_theorem if variant == "theorem" else self.tau_proof
        if case == "b":
            return self.tau1_theorem if variant == "theorem" else self.tau1_proof
        raise ScheduleError(f"case must be 'a' or 'b', got {case!r}")

    def beta(self, case):
        return self.beta_case_a if case == "a" else self.beta_case_b

    def as_dict(self):
        return {
            "l": self.l,
            "p": self.p,
            "alphas": list(self.alphas),
            "tau_theorem": self.tau_theorem,
            "tau_proof": self.tau_proof,
            "tau1_theorem": self.tau1_theorem,
            "tau1_proof": self.tau1_proof,
            "beta_case_a": self.beta_case_a,
            "beta_case_b": self.beta_case_b,
            "discrepancy": self.discrepancy,
            "tau1_discrepancy": self.tau1_discrepancy,
        }


def predicted_exponent(term, l, alphas, beta, dim=2, window_exponent=1.0):
    """Decay exponent of |I_k| in eps once s = eps^(-beta) is substituted.

    The table is written for a time window of length eps; a window of length
    eps^w shifts every term by w - 1.
    """
    a1, a2, a3, a4 = alphas
    l0 = min(l, 1.0)
    b = beta
    table = {
        "I1": min(3 + l - 2 * b, 2 + l + (1 + a4) * l0 - 2 * b, 2 + a4 * l0),
        "I2": min(2 + l - b, 2 + a3 * a4 * l0),
        "I3": 2 + l,
        "I4": 2 + l - b,
        "I5": 2 + l + a1 * a4 * l0,
        "I6": 2 + l + a1 * a4 * l0,
        "I21": 2 + l - b,
        "I22": 2 + a3 * a4 * l0,
    }
    table["I7"] = table["I1"]
    table["I8"] = table["I2"]
    for k in (1, 3, 5):
        table[f"I4{k}"] = 2 + l - b
        table[f"I4{k + 1}"] = 2 + l - b + a3 * a4 * l0
    try:
        value = table[term]
    except KeyError:
        raise SweepError(f"no predicted exponent for term '{term}'") from None
    return value + (1.0 if dim == 3 else 0.0) + (window_exponent - 1.0)


# ============================================================================
# Slope fits
# ============================================================================


def fit_slope(xs, ys, floor=None):
    """Least squares (slope, intercept, r2) of log y against log x, ignoring y below ``floor``."""
    floor = get_settings().floor if floor is None else floor
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys, dtype=float))
    keep = ys >= floor
    for x, y in zip(xs[~keep], ys[~keep]):
        logger.warning("eps=%g value %.3g below floor %.1e, excluded from fit", x, y, floor)
    if np.count_nonzero(keep) < 3:
        raise SweepError(f"slope fit needs >= 3 points above the floor {floor:g}, got {np.count_nonzero(keep)}")
    fit = linregress(np.log(xs[keep]), np.log(ys[keep]))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue**2)


@dataclass(frozen=True)
class SweepResult:
    name: str
    eps: tuple
    values: tuple
    predicted: float
    slope: float
    intercept: float
    r2: float
    tolerance: float
    verdict: str
    rows: tuple = ()
    extras: dict = field(default_factory=dict)

    @classmethod
    def degenerate(cls, name, eps, values, predicted, tolerance, rows=()):
        return cls(name, tuple(eps), tuple(values), predicted, math.nan, math.nan, math.nan,
                   tolerance, "degenerate (floored)", tuple(rows))

    @property
    def passed(self):
        return self.verdict != "FAIL"

    def as_dict(self):
        return {
            "name": self.name,
            "eps": list(self.eps),
            "values": list(self.values),
            "predicted": self.predicted,
            "slope": None if math.isnan(self.slope) else self.slope,
            "intercept": None if math.isnan(self.intercept) else self.intercept,
            "r2": None if math.isnan(self.r2) else self.r2,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            **self.extras,
        }


# ============================================================================
# Gap metrics
# ============================================================================


def _at_point(pair, point):
    point = np.asarray(point, dtype=float)
    if not pair.sub.contains(point)[0]:
        raise GeometryError(f"probe point {point.tolist()} lies outside the subdomain")
    return point[None, :]


def gap_components(sub):
    return GAP_COMPONENTS[(sub.dim, sub.kind)]


def _check_geometry(pair, frame, dim, kind):
    sub = pair.sub
    if frame is not None and not (
        np.allclose(frame.rotation_matrix, sub.frame.rotation_matrix, rtol=0.0, atol=1e-14)
        and np.allclose(frame.translation, sub.frame.translation, rtol=0.0, atol=1e-14)
    ):
        raise GeometryError("frame does not match the frame of the pair's subdomain")
    if dim is not None and dim != sub.dim:
        raise GeometryError(f"dim {dim} does not match the pair's subdomain dimension {sub.dim}")
    if kind is not None and kind != sub.kind:
        raise GeometryError(f"kind '{kind}' does not match the pair's subdomain kind '{sub.kind}'")


def flux_gap(pair, frame, point, time, dim=None, kind=None):
    """Largest |F1' - F2'| over the flux components that carry the gap metric.

    ``point`` is in the local coordinates of ``frame``; ``frame``, ``dim`` and
    ``kind`` must describe the pair's own subdomain (None takes it from there).
    """
    _check_geometry(pair, frame, dim, kind)
    x = _at_point(pair, point)
    gap = pair.flux_gap_vector(x, time)[0]
    return float(max(abs(gap[k]) for k in gap_components(pair.sub)))


def source_gap(pair, point, time):
    x = _at_point(pair, point)
    return float(abs(pair.source_gap(x, time)[0]))


# ============================================================================
# Theorem-level check
# ============================================================================


def check_hypotheses(member, case, samples=None):
    """Admissibility of both configurations and the lateral conditions; raises on failure."""
    pair = member.pair
    region = SampleRegion.around(member.sub, member.T1, member.T2)
    for label, cfg in (("first", pair.config_u), ("second", pair.config_v)):
        report = validate_admissibility(cfg, samples=samples, region=region, case=case)
        if not report.passed:
            worst = report.failures()[0]
            raise HypothesisError(
                f"eps={member.eps:g}: {label} configuration fails {worst.name} "
                f"(quotient {worst.worst:.4g} > C = {worst.declared:g})"
            )
    lateral = check_lateral_conditions(pair, np.linspace(member.T1, member.T2, 3))
    if not lateral.vanishing:
        raise HypothesisError(f"eps={member.eps:g}: w does not vanish on the lateral boundary (max {lateral.w_max:.3g})")
    if not lateral.integral_ok:
        raise HypothesisError(
            f"eps={member.eps:g}: lateral flux balance violated (mismatch {lateral.balance_integral:.3g})"
        )
    return lateral


def _gap_at(family, eps, case, samples):
    member = family.member(eps)
    check_hypotheses(member, case, samples)
    if case == "a":
        gap = flux_gap(member.pair, member.sub.frame, member.point, member.t0)
    else:
        gap = source_gap(member.pair, member.point, member.t0)
    return {"eps": float(eps), "gap": gap, "s": member.schedule.s}


def theorem_bound_check(family, exponents, eps_list, case=None, variant="theorem", n_jobs=None, samples=None):
    """One-sided check gap(eps) <= C eps^tau with C fitted at the largest eps."""
    case = case or family.case
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    if len(eps_list) < 3:
        raise SweepError(f"a theorem check needs at least 3 eps values, got {len(eps_list)}")
    settings = get_settings()
    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    tau = exponents.tau(case, variant)
    rows = Parallel(n_jobs=n_jobs)(
        delayed(call_with_settings)(settings, _gap_at, family, eps, case, samples) for eps in eps_list
    )
    gaps = [r["gap"] for r in rows]
    constant = gaps[0] / eps_list[0] ** tau
    bound_holds = all(g <= constant * e**tau * (1 + 1e-9) + settings.floor for g, e in zip(gaps, eps_list))
    try:
        slope, intercept, r2 = fit_slope(eps_list, gaps)
    except SweepError:
        slope = intercept = r2 = math.nan
    tolerance = settings.theorem_slope_tolerance
    slope_ok = bool(math.isnan(slope) or slope >= tau - tolerance)
    verdict = "PASS" if bound_holds else "FAIL"
    extras = {
        "case": case,
        "tau": tau,
        "beta": exponents.beta(case),
        "constant": constant,
        "bound_holds": bound_holds,
        "slope_ok": slope_ok,
        "discrepancy": exponents.discrepancy if case == "a" else exponents.tau1_discrepancy,
    }
    return SweepResult(
        name=f"theorem case {case}",
        eps=tuple(eps_list),
        values=tuple(gaps),
        predicted=tau,
        slope=slope,
        intercept=intercept,
        r2=r2,
        tolerance=tolerance,
        verdict=verdict,
        rows=tuple(rows),
        extras=extras,
    )


def verdict_object(result):
    """Compact JSON verdict of a theorem check."""
    return {
        "case": result.extras["case"],
        "tau": result.extras["tau"],
        "beta": result.extras["beta"],
        "eps_list": list(result.eps),
        "slopes": None if math.isnan(result.slope) else result.slope,
        "bound_holds": result.extras["bound_holds"],
    }


__all__ = [
    "GAP_COMPONENTS",
    "ExponentTable",
    "SweepResult",
    "check_hypotheses",
    "fit_slope",
    "flux_gap",
    "gap_components",
    "predicted_exponent",
    "source_gap",
    "tau1",
    "tau_case_a",
    "theorem_bound_check",
    "verdict_object",
]
