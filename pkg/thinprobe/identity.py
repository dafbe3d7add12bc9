"""
Quadrature evaluation of the integral identity on a probe subdomain.

For a pair (u, v) with w = u - v and a CGO probe u0 the terms are

    I1 = mu  int int_ends (w d_nu u0 - u0 d_nu w)
    I2 =     int int_ends nu . (F'(u) - G'(v)) u0
    I3 =     int int_D    (f - g) u0
    I4 =     int int_D    (F'(u) - G'(v)) . grad u0
    I5 =     [int_D (H(u) - H(v)) u0] at T2 minus at T1
    I6 =     int int_D    lambda (w - (H(u) - H(v))) u0

and, on slabs, I7 and I8 repeat I1 and I2 over the side faces.  The
identity I1 + I2 (+ I7 + I8) = I3 + I4 - I5 - I6 holds for exact pairs, so
its residual measures quadrature error only.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .cgo import eval_cgo
from .config import call_with_settings, get_settings
from .errors import IdentityError, SweepError
from .geometry import boundary_union
from .probe import SweepResult, fit_slope, predicted_exponent
from .quadrature import QuadRule, simpson_rule
from .solver import solve_forward

logger = logging.getLogger(__name__)

TERMS_2D = ("I1", "I2", "I3", "I4", "I5", "I6")
TERMS_3D_SLAB = TERMS_2D + ("I7", "I8")
DECOMPOSITION_TERMS = ("I21", "I22", "I41", "I42", "I43", "I44", "I45", "I46")


@dataclass(frozen=True)
class IdentityReport:
    terms: dict
    residual: complex
    dim: int
    kind: str
    rule: str
    window: tuple

    @property
    def scale(self):
        return max(abs(v) for v in self.terms.values())

    @property
    def relative_residual(self):
        """Residual over max |I_k|, real and imaginary parts kept apart."""
        scale = self.scale
        if scale == 0.0:
            return complex(0.0 if self.residual == 0 else np.inf)
        return complex(self.residual.real / scale, self.residual.imag / scale)

    @property
    def relative_re(self):
        return abs(self.relative_residual.real)

    @property
    def relative_im(self):
        return abs(self.relative_residual.imag)

    @property
    def relative(self):
        return max(self.relative_re, self.relative_im)

    def as_dict(self):
        return {
            "dim": self.dim,
            "kind": self.kind,
            "rule": self.rule,
            "window": list(self.window),
            "terms": {k: {"re": v.real, "im": v.imag, "abs": abs(v)} for k, v in sorted(self.terms.items())},
            "residual": {"re": self.residual.real, "im": self.residual.imag},
            "relative_residual": {"re": self.relative_re, "im": self.relative_im},
        }


def identity_residual(terms, slab=False):
    lhs = terms["I1"] + terms["I2"]
    if slab:
        lhs = lhs + terms["I7"] + terms["I8"]
    return lhs - (terms["I3"] + terms["I4"] - terms["I5"] - terms["I6"])


# ============================================================================
# Green formula
# ============================================================================


@dataclass(frozen=True, eq=False)
class CgoField:
    """A CGO probe exposing the closed-form field interface."""

    params: object

    def value(self, x, t):
        return eval_cgo(self.params, x, t)[0]

    def grad(self, x, t):
        return eval_cgo(self.params, x, t)[1]

    def laplacian(self, x, t):
        return -self.params.lam / self.params.mu * self.value(x, t)

    def dt(self, x, t):
        return eval_cgo(self.params, x, t)[2]


@dataclass(frozen=True)
class GreenReport:
    volume: complex
    boundary: complex
    magnitude: float

    @property
    def residual(self):
        return self.volume - self.boundary

    @property
    def relative(self):
        scale = max(abs(self.volume), abs(self.boundary), self.magnitude)
        return abs(self.residual) / scale if scale > 0 else 0.0


def green_residual(fpair, sub, T1, T2, rule):
    """int int (g Lap f - f Lap g) against int int_boundary (g d_nu f - f d_nu g)."""
    f, g = fpair
    points, weights = sub.volume_nodes(rule.counts)
    quad = boundary_union(sub, tuple(sub.boundary_pieces), rule.boundary_count)
    times, tw = rule.time_nodes(T1, T2)
    volume = boundary = 0j
    magnitude = 0.0
    for t, wt in zip(times, tw):
        gf = g.value(points, t) * f.laplacian(points, t)
        fg = f.value(points, t) * g.laplacian(points, t)
        dnu_f = np.sum(f.grad(quad.nodes, t) * quad.normals, axis=-1)
        dnu_g = np.sum(g.grad(quad.nodes, t) * quad.normals, axis=-1)
        edge = g.value(quad.nodes, t) * dnu_f - f.value(quad.nodes, t) * dnu_g
        volume += wt * np.sum((gf - fg) * weights)
        magnitude += wt * np.sum((np.abs(gf) + np.abs(fg)) * weights)
        boundary += wt * np.sum(edge * quad.weights)
    return GreenReport(complex(volume), complex(boundary), float(magnitude))


# ============================================================================
# Gap samplers
# ============================================================================


class ClosedFormSampler:
    """Gap data of a closed-form pair at tensor Simpson nodes."""

    def __init__(self, pair, sub, rule, T1, T2):
        self.pair = pair
        self.sub = sub
        self.rule = rule
        self.times, self.time_weights = rule.time_nodes(T1, T2)
        self.points, self.weights = sub.volume_nodes(rule.counts)
        self.description = rule.describe()

    def volume_gaps(self, k):
        t = self.times[k]
        p = self.pair
        return {
            "w": p.w.value(self.points, t),
            "flux_gap": p.flux_gap_vector(self.points, t),
            "source_gap": p.source_gap(self.points, t),
            "state_gap": p.state_gap(self.points, t),
        }

    def boundary(self, labels):
        return boundary_union(self.sub, labels, self.rule.boundary_count)

    def boundary_gaps(self, quad, k):
        t = self.times[k]
        p = self.pair
        return {
            "w": p.w.value(quad.nodes, t),
            "dnu_w": p.w.normal_derivative(quad.nodes, t, quad.normals),
            "flux_gap": p.flux_gap_vector(quad.nodes, t),
        }


@dataclass(frozen=True, eq=False)
class SolverPair:
    """Two discrete solutions on one grid with the configurations that produced them."""

    field_u: object
    field_v: object
    cfg_u: object
    cfg_v: object

    @property
    def grid(self):
        return self.field_u.grid

    @property
    def mu(self):
        return self.cfg_u.mu


def solve_manufactured_pair(pair, grid):
    """Discrete (u, v) for a manufactured pair: each solved with its own exact data."""
    u = solve_forward(pair.config_u, grid, pair.u, pair.u)
    v = solve_forward(pair.config_v, grid, pair.v, pair.v)
    return SolverPair(u, v, pair.config_u, pair.config_v)


@dataclass(frozen=True, eq=False)
class _GridQuad:
    labels: tuple
    index: tuple
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray


class GridSampler:
    """Gap data of a solver pair at grid nodes and grid times."""

    def __init__(self, pair, T1, T2):
        self.pair = pair
        grid = pair.grid
        k1, k2 = pair.field_u.window(T1, T2)
        count = k2 - k1 + 1
        if count < 3 or count % 2 == 0:
            raise IdentityError(f"window [{T1}, {T2}] spans {count} grid times; Simpson needs an odd count >= 3")
        self.offset = k1
        self.times, self.time_weights = simpson_rule(grid.times[k1], grid.times[k2], count)
        self.points = grid.points.reshape(-1, 2)
        self.weights = grid.volume_weights().ravel()
        self.description = f"{grid.n1}x{grid.n_eta}x{count}"

    def _state(self, k):
        g = self.pair.grid
        u = self.pair.field_u.values[self.offset + k]
        v = self.pair.field_v.values[self.offset + k]
        return u, v, g.gradient(u), g.gradient(v)

    def volume_gaps(self, k):
        t = self.times[k]
        pts = self.pair.grid.points
        cu, cv = self.pair.cfg_u, self.pair.cfg_v
        u, v, gu, gv = self._state(k)
        gaps = {
            "w": u - v,
            "flux_gap": cu.F.value(pts, t, u) - cv.F.value(pts, t, v),
            "source_gap": cu.f.value(pts, t, u, gu) - cv.f.value(pts, t, v, gv),
            "state_gap": cu.H.value(u) - cv.H.value(v),
        }
        return {k_: (a.reshape(-1, 2) if a.ndim == 3 else a.ravel()) for k_, a in gaps.items()}

    def boundary(self, labels):
        g = self.pair.grid
        parts = [g.piece_indices(label) for label in labels]
        index = (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))
        return _GridQuad(
            tuple(labels),
            index,
            g.points[index],
            np.concatenate([g.piece_normals(label) for label in labels]),
            np.concatenate([g.piece_weights(label) for label in labels]),
        )

    def boundary_gaps(self, quad, k):
        t = self.times[k]
        cu, cv = self.pair.cfg_u, self.pair.cfg_v
        u, v, gu, gv = self._state(k)
        i, j = quad.index
        ub, vb = u[i, j], v[i, j]
        return {
            "w": ub - vb,
            "dnu_w": np.sum((gu[i, j] - gv[i, j]) * quad.normals, axis=-1),
            "flux_gap": cu.F.value(quad.nodes, t, ub) - cv.F.value(quad.nodes, t, vb),
        }


# ============================================================================
# Terms
# ============================================================================


def _check_probe(cgo, mu, dim):
    if cgo.dim != dim:
        raise IdentityError(f"probe direction has {cgo.dim} components, subdomain is {dim}D")
    if abs(cgo.mu - mu) > 1e-12 * max(1.0, mu):
        raise IdentityError(f"probe built for mu = {cgo.mu} but the pair diffuses with mu = {mu}")


def _boundary_terms(sampler, quad, cgo, mu):
    a = b = 0j
    for k, (t, wt) in enumerate(zip(sampler.times, sampler.time_weights)):
        u0, grad0, _ = eval_cgo(cgo, quad.nodes, t)
        dnu_u0 = np.sum(grad0 * quad.normals, axis=-1)
        gaps = sampler.boundary_gaps(quad, k)
        a += wt * mu * np.sum((gaps["w"] * dnu_u0 - u0 * gaps["dnu_w"]) * quad.weights)
        b += wt * np.sum(np.sum(gaps["flux_gap"] * quad.normals, axis=-1) * u0 * quad.weights)
    return complex(a), complex(b)


def _volume_terms(sampler, cgo):
    I3 = I4 = I6 = 0j
    bracket = []
    last = len(sampler.times) - 1
    for k, (t, wt) in enumerate(zip(sampler.times, sampler.time_weights)):
        u0, grad0, _ = eval_cgo(cgo, sampler.points, t)
        gaps = sampler.volume_gaps(k)
        vw = sampler.weights
        I3 += wt * np.sum(gaps["source_gap"] * u0 * vw)
        I4 += wt * np.sum(np.sum(gaps["flux_gap"] * grad0, axis=-1) * vw)
        I6 += wt * cgo.lam * np.sum((gaps["w"] - gaps["state_gap"]) * u0 * vw)
        if k in (0, last):
            bracket.append(np.sum(gaps["state_gap"] * u0 * vw))
    return complex(I3), complex(I4), complex(bracket[1] - bracket[0]), complex(I6)


def _evaluate(sampler, cgo, sub, mu, slab):
    terms = {}
    terms["I1"], terms["I2"] = _boundary_terms(sampler, sampler.boundary(sub.end_labels), cgo, mu)
    terms["I3"], terms["I4"], terms["I5"], terms["I6"] = _volume_terms(sampler, cgo)
    if slab:
        terms["I7"], terms["I8"] = _boundary_terms(sampler, sampler.boundary(sub.side_labels), cgo, mu)
    return terms


def default_window(sub, T1, T2=None):
    return float(T1), float(T1 + sub.eps**2 if T2 is None else T2)


def eval_terms_2d(pair, cgo, sub, T1, T2=None, rule=None):
    """I1..I6 for a closed-form pair or a SolverPair on a 2D subdomain."""
    if sub.dim != 2:
        raise IdentityError(f"eval_terms_2d needs a 2D subdomain, got {sub.dim}D")
    T1, T2 = default_window(sub, T1, T2)
    if isinstance(pair, SolverPair):
        if pair.grid.sub is not sub:
            raise IdentityError("solver pair was computed on a different subdomain")
        sampler = GridSampler(pair, T1, T2)
    else:
        sampler = ClosedFormSampler(pair, sub, rule or QuadRule((65, 65), 33), T1, T2)
    _check_probe(cgo, pair.mu, 2)
    terms = _evaluate(sampler, cgo, sub, pair.mu, slab=False)
    report = IdentityReport(terms, complex(identity_residual(terms)), 2, sub.kind, sampler.description, (T1, T2))
    logger.debug("2D identity %s residual %.3g (relative %.3g)", report.rule, abs(report.residual), report.relative)
    return report


def eval_terms_3d(pair, cgo, sub, T1, T2=None, rule=None, kind=None):
    """I1..I6 (nozzle) or I1..I8 (slab) for a closed-form 3D pair."""
    if sub.dim != 3:
        raise IdentityError(f"eval_terms_3d needs a 3D subdomain, got {sub.dim}D")
    if isinstance(pair, SolverPair):
        raise IdentityError("3D identities take manufactured pairs only; there is no 3D solver")
    kind = kind or sub.kind
    if kind != sub.kind:
        raise IdentityError(f"kind '{kind}' does not match the {sub.kind} subdomain")
    T1, T2 = default_window(sub, T1, T2)
    sampler = ClosedFormSampler(pair, sub, rule or QuadRule((33, 33, 33), 33), T1, T2)
    _check_probe(cgo, pair.mu, 3)
    slab = kind == "slab"
    terms = _evaluate(sampler, cgo, sub, pair.mu, slab=slab)
    report = IdentityReport(terms, complex(identity_residual(terms, slab)), 3, kind, sampler.description, (T1, T2))
    logger.debug("3D %s identity residual %.3g (relative %.3g)", kind, abs(report.residual), report.relative)
    return report


def eval_terms(pair, cgo, sub, T1, T2=None, rule=None):
    if sub.dim == 2:
        return eval_terms_2d(pair, cgo, sub, T1, T2, rule)
    return eval_terms_3d(pair, cgo, sub, T1, T2, rule)


# ============================================================================
# Decompositions
# ============================================================================


def _frozen_points(sub, point):
    """Freezing point per flux component: the origin along the curve, ``point`` elsewhere."""
    origin = np.zeros(sub.dim)
    return [origin if k == sub.along_axis else np.asarray(point, dtype=float) for k in range(sub.dim)]


def decompose_I4(pair, cgo, sub, T1, T2=None, rule=None, point=None, t0=None):
    """Split I4 per flux component into a frozen part and a Hölder remainder.

    Component k gives the pieces I4(2k+1) (gap frozen at a point) and
    I4(2k+2) (remainder), e.g. I41/I42 and I43/I44 in 2D.
    """
    if isinstance(pair, SolverPair):
        raise IdentityError("decompositions need closed-form gap data")
    T1, T2 = default_window(sub, T1, T2)
    rule = rule or QuadRule((65,) * sub.dim, 33)
    point = sub.center() if point is None else point
    t0 = 0.5 * (T1 + T2) if t0 is None else t0
    frozen = [float(pair.flux_gap_vector(p[None, :], t0)[0, k]) for k, p in enumerate(_frozen_points(sub, point))]
    sampler = ClosedFormSampler(pair, sub, rule, T1, T2)
    pieces = np.zeros(2 * sub.dim, dtype=complex)
    for k, (t, wt) in enumerate(zip(sampler.times, sampler.time_weights)):
        _, grad0, _ = eval_cgo(cgo, sampler.points, t)
        gap = pair.flux_gap_vector(sampler.points, t)
        for c in range(sub.dim):
            pieces[2 * c] += wt * frozen[c] * np.sum(grad0[:, c] * sampler.weights)
            pieces[2 * c + 1] += wt * np.sum((gap[:, c] - frozen[c]) * grad0[:, c] * sampler.weights)
    return {f"I4{j + 1}": complex(v) for j, v in enumerate(pieces)}


def decompose_I2(pair, cgo, sub, T1, T2=None, rule=None, t0=None):
    """I2 = I21 (along-curve flux gap frozen at the origin) + I22 (remainder)."""
    if isinstance(pair, SolverPair):
        raise IdentityError("decompositions need closed-form gap data")
    T1, T2 = default_window(sub, T1, T2)
    rule = rule or QuadRule((65,) * sub.dim, 33)
    t0 = 0.5 * (T1 + T2) if t0 is None else t0
    a = sub.along_axis
    frozen = float(pair.flux_gap_vector(np.zeros((1, sub.dim)), t0)[0, a])
    quad = boundary_union(sub, sub.end_labels, rule.boundary_count)
    times, tw = rule.time_nodes(T1, T2)
    I21 = I22 = 0j
    for t, wt in zip(times, tw):
        u0, _, _ = eval_cgo(cgo, quad.nodes, t)
        gap = np.sum(pair.flux_gap_vector(quad.nodes, t) * quad.normals, axis=-1)
        flat = frozen * quad.normals[:, a]
        I21 += wt * np.sum(flat * u0 * quad.weights)
        I22 += wt * np.sum((gap - flat) * u0 * quad.weights)
    return {"I21": complex(I21), "I22": complex(I22)}


def term_value(term, pair, cgo, sub, T1, T2=None, rule=None, point=None):
    """Any of I1..I8 or a decomposition piece."""
    if term in DECOMPOSITION_TERMS:
        if term.startswith("I2"):
            return decompose_I2(pair, cgo, sub, T1, T2, rule)[term]
        pieces = decompose_I4(pair, cgo, sub, T1, T2, rule, point)
        if term not in pieces:
            raise IdentityError(f"{term} does not exist in {sub.dim}D")
        return pieces[term]
    report = eval_terms(pair, cgo, sub, T1, T2, rule)
    if term not in report.terms:
        raise IdentityError(f"term {term} is not defined for a {sub.dim}D {sub.kind} subdomain")
    return report.terms[term]


# ============================================================================
# Sweeps
# ============================================================================


def _term_at(family, eps, term, refine):
    member = family.member(eps, refine=refine)
    value = term_value(term, member.pair, member.cgo, member.sub, member.T1, member.T2, member.rule, member.point)
    return {
        "eps": float(eps),
        "s": member.schedule.s,
        "beta": member.schedule.cgo_beta,
        "window": member.T2 - member.T1,
        "value": value,
    }


def _run(function, family, eps_list, n_jobs, *args):
    settings = get_settings()
    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    return Parallel(n_jobs=n_jobs)(
        delayed(call_with_settings)(settings, function, family, eps, *args) for eps in eps_list
    )


def _check_eps_list(eps_list, minimum=4):
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < minimum:
        raise SweepError(f"a sweep needs at least {minimum} eps values, got {len(eps_list)}")
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise SweepError(f"eps values must be positive and strictly decreasing, got {eps_list}")
    ratios = [a / b for a, b in zip(eps_list, eps_list[1:])]
    if max(ratios) > min(ratios) * (1 + 1e-6):
        raise SweepError(f"eps values must be geometrically spaced, got ratios {ratios}")
    return eps_list


def term_scaling_sweep(family, term, eps_list, refine=1, n_jobs=None, tolerance=None):
    """Fit log|I_k| against log eps and compare with the predicted exponent."""
    eps_list = _check_eps_list(eps_list)
    settings = get_settings()
    tolerance = settings.slope_tolerance if tolerance is None else tolerance
    rows = _run(_term_at, family, eps_list, n_jobs, term, refine)
    values = [abs(r["value"]) for r in rows]
    beta = rows[0]["beta"]
    predicted = predicted_exponent(term, family.l, family.alphas, beta, family.dim, family.window_exponent)
    extras = {
        "window_exponent": family.window_exponent,
        "predicted_unit_window": predicted_exponent(term, family.l, family.alphas, beta, family.dim),
    }
    name = f"{term} scaling"
    if all(v < settings.floor for v in values):
        logger.warning("%s: every value below the floor %.1e", name, settings.floor)
        return replace(SweepResult.degenerate(name, eps_list, values, predicted, tolerance, rows), extras=extras)
    slope, intercept, r2 = fit_slope(eps_list, values, settings.floor)
    return SweepResult(
        name=name,
        eps=tuple(eps_list),
        values=tuple(values),
        predicted=predicted,
        slope=slope,
        intercept=intercept,
        r2=r2,
        tolerance=tolerance,
        verdict="PASS" if slope >= predicted - tolerance else "FAIL",
        rows=tuple(rows),
        extras=extras,
    )


@dataclass(frozen=True)
class LowerBoundReport:
    eps: tuple
    ratios: tuple
    reference: float
    fraction: float
    status: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status in ("PASS", "skipped")

    def as_dict(self):
        return {
            "eps": list(self.eps),
            "ratios": list(self.ratios),
            "reference": self.reference,
            "fraction": self.fraction,
            "status": self.status,
            **self.details,
        }


def _i43_at(family, eps, refine):
    member = family.member(eps, refine=refine)
    sub = member.sub
    transverse = sub.transverse_axis
    point = member.point
    gap = float(member.pair.flux_gap_vector(np.asarray(point)[None, :], member.t0)[0, transverse])
    pieces = decompose_I4(member.pair, member.cgo, sub, member.T1, member.T2, member.rule, point, member.t0)
    name = f"I4{2 * transverse + 1}"
    norm = member.schedule.s * eps ** (1 + sub.l) * (member.T2 - member.T1)
    return {"eps": float(eps), "gap": gap, "value": abs(pieces[name]), "ratio": abs(pieces[name]) / norm}


def lower_bound_check_I43(family, eps_list, refine=1, n_jobs=None, fraction=None):
    """|I43| / (s eps^(1+l) (T2 - T1)) stays above ``fraction`` of its largest-eps value."""
    eps_list = _check_eps_list(eps_list, minimum=3)
    fraction = get_settings().lower_bound_fraction if fraction is None else fraction
    rows = _run(_i43_at, family, eps_list, n_jobs, refine)
    if all(abs(r["gap"]) < get_settings().floor for r in rows):
        logger.info("I43 lower bound skipped: no transverse flux gap at the probe point")
        return LowerBoundReport(tuple(eps_list), (), 0.0, fraction, "skipped", {"reason": "zero flux gap"})
    ratios = tuple(r["ratio"] for r in rows)
    reference = ratios[0]
    status = "PASS" if reference > 0 and all(r >= fraction * reference for r in ratios) else "FAIL"
    return LowerBoundReport(
        tuple(eps_list), ratios, reference, fraction, status, {"gaps": [r["gap"] for r in rows]}
    )


__all__ = [
    "DECOMPOSITION_TERMS",
    "TERMS_2D",
    "TERMS_3D_SLAB",
    "CgoField",
    "ClosedFormSampler",
    "GreenReport",
    "GridSampler",
    "IdentityReport",
    "LowerBoundReport",
    "SolverPair",
    "decompose_I2",
    "decompose_I4",
    "default_window",
    "eval_terms",
    "eval_terms_2d",
    "eval_terms_3d",
    "green_residual",
    "identity_residual",
    "lower_bound_check_I43",
    "solve_manufactured_pair",
    "term_scaling_sweep",
    "term_value",
]
