"""
Configurations, rotated fluxes and manufactured solution pairs.

A manufactured pair (u, v) on a probe subdomain satisfies both balance laws

    d/dt H(u) + div F'(x, t, u) = f + mu Lap u
    d/dt H(v) + div G'(x, t, v) = g + mu Lap v

identically, with w = u - v vanishing on the lateral boundary.  The second
flux is built as

    G'(x, t, z) = F'(x, t, z + w) - kappa mu grad w - c - Psi

so the flux gap F'(u) - G'(v) = kappa mu grad w + c + Psi is known in closed
form.  ``c`` is a constant offset and ``Psi = sigma x_a (e_a + g'(x_a) e_t)``
carries a source gap sigma while staying tangent to the graph faces.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .config import get_settings
from .errors import ModelError
from .fields import (
    T,
    Z,
    ClosedForm,
    along_symbol,
    graph_function,
    mapped_eta,
    space_symbols,
)
from .geometry import boundary_union
from .registry import (
    DEFAULT_HOLDER_CONSTANT,
    DEFAULT_HOLDER_EXPONENT,
    ConfigTriplet,
    FluxMap,
    SourceMap,
    advective_flux,
    make_state_map,
    velocity_field,
)

logger = logging.getLogger(__name__)

ALONG_PROFILES = ("bubble", "unit-bubble", "constant", "ramp")
TRANSVERSE_PROFILES = ("simple", "clamped", "none")
CROSS_PROFILES = ("simple", "clamped", "open")


# ============================================================================
# Rotated fluxes
# ============================================================================


@dataclass(frozen=True, eq=False)
class RotatedFlux(FluxMap):
    """F'(x', t, z) = R F(R^T x' + translation, t, z)."""

    base: FluxMap = field(default=None, repr=False)
    frame: object = field(default=None, repr=False)

    @property
    def components(self):
        return self.exprs()


def rotate_flux(F, frame):
    """Express ``F`` in the local coordinates of ``frame``."""
    if frame.dim != F.dim:
        raise ModelError(f"frame dimension {frame.dim} does not match flux dimension {F.dim}")
    R = [[sp.Float(v) for v in row] for row in frame.rotation_matrix]
    shift = [sp.Float(v) for v in frame.translation]
    n = F.dim

    def builder(x, t, z):
        xg = [sp.Add(*[R[j][i] * x[j] for j in range(n)]) + shift[i] for i in range(n)]
        fg = F.exprs(xg, t, z)
        return [sp.Add(*[R[k][i] * fg[i] for i in range(n)]) for k in range(n)]

    return RotatedFlux(
        f"rotated:{F.registry_id}",
        dict(F.params),
        n,
        F.holder_exponent,
        F.holder_constant,
        builder,
        base=F,
        frame=frame,
    )


# ============================================================================
# Manufactured sources
# ============================================================================


def mms_source(u, H, F, mu, solver_mode=False, alpha=None, C=None):
    """f = d/dt H(u) + div_x F(x, t, u) - mu Lap u for a closed-form field ``u``."""
    if solver_mode and not H.derivative_lower_bound > 0:
        raise ModelError(f"H '{H.registry_id}' has no positive derivative floor; not usable by the solver")
    x = space_symbols(u.dim)
    flux = F.exprs(x, T, u.expr)
    expr = (
        sp.diff(H.expr(u.expr), T)
        + sp.Add(*[sp.diff(fk, xk) for fk, xk in zip(flux, x)])
        - sp.Float(mu) * u.laplacian_expr
    )
    return SourceMap.manufactured(expr, u.dim, alpha, C, label=f"mms:{u.name}")


def pde_residual(cfg, u, x, t):
    """Residual of the balance law for ``cfg`` at a closed-form state ``u``.

    The flux divergence is composed numerically (div_x F + F_z . grad u) so the
    result checks the symbolic construction of the source independently.
    """
    value = u.value(x, t)
    grad = u.grad(x, t)
    dH = cfg.H.derivative(value) * u.dt(x, t)
    div = cfg.F.divergence_x(x, t, value) + np.sum(cfg.F.dz(x, t, value) * grad, axis=-1)
    return dH + div - cfg.f.value(x, t, value, grad) - cfg.mu * u.laplacian(x, t)


# ============================================================================
# Manufactured pairs
# ============================================================================


def _along_profile(name, along, length):
    ell = sp.Float(length)
    if name == "bubble":
        return along * (ell - along)
    if name == "unit-bubble":
        return 4 * along * (ell - along) / ell**2
    if name == "constant":
        return sp.Integer(1)
    if name == "ramp":
        return 1 + along / ell
    raise ModelError(f"unknown along-curve profile '{name}', expected one of {ALONG_PROFILES}")


def _transverse_profile(name, eta):
    if name == "simple":
        return eta * (1 - eta)
    if name == "clamped":
        return eta**2 * (1 - eta) ** 2
    if name == "none":
        return sp.Integer(1)
    raise ModelError(f"unknown transverse profile '{name}', expected one of {TRANSVERSE_PROFILES}")


def _cross_profile(name, xi):
    if name == "simple":
        return 4 * xi * (1 - xi)
    if name == "clamped":
        return 16 * xi**2 * (1 - xi) ** 2
    if name == "open":
        return 1 + xi / 2
    raise ModelError(f"unknown cross profile '{name}', expected one of {CROSS_PROFILES}")


@dataclass(frozen=True, eq=False)
class ManufacturedPair:
    sub: object
    H: object
    mu: float
    q: float
    u: ClosedForm
    v: ClosedForm
    w: ClosedForm
    F_prime: RotatedFlux
    G_prime: FluxMap
    f: SourceMap
    g: SourceMap
    flux_offset: np.ndarray
    source_offset: float
    options: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.sub.dim

    @property
    def config_u(self):
        return ConfigTriplet(self.H, self.F_prime, self.f, self.mu)

    @property
    def config_v(self):
        return ConfigTriplet(self.H, self.G_prime, self.g, self.mu)

    @property
    def is_zero_gap(self):
        return self.w.expr == 0 and not np.any(self.flux_offset) and self.source_offset == 0

    def h(self, x, t, normals):
        """Lateral datum d_nu w."""
        return self.w.normal_derivative(x, t, normals)

    def state_gap(self, x, t):
        return self.H.value(self.u.value(x, t)) - self.H.value(self.v.value(x, t))

    def flux_gap_vector(self, x, t):
        return self.F_prime.value(x, t, self.u.value(x, t)) - self.G_prime.value(x, t, self.v.value(x, t))

    def source_gap(self, x, t):
        fu = self.f.value(x, t, self.u.value(x, t), self.u.grad(x, t))
        gv = self.g.value(x, t, self.v.value(x, t), self.v.grad(x, t))
        return fu - gv

    def pde_residuals(self, x, t):
        return pde_residual(self.config_u, self.u, x, t), pde_residual(self.config_v, self.v, x, t)


def manufacture_identity_pair(
    sub,
    base_u,
    F,
    H,
    mu,
    q,
    psi="bubble",
    *,
    transverse="simple",
    cross="simple",
    amplitude=1.0,
    gradient_flux=True,
    flux_offset=None,
    source_offset=0.0,
    alpha=None,
    C=None,
):
    """Manufactured pair (u, v = u - w) on ``sub``.

    w = amplitude * eps^q * psi(x_a) e^(-t) P(eta) [* Q(x1/eps) in 3D], with P
    from ``transverse`` and Q from ``cross``.  ``q=None`` (or inf) gives w = 0.
    ``F`` is expressed in global coordinates and rotated into the frame of
    ``sub``; ``flux_offset`` is a constant vector in local components.
    """
    dim = sub.dim
    x = space_symbols(dim)
    along = along_symbol(sub)
    if q is None or (isinstance(q, float) and math.isinf(q)):
        w_expr = sp.Integer(0)
        q = math.inf
    else:
        if q < 0:
            raise ModelError(f"amplitude exponent q must be >= 0, got {q}")
        if cross == "open" and sub.kind != "slab":
            raise ModelError("the open cross profile leaves w nonzero on the nozzle lateral boundary")
        w_expr = (
            sp.Float(amplitude * sub.eps**q)
            * _along_profile(psi, along, sub.length)
            * sp.exp(-T)
            * _transverse_profile(transverse, mapped_eta(sub))
        )
        if dim == 3:
            w_expr = w_expr * _cross_profile(cross, x[0] / sp.Float(sub.eps))
    w = ClosedForm(w_expr, dim, "w")
    u = ClosedForm(base_u.expr, dim, "u")
    v = ClosedForm(u.expr - w_expr, dim, "v")

    F_prime = rotate_flux(F, sub.frame)
    offset = np.zeros(dim) if flux_offset is None else np.asarray(flux_offset, dtype=float)
    if offset.shape != (dim,):
        raise ModelError(f"flux offset needs {dim} components, got {offset.tolist()}")
    kappa = sp.Float(mu) if gradient_flux else sp.Integer(0)
    sigma = sp.Float(source_offset)
    g_prime = sp.diff(graph_function(sub)(along), along)
    psi_vec = [sp.Integer(0)] * dim
    psi_vec[sub.along_axis] = sigma * along
    psi_vec[sub.transverse_axis] = sigma * along * g_prime
    grad_w = w.grad_exprs
    extra = [kappa * gw + sp.Float(c) + pk for gw, c, pk in zip(grad_w, offset, psi_vec)]

    def g_builder(xx, tt, zz):
        subs = dict(zip(x + (T,), tuple(xx) + (tt,)))
        shift = w_expr.subs(subs) if subs_needed(xx, tt) else w_expr
        base = F_prime.exprs(xx, tt, zz + shift)
        moved = [e.subs(subs) if subs_needed(xx, tt) else e for e in extra]
        return [b - e for b, e in zip(base, moved)]

    def subs_needed(xx, tt):
        return tuple(xx) + (tt,) != x + (T,)

    G_prime = FluxMap(
        "manufactured-second",
        {"q": q, "gradient_flux": bool(gradient_flux)},
        dim,
        F.holder_exponent,
        F.holder_constant,
        g_builder,
    )
    f = mms_source(u, H, F_prime, mu, alpha=alpha, C=C)
    g = mms_source(v, H, G_prime, mu, alpha=alpha, C=C)
    logger.debug("manufactured pair dim=%d q=%s psi=%s transverse=%s", dim, q, psi, transverse)
    return ManufacturedPair(
        sub=sub,
        H=H,
        mu=float(mu),
        q=q,
        u=u,
        v=v,
        w=w,
        F_prime=F_prime,
        G_prime=G_prime,
        f=f,
        g=g,
        flux_offset=offset,
        source_offset=float(source_offset),
        options={
            "psi": psi,
            "transverse": transverse,
            "cross": cross,
            "amplitude": float(amplitude),
            "gradient_flux": bool(gradient_flux),
        },
    )


@dataclass(frozen=True)
class LateralReport:
    w_max: float
    h_mismatch: float
    balance_pointwise: float
    balance_integral: float
    scale: float
    tol: float = 1e-12

    @property
    def vanishing(self):
        return self.w_max <= self.tol * max(1.0, self.scale)

    @property
    def pointwise_ok(self):
        return self.balance_pointwise <= self.tol * max(1.0, self.scale)

    @property
    def integral_ok(self):
        return self.balance_integral <= 1e-10 * max(1.0, self.scale)

    @property
    def passed(self):
        """Hypotheses of the stability estimate: w = 0, d_nu w = h and integral balance."""
        return self.vanishing and self.h_mismatch <= self.tol * max(1.0, self.scale) and self.integral_ok


def check_lateral_conditions(pair, times, n=33):
    """Lateral triple at boundary quadrature nodes for every time in ``times``."""
    sub = pair.sub
    quad = boundary_union(sub, sub.lateral_labels, n)
    w_max = h_mismatch = pointwise = integral = scale = 0.0
    for t in np.atleast_1d(times):
        w = pair.w.value(quad.nodes, t)
        h = pair.h(quad.nodes, t, quad.normals)
        grad_w = pair.w.grad(quad.nodes, t)
        dnu = np.sum(grad_w * quad.normals, axis=-1)
        normal_gap = np.sum(pair.flux_gap_vector(quad.nodes, t) * quad.normals, axis=-1)
        mismatch = normal_gap - pair.mu * h
        w_max = max(w_max, float(np.max(np.abs(w))))
        h_mismatch = max(h_mismatch, float(np.max(np.abs(dnu - h))))
        pointwise = max(pointwise, float(np.max(np.abs(mismatch))))
        integral = max(integral, abs(float(np.sum(mismatch * quad.weights))) / max(quad.measure, 1e-300))
        scale = max(scale, float(np.max(np.abs(normal_gap))), float(np.max(np.abs(pair.mu * h))))
    return LateralReport(w_max, h_mismatch, pointwise, integral, scale)


# ============================================================================
# Reaction-diffusion-convection
# ============================================================================


@dataclass(frozen=True, eq=False)
class ConfigPair:
    """Two configurations compared along one shared state (local coordinates)."""

    cfg1: ConfigTriplet
    cfg2: ConfigTriplet
    state: ClosedForm
    sub: object

    def _global(self, x, t):
        frame = self.sub.frame
        xg = frame.to_global(x)
        z = self.state.value(x, t)
        grad = self.state.grad(x, t) @ frame.rotation_matrix
        return xg, z, grad

    def flux_gap_vector(self, x, t):
        xg, z, _ = self._global(x, t)
        return self.sub.frame.rotate(self.cfg1.F.value(xg, t, z) - self.cfg2.F.value(xg, t, z))

    def source_gap(self, x, t):
        xg, z, grad = self._global(x, t)
        return self.cfg1.f.value(xg, t, z, grad) - self.cfg2.f.value(xg, t, z, grad)


def rdc_to_balance(c, R, mu, dim=2, grid=21, tol=1e-8):
    """Map a reaction-diffusion-convection model to a balance law triplet.

    ``c`` is a velocity registry id, an ``(id, params)`` pair or a sequence of
    sympy expressions in x; ``R`` is a SourceMap.  The velocity must be
    divergence free on a sampled grid of [-1, 1]^dim.
    """
    if isinstance(c, str):
        velocity = velocity_field(c, None, dim)
    elif isinstance(c, tuple) and len(c) == 2 and isinstance(c[0], str):
        velocity = velocity_field(c[0], c[1], dim)
    else:
        velocity = tuple(sp.sympify(ck) for ck in c)
    if len(velocity) != dim:
        raise ModelError(f"velocity needs {dim} components, got {len(velocity)}")
    x = space_symbols(dim)
    div = sp.Add(*[sp.diff(ck, xk) for ck, xk in zip(velocity, x)])
    axes = np.meshgrid(*[np.linspace(-1.0, 1.0, grid)] * dim, indexing="ij")
    values = np.broadcast_to(sp.lambdify(x, div, modules="numpy")(*axes), axes[0].shape)
    worst = float(np.max(np.abs(values)))
    if worst > tol:
        raise ModelError(f"velocity field is compressible: max |div c| = {worst:.3g} > {tol:g}")
    H = make_state_map("identity", alpha=R.holder_exponent, C=R.holder_constant)
    F = advective_flux(velocity, dim, alpha=R.holder_exponent, C=R.holder_constant)
    return ConfigTriplet(H, F, R, float(mu))


# ============================================================================
# Admissibility
# ============================================================================


@dataclass(frozen=True)
class SampleRegion:
    lower: tuple
    upper: tuple
    t_range: tuple = (0.0, 1.0)
    z_range: tuple = (-1.0, 1.0)
    p_range: tuple = (-1.0, 1.0)

    @classmethod
    def unit(cls, dim):
        return cls((0.0,) * dim, (1.0,) * dim)

    @classmethod
    def around(cls, sub, T1, T2, z_range=(-1.0, 1.0), p_range=(-1.0, 1.0)):
        """Bounding box of a probe subdomain and its time window."""
        points, _ = sub.volume_nodes((3,) * sub.dim)
        return cls(tuple(points.min(axis=0)), tuple(points.max(axis=0)), (T1, T2), z_range, p_range)


@dataclass(frozen=True)
class HolderCheck:
    name: str
    alpha: float
    declared: float
    worst: float

    @property
    def passed(self):
        return self.worst <= self.declared * (1 + 1e-6)


@dataclass(frozen=True)
class AdmissibilityReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def _sample_pairs(rng, region, dim, samples):
    """Random point pairs plus near pairs at shrinking scales (1e-1 .. 1e-6)."""
    lo = np.asarray(region.lower, dtype=float)
    hi = np.asarray(region.upper, dtype=float)
    n_far = samples // 2
    n_near = samples - n_far

    def draw(n):
        x = lo + (hi - lo) * rng.random((n, dim))
        t = region.t_range[0] + (region.t_range[1] - region.t_range[0]) * rng.random(n)
        z = region.z_range[0] + (region.z_range[1] - region.z_range[0]) * rng.random(n)
        p = region.p_range[0] + (region.p_range[1] - region.p_range[0]) * rng.random((n, dim))
        return x, t, z, p

    a = draw(n_far + n_near)
    b = draw(n_far)
    # near-zero anchors in the state slot catch non-Hölder behaviour at z = 0
    zlo, zhi = region.z_range
    if zlo < 0 < zhi:
        k = n_near // 2
        a[2][n_far:n_far + k] = rng.choice([-1.0, 1.0], k) * 10.0 ** rng.uniform(-8, 0, k) * min(-zlo, zhi)
    scales = 10.0 ** -(1 + np.arange(n_near) % 6)
    span = np.concatenate([hi - lo, [region.t_range[1] - region.t_range[0]]])
    span = np.where(span > 0, span, 1.0)
    steps = rng.standard_normal((n_near, 2 * dim + 2))
    steps /= np.linalg.norm(steps, axis=1, keepdims=True)
    steps *= scales[:, None]
    xa, ta, za, pa = (arr[n_far:] for arr in a)
    xb = np.clip(xa + steps[:, :dim] * span[:dim], lo, hi)
    tb = np.clip(ta + np.abs(steps[:, dim]) * span[dim], region.t_range[0], region.t_range[1])
    zb = za + steps[:, dim + 1]
    pb = pa + steps[:, dim + 2:]
    second = (
        np.concatenate([b[0], xb]),
        np.concatenate([b[1], tb]),
        np.concatenate([b[2], zb]),
        np.concatenate([b[3], pb]),
    )
    return a, second


def _distance(a, b, use_x=True, use_t=True, use_p=True):
    d = np.abs(a[2] - b[2])
    if use_x:
        d = d + np.linalg.norm(a[0] - b[0], axis=-1)
    if use_t:
        d = d + np.sqrt(np.abs(a[1] - b[1]))
    if use_p:
        d = d + np.linalg.norm(a[3] - b[3], axis=-1)
    return d


def _worst_quotient(fa, fb, dist, alpha):
    ok = dist > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(fa[ok] - fb[ok]) / dist[ok] ** alpha))


def validate_admissibility(cfg, samples=None, region=None, seed=0, case="a"):
    """Sampled Hölder quotients of H, each flux component and f against the declared constants."""
    samples = get_settings().holder_samples if samples is None else int(samples)
    if samples < 100:
        raise ModelError(f"admissibility sampling needs at least 100 samples, got {samples}")
    dim = cfg.dim
    region = region or SampleRegion.unit(dim)
    rng = np.random.default_rng(seed)
    a, b = _sample_pairs(rng, region, dim, samples)
    checks = []

    dz = _distance(a, b, use_x=False, use_t=False, use_p=False)
    H = cfg.H
    checks.append(HolderCheck("H", H.holder_exponent, H.holder_constant,
                              _worst_quotient(H.value(a[2]), H.value(b[2]), dz, H.holder_exponent)))
    if case == "b":
        checks.append(HolderCheck("H_prime", H.holder_exponent, H.holder_constant,
                                  _worst_quotient(H.derivative(a[2]), H.derivative(b[2]), dz, H.holder_exponent)))

    dxtz = _distance(a, b, use_p=False)
    Fa = cfg.F.value(a[0], a[1], a[2])
    Fb = cfg.F.value(b[0], b[1], b[2])
    for k in range(dim):
        checks.append(HolderCheck(f"F_{k + 1}", cfg.F.holder_exponent, cfg.F.holder_constant,
                                  _worst_quotient(Fa[:, k], Fb[:, k], dxtz, cfg.F.holder_exponent)))

    dfull = _distance(a, b)
    fa = cfg.f.value(a[0], a[1], a[2], a[3])
    fb = cfg.f.value(b[0], b[1], b[2], b[3])
    checks.append(HolderCheck("f", cfg.f.holder_exponent, cfg.f.holder_constant,
                              _worst_quotient(fa, fb, dfull, cfg.f.holder_exponent)))
    report = AdmissibilityReport(tuple(checks))
    for c in report.failures():
        logger.warning("admissibility: %s quotient %.4g exceeds declared C = %.4g (alpha %.3g)",
                       c.name, c.worst, c.declared, c.alpha)
    return report


__all__ = [
    "DEFAULT_HOLDER_CONSTANT",
    "DEFAULT_HOLDER_EXPONENT",
    "AdmissibilityReport",
    "ConfigPair",
    "HolderCheck",
    "LateralReport",
    "ManufacturedPair",
    "RotatedFlux",
    "SampleRegion",
    "check_lateral_conditions",
    "manufacture_identity_pair",
    "mms_source",
    "pde_residual",
    "rdc_to_balance",
    "rotate_flux",
    "validate_admissibility",
]
