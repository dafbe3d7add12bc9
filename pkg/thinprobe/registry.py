"""
Declarative nonlinearity registry.

Scenario files name members of a closed set of state maps H, fluxes F,
sources f and velocity fields c; this module turns those names into
evaluable maps carrying their declared Hölder metadata.

=====================  =========================================
H                      identity, cubic-with-floor (u^3 + delta u)
F                      zero, constant-advection, rotational-advection,
                       burgers-like, space-modulated, velocity-advection
f                      zero, logistic, gradient-quadratic
c (velocities)         constant, rotational, shear, dilating
=====================  =========================================
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import sympy as sp

from .errors import ModelError
from .fields import T, Z, gradient_symbols, space_symbols

logger = logging.getLogger(__name__)

DEFAULT_HOLDER_EXPONENT = 0.9
DEFAULT_HOLDER_CONSTANT = 100.0


def _lambdify(args, expr):
    return sp.lambdify(args, expr, modules="numpy")


def _broadcast_state(x, t, z):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    shape = np.broadcast(x[..., 0], t, z).shape
    return x, np.broadcast_to(t, shape), np.broadcast_to(z, shape), shape


def _substitute(expr, dim, x, t):
    old = space_symbols(dim) + (T,)
    new = tuple(x) + (t,)
    if old == new:
        return expr
    return expr.subs(dict(zip(old, new)))


# ============================================================================
# State maps H
# ============================================================================


@dataclass(frozen=True, eq=False)
class StateMap:
    """Scalar map z -> H(z)."""

    registry_id: str
    params: dict
    holder_exponent: float
    holder_constant: float
    derivative_lower_bound: float
    builder: Callable = field(repr=False)

    def expr(self, z=Z):
        return self.builder(z)

    @cached_property
    def _fns(self):
        e = self.expr(Z)
        return _lambdify((Z,), e), _lambdify((Z,), sp.diff(e, Z))

    @property
    def is_linear(self):
        return sp.diff(self.expr(Z), Z, 2) == 0

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return np.array(np.broadcast_to(self._fns[0](z), z.shape), dtype=float)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        return np.array(np.broadcast_to(self._fns[1](z), z.shape), dtype=float)


def _identity(params):
    return (lambda z: z), 1.0


def _cubic_with_floor(params):
    delta = params.get("delta", 0.1)
    if not delta > 0:
        raise ModelError(f"cubic-with-floor needs delta > 0, got {delta}")
    return (lambda z: z**3 + sp.Float(delta) * z), float(delta)


STATE_MAPS = {"identity": _identity, "cubic-with-floor": _cubic_with_floor}


def make_state_map(registry_id, params=None, alpha=None, C=None):
    params = dict(params or {})
    try:
        factory = STATE_MAPS[registry_id]
    except KeyError:
        raise ModelError(f"unknown H '{registry_id}', expected one of {sorted(STATE_MAPS)}") from None
    builder, h_min = factory(params)
    return StateMap(
        registry_id,
        params,
        DEFAULT_HOLDER_EXPONENT if alpha is None else float(alpha),
        DEFAULT_HOLDER_CONSTANT if C is None else float(C),
        h_min,
        builder,
    )


# ============================================================================
# Fluxes F
# ============================================================================


@dataclass(frozen=True, eq=False)
class FluxMap:
    """Vector map (x, t, z) -> F(x, t, z) in R^dim."""

    registry_id: str
    params: dict
    dim: int
    holder_exponent: float
    holder_constant: float
    builder: Callable = field(repr=False)

    def exprs(self, x=None, t=T, z=Z):
        x = space_symbols(self.dim) if x is None else tuple(x)
        return tuple(sp.sympify(e) for e in self.builder(x, t, z))

    @cached_property
    def _fns(self):
        x = space_symbols(self.dim)
        args = x + (T, Z)
        comps = self.exprs(x, T, Z)
        return {
            "value": [_lambdify(args, c) for c in comps],
            "dz": [_lambdify(args, sp.diff(c, Z)) for c in comps],
            "div": _lambdify(args, sp.Add(*[sp.diff(c, xk) for c, xk in zip(comps, x)])),
        }

    def _call(self, fn, x, t, z):
        x, t, z, shape = _broadcast_state(x, t, z)
        out = fn(*[x[..., k] for k in range(self.dim)], t, z)
        return np.array(np.broadcast_to(out, shape), dtype=float)

    def value(self, x, t, z):
        return np.stack([self._call(fn, x, t, z) for fn in self._fns["value"]], axis=-1)

    def dz(self, x, t, z):
        """Partial derivative in the state slot."""
        return np.stack([self._call(fn, x, t, z) for fn in self._fns["dz"]], axis=-1)

    def divergence_x(self, x, t, z):
        """Divergence in x with the state slot held fixed."""
        return self._call(self._fns["div"], x, t, z)


def _flux_zero(params, dim):
    return lambda x, t, z: [sp.Integer(0)] * dim


def _flux_constant(params, dim):
    velocity = [sp.Float(v) for v in params.get("velocity", [1.0] + [0.0] * (dim - 1))]
    if len(velocity) != dim:
        raise ModelError(f"constant-advection velocity needs {dim} components, got {len(velocity)}")
    return lambda x, t, z: [v * z for v in velocity]


def _flux_rotational(params, dim):
    omega = sp.Float(params.get("omega", 1.0))
    return lambda x, t, z: [-omega * x[1] * z, omega * x[0] * z] + [sp.Integer(0)] * (dim - 2)


def _flux_burgers(params, dim):
    scale = sp.Float(params.get("scale", 1.0))
    return lambda x, t, z: [scale * z**2 / 2] + [sp.Integer(0)] * (dim - 1)


def _flux_space_modulated(params, dim):
    amp = sp.Float(params.get("amplitude", 0.5))
    k = sp.Float(params.get("k", 2.0))
    return lambda x, t, z: [(1 + amp * sp.sin(k * x[1])) * z] + [sp.Integer(0)] * (dim - 1)


FLUXES = {
    "zero": _flux_zero,
    "constant-advection": _flux_constant,
    "rotational-advection": _flux_rotational,
    "burgers-like": _flux_burgers,
    "space-modulated": _flux_space_modulated,
}


def make_flux(registry_id, params=None, dim=2, alpha=None, C=None):
    params = dict(params or {})
    try:
        factory = FLUXES[registry_id]
    except KeyError:
        raise ModelError(f"unknown F '{registry_id}', expected one of {sorted(FLUXES)}") from None
    return FluxMap(
        registry_id,
        params,
        dim,
        DEFAULT_HOLDER_EXPONENT if alpha is None else float(alpha),
        DEFAULT_HOLDER_CONSTANT if C is None else float(C),
        factory(params, dim),
    )


# ============================================================================
# Sources f
# ============================================================================


@dataclass(frozen=True, eq=False)
class SourceMap:
    """Scalar map (x, t, z, p) -> f, p standing for the gradient slot."""

    registry_id: str
    params: dict
    dim: int
    holder_exponent: float
    holder_constant: float
    builder: Callable = field(repr=False)

    def expr(self, x=None, t=T, z=Z, p=None):
        x = space_symbols(self.dim) if x is None else tuple(x)
        p = gradient_symbols(self.dim) if p is None else tuple(p)
        return sp.sympify(self.builder(x, t, z, p))

    @cached_property
    def _fn(self):
        x = space_symbols(self.dim)
        p = gradient_symbols(self.dim)
        return _lambdify(x + (T, Z) + p, self.expr(x, T, Z, p))

    @property
    def depends_on_state(self):
        e = self.expr()
        return bool(e.free_symbols & ({Z} | set(gradient_symbols(self.dim))))

    def value(self, x, t, z=0.0, grad=None):
        x, t, z, shape = _broadcast_state(x, t, z)
        if grad is None:
            grad = np.zeros(shape + (self.dim,))
        grad = np.broadcast_to(np.asarray(grad, dtype=float), shape + (self.dim,))
        out = self._fn(*[x[..., k] for k in range(self.dim)], t, z, *[grad[..., k] for k in range(self.dim)])
        return np.array(np.broadcast_to(out, shape), dtype=float)

    def perturbed(self, amplitude, center, radius):
        """This source plus ``amplitude`` times the bump (1 - r^2)^3 on |x - center| < radius."""
        center = [sp.Float(c) for c in center]
        radius = sp.Float(radius)
        base = self.builder

        def builder(x, t, z, p):
            r2 = sp.Add(*[(xk - ck) ** 2 for xk, ck in zip(x, center)]) / radius**2
            bump = sp.Piecewise(((1 - r2) ** 3, r2 < 1), (0, True))
            return base(x, t, z, p) + sp.Float(amplitude) * bump

        params = dict(self.params, bump={"amplitude": float(amplitude), "center": [float(c) for c in center], "radius": float(radius)})
        return SourceMap(f"{self.registry_id}+bump", params, self.dim, self.holder_exponent, self.holder_constant, builder)

    @classmethod
    def manufactured(cls, expr, dim, alpha=None, C=None, label="manufactured"):
        """Source given as a closed form in (x, t) only."""
        return cls(
            label,
            {},
            dim,
            DEFAULT_HOLDER_EXPONENT if alpha is None else float(alpha),
            DEFAULT_HOLDER_CONSTANT if C is None else float(C),
            lambda x, t, z, p: _substitute(expr, dim, x, t),
        )


def _source_zero(params):
    return lambda x, t, z, p: sp.Integer(0)


def _source_logistic(params):
    rate = sp.Float(params.get("rate", 1.0))
    return lambda x, t, z, p: rate * z * (1 - z)


def _source_gradient_quadratic(params):
    kappa = sp.Float(params.get("kappa", 1.0))
    return lambda x, t, z, p: kappa * sp.Add(*[pk**2 for pk in p])


SOURCES = {
    "zero": _source_zero,
    "logistic": _source_logistic,
    "gradient-quadratic": _source_gradient_quadratic,
}


def make_source(registry_id, params=None, dim=2, alpha=None, C=None):
    params = dict(params or {})
    try:
        factory = SOURCES[registry_id]
    except KeyError:
        raise ModelError(f"unknown f '{registry_id}', expected one of {sorted(SOURCES)}") from None
    source = SourceMap(
        registry_id,
        params,
        dim,
        DEFAULT_HOLDER_EXPONENT if alpha is None else float(alpha),
        DEFAULT_HOLDER_CONSTANT if C is None else float(C),
        factory(params),
    )
    bump = params.get("bump")
    if bump:
        source = source.perturbed(bump["amplitude"], bump["center"], bump["radius"])
    return source


# ============================================================================
# Velocity fields (reaction-diffusion-convection)
# ============================================================================


def velocity_field(registry_id, params=None, dim=2):
    """Velocity c(x) as a tuple of sympy expressions."""
    params = dict(params or {})
    x = space_symbols(dim)
    zero = [sp.Integer(0)] * (dim - 2)
    if registry_id == "constant":
        velocity = params.get("velocity", [1.0] + [0.0] * (dim - 1))
        if len(velocity) != dim:
            raise ModelError(f"constant velocity needs {dim} components")
        return tuple(sp.Float(v) for v in velocity)
    if registry_id == "rotational":
        omega = sp.Float(params.get("omega", 1.0))
        return (-omega * x[1], omega * x[0], *zero)
    if registry_id == "shear":
        rate = sp.Float(params.get("rate", 1.0))
        return (rate * x[1], sp.Integer(0), *zero)
    if registry_id == "dilating":
        rate = sp.Float(params.get("rate", 1.0))
        return (rate * x[0], sp.Integer(0), *zero)
    raise ModelError(f"unknown velocity field '{registry_id}'")


def advective_flux(velocity, dim, alpha=None, C=None, label="velocity-advection"):
    """Flux c(x) u for a velocity given as sympy expressions in x."""
    velocity = tuple(sp.sympify(c) for c in velocity)
    x0 = space_symbols(dim)

    def builder(x, t, z):
        subs = dict(zip(x0, x))
        return [c.subs(subs) * z for c in velocity]

    return FluxMap(
        label,
        {"velocity": [str(c) for c in velocity]},
        dim,
        DEFAULT_HOLDER_EXPONENT if alpha is None else float(alpha),
        DEFAULT_HOLDER_CONSTANT if C is None else float(C),
        builder,
    )


@dataclass(frozen=True, eq=False)
class ConfigTriplet:
    """One admissible configuration (H, F, f) with diffusion mu."""

    H: StateMap
    F: FluxMap
    f: SourceMap
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ModelError(f"mu must be positive, got {self.mu}")
        if self.F.dim != self.f.dim:
            raise ModelError(f"flux dimension {self.F.dim} does not match source dimension {self.f.dim}")

    @property
    def dim(self):
        return self.F.dim

    def describe(self):
        return {
            "H": {"id": self.H.registry_id, "params": self.H.params, "alpha": self.H.holder_exponent},
            "F": {"id": self.F.registry_id, "params": self.F.params, "alpha": self.F.holder_exponent},
            "f": {"id": self.f.registry_id, "params": self.f.params, "alpha": self.f.holder_exponent},
            "mu": self.mu,
        }


def make_triplet(config, dim=2):
    """ConfigTriplet from a scenario ``model`` mapping with H, F, f and mu blocks."""

    def block(name, default):
        b = dict(config.get(name) or {"id": default})
        return b.get("id", default), b.get("params"), b.get("alpha"), b.get("C")

    hid, hp, ha, hc = block("H", "identity")
    fid, fp, fa, fc = block("F", "zero")
    sid, sp_, sa, sc = block("f", "zero")
    return ConfigTriplet(
        make_state_map(hid, hp, ha, hc),
        make_flux(fid, fp, dim, fa, fc),
        make_source(sid, sp_, dim, sa, sc),
        float(config.get("mu", 1.0)),
    )
