"""
Complex geometrical optics (CGO) probe solutions.

    u0(x, t) = exp(rho . x / sqrt(mu) + lambda t),
    rho = s d + i sqrt(s^2 + lambda) d_perp,

so that rho . rho = -lambda and (d/dt + mu Laplacian) u0 = 0.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import get_settings
from .errors import CgoError, CgoOverflowError, ScheduleError

logger = logging.getLogger(__name__)

PRODUCT_CHOICES = ("theorem", "proof")


@dataclass(frozen=True, eq=False)
class CgoParams:
    s: float
    lam: float
    mu: float
    d: np.ndarray
    d_perp: np.ndarray
    rho: np.ndarray

    @property
    def dim(self):
        return self.d.shape[0]

    @property
    def rho_dot_rho(self):
        return complex(np.sum(self.rho * self.rho))

    @property
    def wave_vector(self):
        """rho / sqrt(mu), the gradient factor of u0."""
        return self.rho / math.sqrt(self.mu)


def perpendicular(d):
    """d_perp = (d2, -d1) in 2D and (d2, -d1, 0)/norm in 3D."""
    d = np.asarray(d, dtype=float)
    if d.shape == (2,):
        return np.array([d[1], -d[0]])
    if d.shape == (3,):
        v = np.array([d[1], -d[0], 0.0])
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise CgoError("direction parallel to e3 has no (d2, -d1, 0) perpendicular")
        return v / norm
    raise CgoError(f"direction must have 2 or 3 components, got shape {d.shape}")


def make_cgo(s, lam, mu, d):
    """Probe parameters for a unit direction ``d`` with strictly negative components."""
    for name, value in (("s", s), ("lambda", lam), ("mu", mu)):
        if not (np.isfinite(value) and value > 0):
            raise CgoError(f"{name} must be positive, got {value}")
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size not in (2, 3):
        raise CgoError(f"direction must have 2 or 3 components, got {d.tolist()}")
    norm = float(np.linalg.norm(d))
    if abs(norm - 1.0) > 1e-12:
        raise CgoError(f"direction must be a unit vector, |d| = {norm:.15g}")
    if np.any(d >= 0):
        raise CgoError(f"direction components must be strictly negative, got {d.tolist()}")
    d_perp = perpendicular(d)
    rho = s * d + 1j * math.sqrt(s * s + lam) * d_perp
    for array in (d, d_perp, rho):
        array.setflags(write=False)
    return CgoParams(float(s), float(lam), float(mu), d, d_perp, rho)


def _phase(p, x, t):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.dim:
        raise CgoError(f"points must have {p.dim} components, got shape {x.shape}")
    phase = x @ p.wave_vector + p.lam * np.asarray(t, dtype=float)
    limit = get_settings().overflow_limit
    worst = float(np.max(phase.real, initial=-np.inf))
    if worst > limit:
        raise CgoOverflowError(
            f"probe exponent Re(rho.x)/sqrt(mu) + lambda t = {worst:.6g} exceeds {limit:g}"
        )
    return phase


def eval_cgo(p, x, t):
    """(u0, grad u0, d/dt u0) at points ``x`` (..., n) and times ``t`` (broadcastable)."""
    u0 = np.exp(_phase(p, x, t))
    grad = p.wave_vector * u0[..., None]
    return u0, grad, p.lam * u0


def pde_residual(p, x, t, mode="analytic", h=None):
    """Residual of (d/dt + mu Laplacian) u0.

    ``analytic`` returns (lambda + rho.rho) u0, exactly zero up to roundoff;
    ``finite_difference`` uses centred differences with step ``h`` in every
    space direction and in time.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if mode == "analytic":
        u0 = np.exp(_phase(p, x, t))
        return (p.lam + p.rho_dot_rho) * u0
    if mode != "finite_difference":
        raise CgoError(f"unknown residual mode '{mode}'")
    if h is None or not h > 0:
        raise CgoError(f"finite_difference mode needs a positive step, got {h}")

    def u(xx, tt):
        return np.exp(_phase(p, xx, tt))

    centre = u(x, t)
    dt = (u(x, t + h) - u(x, t - h)) / (2 * h)
    lap = np.zeros_like(centre)
    for k in range(p.dim):
        e = np.zeros(p.dim)
        e[k] = h
        lap = lap + (u(x + e, t) - 2 * centre + u(x - e, t)) / h**2
    return dt + p.mu * lap


# ============================================================================
# s = eps^(-beta) schedules
# ============================================================================


def alpha_product(alphas, product_choice="theorem"):
    """Exponent product p: a2*a3 (theorem statement), a3*a4 (proof) or an explicit value."""
    if isinstance(product_choice, (int, float)) and not isinstance(product_choice, bool):
        return float(product_choice)
    a1, a2, a3, a4 = alphas
    if product_choice == "theorem":
        return a2 * a3
    if product_choice == "proof":
        return a3 * a4
    raise ScheduleError(f"product choice must be 'theorem', 'proof' or a number, got {product_choice!r}")


def beta_case_a(l, p):
    """Three-branch exponent; l = 1/(1+p) belongs to the first branch."""
    if not 0 < p < 1:
        raise ScheduleError(f"exponent product must lie in (0, 1), got {p}")
    if not 0 < l < 1 + p:
        raise ScheduleError(f"l = {l} outside (0, 1 + p) = (0, {1 + p:g})")
    if l <= 1 / (1 + p):
        return l
    if l < 1:
        return (1 + l * (1 - p)) / 2
    return (1 + l - p) / 2


def beta_case_b(a2, a4):
    return (1 - a2 * a4) * a4 / (1 + a2 * a4)


@dataclass(frozen=True)
class CgoSchedule:
    eps: float
    cgo_beta: float
    s: float
    case: str
    exponent_product: float


def schedule_s(eps, l, case, alpha_pack, product_choice="theorem"):
    """Schedule s = eps^(-beta) for case ``a`` or ``b``."""
    if not l > 0:
        raise ScheduleError(f"l must be positive, got {l}")
    alphas = tuple(float(a) for a in alpha_pack)
    if len(alphas) != 4 or not all(0 < a < 1 for a in alphas):
        raise ScheduleError(f"alpha pack must hold four values in (0, 1), got {list(alpha_pack)}")
    p = alpha_product(alphas, product_choice)
    if case == "a":
        beta = beta_case_a(l, p)
    elif case == "b":
        beta = beta_case_b(alphas[1], alphas[3])
    else:
        raise ScheduleError(f"case must be 'a' or 'b', got {case!r}")
    if not (beta <= l + 1e-15 and beta < 1):
        raise ScheduleError(f"beta = {beta:.6g} violates beta <= l = {l} and beta < 1")
    s = eps ** (-beta)
    cap = get_settings().max_s_eps
    if s * eps > cap:
        raise ScheduleError(f"s*eps = {s * eps:.4g} > {cap:g} at eps = {eps:g} (beta = {beta:.4g})")
    return CgoSchedule(float(eps), float(beta), float(s), case, float(p))
