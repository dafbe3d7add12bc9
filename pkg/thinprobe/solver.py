"""
Forward solver for d/dt H(u) + div F(x, t, u) = f(x, t, u, grad u) + mu Lap u
on a 2D probe subdomain.

The subdomain is mapped to the unit-height strip through

    x1 = xi,   x2 = g(xi) + eps * eta,   0 <= xi <= eps^l,  0 <= eta <= 1

and discretized with central differences on the (xi, eta) grid.  Each step
solves for the increment of u with implicit diffusion and explicit flux and
source; a nonlinear H is then advanced and inverted node by node.
"""

import csv
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import factorized, spsolve

from .config import get_settings
from .errors import CflError, NonFiniteError, RootFindError, SolverError
from .quadrature import simpson_rule

logger = logging.getLogger(__name__)

PIECES_2D = ("gamma_1", "gamma_2", "gamma_3", "gamma_4")


# ============================================================================
# Grid
# ============================================================================


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Mapped (xi, eta) grid over a 2D probe subdomain and a time span."""

    sub: object
    n1: int
    n_eta: int
    nt: int
    t_span: tuple

    def __post_init__(self):
        if self.sub.dim != 2:
            raise SolverError("the forward solver is two-dimensional; 3D runs use manufactured fields")
        for name, n in (("n1", self.n1), ("n_eta", self.n_eta)):
            if n < 5 or n % 2 == 0:
                raise SolverError(f"{name} must be odd and >= 5, got {n}")
        if self.nt < 1:
            raise SolverError(f"nt must be >= 1, got {self.nt}")
        t0, t1 = self.t_span
        if not t1 > t0:
            raise SolverError(f"empty time span {self.t_span}")

    @property
    def eps(self):
        return self.sub.eps

    @property
    def l(self):
        return self.sub.l

    @cached_property
    def xi(self):
        return np.linspace(0.0, self.sub.length, self.n1)

    @cached_property
    def eta(self):
        return np.linspace(0.0, 1.0, self.n_eta)

    @property
    def h_xi(self):
        return self.sub.length / (self.n1 - 1)

    @property
    def h_eta(self):
        return 1.0 / (self.n_eta - 1)

    @property
    def h_min(self):
        """Smallest physical spacing (along-curve or transverse)."""
        return min(self.h_xi, self.eps * self.h_eta)

    @property
    def dt(self):
        return (self.t_span[1] - self.t_span[0]) / self.nt

    @cached_property
    def times(self):
        return self.t_span[0] + self.dt * np.arange(self.nt + 1)

    @cached_property
    def metric(self):
        """(g, g', g'') sampled at the xi nodes."""
        g, g1, g2, _ = self.sub.graph.derivatives(self.xi)
        return g, g1, g2

    @property
    def jacobian(self):
        return self.eps

    @cached_property
    def points(self):
        """Local coordinates of every node, shape (n1, n_eta, 2)."""
        g = self.metric[0]
        x1 = np.broadcast_to(self.xi[:, None], (self.n1, self.n_eta))
        x2 = g[:, None] + self.eps * self.eta[None, :]
        return np.stack([x1, x2], axis=-1)

    @cached_property
    def interior(self):
        mask = np.zeros((self.n1, self.n_eta), dtype=bool)
        mask[1:-1, 1:-1] = True
        return mask

    def gradient(self, values):
        """Physical gradient of nodal values (..., n1, n_eta) -> (..., n1, n_eta, 2).

        Second-order central differences inside, one-sided second order at
        the edges.
        """
        U_xi, U_eta = np.gradient(values, self.h_xi, self.h_eta, axis=(-2, -1), edge_order=2)
        g1 = self.metric[1][:, None]
        return np.stack([U_xi - g1 / self.eps * U_eta, U_eta / self.eps], axis=-1)

    @cached_property
    def laplacian(self):
        """Sparse mapped Laplacian; rows of boundary nodes are empty and every row sums to zero."""
        n1, ne, eps = self.n1, self.n_eta, self.eps
        hx, he = self.h_xi, self.h_eta
        _, g1, g2 = self.metric
        I, J = np.meshgrid(np.arange(1, n1 - 1), np.arange(1, ne - 1), indexing="ij")
        I, J = I.ravel(), J.ravel()
        a = np.ones_like(I, dtype=float)
        gp = g1[I]
        c_eta2 = (1.0 + gp**2) / eps**2
        c_mixed = -2.0 * gp / eps
        c_eta1 = -g2[I] / eps
        stencil = [
            (1, 0, a / hx**2),
            (-1, 0, a / hx**2),
            (0, 1, c_eta2 / he**2 + c_eta1 / (2 * he)),
            (0, -1, c_eta2 / he**2 - c_eta1 / (2 * he)),
            (1, 1, c_mixed / (4 * hx * he)),
            (-1, -1, c_mixed / (4 * hx * he)),
            (1, -1, -c_mixed / (4 * hx * he)),
            (-1, 1, -c_mixed / (4 * hx * he)),
        ]
        rows = np.ravel_multi_index((I, J), (n1, ne))
        data, r, c = [], [], []
        for di, dj, coef in stencil:
            data.append(np.broadcast_to(coef, I.shape))
            r.append(rows)
            c.append(np.ravel_multi_index((I + di, J + dj), (n1, ne)))
        # diagonal closes each row so that constants are annihilated
        data.append(-np.sum(data, axis=0))
        r.append(rows)
        c.append(rows)
        size = n1 * ne
        return sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(r), np.concatenate(c))), shape=(size, size)
        )

    def piece_indices(self, piece):
        """Index arrays (i, j) of the grid nodes on a boundary piece."""
        i_all = np.arange(self.n1)
        j_all = np.arange(self.n_eta)
        if piece == "gamma_1":
            return i_all, np.zeros_like(i_all)
        if piece == "gamma_3":
            return i_all, np.full_like(i_all, self.n_eta - 1)
        if piece == "gamma_2":
            return np.zeros_like(j_all), j_all
        if piece == "gamma_4":
            return np.full_like(j_all, self.n1 - 1), j_all
        raise SolverError(f"unknown boundary piece '{piece}', expected one of {PIECES_2D}")

    def piece_normals(self, piece):
        i, _ = self.piece_indices(piece)
        if piece == "gamma_2":
            return np.tile([-1.0, 0.0], (i.size, 1))
        if piece == "gamma_4":
            return np.tile([1.0, 0.0], (i.size, 1))
        g1 = self.metric[1][i]
        stretch = np.sqrt(1.0 + g1**2)[:, None]
        if piece == "gamma_1":
            return np.stack([g1, -np.ones_like(g1)], axis=-1) / stretch
        return np.stack([-g1, np.ones_like(g1)], axis=-1) / stretch

    def piece_weights(self, piece):
        """Simpson surface weights; arc length on the graph pieces."""
        if piece in ("gamma_2", "gamma_4"):
            return simpson_rule(0.0, self.eps, self.n_eta)[1]
        _, w = simpson_rule(0.0, self.sub.length, self.n1)
        return w * np.sqrt(1.0 + self.metric[1] ** 2)

    def volume_weights(self):
        wx = simpson_rule(0.0, self.sub.length, self.n1)[1]
        we = simpson_rule(0.0, 1.0, self.n_eta)[1]
        return wx[:, None] * we[None, :] * self.eps


def cfl_limit(grid, mu, max_speed):
    """Largest admissible time step."""
    h = grid.h_min
    bound = h**2 / mu
    if max_speed > 0:
        bound = min(bound, h / max_speed)
    return get_settings().cfl_safety * bound


def make_grid(sub, n1, n_eta, t_span, nt=None, mu=1.0, max_speed=0.0):
    """Grid over ``sub``; ``nt=None`` picks the fewest steps meeting the CFL bound."""
    if isinstance(t_span, (int, float)):
        t_span = (0.0, float(t_span))
    t_span = (float(t_span[0]), float(t_span[1]))
    if nt is None:
        probe = Grid2D(sub, n1, n_eta, 1, t_span)
        nt = int(math.ceil((t_span[1] - t_span[0]) / cfl_limit(probe, mu, max_speed) * (1 - 1e-12)))
        nt += nt % 2  # even step count keeps time windows Simpson-compatible
    return Grid2D(sub, int(n1), int(n_eta), int(nt), t_span)


# ============================================================================
# Fields and traces
# ============================================================================


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Nodal values indexed (time, xi node, eta node)."""

    values: np.ndarray
    grid: Grid2D
    name: str = "u"

    def __post_init__(self):
        shape = (self.grid.nt + 1, self.grid.n1, self.grid.n_eta)
        if self.values.shape != shape:
            raise SolverError(f"field shape {self.values.shape} does not match grid {shape}")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError(f"field '{self.name}' holds non-finite values")

    @property
    def times(self):
        return self.grid.times

    def time_index(self, t):
        k = int(round((t - self.grid.t_span[0]) / self.grid.dt))
        if k < 0 or k > self.grid.nt or abs(self.grid.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise SolverError(f"t = {t} is not a grid time of field '{self.name}'")
        return k

    def window(self, T1, T2):
        """Index range [k1, k2] of grid times covering [T1, T2]."""
        t0, t_end = self.grid.t_span
        slack = 1e-9 * max(1.0, abs(t_end))
        if T1 < t0 - slack or T2 > t_end + slack or not T2 > T1:
            raise SolverError(f"window [{T1}, {T2}] outside the solved span [{t0}, {t_end}]")
        return self.time_index(T1), self.time_index(T2)

    def gradient(self, k=None):
        return self.grid.gradient(self.values if k is None else self.values[k])

    def __sub__(self, other):
        return SpaceTimeField(self.values - other.values, self.grid, f"{self.name}-{other.name}")

    def to_csv(self, path):
        """Write (t, x1, eta, value) rows."""
        g = self.grid
        T, X, E = np.meshgrid(g.times, g.xi, g.eta, indexing="ij")
        rows = np.column_stack([T.ravel(), X.ravel(), E.ravel(), self.values.ravel()])
        np.savetxt(path, rows, delimiter=",", header="t,x1,eta,value", comments="", fmt="%.17g")
        return path

    def holder_quotient(self, alpha, k=-1, samples=None, seed=0):
        """Sampled discrete C^{1,alpha} quotient of the gradient at time index ``k``."""
        samples = get_settings().holder_samples if samples is None else int(samples)
        grad = self.gradient(k).reshape(-1, 2)
        pts = self.grid.points.reshape(-1, 2)
        rng = np.random.default_rng(seed)
        a = rng.integers(0, pts.shape[0], samples)
        b = rng.integers(0, pts.shape[0], samples)
        dist = np.linalg.norm(pts[a] - pts[b], axis=-1)
        ok = dist > 0
        if not np.any(ok):
            return 0.0
        return float(np.max(np.linalg.norm(grad[a] - grad[b], axis=-1)[ok] / dist[ok] ** alpha))


@dataclass(frozen=True, eq=False)
class MeasurementTrace:
    """Passive measurement (u, d_nu u + h_F) on one boundary piece."""

    piece: str
    times: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    u_trace: np.ndarray
    normal_derivative: np.ndarray
    h_F: np.ndarray

    @property
    def flux_trace(self):
        return self.normal_derivative + self.h_F


def boundary_measurement(field, cfg, piece, T1, T2):
    """Trace of ``field`` on ``piece`` over the grid times in [T1, T2]."""
    grid = field.grid
    k1, k2 = field.window(T1, T2)
    i, j = grid.piece_indices(piece)
    nodes = grid.points[i, j]
    normals = grid.piece_normals(piece)
    values = field.values[k1:k2 + 1]
    grad = grid.gradient(values)[:, i, j]
    u_trace = values[:, i, j]
    times = grid.times[k1:k2 + 1]
    flux = cfg.F.value(nodes[None, :, :], times[:, None], u_trace)
    return MeasurementTrace(
        piece=piece,
        times=times,
        nodes=nodes,
        normals=normals,
        weights=grid.piece_weights(piece),
        u_trace=u_trace,
        normal_derivative=np.sum(grad * normals, axis=-1),
        h_F=np.sum(flux * normals, axis=-1) / cfg.mu,
    )


# ============================================================================
# Time stepping
# ============================================================================


def _nodal(datum, points, t):
    if hasattr(datum, "value"):
        return datum.value(points, t)
    return np.broadcast_to(np.asarray(datum(points, t), dtype=float), points.shape[:-1]).copy()


def invert_state_map(H, target, guess, tol=None, maxiter=None, step=None):
    """Solve H(z) = target node by node; safeguarded Newton inside a derivative-floor bracket."""
    settings = get_settings()
    tol = settings.root_tol if tol is None else tol
    maxiter = settings.root_maxiter if maxiter is None else maxiter
    z = np.array(guess, dtype=float)
    radius = np.abs(H.value(z) - target) / H.derivative_lower_bound
    lo, hi = z - radius - tol, z + radius + tol
    scale = np.maximum(1.0, np.abs(target))
    for _ in range(maxiter):
        r = H.value(z) - target
        done = np.abs(r) <= tol * scale
        if np.all(done):
            return z
        hi = np.where(r > 0, np.minimum(hi, z), hi)
        lo = np.where(r < 0, np.maximum(lo, z), lo)
        newton = z - r / H.derivative(z)
        inside = (newton > lo) & (newton < hi)
        z = np.where(done, z, np.where(inside, newton, 0.5 * (lo + hi)))
    r = np.abs(H.value(z) - target)
    worst = int(np.argmax(r / scale))
    if r[worst] > tol * scale[worst]:
        raise RootFindError(f"H inversion residual {r[worst]:.3g} after {maxiter} iterations", step=step, node=worst)
    return z


def _explicit_rate(cfg, grid, u, t):
    """f - div_x F - F_z . grad u at every node."""
    pts = grid.points
    grad = grid.gradient(u)
    return (
        cfg.f.value(pts, t, u, grad)
        - cfg.F.divergence_x(pts, t, u)
        - np.sum(cfg.F.dz(pts, t, u) * grad, axis=-1)
    )


def _max_speed(cfg, grid, u, t):
    return float(np.max(np.linalg.norm(cfg.F.dz(grid.points, t, u), axis=-1)))


def solve_forward(cfg, grid, psi, u_init, t_span=None):
    """March ``cfg`` on ``grid`` with Dirichlet datum ``psi`` and initial state ``u_init``.

    ``psi`` and ``u_init`` are closed-form fields or callables ``(points, t)``.
    """
    if not cfg.H.derivative_lower_bound > 0:
        raise SolverError(f"H '{cfg.H.registry_id}' has no positive derivative floor")
    if t_span is not None and tuple(map(float, t_span)) != grid.t_span:
        raise SolverError(f"t_span {t_span} does not match the grid span {grid.t_span}")
    settings = get_settings()
    mu = cfg.mu
    pts = grid.points
    times = grid.times
    dt = grid.dt
    interior = grid.interior.ravel()
    boundary = ~interior

    u = _nodal(u_init, pts, times[0])
    edge = _nodal(psi, pts, times[0])
    scale = max(1.0, float(np.max(np.abs(u))))
    if np.max(np.abs(u - edge).ravel()[boundary]) > 1e-8 * scale:
        raise SolverError("boundary datum and initial state disagree on the boundary at t = 0")
    u.ravel()[boundary] = edge.ravel()[boundary]

    limit = cfl_limit(grid, mu, _max_speed(cfg, grid, u, times[0]))
    if dt > limit * (1 + 1e-12):
        raise CflError(f"dt = {dt:.4g} exceeds the stability bound {limit:.4g}", step=0)

    L = grid.laplacian
    keep = sparse.diags(interior.astype(float))
    pin = sparse.diags(boundary.astype(float))
    linear = cfg.H.is_linear
    solve = None
    out = np.empty((grid.nt + 1, grid.n1, grid.n_eta))
    out[0] = u
    logger.debug("solve_forward %dx%d nt=%d dt=%.3g linear_H=%s", grid.n1, grid.n_eta, grid.nt, dt, linear)

    for n in range(grid.nt):
        t, t_next = times[n], times[n + 1]
        if n and n % 50 == 0:
            limit = cfl_limit(grid, mu, _max_speed(cfg, grid, u, t))
            if dt > limit * (1 + 1e-12):
                raise CflError(f"dt = {dt:.4g} exceeds the stability bound {limit:.4g}", step=n)
        flat = u.ravel()
        dH = cfg.H.derivative(flat)
        rate = _explicit_rate(cfg, grid, u, t).ravel()
        # increment form: (dH/dt - mu L) delta = rate + mu L u^n inside, delta = psi - u^n on the edge
        A = (keep @ (sparse.diags(dH / dt) - mu * L) + pin).tocsc()
        Lu = L @ flat
        edge = _nodal(psi, pts, t_next).ravel()
        rhs = np.where(interior, rate + mu * Lu, edge - flat)
        if linear:
            if solve is None:
                solve = factorized(A)
            delta = solve(rhs)
        else:
            delta = spsolve(A, rhs)
        residual = np.linalg.norm(A @ delta - rhs)
        if residual > settings.linear_residual * max(1.0, np.linalg.norm(rhs)):
            raise SolverError(f"linear solve residual {residual:.3g}", step=n)
        star = flat + delta
        star[boundary] = edge[boundary]
        if linear:
            new = star
        else:
            target = cfg.H.value(flat) + dt * (rate + mu * (L @ star))
            new = star.copy()
            new[interior] = invert_state_map(cfg.H, target[interior], star[interior], step=n)
        if not np.all(np.isfinite(new)):
            raise NonFiniteError("non-finite value in the discrete solution", step=n + 1, node=int(np.argmin(np.isfinite(new))))
        u = new.reshape(grid.n1, grid.n_eta)
        out[n + 1] = u
    return SpaceTimeField(out, grid)


# ============================================================================
# Shared-datum pairs
# ============================================================================


@dataclass(frozen=True)
class PairReport:
    """Sup-norm measurement mismatches per boundary piece over the window."""

    flux_mismatch: dict
    trace_mismatch: dict
    window: tuple

    @property
    def max_flux_mismatch(self):
        return max(self.flux_mismatch.values())

    def as_dict(self):
        return {
            "flux_mismatch": dict(sorted(self.flux_mismatch.items())),
            "trace_mismatch": dict(sorted(self.trace_mismatch.items())),
            "window": list(self.window),
            "max_flux_mismatch": self.max_flux_mismatch,
        }


def solve_pair_with_shared_dirichlet(cfg1, cfg2, grid, psi, u_init, window=None, pieces=PIECES_2D):
    """Solve both configurations with one datum and compare their measurements."""
    field1 = solve_forward(cfg1, grid, psi, u_init)
    field2 = solve_forward(cfg2, grid, psi, u_init)
    T1, T2 = window or grid.t_span
    flux, trace = {}, {}
    for piece in pieces:
        m1 = boundary_measurement(field1, cfg1, piece, T1, T2)
        m2 = boundary_measurement(field2, cfg2, piece, T1, T2)
        flux[piece] = float(np.max(np.abs(m1.flux_trace - m2.flux_trace)))
        trace[piece] = float(np.max(np.abs(m1.u_trace - m2.u_trace)))
    report = PairReport(flux, trace, (float(T1), float(T2)))
    logger.debug("pair measurement mismatch %.3g", report.max_flux_mismatch)
    return field1, field2, report


def write_measurements(path, traces):
    """CSV rows (piece, t, x1, x2, u, dnu_u, h_F) for a list of traces."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["piece", "t", "x1", "x2", "u", "dnu_u", "h_f"])
        for trace in traces:
            for k, t in enumerate(trace.times):
                for m, node in enumerate(trace.nodes):
                    writer.writerow([
                        trace.piece,
                        repr(float(t)),
                        repr(float(node[0])),
                        repr(float(node[1])),
                        repr(float(trace.u_trace[k, m])),
                        repr(float(trace.normal_derivative[k, m])),
                        repr(float(trace.h_F[k, m])),
                    ])
    return path


__all__ = [
    "PIECES_2D",
    "Grid2D",
    "MeasurementTrace",
    "PairReport",
    "SpaceTimeField",
    "boundary_measurement",
    "cfl_limit",
    "invert_state_map",
    "make_grid",
    "solve_forward",
    "solve_pair_with_shared_dirichlet",
    "write_measurements",
]
