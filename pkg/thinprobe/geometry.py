"""
Thin-domain geometry.

Centerline curves, the rotation frames that align a tangent with a
coordinate axis, and the eps-scale probe subdomain with its labelled
boundary pieces.

Conventions
-----------
2D probe subdomain (local coordinates)::

    D = {0 <= x1 <= eps^l,  g(x1) <= x2 <= g(x1) + eps}

    gamma_1: x2 = g(x1)        (lower graph)
    gamma_2: x1 = 0            normal (-1, 0)
    gamma_3: x2 = g(x1) + eps  (upper graph)
    gamma_4: x1 = eps^l        normal (1, 0)

3D probe subdomain: x1 in [0, eps] (cross-section), x2 in [0, eps^l]
(along the curve), x3 between g(x2) and g(x2) + eps.  ``omega_eps`` and
``omega_eps_prime`` are the x2 = 0 and x2 = eps^l ends.  The nozzle lateral
boundary ``gamma_eps`` holds the x1 faces and both graph faces; the slab
splits it into ``gamma_v`` (graph faces), ``gamma_b`` (x1 = 0) and
``gamma_f`` (x1 = eps).

Rotations are clockwise: in 2D ``R = [[cos t, sin t], [-sin t, cos t]]`` with
``t = atan2(t2, t1)`` so that ``R @ tangent`` points along +e1.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import get_settings
from .errors import GeometryError
from .quadrature import simpson_rule

logger = logging.getLogger(__name__)

CURVE_IDS = ("straight", "linear-tilt", "sine")
KINDS = ("nozzle", "slab")

_PARAM_COUNT = {"straight": 0, "linear-tilt": 1, "sine": 2}

# public label -> faces
_LABELS_2D = {
    "gamma_1": ("graph_lower",),
    "gamma_2": ("along_start",),
    "gamma_3": ("graph_upper",),
    "gamma_4": ("along_end",),
}
_LABELS_NOZZLE = {
    "gamma_eps": ("x1_lower", "x1_upper", "graph_lower", "graph_upper"),
    "omega_eps": ("along_start",),
    "omega_eps_prime": ("along_end",),
}
_LABELS_SLAB = {
    "gamma_v": ("graph_lower", "graph_upper"),
    "omega_eps": ("along_start",),
    "omega_eps_prime": ("along_end",),
    "gamma_f": ("x1_upper",),
    "gamma_b": ("x1_lower",),
}


# ============================================================================
# Curves
# ============================================================================


@dataclass(frozen=True)
class Curve:
    """Centerline curve a -> (a, y(a)), embedded as (a, 0, y(a)) in 3D.

    ``params`` are the registry coefficients: none for ``straight``,
    ``[slope]`` for ``linear-tilt`` and ``[amp, freq]`` for ``sine`` with
    ``y = amp * eps * sin(freq * a)``.
    """

    spec_id: str
    params: tuple
    eps_scale: float
    half_length: float
    amplitude_bound: float = 1.0

    @property
    def param_interval(self):
        return (-self.half_length, self.half_length)

    def profile(self, a, order=0):
        """Transverse profile y and its derivatives (``order`` 0..3)."""
        a = np.asarray(a, dtype=float)
        if self.spec_id == "straight":
            return np.zeros_like(a)
        if self.spec_id == "linear-tilt":
            slope = self.params[0]
            if order == 0:
                return slope * a
            if order == 1:
                return np.full_like(a, slope)
            return np.zeros_like(a)
        amp, freq = self.params
        return amp * self.eps_scale * freq**order * np.sin(freq * a + order * math.pi / 2)

    def amplitude(self):
        """max |y| over the parameter interval."""
        L = self.half_length
        if self.spec_id == "straight":
            return 0.0
        if self.spec_id == "linear-tilt":
            return abs(self.params[0]) * L
        amp, freq = self.params
        if abs(freq) * L >= math.pi / 2:
            return abs(amp) * self.eps_scale
        return abs(amp * self.eps_scale * math.sin(freq * L))

    def _stack(self, first, y, dim):
        first = np.broadcast_to(first, y.shape)
        if dim == 2:
            return np.stack([first, y], axis=-1)
        if dim == 3:
            return np.stack([first, np.zeros_like(y), y], axis=-1)
        raise GeometryError(f"curves embed in 2 or 3 dimensions, not {dim}")

    def eval(self, a, dim=2):
        a = np.asarray(a, dtype=float)
        return self._stack(a, self.profile(a), dim)

    def deriv(self, a, dim=2):
        a = np.asarray(a, dtype=float)
        return self._stack(np.ones_like(a), self.profile(a, 1), dim)

    def second_deriv(self, a, dim=2):
        a = np.asarray(a, dtype=float)
        return self._stack(np.zeros_like(a), self.profile(a, 2), dim)

    def third_deriv(self, a, dim=2):
        a = np.asarray(a, dtype=float)
        return self._stack(np.zeros_like(a), self.profile(a, 3), dim)

    def unit_tangent(self, a, dim=2):
        t = self.deriv(a, dim)
        return t / np.linalg.norm(t, axis=-1, keepdims=True)


def build_curve(spec_id, params, eps, L, amplitude_bound=None):
    """Build a registry curve and enforce the amplitude bound max|y| <= K*eps."""
    if spec_id not in CURVE_IDS:
        raise GeometryError(f"unknown curve '{spec_id}', expected one of {', '.join(CURVE_IDS)}")
    if not eps > 0:
        raise GeometryError(f"eps must be positive, got {eps}")
    if not L > 0:
        raise GeometryError(f"L must be positive, got {L}")
    params = tuple(float(p) for p in (params or ()))
    if len(params) != _PARAM_COUNT[spec_id]:
        raise GeometryError(
            f"curve '{spec_id}' takes {_PARAM_COUNT[spec_id]} parameters, got {len(params)}"
        )
    K = get_settings().amplitude_bound if amplitude_bound is None else float(amplitude_bound)
    curve = Curve(spec_id, params, float(eps), float(L), K)
    amplitude = curve.amplitude()
    if amplitude > K * eps * (1 + 1e-12):
        raise GeometryError(
            f"curve '{spec_id}' with params {list(params)} has transverse amplitude "
            f"{amplitude:.6g} > K*eps = {K * eps:.6g}; the centerline must stay O(eps)"
        )
    logger.debug("built %s curve params=%s eps=%g L=%g amplitude=%.3g", spec_id, params, eps, L, amplitude)
    return curve


# ============================================================================
# Frames
# ============================================================================


def _readonly(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Frame:
    """Rigid motion x_local = R (x - translation)."""

    rotation_matrix: np.ndarray
    theta: float
    rotation_beta: float
    translation: np.ndarray

    @property
    def dim(self):
        return self.translation.shape[0]

    @property
    def along_axis(self):
        return 0 if self.dim == 2 else 1

    @property
    def transverse_axis(self):
        return 1 if self.dim == 2 else 2

    def to_local(self, points):
        return (np.asarray(points, dtype=float) - self.translation) @ self.rotation_matrix.T

    def to_global(self, points):
        return np.asarray(points, dtype=float) @ self.rotation_matrix + self.translation

    def rotate(self, vectors):
        return np.asarray(vectors) @ self.rotation_matrix.T

    def orthogonality_error(self):
        R = self.rotation_matrix
        return max(
            float(np.max(np.abs(R.T @ R - np.eye(self.dim)))),
            abs(float(np.linalg.det(R)) - 1.0),
        )


def _rotation_2d(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def _rotation_3d(theta, beta):
    c, s = math.cos(theta), math.sin(theta)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array(
        [
            [cb * c, sb, -cb * s],
            [-sb * c, cb, sb * s],
            [s, 0.0, c],
        ]
    )


def frame_from_tangent(tangent, translation):
    """Frame aligning ``tangent`` with e1 (2D) or e2 (3D)."""
    tangent = np.asarray(tangent, dtype=float)
    norm = float(np.linalg.norm(tangent))
    if norm < 1e-14:
        raise GeometryError(f"degenerate tangent |gamma'| = {norm:.3g}")
    t = tangent / norm
    if t.shape == (2,):
        theta = math.atan2(t[1], t[0])
        return Frame(_readonly(_rotation_2d(theta)), theta, 0.0, _readonly(translation))
    if t.shape == (3,):
        t1, t2, t3 = t
        # third row (sin, 0, cos) must annihilate the tangent
        theta = math.atan(-t3 / t1) if t1 != 0.0 else math.pi / 2
        a = math.cos(theta) * t1 - math.sin(theta) * t3
        beta = math.atan2(-a, t2)
        return Frame(_readonly(_rotation_3d(theta, beta)), theta, beta, _readonly(translation))
    raise GeometryError(f"tangent must have 2 or 3 components, got shape {t.shape}")


def rotation_frame(curve, b1, dim=2):
    """Frame at parameter ``b1``; translation is gamma(b1)."""
    lo, hi = curve.param_interval
    if not lo < b1 < hi:
        raise GeometryError(f"b1 = {b1} outside the parameter interval ({lo}, {hi})")
    return frame_from_tangent(curve.deriv(b1, dim), curve.eval(b1, dim))


# ============================================================================
# Local graph of the rotated curve
# ============================================================================


class LocalGraph:
    """The rotated centerline as a graph over the along-axis coordinate."""

    def __init__(self, curve, frame, b1, length):
        self.curve = curve
        self.frame = frame
        self.b1 = float(b1)
        self.length = float(length)
        R = frame.rotation_matrix
        self._along = np.array(R[frame.along_axis])
        self._trans = np.array(R[frame.transverse_axis])
        self._slope0 = float(curve.deriv(b1, frame.dim) @ self._along)
        if self._slope0 <= 0:
            raise GeometryError("rotated tangent does not point along the positive axis")
        self.param_end = float(self.param_at(self.length))
        probe = np.linspace(self.b1, self.param_end, 257)
        if np.any(self._components(probe, 1)[0] <= 0):
            raise GeometryError("rotated curve is not a graph over the probe extent")

    def _components(self, a, order):
        dim = self.frame.dim
        if order == 0:
            vec = self.curve.eval(a, dim) - self.frame.translation
        else:
            vec = (self.curve.deriv, self.curve.second_deriv, self.curve.third_deriv)[order - 1](a, dim)
        return vec @ self._along, vec @ self._trans

    def param_at(self, x):
        """Parameter a whose rotated along-axis coordinate equals ``x``."""
        x = np.asarray(x, dtype=float)
        a = self.b1 + x / self._slope0
        tol = 4 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(x), initial=0.0)))
        for _ in range(50):
            along, _ = self._components(a, 0)
            residual = along - x
            if np.max(np.abs(residual), initial=0.0) <= tol:
                return a
            a = a - residual / self._components(a, 1)[0]
        raise GeometryError("local graph inversion did not converge")

    def derivatives(self, x):
        """(g, g', g'', g''') at along-axis coordinates ``x``."""
        a = self.param_at(x)
        _, T = self._components(a, 0)
        A1, T1 = self._components(a, 1)
        A2, T2 = self._components(a, 2)
        A3, T3 = self._components(a, 3)
        g1 = T1 / A1
        k = T2 * A1 - T1 * A2
        g2 = k / A1**3
        g3 = ((T3 * A1 - T1 * A3) * A1 - 3.0 * k * A2) / A1**5
        return T, g1, g2, g3

    def value(self, x):
        return self.derivatives(x)[0]

    def slope(self, x):
        return self.derivatives(x)[1]

    def curvature(self, x):
        return self.derivatives(x)[2]

    def third(self, x):
        return self.derivatives(x)[3]


# ============================================================================
# Probe subdomain
# ============================================================================


@dataclass(frozen=True)
class BoundaryPiece:
    label: str
    faces: tuple
    group: str  # lateral | end | side
    normal: tuple = None  # constant outward normal, None on curved pieces


@dataclass(frozen=True)
class CrossSection:
    """Cross-section E. 2D: the transverse band; 3D: x1 in [0, eps] times the band."""

    shape: str
    diam: float


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    label: str
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    @property
    def measure(self):
        return float(np.sum(self.weights))


@dataclass(frozen=True, eq=False)
class ProbeSubdomain:
    dim: int
    eps: float
    l: float
    origin_param: float
    frame: Frame
    kind: str
    boundary_pieces: dict
    cross_section: CrossSection
    graph: LocalGraph = field(repr=False, compare=False)

    @property
    def l0(self):
        return min(self.l, 1.0)

    @property
    def length(self):
        return self.eps**self.l

    @property
    def along_axis(self):
        return self.frame.along_axis

    @property
    def transverse_axis(self):
        return self.frame.transverse_axis

    def labels(self, group):
        return tuple(p.label for p in self.boundary_pieces.values() if p.group == group)

    @property
    def lateral_labels(self):
        return self.labels("lateral")

    @property
    def end_labels(self):
        return self.labels("end")

    @property
    def side_labels(self):
        return self.labels("side")

    def center(self):
        """Centre of the subdomain (default probe point)."""
        mid = 0.5 * self.length
        point = np.zeros(self.dim)
        point[self.along_axis] = mid
        point[self.transverse_axis] = float(self.graph.value(mid)) + 0.5 * self.eps
        if self.dim == 3:
            point[0] = 0.5 * self.eps
        return point

    def contains(self, points, tol=1e-12):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x = points[:, self.along_axis]
        y = points[:, self.transverse_axis]
        scale = tol * max(1.0, self.length)
        inside = (x >= -scale) & (x <= self.length + scale)
        g = self.graph.value(np.clip(x, 0.0, self.length))
        inside &= (y >= g - scale) & (y <= g + self.eps + scale)
        if self.dim == 3:
            inside &= (points[:, 0] >= -scale) & (points[:, 0] <= self.eps + scale)
        return inside

    def volume_nodes(self, counts):
        """Tensor Simpson nodes and weights of the subdomain.

        ``counts`` are (along, transverse) in 2D and (cross, along,
        transverse) in 3D; the transverse axis is mapped through
        x_t = g(x_along) + eps * eta (Jacobian eps).
        """
        counts = tuple(int(n) for n in counts)
        if len(counts) != self.dim:
            raise GeometryError(f"expected {self.dim} node counts, got {counts}")
        _check_count(*counts)
        xs, wx = simpson_rule(0.0, self.length, counts[-2])
        eta, we = simpson_rule(0.0, 1.0, counts[-1])
        g = self.graph.value(xs)
        along = np.repeat(xs, eta.size)
        trans = (g[:, None] + self.eps * eta[None, :]).ravel()
        weights = (wx[:, None] * we[None, :]).ravel() * self.eps
        if self.dim == 2:
            return np.stack([along, trans], axis=-1), weights
        x1, w1 = simpson_rule(0.0, self.eps, counts[0])
        m = along.size
        points = np.empty((x1.size * m, 3))
        points[:, 0] = np.repeat(x1, m)
        points[:, 1] = np.tile(along, x1.size)
        points[:, 2] = np.tile(trans, x1.size)
        return points, (w1[:, None] * weights[None, :]).ravel()

    def volume(self):
        return self.length * self.eps * (self.eps if self.dim == 3 else 1.0)


def _check_count(*counts):
    for n in counts:
        if n < 3 or n % 2 == 0:
            raise GeometryError(f"node counts must be odd and >= 3 (Simpson), got {n}")


def _boundary_pieces(dim, kind):
    if dim == 2:
        labels = _LABELS_2D
        groups = {"gamma_1": "lateral", "gamma_3": "lateral", "gamma_2": "end", "gamma_4": "end"}
        normals = {"gamma_2": (-1.0, 0.0), "gamma_4": (1.0, 0.0)}
    else:
        labels = _LABELS_NOZZLE if kind == "nozzle" else _LABELS_SLAB
        groups = {
            "gamma_eps": "lateral",
            "gamma_v": "lateral",
            "omega_eps": "end",
            "omega_eps_prime": "end",
            "gamma_f": "side",
            "gamma_b": "side",
        }
        normals = {
            "omega_eps": (0.0, -1.0, 0.0),
            "omega_eps_prime": (0.0, 1.0, 0.0),
            "gamma_b": (-1.0, 0.0, 0.0),
            "gamma_f": (1.0, 0.0, 0.0),
        }
    return {
        label: BoundaryPiece(label, faces, groups[label], normals.get(label))
        for label, faces in labels.items()
    }


def extract_probe_subdomain(curve, b1, eps, l, dim=2, kind="nozzle"):
    """Cut the eps^l-long probe subdomain starting at parameter ``b1``."""
    if dim not in (2, 3):
        raise GeometryError(f"dim must be 2 or 3, got {dim}")
    if kind not in KINDS:
        raise GeometryError(f"unknown domain kind '{kind}'")
    if kind == "slab" and dim != 3:
        raise GeometryError("slab subdomains exist only in 3D")
    if not eps > 0 or not l > 0:
        raise GeometryError(f"eps and l must be positive, got eps={eps}, l={l}")
    length = eps**l
    L = curve.half_length
    if length >= L:
        raise GeometryError(f"eps^l = {length:.6g} >= L = {L}")
    frame = rotation_frame(curve, b1, dim)
    graph = LocalGraph(curve, frame, b1, length)
    if graph.param_end > L * (1 + 1e-12):
        raise GeometryError(
            f"probe extent [{b1}, {graph.param_end:.6g}] leaves the parameter interval (-{L}, {L})"
        )
    shape = "interval" if dim == 2 else "interval-x-band"
    sub = ProbeSubdomain(
        dim=dim,
        eps=float(eps),
        l=float(l),
        origin_param=float(b1),
        frame=frame,
        kind=kind,
        boundary_pieces=_boundary_pieces(dim, kind),
        cross_section=CrossSection(shape, float(eps)),
        graph=graph,
    )
    logger.debug("probe subdomain dim=%d kind=%s eps=%g l=%g b1=%g", dim, kind, eps, l, b1)
    return sub


# ============================================================================
# Boundary quadrature
# ============================================================================


def _face_nodes(sub, face, n):
    eps, length, g = sub.eps, sub.length, sub.graph
    s, ws = simpson_rule(0.0, 1.0, n)

    if sub.dim == 2:
        if face in ("along_start", "along_end"):
            x = 0.0 if face == "along_start" else length
            g0 = float(g.value(x))
            nodes = np.stack([np.full(n, x), g0 + eps * s], axis=-1)
            sign = -1.0 if face == "along_start" else 1.0
            normals = np.tile([sign, 0.0], (n, 1))
            return nodes, normals, eps * ws
        xs, wx = simpson_rule(0.0, length, n)
        gv, g1 = g.value(xs), g.slope(xs)
        stretch = np.sqrt(1.0 + g1**2)
        if face == "graph_lower":
            nodes = np.stack([xs, gv], axis=-1)
            normals = np.stack([g1, -np.ones_like(g1)], axis=-1) / stretch[:, None]
        else:
            nodes = np.stack([xs, gv + eps], axis=-1)
            normals = np.stack([-g1, np.ones_like(g1)], axis=-1) / stretch[:, None]
        return nodes, normals, wx * stretch

    x1, w1 = simpson_rule(0.0, eps, n)
    xs, wx = simpson_rule(0.0, length, n)
    if face in ("along_start", "along_end"):
        x2 = 0.0 if face == "along_start" else length
        g0 = float(g.value(x2))
        A, E = np.meshgrid(x1, s, indexing="ij")
        nodes = np.stack([A.ravel(), np.full(A.size, x2), g0 + eps * E.ravel()], axis=-1)
        sign = -1.0 if face == "along_start" else 1.0
        normals = np.tile([0.0, sign, 0.0], (A.size, 1))
        return nodes, normals, (w1[:, None] * (eps * ws)[None, :]).ravel()
    if face in ("x1_lower", "x1_upper"):
        x1v = 0.0 if face == "x1_lower" else eps
        gv = g.value(xs)
        X2 = np.repeat(xs, n)
        X3 = (gv[:, None] + eps * s[None, :]).ravel()
        nodes = np.stack([np.full(X2.size, x1v), X2, X3], axis=-1)
        sign = -1.0 if face == "x1_lower" else 1.0
        normals = np.tile([sign, 0.0, 0.0], (X2.size, 1))
        return nodes, normals, (wx[:, None] * (eps * ws)[None, :]).ravel()
    gv, g1 = g.value(xs), g.slope(xs)
    stretch = np.sqrt(1.0 + g1**2)
    X1 = np.repeat(x1, n)
    X2 = np.tile(xs, n)
    G = np.tile(gv, n)
    G1 = np.tile(g1, n)
    S = np.tile(stretch, n)
    if face == "graph_lower":
        nodes = np.stack([X1, X2, G], axis=-1)
        normals = np.stack([np.zeros_like(G1), G1, -np.ones_like(G1)], axis=-1) / S[:, None]
    else:
        nodes = np.stack([X1, X2, G + eps], axis=-1)
        normals = np.stack([np.zeros_like(G1), -G1, np.ones_like(G1)], axis=-1) / S[:, None]
    return nodes, normals, (w1[:, None] * (wx * stretch)[None, :]).ravel()


def boundary_nodes(sub, piece, n):
    """Simpson nodes, outward unit normals and surface weights of a boundary piece.

    ``n`` is the node count per boundary axis (odd, >= 3). Curved pieces
    carry arc-length (area) weights, so ``normals * weights`` equals the
    unnormalized graph normal times the parameter measure.
    """
    if piece not in sub.boundary_pieces:
        raise GeometryError(
            f"unknown boundary piece '{piece}' for a {sub.dim}D {sub.kind} subdomain; "
            f"expected one of {sorted(sub.boundary_pieces)}"
        )
    n = int(n)
    _check_count(n)
    parts = [_face_nodes(sub, face, n) for face in sub.boundary_pieces[piece].faces]
    nodes = np.concatenate([p[0] for p in parts])
    normals = np.concatenate([p[1] for p in parts])
    weights = np.concatenate([p[2] for p in parts])
    return BoundaryQuadrature(piece, nodes, normals, weights)


def boundary_union(sub, labels, n):
    """Concatenated quadrature over several pieces."""
    parts = [boundary_nodes(sub, label, n) for label in labels]
    return BoundaryQuadrature(
        "+".join(labels),
        np.concatenate([p.nodes for p in parts]),
        np.concatenate([p.normals for p in parts]),
        np.concatenate([p.weights for p in parts]),
    )


# ============================================================================
# Tangent pairs and tiling
# ============================================================================


def parallel_tangent_pairs(curve, l, eps, tol=None, resolution=None):
    """Parameter pairs (b1, b2) with |b1 - b2| <= eps^l and parallel tangents.

    The parameter interval is sampled with spacing eps^l / resolution
    (resolution >= 32); a pair qualifies when the cross product of the unit
    tangents is at most ``tol``.
    """
    settings = get_settings()
    tol = settings.parallel_tolerance if tol is None else float(tol)
    m = settings.tangent_resolution if resolution is None else int(resolution)
    if not 0 < tol <= 1e-6:
        raise GeometryError(f"tolerance must lie in (0, 1e-6], got {tol}")
    if m < 32:
        raise GeometryError(f"sampling resolution must be >= 32 points per eps^l, got {m}")
    length = eps**l
    h = length / m
    L = curve.half_length
    count = int(math.ceil(2 * L / h - 1e-9)) - 1
    a = -L + h * np.arange(1, count + 1)
    a = a[a < L]
    t = curve.unit_tangent(a, 2)
    pairs = []
    for k in range(1, min(m, a.size - 1) + 1):
        cross = np.abs(t[:-k, 0] * t[k:, 1] - t[:-k, 1] * t[k:, 0])
        gap = a[k:] - a[:-k]
        hits = np.nonzero((cross <= tol) & (gap <= length * (1 + 1e-12)))[0]
        pairs.extend((float(a[i]), float(a[i + k])) for i in hits)
    pairs.sort()
    logger.debug("%d parallel tangent pairs on %s curve (h=%.3g)", len(pairs), curve.spec_id, h)
    return pairs


def tile_parameters(curve, eps, l):
    """Left-to-right covering of I by ceil(2L/eps^l) windows [start, end]."""
    length = eps**l
    L = curve.half_length
    count = int(math.ceil(2 * L / length - 1e-12))
    return [(-L + k * length, min(-L + (k + 1) * length, L)) for k in range(count)]
