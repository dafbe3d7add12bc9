"""
Closed-form space-time fields.

Fields are sympy expressions in (x1, x2[, x3], t).  Derivatives are taken
symbolically and evaluated through ``sympy.lambdify`` on numpy arrays.  The
local graph g of a probe subdomain enters expressions as an implemented
function whose derivatives chain to the numeric derivatives of the graph.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import sympy as sp

from .errors import ModelError

X1, X2, X3, T, Z = sp.symbols("x1 x2 x3 t z", real=True)
P1, P2, P3 = sp.symbols("p1 p2 p3", real=True)

_graph_ids = itertools.count()


def space_symbols(dim):
    if dim == 2:
        return (X1, X2)
    if dim == 3:
        return (X1, X2, X3)
    raise ModelError(f"fields live in 2 or 3 dimensions, not {dim}")


def gradient_symbols(dim):
    return (P1, P2, P3)[:dim]


def _lambdify(args, expr):
    return sp.lambdify(args, expr, modules="numpy")


def _evaluate(fn, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast(x[..., 0], t).shape
    out = fn(*[x[..., k] for k in range(x.shape[-1])], t)
    return np.array(np.broadcast_to(out, shape), dtype=float)


@dataclass(frozen=True, eq=False)
class ClosedForm:
    """Scalar field u(x, t) given by a sympy expression."""

    expr: sp.Expr
    dim: int
    name: str = "u"

    @property
    def space(self):
        return space_symbols(self.dim)

    @property
    def args(self):
        return self.space + (T,)

    @cached_property
    def grad_exprs(self):
        return tuple(sp.diff(self.expr, x) for x in self.space)

    @cached_property
    def laplacian_expr(self):
        return sp.Add(*[sp.diff(self.expr, x, 2) for x in self.space])

    @cached_property
    def dt_expr(self):
        return sp.diff(self.expr, T)

    @cached_property
    def _fns(self):
        return {
            "value": _lambdify(self.args, self.expr),
            "grad": [_lambdify(self.args, g) for g in self.grad_exprs],
            "laplacian": _lambdify(self.args, self.laplacian_expr),
            "dt": _lambdify(self.args, self.dt_expr),
        }

    def value(self, x, t):
        return _evaluate(self._fns["value"], x, t)

    def grad(self, x, t):
        return np.stack([_evaluate(fn, x, t) for fn in self._fns["grad"]], axis=-1)

    def laplacian(self, x, t):
        return _evaluate(self._fns["laplacian"], x, t)

    def dt(self, x, t):
        return _evaluate(self._fns["dt"], x, t)

    def normal_derivative(self, x, t, normals):
        return np.sum(self.grad(x, t) * normals, axis=-1)

    def scaled(self, factor, name=None):
        return ClosedForm(sp.Float(factor) * self.expr, self.dim, name or self.name)

    def __sub__(self, other):
        return ClosedForm(self.expr - other.expr, self.dim, f"{self.name}-{other.name}")

    def __add__(self, other):
        return ClosedForm(self.expr + other.expr, self.dim, f"{self.name}+{other.name}")


def constant(value, dim, name="c"):
    return ClosedForm(sp.Float(value), dim, name)


# ============================================================================
# Local graph as a sympy function
# ============================================================================


def _chained_fdiff(nxt):
    def fdiff(self, argindex=1):
        return nxt(self.args[0])

    return fdiff


@lru_cache(maxsize=None)
def graph_function(sub):
    """sympy function class for the local graph g of ``sub``."""
    graph = sub.graph
    impls = (graph.value, graph.slope, graph.curvature, graph.third)
    tag = next(_graph_ids)
    classes = [
        type(f"graph{tag}_d{k}", (sp.Function,), {"nargs": 1, "_imp_": staticmethod(impl)})
        for k, impl in enumerate(impls)
    ]
    for cls, nxt in zip(classes, classes[1:]):
        cls.fdiff = _chained_fdiff(nxt)
    return classes[0]


def along_symbol(sub):
    return space_symbols(sub.dim)[sub.along_axis]


def transverse_symbol(sub):
    return space_symbols(sub.dim)[sub.transverse_axis]


def mapped_eta(sub):
    """eta = (x_t - g(x_along)) / eps, the mapped transverse coordinate."""
    g = graph_function(sub)
    return (transverse_symbol(sub) - g(along_symbol(sub))) / sp.Float(sub.eps)


# ============================================================================
# Base state catalogue
# ============================================================================


def base_field(block, sub, mu=1.0):
    """Smooth base state used to manufacture pairs and solver oracles.

    ``block`` is a mapping with ``id`` and optional parameters:

    - ``constant``: ``value``
    - ``trig-mapped``: e^(-t) sin(k x_along) cos(pi eta), ``k`` defaults to pi
    - ``mms-mapped``: e^(-t) (1 + x_along) cos(pi eta)
    - ``heat-mode``: exp(-pi^2 mu t / eps^2) sin(pi eta)
    - ``plane-wave``: ``offset`` + ``amplitude`` e^(-t) sin(k1 x1 + k2 x2)
    """
    block = dict(block)
    kind = block.pop("id")
    dim = sub.dim
    x = space_symbols(dim)
    along = along_symbol(sub)
    eta = mapped_eta(sub)
    if kind == "constant":
        expr = sp.Float(block.get("value", 1.0))
    elif kind == "trig-mapped":
        k = sp.Float(block.get("k", math.pi))
        expr = sp.exp(-T) * sp.sin(k * along) * sp.cos(sp.pi * eta)
    elif kind == "mms-mapped":
        expr = sp.exp(-T) * (1 + along) * sp.cos(sp.pi * eta)
    elif kind == "heat-mode":
        rate = sp.pi**2 * sp.Float(mu) / sp.Float(sub.eps) ** 2
        expr = sp.exp(-rate * T) * sp.sin(sp.pi * eta)
    elif kind == "plane-wave":
        k1, k2 = (sp.Float(v) for v in block.get("k", (1.0, 2.0)))
        expr = sp.Float(block.get("offset", 0.5)) + sp.Float(block.get("amplitude", 0.25)) * sp.exp(-T) * sp.sin(
            k1 * x[0] + k2 * x[1]
        )
    else:
        raise ModelError(f"unknown base field '{kind}'")
    return ClosedForm(expr, dim, kind)
