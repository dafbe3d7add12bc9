"""
Eps-indexed pair families.

A family fixes everything except eps: geometry, probe direction and
schedule, nonlinearities and the manufactured-pair recipe.  ``member(eps)``
rebuilds the curve, the probe subdomain, the pair and the CGO probe at
that scale.  Families are plain data so sweeps can ship them to worker
processes.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .cgo import make_cgo, schedule_s
from .errors import ConfigurationError
from .fields import base_field
from .geometry import build_curve, extract_probe_subdomain
from .model import manufacture_identity_pair
from .quadrature import QuadRule
from .registry import make_flux, make_state_map

logger = logging.getLogger(__name__)

SWEEP_ALPHAS = (0.9, 0.95, 0.95, 0.95)
THEOREM_ALPHAS = (0.9, 0.8, 0.625, 0.8)


@dataclass(frozen=True)
class FamilyMember:
    eps: float
    sub: object
    pair: object
    cgo: object
    schedule: object
    T1: float
    T2: float
    t0: float
    point: np.ndarray
    rule: QuadRule


@dataclass(frozen=True)
class PairFamily:
    dim: int = 2
    kind: str = "nozzle"
    curve: dict = field(default_factory=lambda: {"id": "sine", "params": [0.5, 2.0], "L": 1.0})
    b1: float = 0.0
    l: float = 1.0
    lam: float = 1.0
    mu: float = 1.0
    direction: tuple = None
    case: str = "a"
    alphas: tuple = SWEEP_ALPHAS
    product_choice: str = "theorem"
    H: dict = field(default_factory=lambda: {"id": "identity"})
    F: dict = field(default_factory=lambda: {"id": "constant-advection"})
    base: dict = field(default_factory=lambda: {"id": "plane-wave"})
    q: float = 2.0
    psi: str = "unit-bubble"
    transverse: str = "simple"
    cross: str = "simple"
    amplitude: float = 1.0
    gradient_flux: bool = True
    flux_offset: dict = None
    source_offset: dict = None
    holder_constant: float = 100.0
    counts: tuple = None
    n_time: int = 9
    T1: float = 0.0
    window_scale: float = 1.0
    point: tuple = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"family dim must be 2 or 3, got {self.dim}")
        if self.direction is None:
            d = np.full(self.dim, -1.0 / np.sqrt(self.dim))
            object.__setattr__(self, "direction", tuple(float(v) for v in d))
        if self.counts is None:
            object.__setattr__(self, "counts", (33,) * self.dim)

    @property
    def window_exponent(self):
        """Members integrate over [T1, T1 + window_scale eps^2]."""
        return 2.0

    def updated(self, **changes):
        return replace(self, **changes)

    def _offset_vector(self, eps):
        offset = self.flux_offset
        if not offset:
            return None
        vector = np.zeros(self.dim)
        vector[int(offset.get("component", self.dim - 1))] = offset.get("amplitude", 0.1) * eps ** offset.get("exponent", 0.0)
        return vector

    def _source_offset(self, eps):
        offset = self.source_offset
        if not offset:
            return 0.0
        return offset.get("amplitude", 1.0) * eps ** offset.get("exponent", 0.0)

    def member(self, eps, refine=1):
        eps = float(eps)
        a1, a2, a3, a4 = self.alphas
        curve = build_curve(self.curve["id"], self.curve.get("params"), eps, self.curve.get("L", 1.0))
        sub = extract_probe_subdomain(curve, self.b1, eps, self.l, self.dim, self.kind)
        C = self.holder_constant
        H = make_state_map(self.H["id"], self.H.get("params"), alpha=a1, C=C)
        F = make_flux(self.F["id"], self.F.get("params"), self.dim, alpha=a3, C=C)
        pair = manufacture_identity_pair(
            sub,
            base_field(self.base, sub, self.mu),
            F,
            H,
            self.mu,
            self.q,
            self.psi,
            transverse=self.transverse,
            cross=self.cross,
            amplitude=self.amplitude,
            gradient_flux=self.gradient_flux,
            flux_offset=self._offset_vector(eps),
            source_offset=self._source_offset(eps),
            alpha=a2,
            C=C,
        )
        schedule = schedule_s(eps, self.l, self.case, self.alphas, self.product_choice)
        cgo = make_cgo(schedule.s, self.lam, self.mu, self.direction)
        T1 = float(self.T1)
        T2 = T1 + self.window_scale * eps**2
        point = sub.center() if self.point is None else np.asarray(self.point, dtype=float)
        rule = QuadRule(self.counts, self.n_time)
        if refine > 1:
            rule = rule.refined(refine)
        return FamilyMember(eps, sub, pair, cgo, schedule, T1, T2, 0.5 * (T1 + T2), point, rule)


# ============================================================================
# Shipped families
# ============================================================================


def source_gap_family(**overrides):
    """O(1) constant source gap, no state gap."""
    defaults = dict(q=None, source_offset={"amplitude": 1.0, "exponent": 0.0})
    defaults.update(overrides)
    return PairFamily(**defaults)


def state_gap_family(**overrides):
    """Cubic state map with w of size eps^q (time-boundary and lambda terms)."""
    defaults = dict(H={"id": "cubic-with-floor", "params": {"delta": 0.5}}, q=1.0)
    defaults.update(overrides)
    return PairFamily(**defaults)


def flux_gap_family(delta=0.1, **overrides):
    """Constant transverse flux gap ``delta``, no state gap."""
    defaults = dict(q=None, flux_offset={"amplitude": delta, "exponent": 0.0, "component": 1})
    defaults.update(overrides)
    return PairFamily(**defaults)


def theorem_family(case, **overrides):
    """Families meeting the case a or case b hypotheses.

    Case a: flux gap 0.5 eps^0.4 along the transverse axis, l = 1/2, tau = 1/4.
    Case b: equal fluxes, clamped w of size eps^2.5 so the source gap is
    of order eps^0.5 and d_nu w = 0 on the lateral boundary.
    """
    if case == "a":
        defaults = dict(
            case="a",
            l=0.5,
            alphas=THEOREM_ALPHAS,
            q=4.0,
            psi="bubble",
            flux_offset={"amplitude": 0.5, "exponent": 0.4, "component": 1},
            holder_constant=1000.0,
        )
    elif case == "b":
        defaults = dict(
            case="b",
            l=1.0,
            alphas=THEOREM_ALPHAS,
            q=2.5,
            psi="unit-bubble",
            transverse="clamped",
            gradient_flux=False,
            holder_constant=1000.0,
        )
    else:
        raise ConfigurationError(f"case must be 'a' or 'b', got {case!r}")
    defaults.update(overrides)
    return PairFamily(**defaults)


def adversarial_family(**overrides):
    """O(1) gap with w nonzero on the lateral boundary (violates the hypotheses)."""
    defaults = dict(case="a", l=0.5, alphas=THEOREM_ALPHAS, q=0.0, psi="constant", transverse="none",
                    holder_constant=1000.0)
    defaults.update(overrides)
    return PairFamily(**defaults)


FAMILIES = {
    "source-gap": source_gap_family,
    "state-gap": state_gap_family,
    "flux-gap": flux_gap_family,
    "theorem-a": lambda **kw: theorem_family("a", **kw),
    "theorem-b": lambda **kw: theorem_family("b", **kw),
    "adversarial": adversarial_family,
}


def make_family(name, **overrides):
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise ConfigurationError(f"unknown family '{name}', expected one of {sorted(FAMILIES)}") from None
    return factory(**overrides)


__all__ = [
    "FAMILIES",
    "SWEEP_ALPHAS",
    "THEOREM_ALPHAS",
    "FamilyMember",
    "PairFamily",
    "adversarial_family",
    "flux_gap_family",
    "make_family",
    "source_gap_family",
    "state_gap_family",
    "theorem_family",
]
