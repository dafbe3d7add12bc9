"""
Composite Simpson rules on intervals and their tensor products.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IdentityError


def simpson_rule(a, b, n):
    """Nodes and weights of the composite Simpson rule with ``n`` nodes on [a, b].

    ``n`` must be odd and at least 3.
    """
    n = int(n)
    if n < 3 or n % 2 == 0:
        raise IdentityError(f"Simpson rule needs an odd node count >= 3, got {n}")
    nodes = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    weights = np.full(n, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    return nodes, weights * (h / 3.0)


def refined_count(n, k):
    """Node count after refining every Simpson panel ``k`` times (stays odd)."""
    return (int(n) - 1) * int(k) + 1


@dataclass(frozen=True)
class QuadRule:
    """Tensor Simpson rule for space-time integrals over a probe subdomain.

    ``counts`` are the spatial node counts in the subdomain's axis order
    (2D: along, transverse; 3D: cross-section, along, transverse) and
    ``n_time`` the count on the time window.
    """

    counts: tuple
    n_time: int

    def __post_init__(self):
        for n in tuple(self.counts) + (self.n_time,):
            if int(n) < 3 or int(n) % 2 == 0:
                raise IdentityError(f"QuadRule counts must be odd and >= 3, got {self.counts}, {self.n_time}")
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        object.__setattr__(self, "n_time", int(self.n_time))

    @property
    def boundary_count(self):
        return max(self.counts)

    def time_nodes(self, T1, T2):
        return simpson_rule(T1, T2, self.n_time)

    def refined(self, k):
        """Rule with every axis refined ``k`` times."""
        return QuadRule(tuple(refined_count(n, k) for n in self.counts), refined_count(self.n_time, k))

    def describe(self):
        return "x".join(str(n) for n in self.counts + (self.n_time,))
