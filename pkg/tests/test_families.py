"""
Test the eps-indexed pair families.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from thinprobe.errors import ConfigurationError
from thinprobe.families import (
    FAMILIES,
    SWEEP_ALPHAS,
    THEOREM_ALPHAS,
    PairFamily,
    make_family,
    theorem_family,
)


def test_default_member():
    member = PairFamily().member(0.1)
    assert member.sub.eps == 0.1
    assert member.sub.dim == 2
    assert member.T2 - member.T1 == pytest.approx(0.01)
    assert member.t0 == pytest.approx(0.005)
    assert member.rule.counts == (33, 33)
    assert member.cgo.mu == 1.0
    assert member.schedule.s == pytest.approx(0.1 ** -member.schedule.cgo_beta)
    np.testing.assert_allclose(member.point, member.sub.center())


def test_member_refinement():
    member = PairFamily(counts=(17, 17), n_time=9).member(0.1, refine=2)
    assert member.rule.counts == (33, 33)
    assert member.rule.n_time == 17


def test_default_direction_is_unit():
    for dim in (2, 3):
        family = PairFamily(dim=dim)
        assert np.linalg.norm(family.direction) == pytest.approx(1.0)
        assert family.counts == (33,) * dim


def test_family_rejects_bad_dim():
    with pytest.raises(ConfigurationError):
        PairFamily(dim=4)


def test_updated_keeps_other_fields():
    family = PairFamily(l=0.5).updated(q=3.0)
    assert family.l == 0.5
    assert family.q == 3.0


def test_shipped_families():
    assert set(FAMILIES) == {"source-gap", "state-gap", "flux-gap", "theorem-a", "theorem-b", "adversarial"}
    assert make_family("state-gap").H["id"] == "cubic-with-floor"
    assert make_family("source-gap").alphas == SWEEP_ALPHAS
    assert make_family("theorem-b", n_time=5).n_time == 5
    with pytest.raises(ConfigurationError, match="unknown family"):
        make_family("nope")


def test_theorem_families():
    a = theorem_family("a")
    assert (a.case, a.l, a.alphas) == ("a", 0.5, THEOREM_ALPHAS)
    b = theorem_family("b")
    assert b.transverse == "clamped"
    assert not b.gradient_flux
    with pytest.raises(ConfigurationError):
        theorem_family("c")


def test_case_a_flux_offset_scales_with_eps():
    family = theorem_family("a")
    for eps in (0.1, 0.05):
        assert family._offset_vector(eps)[1] == pytest.approx(0.5 * eps**0.4)


def test_source_offset():
    family = make_family("source-gap", source_offset={"amplitude": 2.0, "exponent": 1.0})
    assert family._source_offset(0.1) == pytest.approx(0.2)
    assert PairFamily()._source_offset(0.1) == 0.0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
