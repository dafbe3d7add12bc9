"""
Test the integral identity, its decompositions and the eps sweeps.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest
import sympy as sp

from thinprobe.cgo import make_cgo
from thinprobe.errors import IdentityError, SweepError
from thinprobe.families import PairFamily, flux_gap_family, source_gap_family
from thinprobe.fields import T, ClosedForm, space_symbols
from thinprobe.geometry import build_curve, extract_probe_subdomain
from thinprobe.identity import (
    CgoField,
    IdentityReport,
    decompose_I2,
    decompose_I4,
    default_window,
    eval_terms_2d,
    eval_terms_3d,
    green_residual,
    identity_residual,
    lower_bound_check_I43,
    solve_manufactured_pair,
    term_scaling_sweep,
    term_value,
)
from thinprobe.quadrature import QuadRule
from thinprobe.solver import make_grid


def test_green_exact_for_polynomials(straight_sub):
    x1, x2 = space_symbols(2)
    f = ClosedForm(x1**2 + x1 * x2 + T, 2, "f")
    g = ClosedForm(x2**2 - x1 + 2 * x1 * x2, 2, "g")
    report = green_residual((f, g), straight_sub, 0.0, 0.01, QuadRule((9, 9), 3))
    assert report.relative <= 1e-10
    assert abs(report.volume) > 0


def test_green_with_probe(sine_sub):
    """Test a CGO probe against a smooth field on a curved subdomain."""
    x1, x2 = space_symbols(2)
    f = ClosedForm(sp.sin(3 * x1) * sp.cos(2 * x2), 2, "f")
    probe = CgoField(make_cgo(5.0, 1.0, 1.0, [-0.6, -0.8]))
    report = green_residual((f, probe), sine_sub, 0.0, 0.01, QuadRule((65, 65), 3))
    assert report.relative <= 1e-8


def test_identity_residual_sums():
    terms = {"I1": 1.0, "I2": 2.0, "I3": 4.0, "I4": 1.0, "I5": 1.0, "I6": 1.0, "I7": 0.5, "I8": -0.5}
    assert identity_residual(terms) == 0.0
    assert identity_residual(terms, slab=True) == 0.0
    terms["I7"] = 1.0
    assert identity_residual(terms, slab=True) == 1.0


def test_report_relative_with_zero_terms():
    report = IdentityReport({"I1": 0j}, 0j, 2, "nozzle", "rule", (0.0, 0.01))
    assert report.relative == 0.0


def test_default_window(sine_sub):
    assert default_window(sine_sub, 0.5) == (0.5, 0.5 + 0.01)
    assert default_window(sine_sub, 0.5, 0.7) == (0.5, 0.7)


@pytest.fixture
def member_2d():
    family = PairFamily(counts=(65, 65), n_time=33)
    return family.member(0.1)


def test_identity_2d_closed_form(member_2d):
    m = member_2d
    report = eval_terms_2d(m.pair, m.cgo, m.sub, m.T1, m.T2, m.rule)
    assert set(report.terms) == {"I1", "I2", "I3", "I4", "I5", "I6"}
    assert report.relative <= 1e-6
    assert report.window == (m.T1, m.T2)


def test_identity_2d_argument_checks(member_2d):
    m = member_2d
    sub3 = extract_probe_subdomain(build_curve("straight", [], 0.1, 1.0), 0.0, 0.1, 1.0, 3)
    with pytest.raises(IdentityError, match="2D subdomain"):
        eval_terms_2d(m.pair, m.cgo, sub3, m.T1)
    wrong_mu = make_cgo(m.cgo.s, 1.0, 2.0, m.cgo.d)
    with pytest.raises(IdentityError, match="mu"):
        eval_terms_2d(m.pair, wrong_mu, m.sub, m.T1, m.T2, m.rule)
    with pytest.raises(IdentityError, match="3D subdomain"):
        eval_terms_3d(m.pair, m.cgo, m.sub, m.T1)


def test_decompositions_add_up(member_2d):
    m = member_2d
    report = eval_terms_2d(m.pair, m.cgo, m.sub, m.T1, m.T2, m.rule)
    I4 = decompose_I4(m.pair, m.cgo, m.sub, m.T1, m.T2, m.rule, m.point)
    assert set(I4) == {"I41", "I42", "I43", "I44"}
    assert sum(I4.values()) == pytest.approx(report.terms["I4"], rel=1e-10, abs=1e-14)
    I2 = decompose_I2(m.pair, m.cgo, m.sub, m.T1, m.T2, m.rule)
    assert I2["I21"] + I2["I22"] == pytest.approx(report.terms["I2"], rel=1e-10, abs=1e-14)


def test_term_value_lookup(member_2d):
    m = member_2d
    rule = QuadRule((17, 17), 9)
    assert term_value("I3", m.pair, m.cgo, m.sub, m.T1, m.T2, rule) == pytest.approx(
        eval_terms_2d(m.pair, m.cgo, m.sub, m.T1, m.T2, rule).terms["I3"]
    )
    with pytest.raises(IdentityError, match="does not exist in 2D"):
        term_value("I45", m.pair, m.cgo, m.sub, m.T1, m.T2, rule)
    with pytest.raises(IdentityError, match="not defined"):
        term_value("I7", m.pair, m.cgo, m.sub, m.T1, m.T2, rule)


@pytest.mark.slow
def test_identity_3d_nozzle():
    m = PairFamily(dim=3, n_time=17).member(0.1)
    report = eval_terms_3d(m.pair, m.cgo, m.sub, m.T1, m.T2, m.rule)
    assert "I7" not in report.terms
    assert report.relative <= 1e-5


@pytest.mark.slow
def test_identity_3d_slab_needs_side_faces():
    """Test the slab identity closes only with the side-face terms."""
    m = PairFamily(dim=3, kind="slab", cross="open", n_time=17).member(0.1)
    report = eval_terms_3d(m.pair, m.cgo, m.sub, m.T1, m.T2, m.rule)
    assert {"I7", "I8"} <= set(report.terms)
    assert report.relative <= 1e-5
    ablated = abs(identity_residual(report.terms, slab=False)) / report.scale
    assert ablated >= 1e3 * report.relative


@pytest.mark.slow
def test_identity_from_solver_pair():
    m = PairFamily().member(0.1)
    grid = make_grid(m.sub, 33, 33, (m.T1, m.T2), mu=1.0, max_speed=3.0)
    pair = solve_manufactured_pair(m.pair, grid)
    report = eval_terms_2d(pair, m.cgo, m.sub, m.T1, m.T2)
    assert report.relative <= 5e-2
    with pytest.raises(IdentityError, match="closed-form"):
        decompose_I4(pair, m.cgo, m.sub, m.T1, m.T2)


@pytest.mark.parametrize(
    "eps_list,match",
    [
        ([0.2, 0.1, 0.05], "at least 4"),
        ([0.2, 0.1, 0.1, 0.05], "strictly decreasing"),
        ([0.2, 0.1, 0.05, 0.01], "geometrically"),
    ],
)
def test_sweep_rejects_bad_eps_lists(eps_list, match):
    with pytest.raises(SweepError, match=match):
        term_scaling_sweep(source_gap_family(), "I3", eps_list, n_jobs=1)


@pytest.mark.slow
def test_source_gap_sweep_meets_prediction():
    result = term_scaling_sweep(source_gap_family(counts=(33, 33)), "I3", [0.2, 0.1, 0.05, 0.025], n_jobs=1)
    assert result.verdict == "PASS"
    assert result.predicted == pytest.approx(4.0)
    assert result.extras["predicted_unit_window"] == pytest.approx(3.0)
    assert result.extras["window_exponent"] == 2.0
    assert len(result.rows) == 4
    assert np.all(np.diff(np.log(result.values)) < 0)


@pytest.mark.slow
def test_lower_bound_on_flux_gap_family():
    report = lower_bound_check_I43(flux_gap_family(counts=(33, 33)), [0.2, 0.1, 0.05, 0.025], n_jobs=1)
    assert report.status == "PASS"
    assert report.passed
    assert len(report.ratios) == 4


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
