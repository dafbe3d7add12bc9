"""
Test the nonlinearity registry, manufactured pairs, RDC mapping and admissibility.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from thinprobe.errors import ModelError
from thinprobe.fields import base_field
from thinprobe.model import (
    ConfigPair,
    SampleRegion,
    check_lateral_conditions,
    manufacture_identity_pair,
    mms_source,
    pde_residual,
    rdc_to_balance,
    rotate_flux,
    validate_admissibility,
)
from thinprobe.registry import ConfigTriplet, make_flux, make_source, make_state_map, make_triplet


def _nodes(sub, n=5):
    return sub.volume_nodes((n,) * sub.dim)[0]


# ============================================================================
# Registry
# ============================================================================


def test_cubic_state_map():
    H = make_state_map("cubic-with-floor", {"delta": 0.5})
    z = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(H.value(z), z**3 + 0.5 * z)
    np.testing.assert_allclose(H.derivative(z), 3 * z**2 + 0.5)
    assert H.derivative_lower_bound == 0.5
    assert not H.is_linear
    assert make_state_map("identity").is_linear


@pytest.mark.parametrize(
    "factory,args",
    [
        (make_state_map, ("quartic",)),
        (make_state_map, ("cubic-with-floor", {"delta": 0.0})),
        (make_flux, ("swirl",)),
        (make_flux, ("constant-advection", {"velocity": [1.0]}, 2)),
        (make_source, ("exotic",)),
    ],
)
def test_registry_rejects(factory, args):
    with pytest.raises(ModelError):
        factory(*args)


def test_flux_evaluation():
    F = make_flux("rotational-advection", {"omega": 2.0}, 2)
    x = np.array([[0.1, 0.3], [0.2, -0.1]])
    value = F.value(x, 0.0, 1.5)
    np.testing.assert_allclose(value, np.stack([-2.0 * x[:, 1] * 1.5, 2.0 * x[:, 0] * 1.5], axis=-1))
    np.testing.assert_allclose(F.divergence_x(x, 0.0, 1.5), 0.0)
    np.testing.assert_allclose(F.dz(x, 0.0, 1.5), np.stack([-2.0 * x[:, 1], 2.0 * x[:, 0]], axis=-1))


def test_source_bump():
    """Test the bump adds exactly the amplitude at its centre and nothing outside."""
    f = make_source("logistic", {"rate": 1.0}, 2)
    bumped = f.perturbed(0.3, [0.1, 0.2], 0.05)
    centre = np.array([[0.1, 0.2]])
    far = np.array([[0.5, 0.5]])
    assert bumped.value(centre, 0.0, 0.4)[0] == pytest.approx(f.value(centre, 0.0, 0.4)[0] + 0.3)
    assert bumped.value(far, 0.0, 0.4)[0] == pytest.approx(f.value(far, 0.0, 0.4)[0])
    assert bumped.params["bump"]["radius"] == 0.05


def test_gradient_source_uses_gradient_slot():
    f = make_source("gradient-quadratic", {"kappa": 2.0}, 2)
    assert f.depends_on_state
    value = f.value(np.zeros((1, 2)), 0.0, 0.0, np.array([[3.0, 4.0]]))
    assert value[0] == pytest.approx(50.0)


def test_triplet_contracts():
    H = make_state_map("identity")
    with pytest.raises(ModelError, match="mu"):
        ConfigTriplet(H, make_flux("zero", None, 2), make_source("zero", None, 2), 0.0)
    with pytest.raises(ModelError, match="dimension"):
        ConfigTriplet(H, make_flux("zero", None, 3), make_source("zero", None, 2), 1.0)
    cfg = make_triplet({"F": {"id": "burgers-like"}, "mu": 0.5})
    assert cfg.describe()["F"]["id"] == "burgers-like"
    assert cfg.mu == 0.5


# ============================================================================
# Rotation and manufactured sources
# ============================================================================


def test_rotated_constant_flux(sine_sub):
    """Test F'(x', t, z) = R F for a constant velocity."""
    F = make_flux("constant-advection", {"velocity": [1.0, 0.5]}, 2)
    rotated = rotate_flux(F, sine_sub.frame)
    x = _nodes(sine_sub)
    expected = sine_sub.frame.rotate(np.array([1.0, 0.5]))
    np.testing.assert_allclose(rotated.value(x, 0.0, 1.0), np.broadcast_to(expected, x.shape), atol=1e-14)


def test_rotate_dimension_mismatch(sine_sub):
    with pytest.raises(ModelError):
        rotate_flux(make_flux("zero", None, 3), sine_sub.frame)


@pytest.mark.parametrize("base", ["trig-mapped", "mms-mapped", "plane-wave"])
def test_mms_source_balances(sine_sub, base):
    """Test the manufactured source zeroes the balance-law residual."""
    u = base_field({"id": base}, sine_sub)
    H = make_state_map("cubic-with-floor", {"delta": 0.5})
    F = make_flux("burgers-like", None, 2)
    cfg = ConfigTriplet(H, F, mms_source(u, H, F, 1.0), 1.0)
    x = _nodes(sine_sub)
    residual = pde_residual(cfg, u, x, 0.3)
    scale = np.max(np.abs(cfg.f.value(x, 0.3)))
    assert np.max(np.abs(residual)) <= 1e-10 * max(1.0, scale)


def test_mms_solver_mode_needs_floor(sine_sub):
    u = base_field({"id": "mms-mapped"}, sine_sub)
    H = make_state_map("identity")
    mms_source(u, H, make_flux("zero", None, 2), 1.0, solver_mode=True)
    Hcubic = make_state_map("cubic-with-floor", {"delta": 0.5})
    object.__setattr__(Hcubic, "derivative_lower_bound", 0.0)
    with pytest.raises(ModelError, match="floor"):
        mms_source(u, Hcubic, make_flux("zero", None, 2), 1.0, solver_mode=True)


# ============================================================================
# Manufactured pairs
# ============================================================================


def _pair(sub, **kwargs):
    u = base_field({"id": "plane-wave"}, sub)
    F = make_flux("constant-advection", None, sub.dim)
    H = make_state_map("cubic-with-floor", {"delta": 0.5})
    options = dict(q=1.0, psi="unit-bubble")
    options.update(kwargs)
    q = options.pop("q")
    psi = options.pop("psi")
    return manufacture_identity_pair(sub, u, F, H, 1.0, q, psi, **options)


def test_pair_satisfies_both_laws(sine_sub):
    pair = _pair(sine_sub, flux_offset=[0.0, 0.1], source_offset=0.7)
    x = _nodes(sine_sub)
    r1, r2 = pair.pde_residuals(x, 0.2)
    scale = max(1.0, float(np.max(np.abs(pair.f.value(x, 0.2)))), float(np.max(np.abs(pair.g.value(x, 0.2)))))
    assert np.max(np.abs(r1)) <= 1e-10 * scale
    assert np.max(np.abs(r2)) <= 1e-10 * scale


def test_pair_gap_formulas(sine_sub):
    """Test flux gap = mu grad w + c + Psi and source gap = sigma + dw/dt for a linear H."""
    u = base_field({"id": "plane-wave"}, sine_sub)
    F = make_flux("constant-advection", None, 2)
    H = make_state_map("identity")
    pair = manufacture_identity_pair(sine_sub, u, F, H, 1.0, 1.0, "unit-bubble", flux_offset=[0.0, 0.1],
                                     source_offset=0.7)
    x = _nodes(sine_sub)
    _, g1, _, _ = sine_sub.graph.derivatives(x[:, 0])
    psi = 0.7 * x[:, 0][:, None] * np.stack([np.ones_like(g1), g1], axis=-1)
    expected = pair.w.grad(x, 0.2) + np.array([0.0, 0.1]) + psi
    np.testing.assert_allclose(pair.flux_gap_vector(x, 0.2), expected, atol=1e-12)
    np.testing.assert_allclose(pair.source_gap(x, 0.2), 0.7 + pair.w.dt(x, 0.2), atol=1e-9)


def test_w_vanishes_laterally(sine_sub):
    pair = _pair(sine_sub)
    report = check_lateral_conditions(pair, [0.0, 0.005, 0.01])
    assert report.vanishing
    assert report.passed


def test_offset_breaks_pointwise_balance_only(sine_sub):
    """Test a constant transverse offset cancels between the two lateral faces."""
    pair = _pair(sine_sub, flux_offset=[0.0, 0.1])
    report = check_lateral_conditions(pair, [0.0, 0.01])
    assert not report.pointwise_ok
    assert report.integral_ok


def test_zero_gap_pair(sine_sub):
    pair = _pair(sine_sub, q=None)
    assert pair.is_zero_gap
    x = _nodes(sine_sub)
    np.testing.assert_allclose(pair.flux_gap_vector(x, 0.1), 0.0, atol=1e-14)


def test_open_cross_profile_needs_slab():
    from thinprobe.geometry import build_curve, extract_probe_subdomain

    curve = build_curve("sine", [0.5, 2.0], 0.1, 1.0)
    nozzle = extract_probe_subdomain(curve, 0.0, 0.1, 1.0, 3, "nozzle")
    with pytest.raises(ModelError, match="open"):
        _pair(nozzle, cross="open")
    slab = extract_probe_subdomain(curve, 0.0, 0.1, 1.0, 3, "slab")
    pair = _pair(slab, cross="open")
    assert pair.dim == 3


def test_negative_q_rejected(sine_sub):
    with pytest.raises(ModelError):
        _pair(sine_sub, q=-1.0)


# ============================================================================
# RDC and admissibility
# ============================================================================


def test_rdc_mapping():
    R = make_source("logistic", None, 2)
    cfg = rdc_to_balance("rotational", R, 0.5)
    assert cfg.H.is_linear
    x = np.array([[0.2, 0.3]])
    np.testing.assert_allclose(cfg.F.value(x, 0.0, 2.0), [[-0.6, 0.4]])
    assert cfg.f is R


@pytest.mark.parametrize("offset", [0.0, 0.3, 1.5])
def test_rdc_bumped_reaction_source_gap(sine_sub, offset):
    eps = sine_sub.eps
    R = make_source("logistic", {"rate": 1.0}, 2)
    centre = sine_sub.frame.to_global(sine_sub.center()[None, :])[0]
    cfg1 = rdc_to_balance("rotational", R, 1.0)
    cfg2 = rdc_to_balance("rotational", R.perturbed(eps**2, centre, eps), 1.0)
    pair = ConfigPair(cfg1, cfg2, base_field({"id": "plane-wave"}, sine_sub, 1.0), sine_sub)
    x = sine_sub.center()[None, :] + np.array([[offset * eps, 0.0]])
    bump = (1 - offset**2) ** 3 if offset < 1 else 0.0
    np.testing.assert_allclose(np.abs(pair.source_gap(x, 0.0)), eps**2 * bump, atol=1e-15)
    np.testing.assert_allclose(pair.flux_gap_vector(x, 0.0), 0.0, atol=1e-15)


def test_rdc_rejects_compressible_velocity():
    R = make_source("zero", None, 2)
    with pytest.raises(ModelError, match="compressible"):
        rdc_to_balance(("dilating", {"rate": 1.0}), R, 1.0)


def test_admissibility_passes_for_smooth_triplet():
    cfg = make_triplet({"F": {"id": "constant-advection"}, "f": {"id": "logistic"}})
    report = validate_admissibility(cfg, samples=400, seed=1)
    assert report.passed
    assert {c.name for c in report.checks} == {"H", "F_1", "F_2", "f"}


def test_admissibility_flags_small_constant():
    cfg = make_triplet({"H": {"id": "cubic-with-floor", "params": {"delta": 0.5}, "C": 0.5}})
    report = validate_admissibility(cfg, samples=400, seed=1, case="b")
    assert not report.passed
    assert "H" in {c.name for c in report.failures()}
    assert "H_prime" in {c.name for c in report.checks}


def test_admissibility_sample_floor():
    cfg = make_triplet({})
    with pytest.raises(ModelError, match="100"):
        validate_admissibility(cfg, samples=50)


def test_sample_region_around(sine_sub):
    region = SampleRegion.around(sine_sub, 0.0, 0.01)
    assert region.t_range == (0.0, 0.01)
    assert all(lo <= hi for lo, hi in zip(region.lower, region.upper))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
