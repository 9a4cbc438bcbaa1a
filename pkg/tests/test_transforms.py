"""Nonlinear gauge transformations: generator construction, both routes,
the integrability condition, and the transformed nonlinearity."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnlse.errors import ConditionViolated
from gnlse.fields import GaugeField, decompose, field_strength
from gnlse.grid import Lattice, PhysicalConstants, gradient, partial
from gnlse.potentials import PotentialSpec, make_generic
from gnlse.transforms import (
    build_generator,
    check_condition,
    dg_bracket,
    dg_bracket_coefficient,
    dg_chi0_continuity_form,
    dg_sigma_coefficient,
    route_a_transform,
    route_b_transform,
    transformed_nonlinearity,
)
from gnlse.verify import random_smooth_psi, rel_l2

TWO_PI = 2.0 * np.pi


def _state(lat, c, seed):
    psi = random_smooth_psi(lat, np.random.default_rng(seed), c)
    return psi, decompose(lat, psi, c)


def test_sigma_coefficient_values(constants):
    # gauged family: sigma = -(m c nu / e) log rho
    p = PotentialSpec.dg_gauged(0.08, 0.1)
    assert dg_sigma_coefficient(p, constants) == pytest.approx(-0.08)
    c2 = PhysicalConstants(mass=2.0, light_c=3.0, charge_e=0.5)
    assert dg_sigma_coefficient(p, c2) == pytest.approx(-2.0 * 3.0 * 0.08 / 0.5)


def test_bracket_coefficient_vanishes_at_special_point(constants):
    p = PotentialSpec.dg_gauged(0.1, 0.005)
    assert dg_bracket_coefficient(p, constants) == pytest.approx(0.0, abs=1e-15)
    p2 = PotentialSpec.dg_gauged(0.1, 0.1)
    assert dg_bracket_coefficient(p2, constants) != 0.0


def test_generator_closed_form_sigma(lat1d, constants):
    nu = 0.05
    p = PotentialSpec.dg_gauged(nu, 0.1)
    _, h = _state(lat1d, constants, 1)
    gen = build_generator(p, lat1d, h, GaugeField.zero(lat1d), constants)
    np.testing.assert_allclose(gen.sigma, -nu * np.log(h.rho), atol=1e-12)
    np.testing.assert_allclose(
        gen.grad_sigma, -nu * gradient(lat1d, h.rho) / h.rho, atol=1e-12
    )


def test_generator_zero_for_s_independent_potential(lat1d, constants):
    p = make_generic("generic-rho-squared")
    _, h = _state(lat1d, constants, 2)
    gen = build_generator(p, lat1d, h, GaugeField.zero(lat1d), constants)
    np.testing.assert_allclose(gen.sigma, 0.0, atol=1e-12)
    np.testing.assert_allclose(gen.grad_sigma, 0.0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matter_route_preserves_density(seed):
    c = PhysicalConstants()
    lat = Lattice(extents=(TWO_PI,), points=(32,))
    psi, h = _state(lat, c, seed)
    p = PotentialSpec.dg_gauged(0.05, 0.1)
    gen = build_generator(p, lat, h, GaugeField.zero(lat), c)
    phi = route_a_transform(lat, psi, gen, c)
    np.testing.assert_allclose(
        (phi * np.conj(phi)).real, h.rho, atol=1e-12 * float(np.max(h.rho))
    )


def test_gauge_route_shifts(lat1d, constants):
    p = PotentialSpec.dg_gauged(0.05, 0.1)
    _, h = _state(lat1d, constants, 3)
    g = GaugeField.zero(lat1d)
    g.a0[:] = 0.4
    gen = build_generator(p, lat1d, h, g, constants)
    g2 = route_b_transform(lat1d, g, gen, constants)
    np.testing.assert_allclose(g2.avec, g.avec - gen.grad_sigma, atol=1e-14)
    np.testing.assert_allclose(g2.a0, 0.4 + gen.dsigma_dt, atol=1e-14)


def test_chi0_continuity_form_agrees(lat1d, constants):
    """The diffusion-family scalar shift written through the continuity
    equation matches A0 + sigma_t / c."""
    p = PotentialSpec.dg_gauged(0.05, 0.1)
    _, h = _state(lat1d, constants, 4)
    g = GaugeField.zero(lat1d)
    gen = build_generator(p, lat1d, h, g, constants)
    direct = route_b_transform(lat1d, g, gen, constants).a0
    via_continuity = dg_chi0_continuity_form(p, lat1d, h, g, gen, constants)
    assert rel_l2(via_continuity, direct) < 1e-10


def test_condition_vacuous_in_1d(lat1d, constants):
    p = make_generic("generic-rho2-ds1")
    _, h = _state(lat1d, constants, 5)
    rep = check_condition(p, lat1d, h, GaugeField.zero(lat1d), constants)
    assert rep.vacuous and rep.passed


def test_condition_passes_for_diffusion_family(lat2d, constants):
    p = PotentialSpec.dg_gauged(0.05, 0.1)
    _, h = _state(lat2d, constants, 6)
    rep = check_condition(p, lat2d, h, GaugeField.zero(lat2d), constants)
    assert rep.passed and not rep.vacuous


def test_condition_counterexample_fails_and_matches_oracle(lat2d, constants):
    p = make_generic("generic-rho2-ds1")
    _, h = _state(lat2d, constants, 7)
    rep = check_condition(p, lat2d, h, GaugeField.zero(lat2d), constants)
    assert not rep.passed
    want = -partial(lat2d, h.rho, 1)
    assert rel_l2(rep.residuals[(0, 1)], want) < 0.05


def test_build_generator_raises_on_condition_failure(lat2d, constants):
    p = make_generic("generic-rho2-ds1")
    _, h = _state(lat2d, constants, 8)
    with pytest.raises(ConditionViolated):
        build_generator(p, lat2d, h, GaugeField.zero(lat2d), constants)


def test_transformed_nonlinearity_routes_agree(lat1d, constants):
    p = PotentialSpec.dg_gauged(0.05, 0.1)
    _, h = _state(lat1d, constants, 9)
    g = GaugeField.zero(lat1d)
    gen = build_generator(p, lat1d, h, g, constants)
    wa = transformed_nonlinearity(p, lat1d, h, g, gen, "A", constants)
    wb = transformed_nonlinearity(p, lat1d, h, g, gen, "B", constants)
    np.testing.assert_allclose(wa, wb, atol=1e-14)


def test_transformed_nonlinearity_matches_bracket_form(constants):
    """W' should equal (m nu^2 - 2 alpha hbar^2/m) [lap rho/rho -
    (grad rho)^2 / 2 rho^2] up to discretization."""
    lat = Lattice(extents=(TWO_PI,), points=(256,))
    p = PotentialSpec.dg_gauged(0.05, 0.02)
    _, h = _state(lat, constants, 10)
    g = GaugeField.zero(lat)
    gen = build_generator(p, lat, h, g, constants)
    got = transformed_nonlinearity(p, lat, h, g, gen, "B", constants)
    want = dg_bracket_coefficient(p, constants) * dg_bracket(lat, h.rho)
    assert rel_l2(got, want) < 5e-3


def test_field_strength_invariance_static(lat2d, constants):
    p = PotentialSpec.dg_gauged(0.05, 0.1)
    _, h = _state(lat2d, constants, 11)
    g = GaugeField.zero(lat2d)
    gen = build_generator(p, lat2d, h, g, constants)
    before = field_strength(lat2d, g, constants=constants)
    after = field_strength(
        lat2d, route_b_transform(lat2d, g, gen, constants), constants=constants
    )
    dx = min(lat2d.spacing)
    assert float(np.max(np.abs(after.magnetic - before.magnetic))) < dx**2
