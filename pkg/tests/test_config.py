"""Scenario parsing: total validation, overrides, and presets."""
import numpy as np
import pytest

from gnlse.config import make_density, make_gauge, make_psi, parse_config
from gnlse.errors import ParseError, ValidationError
from gnlse.grid import Lattice, PhysicalConstants, integrate

TWO_PI = 2.0 * np.pi

MINIMAL = 'mode = "evolve-original"\n'


def test_defaults_materialized():
    cfg = parse_config(MINIMAL)
    assert cfg.mode == "evolve-original"
    assert cfg.potential_kind == "dg_gauged"
    assert cfg.points == (128,) and cfg.dim == 1
    assert cfg.tolerances["charge_drift"] == 1e-8


def test_toml_syntax_error():
    with pytest.raises(ParseError):
        parse_config("mode = [unterminated")


def test_unknown_key_suggests_nearest():
    with pytest.raises(ValidationError, match="t_final"):
        parse_config('[integrator]\nt_finale = 0.1\n')


def test_unknown_mode_rejected():
    with pytest.raises(ValidationError, match="full-verify"):
        parse_config('mode = "full-verfiy"\n')


@pytest.mark.parametrize("snippet", [
    '[constants]\nhbar = -1.0\n',
    '[lattice]\ndim = 3\n',
    '[lattice]\npoints = [4]\n',
    '[lattice]\ndim = 2\npoints = [16]\n',
    '[initial]\ngauge = "constant-b"\n',   # needs dim 2
    'density_floor = 2.0\n',
    '[potential]\nkind = "dg_gagued"\n',
])
def test_constraint_violations(snippet):
    with pytest.raises(ValidationError):
        parse_config(snippet)


def test_overrides_win():
    cfg = parse_config(MINIMAL, {"potential.nu": 0.2, "mode": "full-verify"})
    assert cfg.nu == 0.2 and cfg.mode == "full-verify"


def test_override_unknown_key_rejected():
    with pytest.raises(ValidationError):
        parse_config(MINIMAL, {"potential.nuu": 0.2})


def test_render_roundtrip():
    cfg = parse_config(MINIMAL, {"potential.alpha": 0.025})
    again = parse_config(cfg.render())
    assert again == cfg
    assert again.render() == cfg.render()


def test_densities_normalized():
    lat = Lattice(extents=(TWO_PI,), points=(64,))
    for name in ("uniform", "cosine-density", "gaussian-bump", "two-bump"):
        rho = make_density(lat, name, {})
        assert integrate(lat, rho) == pytest.approx(1.0)
        assert np.min(rho) > 0


def test_cosine_amplitude_bounds():
    lat = Lattice(extents=(TWO_PI,), points=(16,))
    with pytest.raises(ValidationError):
        make_density(lat, "cosine-density", {"amplitude": 1.5})


def test_psi_phase_factor_preserves_density():
    lat = Lattice(extents=(TWO_PI,), points=(64,))
    c = PhysicalConstants()
    flat = make_psi(lat, "cosine-density", {}, c)
    phased = make_psi(lat, "cosine-density", {"phase_amplitude": 0.3}, c)
    np.testing.assert_allclose(
        (phased * np.conj(phased)).real, (flat * np.conj(flat)).real, atol=1e-14
    )
    assert np.max(np.abs(phased - flat)) > 1e-3


def test_gauge_presets():
    lat = Lattice(extents=(TWO_PI,), points=(16,))
    g = make_gauge(lat, "zero", {})
    assert not np.any(g.a0) and not np.any(g.avec)
    g = make_gauge(lat, "static-sine-a0", {"amplitude": 0.5, "mode_number": 2})
    x = lat.axis_coords(0)
    np.testing.assert_allclose(g.a0, 0.5 * np.sin(2 * x), atol=1e-14)
    lat2 = Lattice(extents=(TWO_PI, TWO_PI), points=(16, 16))
    g = make_gauge(lat2, "constant-b", {"b0": 2.0})
    assert g.avec.shape == (2, 16, 16)
