"""Scenario configuration: TOML parsing with total validation, plus the
named initial-data presets every reproducible run is built from."""
from __future__ import annotations

import difflib
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .fields import GaugeField
from .grid import Lattice, PhysicalConstants
from .potentials import GENERIC_POTENTIALS, PotentialSpec, make_generic

MODES = (
    "evolve-original",
    "evolve-transformed-A",
    "evolve-transformed-B",
    "commuting-diagram",
    "condition-check",
    "selfconsistent-1d",
    "full-verify",
)

PSI_PRESETS = ("uniform", "cosine-density", "gaussian-bump", "two-bump")
GAUGE_PRESETS = ("zero", "static-sine-a0", "constant-b")

TWO_PI = 2.0 * math.pi

# Schema: section -> key -> default (None means required... all have defaults).
_SCHEMA = {
    "": {
        "mode": "full-verify",
        "output_dir": "out",
        "density_floor": 1e-12,
    },
    "constants": {"hbar": 1.0, "mass": 1.0, "charge_e": 1.0, "light_c": 1.0},
    "potential": {"kind": "dg_gauged", "nu": 0.05, "alpha": 0.1},
    "lattice": {"dim": 1, "points": [128], "extents": [TWO_PI]},
    "initial": {"psi": "cosine-density", "gauge": "zero"},
    "initial.psi_params": {
        "amplitude": 0.5,
        "mode_number": 1,
        "phase_amplitude": 0.0,
        "width": 0.0,          # 0 -> L/8 for bump presets
        "offset": 0.05,
    },
    "initial.gauge_params": {"amplitude": 0.5, "mode_number": 1, "b0": 1.0},
    "integrator": {"dt": 0.0, "t_final": 0.1, "snapshot_stride": 0},
    "tolerances": {
        "charge_drift": 1e-8,
        "condition": 0.0,      # 0 -> calibrated at startup
        "order_min": 1.8,
        "order_max": 2.5,
    },
}


@dataclass
class ScenarioConfig:
    mode: str
    output_dir: str
    density_floor: float
    constants: PhysicalConstants
    potential_kind: str
    nu: float
    alpha: float
    dim: int
    points: tuple
    extents: tuple
    psi_preset: str
    psi_params: dict
    gauge_preset: str
    gauge_params: dict
    dt: float
    t_final: float
    snapshot_stride: int
    tolerances: dict

    def lattice(self) -> Lattice:
        return Lattice(extents=self.extents, points=self.points)

    def potential(self) -> PotentialSpec:
        if self.potential_kind == "dg_gauged":
            return PotentialSpec.dg_gauged(self.nu, self.alpha)
        if self.potential_kind == "dg_ungauged":
            return PotentialSpec.dg_ungauged(self.nu, self.alpha)
        return make_generic(self.potential_kind)

    def resolved_dt(self, lat: Lattice) -> float:
        if self.dt > 0:
            return self.dt
        dx = min(lat.spacing)
        return 0.1 * dx * dx * self.constants.mass / self.constants.hbar

    def resolved_stride(self, lat: Lattice) -> int:
        if self.snapshot_stride > 0:
            return self.snapshot_stride
        steps = max(1, int(round(self.t_final / self.resolved_dt(lat))))
        return max(1, steps // 50)

    def initial_psi(self, lat: Lattice) -> np.ndarray:
        return make_psi(lat, self.psi_preset, self.psi_params, self.constants)

    def initial_gauge(self, lat: Lattice) -> GaugeField:
        return make_gauge(lat, self.gauge_preset, self.gauge_params)

    def render(self) -> str:
        """Deterministic resolved-config echo (TOML)."""
        t = self.tolerances
        lines = [
            f'mode = "{self.mode}"',
            f'output_dir = "{self.output_dir}"',
            f"density_floor = {self.density_floor:.17g}",
            "",
            "[constants]",
            f"hbar = {self.constants.hbar:.17g}",
            f"mass = {self.constants.mass:.17g}",
            f"charge_e = {self.constants.charge_e:.17g}",
            f"light_c = {self.constants.light_c:.17g}",
            "",
            "[potential]",
            f'kind = "{self.potential_kind}"',
            f"nu = {self.nu:.17g}",
            f"alpha = {self.alpha:.17g}",
            "",
            "[lattice]",
            f"dim = {self.dim}",
            f"points = [{', '.join(str(n) for n in self.points)}]",
            f"extents = [{', '.join(f'{x:.17g}' for x in self.extents)}]",
            "",
            "[initial]",
            f'psi = "{self.psi_preset}"',
            f'gauge = "{self.gauge_preset}"',
            "",
            "[initial.psi_params]",
        ]
        for k in sorted(self.psi_params):
            lines.append(f"{k} = {self.psi_params[k]:.17g}")
        lines.append("")
        lines.append("[initial.gauge_params]")
        for k in sorted(self.gauge_params):
            lines.append(f"{k} = {self.gauge_params[k]:.17g}")
        lines += [
            "",
            "[integrator]",
            f"dt = {self.dt:.17g}",
            f"t_final = {self.t_final:.17g}",
            f"snapshot_stride = {self.snapshot_stride}",
            "",
            "[tolerances]",
        ]
        for k in sorted(t):
            lines.append(f"{k} = {t[k]:.17g}")
        return "\n".join(lines) + "\n"


def _suggest(key: str, known) -> str:
    close = difflib.get_close_matches(key, list(known), n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _flatten(data: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in data.items():
        path = f"{prefix}.{k}" if prefix else k
        if isinstance(v, dict):
            out.update(_flatten(v, path))
        else:
            out[path] = v
    return out


def _section_of(path: str) -> tuple[str, str]:
    if "." in path:
        sec, key = path.rsplit(".", 1)
    else:
        sec, key = "", path
    return sec, key


def parse_config(text: str, overrides: Optional[dict] = None) -> ScenarioConfig:
    """Total validation: unknown keys rejected with a nearest-key hint,
    every constraint checked, all defaults materialized."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc)) from None
    flat = _flatten(data)
    if overrides:
        flat.update(overrides)

    resolved = {sec: dict(defaults) for sec, defaults in _SCHEMA.items()}
    for path, value in flat.items():
        sec, key = _section_of(path)
        if sec not in _SCHEMA:
            raise ValidationError(
                f"unknown section {sec!r}{_suggest(sec, _SCHEMA)}"
            )
        if key not in _SCHEMA[sec]:
            raise ValidationError(
                f"unknown key {path!r}{_suggest(key, _SCHEMA[sec])}"
            )
        resolved[sec][key] = value

    top = resolved[""]
    if top["mode"] not in MODES:
        raise ValidationError(
            f"mode: {top['mode']!r} is not a mode{_suggest(top['mode'], MODES)}"
        )
    floor = float(top["density_floor"])
    if not 0 < floor < 1:
        raise ValidationError("density_floor: must be in (0, 1) (fraction of max rho)")

    cons = resolved["constants"]
    for k, v in cons.items():
        if not (isinstance(v, (int, float)) and v > 0):
            raise ValidationError(f"constants.{k}: must be positive, got {v!r}")
    constants = PhysicalConstants(
        hbar=float(cons["hbar"]), mass=float(cons["mass"]),
        charge_e=float(cons["charge_e"]), light_c=float(cons["light_c"]),
    )

    pot = resolved["potential"]
    kind = pot["kind"]
    if kind not in ("dg_gauged", "dg_ungauged") and kind not in GENERIC_POTENTIALS:
        known = ["dg_gauged", "dg_ungauged", *GENERIC_POTENTIALS]
        raise ValidationError(
            f"potential.kind: unknown kind {kind!r}{_suggest(kind, known)}"
        )
    if float(pot["nu"]) < 0:
        raise ValidationError("potential.nu: must be nonnegative")

    latsec = resolved["lattice"]
    dim = int(latsec["dim"])
    if dim not in (1, 2):
        raise ValidationError("lattice.dim: must be 1 or 2")
    points = tuple(int(n) for n in latsec["points"])
    extents = tuple(float(x) for x in latsec["extents"])
    if len(points) != dim or len(extents) != dim:
        raise ValidationError(
            f"lattice: points/extents must have {dim} entries for dim={dim}"
        )
    for n in points:
        if n < 8:
            raise ValidationError("lattice.points: need at least 8 per axis")
    for L in extents:
        if L <= 0:
            raise ValidationError("lattice.extents: must be positive")

    ini = resolved["initial"]
    if ini["psi"] not in PSI_PRESETS:
        raise ValidationError(
            f"initial.psi: unknown preset {ini['psi']!r}{_suggest(ini['psi'], PSI_PRESETS)}"
        )
    if ini["gauge"] not in GAUGE_PRESETS:
        raise ValidationError(
            f"initial.gauge: unknown preset {ini['gauge']!r}"
            f"{_suggest(ini['gauge'], GAUGE_PRESETS)}"
        )
    if ini["gauge"] == "constant-b" and dim != 2:
        raise ValidationError("initial.gauge: constant-b needs lattice.dim = 2")

    integ = resolved["integrator"]
    dt = float(integ["dt"])
    if dt < 0:
        raise ValidationError("integrator.dt: must be positive (or 0 for auto)")
    t_final = float(integ["t_final"])
    if t_final < 0:
        raise ValidationError("integrator.t_final: must be nonnegative")
    stride = int(integ["snapshot_stride"])
    if stride < 0:
        raise ValidationError("integrator.snapshot_stride: must be >= 1 (or 0 for auto)")

    return ScenarioConfig(
        mode=top["mode"],
        output_dir=str(top["output_dir"]),
        density_floor=floor,
        constants=constants,
        potential_kind=kind,
        nu=float(pot["nu"]),
        alpha=float(pot["alpha"]),
        dim=dim,
        points=points,
        extents=extents,
        psi_preset=ini["psi"],
        psi_params={k: float(v) for k, v in resolved["initial.psi_params"].items()},
        gauge_preset=ini["gauge"],
        gauge_params={k: float(v) for k, v in resolved["initial.gauge_params"].items()},
        dt=dt,
        t_final=t_final,
        snapshot_stride=stride,
        tolerances={k: float(v) for k, v in resolved["tolerances"].items()},
    )


# ---------------------------------------------------------------------------
# Initial-data presets
# ---------------------------------------------------------------------------

def _periodic_gaussian(lat: Lattice, center, width) -> np.ndarray:
    xs = lat.coords()
    d2 = np.zeros(lat.points)
    for a in range(lat.dim):
        d = np.abs(xs[a] - center[a])
        d = np.minimum(d, lat.extents[a] - d)
        d2 = d2 + d * d
    return np.exp(-d2 / (2.0 * width**2))


def make_density(lat: Lattice, name: str, params: dict) -> np.ndarray:
    """Normalized (integral 1) density for a named preset."""
    from .grid import integrate

    if name == "uniform":
        rho = np.ones(lat.points)
    elif name == "cosine-density":
        a = params.get("amplitude", 0.5)
        if not -1 < a < 1:
            raise ValidationError("psi_params.amplitude must be in (-1, 1)")
        m = int(params.get("mode_number", 1))
        rho = np.ones(lat.points)
        xs = lat.coords()
        for ax in range(lat.dim):
            rho = rho * (1.0 + a * np.cos(TWO_PI * m * xs[ax] / lat.extents[ax]))
    elif name == "gaussian-bump":
        w = params.get("width", 0.0) or min(lat.extents) / 8.0
        off = params.get("offset", 0.05)
        center = tuple(L / 2.0 for L in lat.extents)
        rho = off + _periodic_gaussian(lat, center, w)
    elif name == "two-bump":
        w = params.get("width", 0.0) or min(lat.extents) / 10.0
        off = params.get("offset", 0.05)
        c1 = (lat.extents[0] / 4.0,) + tuple(L / 2.0 for L in lat.extents[1:])
        c2 = (3.0 * lat.extents[0] / 4.0,) + tuple(L / 2.0 for L in lat.extents[1:])
        rho = off + _periodic_gaussian(lat, c1, w) + _periodic_gaussian(lat, c2, w)
    else:
        raise ValidationError(f"unknown psi preset {name!r}")
    return rho / integrate(lat, rho)


def make_psi(
    lat: Lattice, name: str, params: dict, constants: PhysicalConstants
) -> np.ndarray:
    """sqrt(density) times an optional smooth phase factor
    exp[(ie/hbar c) pa sin(2 pi x / L)] (winding-free by construction)."""
    rho = make_density(lat, name, params)
    psi = np.sqrt(rho).astype(complex)
    pa = params.get("phase_amplitude", 0.0)
    if pa != 0.0:
        x = lat.coords()[0]
        s = pa * np.sin(TWO_PI * x / lat.extents[0])
        scale = constants.charge_e / (constants.hbar * constants.light_c)
        psi = psi * np.exp(1j * scale * s)
    return psi


def make_gauge(lat: Lattice, name: str, params: dict) -> GaugeField:
    if name == "zero":
        return GaugeField.zero(lat)
    if name == "static-sine-a0":
        amp = params.get("amplitude", 0.5)
        m = int(params.get("mode_number", 1))
        x = lat.coords()[0]
        a0 = amp * np.sin(TWO_PI * m * x / lat.extents[0])
        return GaugeField(a0=a0, avec=lat.vector_zeros())
    if name == "constant-b":
        # Symmetric gauge around the box center; discontinuous across the
        # periodic seam, intended for interior diagnostics only.
        if lat.dim != 2:
            raise ValidationError("constant-b needs a 2D lattice")
        b0 = params.get("b0", 1.0)
        xs = lat.coords()
        avec = lat.vector_zeros()
        avec[0] = -0.5 * b0 * (xs[1] - lat.extents[1] / 2.0)
        avec[1] = 0.5 * b0 * (xs[0] - lat.extents[0] / 2.0)
        return GaugeField(a0=lat.zeros(), avec=avec)
    raise ValidationError(f"unknown gauge preset {name!r}")
