"""Matter field, hydrodynamic decomposition, gauge field and field strength.

Conventions: psi = rho^{1/2} exp[(i e / hbar c) S], so the phase field S is
(hbar c / e) times the argument of psi. The metric is diag(1, -1, ..., -1);
the stored field-strength components are E_i = F_{0i} = d0 A_i - di A0 and,
in 2D, B = F_{12} = d1 A2 - d2 A1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DensityBelowFloor, NonpositiveDensity, WindingDetected
from .grid import Lattice, PhysicalConstants, partial

TWO_PI = 2.0 * np.pi

DEFAULT_FLOOR_FRACTION = 1e-12


@dataclass
class HydroFields:
    rho: np.ndarray
    phase: np.ndarray  # unwrapped, carries units hbar c / e


@dataclass
class GaugeField:
    a0: np.ndarray
    avec: np.ndarray  # shape (dim, *points)

    @staticmethod
    def zero(lat: Lattice) -> "GaugeField":
        return GaugeField(a0=lat.zeros(), avec=lat.vector_zeros())

    def copy(self) -> "GaugeField":
        return GaugeField(a0=self.a0.copy(), avec=self.avec.copy())


@dataclass
class FieldStrength:
    electric: np.ndarray            # (dim, *points), F_{0i}
    magnetic: Optional[np.ndarray]  # F_{12} in 2D, None in 1D


def density_floor_check(rho: np.ndarray, floor: Optional[float] = None) -> float:
    """Resolve the floor (default 1e-12 * max rho) and verify it holds."""
    if floor is None:
        floor = DEFAULT_FLOOR_FRACTION * float(np.max(rho))
    if float(np.min(rho)) < floor:
        site = int(np.argmin(rho))
        raise DensityBelowFloor(site, float(rho.flat[site]), floor)
    return floor


def _wrap(delta: np.ndarray) -> np.ndarray:
    """Wrap angle differences into (-pi, pi]."""
    return delta - TWO_PI * np.round(delta / TWO_PI)


def _unwrap_axis(theta: np.ndarray, axis: int) -> np.ndarray:
    """Path-integrate wrapped increments along one axis from index 0."""
    d = _wrap(np.diff(theta, axis=axis))
    start = np.take(theta, [0], axis=axis)
    return np.concatenate([start, start + np.cumsum(d, axis=axis)], axis=axis)


def unwrap_phase(lat: Lattice, theta: np.ndarray) -> np.ndarray:
    """Unwrap the angle field along axis-ordered paths from site 0.

    Raises WindingDetected when any fundamental cycle or (in 2D) any
    elementary plaquette carries nonzero winding.
    """
    # Fundamental cycle along axis 0 (at the origin of the other axes).
    line0 = theta[(slice(None),) + (0,) * (lat.dim - 1)]
    w = np.sum(_wrap(np.diff(np.concatenate([line0, line0[:1]]))))
    if abs(w) > np.pi:
        raise WindingDetected(f"winding {w / TWO_PI:+.2f} around the axis-0 cycle")
    if lat.dim == 1:
        return _unwrap_axis(theta, 0)
    # Axis-1 fundamental cycle at x index 0.
    line1 = theta[0, :]
    w = np.sum(_wrap(np.diff(np.concatenate([line1, line1[:1]]))))
    if abs(w) > np.pi:
        raise WindingDetected(f"winding {w / TWO_PI:+.2f} around the axis-1 cycle")
    # Elementary plaquettes: sum of wrapped increments around each loop.
    dx = _wrap(np.roll(theta, -1, axis=0) - theta)
    dy = _wrap(np.roll(theta, -1, axis=1) - theta)
    circ = dx + np.roll(dy, -1, axis=0) - np.roll(dx, -1, axis=1) - dy
    bad = np.abs(circ) > np.pi
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise WindingDetected(f"vortex on plaquette ({i}, {j})")
    # Unwrap along axis 0 first (column 0 path), then along axis 1.
    u = _unwrap_axis(theta, 0)
    return _unwrap_axis(u, 1)


def decompose(
    lat: Lattice,
    psi: np.ndarray,
    constants: PhysicalConstants,
    floor: Optional[float] = None,
) -> HydroFields:
    """Split psi into density and unwrapped phase (hbar c / e units)."""
    rho = (psi * np.conj(psi)).real
    density_floor_check(rho, floor)
    theta = unwrap_phase(lat, np.angle(psi))
    scale = constants.hbar * constants.light_c / constants.charge_e
    return HydroFields(rho=rho, phase=scale * theta)


def recompose(h: HydroFields, constants: PhysicalConstants) -> np.ndarray:
    """psi = rho^{1/2} exp[(i e / hbar c) S], evaluated pointwise."""
    if np.min(h.rho) <= 0:
        raise NonpositiveDensity(f"min density {np.min(h.rho):.3e}")
    scale = constants.charge_e / (constants.hbar * constants.light_c)
    return np.sqrt(h.rho) * np.exp(1j * scale * h.phase)


def grad_phase_local(
    lat: Lattice,
    psi: np.ndarray,
    rho: np.ndarray,
    constants: PhysicalConstants,
) -> np.ndarray:
    """Gradient of the phase field without unwrapping: (hbar c / e) Im(psi* grad psi) / rho.

    Winding-safe: used inside evolution right-hand sides.
    """
    scale = constants.hbar * constants.light_c / constants.charge_e
    out = np.empty((lat.dim,) + lat.points)
    cpsi = np.conj(psi)
    for a in range(lat.dim):
        out[a] = scale * (cpsi * partial(lat, psi, a)).imag / rho
    return out


def field_strength(
    lat: Lattice,
    g: GaugeField,
    g_prev: Optional[GaugeField] = None,
    dt: Optional[float] = None,
    constants: PhysicalConstants = PhysicalConstants(),
) -> FieldStrength:
    """E_i = F_{0i} with a backward time difference; B = F_{12} in 2D.

    For static fields pass g_prev=None (or g itself): the time term drops.
    """
    electric = np.empty((lat.dim,) + lat.points)
    for a in range(lat.dim):
        electric[a] = -partial(lat, g.a0, a)
        if g_prev is not None and g_prev is not g:
            if dt is None or dt <= 0:
                raise ValueError("dt > 0 required for a time-dependent vector potential")
            electric[a] += (g.avec[a] - g_prev.avec[a]) / (constants.light_c * dt)
    magnetic = None
    if lat.dim == 2:
        magnetic = partial(lat, g.avec[1], 0) - partial(lat, g.avec[0], 1)
    return FieldStrength(electric=electric, magnetic=magnetic)
