"""Physical constants and discrete calculus on periodic uniform lattices.

All derivative operators are second-order central stencils with periodic
wraparound; one documented stencil per operator so that discrete identities
(summation by parts, divergence theorem) hold exactly:

  partial        (f[i+1] - f[i-1]) / (2 dx)          antisymmetric
  second_partial (f[i+1] - 2 f[i] + f[i-1]) / dx^2   symmetric (1-2-1)
  laplacian      sum of second_partial over axes
  integrate      rectangle rule, sum * cell volume

Scalar fields are plain numpy arrays of shape lattice.points; vector fields
carry a leading component axis of length lattice.dim.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0
    charge_e: float = 1.0
    light_c: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "charge_e", "light_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"constant {name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class Lattice:
    """Periodic uniform grid in 1 or 2 spatial dimensions.

    Site indexing is row-major (numpy C order): in 2D, site k maps to
    (k // N2, k % N2) with axis 0 the x axis.
    """

    extents: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(float(L) for L in self.extents))
        object.__setattr__(self, "points", tuple(int(N) for N in self.points))
        if len(self.extents) != len(self.points):
            raise ValueError("extents and points must have the same length")
        if self.dim not in (1, 2):
            raise ValueError(f"only 1 or 2 spatial dimensions supported, got {self.dim}")
        for L, N in zip(self.extents, self.points):
            if L <= 0:
                raise ValueError(f"extent must be positive, got {L}")
            if N < 8:
                raise ValueError(f"need at least 8 points per axis, got {N}")

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.extents, self.points))

    @property
    def num_sites(self) -> int:
        n = 1
        for N in self.points:
            n *= N
        return n

    @property
    def cell_volume(self) -> float:
        v = 1.0
        for dx in self.spacing:
            v *= dx
        return v

    def axis_coords(self, axis: int) -> np.ndarray:
        N = self.points[axis]
        return np.arange(N) * self.spacing[axis]

    def coords(self) -> list[np.ndarray]:
        """Coordinate arrays of shape self.points, one per axis ('ij' indexing)."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        if self.dim == 1:
            return axes
        return list(np.meshgrid(*axes, indexing="ij"))

    def zeros(self, dtype=float) -> np.ndarray:
        return np.zeros(self.points, dtype=dtype)

    def vector_zeros(self, dtype=float) -> np.ndarray:
        return np.zeros((self.dim,) + self.points, dtype=dtype)


def partial(lat: Lattice, f: np.ndarray, axis: int) -> np.ndarray:
    """Second-order central difference along an axis, periodic."""
    if axis < 0 or axis >= lat.dim:
        raise IndexError(f"axis {axis} out of range for dim {lat.dim}")
    dx = lat.spacing[axis]
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * dx)


def second_partial(lat: Lattice, f: np.ndarray, axis: int) -> np.ndarray:
    """Compact 1-2-1 second derivative along an axis, periodic."""
    if axis < 0 or axis >= lat.dim:
        raise IndexError(f"axis {axis} out of range for dim {lat.dim}")
    dx = lat.spacing[axis]
    return (np.roll(f, -1, axis=axis) - 2.0 * f + np.roll(f, 1, axis=axis)) / (dx * dx)


def laplacian(lat: Lattice, f: np.ndarray) -> np.ndarray:
    out = second_partial(lat, f, 0)
    for a in range(1, lat.dim):
        out = out + second_partial(lat, f, a)
    return out


def gradient(lat: Lattice, f: np.ndarray) -> np.ndarray:
    """Stack of partials, shape (dim, *points)."""
    return np.stack([partial(lat, f, a) for a in range(lat.dim)])


def divergence(lat: Lattice, v: np.ndarray) -> np.ndarray:
    out = partial(lat, v[0], 0)
    for a in range(1, lat.dim):
        out = out + partial(lat, v[a], a)
    return out


def integrate(lat: Lattice, f: np.ndarray) -> float:
    """Rectangle rule; spectrally accurate for smooth periodic fields."""
    return float(np.sum(f) * lat.cell_volume)
