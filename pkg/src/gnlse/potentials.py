"""Nonlinear potentials, functional derivatives, nonlinearity split, currents.

The potential density U([rho],[S],A) is evaluated pointwise from a bundle of
site arguments (rho, grad rho, S, grad S, hess S, A). Functional derivatives
are realized as the exact gradient of the discretized action sum(U) * dV,
which keeps the discrete conservation identities exact:

  d/d rho    : dU/drho - sum_i D_i(dU/d(di rho))
  d/d S      : dU/dS - sum_i D_i(dU/d(di S)) + sum_ij adj(d_i d_j)(dU/d(dij S))
  d/d(di S)  : dU/d(di S) - sum_j D_j(dU/d(dj di S))   (promoted-gradient view)
  d/d(di rho): dU/d(di rho)

Central first differences are antisymmetric and the 1-2-1 second difference
is symmetric, so the adjoints above are exact on the periodic lattice.

Two tracks: closed forms for the diffusion-family (Doebner-Goldin) kinds,
assembled from the same stencils as the numeric engine so they agree to
finite-differencing error; and a numeric engine that only needs the density
evaluator and its declared dependency signature. The closed-vs-numeric
cross-check is the correctness oracle.

Sign note: the current is (e/mc)(grad S - A) rho + (c/e) d/d(di S) of the
action. The alternative "+A" printing is inconsistent with the bilinear
current, the diffusion-family current and minimal coupling, and is not used.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import UnknownSlot
from .fields import GaugeField, HydroFields, density_floor_check
from .grid import (
    Lattice,
    PhysicalConstants,
    divergence,
    gradient,
    integrate,
    partial,
    second_partial,
)

ALL_SLOTS = ("rho", "drho", "s", "ds", "dds", "a")

DEFAULT_H_FD = 1e-5


@dataclass
class ArgsBundle:
    """Pointwise arguments a potential density may read.

    dds[i, j] = d_i d_j S: compact 1-2-1 stencil on the diagonal, repeated
    central differences off it.
    """

    rho: np.ndarray
    drho: np.ndarray                 # (dim, *points)
    s: Optional[np.ndarray]          # None when only grad S is known
    ds: np.ndarray                   # (dim, *points)
    dds: np.ndarray                  # (dim, dim, *points)
    avec: np.ndarray                 # (dim, *points)

    def replaced(self, **kw) -> "ArgsBundle":
        d = {k: getattr(self, k) for k in ("rho", "drho", "s", "ds", "dds", "avec")}
        d.update(kw)
        return ArgsBundle(**d)


def build_args(lat: Lattice, h: HydroFields, g: GaugeField) -> ArgsBundle:
    s = h.phase
    ds = gradient(lat, s)
    dds = np.empty((lat.dim, lat.dim) + lat.points)
    for i in range(lat.dim):
        for j in range(lat.dim):
            if i == j:
                dds[i, j] = second_partial(lat, s, i)
            else:
                dds[i, j] = partial(lat, ds[j], i)
    return ArgsBundle(
        rho=h.rho, drho=gradient(lat, h.rho), s=s, ds=ds, dds=dds, avec=g.avec
    )


def build_args_from_grad(
    lat: Lattice, rho: np.ndarray, grad_s: np.ndarray, g: GaugeField
) -> ArgsBundle:
    """Winding-safe bundle for evolution: no bare S available."""
    dds = np.empty((lat.dim, lat.dim) + lat.points)
    for i in range(lat.dim):
        for j in range(lat.dim):
            dds[i, j] = partial(lat, grad_s[j], i)
    return ArgsBundle(
        rho=rho, drho=gradient(lat, rho), s=None, ds=grad_s, dds=dds, avec=g.avec
    )


@dataclass(frozen=True)
class PotentialSpec:
    """A nonlinear potential: diffusion-family closed instance or generic density."""

    kind: str                              # dg_gauged | dg_ungauged | generic
    nu: float = 0.0
    alpha: float = 0.0
    name: str = ""
    density_fn: Optional[Callable[[ArgsBundle], np.ndarray]] = None
    signature: frozenset = frozenset()

    @staticmethod
    def dg_gauged(nu: float, alpha: float) -> "PotentialSpec":
        return PotentialSpec(
            kind="dg_gauged", nu=nu, alpha=alpha, name="dg_gauged",
            signature=frozenset({"rho", "drho", "ds", "dds", "a"}),
        )

    @staticmethod
    def dg_ungauged(nu: float, alpha: float) -> "PotentialSpec":
        return PotentialSpec(
            kind="dg_ungauged", nu=nu, alpha=alpha, name="dg_ungauged",
            signature=frozenset({"rho", "drho", "ds", "dds"}),
        )

    @staticmethod
    def generic(fn, signature, name="generic") -> "PotentialSpec":
        sig = frozenset(signature)
        unknown = sig - set(ALL_SLOTS)
        if unknown:
            raise ValueError(f"unknown signature slots {sorted(unknown)}")
        return PotentialSpec(
            kind="generic", name=name, density_fn=fn, signature=sig
        )

    @property
    def is_dg(self) -> bool:
        return self.kind in ("dg_gauged", "dg_ungauged")


def _dg_kappa(p: PotentialSpec, c: PhysicalConstants) -> float:
    if p.kind == "dg_gauged":
        return p.nu * c.charge_e / (2.0 * c.light_c)
    return p.nu / 2.0


def eval_density(
    p: PotentialSpec, lat: Lattice, args: ArgsBundle, c: PhysicalConstants
) -> np.ndarray:
    """Potential density per site."""
    if p.kind == "generic":
        return p.density_fn(args)
    kappa = _dg_kappa(p, c)
    gauged = p.kind == "dg_gauged"
    avec = args.avec if gauged else np.zeros_like(args.avec)
    lap_s = args.dds[0, 0].copy()
    for i in range(1, lat.dim):
        lap_s += args.dds[i, i]
    div_a = divergence(lat, avec) if gauged else 0.0
    cross = np.zeros_like(args.rho)
    grad2 = np.zeros_like(args.rho)
    for i in range(lat.dim):
        cross += args.drho[i] * (args.ds[i] - avec[i])
        grad2 += args.drho[i] ** 2
    return (
        kappa * (args.rho * (lap_s - div_a) - cross)
        + p.alpha * c.hbar**2 / c.mass * grad2 / args.rho
    )


def action(p: PotentialSpec, lat: Lattice, args: ArgsBundle, c: PhysicalConstants) -> float:
    return integrate(lat, eval_density(p, lat, args, c))


# ---------------------------------------------------------------------------
# Numeric functional-derivative engine
# ---------------------------------------------------------------------------

def _density_of(p: PotentialSpec, lat: Lattice, c: PhysicalConstants):
    return lambda args: eval_density(p, lat, args, c)


def _fd_step(arr: np.ndarray, h_fd: float) -> float:
    return h_fd * max(1.0, float(np.max(np.abs(arr))))


def _pointwise_partials(
    p: PotentialSpec,
    lat: Lattice,
    args: ArgsBundle,
    c: PhysicalConstants,
    h_fd: float,
) -> dict:
    """Central-difference dU/d(arg) per site for every declared argument."""
    fn = _density_of(p, lat, c)
    sig = p.signature
    out = {}
    if "rho" in sig:
        h = _fd_step(args.rho, h_fd)
        out["rho"] = (fn(args.replaced(rho=args.rho + h)) - fn(args.replaced(rho=args.rho - h))) / (2 * h)
    if "drho" in sig:
        parts = []
        for i in range(lat.dim):
            h = _fd_step(args.drho, h_fd)
            up, dn = args.drho.copy(), args.drho.copy()
            up[i] += h
            dn[i] -= h
            parts.append((fn(args.replaced(drho=up)) - fn(args.replaced(drho=dn))) / (2 * h))
        out["drho"] = np.stack(parts)
    if "s" in sig:
        if args.s is None:
            raise UnknownSlot("potential reads bare S but only grad S is available")
        h = _fd_step(args.s, h_fd)
        out["s"] = (fn(args.replaced(s=args.s + h)) - fn(args.replaced(s=args.s - h))) / (2 * h)
    if "ds" in sig:
        parts = []
        for i in range(lat.dim):
            h = _fd_step(args.ds, h_fd)
            up, dn = args.ds.copy(), args.ds.copy()
            up[i] += h
            dn[i] -= h
            parts.append((fn(args.replaced(ds=up)) - fn(args.replaced(ds=dn))) / (2 * h))
        out["ds"] = np.stack(parts)
    if "dds" in sig:
        parts = np.empty_like(args.dds)
        for i in range(lat.dim):
            for j in range(lat.dim):
                h = _fd_step(args.dds, h_fd)
                up, dn = args.dds.copy(), args.dds.copy()
                up[i, j] += h
                dn[i, j] -= h
                parts[i, j] = (fn(args.replaced(dds=up)) - fn(args.replaced(dds=dn))) / (2 * h)
        out["dds"] = parts
    return out


def numeric_functional_derivative(
    p: PotentialSpec,
    slot: str,
    lat: Lattice,
    args: ArgsBundle,
    c: PhysicalConstants,
    h_fd: float = DEFAULT_H_FD,
) -> np.ndarray:
    """Discrete Euler-Lagrange derivative of sum(U) dV via the engine."""
    kind, axis = parse_slot(slot, lat.dim)
    pw = _pointwise_partials(p, lat, args, c, h_fd)
    zero = np.zeros(lat.points)
    if kind == "rho":
        out = pw.get("rho", zero).copy()
        if "drho" in pw:
            for i in range(lat.dim):
                out -= partial(lat, pw["drho"][i], i)
        return out
    if kind == "S":
        out = pw.get("s", zero).copy()
        if "ds" in pw:
            for i in range(lat.dim):
                out -= partial(lat, pw["ds"][i], i)
        if "dds" in pw:
            for i in range(lat.dim):
                for j in range(lat.dim):
                    if i == j:
                        out += second_partial(lat, pw["dds"][i, i], i)
                    else:
                        out += partial(lat, partial(lat, pw["dds"][i, j], j), i)
        return out
    if kind == "dS":
        out = pw["ds"][axis].copy() if "ds" in pw else zero.copy()
        if "dds" in pw:
            for j in range(lat.dim):
                out -= partial(lat, pw["dds"][j, axis], j)
        return out
    if kind == "drho":
        return pw["drho"][axis].copy() if "drho" in pw else zero.copy()
    raise UnknownSlot(slot)


def parse_slot(slot: str, dim: int):
    """Slots: 'rho', 'S', 'dS_<axis>', 'drho_<axis>'."""
    if slot == "rho":
        return "rho", None
    if slot == "S":
        return "S", None
    for prefix in ("dS", "drho"):
        if slot.startswith(prefix + "_"):
            try:
                axis = int(slot[len(prefix) + 1:])
            except ValueError:
                raise UnknownSlot(slot) from None
            if not 0 <= axis < dim:
                raise UnknownSlot(f"{slot}: axis out of range for dim {dim}")
            return prefix, axis
    raise UnknownSlot(slot)


# ---------------------------------------------------------------------------
# Closed forms for the diffusion family
# ---------------------------------------------------------------------------

def _dg_avec(p: PotentialSpec, args: ArgsBundle) -> np.ndarray:
    return args.avec if p.kind == "dg_gauged" else np.zeros_like(args.avec)


def dg_slot_ds(p, axis, lat, args, c) -> np.ndarray:
    """d/d(d_axis S) of the action: -2 kappa d_axis rho."""
    return -2.0 * _dg_kappa(p, c) * args.drho[axis]


def dg_slot_drho(p, axis, lat, args, c) -> np.ndarray:
    kappa = _dg_kappa(p, c)
    avec = _dg_avec(p, args)
    return (
        -kappa * (args.ds[axis] - avec[axis])
        + 2.0 * p.alpha * c.hbar**2 / c.mass * args.drho[axis] / args.rho
    )


def dg_slot_s(p, lat, args, c) -> np.ndarray:
    """d/dS of the action: kappa (D.D rho + lap_121 rho); continuum 2 kappa lap rho."""
    kappa = _dg_kappa(p, c)
    wide = divergence(lat, args.drho)
    compact = second_partial(lat, args.rho, 0)
    for a in range(1, lat.dim):
        compact += second_partial(lat, args.rho, a)
    return kappa * (wide + compact)


def dg_slot_rho(p, lat, args, c) -> np.ndarray:
    """W: the real nonlinearity, assembled from the same stencils as the engine."""
    kappa = _dg_kappa(p, c)
    avec = _dg_avec(p, args)
    alpha_c = p.alpha * c.hbar**2 / c.mass
    lap_s_compact = args.dds[0, 0].copy()
    for i in range(1, lat.dim):
        lap_s_compact += args.dds[i, i]
    v = args.ds - avec  # grad S - A
    div_v = divergence(lat, v)
    div_a = divergence(lat, avec)
    grad2 = np.zeros_like(args.rho)
    div_ratio = np.zeros_like(args.rho)
    for i in range(lat.dim):
        grad2 += (args.drho[i] / args.rho) ** 2
        div_ratio += partial(lat, args.drho[i] / args.rho, i)
    return (
        kappa * (lap_s_compact - div_a)
        + kappa * div_v
        - alpha_c * (grad2 + 2.0 * div_ratio)
    )


def closed_functional_derivative(
    p: PotentialSpec, slot: str, lat: Lattice, args: ArgsBundle, c: PhysicalConstants
) -> np.ndarray:
    if not p.is_dg:
        raise UnknownSlot(f"no closed form for potential kind {p.kind}")
    kind, axis = parse_slot(slot, lat.dim)
    if kind == "rho":
        return dg_slot_rho(p, lat, args, c)
    if kind == "S":
        return dg_slot_s(p, lat, args, c)
    if kind == "dS":
        return dg_slot_ds(p, axis, lat, args, c)
    if kind == "drho":
        return dg_slot_drho(p, axis, lat, args, c)
    raise UnknownSlot(slot)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

@dataclass
class NonlinearitySplit:
    w_real: np.ndarray
    w_imag: np.ndarray


@dataclass
class CurrentSet:
    j_full: np.ndarray
    j_bilinear: np.ndarray
    j_qm: np.ndarray


def functional_derivative(
    p: PotentialSpec,
    slot: str,
    lat: Lattice,
    h: HydroFields,
    g: GaugeField,
    c: PhysicalConstants,
    h_fd: float = DEFAULT_H_FD,
    method: str = "auto",
    floor: Optional[float] = None,
) -> np.ndarray:
    density_floor_check(h.rho, floor)
    args = build_args(lat, h, g)
    if method == "closed" or (method == "auto" and p.is_dg):
        return closed_functional_derivative(p, slot, lat, args, c)
    return numeric_functional_derivative(p, slot, lat, args, c, h_fd)


def nonlinearity_split(
    p: PotentialSpec,
    lat: Lattice,
    h: HydroFields,
    g: GaugeField,
    c: PhysicalConstants,
    h_fd: float = DEFAULT_H_FD,
    method: str = "auto",
    floor: Optional[float] = None,
) -> NonlinearitySplit:
    """Real part W = d/d rho of the action; imaginary part
    (hbar c / 2 e rho) d/dS of the action."""
    w = functional_derivative(p, "rho", lat, h, g, c, h_fd, method, floor)
    ds = functional_derivative(p, "S", lat, h, g, c, h_fd, method, floor)
    w_imag = ds * (c.hbar * c.light_c / (2.0 * c.charge_e)) / h.rho
    return NonlinearitySplit(w_real=w, w_imag=w_imag)


def bilinear_current(
    lat: Lattice,
    rho: np.ndarray,
    grad_phase: np.ndarray,
    avec: np.ndarray,
    c: PhysicalConstants,
) -> np.ndarray:
    """(e/mc)(grad S - A) rho, the standard quantum-mechanical current."""
    coef = c.charge_e / (c.mass * c.light_c)
    return coef * (grad_phase - avec) * rho


def currents(
    p: PotentialSpec,
    lat: Lattice,
    h: HydroFields,
    g: GaugeField,
    c: PhysicalConstants,
    h_fd: float = DEFAULT_H_FD,
    method: str = "auto",
    floor: Optional[float] = None,
) -> CurrentSet:
    density_floor_check(h.rho, floor)
    args = build_args(lat, h, g)
    j_qm = bilinear_current(lat, h.rho, args.ds, g.avec, c)
    j_full = j_qm.copy()
    ratio = c.light_c / c.charge_e
    for i in range(lat.dim):
        slot = f"dS_{i}"
        if method == "closed" or (method == "auto" and p.is_dg):
            extra = closed_functional_derivative(p, slot, lat, args, c)
        else:
            extra = numeric_functional_derivative(p, slot, lat, args, c, h_fd)
        j_full[i] += ratio * extra
    return CurrentSet(j_full=j_full, j_bilinear=j_qm.copy(), j_qm=j_qm)


def total_charge(lat: Lattice, h: HydroFields, c: PhysicalConstants) -> float:
    return c.charge_e * integrate(lat, h.rho)


def continuity_source(
    p: PotentialSpec,
    lat: Lattice,
    h: HydroFields,
    g: GaugeField,
    c: PhysicalConstants,
    h_fd: float = DEFAULT_H_FD,
) -> np.ndarray:
    """(c/e) times the bare-S sensitivity of U; zero whenever the potential
    depends on S only through derivatives (every diffusion-family kind)."""
    if "s" not in p.signature:
        return lat.zeros()
    args = build_args(lat, h, g)
    pw = _pointwise_partials(p, lat, args, c, h_fd)
    return (c.light_c / c.charge_e) * pw["s"]


def check_signature(
    p: PotentialSpec,
    lat: Lattice,
    h: HydroFields,
    g: GaugeField,
    c: PhysicalConstants,
    rel_tol: float = 1e-9,
    seed: int = 0,
) -> None:
    """Verify the declared dependency signature: perturbing an undeclared
    argument must not change the density. Raises ValueError otherwise."""
    args = build_args(lat, h, g)
    base = eval_density(p, lat, args, c)
    scale = max(1.0, float(np.max(np.abs(base))))
    rng = np.random.default_rng(seed)
    for slot in ALL_SLOTS:
        name = "avec" if slot == "a" else slot
        if slot in p.signature:
            continue
        cur = getattr(args, name)
        if cur is None:
            continue
        bump = 0.1 * rng.standard_normal(cur.shape) * max(1.0, float(np.max(np.abs(cur))))
        probed = eval_density(p, lat, args.replaced(**{name: cur + bump}), c)
        if float(np.max(np.abs(probed - base))) > rel_tol * scale:
            raise ValueError(
                f"potential {p.name!r} is sensitive to undeclared slot {slot!r}"
            )


# Named generic densities usable from configuration files.

def _gen_rho_squared(args: ArgsBundle) -> np.ndarray:
    return args.rho**2


def _gen_rho2_ds1(args: ArgsBundle) -> np.ndarray:
    # rho^2 * d1 S: fails the integrability condition on y-dependent rho.
    return args.rho**2 * args.ds[0]


def _gen_rho_s(args: ArgsBundle) -> np.ndarray:
    return args.rho * args.s


def _gen_rho_dxs_sq(args: ArgsBundle) -> np.ndarray:
    return args.rho * args.ds[0] ** 2


GENERIC_POTENTIALS = {
    "generic-rho-squared": (_gen_rho_squared, {"rho"}),
    "generic-rho2-ds1": (_gen_rho2_ds1, {"rho", "ds"}),
    "generic-rho-s": (_gen_rho_s, {"rho", "s"}),
    "generic-rho-dxs-squared": (_gen_rho_dxs_sq, {"rho", "ds"}),
}


def make_generic(name: str) -> PotentialSpec:
    try:
        fn, sig = GENERIC_POTENTIALS[name]
    except KeyError:
        raise ValueError(f"unknown generic potential {name!r}") from None
    return PotentialSpec.generic(fn, sig, name=name)


def dg_as_generic(p: PotentialSpec, lat: Lattice, c: PhysicalConstants) -> PotentialSpec:
    """Wrap a diffusion-family potential as a generic density (engine fodder)."""
    if not p.is_dg:
        raise ValueError("expected a diffusion-family potential")
    fn = lambda args: eval_density(p, lat, args, c)
    return PotentialSpec.generic(fn, p.signature, name=p.name + "-as-generic")
