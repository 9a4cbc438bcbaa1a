"""Time integration (method of lines, classical RK4) of the gauged NLSE
with complex nonlinearity, of both linearized forms, and field-equation
diagnostics.

The right-hand side is
    dpsi/dt = (1 / i hbar) [ -(hbar^2/2m) D^2 psi + (W + i Wim) psi + e A0 psi ]
with the minimal-coupling expansion
    D^2 psi = lap psi - (2ie/hbar c) A . grad psi
              - (ie/hbar c)(div A) psi - (e/hbar c)^2 |A|^2 psi.
The linearized equations have Wim = 0 and, for the gauge route, chi_mu in
place of A_mu. Phase gradients are taken gauge-locally from
Im(psi* grad psi)/rho, so evolution never needs phase unwrapping.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    DensityBelowFloor,
    InversionUnavailable,
    NonFiniteDetected,
    SolverFailure,
    StabilityViolation,
)
from .fields import (
    GaugeField,
    HydroFields,
    field_strength,
    grad_phase_local,
    unwrap_phase,
)
from .grid import Lattice, PhysicalConstants, divergence, gradient, integrate, partial
from .potentials import (
    DEFAULT_H_FD,
    PotentialSpec,
    bilinear_current,
    build_args,
    build_args_from_grad,
    closed_functional_derivative,
    dg_slot_rho,
    dg_slot_s,
    numeric_functional_derivative,
)
from .transforms import dg_bracket, dg_bracket_coefficient, dg_sigma_coefficient

STABILITY_COEFFICIENT = 0.2


@dataclass
class EvolutionState:
    wave: np.ndarray
    gauge: GaugeField
    time: float = 0.0
    step_count: int = 0


@dataclass
class IntegratorConfig:
    dt: float
    t_final: float
    snapshot_stride: int = 1
    scheme: str = "rk4"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


def stability_guard(lat: Lattice, dt: float, c: PhysicalConstants) -> None:
    """Explicit-scheme guard: dt <= 0.2 dx_min^2 m / hbar, checked at start."""
    dx2 = min(lat.spacing) ** 2
    limit = STABILITY_COEFFICIENT * dx2 * c.mass / c.hbar
    if dt > limit:
        raise StabilityViolation(
            f"dt = {dt:.3e} exceeds stability limit {limit:.3e}"
        )


def _floor_check(rho: np.ndarray, floor: Optional[float]) -> None:
    if floor is None:
        floor = 1e-12 * float(np.max(rho))
    mn = float(np.min(rho))
    if mn < floor:
        raise DensityBelowFloor(int(np.argmin(rho)), mn, floor)


def gauged_laplacian(
    lat: Lattice, psi: np.ndarray, avec: np.ndarray, c: PhysicalConstants
) -> np.ndarray:
    """Term-by-term expansion of (grad - (ie/hbar c) A)^2 psi."""
    from .grid import laplacian

    a = c.charge_e / (c.hbar * c.light_c)
    out = laplacian(lat, psi).astype(complex)
    asq = np.zeros(lat.points)
    diva = np.zeros(lat.points)
    for i in range(lat.dim):
        out -= 2j * a * avec[i] * partial(lat, psi, i)
        asq += avec[i] ** 2
        diva += partial(lat, avec[i], i)
    out -= (1j * a * diva + a * a * asq) * psi
    return out


def _nonlinearity_original(p, lat, psi, rho, grad_s, gauge, c, h_fd, method):
    """(W, Wim) for the untransformed equation, winding-safe when possible."""
    if "s" in p.signature:
        scale = c.hbar * c.light_c / c.charge_e
        phase = scale * unwrap_phase(lat, np.angle(psi))
        args = build_args(lat, HydroFields(rho=rho, phase=phase), gauge)
    else:
        args = build_args_from_grad(lat, rho, grad_s, gauge)
    use_closed = method == "closed" or (method == "auto" and p.is_dg)
    if use_closed:
        w = dg_slot_rho(p, lat, args, c)
        ds = dg_slot_s(p, lat, args, c)
    else:
        w = numeric_functional_derivative(p, "rho", lat, args, c, h_fd)
        ds = numeric_functional_derivative(p, "S", lat, args, c, h_fd)
    wim = ds * (c.hbar * c.light_c / (2.0 * c.charge_e)) / rho
    return w, wim


def make_rhs(
    p: PotentialSpec,
    c: PhysicalConstants,
    equation: str = "original",
    floor: Optional[float] = None,
    h_fd: float = DEFAULT_H_FD,
    method: str = "auto",
) -> Callable[[Lattice, np.ndarray, GaugeField], np.ndarray]:
    """Right-hand-side factory. equation: original | transformed_a | transformed_b."""
    if equation not in ("original", "transformed_a", "transformed_b"):
        raise ValueError(f"unknown equation {equation!r}")
    if equation != "original" and not p.is_dg:
        raise InversionUnavailable(
            "linearized evolution is implemented for the diffusion family"
        )

    inv_ih = 1.0 / (1j * c.hbar)
    kin = -c.hbar**2 / (2.0 * c.mass)

    def rhs(lat: Lattice, psi: np.ndarray, gauge: GaugeField) -> np.ndarray:
        rho = (psi * np.conj(psi)).real
        _floor_check(rho, floor)
        if equation == "original":
            grad_s = grad_phase_local(lat, psi, rho, c)
            w, wim = _nonlinearity_original(
                p, lat, psi, rho, grad_s, gauge, c, h_fd, method
            )
            return inv_ih * (
                kin * gauged_laplacian(lat, psi, gauge.avec, c)
                + (w + 1j * wim) * psi
                + c.charge_e * gauge.a0 * psi
            )
        w = dg_bracket_coefficient(p, c) * dg_bracket(lat, rho)
        if equation == "transformed_a":
            avec, a0 = gauge.avec, gauge.a0
        else:
            # Gauge route: both potentials recomputed from the running state.
            sc = dg_sigma_coefficient(p, c)
            grad_sigma = sc * gradient(lat, rho) / rho
            avec = gauge.avec - grad_sigma
            grad_s = grad_phase_local(lat, psi, rho, c)
            flux = (grad_s - avec) * rho
            a0 = gauge.a0 - (
                sc * c.charge_e / (c.mass * c.light_c**2 * rho)
            ) * divergence(lat, flux)
        return inv_ih * (
            kin * gauged_laplacian(lat, psi, avec, c)
            + w * psi
            + c.charge_e * a0 * psi
        )

    return rhs


def rk4_step(
    lat: Lattice,
    state: EvolutionState,
    rhs: Callable,
    dt: float,
) -> EvolutionState:
    """One classical Runge-Kutta step; deterministic and NaN-guarded."""
    psi, g = state.wave, state.gauge
    k1 = rhs(lat, psi, g)
    k2 = rhs(lat, psi + 0.5 * dt * k1, g)
    k3 = rhs(lat, psi + 0.5 * dt * k2, g)
    k4 = rhs(lat, psi + dt * k3, g)
    new = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new.view(float))):
        bad = int(np.argmax(~np.isfinite(new.view(float))) // 2)
        raise NonFiniteDetected(state.step_count + 1, bad)
    return EvolutionState(
        wave=new,
        gauge=g,
        time=(state.step_count + 1) * dt,
        step_count=state.step_count + 1,
    )


def run(
    lat: Lattice,
    state0: EvolutionState,
    rhs: Callable,
    cfg: IntegratorConfig,
    c: PhysicalConstants,
) -> list[EvolutionState]:
    """Integrate to t_final, returning snapshots every snapshot_stride steps
    (the initial and final states always included)."""
    stability_guard(lat, cfg.dt, c)
    n_steps = int(round(cfg.t_final / cfg.dt))
    traj = [state0]
    state = state0
    for k in range(n_steps):
        state = rk4_step(lat, state, rhs, cfg.dt)
        if state.step_count % cfg.snapshot_stride == 0 or k == n_steps - 1:
            traj.append(state)
    return traj


# ---------------------------------------------------------------------------
# Field-equation diagnostics
# ---------------------------------------------------------------------------

def maxwell_residual(
    lat: Lattice,
    prev: EvolutionState,
    curr: EvolutionState,
    p: PotentialSpec,
    c: PhysicalConstants,
    current_kind: str = "full",
    subtract_background: bool = False,
    h_fd: float = DEFAULT_H_FD,
    method: str = "auto",
) -> dict:
    """Residual of d^mu F_{mu nu} = (e/c) J_nu per component nu.

    With prescribed external fields this is a report, not a constraint. The
    electric time derivative uses a backward difference of -grad A0 between
    the two snapshots; a time-varying vector potential between snapshots is
    not resolved at this order.
    """
    dt = curr.time - prev.time
    psi = curr.wave
    rho = (psi * np.conj(psi)).real
    grad_s = grad_phase_local(lat, psi, rho, c)
    args = build_args_from_grad(lat, rho, grad_s, curr.gauge)
    if current_kind == "bilinear":
        j = bilinear_current(lat, rho, grad_s, curr.gauge.avec, c)
    elif current_kind == "full":
        j = bilinear_current(lat, rho, grad_s, curr.gauge.avec, c)
        use_closed = method == "closed" or (method == "auto" and p.is_dg)
        for i in range(lat.dim):
            slot = f"dS_{i}"
            if use_closed:
                extra = closed_functional_derivative(p, slot, lat, args, c)
            else:
                extra = numeric_functional_derivative(p, slot, lat, args, c, h_fd)
            j[i] += (c.light_c / c.charge_e) * extra
    else:
        raise ValueError(f"unknown current kind {current_kind!r}")

    f_now = field_strength(lat, curr.gauge, prev.gauge, dt if dt > 0 else None, c)
    f_prev = field_strength(lat, prev.gauge, constants=c)
    source_rho = rho - rho.mean() if subtract_background else rho
    out = {}
    out[0] = divergence(lat, f_now.electric) - c.charge_e * source_rho
    for a in range(lat.dim):
        r = (c.charge_e / c.light_c) * j[a]
        if dt > 0:
            r = r + (f_now.electric[a] - f_prev.electric[a]) / (c.light_c * dt)
        if lat.dim == 2 and f_now.magnetic is not None:
            # sum_i d_i F_{i a}: F_{21} = -B, F_{12} = B
            if a == 0:
                r = r + partial(lat, f_now.magnetic, 1)
            else:
                r = r - partial(lat, f_now.magnetic, 0)
        out[a + 1] = r
    return out


# ---------------------------------------------------------------------------
# Self-consistent 1+1D electrostatic mode
# ---------------------------------------------------------------------------

def solve_poisson_1d(lat: Lattice, source: np.ndarray) -> np.ndarray:
    """Periodic solve of -lap a0 = source with the compact three-point
    Laplacian symbol, so the discrete Gauss law holds to round-off on every
    mode except the mean (the null space, removed from the source). The
    wide D-of-D stencil is deliberately avoided: its null space also
    contains the Nyquist mode, which the evolution slowly populates.
    """
    if lat.dim != 1:
        raise SolverFailure("electrostatic mode is one-dimensional")
    n = lat.points[0]
    dx = lat.spacing[0]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    sym = (2.0 - 2.0 * np.cos(k * dx)) / dx**2  # symbol of -lap_121
    shat = np.fft.fft(source)
    with np.errstate(divide="ignore", invalid="ignore"):
        ahat = np.where(sym > 1e-14, shat / sym, 0.0)
    a0 = np.fft.ifft(ahat).real
    return a0


def run_selfconsistent_1d(
    lat: Lattice,
    psi0: np.ndarray,
    p: PotentialSpec,
    cfg: IntegratorConfig,
    c: PhysicalConstants,
    floor: Optional[float] = None,
    h_fd: float = DEFAULT_H_FD,
    method: str = "auto",
):
    """Electrostatic surrogate of the coupled field equations in 1+1D:
    temporal-gauge A = 0 held fixed, A0 re-solved from the background-
    subtracted Gauss law at every stage (a periodic box cannot hold net
    charge). Returns (trajectory, gauss_residual_l2 per snapshot).
    """
    if lat.dim != 1:
        raise SolverFailure("electrostatic mode is one-dimensional")
    stability_guard(lat, cfg.dt, c)

    base = make_rhs(p, c, "original", floor=floor, h_fd=h_fd, method=method)

    def gauge_for(psi: np.ndarray) -> GaugeField:
        rho = (psi * np.conj(psi)).real
        src = c.charge_e * (rho - rho.mean())
        return GaugeField(a0=solve_poisson_1d(lat, src), avec=lat.vector_zeros())

    def rhs(lat_, psi, _gauge_ignored):
        return base(lat_, psi, gauge_for(psi))

    n_steps = int(round(cfg.t_final / cfg.dt))
    state = EvolutionState(wave=psi0, gauge=gauge_for(psi0), time=0.0, step_count=0)
    traj = [state]
    residuals = [gauss_residual_l2(lat, state, c)]
    for k in range(n_steps):
        nxt = rk4_step(lat, state, rhs, cfg.dt)
        state = EvolutionState(
            wave=nxt.wave, gauge=gauge_for(nxt.wave),
            time=nxt.time, step_count=nxt.step_count,
        )
        if state.step_count % cfg.snapshot_stride == 0 or k == n_steps - 1:
            traj.append(state)
            residuals.append(gauss_residual_l2(lat, state, c))
    return traj, residuals


def gauss_residual_l2(lat: Lattice, state: EvolutionState, c: PhysicalConstants) -> float:
    """L2 norm of the Gauss-law residual -lap a0 - e (rho - mean rho), with
    the same compact Laplacian the electrostatic solve inverts."""
    from .grid import laplacian

    rho = (state.wave * np.conj(state.wave)).real
    r = -laplacian(lat, state.gauge.a0) - c.charge_e * (rho - rho.mean())
    return float(np.sqrt(integrate(lat, r**2)))
