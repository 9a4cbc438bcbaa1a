"""Verification battery: the package's claims turned into assertions.

Every check produces records with an explicit tolerance and provenance
note; the battery always runs to completion (collect-then-report) so a
single regression still yields a full diagnostic picture. Convergence
orders are least-squares slopes over >= 3 refinement levels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GnlseError
from .evolve import (
    EvolutionState,
    IntegratorConfig,
    make_rhs,
    run,
)
from .fields import GaugeField, HydroFields, field_strength, grad_phase_local
from .grid import Lattice, PhysicalConstants, divergence, gradient, integrate
from .potentials import (
    PotentialSpec,
    bilinear_current,
    build_args,
    closed_functional_derivative,
    make_generic,
    numeric_functional_derivative,
    total_charge,
)
from .transforms import (
    Generator,
    check_condition,
    dg_sigma_coefficient,
    route_a_transform,
    route_b_transform,
)
from . import transforms


@dataclass
class CheckRecord:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"[{tag}] {self.name}: value={self.value:.6e} tol={self.tolerance:.6e}"
        if self.note:
            s += f"  ({self.note})"
        return s


@dataclass
class RefinementTable:
    name: str
    params: list
    errors: list
    order: float
    order_stderr: float

    def lines(self) -> list[str]:
        out = [f"  refinement {self.name}: order={self.order:.3f} "
               f"+/- {self.order_stderr:.3f}"]
        for p, e in zip(self.params, self.errors):
            out.append(f"    h={p:.6e}  err={e:.6e}")
        return out


@dataclass
class VerificationReport:
    records: list = field(default_factory=list)
    tables: list = field(default_factory=list)

    def add(self, name, value, tolerance, note="") -> CheckRecord:
        rec = CheckRecord(name, float(value), float(tolerance),
                          float(value) <= float(tolerance), note)
        self.records.append(rec)
        return rec

    def add_order(self, name, params, errors, low, high=np.inf, note="") -> CheckRecord:
        order, stderr = observed_order(params, errors)
        self.tables.append(RefinementTable(name, list(params), list(errors),
                                           order, stderr))
        rec = CheckRecord(name, order, low,
                          bool(low <= order <= high),
                          note or f"order window [{low}, {high}]")
        self.records.append(rec)
        return rec

    def add_failure(self, name, note) -> CheckRecord:
        rec = CheckRecord(name, float("nan"), 0.0, False, note)
        self.records.append(rec)
        return rec

    def merge(self, other: "VerificationReport") -> None:
        self.records.extend(other.records)
        self.tables.extend(other.tables)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def render(self) -> str:
        lines = [r.line() for r in self.records]
        for t in self.tables:
            lines.extend(t.lines())
        n_fail = sum(not r.passed for r in self.records)
        lines.append(f"summary: {len(self.records) - n_fail}/{len(self.records)} checks passed")
        return "\n".join(lines) + "\n"


def observed_order(params, errors) -> tuple[float, float]:
    """Least-squares slope of log(error) vs log(h) with slope uncertainty."""
    x = np.log(np.asarray(params, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two refinement levels")
    coeffs, cov = np.polyfit(x, y, 1, cov=True) if len(x) > 2 else (
        np.polyfit(x, y, 1), np.full((2, 2), np.nan))
    return float(coeffs[0]), float(np.sqrt(cov[0, 0])) if len(x) > 2 else float("nan")


def rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(b.ravel()))
    if denom == 0.0:
        return float(np.linalg.norm(a.ravel()))
    return float(np.linalg.norm((a - b).ravel())) / denom


def phase_aligned_discrepancy(a: np.ndarray, b: np.ndarray) -> float:
    """Relative L2 distance after the optimal global phase is applied to b."""
    ip = np.vdot(b, a)
    phase = ip / abs(ip) if abs(ip) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b) / np.linalg.norm(a))


# ---------------------------------------------------------------------------
# Individual checks
# ---------------------------------------------------------------------------

def density_equivalence(
    lat: Lattice,
    psi: np.ndarray,
    gen: Generator,
    c: PhysicalConstants,
    report: Optional[VerificationReport] = None,
    tol_factor: float = 1e-12,
) -> VerificationReport:
    """Unitarity of the matter-field route: site densities unchanged."""
    rep = report if report is not None else VerificationReport()
    rho = (psi * np.conj(psi)).real
    phi = route_a_transform(lat, psi, gen, c)
    rho_phi = (phi * np.conj(phi)).real
    diff = float(np.max(np.abs(rho_phi - rho)))
    rep.add("density-invariance(matter route)", diff,
            tol_factor * float(np.max(rho)), "max site |rho_phi - rho_psi|")
    return rep


def f_invariance_static(
    lat: Lattice,
    gauge: GaugeField,
    gen: Generator,
    c: PhysicalConstants,
    tol: float,
    report: Optional[VerificationReport] = None,
) -> VerificationReport:
    """Field-strength invariance of the gauge route on a static state."""
    rep = report if report is not None else VerificationReport()
    before = field_strength(lat, gauge, constants=c)
    after = field_strength(lat, route_b_transform(lat, gauge, gen, c), constants=c)
    ediff = float(np.max(np.abs(after.electric - before.electric)))
    rep.add("field-strength electric invariance", ediff, tol,
            "static comparison; time term excluded")
    if lat.dim == 2:
        bdiff = float(np.max(np.abs(after.magnetic - before.magnetic)))
        rep.add("field-strength magnetic invariance", bdiff, tol,
                "discrete curl of formula-based grad sigma")
    return rep


def commuting_discrepancy(
    lat: Lattice,
    psi0: np.ndarray,
    gauge: GaugeField,
    p: PotentialSpec,
    cfg: IntegratorConfig,
    route: str,
    c: PhysicalConstants,
) -> tuple[float, float]:
    """(density rel-L2, phase-aligned field rel-L2) between evolve-then-
    transform and transform-then-evolve at t_final."""
    rhs_orig = make_rhs(p, c, "original")
    traj1 = run(lat, EvolutionState(psi0.copy(), gauge.copy()), rhs_orig, cfg, c)
    psi_t = traj1[-1].wave
    rho_t = (psi_t * np.conj(psi_t)).real

    if route == "A":
        gen_t = dg_generator_from_wave(p, lat, psi_t, gauge, c)
        path1 = route_a_transform(lat, psi_t, gen_t, c)
        gen_0 = dg_generator_from_wave(p, lat, psi0, gauge, c)
        phi0 = route_a_transform(lat, psi0, gen_0, c)
        rhs2 = make_rhs(p, c, "transformed_a")
        traj2 = run(lat, EvolutionState(phi0, gauge.copy()), rhs2, cfg, c)
        path2 = traj2[-1].wave
    elif route == "B":
        path1 = psi_t  # the gauge route leaves the matter field untouched
        rhs2 = make_rhs(p, c, "transformed_b")
        traj2 = run(lat, EvolutionState(psi0.copy(), gauge.copy()), rhs2, cfg, c)
        path2 = traj2[-1].wave
    else:
        raise ValueError(f"route must be 'A' or 'B', got {route!r}")

    rho2 = (path2 * np.conj(path2)).real
    return rel_l2(rho2, rho_t), phase_aligned_discrepancy(path1, path2)


def dg_generator_from_wave(
    p: PotentialSpec,
    lat: Lattice,
    psi: np.ndarray,
    gauge: GaugeField,
    c: PhysicalConstants,
) -> Generator:
    """Closed-form generator for the diffusion family straight from psi,
    winding-safe (sigma depends only on the density)."""
    rho = (psi * np.conj(psi)).real
    grad_s = grad_phase_local(lat, psi, rho, c)
    sc = dg_sigma_coefficient(p, c)
    sigma = sc * np.log(rho)
    grad_sigma = sc * gradient(lat, rho) / rho
    kappa2 = -sc * c.charge_e**2 / (c.mass * c.light_c**2)  # = 2 kappa
    j_full = bilinear_current(lat, rho, grad_s, gauge.avec, c)
    j_full -= (c.light_c / c.charge_e) * kappa2 * gradient(lat, rho)
    rho_t = -divergence(lat, j_full)
    return Generator(sigma=sigma, grad_sigma=grad_sigma,
                     dsigma_dt=sc * rho_t / rho)


def commuting_diagram(
    lat_points,
    extents,
    psi_factory: Callable[[Lattice], np.ndarray],
    gauge_factory: Callable[[Lattice], GaugeField],
    p: PotentialSpec,
    c: PhysicalConstants,
    route: str,
    t_final: float,
    dt_coefficient: float = 0.1,
    order_window=(1.8, 2.5),
    report: Optional[VerificationReport] = None,
    label: str = "",
) -> VerificationReport:
    """Joint (dx, dt ~ dx^2) refinement of the path discrepancy."""
    rep = report if report is not None else VerificationReport()
    spacings, errors = [], []
    for pts in lat_points:
        lat = Lattice(extents=extents, points=pts if isinstance(pts, tuple) else (pts,))
        dx = min(lat.spacing)
        dt = dt_coefficient * dx * dx * c.mass / c.hbar
        n = max(1, int(round(t_final / dt)))
        cfg = IntegratorConfig(dt=t_final / n, t_final=t_final, snapshot_stride=n)
        d_rho, _ = commuting_discrepancy(
            lat, psi_factory(lat), gauge_factory(lat), p, cfg, route, c
        )
        spacings.append(dx)
        errors.append(max(d_rho, 1e-16))
    name = f"commuting-diagram route {route}"
    if label:
        name += f" [{label}]"
    rep.add_order(name, spacings, errors, order_window[0], order_window[1],
                  "density-trajectory discrepancy under joint refinement")
    return rep


def continuity_residual_l2(
    lat: Lattice,
    before: EvolutionState,
    mid: EvolutionState,
    after: EvolutionState,
    p: PotentialSpec,
    c: PhysicalConstants,
    current_kind: str = "full",
) -> float:
    """L2 norm of d rho/dt + div J at the middle snapshot, with rho_t from a
    centered difference of the neighbors. current_kind selects the current
    of the description being evolved: "full" for the original equation,
    "bilinear" for the matter-route equation (the shifted phase is already
    in the wave field), "bilinear-chi" for the gauge-route equation, whose
    vector potential carries the -grad sigma shift."""
    rho_b = (before.wave * np.conj(before.wave)).real
    rho_a = (after.wave * np.conj(after.wave)).real
    rho_t = (rho_a - rho_b) / (after.time - before.time)
    psi = mid.wave
    rho = (psi * np.conj(psi)).real
    grad_s = grad_phase_local(lat, psi, rho, c)
    avec = mid.gauge.avec
    if current_kind == "bilinear-chi":
        from .transforms import dg_sigma_coefficient

        sc = dg_sigma_coefficient(p, c)
        avec = avec - sc * gradient(lat, rho) / rho
    j = bilinear_current(lat, rho, grad_s, avec, c)
    if current_kind == "full":
        from .potentials import build_args_from_grad

        args = build_args_from_grad(lat, rho, grad_s, mid.gauge)
        for i in range(lat.dim):
            if p.is_dg:
                extra = closed_functional_derivative(p, f"dS_{i}", lat, args, c)
            else:
                extra = numeric_functional_derivative(p, f"dS_{i}", lat, args, c)
            j[i] += (c.light_c / c.charge_e) * extra
    r = rho_t + divergence(lat, j)
    return float(np.sqrt(integrate(lat, r**2)))


def conservation_suite(
    lat: Lattice,
    traj: list,
    p: PotentialSpec,
    c: PhysicalConstants,
    current_kind: str = "full",
    charge_tol: float = 1e-8,
    report: Optional[VerificationReport] = None,
    label: str = "",
) -> VerificationReport:
    """Charge drift along the trajectory plus the continuity residual at the
    middle snapshot (the equation-appropriate current)."""
    rep = report if report is not None else VerificationReport()
    suffix = f" [{label}]" if label else ""
    q0 = None
    drift = 0.0
    for s in traj:
        rho = (s.wave * np.conj(s.wave)).real
        q = c.charge_e * integrate(lat, rho)
        if q0 is None:
            q0 = q
        drift = max(drift, abs(q - q0) / abs(q0))
    rep.add(f"charge drift{suffix}", drift, charge_tol,
            f"{len(traj)} snapshots, relative to Q(0)")
    if len(traj) >= 3:
        mid = len(traj) // 2
        res = continuity_residual_l2(
            lat, traj[mid - 1], traj[mid], traj[mid + 1], p, c, current_kind
        )
        rep.add(f"continuity residual{suffix} (info)", 0.0, 1.0,
                f"L2={res:.3e} with {current_kind} current")
    return rep


def continuity_refinement(
    lat_points,
    extents,
    psi_factory,
    gauge_factory,
    p: PotentialSpec,
    c: PhysicalConstants,
    equation: str,
    current_kind: str,
    t_final: float,
    dt_coefficient: float = 0.1,
    min_order: float = 1.8,
    report: Optional[VerificationReport] = None,
    label: str = "",
) -> VerificationReport:
    """Order of the continuity residual under spatial refinement."""
    rep = report if report is not None else VerificationReport()
    spacings, errors = [], []
    for pts in lat_points:
        lat = Lattice(extents=extents, points=pts if isinstance(pts, tuple) else (pts,))
        dx = min(lat.spacing)
        dt = dt_coefficient * dx * dx * c.mass / c.hbar
        n = max(4, int(round(t_final / dt)))
        cfg = IntegratorConfig(dt=t_final / n, t_final=t_final,
                               snapshot_stride=max(1, n // 4))
        rhs = make_rhs(p, c, equation)
        traj = run(lat, EvolutionState(psi_factory(lat), gauge_factory(lat)),
                   rhs, cfg, c)
        mid = len(traj) // 2
        res = continuity_residual_l2(lat, traj[mid - 1], traj[mid],
                                     traj[mid + 1], p, c, current_kind)
        spacings.append(dx)
        errors.append(max(res, 1e-16))
    name = f"continuity residual order [{label}]" if label else "continuity residual order"
    rep.add_order(name, spacings, errors, min_order,
                  note=f"{equation} equation, {current_kind} current")
    return rep

# ---------------------------------------------------------------------------
# Random smooth states and the standing battery
# ---------------------------------------------------------------------------

def random_smooth_psi(
    lat: Lattice,
    rng: np.random.Generator,
    c: PhysicalConstants,
    density_contrast: float = 0.5,
    phase_amplitude: float = 0.3,
    n_modes: int = 3,
) -> np.ndarray:
    """Positive-density, winding-free random state built from a few low
    Fourier modes (deterministic given the rng state)."""
    xs = lat.coords()
    bump = np.zeros(lat.points)
    s = np.zeros(lat.points)
    for m in range(1, n_modes + 1):
        for ax in range(lat.dim):
            k = 2.0 * np.pi * m / lat.extents[ax]
            a, b = rng.uniform(-1, 1, size=2)
            bump += a * np.cos(k * xs[ax]) + b * np.sin(k * xs[ax])
            a, b = rng.uniform(-1, 1, size=2)
            s += (a * np.cos(k * xs[ax]) + b * np.sin(k * xs[ax])) / m
    bump -= bump.min()
    span = bump.max() if bump.max() > 0 else 1.0
    rho = 1.0 + density_contrast * (2.0 * bump / span - 1.0) * 0.999
    rho /= integrate(lat, rho)
    scale = c.charge_e / (c.hbar * c.light_c)
    return np.sqrt(rho) * np.exp(1j * scale * phase_amplitude * s)


def oracle_cross_check(
    lat: Lattice,
    p: PotentialSpec,
    states,
    c: PhysicalConstants,
    h_fd: float = 1e-6,
    tol: float = 1e-6,
    report: Optional[VerificationReport] = None,
) -> VerificationReport:
    """Closed-form vs numeric-engine functional derivatives on given
    (HydroFields, GaugeField) states; relative L2 per slot."""
    from .potentials import dg_as_generic

    rep = report if report is not None else VerificationReport()
    p_gen = dg_as_generic(p, lat, c)
    slots = ["rho", "S"] + [f"dS_{i}" for i in range(lat.dim)] \
        + [f"drho_{i}" for i in range(lat.dim)]
    worst = {slot: 0.0 for slot in slots}
    for h, g in states:
        args = build_args(lat, h, g)
        for slot in slots:
            closed = closed_functional_derivative(p, slot, lat, args, c)
            numeric = numeric_functional_derivative(p_gen, slot, lat, args, c, h_fd)
            worst[slot] = max(worst[slot], rel_l2(numeric, closed))
    for slot in slots:
        rep.add(f"functional-derivative oracle [{slot}]", worst[slot], tol,
                f"closed vs engine, {len(states)} states, h_fd={h_fd:g}")
    return rep


def full_battery(
    c: PhysicalConstants,
    nu: float = 0.05,
    alpha: float = 0.1,
    seed: int = 20260826,
) -> VerificationReport:
    """Desk-scale standing battery: every claim checked in seconds.

    Collect-then-report: failures never abort the battery.
    """
    rep = VerificationReport()
    p = PotentialSpec.dg_gauged(nu=nu, alpha=alpha)
    rng = np.random.default_rng(seed)
    two_pi = 2.0 * np.pi

    # Matter-route unitarity on random smooth states.
    try:
        lat = Lattice((two_pi,), (64,))
        worst = 0.0
        scale = 0.0
        for _ in range(5):
            psi = random_smooth_psi(lat, rng, c)
            gen = dg_generator_from_wave(p, lat, psi, GaugeField.zero(lat), c)
            rho = (psi * np.conj(psi)).real
            phi = route_a_transform(lat, psi, gen, c)
            worst = max(worst, float(np.max(np.abs((phi * np.conj(phi)).real - rho))))
            scale = max(scale, float(np.max(rho)))
        rep.add("density invariance (matter route)", worst, 1e-12 * scale,
                "5 random smooth states, N=64")
    except GnlseError as exc:
        rep.add_failure("density invariance (matter route)", str(exc))

    # Closed-form vs engine oracle.
    try:
        lat = Lattice((two_pi,), (64,))
        states = []
        for _ in range(3):
            psi = random_smooth_psi(lat, rng, c)
            rho = (psi * np.conj(psi)).real
            sc = c.hbar * c.light_c / c.charge_e
            from .fields import unwrap_phase

            phase = sc * unwrap_phase(lat, np.angle(psi))
            g = GaugeField(a0=lat.zeros(), avec=0.3 * np.sin(
                lat.coords()[0])[None, :] * np.ones((1,) + lat.points))
            states.append((HydroFields(rho=rho, phase=phase), g))
        oracle_cross_check(lat, p, states, c, report=rep)
    except GnlseError as exc:
        rep.add_failure("functional-derivative oracle", str(exc))

    # Integrability condition: diffusion family passes, counterexample fails.
    try:
        lat2 = Lattice((two_pi, two_pi), (32, 32))
        psi2 = random_smooth_psi(lat2, rng, c)
        rho2 = (psi2 * np.conj(psi2)).real
        from .fields import unwrap_phase

        sc = c.hbar * c.light_c / c.charge_e
        h2 = HydroFields(rho=rho2, phase=sc * unwrap_phase(lat2, np.angle(psi2)))
        g2 = GaugeField.zero(lat2)
        rep_dg = check_condition(p, lat2, h2, g2, c)
        rep.add("integrability condition (diffusion family)",
                rep_dg.max_abs, rep_dg.tol, "2D, N=32^2, calibrated tol")
        bad = make_generic("generic-rho2-ds1")
        rep_bad = check_condition(bad, lat2, h2, g2, c)
        detected = 0.0 if not rep_bad.passed else 1.0
        rep.add("integrability counterexample detected", detected, 0.5,
                f"rho^2 d1S residual max={rep_bad.max_abs:.3e} must exceed tol")
    except GnlseError as exc:
        rep.add_failure("integrability condition", str(exc))

    # Field-strength invariance order under refinement (gauge route, static).
    try:
        spacings, errors = [], []
        for n in (16, 32, 64):
            lat2 = Lattice((two_pi, two_pi), (n, n))
            xs = lat2.coords()
            rho = 1.0 + 0.4 * np.cos(xs[0]) + 0.3 * np.cos(xs[1]) \
                + 0.2 * np.cos(xs[0]) * np.cos(xs[1])
            rho /= integrate(lat2, rho)
            psi = np.sqrt(rho).astype(complex)
            g = GaugeField(a0=lat2.zeros(), avec=lat2.vector_zeros())
            gen = dg_generator_from_wave(p, lat2, psi, g, c)
            before = field_strength(lat2, g, constants=c)
            after = field_strength(lat2, route_b_transform(lat2, g, gen, c),
                                   constants=c)
            errors.append(float(np.max(np.abs(after.magnetic - before.magnetic))))
            spacings.append(min(lat2.spacing))
        rep.add_order("field-strength invariance order (gauge route)",
                      spacings, errors, 1.8, np.inf,
                      "magnetic change, static 2D states")
    except GnlseError as exc:
        rep.add_failure("field-strength invariance", str(exc))

    # Commuting diagram, both routes.
    try:
        psi_f = lambda lat: np.sqrt(_cosine_density(lat)).astype(complex)
        zero_g = lambda lat: GaugeField.zero(lat)
        for route in ("A", "B"):
            commuting_diagram(
                [(32,), (64,), (128,)], (two_pi,), psi_f, zero_g, p, c,
                route=route, t_final=0.05, report=rep, label="battery",
            )
    except GnlseError as exc:
        rep.add_failure("commuting diagram", str(exc))

    # Conservation along a run.
    try:
        lat = Lattice((two_pi,), (128,))
        dx = lat.spacing[0]
        dt = 0.1 * dx * dx * c.mass / c.hbar
        cfg = IntegratorConfig(dt=dt, t_final=300 * dt, snapshot_stride=30)
        rhs = make_rhs(p, c, "original")
        psi0 = np.sqrt(_cosine_density(lat)).astype(complex)
        traj = run(lat, EvolutionState(psi0, GaugeField.zero(lat)), rhs, cfg, c)
        conservation_suite(lat, traj, p, c, "full", 1e-8, rep, "original, 300 steps")
    except GnlseError as exc:
        rep.add_failure("conservation", str(exc))

    return rep


def _cosine_density(lat: Lattice, amplitude: float = 0.5) -> np.ndarray:
    xs = lat.coords()
    rho = np.ones(lat.points)
    for ax in range(lat.dim):
        rho = rho * (1.0 + amplitude * np.cos(2.0 * np.pi * xs[ax] / lat.extents[ax]))
    return rho / integrate(lat, rho)
