"""Command-line surface: scenario runs, checks, and CSV/report export.

Exit codes: 0 all enabled checks pass, 1 check failure, 2 usage or
configuration error, 3 runtime abort (NaN, density floor, solver failure).
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import verify
from .config import (
    GAUGE_PRESETS,
    MODES,
    PSI_PRESETS,
    ScenarioConfig,
    parse_config,
)
from .errors import ConfigError, GnlseError
from .evolve import (
    EvolutionState,
    IntegratorConfig,
    make_rhs,
    run as integrate_run,
    run_selfconsistent_1d,
    stability_guard,
)
from .fields import GaugeField, decompose
from .grid import Lattice, integrate
from .potentials import check_signature, total_charge
from .transforms import check_condition, route_a_transform
from .verify import VerificationReport, dg_generator_from_wave

SCHEMA_LINE = "# schema=1"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(SCHEMA_LINE + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_snapshot(path: Path, lat: Lattice, state: EvolutionState, scenario) -> None:
    c = scenario.constants
    psi = state.wave.ravel()
    rho = (psi * np.conj(psi)).real
    phase = (c.hbar * c.light_c / c.charge_e) * np.angle(psi)  # wrapped representative
    a0 = state.gauge.a0.ravel()
    cols = ["site_index", "x"]
    coords = lat.coords()
    xcols = [coords[0].ravel()]
    if lat.dim == 2:
        cols.append("y")
        xcols.append(coords[1].ravel())
    cols += ["rho", "phase", "re_psi", "im_psi", "a0", "a_x"]
    acols = [state.gauge.avec[0].ravel()]
    if lat.dim == 2:
        cols.append("a_y")
        acols.append(state.gauge.avec[1].ravel())
    rows = []
    for k in range(lat.num_sites):
        row = [k] + [xc[k] for xc in xcols]
        row += [rho[k], phase[k], psi[k].real, psi[k].imag, a0[k]]
        row += [ac[k] for ac in acols]
        rows.append(row)
    write_csv(path, cols, rows)


def _observable_rows(lat, traj, scenario, p, current_kind, extra_cols=()):
    c = scenario.constants
    rows = []
    for idx, s in enumerate(traj):
        rho = (s.wave * np.conj(s.wave)).real
        q = c.charge_e * integrate(lat, rho)
        l2 = float(np.sqrt(integrate(lat, rho)))
        if 0 < idx < len(traj) - 1:
            res = verify.continuity_residual_l2(
                lat, traj[idx - 1], s, traj[idx + 1], p, c, current_kind
            )
        else:
            res = float("nan")
        rows.append([s.step_count, s.time, q, l2, float(np.max(rho)),
                     float(np.min(rho)), res])
    return rows


def _evolve_mode(scenario: ScenarioConfig, out: Path) -> int:
    lat = scenario.lattice()
    p = scenario.potential()
    c = scenario.constants
    psi0 = scenario.initial_psi(lat)
    gauge = scenario.initial_gauge(lat)
    dt = scenario.resolved_dt(lat)
    stability_guard(lat, dt, c)
    cfg = IntegratorConfig(dt=dt, t_final=scenario.t_final,
                           snapshot_stride=scenario.resolved_stride(lat))
    if scenario.mode == "evolve-original":
        equation, current_kind = "original", "full"
    elif scenario.mode == "evolve-transformed-A":
        equation, current_kind = "transformed_a", "bilinear"
        gen0 = dg_generator_from_wave(p, lat, psi0, gauge, c)
        psi0 = route_a_transform(lat, psi0, gen0, c)
    else:
        equation, current_kind = "transformed_b", "bilinear-chi"
    rhs = make_rhs(p, c, equation)
    traj = integrate_run(lat, EvolutionState(psi0, gauge), rhs, cfg, c)
    rows = _observable_rows(lat, traj, scenario, p, current_kind)
    write_csv(out / "observables.csv",
              ["step", "time", "total_charge", "l2_norm_psi", "max_density",
               "min_density", "continuity_residual_l2"], rows)
    for s in traj:
        write_snapshot(out / f"snapshot_{s.step_count}.csv", lat, s, scenario)
    q = [r[2] for r in rows]
    drift = max(abs(v - q[0]) / abs(q[0]) for v in q)
    return 0 if drift <= scenario.tolerances["charge_drift"] else 1


def _selfconsistent_mode(scenario: ScenarioConfig, out: Path) -> int:
    lat = scenario.lattice()
    p = scenario.potential()
    c = scenario.constants
    psi0 = scenario.initial_psi(lat)
    dt = scenario.resolved_dt(lat)
    cfg = IntegratorConfig(dt=dt, t_final=scenario.t_final,
                           snapshot_stride=scenario.resolved_stride(lat))
    traj, residuals = run_selfconsistent_1d(lat, psi0, p, cfg, c)
    rows = _observable_rows(lat, traj, scenario, p, "full")
    for row, res in zip(rows, residuals):
        row.append(res)
    write_csv(out / "observables.csv",
              ["step", "time", "total_charge", "l2_norm_psi", "max_density",
               "min_density", "continuity_residual_l2", "maxwell_residual_l2"],
              rows)
    for s in traj:
        write_snapshot(out / f"snapshot_{s.step_count}.csv", lat, s, scenario)
    q = [r[2] for r in rows]
    drift = max(abs(v - q[0]) / abs(q[0]) for v in q)
    ok = drift <= scenario.tolerances["charge_drift"] and max(residuals) <= 1e-10
    return 0 if ok else 1


def _condition_mode(scenario: ScenarioConfig, out: Path) -> int:
    lat = scenario.lattice()
    p = scenario.potential()
    c = scenario.constants
    psi0 = scenario.initial_psi(lat)
    gauge = scenario.initial_gauge(lat)
    h = decompose(lat, psi0, c)
    if p.kind == "generic":
        check_signature(p, lat, h, gauge, c)
    tol = scenario.tolerances["condition"] or None
    rep = check_condition(p, lat, h, gauge, c, tol=tol)
    report = VerificationReport()
    report.add(f"integrability condition [{p.name or p.kind}]",
               rep.max_abs, rep.tol,
               "vacuous in 1D" if rep.vacuous else "max residual over axis pairs")
    (out / "report.txt").write_text(report.render())
    for (i, j), r in rep.residuals.items():
        rows = [[k, v] for k, v in enumerate(r.ravel())]
        write_csv(out / f"condition_residual_{i}{j}.csv",
                  ["site_index", "residual"], rows)
    return 0 if rep.passed else 1


def _commuting_mode(scenario: ScenarioConfig, out: Path) -> int:
    lat = scenario.lattice()
    p = scenario.potential()
    c = scenario.constants
    n_top = scenario.points
    levels = []
    for f in (4, 2, 1):
        pts = tuple(max(16, n // f) for n in n_top)
        if pts not in levels:
            levels.append(pts)
    report = VerificationReport()
    psi_f = lambda l: scenario.initial_psi(l)
    gauge_f = lambda l: scenario.initial_gauge(l)
    lo = scenario.tolerances["order_min"]
    hi = scenario.tolerances["order_max"]
    for route in ("A", "B"):
        verify.commuting_diagram(
            levels, scenario.extents, psi_f, gauge_f, p, c, route,
            scenario.t_final, order_window=(lo, hi), report=report,
            label=scenario.psi_preset,
        )
    # Per-snapshot discrepancy time series at the configured resolution
    # (matter route): evolve both paths side by side.
    dt = scenario.resolved_dt(lat)
    cfg = IntegratorConfig(dt=dt, t_final=scenario.t_final,
                           snapshot_stride=scenario.resolved_stride(lat))
    psi0 = scenario.initial_psi(lat)
    gauge = scenario.initial_gauge(lat)
    rhs1 = make_rhs(p, c, "original")
    traj1 = integrate_run(lat, EvolutionState(psi0.copy(), gauge.copy()), rhs1, cfg, c)
    gen0 = dg_generator_from_wave(p, lat, psi0, gauge, c)
    phi0 = route_a_transform(lat, psi0, gen0, c)
    rhs2 = make_rhs(p, c, "transformed_a")
    traj2 = integrate_run(lat, EvolutionState(phi0, gauge.copy()), rhs2, cfg, c)
    rows = []
    for s1, s2 in zip(traj1, traj2):
        rho1 = (s1.wave * np.conj(s1.wave)).real
        rho2 = (s2.wave * np.conj(s2.wave)).real
        q = c.charge_e * integrate(lat, rho1)
        rows.append([s1.step_count, s1.time, q,
                     float(np.sqrt(integrate(lat, rho1))),
                     float(np.max(rho1)), float(np.min(rho1)),
                     verify.rel_l2(rho2, rho1)])
    write_csv(out / "observables.csv",
              ["step", "time", "total_charge", "l2_norm_psi", "max_density",
               "min_density", "commuting_discrepancy"], rows)
    (out / "report.txt").write_text(report.render())
    return 0 if report.passed else 1


def _full_verify_mode(scenario: ScenarioConfig, out: Path) -> int:
    c = scenario.constants
    report = verify.full_battery(c, nu=scenario.nu, alpha=scenario.alpha)
    (out / "report.txt").write_text(report.render())
    # A short deterministic evolution so the mode also exercises CSV export.
    lat = Lattice(scenario.extents, scenario.points) if scenario.dim == 1 \
        else Lattice((scenario.extents[0],), (scenario.points[0],))
    p = scenario.potential()
    psi0 = scenario.initial_psi(lat)
    gauge = scenario.initial_gauge(lat) if scenario.dim == 1 else GaugeField.zero(lat)
    dt = scenario.resolved_dt(lat)
    cfg = IntegratorConfig(dt=dt, t_final=100 * dt, snapshot_stride=25)
    traj = integrate_run(lat, EvolutionState(psi0, gauge),
                         make_rhs(p, c, "original"), cfg, c)
    rows = _observable_rows(lat, traj, scenario, p, "full")
    write_csv(out / "observables.csv",
              ["step", "time", "total_charge", "l2_norm_psi", "max_density",
               "min_density", "continuity_residual_l2"], rows)
    for s in traj:
        write_snapshot(out / f"snapshot_{s.step_count}.csv", lat, s, scenario)
    return 0 if report.passed else 1


_MODE_HANDLERS = {
    "evolve-original": _evolve_mode,
    "evolve-transformed-A": _evolve_mode,
    "evolve-transformed-B": _evolve_mode,
    "commuting-diagram": _commuting_mode,
    "condition-check": _condition_mode,
    "selfconsistent-1d": _selfconsistent_mode,
    "full-verify": _full_verify_mode,
}


def run_scenario(scenario: ScenarioConfig, out_dir: str) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_resolved.toml").write_text(scenario.render())
    return _MODE_HANDLERS[scenario.mode](scenario, out)


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    for conv in (int, float):
        try:
            return key.strip(), conv(raw)
        except ValueError:
            pass
    return key.strip(), raw.strip()


def build_arg_parser() -> argparse.ArgumentParser:
    modes = "\n".join(f"  {m}" for m in MODES)
    psis = "\n".join(f"  {p}" for p in PSI_PRESETS)
    gauges = "\n".join(f"  {g}" for g in GAUGE_PRESETS)
    parser = argparse.ArgumentParser(
        prog="simulate",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Gauged-NLSE lattice laboratory",
        epilog=(
            f"modes:\n{modes}\n\n"
            f"initial psi presets:\n{psis}\n\n"
            f"gauge presets:\n{gauges}\n\n"
            "Set GNLSE_LOG=debug for verbose progress output.\n"
        ),
    )
    parser.add_argument("config", help="path to a TOML scenario file")
    parser.add_argument("--mode", choices=MODES, help="override the configured mode")
    parser.add_argument("--out", help="override the configured output directory")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a dotted config key (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    verbose = os.environ.get("GNLSE_LOG", "").lower() in ("debug", "info")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    overrides = {}
    try:
        for item in args.override:
            k, v = _parse_override(item)
            overrides[k] = v
        if args.mode:
            overrides["mode"] = args.mode
        scenario = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or scenario.output_dir
    if verbose:
        print(f"mode={scenario.mode} out={out_dir}")
    try:
        code = run_scenario(scenario, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GnlseError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 3
    if verbose:
        print(f"exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
