"""End-to-end command-line behavior: exit codes, CSV schema, determinism."""
import filecmp

import pytest

from gnlse.cli import main

BASE = """\
mode = "evolve-original"

[lattice]
points = [32]

[integrator]
t_final = 0.02
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text(BASE)
    return str(path)


def test_missing_config_is_usage_error(tmp_path):
    assert main([str(tmp_path / "nope.toml")]) == 2


def test_bad_key_is_usage_error(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('mode = "evolve-original"\nmispeled = 1\n')
    assert main([str(path), "--out", str(tmp_path / "o")]) == 2


def test_malformed_override_is_usage_error(config_path, tmp_path):
    assert main([config_path, "--override", "noequals"]) == 2
    assert main([config_path, "--override", "potential.nuu=1",
                 "--out", str(tmp_path / "o")]) == 2


def test_evolve_run_outputs(config_path, tmp_path):
    out = tmp_path / "run"
    assert main([config_path, "--out", str(out)]) == 0
    obs = (out / "observables.csv").read_text().splitlines()
    assert obs[0] == "# schema=1"
    assert obs[1].startswith("step,time,total_charge")
    assert (out / "config_resolved.toml").exists()
    snaps = sorted(out.glob("snapshot_*.csv"))
    assert snaps and snaps[0].read_text().startswith("# schema=1")


def test_stability_violation_is_runtime_abort(config_path, tmp_path):
    code = main([config_path, "--override", "integrator.dt=10.0",
                 "--out", str(tmp_path / "o")])
    assert code == 3


def test_failed_check_is_exit_one(tmp_path):
    path = tmp_path / "cond.toml"
    path.write_text(
        'mode = "condition-check"\n'
        '[potential]\nkind = "generic-rho2-ds1"\n'
        '[lattice]\ndim = 2\npoints = [16, 16]\n'
        'extents = [6.283185307179586, 6.283185307179586]\n'
    )
    assert main([str(path), "--out", str(tmp_path / "o")]) == 1
    report = (tmp_path / "o" / "report.txt").read_text()
    assert "[FAIL]" in report


def test_condition_check_passes_for_diffusion_family(tmp_path):
    path = tmp_path / "cond.toml"
    path.write_text(
        'mode = "condition-check"\n'
        '[lattice]\ndim = 2\npoints = [16, 16]\n'
        'extents = [6.283185307179586, 6.283185307179586]\n'
    )
    assert main([str(path), "--out", str(tmp_path / "o")]) == 0


def test_mode_flag_overrides_config(config_path, tmp_path):
    out = tmp_path / "sc"
    assert main([config_path, "--mode", "selfconsistent-1d", "--out", str(out)]) == 0
    header = (out / "observables.csv").read_text().splitlines()[1]
    assert header.endswith("maxwell_residual_l2")


def test_determinism_byte_identical(config_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main([config_path, "--out", str(out1)]) == 0
    assert main([config_path, "--out", str(out2)]) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert names == sorted(p.name for p in out2.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(out1, out2, names, shallow=False)
    assert not mismatch and not errors
