import json
import math
import subprocess
import sys

import numpy as np
import pytest

from lagvar.cli import run_cli
from lagvar.experiments import ExperimentConfig
from lagvar.laguerre_ops import HeatKernelParams, basis_on_grid, heat_kernel
from lagvar.measure_space import GridFunction, QuadGrid
from lagvar.varops import Trajectory, rho_variation


@pytest.fixture
def traj_file(tmp_path, rng):
    path = tmp_path / "traj.csv"
    Trajectory(np.geomspace(2.0, 0.01, 8), rng.standard_normal((8, 2))).to_csv(path)
    return path


def test_constant_trajectory_prints_zero(tmp_path, capsys):
    path = tmp_path / "c.csv"
    Trajectory([3.0, 2.0, 1.0], np.full(3, 5.0)).to_csv(path)
    assert run_cli(["varop", "--rho", "3", "--input", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_varop_matches_library(traj_file, capsys):
    assert run_cli(["varop", "--rho", "2.5", "--input", str(traj_file)]) == 0
    printed = [float(v) for v in capsys.readouterr().out.split()]
    expected = rho_variation(Trajectory.from_csv(traj_file), 2.5)
    np.testing.assert_array_equal(printed, expected)


@pytest.mark.parametrize(
    "extra",
    [
        ["--functional", "osc"],
        ["--functional", "jump", "--lam", "0.5"],
        ["--functional", "jump-lhs", "--lam", "0.5"],
        ["--functional", "svar"],
        ["--functional", "var", "--rho", "2", "--permissive"],
    ],
)
def test_varop_functionals(traj_file, capsys, extra):
    assert run_cli(["varop", "--input", str(traj_file)] + extra) == 0
    assert len(capsys.readouterr().out.split()) == 2


def test_varop_usage_errors(traj_file, capsys):
    assert run_cli(["varop", "--input", str(traj_file), "--functional", "jump"]) == 1
    assert run_cli(["varop", "--input", str(traj_file), "--rho", "2"]) == 1
    assert run_cli(["varop", "--input", "/nonexistent.csv"]) == 1
    assert run_cli(["varop", "--bogus-flag"]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_subprocess():
    proc = subprocess.run([sys.executable, "-m", "lagvar.cli", "varop", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "usage" in proc.stderr


def test_kernel_heat_value(capsys):
    assert run_cli(["kernel", "--kind", "heat", "--alpha", "1.5", "--t", "0.7", "--x", "1.2", "--y", "0.4"]) == 0
    payload = json.loads(capsys.readouterr().out)
    ref = heat_kernel(HeatKernelParams(1.5, 0.7), [1.2], [0.4]).to_float()
    assert payload["value"] == pytest.approx(ref, rel=1e-15)


def test_kernel_other_kinds(capsys, tmp_path):
    assert run_cli(["kernel", "--kind", "riesz", "--x", "1.0", "--y", "1.5"]) == 0
    assert math.isfinite(json.loads(capsys.readouterr().out)["value"])
    assert run_cli(["kernel", "--kind", "global-K", "--x", "1.0", "--y", "1.5"]) == 1
    assert run_cli(["kernel", "--kind", "global-K", "--x", "1.0", "--y", "1.5", "--s", "-0.5", "--format", "csv", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "kernel.csv").read_text().splitlines()
    assert text[0] == "value" and float(text[1]) == pytest.approx(math.exp(-2.25))


def test_apply_heat_on_eigenfunction(tmp_path):
    g = QuadGrid.mu((1.0,), 24)
    B = basis_on_grid(g, 2)[0]
    src = tmp_path / "f.csv"
    GridFunction(g, B[2]).to_csv(src)
    out = tmp_path / "out"
    assert run_cli(["apply", "--input", str(src), "--op", "heat", "--t", "0.5", "--heat-route", "spectral", "--out", str(out)]) == 0
    payload = json.loads((out / "apply.json").read_text())
    bulk = g.nodes[:, 0] < 20
    np.testing.assert_allclose(np.array(payload["re"])[bulk], math.exp(-1.0) * B[2][bulk], rtol=1e-9, atol=1e-12)


def test_apply_riesz_requires_nu_and_eps(tmp_path):
    g = QuadGrid.mu((1.0,), 8)
    src = tmp_path / "f.csv"
    g.constant(1.0).to_csv(src)
    assert run_cli(["apply", "--input", str(src), "--op", "riesz", "--eps", "0.1"]) == 1
    nsrc = tmp_path / "n.csv"
    g.pushforward().constant(1.0).to_csv(nsrc)
    assert run_cli(["apply", "--input", str(nsrc), "--measure", "nu", "--op", "riesz"]) == 1
    assert run_cli(["apply", "--input", str(nsrc), "--measure", "nu", "--op", "riesz", "--eps", "0.1", "--out", str(tmp_path / "o")]) == 0


def test_gfunc_subcommand(tmp_path):
    g = QuadGrid.mu((1.0,), 24)
    B = basis_on_grid(g, 1)[0]
    src = tmp_path / "f.csv"
    GridFunction(g, B[1]).to_csv(src)
    assert run_cli(["gfunc", "--input", str(src), "--beta", "1", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "gfunc.json").read_text())
    bulk = g.nodes[:, 0] < 20
    np.testing.assert_allclose(np.array(payload["re"])[bulk], 0.5 * np.abs(B[1][bulk]), rtol=1e-5, atol=1e-9)


def test_verify_bounds_subcommand(tmp_path):
    code = run_cli(["verify-bounds", "--alpha", "1", "--tau", "1", "--samples", "60", "--bounds", "poisson_size,riesz_size", "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "verify_bounds.json").read_text())
    assert payload["pass"] and len(payload["reports"]) == 2


def test_experiment_subcommand(tmp_path):
    cfg = ExperimentConfig(grid_size=24, n_t=40, n_functions=2, seed=5)
    path = tmp_path / "thm_var.json"
    cfg.to_json(path)
    out = tmp_path / "res"
    assert run_cli(["experiment", "--config", str(path), "--out", str(out), "--format", "csv"]) == 0
    result = json.loads((out / "thm_var.json").read_text())
    assert result["provenance"]["config_hash"] == cfg.config_hash()
    assert (out / "thm_var.csv").exists()
    assert run_cli(["experiment"]) == 1
    assert run_cli(["experiment", "--config", str(tmp_path / "missing.json")]) == 1


def test_experiment_exit_code_follows_pass_flag(tmp_path):
    # a coarse refinement run; exit 2 exactly when the summary reports failure
    cfg = ExperimentConfig(grid_size=8, n_t=20, n_functions=1, seed=1, refine=True, operator="VAR_RIESZ", p=[4.0])
    path = tmp_path / "r.json"
    cfg.to_json(path)
    res_code = run_cli(["experiment", "--config", str(path), "--out", str(tmp_path / "o")])
    result = json.loads((tmp_path / "o" / "r.json").read_text())
    assert res_code == (0 if result["summary"]["pass"] else 2)
