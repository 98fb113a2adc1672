import json

import numpy as np
import pytest

from semidiscrete import ConfigError, read_trajectory_csv
from semidiscrete.cli import main
from semidiscrete.config import RunConfig, load_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- config -----------------------------------------------------------------


def test_config_round_trip():
    cfg = RunConfig(model={"a": "u^2", "b": "2*u"}, scheme="em", delta=0.05, steps=123,
                    seed=99, moment_p=0.3, out="x.json")
    back = RunConfig.from_toml(cfg.to_toml())
    assert back == cfg


def test_config_file_and_overrides(tmp_path):
    f = tmp_path / "run.toml"
    f.write_text('delta = 0.1\nsteps = 50\nseed = 3\n\n[model]\nfamily = "power"\nsigma = 3.0\n')
    cfg = load_config(f)
    assert cfg.delta == 0.1 and cfg.model["sigma"] == 3.0
    cfg2 = cfg.with_overrides(delta=0.2, seed=None)
    assert cfg2.delta == 0.2 and cfg2.seed == 3


@pytest.mark.parametrize(
    "data, field",
    [
        ({"delta": -1.0}, "delta"),
        ({"steps": 0}, "steps"),
        ({"scheme": "rk4"}, "scheme"),
        ({"model": {"family": "power"}}, "model"),
        ({"model": {"a": "u^2", "b": "import os"}}, "model"),
        ({"moment_p": 1.5}, "moment_p"),
        ({"seed": -1}, "seed"),
        ({"bogus": 1}, "bogus"),
        ({"explosion_threshold": 1e-310}, "explosion_threshold"),
    ],
)
def test_config_errors_name_field(data, field):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict(data)
    assert info.value.field == field


def test_bad_config_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.toml"
    f.write_text("delta = -0.5\n")
    code, _, err = run(capsys, "simulate", "--config", str(f))
    assert code == 1 and "delta" in err


# --- simulate -----------------------------------------------------------------


def test_simulate_stable(capsys):
    code, out, _ = run(capsys, "simulate", "--family", "power", "--sigma", "2",
                       "--delta", "0.01", "--steps", "10000", "--seed", "1")
    assert code == 0
    traj = read_trajectory_csv(out)
    assert traj.termination.value == "Completed"
    assert np.all(traj.states > 0)
    assert traj.states[-1] < traj.states[0]
    assert traj.meta["seed"] == "1"


def test_simulate_explodes(capsys):
    code, out, _ = run(capsys, "simulate", "--sigma", "0", "--delta", "0.001")
    assert code == 2
    last = out.strip().splitlines()[-1]
    assert last.startswith("# termination=Exploded t=")
    assert abs(float(last.split("t=")[1]) - 0.5) <= 0.05


def test_simulate_zero_start(capsys):
    code, out, _ = run(capsys, "simulate", "--y0", "0", "--steps", "20")
    assert code == 0
    assert np.all(read_trajectory_csv(out).states == 0.0)


def test_simulate_to_file(tmp_path, capsys):
    dest = tmp_path / "sub" / "p.csv"
    code, out, _ = run(capsys, "simulate", "--steps", "10", "--out", str(dest), "--scheme", "em")
    assert code == 0 and out == ""
    assert "scheme=EulerMaruyama" in dest.read_text()


# --- ensemble -----------------------------------------------------------------


def test_ensemble_unstable(capsys):
    code, out, _ = run(capsys, "ensemble", "--sigma", "1", "--paths", "1000",
                       "--steps", "10000", "--workers", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["stats"]["fraction_converged"] <= 0.01
    assert rep["seed"] == 0


def test_ensemble_single_path_matches_simulate(capsys, tmp_path):
    code, out, _ = run(capsys, "ensemble", "--sigma", "0", "--delta", "0.001", "--steps", "2000",
                       "--paths", "1", "--seed", "5", "--dump-paths", str(tmp_path))
    rep = json.loads(out)
    code, csv, _ = run(capsys, "simulate", "--sigma", "0", "--delta", "0.001", "--steps", "2000",
                       "--seed", "5")
    traj = read_trajectory_csv(csv)
    assert rep["stats"]["explosion_times"]["mean"] == traj.termination_time
    dumped = read_trajectory_csv((tmp_path / "path_000000.csv").read_text())
    np.testing.assert_array_equal(dumped.states, traj.states)


def test_ensemble_config_file(tmp_path, capsys):
    f = tmp_path / "e.toml"
    f.write_text('paths = 8\nsteps = 30\ndelta = 0.1\nmoment_p = 0.25\n\n[model]\na = "u^2"\nb = "3*u"\n')
    code, out, _ = run(capsys, "ensemble", "--config", str(f), "--workers", "1")
    rep = json.loads(out)
    assert rep["config"]["model"] == {"a": "u^2", "b": "3*u"}
    assert rep["config"]["n_paths"] == 8
    assert rep["diagnostics"]["verdict"]["evidence"] == "GridEstimate"


# --- classify -----------------------------------------------------------------


def test_classify_outputs(capsys):
    code, out, _ = run(capsys, "classify", "--family", "power", "--sigma", "2")
    assert code == 0
    first, second = out.strip().splitlines()
    assert first.startswith("AsStable beta=0.5")
    assert json.loads(second)["kind"] == "AsStable"
    code, out, _ = run(capsys, "classify", "--family", "power", "--sigma", "1")
    assert out.startswith("AsUnstable") and "gamma=2.0" in out
    code, out, _ = run(capsys, "classify", "--a", "u^2", "--b", "1.4142135*u")
    assert out.startswith("Indeterminate")


def test_classify_degenerate(capsys):
    code, _, err = run(capsys, "classify", "--sigma", "0")
    assert code == 1 and "degenerate" in err


# --- figures ------------------------------------------------------------------


def test_figures(tmp_path, capsys):
    assert main(["figures", "--out", str(tmp_path / "a")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == 7 and "manifest.json" in files
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    by_name = {e["file"]: e for e in manifest["trajectories"]}
    coarse = by_name["fig2a_sigma0_dt0.01.csv"]["termination_time"]
    fine = by_name["fig2b_sigma0_dt0.001.csv"]["termination_time"]
    assert abs(fine - 0.5) < abs(coarse - 0.5)
    for name in ("fig1a_sigma2_dt0.01.csv", "fig1b_sigma3_dt0.01.csv"):
        traj = read_trajectory_csv((tmp_path / "a" / name).read_text())
        assert np.all(traj.states > 0)
    assert manifest["floating_point_caveats"]

    main(["figures", "--out", str(tmp_path / "b")])
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
