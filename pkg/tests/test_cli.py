import json
import math
import subprocess
import sys

import pytest

from planarspeed.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_effective_speed(capsys):
    code, out, _ = run(capsys, "effective-speed", "--p", "0")
    assert code == 0
    assert json.loads(out) == {"case": "p_zero_strict", "value": pytest.approx(math.sqrt(3), abs=1e-10)}


def test_validate_g_fails_on_positive_sample(capsys):
    code, out, _ = run(capsys, "validate-g", "--g", '{"family": "tabulated", "samples": [-1, 0.5, -1]}')
    assert code == 1 and json.loads(out)["checks"]["sign"] is False


def test_bad_parameters_exit_2(capsys):
    code, _, err = run(capsys, "effective-speed", "--p", "1", "--g", '{"family": "touching", "a": -1}')
    assert code == 2 and "a >= 0" in err


def test_run_chi_writes_csv(capsys, tmp_path):
    path = tmp_path / "chi.csv"
    code, out, _ = run(capsys, "run-chi", "--eps", "0.1", "--N", "32", "--out", str(path))
    assert code == 0
    rep = json.loads(out)
    assert rep["bounds"]["pass"] and rep["estimate"]["stationary"]
    assert path.read_text().startswith("t,mean,oscillation,grad_sup\n")

    code, out, _ = run(capsys, "extract-speed", "--eps", "0.1", "--traj", str(path))
    assert code == 0
    assert json.loads(out)["estimate"]["c_eps"] == pytest.approx(rep["estimate"]["c_eps"], rel=1e-12)


def test_check_band_from_csvs(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "run-chi", "--eps", "0.1", "--N", "32", "--T", "40", "--out", str(a))
    run(capsys, "run-chi", "--eps", "0.1", "--N", "32", "--T", "80", "--out", str(b))
    code, out, _ = run(capsys, "check-band", "--eps", "0.1", "--short", str(a), "--long", str(b))
    assert code == 0 and json.loads(out)["pass"]


def test_check_bernstein_from_csvs(capsys, tmp_path):
    args = []
    for eps in ("0.2", "0.1", "0.05", "0.025"):
        path = tmp_path / f"chi_{eps}.csv"
        run(capsys, "run-chi", "--eps", eps, "--N", "64", "--out", str(path))
        args += ["--traj", f"{eps}={path}"]
    code, out, _ = run(capsys, "check-bernstein", *args)
    rep = json.loads(out)
    assert code == 0 and rep["scaling_fit"]["pass"] and rep["oscillation"]["pass"]


def test_run_ode_touching_degenerate(capsys):
    code, out, _ = run(capsys, "run-ode", "--eps", "0.1", "--g", '{"family": "touching", "a": 1}')
    rep = json.loads(out)
    assert code == 0 and rep["bounds"]["degenerate"] and rep["effective_speed"]["value"] == 0.0


def test_run_direct_snapshots(capsys, tmp_path):
    out_path = tmp_path / "u.csv"
    code, out, _ = run(capsys, "run-direct", "--eps", "0.1", "--T", "0.05", "--out", str(out_path),
                       "--times", "0,0.025")
    assert code == 0
    assert out_path.read_text().startswith("x,u\n")
    assert (tmp_path / "u_t0.csv").exists() and (tmp_path / "u_t1.csv").exists()


def test_sweep_p_with_out_dir(capsys, tmp_path):
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "sweep-p", "--eps", "0.1", "--p", "0,1", "--N", "32")
    summary = json.loads(out)
    assert (tmp_path / "summary.json").exists()
    assert code == (0 if summary["pass"] else 1)


def test_run_from_config(capsys, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "comparison", "g": {"family": "shifted_cosine", "a": 2, "b": 1},
                                "eps": [0.1], "p": [1], "numerics": {"N": 32}, "direct": {"trials": 2}}))
    code, out, _ = run(capsys, "--config", str(path), "--seed", "3", "run")
    assert code == 0 and json.loads(out)["pass"]


def test_run_needs_config(capsys):
    code, _, err = run(capsys, "run")
    assert code == 2 and "--config" in err


def test_empty_sweep_is_config_error(capsys):
    code, _, err = run(capsys, "sweep-eps", "--eps", "")
    assert code == 2 and "empty" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "planarspeed", "effective-speed", "--p", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["value"] == pytest.approx(2.0, abs=1e-12)
