import json
from fractions import Fraction

import pytest

from planarspeed.errors import ConfigError
from planarspeed.harness import ExperimentConfig, envelope_shifts, run_config, validate_config

COSINE = {"family": "shifted_cosine", "a": 2.0, "b": 1.0}
SMALL = {"N": 32, "periods": 6}


def cfg(**kw):
    base = {"kind": "eps-sweep", "g": COSINE, "eps": [0.2, 0.1, 0.05], "p": [1.0], "numerics": dict(SMALL)}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


@pytest.mark.parametrize("kw, fragment", [
    ({"eps": []}, "eps list is empty"),
    ({"p": []}, "p list is empty"),
    ({"kind": "nope"}, "unknown experiment kind"),
    ({"eps": [0.1, 0.05]}, "at least 3"),
    ({"eps": [1.5, 0.1, 0.05]}, "eps"),
    ({"g": {"family": "constant", "c": 1.0}}, "bad g"),
    ({"g": {"family": "tabulated", "samples": [-1.0, 0.5, -1.0]}}, "validation"),
    ({"numerics": {"dt": 1.0}}, "dt"),
    ({"kind": "bernstein-sweep", "eps": [0.1, 0.05, 0.02, 0.01], "p": [0.0]}, "p != 0"),
])
def test_invalid_configs_fail_fast(kw, fragment):
    with pytest.raises(ConfigError, match=fragment):
        validate_config(cfg(**kw))


def test_empty_sweep_rejected_before_any_run(tmp_path):
    c = cfg(eps=[], out_dir=str(tmp_path / "out"))
    with pytest.raises(ConfigError):
        run_config(c)
    assert not (tmp_path / "out").exists()


def test_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_dict({"kind": "eps-sweep", "g": COSINE, "eps": [0.1], "p": [1], "speed": 3})


def test_hash_ignores_output_and_jobs(tmp_path):
    a = cfg(out_dir=str(tmp_path / "a"), jobs=1)
    b = cfg(out_dir=str(tmp_path / "b"), jobs=4)
    assert a.config_hash == b.config_hash
    assert a.config_hash != cfg(seed=5).config_hash


def test_load_from_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"kind": "p-sweep", "g": COSINE, "eps": 0.1, "p": [0, 1]}))
    c = ExperimentConfig.load(path)
    assert c.eps == [0.1] and c.numerics["N"] == 256 and c.direct["trials"] == 10


def test_eps_sweep_summary_schema(tmp_path):
    _, summary = run_config(cfg(out_dir=str(tmp_path)))
    assert set(summary) >= {"config_hash", "runs", "checks", "pass", "speed_table"}
    for run in summary["runs"]:
        assert set(run) >= {"params", "estimate", "status"} and run["status"] == "ok"
    for check in summary["checks"]:
        assert set(check) >= {"name", "pass", "measured", "expected", "tolerance"}
    assert summary["pass"]
    errors = [row["error"] for row in summary["speed_table"]]
    assert errors == sorted(errors, reverse=True)
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "chi_eps0.05_p1_a0.csv", "chi_eps0.1_p1_a0.csv", "chi_eps0.2_p1_a0.csv", "runs.jsonl", "summary.json"]
    assert (tmp_path / "chi_eps0.1_p1_a0.csv").read_text().startswith("t,mean,oscillation,grad_sup\n")


def test_eps_sweep_constant_forcing_error_vanishes():
    _, summary = run_config(cfg(g={"family": "constant", "c": -1.0}))
    assert summary["pass"]
    assert max(row["error"] for row in summary["speed_table"]) < 1e-10


def test_touching_p_zero_speed_is_zero():
    c = cfg(kind="p-sweep", g={"family": "touching", "a": 1.0}, eps=[0.1], p=[0.0, 1.0])
    _, summary = run_config(c)
    row = next(r for r in summary["speed_table"] if r["p"] == 0)
    assert row["scaled_speed"] == 0.0 and row["c_p"] == 0.0


def test_runs_log_appends(tmp_path):
    c = cfg(eps=[0.2, 0.1, 0.05], out_dir=str(tmp_path))
    run_config(c)
    run_config(c)
    lines = (tmp_path / "runs.jsonl").read_text().splitlines()
    assert len(lines) == 6
    rec = json.loads(lines[0])
    assert set(rec) >= {"config_hash", "inputs", "status", "wall_clock", "scheme"}


def test_rerun_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        run_config(cfg(out_dir=str(tmp_path / name)))
    for f in ("chi_eps0.05_p1_a0.csv", "chi_eps0.1_p1_a0.csv", "chi_eps0.2_p1_a0.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_serial_and_parallel_summaries_match():
    _, serial = run_config(cfg(jobs=1))
    _, parallel = run_config(cfg(jobs=2))
    assert json.dumps(serial, sort_keys=True) == json.dumps(parallel, sort_keys=True)


def test_comparison_kind_passes():
    c = cfg(kind="comparison", eps=[0.1], direct={"trials": 3}, numerics={"N": 32})
    _, summary = run_config(c)
    assert summary["pass"] and len(summary["trials"]) == 6


def test_comparison_is_seeded():
    c = cfg(kind="comparison", eps=[0.1], direct={"trials": 2}, numerics={"N": 32}, seed=4)
    assert run_config(c)[1] == run_config(c)[1]


@pytest.mark.parametrize("lo, hi, eps, expected", [
    (0.0, 0.3, 0.1, (0, 3)),
    (0.0, 0.3, 0.025, (0, 12)),
    (-0.05, 0.0, 0.1, (-1, 1)),
    (0.0, 0.25, 0.05, (0, 5)),
])
def test_envelope_shifts(lo, hi, eps, expected):
    assert envelope_shifts(lo, hi, eps) == expected


@pytest.mark.parametrize("lo, hi, eps", [(0.0, 0.3, 0.025), (0.0, 0.25, 0.05), (-0.7, 0.2, 0.1), (0.0, 0.3, 0.1)])
def test_envelopes_bracket_exactly(lo, hi, eps):
    k_lo, k_hi = envelope_shifts(lo, hi, eps)
    e = Fraction(eps)
    assert k_lo * e <= Fraction(lo) < (k_lo + 1) * e
    assert (k_hi - 1) * e <= Fraction(hi) < k_hi * e
