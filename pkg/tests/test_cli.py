import json

import pytest

from pathuq import __version__
from pathuq.cli import main
from pathuq.tables import CurveTable


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bm_mean_single_row(capsys):
    code, out, _ = run(capsys, "run", "bm-mean", "--mu", "1", "--a", "2", "--alpha", "0.2")
    assert code == 0
    header, row = out.strip().split("\n")
    assert header == "sweep,baseline,lower,upper,ref_lower,ref_upper,status"
    vals = row.split(",")
    assert vals[0] == "-" and vals[-1] == "ok"
    assert [float(v) for v in vals[1:6]] == pytest.approx([2.0, 5 / 3, 2.5, 5 / 3, 2.5], rel=1e-6)


def test_out_csv_round_trip_and_sidecar(tmp_path, capsys):
    out = tmp_path / "q" / "queue.csv"
    code, _, _ = run(capsys, "run", "queue", "--alpha", "1", "--rho", "1", "--delta", "0.05",
                     "--epsilon", "0.05", "--out", str(out), "--plot")
    assert code == 0
    text = out.read_bytes().decode("utf-8")
    assert "\r" not in text
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["version"] == __version__
    assert side["config"]["params"]["epsilon"] == [0.05]
    assert {"bounds_s", "total_s"} <= set(side["timings"])
    tab = CurveTable.from_csv(text)
    assert tab.same_values(CurveTable.from_json(side["table"]))
    assert tab.rows[0].upper == pytest.approx(0.4033611973050201, rel=1e-12)
    assert out.with_suffix(".png").stat().st_size > 0


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[bm-mean]\nmu = 1.0\na = 1.0\nalpha = 0.5\n\n[queue]\nepsilon = [0.1, 0.2]\n')
    _, out, _ = run(capsys, "run", "bm-mean", "--config", str(cfg))
    assert float(out.splitlines()[1].split(",")[3]) == pytest.approx(2.0, rel=1e-6)
    _, out, _ = run(capsys, "run", "bm-mean", "--config", str(cfg), "--alpha", "0.2")
    assert float(out.splitlines()[1].split(",")[3]) == pytest.approx(1 / 0.8, rel=1e-6)
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"bm-mean": {"mu": 1.0, "a": 1.0, "alpha": 0.5}}))
    _, out2, _ = run(capsys, "run", "bm-mean", "--config", str(js))
    _, out1, _ = run(capsys, "run", "bm-mean", "--config", str(cfg))
    assert out1 == out2


def test_grid_syntax(capsys):
    code, out, _ = run(capsys, "run", "queue", "--epsilon", "0.01:0.05:5")
    assert code == 0 and len(out.strip().splitlines()) == 6


@pytest.mark.parametrize("argv,needle", [
    (["run", "bm-mean", "--alpha", "x"], "alpha"),
    (["run", "bm-mean", "--beta", "1"], "beta"),
    (["run", "nope"], "scenario"),
    (["run", "queue", "--epsilon", "0.2,0.1"], "epsilon"),
    (["run", "bm-mean", "--mu"], "--mu"),
])
def test_config_errors(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code == 2 and needle in err


def test_malformed_toml_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[bm-mean]\nmu = 1\nalpha = = 2\n")
    code, _, err = run(capsys, "run", "bm-mean", "--config", str(cfg))
    assert code == 2 and "line 3" in err


def test_bad_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("PATHUQ_THREADS", "many")
    code, _, err = run(capsys, "run", "bm-mean")
    assert code == 2 and "PATHUQ_THREADS" in err


def test_numerical_failure_names_grid_point(capsys):
    code, _, err = run(capsys, "run", "vasicek", "--sigma_tilde", "1,6")
    assert code == 3 and "sigma_tilde=6.0" in err and "AssumptionViolated" in err


def test_validate_pass(tmp_path, capsys):
    out = tmp_path / "v.csv"
    code, _, err = run(capsys, "validate", "queue", "--paths", "1000", "--out", str(out))
    assert code == 0 and "PASS" in err
    checks = json.loads(out.with_suffix(".json").read_text())["validation"]
    assert all(c["status"] != "FAIL" for c in checks)


def test_negative_control_fails(capsys):
    code, _, err = run(capsys, "validate", "bm-mean", "--paths", "20000", "--corrupt-eta", "0.25")
    assert code == 1 and "FAIL" in err
