import csv
import json
import os

import pytest

from robust_slp import cli
from robust_slp.simkit import MetricsReport, ScenarioConfig

MINIMAL = """\
[scenario]
N = 2
K = 2
seed = 3
workers = 1

[sinr]
gamma_db = 10

[methods]
methods = NonRobust

[counts]
realizations = 3
slots = 2
noise_draws = 5
"""

FEASIBILITY = """\
[scenario]
N = 3
K = 3
seed = 5
workers = 1

[sinr]
gamma_db = 5

[methods]
methods = A1, A2

[uncertainty]
xi2 = 0.01
upsilon = 0.02, 0.1, 0.3

[counts]
realizations = 6

[feasibility]
sweep = violation_prob
"""


def _write(tmp_path, text, name="scenario.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_power_sweep_minimal(tmp_path):
    cfg = _write(tmp_path, MINIMAL)
    out = tmp_path / "out"
    out.mkdir()
    assert cli.main(["power-sweep", cfg, "-o", str(out)]) == cli.EXIT_OK
    rows = _rows(out / "power_sweep.csv")
    assert len(rows) == 2
    assert "avg_power_dbw" in rows[0]
    assert (out / "power_sweep.json").exists()
    assert (out / "manifest.json").exists()


@pytest.mark.parametrize("edit, words", [
    (("K = 2", "K = 3"), ("K", "K <= N")),
    (("[counts]", "[uncertainty]\nupsilon = 0.7\n\n[counts]"), ("(0, 1/2]",)),
])
def test_config_errors_exit_2(tmp_path, capsys, edit, words):
    cfg = _write(tmp_path, MINIMAL.replace(*edit))
    assert cli.main(["power-sweep", cfg, "-o", str(tmp_path)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    for w in words:
        assert w in err


def test_unknown_key_names_it(tmp_path, capsys):
    cfg = _write(tmp_path, MINIMAL.replace("seed = 3", "seed = 3\nantennas = 4"))
    assert cli.main(["power-sweep", cfg, "-o", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "antennas" in capsys.readouterr().err


def test_missing_output_dir_exit_3(tmp_path):
    cfg = _write(tmp_path, MINIMAL)
    assert cli.main(["ser", cfg, "-o", str(tmp_path / "nope")]) == cli.EXIT_IO


def test_missing_config_exit_3(tmp_path):
    assert cli.main(["feasibility", str(tmp_path / "none.ini"), "-o", str(tmp_path)]) == cli.EXIT_IO


def test_feasibility_rows_and_determinism(tmp_path):
    cfg = _write(tmp_path, FEASIBILITY)
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert cli.main(["feasibility", cfg, "-o", str(a)]) == cli.EXIT_OK
    assert cli.main(["feasibility", cfg, "-o", str(b)]) == cli.EXIT_OK
    csv_a = (a / "feasibility.csv").read_bytes()
    assert csv_a == (b / "feasibility.csv").read_bytes()
    rows = _rows(a / "feasibility.csv")
    head, body = rows[0], rows[1:]
    keys = {(r[head.index("method")], float(r[head.index("upsilon")])) for r in body}
    assert len(body) == 6
    assert keys == {(m, u) for m in ("SafeApprox1", "SafeApprox2") for u in (0.02, 0.1, 0.3)}


def test_manifest_hash_and_replay(tmp_path):
    cfg = _write(tmp_path, MINIMAL)
    first, second = tmp_path / "first", tmp_path / "second"
    first.mkdir()
    second.mkdir()
    assert cli.main(["power-sweep", cfg, "-o", str(first)]) == cli.EXIT_OK
    manifest = json.loads((first / "manifest.json").read_text())
    report = MetricsReport.from_json((first / "power_sweep.json").read_text())
    assert manifest["config_hash"] == report.metadata["config_hash"]
    assert manifest["config_hash"] == ScenarioConfig.from_dict(manifest["config"]).config_hash()
    assert manifest["command"] == "power-sweep"
    assert manifest["outputs"] == {"csv": "power_sweep.csv", "json": "power_sweep.json"}

    assert cli.main(["power-sweep", str(first / "manifest.json"), "-o", str(second)]) == cli.EXIT_OK
    assert (first / "power_sweep.csv").read_bytes() == (second / "power_sweep.csv").read_bytes()


def test_ser_and_validate_and_benchmark_run(tmp_path):
    text = MINIMAL.replace("methods = NonRobust", "methods = NonRobust, W")
    text += "\n[benchmark]\nk_grid = 2\nsolves = 30\n"
    cfg = _write(tmp_path, text)
    assert cli.main(["ser", cfg, "-o", str(tmp_path), "--true-xi2", "0.001"]) == cli.EXIT_OK
    assert (tmp_path / "ser.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["arguments"] == {"true_xi2": 0.001}
    assert cli.main(["validate", cfg, "-o", str(tmp_path)]) == cli.EXIT_OK
    head, *body = _rows(tmp_path / "validate.csv")
    assert body and all(r[head.index("passed")] == "True" for r in body)
    assert cli.main(["benchmark", cfg, "-o", str(tmp_path)]) == cli.EXIT_OK
    assert "mean_wall_time" in _rows(tmp_path / "benchmark.csv")[0]


def test_validate_without_robust_method_is_config_error(tmp_path):
    cfg = _write(tmp_path, MINIMAL)
    assert cli.main(["validate", cfg, "-o", str(tmp_path)]) == cli.EXIT_CONFIG


def test_tightness_rows(tmp_path):
    out = tmp_path / "tight.csv"
    assert cli.main(["tightness", "--grid", "0.05,0.3", "-o", str(out)]) == cli.EXIT_OK
    head, r05, r30 = _rows(out)
    assert head == ["upsilon", "rho", "psi", "alpha", "tightest_method"]
    assert float(r05[1]) == pytest.approx(1.953, abs=2e-3)
    assert float(r05[2]) == pytest.approx(1.766, abs=1e-3)
    assert float(r05[3]) == pytest.approx(2.448, abs=1e-3)
    assert r05[4] == "A2"
    assert r30[4] == "A1"
    assert (tmp_path / "tight.csv.manifest.json").exists()


def test_tightness_default_grid(tmp_path):
    out = tmp_path / "tight.csv"
    assert cli.main(["tightness", "-o", str(out)]) == cli.EXIT_OK
    rows = _rows(out)[1:]
    assert len(rows) == 100
    assert float(rows[0][0]) == pytest.approx(0.005)
    assert float(rows[-1][0]) == pytest.approx(0.5)


@pytest.mark.parametrize("grid", ["0.05,0.6", "0", "abc", ""])
def test_tightness_bad_grid_exit_2(tmp_path, grid):
    assert cli.main(["tightness", "--grid", grid, "-o", str(tmp_path / "t.csv")]) == cli.EXIT_CONFIG
    assert not (tmp_path / "t.csv").exists()


def test_csv_is_rfc4180(tmp_path):
    cfg = _write(tmp_path, MINIMAL)
    assert cli.main(["power-sweep", cfg, "-o", str(tmp_path)]) == cli.EXIT_OK
    raw = (tmp_path / "power_sweep.csv").read_bytes()
    assert raw.endswith(b"\r\n")
    assert b"\n" not in raw.replace(b"\r\n", b"")


def test_no_temporary_files_left(tmp_path):
    cfg = _write(tmp_path, MINIMAL)
    out = tmp_path / "o"
    out.mkdir()
    cli.main(["power-sweep", cfg, "-o", str(out)])
    assert sorted(os.listdir(out)) == ["manifest.json", "power_sweep.csv", "power_sweep.json"]


def test_verbosity_env(tmp_path, monkeypatch, capsys):
    cfg = _write(tmp_path, MINIMAL)
    monkeypatch.setenv(cli.VERBOSE_ENV, "1")
    cli.main(["power-sweep", cfg, "-o", str(tmp_path)])
    assert "config hash" in capsys.readouterr().err
    monkeypatch.delenv(cli.VERBOSE_ENV)
    cli.main(["power-sweep", cfg, "-o", str(tmp_path)])
    assert capsys.readouterr().err == ""


def test_solver_failure_exit_4(tmp_path, monkeypatch):
    cfg = _write(tmp_path, MINIMAL)

    def failing(cfg):
        rep = MetricsReport(kind="power_sweep", columns=("failed_count",),
                            metadata={"config_hash": cfg.config_hash()})
        rep.add(failed_count=1)
        return rep

    monkeypatch.setitem(cli.RUNNERS, "power-sweep", lambda c, a: failing(c))
    assert cli.main(["power-sweep", cfg, "-o", str(tmp_path)]) == cli.EXIT_SOLVER
