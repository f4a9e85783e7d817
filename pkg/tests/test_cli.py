import csv
import json

import pytest

from dipm.cli import main

SMALL = "alpha = 1.5\nn1 = 16\nn2 = 16\nt_end = 0.1\nsample_dt = 0.05\nepsilon = 1e-2\n"


def _cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_simulate_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--config", _cfg(tmp_path, SMALL), "--out", str(out), "--quiet"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["termination"] == "completed" and man["exit_code"] == 0
    assert "diagnostics.csv" in man["files"] and "summary.json" in man["files"]
    rows = list(csv.reader((out / "diagnostics.csv").open()))
    assert len(rows) == 4 and rows[0][0] == "t"


def test_invalid_config_names_key(tmp_path, capsys):
    code = main(["simulate", "--config", _cfg(tmp_path, "alpha = 2.5\n"), "--out", str(tmp_path)])
    assert code == 1
    assert "alpha" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == 1


def test_default_output_root_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("IPM_OUT_DIR", str(tmp_path / "root"))
    assert main(["simulate", "--config", _cfg(tmp_path, SMALL), "--quiet"]) == 0
    assert (tmp_path / "root" / "simulate-run" / "manifest.json").exists()


def test_seed_override(tmp_path):
    main(["simulate", "--config", _cfg(tmp_path, SMALL), "--out", str(tmp_path / "a"),
          "--seed", "9", "--quiet"])
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["config"]["seed"] == 9


def test_sweep_with_invalid_cell(tmp_path):
    text = SMALL + "sweep.alpha = 1.5, 2.5\nsweep.epsilon = 1e-3, 1e-2\n"
    text = text.replace("alpha = 1.5\n", "").replace("epsilon = 1e-2\n", "")
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", _cfg(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    cells = sorted(out.glob("cell_*/manifest.json"))
    assert len(cells) == 4
    rows = list(csv.DictReader((out / "aggregate.csv").open()))
    status = {(r["alpha"], r["epsilon"]): r["status"] for r in rows}
    assert status[("1.5", "0.001")] == "ok" and status[("1.5", "0.01")] == "ok"
    assert status[("2.5", "0.001")] == "failed" and status[("2.5", "0.01")] == "failed"


def test_sweep_cap(tmp_path):
    text = SMALL + "sweep.seed = 1, 2, 3\n"
    code = main(["sweep", "--config", _cfg(tmp_path, text), "--out", str(tmp_path),
                 "--max-cells", "2"])
    assert code == 1


def test_sweep_parallel_workers(tmp_path):
    text = SMALL + "sweep.seed = 1, 2\n"
    out = tmp_path / "par"
    assert main(["sweep", "--config", _cfg(tmp_path, text), "--out", str(out),
                 "--workers", "2", "--quiet"]) == 0
    rows = list(csv.DictReader((out / "aggregate.csv").open()))
    assert [r["status"] for r in rows] == ["ok", "ok"]


def test_opcheck_pass_and_injected_failure(tmp_path, capsys):
    assert main(["opcheck", "--fields", "3", "--n", "32", "--quiet"]) == 0
    code = main(["opcheck", "--fields", "3", "--n", "32", "--inject", "plancherel",
                 "--out", str(tmp_path)])
    assert code == 3
    assert "plancherel" in capsys.readouterr().err
    report = json.loads((tmp_path / "opcheck.json").read_text())
    assert [r["name"] for r in report if not r["passed"]] == ["plancherel"]
    assert main(["opcheck", "--n", "16", "--inject", "bogus"]) == 1


def test_compare(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", _cfg(tmp_path, SMALL), "--out", str(out), "--quiet"]) == 0
    data = json.loads((out / "compare.json").read_text())
    assert data["passed"] and data["max_hs_difference"] < 1e-12


def test_decay_scan(tmp_path):
    text = "alpha = 1.0\nn = 1024\nL = 125.66370614359172\nt_min = 1\nt_max = 12\nn_times = 8\n"
    out = tmp_path / "scan"
    assert main(["decay-scan", "--config", _cfg(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    data = json.loads((out / "decay.json").read_text())
    assert data["conclusive"] is True
    assert len((out / "decay.csv").read_text().splitlines()) == 9
    bad = _cfg(tmp_path, "data = h\n", "bad.cfg")
    assert main(["decay-scan", "--config", bad, "--out", str(out)]) == 1


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "dipm" in capsys.readouterr().out
