import json

import numpy as np
import pytest

from gridid import ieee14_day_config
from gridid.cli import main
from gridid.market import load_dataset
from gridid.network import ieee14, save_grid


@pytest.fixture
def inputs(tmp_path):
    save_grid(ieee14(), tmp_path / "grid.json")
    (tmp_path / "cfg.json").write_text(json.dumps(ieee14_day_config(intervals=24).to_dict()))
    return tmp_path


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    assert "simulate" in capsys.readouterr().out


def test_bad_flag_exits_two():
    with pytest.raises(SystemExit) as e:
        main(["recover", "--no-such-flag"])
    assert e.value.code == 2


def test_simulate_is_reproducible(inputs):
    args = ["simulate", "--grid", str(inputs / "grid.json"), "--config", str(inputs / "cfg.json"),
            "--seed", "11", "--out"]
    assert main(args + [str(inputs / "a.txt")]) == 0
    first = (inputs / "a.txt").read_bytes()
    assert main(args + [str(inputs / "a.txt")]) == 0
    assert (inputs / "a.txt").read_bytes() == first
    man = json.loads((inputs / "a.txt.manifest.json").read_text())
    assert man["seed"] == 11 and man["command"] == "simulate"
    assert load_dataset(inputs / "a.txt").N == 13


def test_lp_dump_dir(inputs):
    dump = inputs / "lp"
    main(["simulate", "--grid", str(inputs / "grid.json"), "--config", str(inputs / "cfg.json"),
          "--seed", "1", "--out", str(inputs / "d.txt"), "--lp-dump", str(dump)])
    assert len(list(dump.glob("interval_*.txt"))) == 24


def test_truncated_dataset_is_schema_error(inputs, capsys):
    main(["simulate", "--grid", str(inputs / "grid.json"), "--config", str(inputs / "cfg.json"),
          "--seed", "1", "--out", str(inputs / "d.txt")])
    text = (inputs / "d.txt").read_text()
    (inputs / "d.txt").write_text(text[: len(text) // 3])
    code = main(["recover", "--data", str(inputs / "d.txt"), "--out", str(inputs / "r.txt")])
    assert code == 1
    assert "error[io]" in capsys.readouterr().err


def test_recover_then_evaluate(inputs, capsys):
    d, r = inputs / "d.txt", inputs / "r.txt"
    main(["simulate", "--grid", str(inputs / "grid.json"), "--config", str(inputs / "cfg.json"),
          "--seed", "2", "--out", str(d)])
    assert main(["recover", "--data", str(d), "--max-iter", "50", "--out", str(r)]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--result", str(r), "--truth", "ieee14",
                 "--export-dir", str(inputs / "ex")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["iterations"] == 50 and 0 <= report["f1"] <= 1
    B = np.loadtxt(inputs / "ex" / "B_true_unitmax.csv", delimiter=",")
    assert np.abs(B).max() == 1.0


def test_pipeline_report(tmp_path):
    out = tmp_path / "run"
    assert main(["pipeline", "--fixture", "ieee14", "--seed", "7", "--max-iter", "100",
                 "--out-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert {"f1", "precision", "recall", "residual_history"} <= report.keys()
    hist = np.loadtxt(out / report["residual_history"], delimiter=",", skiprows=1)
    assert hist.shape == (100, 6)
    assert (out / "report.json.manifest.json").exists()


def test_unknown_fixture(tmp_path, capsys):
    assert main(["pipeline", "--fixture", "ieee9000", "--out-dir", str(tmp_path)]) == 1
    assert "error[input]" in capsys.readouterr().err
