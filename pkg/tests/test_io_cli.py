import json

import numpy as np
import pytest

from lqsopt.cli import main
from lqsopt.errors import ValidationError
from lqsopt.fits import Dataset
from lqsopt.io import read_csv, read_result, strip_volatile, write_csv, write_result
from lqsopt.oracle import enumerate_lqs


@pytest.fixture
def tiny_csv(tmp_path):
    path = tmp_path / "tiny.csv"
    assert main(["datagen", "--n", "9", "--p", "2", "--pi", "0.3", "--seed", "7",
                 "--out", str(path)]) == 0
    return path


def test_csv_round_trip(tmp_path, rng):
    d = Dataset(rng.normal(size=6), rng.normal(size=(6, 3)))
    path = tmp_path / "d.csv"
    write_csv(d, path)
    assert path.read_text().splitlines()[0] == "y,x1,x2,x3"
    back = read_csv(path)
    assert np.array_equal(back.y, d.y) and np.array_equal(back.X, d.X)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValidationError):
        read_csv(path)


def test_result_schema(tmp_path):
    path = tmp_path / "r.json"
    doc = {"algo": "x", "config": {}, "beta": np.array([1.0, 2.0]), "objective": 1.0,
           "wall_time_s": 0.1, "seed": 0}
    write_result(doc, path)
    assert read_result(path, expected_p=2)["schema_version"] == 1
    with pytest.raises(ValidationError):
        read_result(path, expected_p=3)
    raw = json.loads(path.read_text())
    raw["schema_version"] = 99
    path.write_text(json.dumps(raw))
    with pytest.raises(ValidationError):
        read_result(path)


def test_fit_noiseless(tmp_path):
    X = np.random.default_rng(0).normal(size=(10, 2))
    path = tmp_path / "clean.csv"
    write_csv(Dataset(X @ np.array([2.0, -1.0]), X), path)
    for algo in ("lad", "cheb", "ls", "hybrid"):
        out = tmp_path / f"{algo}.json"
        assert main(["fit", "--algo", algo, "--q", "6", "--runs", "3", "--in", str(path),
                     "--out", str(out)]) == 0
        assert read_result(out)["objective"] == pytest.approx(0.0, abs=1e-7)


def test_exit_codes(tiny_csv, tmp_path, capsys):
    out = str(tmp_path / "x.json")
    assert main(["fit", "--algo", "lad", "--q", "60", "--in", str(tiny_csv), "--out", out]) == 2
    assert main(["fit", "--algo", "nope", "--q", "6", "--in", str(tiny_csv), "--out", out]) == 2
    assert main(["mio", "--q", "6", "--in", str(tiny_csv), "--out", out]) == 2
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exit_code(tiny_csv, tmp_path, monkeypatch):
    from lqsopt import cli
    from lqsopt.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("simulated")

    monkeypatch.setattr(cli, "run_algorithm", boom)
    assert main(["fit", "--algo", "lad", "--q", "6", "--in", str(tiny_csv),
                 "--out", str(tmp_path / "x.json")]) == 3


def test_global_flags_before_subcommand(tiny_csv, tmp_path):
    out = tmp_path / "s.json"
    assert main(["--seed", "3", "--threads", "2", "fit", "--algo", "subgrad", "--q", "6",
                 "--runs", "4", "--in", str(tiny_csv), "--out", str(out)]) == 0
    assert read_result(out)["seed"] == 3


def test_oracle_and_mio_agree(tiny_csv, tmp_path, capsys):
    assert main(["oracle", "--q", "6", "--in", str(tiny_csv)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["objective"] == pytest.approx(enumerate_lqs(read_csv(tiny_csv), 6).objective)
    out, trace = tmp_path / "m.json", tmp_path / "t.csv"
    assert main(["mio", "--q", "6", "--time-limit", "60", "--in", str(tiny_csv), "--out", str(out),
                 "--trace", str(trace)]) == 0
    doc = read_result(out)
    assert doc["status"] == "ProvedOptimal"
    assert doc["objective"] == pytest.approx(printed["objective"], rel=1e-6)
    assert trace.read_text().startswith("wall_time_s,upper_bound,lower_bound\n")


def test_mio_warm_start_and_gap_shortcut(tiny_csv, tmp_path):
    warm = tmp_path / "h.json"
    assert main(["fit", "--algo", "hybrid", "--q", "6", "--runs", "3", "--in", str(tiny_csv),
                 "--out", str(warm)]) == 0
    out, trace = tmp_path / "m.json", tmp_path / "t.csv"
    assert main(["mio", "--q", "6", "--time-limit", "60", "--gap-tol", "1e30", "--warm-start",
                 str(warm), "--in", str(tiny_csv), "--out", str(out), "--trace", str(trace)]) == 0
    first = trace.read_text().splitlines()[1].split(",")
    assert float(first[1]) == pytest.approx(read_result(warm)["objective"])
    assert read_result(out)["nodes"] <= 1


def test_mio_box_center(tiny_csv, tmp_path):
    out = tmp_path / "m.json"
    assert main(["mio", "--q", "6", "--time-limit", "60", "--box-center", "ls", "--box-radius",
                 "1e3", "--in", str(tiny_csv), "--out", str(out)]) == 0
    assert read_result(out)["config"]["box_radius"] == 1e3


def test_datagen_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["datagen", "--example", "Ex1", "--seed", "7", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_csv(a).n == 201


def test_breakdown_command(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 2))
    path = tmp_path / "f.csv"
    write_csv(Dataset(X @ np.ones(2) + 0.3 * rng.normal(size=10), X), path)
    out = tmp_path / "rep.json"
    assert main(["breakdown", "--q", "7", "--in", str(path), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["schema"] == "lqs-breakdown/1" and rep["verdict"]["bounded"]


def test_strip_volatile():
    assert strip_volatile({"a": 1, "wall_time_s": 3}) == {"a": 1}
