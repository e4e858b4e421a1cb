import csv

import pytest

from lqsopt.bench import relative_accuracy, run_bench, write_table
from lqsopt.cli import main
from lqsopt.errors import ValidationError
from lqsopt.hybrid import InitStrategy
from lqsopt.mio import MioLimits


def test_relative_accuracy_arithmetic():
    assert relative_accuracy(1.5, 1.0) == pytest.approx(50.0)
    assert relative_accuracy(0.0, 0.0) == 0.0


def test_single_algo_is_its_own_reference():
    b = run_bench("Ex1", ["subgrad"], instances=2, scale=8, init=InitStrategy(runs=3))
    assert b["rows"][0]["rel_acc_mean"] == 0.0


def test_dominated_algorithm_positive(tmp_path):
    b = run_bench("Ex1", ["lad", "hybrid"], instances=2, scale=8, init=InitStrategy(runs=3),
                  oracle=False)
    rows = {r["algo"]: r for r in b["rows"]}
    assert rows["lad"]["rel_acc_mean"] > 0 and rows["hybrid"]["rel_acc_mean"] == 0
    path = tmp_path / "t.csv"
    write_table(b, path)
    header = next(csv.reader(path.open()))
    assert header[:5] == ["example", "n", "p", "q", "algo"]
    assert {"init_time_mean_s", "solve_time_mean_s", "total_time_mean_s"} <= set(header)


def test_oracle_column_on_tiny_scale():
    b = run_bench("Ex1", ["hybrid", "mio"], instances=1, scale=20, init=InitStrategy(runs=3),
                  mio_limits=MioLimits(time_limit=60), oracle=True)
    rows = {r["algo"]: r for r in b["rows"]}
    assert rows["mio"]["rel_acc_oracle_mean"] == pytest.approx(0.0, abs=1e-4)


def test_unknown_algorithm():
    with pytest.raises(ValidationError):
        run_bench("Ex1", ["magic"], instances=1, scale=8)


def test_cli_bench(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["bench", "--example", "Ex1", "--scale", "8", "--algos", "subgrad,hybrid",
                 "--instances", "2", "--runs", "3", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3
