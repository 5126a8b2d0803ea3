import subprocess
import sys

import pytest

from nygrad.bench import read_rows
from nygrad.cli import main


def test_solve_writes_row(tmp_path, capsys):
    out = tmp_path / "row.csv"
    code = main(["solve", "--problem", "problem3", "--n", "1000", "--solver", "ny",
                 "--kappa", "1e4", "--out", str(out)])
    assert code == 0
    (row,) = read_rows(str(out))
    assert row.status == "Converged" and row.problem == "problem3"
    assert "Converged" in capsys.readouterr().out


def test_solve_general_problem_json(tmp_path):
    out = tmp_path / "row.json"
    assert main(["solve", "--problem", "engval1", "--n", "100", "--out", str(out)]) == 0
    assert read_rows(str(out))[0].solver == "any"


def test_solve_passes_config(tmp_path):
    out = tmp_path / "row.csv"
    main(["solve", "--problem", "problem1", "--n", "1000", "--solver", "ny",
          "--max-iter", "3", "--out", str(out)])
    assert read_rows(str(out))[0].status == "MaxIterations"


@pytest.mark.parametrize("argv", [
    ["solve", "--problem", "engval1", "--n", "100", "--solver", "sl-yv"],
    ["solve", "--problem", "problem1", "--n", "100", "--T", "2"],
    ["solve", "--problem", "dixmaanj", "--n", "10"],
    ["solve", "--problem", "nope", "--n", "10"],
    ["bench", "--suite", "other", "--out", "x.csv"],
    ["profile", "--in", "/nonexistent.csv"],
    ["frobnicate"],
])
def test_invalid_input_exit_code(argv):
    assert main(argv) == 1


def test_internal_error_exit_code(monkeypatch):
    from nygrad import bench

    def boom(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(bench, "run_cell", boom)
    assert main(["solve", "--problem", "problem1", "--n", "10"]) == 2


def test_bench_then_profile(tmp_path, capsys):
    rows = tmp_path / "bench.csv"
    code = main(["bench", "--reps", "2", "--out", str(rows), "--sizes", "300",
                 "--problems", "problem1", "engval1", "--solvers", "any", "abbmin"])
    assert code == 0
    got = read_rows(str(rows))
    assert len(got) == 8
    out = capsys.readouterr().out
    assert "avg extra line-search" in out
    prof = tmp_path / "profile.csv"
    assert main(["profile", "--in", str(rows), "--metric", "iterations",
                 "--out", str(prof)]) == 0
    assert prof.read_text().splitlines()[0] == "log2_tau,abbmin,any"


def test_check_grad(capsys):
    assert main(["check-grad", "--problem", "firose", "--n", "20"]) == 0
    assert "(ok)" in capsys.readouterr().out


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "nygrad", "check-grad", "--problem",
                           "cosine", "--n", "10"], capture_output=True, text=True)
    assert done.returncode == 0 and "cosine" in done.stdout
    done = subprocess.run([sys.executable, "-m", "nygrad", "--help"],
                          capture_output=True, text=True)
    assert done.returncode == 0 and "check-grad" in done.stdout
