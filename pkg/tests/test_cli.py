import subprocess
import sys
from pathlib import Path

import pytest

from maxsim.bench import read_timing_csv
from maxsim.cli import EXIT_SOLVER, EXIT_USAGE, main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("cylinder", "chain", "hopper", "quadruped"):
        assert name in out


def test_simulate_to_file(tmp_path, capsys):
    out = tmp_path / "ball.csv"
    assert main(["simulate", "ball", "--steps", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("step,time,iters")
    assert len(lines) == 7
    assert "5 steps" in capsys.readouterr().err


def test_simulate_to_stdout(capsys):
    assert main(["simulate", "block", "--steps", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4


def test_simulate_yaml_file_with_overrides(tmp_path):
    out = tmp_path / "arm.csv"
    assert main(["simulate", str(SCENARIOS / "swinging_arm.yaml"), "--steps", "3", "--dt", "0.005",
                 "--out", str(out)]) == 0
    last = out.read_text().splitlines()[-1].split(",")
    assert float(last[1]) == pytest.approx(0.015)


def test_bad_target_and_bad_override(capsys):
    assert main(["simulate", "no-such-thing"]) == EXIT_USAGE
    assert main(["simulate", "ball", "--dt", "-1"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_solver_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "fail.csv"
    assert main(["simulate", "block", "--steps", "3", "--eps", "1e-30", "--out", str(out)]) == EXIT_SOLVER
    assert "solver failed at step 0" in capsys.readouterr().err
    assert len(out.read_text().splitlines()) == 2


def test_bench_writes_timing_csv(tmp_path):
    out = tmp_path / "t.csv"
    png = tmp_path / "t.png"
    assert main(["bench", "cylinder", "--min", "2", "--max", "6", "--step", "2", "--reps", "1", "--steps", "3",
                 "--out", str(out), "--plot", str(png)]) == 0
    recs = read_timing_csv(out)
    assert [r.param for r in recs] == [2, 4, 6]
    assert all(r.best_seconds > 0 for r in recs)
    assert out.read_text().splitlines()[0] == "param,best_seconds,total_newton_iters,op_count"
    assert png.stat().st_size > 0


def test_bench_usage_errors(tmp_path):
    out = str(tmp_path / "t.csv")
    assert main(["bench", "chain", "--min", "5", "--max", "2", "--out", out]) == EXIT_USAGE
    assert main(["bench", "cylinder", "--min", "3", "--max", "3", "--reps", "1", "--out", out]) == EXIT_USAGE


def test_simulate_plot(tmp_path):
    png = tmp_path / "p.png"
    assert main(["simulate", "ball", "--steps", "10", "--out", str(tmp_path / "b.csv"), "--plot", str(png)]) == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "maxsim", "presets"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "hopper" in res.stdout
