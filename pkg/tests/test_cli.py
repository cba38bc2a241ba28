import subprocess
import sys

import pytest

from relaymatch.cli import main

CONFIG = """
[topology]
num_cus = 2
num_d2d = 2
[learning]
horizon = 30
[experiment]
policy = ebriq
num_replications = 2
seed = 3
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(CONFIG)
    return path


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "relaymatch 0.1.0" in capsys.readouterr().out


def test_simulate_writes_outputs(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(config_path), "--out", str(out)]) == 0
    assert (out / "ebriq.csv").exists()
    assert (out / "manifest.txt").exists()
    lines = (out / "ebriq.csv").read_text().splitlines()
    assert lines[0] == "period,mean_throughput,sm_fraction,mean_alpha_ratio,policy"
    assert len(lines) == 31


def test_simulate_flag_overrides(config_path, tmp_path):
    out = tmp_path / "out"
    code = main([
        "simulate", "--config", str(config_path), "--out", str(out),
        "--policy", "noncoop", "--periods", "10", "--replications", "1", "--seed", "9",
    ])
    assert code == 0
    csv = out / "noncoop.csv"
    assert csv.exists()
    assert len(csv.read_text().splitlines()) == 11
    assert "experiment.seed = 9" in (out / "manifest.txt").read_text()


def test_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[experiment]\npolicy = telepathy\n")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.ini"),
                 "--out", str(tmp_path / "o")]) == 4
    assert "i/o error" in capsys.readouterr().err


def test_unwritable_out_dir_is_io_error(config_path, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    assert main(["simulate", "--config", str(config_path),
                 "--out", str(blocker / "sub")]) == 4


def test_verify_suite_passes(capsys):
    assert main(["verify", "--suite", "nbs"]) == 0
    out = capsys.readouterr().out
    assert "nbs: PASS" in out


def test_entry_point_runs_as_module(config_path, tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "relaymatch.cli", "simulate",
         "--config", str(config_path), "--out", str(out), "--policy", "random"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "random.csv").exists()
