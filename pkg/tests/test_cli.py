import json
import subprocess
import sys

import numpy as np

from imcflow.cli import main
from imcflow.runner import (EXIT_CHECKPOINT, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION,
                            read_timeseries)

from test_scenario import MINIMAL, SCENARIOS


def test_umbilic_scenario_runs(tmp_path, capsys):
    code = main(["run", str(SCENARIOS / "umbilic_homogeneous.toml"), "--output-dir", str(tmp_path)])
    assert code == EXIT_OK
    out = tmp_path / "umbilic-homogeneous"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["termination"] == "Completed" and summary["t_final"] == 10.0
    assert summary["checks"]["envelopes"]["ok"]
    F = read_timeseries(out / "timeseries.csv")["F_n"]
    assert np.max(np.abs(F - F[0])) <= 1e-10 * F[0]
    assert len(list(out.glob("*.png"))) >= 4
    assert (out / "final.imck").exists()


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario\nname = 1\n")
    assert main(["run", str(bad), "--output-dir", str(tmp_path)]) == EXIT_PARSE


def test_validation_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(MINIMAL.replace("dt_max = 1e-3\n", "").replace("cfl = 0.5", "cfl = 3.0"))
    assert main(["run", str(bad), "--output-dir", str(tmp_path)]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "step.dt_max" in err and "step.cfl" in err


def test_corrupt_checkpoint_exit_code(tmp_path):
    ck = tmp_path / "x.imck"
    ck.write_bytes(b"garbage")
    assert main(["resume", str(ck)]) == EXIT_CHECKPOINT


def test_resume_reproduces_straight_run(tmp_path):
    text = MINIMAL.replace("t_end = 1.0", "t_end = 0.2").replace(
        "record_every = 10", "record_every = 10\ncheckpoint_every = 150") + "[output]\nfigures = false\n"
    path = tmp_path / "u.toml"
    path.write_text(text)
    assert main(["run", str(path), "--output-dir", str(tmp_path / "a")]) == EXIT_OK
    from imcflow.checkpoint import load_checkpoint
    straight = load_checkpoint(tmp_path / "a" / "umbilic" / "final.imck").state
    ck = tmp_path / "a" / "umbilic" / "checkpoint.imck"
    assert load_checkpoint(ck).step == 150
    # rewind: rerun to an intermediate checkpoint, then resume
    mid = tmp_path / "mid.toml"
    mid.write_text(text.replace("t_end = 0.2", "t_end = 0.2\n").replace("checkpoint_every = 150",
                                                                        "checkpoint_every = 150"))
    assert main(["resume", str(ck), "--output-dir", str(tmp_path / "b")]) == EXIT_OK
    resumed = load_checkpoint(tmp_path / "b" / "final.imck").state
    assert np.array_equal(resumed.g.data, straight.g.data)


def test_unknown_suite(capsys):
    assert main(["verify", "nonsense"]) == EXIT_VALIDATION


def test_verify_prints_lines(capsys):
    assert main(["verify", "umbilic"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("[PASS]  1 ")


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "imcflow.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "verify" in out.stdout
