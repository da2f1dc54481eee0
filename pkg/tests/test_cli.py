import json
import subprocess
import sys

import numpy as np
import pytest

from pmusafe.cli import main
from pmusafe.distributions import InputSet, save_inputs
from pmusafe.pipeline.frames import Frame, load_frames, write_frames


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def sum_inputs(tmp_path):
    p = tmp_path / "inputs.json"
    save_inputs(InputSet.independent(["x1", "x2"], [0.0, 0.0], [3.0, 4.0]), p)
    return p


def write_config(path, lam, **extra):
    doc = {
        "model": {"human": "human", "robot": "robot.ee", "attributes": ["distance"]},
        "noise": {"correlation": 0.5, "entities": {"human": {"absolute": 0.01}}},
        "limits": [{"attribute": "distance", "lambda": lam, "direction": "lower"}],
        "mc": {"M": 2000, "seed": 3},
        **extra,
    }
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def stream(tmp_path):
    p = tmp_path / "stream.csv"
    write_frames([Frame(k / 30, {"human": (2.0, 0.01 * k, 0.0), "robot.ee": (0.0, 0.0, 0.0)}) for k in range(12)], p)
    return p


def test_propagate_analytic(sum_inputs, capsys):
    code, out, err = run(["propagate", "--model", "linear-combination:1,1", "--inputs", str(sum_inputs), "--analytic"], capsys)
    assert code == 0
    assert json.loads(out)["u_prop"] == pytest.approx(5.0, rel=1e-12)
    assert "analytic" in err


def test_propagate_mc_is_byte_identical(sum_inputs, capsys, tmp_path):
    argv = ["propagate", "--model", "(add x1 x2)", "--inputs", str(sum_inputs), "--mc", "--trials", "100000", "--seed", "7"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert first == second
    assert json.loads(first)["u_prop"] == pytest.approx(5.0, rel=0.01)
    code, _, _ = run(argv + ["--dump-samples", str(tmp_path / "s.npy")], capsys)
    assert code == 0 and np.load(tmp_path / "s.npy").shape == (100_000,)


def test_usage_errors(sum_inputs, capsys, tmp_path):
    code, _, err = run(["propagate", "--model", "distance3d", "--inputs", str(tmp_path / "nope.json"), "--analytic"], capsys)
    assert code == 64 and "usage" in err
    code, _, _ = run(["propagate", "--model", "distance3d", "--inputs", str(sum_inputs)], capsys)
    assert code == 64  # Monte-Carlo without --seed
    code, _, _ = run(["frobnicate"], capsys)
    assert code == 64
    code, _, _ = run(["synth"], capsys)
    assert code == 64


def test_runtime_error_exit_1(sum_inputs, capsys):
    code, _, err = run(["propagate", "--model", "(add x1 x2", "--inputs", str(sum_inputs), "--analytic"], capsys)
    assert code == 1 and "parse-error" in err


def test_evaluate_compliant_and_violating(stream, tmp_path, capsys):
    report, trace = tmp_path / "report.json", tmp_path / "trace.csv"
    cfg = write_config(tmp_path / "ok.json", 1.0)
    code, out, _ = run(["evaluate", str(stream), str(cfg), "--report", str(report), "--trace", str(trace)], capsys)
    assert code == 0
    assert json.loads(out)["compliant"] is True
    assert json.loads(report.read_text())["report"]["n_violations"] == 0
    assert len(trace.read_text().splitlines()) == 13

    cfg = write_config(tmp_path / "bad.json", 1.99)
    code, out, _ = run(["evaluate", str(stream), str(cfg)], capsys)
    assert code == 2
    doc = json.loads(out)
    assert doc["n_violations"] > 0 and doc["violation_fraction"] > 0


def test_evaluate_reports_are_byte_identical(stream, tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json", 1.0)
    for i in range(2):
        run(["evaluate", str(stream), str(cfg), "--report", str(tmp_path / f"r{i}.json")], capsys)
    assert (tmp_path / "r0.json").read_bytes() == (tmp_path / "r1.json").read_bytes()


def test_synth_and_validate(tmp_path, capsys):
    true, meas = tmp_path / "true.jsonl", tmp_path / "meas.jsonl"
    code, out, _ = run(
        ["synth", "--fps", "30", "--duration", "200", "--seed", "1", "--true-out", str(true), "--measured-out", str(meas)],
        capsys,
    )
    assert code == 0 and json.loads(out)["frames"] == 6000
    assert len(load_frames(true)) == len(load_frames(meas)) == 6000

    quiet_t, quiet_m = tmp_path / "qt.csv", tmp_path / "qm.csv"
    run(
        ["synth", "--duration", "5", "--seed", "2", "--relative", "0", "--absolute", "0", "--velocity-coeff", "0",
         "--true-out", str(quiet_t), "--measured-out", str(quiet_m)],
        capsys,
    )
    assert quiet_t.read_bytes() == quiet_m.read_bytes()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mc": {"M": 100, "seed": 1}}))
    code, out, _ = run(["validate", "--true", str(quiet_t), "--measured", str(quiet_m), "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["containment_rate"] == 1.0


def test_typeb_series_and_stream(tmp_path, capsys):
    series = tmp_path / "len.csv"
    values = 5.0 + np.random.default_rng(0).normal(scale=0.1, size=1000)
    series.write_text("length\n" + "\n".join(repr(float(v)) for v in values) + "\n")
    code, out, err = run(["typeb", "--series", str(series)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["n"] == 1000
    assert doc["absolute"] == pytest.approx(0.1, rel=0.05)
    assert "1000 samples" in err

    frames = [Frame(k / 30, {"hip": (0, 0, 0), "knee": (0.4 + 0.01 * np.sin(k), 0, 0)}) for k in range(60)]
    stream = tmp_path / "pose.jsonl"
    write_frames(frames, stream)
    code, out, _ = run(["typeb", "--stream", str(stream), "--segment", "thigh:hip:knee"], capsys)
    assert code == 0 and json.loads(out)["thigh"]["n"] == 60
    code, _, _ = run(["typeb", "--stream", str(stream)], capsys)
    assert code == 64


def test_console_script_entry_point(sum_inputs):
    proc = subprocess.run(
        [sys.executable, "-m", "pmusafe.cli", "propagate", "--model", "linear-combination:1,1",
         "--inputs", str(sum_inputs), "--analytic"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["u_prop"] == pytest.approx(5.0)
