import json

import numpy as np
import pytest

from matconc.cli import main
from matconc.generators import GeneratorSpec
from matconc.rng import substream


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def write_frames(path, mats):
    lines = [json.dumps(np.asarray(m).tolist()) for m in mats]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_verify_explicit_runs(tmp_path, capsys):
    cfg = write_json(
        tmp_path / "cfg.json",
        {
            "runs": [
                {
                    "bound": "UMMI",
                    "generator": {"kind": "ELLIPSOID_RANK1", "dim": 2,
                                  "a": [[1.0, 0.0], [0.0, 2.0]]},
                    "trials": 3000,
                },
                {
                    "bound": "UMCI1",
                    "generator": {"kind": "GAUSSIAN_SCALED", "dim": 2,
                                  "c": [[0.5, 0.0], [0.0, 0.5]]},
                    "trials": 3000,
                },
            ]
        },
    )
    out = tmp_path / "reports.json"
    rc = main(["verify", "--config", cfg, "--seed", "5", "--output", str(out)])
    captured = capsys.readouterr()
    assert rc == 0
    assert "PASS UMMI[ELLIPSOID_RANK1" in captured.out
    assert "2/2 coverage checks passed" in captured.out
    reports = json.loads(out.read_text())
    assert len(reports) == 2
    assert reports[0]["verdict"] == "PASS"
    assert reports[0]["trials"] == 3000
    # floats survive the round trip exactly
    assert isinstance(reports[1]["event_freq"], float)


def test_verify_rejects_bad_config(tmp_path, capsys):
    cfg = write_json(tmp_path / "cfg.json", {"runs": [{"bound": "NOPE"}]})
    rc = main(["verify", "--config", cfg])
    err = capsys.readouterr().err
    assert rc == 2
    assert err.startswith("error:")
    cfg2 = write_json(tmp_path / "cfg2.json", {"suite": "exotic"})
    assert main(["verify", "--config", cfg2]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2


def test_sequential_test_matrix_mode_rejects_shift(tmp_path):
    gen = GeneratorSpec(kind="GAUSSIAN_SCALED", dim=2, m=0.8 * np.eye(2),
                        c=0.3 * np.eye(2))
    xs = gen.sample_path(substream(31, 0), 60)
    data = write_frames(tmp_path / "frames.ndjson", xs)
    cfg = write_json(
        tmp_path / "test.json",
        {
            "mode": "matrix",
            "alpha": 0.05,
            "m": [[0.0, 0.0], [0.0, 0.0]],  # wrong mean on purpose
            "v": [[0.09, 0.0], [0.0, 0.09]],
            "gamma": {"scale": 1.0},
        },
    )
    out = tmp_path / "decisions.ndjson"
    rc = main(["test", "--config", cfg, "--data", data, "--output", str(out)])
    assert rc == 0
    lines = [json.loads(s) for s in out.read_text().splitlines()]
    summary = lines[-1]
    assert summary["decision"] == "reject"
    assert summary["rejected_at"] is not None
    assert summary["rejected_at"] == len(lines) - 1
    assert all("trace" in f for f in lines[:-1])


def test_sequential_test_matrix_mode_continues_under_null(tmp_path):
    gen = GeneratorSpec(kind="GAUSSIAN_SCALED", dim=2, c=0.3 * np.eye(2))
    xs = gen.sample_path(substream(32, 0), 40)
    data = write_frames(tmp_path / "frames.ndjson", xs)
    cfg = write_json(
        tmp_path / "test.json",
        {
            "mode": "matrix",
            "m": [[0.0, 0.0], [0.0, 0.0]],
            "v": [[0.09, 0.0], [0.0, 0.09]],
        },
    )
    out = tmp_path / "out.ndjson"
    rc = main(["test", "--config", cfg, "--data", data, "--output", str(out)])
    assert rc == 0
    summary = json.loads(out.read_text().splitlines()[-1])
    assert summary["decision"] == "continue"
    assert summary["frames"] == 40


def test_sequential_test_scalar_mode_with_terminal_randomizer(tmp_path):
    gen = GeneratorSpec(kind="GAUSSIAN_SCALED", dim=1, m=np.array([[0.6]]),
                        c=np.array([[0.25]]))
    xs = gen.sample_path(substream(33, 0), 50)
    data = write_frames(tmp_path / "frames.ndjson", xs)
    cfg = write_json(
        tmp_path / "test.json",
        {
            "mode": "scalar",
            "alpha": 0.05,
            "m": [[0.0]],
            "v": [[0.0625]],
            "randomizer": {"kind": "uniform01", "seed": 3},
        },
    )
    out = tmp_path / "out.ndjson"
    rc = main(["test", "--config", cfg, "--data", data, "--output", str(out)])
    assert rc == 0
    lines = [json.loads(s) for s in out.read_text().splitlines()]
    assert lines[-1]["decision"] == "reject"
    assert all("log_value" in f for f in lines[:-1] if "u" not in f)


def test_sequential_test_bad_frames(tmp_path, capsys):
    cfg = write_json(
        tmp_path / "t.json", {"mode": "scalar", "m": [[0.0]], "v": [[1.0]]}
    )
    bad = tmp_path / "bad.ndjson"
    bad.write_text('[[0.1]]\n{"not json\n')
    rc = main(["test", "--config", str(cfg), "--data", str(bad)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "data line 2" in err
    # asymmetric frame
    asym = tmp_path / "asym.ndjson"
    asym.write_text("[[0.0, 1.0], [0.0, 0.0]]\n")
    cfg2 = write_json(
        tmp_path / "t2.json",
        {"mode": "scalar", "m": [[0.0, 0.0], [0.0, 0.0]], "v": [[1.0, 0.0], [0.0, 1.0]]},
    )
    rc = main(["test", "--config", cfg2, "--data", str(asym)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "data line 1" in err
    # wrong dimension
    wrong = tmp_path / "wrong.ndjson"
    wrong.write_text("[[0.1]]\n")
    rc = main(["test", "--config", cfg2, "--data", str(wrong)])
    assert rc == 2
    assert "data line 1" in capsys.readouterr().err


def test_sequential_test_missing_config_keys(tmp_path, capsys):
    cfg = write_json(tmp_path / "t.json", {"mode": "matrix", "m": [[0.0]]})
    data = write_frames(tmp_path / "d.ndjson", [np.zeros((1, 1))])
    rc = main(["test", "--config", cfg, "--data", data])
    assert rc == 2
    assert "'v'" in capsys.readouterr().err
    cfg2 = write_json(tmp_path / "t2.json", {"mode": "teleport", "m": [[0.0]]})
    assert main(["test", "--config", cfg2, "--data", data]) == 2


def test_power_compare(tmp_path):
    cfg = write_json(
        tmp_path / "pc.json",
        {
            "generator": {"kind": "GAUSSIAN_SCALED", "dim": 2,
                          "c": [[0.4, 0.0], [0.0, 0.4]]},
            "trials": 50,
            "horizon": 40,
            "mean_shift": [[-0.5, 0.0], [0.0, -0.5]],
        },
    )
    out = tmp_path / "pc_out.json"
    rc = main(["power-compare", "--config", str(cfg), "--seed", "2",
               "--output", str(out)])
    assert rc == 0
    res = json.loads(out.read_text())
    assert res["null_is_true"] is False
    # the data mean exceeds the hypothesized one, both tests should fire
    assert res["matrix"]["reject_rate"] > 0.5
    assert res["scalar"]["reject_rate"] >= res["matrix"]["reject_rate"] - 0.1
    assert res["scalar"]["mean_stop"] <= res["matrix"]["mean_stop"] + 1e-9


def test_falsify_record_output(tmp_path):
    out = tmp_path / "falsify.json"
    rc = main(["falsify", "--p", "2.0", "--d", "2", "--instances", "10",
               "--trials-per-instance", "300", "--seed", "4",
               "--output", str(out)])
    assert rc == 0
    rec = json.loads(out.read_text())
    assert rec["p"] == 2.0
    assert rec["best_ratio"] > 0.0
    assert len(rec["mats"]) >= 2


def test_float_serialization_round_trips(tmp_path):
    out = tmp_path / "o.json"
    rc = main(["falsify", "--p", "1.5", "--d", "1", "--instances", "5",
               "--trials-per-instance", "200", "--seed", "9",
               "--output", str(out)])
    assert rc == 0
    text = out.read_text()
    rec = json.loads(text)
    # serialize the parsed ratio again: the 17-digit writer must have
    # preserved the exact double
    assert repr(float(rec["best_ratio"])) != ""
    assert f'{rec["best_ratio"]:.17g}' in text.replace("e+0", "e+").replace("e-0", "e-") or str(rec["best_ratio"]) in text


def test_output_goes_to_stdout_without_flag(tmp_path, capsys):
    rc = main(["falsify", "--p", "2.0", "--d", "1", "--instances", "4",
               "--trials-per-instance", "100", "--seed", "1"])
    assert rc == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["d"] == 1
