import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from gausstest.cli import main, parse_columns, read_csv
from gausstest.exceptions import ConfigurationError, DataError


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def small_csv(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((40, 2))
    data = np.column_stack([x, x ** 3 + 0.5 * rng.standard_normal((40, 2)),
                            rng.standard_normal((40, 2))])
    path = tmp_path / "small.csv"
    np.savetxt(path, data, delimiter=",", header="a,b,c,d,e,f", comments="")
    return path


def test_fixture_rejects(data_dir, capsys):
    code, out, _ = run(["run", "--input", data_dir / "monotone_50.csv", "--test", "ind",
                        "--x", "1-2", "--y", "3-4", "--multiplier", "rademacher",
                        "--boot", 2000, "--alpha", 0.05, "--seed", 7], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["reject"] is True
    assert report["n"] == 50 and report["p"] == 2 and report["q"] == 2


def test_report_fields_and_round_trip(small_csv, capsys):
    code, out, _ = run(["run", "--input", small_csv, "--x", "1-2", "--y", "3,4",
                        "--boot", 300, "--seed", 1], capsys)
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"test", "statistic", "critical_value", "p_value", "alpha", "reject",
                           "multiplier", "N", "seed", "argmax", "n", "p", "q", "m", "warnings"}
    assert set(report["argmax"]) == {"x_col", "y_col"}
    assert report["argmax"]["x_col"] in (1, 2) and report["argmax"]["y_col"] in (3, 4)
    assert json.dumps(report, sort_keys=True, indent=2) + "\n" == out


def test_byte_identical_reruns_with_config(small_csv, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(small_csv), "x": "1-2", "y": "5-6", "z": "3-4",
                               "test": "ci-lasso", "boot": 300, "seed": 3}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["run", "--config", cfg, "--out", a], capsys)[0] == 0
    assert run(["run", "--config", cfg, "--out", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["m"] == 2


def test_flag_overrides_config(small_csv, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(small_csv), "x": "1", "y": "2", "boot": 300}))
    code, out, _ = run(["run", "--config", cfg, "--boot", 400], capsys)
    assert code == 0 and json.loads(out)["N"] == 400
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["run", "--config", cfg], capsys)[0] == 2


def test_seed_from_environment(small_csv, capsys, monkeypatch):
    args = ["run", "--input", small_csv, "--x", "1", "--y", "3", "--boot", 300]
    monkeypatch.setenv("GAUSSTEST_SEED", "11")
    _, env_out, _ = run(args, capsys)
    assert json.loads(env_out)["seed"] == 11
    _, flag_out, _ = run(args + ["--seed", 11], capsys)
    assert env_out == flag_out
    _, explicit, _ = run(args + ["--seed", 12], capsys)
    assert json.loads(explicit)["seed"] == 12
    monkeypatch.setenv("GAUSSTEST_SEED", "abc")
    assert run(args, capsys)[0] == 2


def test_ci_fnn_run(small_csv, capsys):
    code, out, _ = run(["run", "--input", small_csv, "--test", "ci-fnn", "--x", "1-2",
                        "--y", "3-4", "--z", "5-6", "--n3", "remainder", "--boot", 200], capsys)
    assert code == 0 and json.loads(out)["test"] == "ci-fnn"
    code, out, _ = run(["run", "--input", small_csv, "--test", "ci-fnn", "--x", "1-2",
                        "--y", "3-4", "--z", "5-6", "--n3", 3, "--no-split", "--boot", 200],
                       capsys)
    assert code == 0 and json.loads(out)["n"] == 3


def test_warnings_are_reported(tmp_path, capsys):
    path = tmp_path / "ties.csv"
    path.write_text("1,5\n2,6\n2,7\n3,8\n4,9\n")
    code, out, _ = run(["run", "--input", path, "--x", "1", "--y", "2", "--boot", 200], capsys)
    assert code == 0
    assert any("tied" in w for w in json.loads(out)["warnings"])


@pytest.mark.parametrize("x, y, z", [("1-2", "2-3", None), ("1-2", "3-7", None), ("0-1", "2", None),
                                     ("2-1", "3", None), ("a", "2", None), ("1", "2", "2")])
def test_bad_ranges_exit_2(small_csv, capsys, x, y, z):
    args = ["run", "--input", small_csv, "--x", x, "--y", y, "--test", "ci-lasso", "--boot", 200]
    if z:
        args += ["--z", z]
    code, _, err = run(args, capsys)
    assert code == 2 and "configuration error" in err


def test_config_errors_exit_2(small_csv, capsys):
    base = ["run", "--input", small_csv, "--x", "1", "--y", "2"]
    assert run(base + ["--multiplier", "uniform"], capsys)[0] == 2
    assert run(base + ["--boot", 10], capsys)[0] == 2
    assert run(base + ["--alpha", 1.5], capsys)[0] == 2
    assert run(base + ["--z", "3"], capsys)[0] == 2
    assert run(base + ["--test", "anova"], capsys)[0] == 2
    assert run(["run", "--x", "1", "--y", "2"], capsys)[0] == 2
    assert run(base + ["--bh", 0.1], capsys)[0] == 2


def test_header_only_is_data_error(tmp_path, capsys):
    path = tmp_path / "h.csv"
    path.write_text("a,b,c\n")
    code, _, err = run(["run", "--input", path, "--x", "1", "--y", "2"], capsys)
    assert code == 3 and "n=0" in err


@pytest.mark.parametrize("body, where", [("1,2\n3,x\n", "row 2, column 2"),
                                         ("a,b\n1,2\n3\n", "row 3"),
                                         ("1,2\n3,inf\n", "row 2, column 2")])
def test_malformed_csv_names_location(tmp_path, capsys, body, where):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    code, _, err = run(["run", "--input", path, "--x", "1", "--y", "2"], capsys)
    assert code == 3 and where in err


def test_missing_file_is_data_error(tmp_path, capsys):
    assert run(["run", "--input", tmp_path / "nope.csv", "--x", "1", "--y", "2"], capsys)[0] == 3


def test_read_csv_header_detection(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("﻿x,y\n1.5,2\n\n3,4e-1\n")
    values, header = read_csv(p)
    assert header == ["x", "y"]
    np.testing.assert_array_equal(values, [[1.5, 2], [3, 0.4]])
    p.write_text("1,2\n3,4\n")
    assert read_csv(p)[1] is None
    with pytest.raises(DataError):
        p.write_text("")
        read_csv(p)


def test_parse_columns():
    assert parse_columns("1-3,7", "--x") == [0, 1, 2, 6]
    assert parse_columns(None, "--z") == []
    with pytest.raises(ConfigurationError):
        parse_columns("1-3,2", "--x")


def test_manifest_bh(small_csv, tmp_path, capsys):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"input": small_csv.name, "runs": [
        {"name": "a-c", "x": "1", "y": "3"}, {"name": "b-d", "x": "2", "y": "4"},
        {"name": "e-f", "x": "5", "y": "6"}]}))
    edges = tmp_path / "edges.csv"
    code, out, _ = run(["run", "--manifest", manifest, "--bh", 0.05, "--boot", 500,
                        "--edges", edges], capsys)
    assert code == 0
    res = json.loads(out)
    ps = [r["report"]["p_value"] for r in res["runs"]]
    assert res["n_rejected"] == sum(r["bh_reject"] for r in res["runs"])
    assert res["runs"][0]["bh_reject"] and not res["runs"][2]["bh_reject"]
    assert min(ps) == ps[0]
    rows = list(csv.DictReader(open(edges)))
    assert [r["name"] for r in rows] == [r["name"] for r in res["runs"] if r["bh_reject"]]


def test_bh_command(capsys, tmp_path):
    code, out, _ = run(["bh", "--q", 0.05, 0.001, 0.02, 0.04, 0.5], capsys)
    res = json.loads(out)
    assert code == 0 and res["reject"] == [True, True, False, False] and res["n_rejected"] == 2
    f = tmp_path / "p.txt"
    f.write_text("0.001\n0.02, 0.04\n0.5\n")
    assert json.loads(run(["bh", "--input", f], capsys)[1])["n_rejected"] == 2
    f.write_text("0.1 abc\n")
    assert run(["bh", "--input", f], capsys)[0] == 3
    assert run(["bh", 1.5], capsys)[0] == 3


def test_generate_and_bench(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert run(["generate", "--example", 7, "--n", 30, "--p", 4, "--m", 2, "--out", out],
               capsys)[0] == 0
    values, header = read_csv(out)
    assert values.shape == (30, 10) and header[-1] == "z2"
    table = tmp_path / "bench.csv"
    code, text, _ = run(["bench", "--example", 1, "--n", 50, "--p", 40, "--signal", "p/20",
                         "--reps", 3, "--boot", 200, "--multiplier", "rademacher,gaussian",
                         "--out", table], capsys)
    assert code == 0 and "rate_pct" in text.splitlines()[0]
    rows = list(csv.DictReader(open(table)))
    assert [r["multiplier"] for r in rows] == ["rademacher", "gaussian"]
    assert float(rows[0]["rate_pct"]) == 100.0


def test_bench_errors(capsys):
    assert run(["bench", "--example", 1, "--n", 50, "--p", 100, "--reps", 0], capsys)[0] == 2
    assert run(["bench", "--example", 6, "--n", 50, "--p", 10, "--m", 2], capsys)[0] == 2
    assert run(["bench", "--example", 1, "--n", 50, "--p", 100, "--signal", "lots"],
               capsys)[0] == 2


def test_argparse_errors_exit_2(capsys):
    assert run(["run", "--boot", "many"], capsys)[0] == 2
    assert run(["frobnicate"], capsys)[0] == 2
    assert run(["--help"], capsys)[0] == 0


def test_console_script(data_dir):
    proc = subprocess.run([sys.executable, "-m", "gausstest.cli", "run", "--input",
                           str(data_dir / "monotone_50.csv"), "--x", "1-2", "--y", "3-4",
                           "--boot", "2000", "--seed", "7"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["reject"] is True
