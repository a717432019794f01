import csv
import json

import pytest

from sketchlab import ConfigError
from sketchlab.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main, parse_config
from sketchlab.experiments import EXPERIMENTS
from sketchlab.report import format_value, write_csv


def write_json(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_minimal_bandit_config_valid(tmp_path):
    f = write_json(tmp_path, {"experiment": "bandit", "d": 500, "K": 4, "T": 10000, "b": 50, "s": 50})
    cfg = parse_config(None, f)
    assert cfg.experiment == "bandit"
    assert (cfg.params["d"], cfg.params["K"], cfg.params["T"], cfg.params["b"], cfg.params["s"]) == \
        (500, 4, 10000, 50, 50)


def test_unknown_key_named(tmp_path, capsys):
    f = write_json(tmp_path, {"experiment": "bandit", "foo": 1})
    with pytest.raises(ConfigError) as exc:
        parse_config(None, f)
    assert exc.value.key == "foo" and "foo" in str(exc.value)
    assert main(["bandit", "--config", f]) == EXIT_CONFIG
    assert "foo" in capsys.readouterr().err


def test_type_mismatch_and_missing(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config("bandit", overrides={"T": "many"})
    assert exc.value.key == "T"
    with pytest.raises(ConfigError):
        parse_config("bandit", overrides={"T": 2.5})
    with pytest.raises(ConfigError):
        parse_config(None, write_json(tmp_path, {"T": 5}))
    with pytest.raises(ConfigError):
        parse_config("bandit", str(tmp_path / "missing.json"))
    with pytest.raises(ConfigError):
        parse_config("bandit", overrides={"trials": 0})
    with pytest.raises(ConfigError):
        parse_config("jlt", write_json(tmp_path, {"experiment": "inner"}))


def test_flags_override_file(tmp_path):
    f = write_json(tmp_path, {"experiment": "jlt", "seed": 3, "eps": 0.5})
    out = tmp_path / "out"
    code = main(["jlt", "--config", f, "--seed", "17", "--trials", "2", "--d", "64", "--N", "8",
                 "--eps=0.4", "--out", str(out)])
    assert code == EXIT_OK
    echo = json.loads((out / "config.echo.json").read_text())
    assert echo["seed"] == 17 and echo["eps"] == 0.4 and echo["d"] == 64


def test_bool_coercion():
    assert parse_config("fedsim", overrides={"shared_sketch": "yes"}).params["shared_sketch"] is True
    assert parse_config("fedsim", overrides={"shared_sketch": "0"}).params["shared_sketch"] is False
    with pytest.raises(ConfigError):
        parse_config("fedsim", overrides={"shared_sketch": "maybe"})


def test_argparse_errors_are_config_errors(capsys):
    assert main(["nosuch"]) == EXIT_CONFIG
    assert main(["jlt", "--seed", "x"]) == EXIT_CONFIG
    assert main(["jlt", "stray"]) == EXIT_CONFIG
    capsys.readouterr()


def test_registry_names():
    assert set(EXPERIMENTS) == {"deviation", "scaling", "jlt", "inner", "regress", "bandit", "fedsim", "calibrate"}


def test_scaling_csv_and_slope(tmp_path):
    out = tmp_path / "s"
    assert main(["scaling", "--t-max", "8", "--trials", "40", "--out", str(out), "--threads", "1"]) == EXIT_OK
    rows = read_rows(out / "results.csv")
    assert {"T", "trial", "deviation"} <= set(rows[0])
    samples = [r for r in rows if r["kind"] == "sample"]
    assert sorted({int(r["T"]) for r in samples}) == [1, 2, 4, 8]
    assert len(samples) == 4 * 40
    slope_rows = [r for r in rows if r["kind"] == "slope"]
    assert len(slope_rows) == 1 and float(slope_rows[0]["slope"]) > 0
    assert (out / "scaling.svg").read_text().startswith("<svg")


@pytest.mark.parametrize("exp,args", [
    ("scaling", ["--t-max", "4", "--trials", "30"]),
    ("deviation", ["--trials", "50", "--n-mc", "200"]),
    ("bandit", ["--d", "20", "--s", "5", "--b", "6", "--T", "120", "--trials", "2", "--record-every", "10"]),
    ("fedsim", ["--d", "16", "--b", "8", "--T", "60", "--trials", "3"]),
])
def test_byte_identical_across_runs_and_threads(tmp_path, exp, args):
    outs = []
    for i, threads in enumerate(("1", "1", "3")):
        out = tmp_path / f"{exp}{i}"
        assert main([exp, *args, "--seed", "5", "--threads", threads, "--out", str(out)]) == EXIT_OK
        outs.append((out / "results.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_bandit_svg_has_four_curves(tmp_path):
    out = tmp_path / "b"
    assert main(["bandit", "--d", "20", "--s", "5", "--b", "6", "--T", "60", "--trials", "1",
                 "--record-every", "10", "--out", str(out)]) == EXIT_OK
    svg = (out / "regret.svg").read_text()
    for name in ("LinUCB", "sk-LinUCB", "LinTS", "sk-LinTS"):
        assert name in svg
    assert (out / "timing.csv").exists()


def test_numeric_failure_exit_code(tmp_path, capsys):
    # fewer samples than sketch rows: singular sketched Gram matrix
    assert main(["regress", "--n", "8", "--trials", "1", "--out", str(tmp_path)]) == EXIT_NUMERIC
    assert "regress" in capsys.readouterr().err


def test_check_failure_exit_code(tmp_path, capsys):
    args = ["jlt", "--trials", "3", "--d", "64", "--N", "8", "--c", "0.01", "--out", str(tmp_path)]
    assert main(args + ["--check"]) == EXIT_CHECK
    assert main(args) == EXIT_OK
    assert "FAIL pass_rate" in capsys.readouterr().out


def test_write_csv_conventions(tmp_path):
    p = write_csv([], tmp_path / "empty.csv", ["a", "b"])
    assert p.read_text() == "a,b\n"
    p = write_csv([{"a": "x,y", "b": float("nan")}, {"a": 0.1}], tmp_path / "q.csv", ["a", "b"])
    assert p.read_text() == 'a,b\n"x,y",NaN\n0.10000000000000001,\n'
    with pytest.raises(ValueError):
        write_csv([{"c": 1}], tmp_path / "bad.csv", ["a"])
    with pytest.raises(OSError):
        write_csv([], tmp_path / "no" / "dir.csv", ["a"])


def test_float_round_trip():
    for v in (0.1, 1 / 3, 2.0 ** -1074, 1e300, -0.0):
        assert float(format_value(v)) == v
    assert format_value(True) == "true" and format_value(None) == ""
