"""Command-line experiment runner.

    sketchlab <experiment> [--config FILE] [--seed N] [--trials N]
                           [--threads N] [--out DIR] [--check] [--key value ...]

Configuration is a flat JSON object; command-line flags override the file.
Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 acceptance-threshold failure under ``--check``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import calibration
from .errors import ConfigError, NumericFailureError
from .experiments import EXPERIMENTS, ExperimentConfig, ExperimentResult
from .report import line_chart, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
_TOP = {"seed": 0, "trials": None, "threads": None, "out_dir": "results"}


def _coerce(key: str, value, default):
    """Convert ``value`` to the type of ``default``; strings are parsed."""
    kind = type(default)
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "1", "yes"):
                return True
            if isinstance(value, str) and value.lower() in ("false", "0", "no"):
                return False
            raise ValueError
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind is str:
            if not isinstance(value, (str, int, float)):
                raise ValueError
            return str(value)
    except (TypeError, ValueError):
        pass
    else:
        return value
    raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}", key)


def parse_config(experiment: str | None, file: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Resolve defaults, then the config file, then ``overrides``."""
    raw: dict = {}
    if file is not None:
        path = Path(file)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}", "config")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})", "config") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object", "config")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    name = raw.pop("experiment", None) or experiment
    if experiment is not None and name != experiment:
        raise ConfigError(f"experiment: file says {name!r}, command says {experiment!r}", "experiment")
    if name is None:
        raise ConfigError("experiment: missing", "experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown experiment {name!r}", "experiment")
    spec = EXPERIMENTS[name]
    for k in raw:
        if k not in _TOP and k not in spec.defaults:
            raise ConfigError(f"{k}: unknown key for experiment {name!r}", k)
    seed = _coerce("seed", raw.get("seed", 0), 0)
    trials = _coerce("trials", raw.get("trials", spec.trials), 0)
    threads = _coerce("threads", raw.get("threads", os.cpu_count() or 1), 0)
    out_dir = _coerce("out_dir", raw.get("out_dir", _TOP["out_dir"]), "")
    if trials < 1:
        raise ConfigError("trials: must be at least 1", "trials")
    if threads < 1:
        raise ConfigError("threads: must be at least 1", "threads")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed: must be a 64-bit unsigned integer", "seed")
    params = {k: _coerce(k, raw.get(k, d), d) for k, d in spec.defaults.items()}
    return ExperimentConfig(name, seed, trials, threads, out_dir, params)


def write_outputs(cfg: ExperimentConfig, res: ExperimentResult) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(res.rows, out / "results.csv", res.columns)
    for name, (rows, cols) in res.extra_csv.items():
        write_csv(rows, out / name, cols)
    for name, obj in res.extra_json.items():
        calibration.write_constants(obj, out / name)
    for name, kw in res.charts:
        line_chart(out / name, **kw)
    (out / "config.echo.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run and write all artifacts; inner errors gain the experiment name."""
    try:
        res = EXPERIMENTS[cfg.experiment].runner(cfg)
    except NumericFailureError as exc:
        raise NumericFailureError(f"{cfg.experiment}: {exc}", exc.last_iterate) from exc
    write_outputs(cfg, res)
    return res


def _extra_pairs(tokens: list[str]) -> dict:
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"{tok}: expected --key value", tok)
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"{key}: missing value", key)
            val = tokens[i + 1]
            i += 2
        out[key] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sketchlab", description="Run sketching experiments.",
                                 allow_abbrev=False)
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--config", help="flat JSON config file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out", dest="out_dir")
    ap.add_argument("--check", action="store_true", help="exit 4 if any acceptance check fails")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args, rest = ap.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        overrides = _extra_pairs(rest)
        overrides.update(seed=args.seed, trials=args.trials, threads=args.threads, out_dir=args.out_dir)
        cfg = parse_config(args.experiment, args.config, overrides)
        cfg.check = args.check
        res = run_experiment(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(res.summary, sort_keys=True, default=float))
    for name, ok in res.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if args.check and not all(res.checks.values()):
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
