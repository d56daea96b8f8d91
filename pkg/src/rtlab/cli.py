"""Command line entry point: ``rtlab <experiment> --config f.json --seed S --out DIR``.

``rtlab list`` prints the registry; ``rtlab validate <experiment> --config f.json``
checks a config without running it. Exit status is 0 iff no verdict is ``fail``;
usage and config errors exit with 2.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import (REGISTRY, ConfigError, ExperimentSpec, UsageError, describe,
                          list_experiments, run, validate)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rtlab", description="Run a named numerical experiment.")
    ap.add_argument("experiment", help="experiment name, or 'list' / 'validate'")
    ap.add_argument("target", nargs="?", help="experiment to check (with 'validate')")
    ap.add_argument("--config", help="JSON file with experiment parameters")
    ap.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    ap.add_argument("--out", help="output directory for report.json and cells.csv")
    ap.add_argument("--kernel", help="catalog kernel for experiments that take one")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for cells")
    ap.add_argument("--json", action="store_true", help="machine-readable 'list' output")
    return ap


def _load(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def resolve_threads(flag: int, env: dict | None = None) -> int:
    env = os.environ if env is None else env
    raw = env.get("RTLAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"RTLAB_THREADS must be an integer, got {raw!r}")
    return max(1, flag)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.experiment == "list":
            if args.json:
                print(json.dumps(describe(), indent=2))
            else:
                for name in list_experiments():
                    print(f"{name:20s} {REGISTRY[name].claim}")
            return 0
        if args.experiment == "validate":
            if not args.target:
                raise UsageError("usage: rtlab validate <experiment> --config FILE")
            params = validate(args.target, _load(args.config))
            print(json.dumps({"experiment": args.target, "valid": True, "params": params}))
            return 0
        params = _load(args.config)
        if args.kernel is not None:
            if args.experiment in REGISTRY and not REGISTRY[args.experiment].kernel_param:
                raise UsageError(f"{args.experiment} does not take --kernel")
            params = dict(params, kernel=args.kernel)
        spec = ExperimentSpec(args.experiment, params, args.seed, args.out,
                              resolve_threads(args.threads))
        report = run(spec)
    except (UsageError, ConfigError) as e:
        print(f"rtlab: {e}", file=sys.stderr)
        return 2
    for v in report.verdicts:
        print(f"{v.status:12s} {v.check}: {v.detail}")
    print(f"{report.name}: {report.status} ({report.wall_clock_s:.1f} s)")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
