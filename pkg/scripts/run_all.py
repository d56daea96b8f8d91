"""Run every registered experiment with its shipped config and print a summary table.

    python3 scripts/run_all.py --out runs/ --seed 0 [--quick] [--threads N]
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from rtlab.cli import resolve_threads
from rtlab.experiments import ExperimentSpec, list_experiments, rows_to_csv, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="use configs/quick (smoke-test sizes)")
    ap.add_argument("--only", nargs="*", help="subset of experiment names")
    args = ap.parse_args()
    cfg_dir = CONFIGS / "quick" if args.quick else CONFIGS
    threads = resolve_threads(args.threads)
    rows = []
    for name in args.only or list_experiments():
        params = json.loads((cfg_dir / f"{name}.json").read_text())
        rep = run(ExperimentSpec(name, params, args.seed, str(Path(args.out) / name), threads))
        counts = {s: sum(v.status == s for v in rep.verdicts) for s in ("pass", "fail", "informative")}
        rows.append({"experiment": name, "status": rep.status, **counts,
                     "seconds": round(rep.wall_clock_s, 2)})
        print(f"{name:20s} {rep.status:12s} {rep.wall_clock_s:7.1f} s", flush=True)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "summary.csv").write_text(rows_to_csv(rows))
    return 1 if any(r["status"] == "fail" for r in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
