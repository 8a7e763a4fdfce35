"""Command-line entry point.

    cutofflab run --config cfg.json [--out DIR] [--workers N]
    cutofflab list-experiments
    cutofflab validate --config cfg.json

``CUTOFFLAB_WORKERS`` sets the default worker count.  ``run`` exits 0 iff
every pass/fail criterion declared in the config is met.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import list_experiments, load_config, run_experiment, validate_config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cutofflab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--out", type=Path, default=None,
                       help="output directory (default: config's out_dir or '.')")
    p_run.add_argument("--workers", type=int, default=None)

    sub.add_parser("list-experiments", help="show the experiment registry")

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("--config", required=True, type=Path)

    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for name, desc, required in list_experiments():
            print(f"{name}\n    {desc}\n    required params: {', '.join(required)}")
        return 0

    if args.command == "validate":
        problems = validate_config(args.config)
        if problems:
            for prob in problems:
                print(f"violation: {prob}")
            return 1
        print("config valid")
        return 0

    if args.command == "run":
        cfg = load_config(args.config)
        out = args.out
        if out is None:
            raw = json.loads(Path(args.config).read_text())
            out = Path(raw.get("out_dir", "."))
        report = run_experiment(cfg, out_dir=out, workers=args.workers)
        summary = report.summary
        print(f"experiment: {summary['experiment']}")
        print(f"config_hash: {summary['config_hash']}")
        print(f"pass: {summary['pass']}")
        print(f"wall_clock_seconds: {summary['wall_clock_seconds']:.3f}")
        print(f"results: {Path(out) / 'results.csv'}")
        return 0 if summary["pass"] else 2

    return 1  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
