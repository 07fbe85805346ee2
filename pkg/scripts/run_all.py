#!/usr/bin/env python3
"""Run every example experiment config in scripts/configs.

Each run writes its artifacts (manifest plus result tables) under
``results/<experiment>/``.  The configs are sized for a quick desk run of the
full pipeline; raise `replicas` or the horizon fields for tighter estimates.

Usage:
    python3 scripts/run_all.py [--out DIR] [--format {csv,jsonl}] [--only NAME ...]
"""

import argparse
import sys
import time
from pathlib import Path

from gibbsmix.harness import ExperimentConfig, run

CONFIG_DIR = Path(__file__).resolve().parent / "configs"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", help="output root directory")
    parser.add_argument("--format", choices=("csv", "jsonl"), default=None)
    parser.add_argument(
        "--only", nargs="*", default=None,
        help="experiment names to run (default: every config file)",
    )
    args = parser.parse_args(argv)

    paths = sorted(CONFIG_DIR.glob("*.json"))
    if args.only:
        wanted = set(args.only)
        paths = [p for p in paths if p.stem in wanted]
        missing = wanted - {p.stem for p in paths}
        if missing:
            parser.error(f"no config for: {', '.join(sorted(missing))}")

    worst = 0
    for path in paths:
        config = ExperimentConfig.from_json_file(path)
        out_dir = Path(args.out) / config.experiment
        started = time.monotonic()
        code = run(config, out_dir=out_dir, fmt=args.format)
        elapsed = time.monotonic() - started
        status = "ok" if code == 0 else f"exit {code}"
        print(f"[{status}] {config.experiment:<20} {elapsed:6.1f}s -> {out_dir}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
