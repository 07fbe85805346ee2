"""Command-line interface: one subcommand per experiment.

Configuration can come from a strict JSON document (--config) with flags
overriding individual fields, or entirely from flags for simple runs. The
subcommand is authoritative: a config whose "experiment" field disagrees is
rejected. Exit codes: 0 success, 1 configuration error, 2 violated
invariant.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional

from .errors import ConfigError
from .harness import EXPERIMENTS, ORACLE_SUITES, ExperimentConfig, run

_GROUP_HELP = (
    "group shorthand: cyclic:<n>[:pm1|complete|g1,g2,...], hypercube:<k>, "
    "dihedral:<k>, file:<path>"
)


def parse_group_shorthand(text: str) -> dict:
    parts = text.split(":")
    family = parts[0]
    try:
        if family == "cyclic":
            if len(parts) not in (2, 3):
                raise ConfigError(f"bad cyclic spec {text!r}; {_GROUP_HELP}")
            spec = {"family": "cyclic", "n": int(parts[1])}
            if len(parts) == 3:
                token = parts[2]
                if token in ("pm1", "complete"):
                    spec["gens"] = token
                else:
                    spec["gens"] = [int(x) for x in token.split(",")]
            return spec
        if family in ("hypercube", "dihedral"):
            if len(parts) != 2:
                raise ConfigError(f"bad {family} spec {text!r}; {_GROUP_HELP}")
            return {"family": family, "k": int(parts[1])}
        if family == "file":
            if len(parts) < 2:
                raise ConfigError(f"bad file spec {text!r}; {_GROUP_HELP}")
            return {"family": "file", "path": ":".join(parts[1:])}
    except ValueError as exc:
        raise ConfigError(f"bad group spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown group family {family!r}; {_GROUP_HELP}")


class _Parser(argparse.ArgumentParser):
    """Maps command-line usage errors to the config-error exit code."""

    def error(self, message):
        raise ConfigError(message)


_EXPERIMENT_HELP = {
    "gap": "spectrum and gap of the pair-walk kernels on a Cayley graph",
    "compare": "detailed balance and Dirichlet-form comparison of the rescaled kernel",
    "s-recursion": "Monte Carlo check of the one-step autocorrelation-vector recursion",
    "contract-simplex": "L2 contraction of proportionally coupled simplex chains",
    "contract-matrix": "per-step L2 contraction ratio of coupled matrix chains",
    "identity-matrix": "exact pairwise-gap identity on random matrix states",
    "couple-simplex": "two-phase non-Markovian coupling on a Cayley simplex chain",
    "couple-matrix": "two-phase non-Markovian coupling on the matrix chain",
    "connect": "connection-time tails of random update schedules",
    "largeness": "boundary margins of stationary trajectories over a window",
    "lowerbound-simplex": "eigenvector-statistic decay and TV lower bound",
    "lowerbound-matrix": "coupon-collector miss probability lower bound",
    "oracle": "exact brute-force oracle suites for test fixtures",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gibbsmix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=_EXPERIMENT_HELP[name])
        sp.add_argument("--config", help="path to a strict JSON config")
        sp.add_argument("--seed", type=int, help="base seed (64-bit)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=["csv", "jsonl"], help="tabular artifact format")
        sp.add_argument("--replicas", type=int, help="replica / sample count")
        sp.add_argument("--group", help=_GROUP_HELP)
        sp.add_argument("--n", type=int, help="matrix-chain size")
        sp.add_argument("--T", type=int, help="horizon / window length")
        sp.add_argument("--T1", type=int, help="phase-1 horizon")
        sp.add_argument("--T2", type=int, help="phase-2 horizon")
        sp.add_argument("--suite", choices=ORACLE_SUITES, help="oracle suite name")
        sp.add_argument(
            "--threshold", action="append", default=[], metavar="KEY=VALUE",
            help="named constant (epsilon, C, a, b, f, k, d, c); repeatable",
        )
    return parser


def _build_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json_file(args.config)
        if config.experiment != args.experiment:
            raise ConfigError(
                f"config declares experiment {config.experiment!r} but the "
                f"subcommand is {args.experiment!r}"
            )
    else:
        config = ExperimentConfig(experiment=args.experiment)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.replicas is not None:
        updates["replicas"] = args.replicas
    if args.group is not None:
        updates["group"] = parse_group_shorthand(args.group)
    if args.n is not None:
        updates["n"] = args.n
    for name in ("T", "T1", "T2"):
        value = getattr(args, name)
        if value is not None:
            updates[name] = value
    if args.suite is not None:
        updates["suite"] = args.suite
    if args.threshold:
        thresholds = dict(config.thresholds)
        for item in args.threshold:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--threshold expects KEY=VALUE, got {item!r}")
            try:
                thresholds[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"threshold {key} value {value!r} is not a number") from exc
        updates["thresholds"] = thresholds
    return replace(config, **updates) if updates else config


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(config, out_dir=args.out, fmt=args.format)


if __name__ == "__main__":
    sys.exit(main())
