"""Command-line entry point: run named experiments, validate configurations,
and list what is available.

Exit codes: 0 success, 2 usage error, 3 configuration error, 4 runtime error.
The CHANSIM_THREADS environment variable caps internal Monte Carlo workers.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    UsageError,
    default_config_path,
    run_experiment,
)
from .geometry import GeometryError
from .scenario import ConfigError, validate_config

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4


def _parse_overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chansim",
        description="Stochastic electromagnetic channel simulator and "
                    "capacity analyzer.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named experiment")
    run.add_argument("--experiment", required=True, metavar="NAME")
    run.add_argument("--config", metavar="PATH",
                     help="scenario file (defaults to a packaged one)")
    run.add_argument("--out", required=True, metavar="DIR")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--set", dest="overrides", action="append",
                     metavar="section.key=value",
                     help="override one resolved configuration value")

    val = sub.add_parser("validate", help="resolve and echo a configuration")
    val.add_argument("--config", required=True, metavar="PATH")
    val.add_argument("--set", dest="overrides", action="append",
                     metavar="section.key=value")

    sub.add_parser("list", help="list available experiments")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    try:
        if args.command == "list":
            for name in sorted(EXPERIMENTS):
                print(name)
            return EXIT_OK

        if args.command == "validate":
            report = validate_config(args.config, _parse_overrides(args.overrides))
            for key in sorted(report):
                print(f"{key} = {report[key]}")
            return EXIT_OK

        # run
        overrides = _parse_overrides(args.overrides)
        config = args.config
        if config is None:
            config = default_config_path(args.experiment)
        elif not Path(config).exists():
            raise ConfigError(f"configuration file not found: {config}")
        spec = ExperimentSpec(args.experiment, config, args.out,
                              seed=args.seed, overrides=overrides)
        written = run_experiment(spec)
        for path in written:
            print(path)
        return EXIT_OK

    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, GeometryError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures map to a dedicated code
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
