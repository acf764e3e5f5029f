"""Command line entry point: ``csbcsim run|preset|list-presets``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError
from .correlation import CalibrationError
from .presets import PRESETS, get_preset, list_presets
from .scenario import parse_scenario, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csbcsim", description="Weak-coherent-state bi-partite correlation bench")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario YAML file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None, help="output directory (default: out/<name>)")
    pre = sub.add_parser("preset", help="run a bundled preset")
    pre.add_argument("name", choices=sorted(PRESETS))
    pre.add_argument("--seed", type=int, default=None)
    pre.add_argument("--out", type=Path, default=None)
    sub.add_parser("list-presets", help="list bundled presets")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    if args.command == "list-presets":
        for name, desc in list_presets():
            print(f"{name:16s} {desc}")
        return EXIT_OK
    try:
        if args.command == "run":
            from .scenario import load_scenario

            scenario = load_scenario(args.config)
        else:
            scenario = parse_scenario(get_preset(args.name, args.seed))
        out = args.out or Path("out") / scenario.name
        run_scenario(scenario, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CalibrationError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
