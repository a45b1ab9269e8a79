"""Command-line interface: plan, bench, render, make-maps.

Scenario arguments accept either a file path or ``bundled:<name>`` for the
packaged scenarios. Log verbosity comes from the RRFOREST_LOG environment
variable (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .cspace import ContractError, SpaceExhaustedError
from .harness import InvalidScenarioError, cmd_bench, cmd_plan
from .maps import bundled_scenario_path, write_bundled_maps
from .render import cmd_render

log = logging.getLogger("rrforest")


def _resolve_scenario(arg: str) -> Path:
    if arg.startswith("bundled:"):
        return bundled_scenario_path(arg.split(":", 1)[1])
    return Path(arg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrforest",
        description="Multi-tree sampling-based motion planning benchmark CLI",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="run a scenario once and write the path")
    p_plan.add_argument("scenario", help="scenario JSON path or bundled:<name>")
    p_plan.add_argument("--out", default="out", help="output directory")

    p_bench = sub.add_parser("bench", help="run the full repeat/seed schedule")
    p_bench.add_argument("scenario", help="scenario JSON path or bundled:<name>")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--out", default="out", help="output directory")

    p_render = sub.add_parser("render", help="render a forest dump to SVG")
    p_render.add_argument("dump", help="forest dump written by `plan`")
    p_render.add_argument("scenario", help="scenario JSON path or bundled:<name>")
    p_render.add_argument("--out", required=True, help="output SVG file")

    p_maps = sub.add_parser("make-maps", help="write the bundled maps as PGM files")
    p_maps.add_argument("--out", default="maps", help="output directory")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("RRFOREST_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return cmd_plan(_resolve_scenario(args.scenario), args.out)
        if args.command == "bench":
            return cmd_bench(_resolve_scenario(args.scenario), args.out, args.workers)
        if args.command == "render":
            return cmd_render(args.dump, _resolve_scenario(args.scenario), args.out)
        if args.command == "make-maps":
            for path in write_bundled_maps(args.out):
                print(f"wrote {path}")
            return 0
    except (InvalidScenarioError, ContractError, SpaceExhaustedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
