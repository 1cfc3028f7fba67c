"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical-validity
diagnostics raised while ``--strict`` is set.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import NliJsfError
from .runner import COMMANDS, run_config

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_STRICT = 3

log = logging.getLogger("nlijsf")

_HELP = {
    "jsf": "build the JSF grid and marginals",
    "schmidt": "JSF plus Schmidt decomposition (summary JSON and mode dumps)",
    "metrics": "JSF plus filtered metrics report",
    "highgain": "high-gain Green functions over the gain ladder",
    "scan": "sweep filter bandwidth, gain or stage count",
    "design": "closed-form design calculators (JSON)",
    "run": "full pipeline as configured",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlijsf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("config", type=Path, help="scenario or suite config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--grid", type=int, default=None, metavar="N",
                       help="override the grid size (N x N)")
        p.add_argument("--format", choices=("csv", "bin"), default=None, help="grid file format")
        p.add_argument("--strict", action="store_true",
                       help="exit with status 3 if any numerical diagnostic is raised")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "scan":
            p.add_argument("--parameter", choices=("filter_bandwidth", "gain", "stage_count"),
                           default=None, help="override scan.parameter")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        manifest = run_config(args.config, args.command, args.out, args.grid, args.format,
                              getattr(args, "parameter", None))
    except NliJsfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for diag in manifest["diagnostics"]:
        log.warning("%s: %s", diag["code"], diag["message"])
    log.info("wrote %d files to %s", len(manifest["files"]), args.out)
    if args.strict and manifest["diagnostics"]:
        return EXIT_STRICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
