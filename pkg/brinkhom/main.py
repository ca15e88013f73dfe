import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from brinkhom import __version__
from brinkhom.cli.commands import execute
from brinkhom.config import settings
from brinkhom.core.exceptions import EXIT_CONFIG_ERROR
from brinkhom.core.runlog import configure_logging

logger = logging.getLogger(__name__)

EPS_SECTIONS = {
    "correctors": "correctors",
    "resistance": "resistance",
    "converge": "harness",
    "bogovskii": "bogovskii",
}


def parse_eps(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got '{text}'") from None
    if not values:
        raise argparse.ArgumentTypeError("empty eps list")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--eps", type=parse_eps, help="comma-separated eps values, decreasing")
    common.add_argument("--mode", choices=["stokes", "nse", "compressible", "brinkman"])
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("--quiet", action="store_true", help="warnings and errors only")
    noise.add_argument("--verbose", action="store_true", help="debug output")

    parser = argparse.ArgumentParser(
        prog="brinkhom",
        description="Homogenization of flows in critically perforated domains",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    cell = sub.add_parser("cell", parents=[common], help="exterior Stokes cell problem and drag")
    cell.add_argument("--shape", choices=["ball", "scaled_ball", "superellipsoid"])
    cell.add_argument("--R", type=float, dest="R", help="truncation radius")
    cell.add_argument("--h", type=float, dest="h", help="grid spacing near the obstacle")

    sub.add_parser("correctors", parents=[common], help="corrector norms and estimate rates")
    sub.add_parser("resistance", parents=[common], help="resistance matrix sweep")
    solve = sub.add_parser("solve", parents=[common], help="one perforated or Brinkman solve")
    solve.add_argument("--M", choices=["zero", "computed"], dest="M", help="Brinkman resistance")
    sub.add_parser("converge", parents=[common], help="convergence study towards the Brinkman limit")
    sub.add_parser("bogovskii", parents=[common], help="uniform bound of the discrete Bogovskii operator")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    out: dict[str, Any] = {}

    def put(section: str | None, key: str, value: Any) -> None:
        if value is None:
            return
        target = out if section is None else out.setdefault(section, {})
        target[key] = value

    put(None, "out", args.out)
    if args.quiet:
        put(None, "verbosity", "quiet")
    elif args.verbose:
        put(None, "verbosity", "verbose")
    put("solver", "mode", args.mode)
    if args.eps is not None:
        if args.command == "solve":
            put("solver", "eps", args.eps[0])
        elif args.command in EPS_SECTIONS:
            put(EPS_SECTIONS[args.command], "eps", args.eps)
    put("geometry", "shape", getattr(args, "shape", None))
    put("cell", "R", getattr(args, "R", None))
    put("cell", "h", getattr(args, "h", None))
    put("solver", "M", getattr(args, "M", None))
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG_ERROR if e.code else 0

    level = "WARNING" if args.quiet else "DEBUG" if args.verbose else settings.log_level
    configure_logging(level)
    return execute(args.command, args.config, overrides_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
