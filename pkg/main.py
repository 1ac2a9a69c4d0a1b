import argparse
import logging
import sys

import config
from commands.bench import BenchCommand
from commands.commands import GenerateCommand, NetworkCommand, SolveCommand
from errors import AnnealedMapError

COMMANDS = [SolveCommand, GenerateCommand, BenchCommand, NetworkCommand]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for progress, -vv for every sweep"
    )
    parser = argparse.ArgumentParser(
        prog="amap", description="MAP inference in Bayesian networks by simulated annealing"
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for command in COMMANDS:
        command.register(subparsers, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=config.log_level(args.verbose),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.command.start(args)
    except (AnnealedMapError, OSError, ValueError) as ex:
        print(f"amap: error: {ex}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
