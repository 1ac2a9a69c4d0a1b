import argparse
from pathlib import Path

import config
from errors import ParseError
from formats import parse_network, parse_problem
from models import AnnealSchedule, BayesianNetwork, MapProblem

ORACLE_CAP_HELP = (
    "the oracle refuses a problem when its pruned components together hold more than "
    f"{config.ORACLE_CAP_ENV} MAP configurations (the per-component counts are summed, "
    f"default {config.DEFAULT_ORACLE_CAP})"
)


class InputFileError(ParseError):
    def __init__(self, path: Path, error: ParseError) -> None:
        super().__init__(error.line, error.column, error.message)
        self.path = path
        self.args = (f"{path}:{error.line}:{error.column}: {error.message}",)


class Command:
    name: str
    help: str

    @classmethod
    def register(
        cls, subparsers: argparse._SubParsersAction, parents: list[argparse.ArgumentParser]
    ) -> argparse.ArgumentParser:
        parser = subparsers.add_parser(cls.name, help=cls.help, parents=parents)
        cls.add_arguments(parser)
        parser.set_defaults(command=cls)
        return parser

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        raise NotImplementedError()

    @classmethod
    def start(cls, args: argparse.Namespace) -> int:
        raise NotImplementedError()

    @staticmethod
    def load_network(path: Path) -> BayesianNetwork:
        try:
            return parse_network(Path(path).read_text(encoding="utf-8"))
        except ParseError as ex:
            raise InputFileError(path, ex) from ex

    @staticmethod
    def load_problem(path: Path, net: BayesianNetwork) -> MapProblem:
        try:
            return parse_problem(Path(path).read_text(encoding="utf-8"), net)
        except ParseError as ex:
            raise InputFileError(path, ex) from ex

    @staticmethod
    def write_text(path: Path, text: str) -> None:
        Path(path).write_text(text, encoding="utf-8")

    @staticmethod
    def add_schedule_arguments(parser: argparse.ArgumentParser) -> None:
        group = parser.add_argument_group("annealing schedule")
        group.add_argument("--t0", type=float, default=config.DEFAULT_T0)
        group.add_argument("--alpha", type=float, default=config.DEFAULT_ALPHA)
        group.add_argument("--k", type=float, default=config.DEFAULT_K)
        group.add_argument("--wait", type=int, default=config.DEFAULT_WAIT)
        group.add_argument("--stop", type=int, default=config.DEFAULT_STOP)
        group.add_argument("--restarts", type=int, default=config.DEFAULT_RESTARTS)

    @staticmethod
    def schedule_from(args: argparse.Namespace) -> AnnealSchedule:
        return AnnealSchedule(
            t0=args.t0, alpha=args.alpha, k=args.k, wait=args.wait, stop=args.stop
        )
