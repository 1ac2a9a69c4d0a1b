import argparse
import logging
from pathlib import Path

import numpy as np

from annealing import annealed_map
from commands.command import ORACLE_CAP_HELP, Command
from formats import serialize_network, serialize_problem, write_trace
from generators import bipartite_network, generate_problem, random_network
from models import Algorithm, BayesianNetwork, MapProblem, SolveReport
from search import brute_force_map, hill_climb_map

logger = logging.getLogger(__name__)


def solve(
    algorithm: Algorithm,
    net: BayesianNetwork,
    problem: MapProblem,
    args: argparse.Namespace,
    rng: np.random.Generator,
) -> SolveReport:
    match algorithm:
        case Algorithm.anneal:
            return annealed_map(
                net,
                problem,
                schedule=Command.schedule_from(args),
                rng=rng,
                restarts=args.restarts,
                debug=getattr(args, "debug", False),
            )
        case Algorithm.oracle:
            return brute_force_map(net, problem)
        case Algorithm.hillclimb:
            return hill_climb_map(net, problem, rng)


class SolveCommand(Command):
    name = "solve"
    help = "find the MAP configuration of one problem"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--net", type=Path, required=True)
        parser.add_argument("--problem", type=Path, required=True)
        parser.add_argument(
            "--algo",
            type=Algorithm,
            choices=list(Algorithm),
            default=Algorithm.anneal,
            help=ORACLE_CAP_HELP,
        )
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--trace", type=Path, help="write the per-sweep trace as CSV")
        parser.add_argument(
            "--debug",
            action="store_true",
            help="check the tracked probability against exact inference every sweep",
        )
        cls.add_schedule_arguments(parser)

    @classmethod
    def start(cls, args: argparse.Namespace) -> int:
        net = cls.load_network(args.net)
        problem = cls.load_problem(args.problem, net)
        report = solve(args.algo, net, problem, args, np.random.default_rng(args.seed))

        print(f"network: {net.name}")
        print(f"algorithm: {report.algorithm}")
        for variable in problem.map_vars:
            print(report.best.describe(net, (variable,)))
        print(f"probability: {report.prob:.10g}")
        print(f"log10 probability: {report.log10_prob:.10g}")
        print(f"sweeps: {report.sweeps}")
        print(f"reheats: {report.reheats}")

        if args.trace is not None:
            cls.write_text(args.trace, write_trace(report.trace))
            logger.info("wrote %d trace rows to %s", len(report.trace), args.trace)
        return 0


class GenerateCommand(Command):
    name = "gen"
    help = "draw a random MAP problem: MAP among roots, evidence on leaves"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--net", type=Path, required=True)
        parser.add_argument("--map-count", type=int, default=20)
        parser.add_argument("--evid-count", type=int, default=20)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("-o", "--output", type=Path, required=True)

    @classmethod
    def start(cls, args: argparse.Namespace) -> int:
        net = cls.load_network(args.net)
        problem = generate_problem(
            net, args.map_count, args.evid_count, np.random.default_rng(args.seed)
        )
        cls.write_text(args.output, serialize_problem(problem, net))
        print(f"wrote {args.output}: {len(problem.map_vars)} MAP, {len(problem.evidence)} evidence")
        return 0


class NetworkCommand(Command):
    name = "net"
    help = "write a random benchmark network"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        shape = parser.add_mutually_exclusive_group(required=True)
        shape.add_argument("--vars", type=int, help="random DAG with this many variables")
        shape.add_argument(
            "--bipartite",
            type=int,
            nargs=2,
            metavar=("ROOTS", "LEAVES"),
            help="sparse two-layer binary network",
        )
        parser.add_argument("--max-parents", type=int, default=2)
        parser.add_argument("--min-states", type=int, default=2)
        parser.add_argument("--max-states", type=int, default=3)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--name", default=None)
        parser.add_argument("-o", "--output", type=Path, required=True)

    @classmethod
    def start(cls, args: argparse.Namespace) -> int:
        rng = np.random.default_rng(args.seed)
        if args.bipartite is not None:
            roots, leaves = args.bipartite
            net = bipartite_network(roots, leaves, rng, name=args.name or "bipartite")
        else:
            net = random_network(
                args.vars,
                rng,
                max_parents=args.max_parents,
                min_states=args.min_states,
                max_states=args.max_states,
                name=args.name or "random",
            )
        cls.write_text(args.output, serialize_network(net))
        print(f"wrote {args.output}: {len(net.variables)} variables")
        return 0
