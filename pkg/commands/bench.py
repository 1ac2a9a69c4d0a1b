import argparse
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
import logging
import math
from pathlib import Path
from statistics import fmean
import time

import numpy as np
import psutil

import config
from annealing import annealed_map
from commands.command import ORACLE_CAP_HELP, Command
from decorators import timed
from errors import OracleCapError
from formats import write_report
from generators import derive_seed, generate_problem
from models import (
    Algorithm,
    BayesianNetwork,
    BenchConfig,
    MapProblem,
    ReportRow,
    SolveReport,
)
from search import brute_force_map, hill_climb_map

logger = logging.getLogger(__name__)

MATCH_TOLERANCE = 1e-9


def _matches(report: SolveReport, oracle: SolveReport) -> bool:
    return report.best == oracle.best or abs(report.logp - oracle.logp) <= MATCH_TOLERANCE


def _run(
    algorithm: Algorithm,
    net: BayesianNetwork,
    problem: MapProblem,
    bench: BenchConfig,
    seed: int,
) -> tuple[SolveReport, float]:
    rng = np.random.default_rng(seed)
    match algorithm:
        case Algorithm.anneal:
            return timed(annealed_map)(net, problem, bench.schedule, rng, bench.restarts)
        case Algorithm.hillclimb:
            return timed(hill_climb_map)(net, problem, rng)
        case Algorithm.oracle:
            return timed(brute_force_map)(net, problem)


def network_labels(networks: list[BayesianNetwork], paths: list[Path]) -> list[str]:
    """Report keys: the network name, qualified by file stem (then position) on repeats."""
    names = Counter(net.name for net in networks)
    labels = [
        net.name if names[net.name] == 1 else f"{net.name}[{path.stem}]"
        for net, path in zip(networks, paths)
    ]
    repeated = Counter(labels)
    return [
        label if repeated[label] == 1 else f"{label}#{index}"
        for index, label in enumerate(labels)
    ]


def run_case(
    net: BayesianNetwork,
    label: str,
    net_index: int,
    case_id: int,
    counts: tuple[int, int],
    bench: BenchConfig,
) -> list[ReportRow]:
    """One generated problem, every requested algorithm, oracle comparison when affordable."""
    seed = derive_seed(bench.seed, net_index, case_id)
    n_map, n_evid = counts
    problem = generate_problem(
        net, n_map, n_evid, np.random.default_rng(derive_seed(seed, config.PROBLEM_STREAM))
    )
    common = dict(
        network=label,
        case_id=case_id,
        seed=seed,
        n_map=len(problem.map_vars),
        n_evid=len(problem.evidence),
    )

    oracle: tuple[SolveReport, float] | None = None
    started = time.perf_counter()
    try:
        oracle = _run(Algorithm.oracle, net, problem, bench, seed)
    except OracleCapError as ex:
        logger.warning("%s case %d: %s", label, case_id, ex)
    refused_ms = (time.perf_counter() - started) * 1000.0

    rows = []
    for algorithm in bench.algorithms:
        if algorithm == Algorithm.oracle:
            if oracle is None:
                rows.append(
                    ReportRow(
                        **common,
                        algorithm=algorithm,
                        sweeps=0,
                        restarts_used=0,
                        best_found_sweep=0,
                        reheats=0,
                        wall_ms=refused_ms,
                    )
                )
                continue
            report, wall_ms = oracle
        else:
            report, wall_ms = _run(algorithm, net, problem, bench, seed)
        rows.append(
            ReportRow(
                **common,
                algorithm=algorithm,
                log10_prob=report.log10_prob,
                prob=report.prob,
                sweeps=report.sweeps,
                restarts_used=report.restarts_used,
                best_found_sweep=report.best_found_sweep,
                reheats=report.reheats,
                wall_ms=wall_ms,
                matches_oracle=None if oracle is None else _matches(report, oracle[0]),
            )
        )
    return rows


def summarize(network: str, rows: list[ReportRow]) -> list[str]:
    """Per-network summary: optimal counts and mean probability ratio on misses."""
    lines = []
    cases = sorted({row.case_id for row in rows})
    by_case = {
        case: {row.algorithm: row for row in rows if row.case_id == case} for case in cases
    }
    for algorithm in (Algorithm.anneal, Algorithm.hillclimb):
        judged = [
            per_case
            for per_case in by_case.values()
            if algorithm in per_case and per_case[algorithm].matches_oracle is not None
        ]
        if not judged and not any(algorithm in per_case for per_case in by_case.values()):
            continue
        optimal = sum(1 for per_case in judged if per_case[algorithm].matches_oracle)
        line = f"{network}: {algorithm} optimal in {optimal}/{len(judged)} of {len(cases)} cases"
        ratios = [
            10 ** (per_case[algorithm].log10_prob - per_case[Algorithm.oracle].log10_prob)
            for per_case in judged
            if not per_case[algorithm].matches_oracle
            and Algorithm.oracle in per_case
            and per_case[Algorithm.oracle].log10_prob is not None
        ]
        if ratios:
            line += f", mean ratio to oracle on misses {fmean(ratios):.4f}"
        lines.append(line)

    paired = [
        per_case
        for per_case in by_case.values()
        if Algorithm.anneal in per_case and Algorithm.hillclimb in per_case
    ]
    if paired:
        differ = [
            per_case
            for per_case in paired
            if not math.isclose(
                per_case[Algorithm.anneal].log10_prob,
                per_case[Algorithm.hillclimb].log10_prob,
                rel_tol=0.0,
                abs_tol=MATCH_TOLERANCE,
            )
        ]
        leads = sum(
            1
            for per_case in differ
            if per_case[Algorithm.anneal].log10_prob > per_case[Algorithm.hillclimb].log10_prob
        )
        lines.append(
            f"{network}: anneal and hillclimb differ in {len(differ)} cases, anneal better in {leads}"
        )
    return lines


def run_bench(bench: BenchConfig) -> tuple[list[ReportRow], list[str]]:
    networks = [Command.load_network(path) for path in bench.networks]
    labels = network_labels(networks, bench.networks)
    jobs = []
    for net_index, (net, label) in enumerate(zip(networks, labels)):
        case_id = 0
        for counts in bench.count_pairs():
            for _ in range(bench.cases):
                jobs.append((net, label, net_index, case_id, counts))
                case_id += 1

    workers = max(1, min(bench.workers, psutil.cpu_count(logical=True) or 1))
    logger.info("running %d cases on %d workers", len(jobs), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(lambda job: run_case(*job, bench), jobs))

    rows = [row for case_rows in results for row in case_rows]
    summary = []
    for label in labels:
        summary.extend(summarize(label, [row for row in rows if row.network == label]))
    return rows, summary


class BenchCommand(Command):
    name = "bench"
    help = "run algorithms on generated problems and write a CSV report"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--net", type=Path, action="append", required=True)
        parser.add_argument("--cases", type=int, default=20)
        parser.add_argument("--map-count", type=int, nargs="+", default=[20])
        parser.add_argument("--evid-count", type=int, nargs="+", default=[20])
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument(
            "--algos",
            type=lambda text: [Algorithm(name.strip()) for name in text.split(",")],
            default=[Algorithm.anneal, Algorithm.oracle],
            help=f"comma-separated: anneal,oracle,hillclimb; {ORACLE_CAP_HELP}",
        )
        parser.add_argument("--workers", type=int, default=1)
        parser.add_argument("-o", "--output", type=Path, required=True)
        cls.add_schedule_arguments(parser)

    @classmethod
    def start(cls, args: argparse.Namespace) -> int:
        bench = BenchConfig(
            networks=args.net,
            cases=args.cases,
            map_counts=args.map_count,
            evid_counts=args.evid_count,
            algorithms=args.algos,
            seed=args.seed,
            schedule=cls.schedule_from(args),
            restarts=args.restarts,
            output=args.output,
            workers=args.workers,
        )
        rows, summary = run_bench(bench)
        cls.write_text(bench.output, write_report(rows))
        for line in summary:
            print(line)
        return 0
