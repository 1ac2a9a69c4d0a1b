"""Deterministic MAP search: sequential initialization, the exhaustive oracle, hill climbing."""

import logging
import math

import numpy as np

import config
from engine import (
    conditional,
    eliminate,
    evidence_log_prob,
    map_posterior,
    prune,
    require_consistent,
)
from errors import InconsistentEvidenceError, OracleCapError
from models import (
    Algorithm,
    Assignment,
    BayesianNetwork,
    Component,
    MapProblem,
    SolveReport,
)

logger = logging.getLogger(__name__)


def sequential_init(net: BayesianNetwork, problem: MapProblem) -> Assignment:
    """Fix MAP variables in topological order, each to its most probable state given
    the evidence and the variables fixed before it (lowest state index on ties)."""
    problem.check(net)
    require_consistent(net, problem.evidence)
    map_vars = set(problem.map_vars)
    context = dict(problem.evidence.bindings)
    chosen: dict[int, int] = {}
    for variable in net.topological_order():
        if variable not in map_vars:
            continue
        distribution = conditional(net, variable, context)
        if distribution.impossible:
            logger.warning(
                "impossible context while initializing %s; using its first state",
                net.variables[variable].name,
            )
            state = 0
        else:
            state = distribution.argmax()
        chosen[variable] = state
        context[variable] = state
    return Assignment.of(chosen)


def merge_reports(
    algorithm: Algorithm, parts: list[tuple[Component, SolveReport]]
) -> SolveReport:
    """Combine per-component reports (local ids) into one over the original network."""
    best = Assignment()
    for component, report in parts:
        best = best.merge(component.lift(report.best))
    return SolveReport(
        algorithm=algorithm,
        best=best,
        logp=min(0.0, math.fsum(report.logp for _, report in parts)),
        sweeps=sum(report.sweeps for _, report in parts),
        reheats=sum(report.reheats for _, report in parts),
        best_found_sweep=max((report.best_found_sweep for _, report in parts), default=0),
        restarts_used=max((report.restarts_used for _, report in parts), default=1),
        trace=[row for _, report in parts for row in report.trace],
    )


def brute_force_map(
    net: BayesianNetwork, problem: MapProblem, cap: int | None = None
) -> SolveReport:
    """Exact MAP by enumerating every configuration of each pruned component."""
    cap = config.oracle_cap() if cap is None else cap
    problem.check(net)
    require_consistent(net, problem.evidence)
    pruned = prune(net, problem)

    size = sum(
        math.prod(c.network.cardinality(v) for v in c.problem.map_vars)
        for c in pruned.components
    )
    if size > cap:
        raise OracleCapError(size, cap)

    parts = []
    for component in pruned.components:
        map_vars = component.problem.map_vars
        factor = eliminate(
            component.network, map_vars, component.problem.evidence
        ).transpose(map_vars)
        if factor.is_zero():
            raise InconsistentEvidenceError(f"evidence of {component.network.name} is impossible")
        table = factor.normalized().reshape(-1)
        flat = int(np.argmax(table))
        states = np.unravel_index(flat, factor.values.shape)
        with np.errstate(divide="ignore"):
            logp = float(np.log(table[flat]))
        parts.append(
            (
                component,
                SolveReport(
                    algorithm=Algorithm.oracle,
                    best=Assignment.of(
                        {v: int(s) for v, s in zip(map_vars, states)}
                    ),
                    logp=min(0.0, logp),
                ),
            )
        )
    logger.info("oracle enumerated %d candidates over %d components", size, len(parts))
    return merge_reports(Algorithm.oracle, parts)


def _climb(component: Component, rng: np.random.Generator, max_steps: int) -> SolveReport:
    net, problem = component.network, component.problem
    evidence = problem.evidence
    evidence_logp = evidence_log_prob(net, evidence.bindings)
    current = sequential_init(net, problem)
    current_logp = map_posterior(net, current, evidence, evidence_logp)
    steps = 0
    while steps < max_steps:
        scored = []
        for variable in problem.map_vars:
            for state in range(net.cardinality(variable)):
                if state == current[variable]:
                    continue
                neighbor = current.with_binding(variable, state)
                scored.append(
                    (map_posterior(net, neighbor, evidence, evidence_logp), variable, state)
                )
        if not scored:
            break
        top = max(score for score, _, _ in scored)
        improves = top > current_logp + config.IMPROVEMENT_EPSILON or (
            current_logp == -math.inf and top > -math.inf
        )
        if not improves:
            break
        ties = [(v, s) for score, v, s in scored if score == top]
        variable, state = ties[int(rng.integers(len(ties)))]
        current = current.with_binding(variable, state)
        current_logp = top
        steps += 1
    logger.debug("hill climb on %s stopped after %d steps", net.name, steps)
    return SolveReport(
        algorithm=Algorithm.hillclimb,
        best=current,
        logp=current_logp,
        sweeps=steps,
        best_found_sweep=steps,
    )


def hill_climb_map(
    net: BayesianNetwork,
    problem: MapProblem,
    rng: np.random.Generator,
    max_steps: int = config.DEFAULT_HILL_CLIMB_STEPS,
) -> SolveReport:
    """Steepest-ascent local search over single-variable changes from sequential_init.

    Equally good best neighbors are chosen between at random.
    """
    problem.check(net)
    require_consistent(net, problem.evidence)
    pruned = prune(net, problem)
    streams = rng.spawn(len(pruned.components))
    parts = [
        (component, _climb(component, stream, max_steps))
        for component, stream in zip(pruned.components, streams)
    ]
    return merge_reports(Algorithm.hillclimb, parts)
