"""The annealed MAP sampler: tempered Gibbs sweeps over the MAP variables with
geometric cooling and reheating driven by the specific heat."""

import logging
import math

import numpy as np
from pydantic import BaseModel, Field

import config
from engine import (
    conditional,
    evidence_log_prob,
    forward_sample,
    map_posterior,
    prune,
    require_consistent,
    sample_index,
)
from errors import ContractError, ProbabilityDriftError
from models import (
    Algorithm,
    AnnealSchedule,
    Assignment,
    BayesianNetwork,
    Component,
    LogProb,
    MapProblem,
    SolveReport,
    TraceRow,
)
from schedule import (
    acceptance_probability,
    geometric_cool,
    reheat_temperature,
    specific_heat,
)
from search import merge_reports, sequential_init

logger = logging.getLogger(__name__)


class AnnealState(BaseModel):
    current: dict[int, int]
    current_logp: LogProb
    best: dict[int, int]
    best_logp: LogProb
    temperature: float
    sweep: int = 0
    no_improve: int = 0
    best_found_sweep: int = 0
    reheats: int = 0
    max_heat: float = -math.inf
    t_at_max_ch: float
    heat_trace: list[tuple[float, float]] = Field(default_factory=list)


class SweepResult(BaseModel):
    costs: list[float] = Field(default_factory=list)
    acceptances: list[float] = Field(default_factory=list)
    resampled: int = 0
    improved: bool = False


class GibbsRun(BaseModel):
    """Configurations visited by the chain pinned at T = 1, one per sweep."""

    map_vars: tuple[int, ...]
    samples: list[tuple[int, ...]] = Field(default_factory=list)
    acceptances: list[float] = Field(default_factory=list)


def _same(a: LogProb, b: LogProb) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= config.DRIFT_TOLERANCE


class AnnealedChain:
    """One Markov chain over the MAP variables of a single (pruned) network."""

    def __init__(
        self,
        net: BayesianNetwork,
        problem: MapProblem,
        rng: np.random.Generator,
        schedule: AnnealSchedule | None = None,
        debug: bool = False,
    ) -> None:
        self.net = net
        self.problem = problem
        self.rng = rng
        self.schedule = schedule or AnnealSchedule()
        self.debug = debug
        self._evidence = dict(problem.evidence.bindings)
        self._evidence_logp = evidence_log_prob(net, self._evidence)

    def exact_logp(self, configuration: dict[int, int]) -> LogProb:
        return map_posterior(
            self.net, Assignment.of(configuration), self._evidence, self._evidence_logp
        )

    def start(self, initial: Assignment) -> AnnealState:
        current = {v: initial[v] for v in self.problem.map_vars}
        logp = self.exact_logp(current)
        return AnnealState(
            current=current,
            current_logp=logp,
            best=dict(current),
            best_logp=logp,
            temperature=self.schedule.t0,
            t_at_max_ch=self.schedule.t0,
        )

    def _track_best(self, state: AnnealState) -> bool:
        if not state.current_logp > state.best_logp:
            return False
        improved = (
            state.best_logp == -math.inf
            or state.current_logp - state.best_logp > config.IMPROVEMENT_EPSILON
        )
        state.best = dict(state.current)
        state.best_logp = state.current_logp
        if improved:
            state.best_found_sweep = state.sweep
        return improved

    def sweep(self, state: AnnealState, temperature: float) -> SweepResult:
        result = SweepResult()
        for variable in self.problem.map_vars:
            context = {**self._evidence, **state.current}
            old = context.pop(variable)
            distribution = conditional(self.net, variable, context)
            if distribution.impossible:
                state.current[variable] = int(self.rng.integers(self.net.cardinality(variable)))
                state.current_logp = self.exact_logp(state.current)
                result.resampled += 1
                logger.warning(
                    "impossible context at %s in sweep %d; resampled uniformly",
                    self.net.variables[variable].name,
                    state.sweep,
                )
            else:
                u = self.rng.random()
                candidate = sample_index(distribution.probs, self.rng)
                log_probs = distribution.log_probs
                acceptance = acceptance_probability(
                    temperature, float(log_probs[candidate]), float(log_probs[old])
                )
                result.acceptances.append(acceptance)
                if u < acceptance and candidate != old:
                    state.current[variable] = candidate
                    if math.isfinite(state.current_logp) and math.isfinite(log_probs[old]):
                        state.current_logp += float(log_probs[candidate] - log_probs[old])
                    else:
                        state.current_logp = self.exact_logp(state.current)
            result.improved |= self._track_best(state)
            if math.isfinite(state.current_logp):
                result.costs.append(state.best_logp - state.current_logp)
        return result

    def check_drift(self, state: AnnealState) -> None:
        for label, configuration, tracked in (
            ("current", state.current, state.current_logp),
            ("best", state.best, state.best_logp),
        ):
            exact = self.exact_logp(configuration)
            if not _same(tracked, exact):
                raise ProbabilityDriftError(
                    f"{label} log-probability drifted at sweep {state.sweep}: "
                    f"tracked {tracked!r}, exact {exact!r}"
                )

    def _next_temperature(self, state: AnnealState) -> bool:
        """Cool or reheat after a sweep; returns whether this was a reheat."""
        schedule = self.schedule
        if state.no_improve > 0 and state.no_improve % schedule.wait == 0:
            c_b = state.best_logp - state.current_logp
            state.temperature = (
                reheat_temperature(c_b, state.t_at_max_ch, schedule.k, schedule.t0)
                if math.isfinite(c_b)
                else schedule.t0
            )
            state.reheats += 1
            return True
        state.temperature = geometric_cool(state.temperature, schedule.alpha, schedule.t_min)
        return False

    def run(
        self, initial: Assignment, component: int = 0, restart: int = 0
    ) -> tuple[AnnealState, list[TraceRow]]:
        state = self.start(initial)
        trace: list[TraceRow] = []
        while True:
            state.sweep += 1
            temperature = state.temperature
            result = self.sweep(state, temperature)
            heat = specific_heat(result.costs, temperature) if result.costs else 0.0
            state.heat_trace.append((temperature, heat))
            if heat > state.max_heat:
                state.max_heat = heat
                state.t_at_max_ch = temperature
            state.no_improve = 0 if result.improved else state.no_improve + 1
            if self.debug:
                self.check_drift(state)

            finished = state.no_improve >= self.schedule.stop
            reheated = False if finished else self._next_temperature(state)
            trace.append(
                TraceRow(
                    component=component,
                    restart=restart,
                    sweep=state.sweep,
                    temperature=temperature,
                    current_logp=state.current_logp,
                    best_logp=state.best_logp,
                    specific_heat=heat,
                    reheated=reheated,
                    resampled=result.resampled,
                )
            )
            logger.debug(
                "sweep %d T=%.6g current=%.6g best=%.6g C_H=%.6g",
                state.sweep,
                temperature,
                state.current_logp,
                state.best_logp,
                heat,
            )
            if finished:
                break

        self.check_drift(state)
        return state, trace


def _initial(
    component: Component, restart: int, rng: np.random.Generator
) -> Assignment:
    if restart == 0:
        return sequential_init(component.network, component.problem)
    return forward_sample(component.network, rng).restrict(component.problem.map_vars)


def _anneal_component(
    component: Component,
    index: int,
    schedule: AnnealSchedule,
    rng: np.random.Generator,
    restarts: int,
    debug: bool,
) -> SolveReport:
    winner: AnnealState | None = None
    sweeps = 0
    reheats = 0
    trace: list[TraceRow] = []
    for restart, stream in enumerate(rng.spawn(restarts)):
        chain = AnnealedChain(component.network, component.problem, stream, schedule, debug)
        state, rows = chain.run(_initial(component, restart, stream), index, restart)
        sweeps += state.sweep
        reheats += state.reheats
        trace.extend(rows)
        logger.info(
            "component %d restart %d: best %.6g after %d sweeps",
            index,
            restart,
            state.best_logp,
            state.sweep,
        )
        if winner is None or state.best_logp > winner.best_logp:
            winner = state

    return SolveReport(
        algorithm=Algorithm.anneal,
        best=Assignment.of(winner.best),
        logp=min(0.0, winner.best_logp),
        sweeps=sweeps,
        reheats=reheats,
        best_found_sweep=winner.best_found_sweep,
        restarts_used=restarts,
        trace=trace,
    )


def annealed_map(
    net: BayesianNetwork,
    problem: MapProblem,
    schedule: AnnealSchedule | None = None,
    rng: np.random.Generator | None = None,
    restarts: int = config.DEFAULT_RESTARTS,
    debug: bool = False,
) -> SolveReport:
    """Approximate MAP by simulated annealing, solved separately on each pruned piece.

    The first restart starts from sequential initialization, later ones from a
    forward sample. The reported log-probability is recomputed exactly.
    """
    if restarts < 1:
        raise ContractError(f"restarts must be at least 1, got {restarts}")
    schedule = schedule or AnnealSchedule()
    rng = rng if rng is not None else np.random.default_rng()
    problem.check(net)
    require_consistent(net, problem.evidence)

    pruned = prune(net, problem)
    parts = []
    for index, (component, stream) in enumerate(
        zip(pruned.components, rng.spawn(len(pruned.components)))
    ):
        report = _anneal_component(component, index, schedule, stream, restarts, debug)
        exact = map_posterior(component.network, report.best, component.problem.evidence)
        if not _same(report.logp, exact):
            raise ProbabilityDriftError(
                f"component {index}: tracked {report.logp!r}, exact {exact!r}"
            )
        parts.append((component, report.model_copy(update={"logp": min(0.0, exact)})))
    return merge_reports(Algorithm.anneal, parts)


def gibbs_chain(
    net: BayesianNetwork,
    problem: MapProblem,
    rng: np.random.Generator,
    sweeps: int,
) -> GibbsRun:
    """Run the sampler with the temperature pinned at 1: plain Gibbs sampling of p(X | E)."""
    problem.check(net)
    require_consistent(net, problem.evidence)
    chain = AnnealedChain(net, problem, rng)
    state = chain.start(sequential_init(net, problem))
    run = GibbsRun(map_vars=problem.map_vars)
    for _ in range(sweeps):
        state.sweep += 1
        result = chain.sweep(state, 1.0)
        run.acceptances.extend(result.acceptances)
        run.samples.append(tuple(state.current[v] for v in problem.map_vars))
    return run
