"""Exact inference by variable elimination, evidence-based pruning and forward sampling."""

from dataclasses import dataclass
import itertools
import logging
import math
from typing import Iterable, Literal, Mapping

import networkx as nx
import numpy as np

import config
from errors import ContractError, InconsistentEvidenceError
from models import (
    Assignment,
    BayesianNetwork,
    Component,
    LogProb,
    MapProblem,
    PrunedNetwork,
    StateIndex,
    VariableId,
)

logger = logging.getLogger(__name__)

type TieBreak = Literal["lowest", "highest"]


@dataclass(frozen=True, eq=False)
class Factor:
    """Nonnegative table over `scope`; the true values are `values * exp(log_scale)`."""

    scope: tuple[VariableId, ...]
    values: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def unit(cls) -> "Factor":
        return cls(scope=(), values=np.ones(()))

    @property
    def table(self) -> np.ndarray:
        """Row-major flattening, last scope variable fastest."""
        return self.values.reshape(-1)

    def is_zero(self) -> bool:
        return not np.any(self.values > 0.0)

    def log_total(self) -> LogProb:
        total = float(self.values.sum())
        if total == 0.0:
            return -math.inf
        return math.log(total) + self.log_scale

    def normalized(self) -> np.ndarray:
        return self.values / self.values.sum()

    def _expand(self, scope: tuple[VariableId, ...]) -> np.ndarray:
        position = {v: i for i, v in enumerate(self.scope)}
        ordered = [v for v in scope if v in position]
        values = np.transpose(self.values, [position[v] for v in ordered])
        shape = [self.values.shape[position[v]] if v in position else 1 for v in scope]
        return values.reshape(shape)

    def multiply(self, other: "Factor") -> "Factor":
        scope = self.scope + tuple(v for v in other.scope if v not in self.scope)
        values = self._expand(scope) * other._expand(scope)
        return Factor(scope, values, self.log_scale + other.log_scale).rescaled()

    def sum_out(self, variable: VariableId) -> "Factor":
        axis = self.scope.index(variable)
        scope = self.scope[:axis] + self.scope[axis + 1 :]
        return Factor(scope, self.values.sum(axis=axis), self.log_scale).rescaled()

    def reduce(self, evidence: Mapping[VariableId, StateIndex]) -> "Factor":
        if not any(v in evidence for v in self.scope):
            return self
        index = tuple(evidence.get(v, slice(None)) for v in self.scope)
        scope = tuple(v for v in self.scope if v not in evidence)
        return Factor(scope, np.asarray(self.values[index]), self.log_scale)

    def transpose(self, scope: tuple[VariableId, ...]) -> "Factor":
        if set(scope) != set(self.scope):
            raise ContractError(f"cannot reorder scope {self.scope} as {scope}")
        return Factor(scope, self._expand(scope), self.log_scale)

    def rescaled(self) -> "Factor":
        peak = float(self.values.max()) if self.values.size else 0.0
        if peak == 0.0 or config.RESCALE_LOW <= peak <= config.RESCALE_HIGH:
            return self
        return Factor(self.scope, self.values / peak, self.log_scale + math.log(peak))


@dataclass(frozen=True, eq=False)
class Distribution:
    """Normalized distribution over one variable's states.

    `impossible` flags a context of probability zero; `probs` is then uniform.
    """

    probs: np.ndarray
    impossible: bool = False

    @property
    def log_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def argmax(self) -> StateIndex:
        return int(np.argmax(self.probs))


def _bindings(evidence: Assignment | Mapping[VariableId, StateIndex]):
    return evidence.bindings if isinstance(evidence, Assignment) else evidence


def relevant_variables(net: BayesianNetwork, targets: Iterable[VariableId]) -> set[VariableId]:
    """What survives repeated removal of childless variables outside `targets`."""
    relevant = set(targets)
    for target in list(relevant):
        relevant |= net.ancestry[target]
    return relevant


def min_fill_order(
    scopes: Iterable[tuple[VariableId, ...]],
    hidden: Iterable[VariableId],
    tie_break: TieBreak = "lowest",
) -> list[VariableId]:
    graph = nx.Graph()
    for scope in scopes:
        graph.add_nodes_from(scope)
        graph.add_edges_from(itertools.combinations(scope, 2))
    remaining = set(hidden)
    graph.add_nodes_from(remaining)
    sign = 1 if tie_break == "lowest" else -1

    def fill_in(variable: VariableId) -> int:
        neighbors = list(graph.neighbors(variable))
        return sum(
            1 for a, b in itertools.combinations(neighbors, 2) if not graph.has_edge(a, b)
        )

    order = []
    while remaining:
        variable = min(remaining, key=lambda v: (fill_in(v), sign * v))
        neighbors = list(graph.neighbors(variable))
        graph.add_edges_from(itertools.combinations(neighbors, 2))
        graph.remove_node(variable)
        remaining.remove(variable)
        order.append(variable)
    return order


def eliminate(
    net: BayesianNetwork,
    keep: Iterable[VariableId],
    evidence: Assignment | Mapping[VariableId, StateIndex],
    tie_break: TieBreak = "lowest",
) -> Factor:
    """Unnormalized f(keep) = sum over the rest of the CPT product with evidence selected.

    The returned scope lists `keep` in ascending id order. An all-zero factor means the
    evidence is inconsistent.
    """
    keep = frozenset(keep)
    evidence = _bindings(evidence)
    if keep & set(evidence):
        raise ContractError(f"variables {sorted(keep & set(evidence))} are kept and observed")

    relevant = relevant_variables(net, keep | set(evidence))
    factors = [
        Factor(net.parents(v) + (v,), net.tables[v]).reduce(evidence)
        for v in sorted(relevant)
    ]
    hidden = relevant - keep - set(evidence)
    order = min_fill_order((f.scope for f in factors), hidden, tie_break)

    for variable in order:
        bucket = [f for f in factors if variable in f.scope]
        factors = [f for f in factors if variable not in f.scope]
        product = Factor.unit()
        for factor in bucket:
            product = product.multiply(factor)
        factors.append(product.sum_out(variable))

    result = Factor.unit()
    for factor in factors:
        result = result.multiply(factor)
    return result.transpose(tuple(sorted(keep)))


def evidence_log_prob(
    net: BayesianNetwork, evidence: Assignment | Mapping[VariableId, StateIndex]
) -> LogProb:
    return eliminate(net, (), evidence).log_total()


def require_consistent(net: BayesianNetwork, evidence: Assignment) -> None:
    if evidence_log_prob(net, evidence) == -math.inf:
        raise InconsistentEvidenceError(
            f"evidence {evidence.describe(net)} has probability zero"
        )


def conditional(
    net: BayesianNetwork,
    target: VariableId,
    context: Assignment | Mapping[VariableId, StateIndex],
) -> Distribution:
    """p(target | context), or a flagged uniform distribution when p(context) = 0."""
    context = _bindings(context)
    if target in context:
        raise ContractError(f"target {net.variables[target].name} is bound in the context")
    factor = eliminate(net, (target,), context)
    if factor.is_zero():
        card = net.cardinality(target)
        return Distribution(np.full(card, 1.0 / card), impossible=True)
    return Distribution(factor.normalized())


def map_posterior(
    net: BayesianNetwork,
    x: Assignment,
    evidence: Assignment | Mapping[VariableId, StateIndex],
    evidence_logp: LogProb | None = None,
) -> LogProb:
    """ln p(x | E), computed as ln p(x, E) - ln p(E).

    Callers scoring many configurations against the same evidence pass ln p(E)
    from ``evidence_log_prob`` as ``evidence_logp``.
    """
    evidence = _bindings(evidence)
    overlap = set(x.bindings) & set(evidence)
    if overlap:
        raise ContractError(f"variables {sorted(overlap)} are both MAP and evidence")
    total = evidence_log_prob(net, evidence) if evidence_logp is None else evidence_logp
    if total == -math.inf:
        raise InconsistentEvidenceError("evidence has probability zero")
    joint = evidence_log_prob(net, {**evidence, **x.bindings})
    if joint == -math.inf:
        return -math.inf
    return min(0.0, joint - total)


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> StateIndex:
    """Inverse-CDF draw; tolerant of rows that sum to 1 only within the load tolerance."""
    cumulative = np.cumsum(probs)
    cumulative = cumulative / cumulative[-1]
    index = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return min(index, len(probs) - 1)


def forward_sample(net: BayesianNetwork, rng: np.random.Generator) -> Assignment:
    sample: dict[VariableId, StateIndex] = {}
    for variable in net.topological_order():
        row = net.tables[variable][tuple(sample[p] for p in net.parents(variable))]
        sample[variable] = sample_index(row, rng)
    return Assignment.of(sample)


def prune(net: BayesianNetwork, problem: MapProblem) -> PrunedNetwork:
    """Drop barren variables, split what remains into independent pieces.

    Pieces holding no MAP variable only scale p(E) and are discarded.
    """
    problem.check(net)
    evidence = problem.evidence.bindings
    relevant = relevant_variables(net, set(problem.map_vars) | set(evidence))
    dropped = tuple(v for v in range(len(net.variables)) if v not in relevant)

    pieces = sorted(
        (sorted(piece) for piece in nx.weakly_connected_components(net.graph.subgraph(relevant))),
        key=lambda piece: piece[0],
    )
    components = []
    discarded: list[VariableId] = []
    for piece in pieces:
        members = set(piece)
        map_vars = [v for v in problem.map_vars if v in members]
        if not map_vars:
            discarded.extend(piece)
            continue
        subnet, origin = net.subnetwork(
            piece, name=f"{net.name}_part{len(components)}"
        )
        local = {v: i for i, v in enumerate(origin)}
        components.append(
            Component(
                network=subnet,
                problem=MapProblem(
                    map_vars=tuple(local[v] for v in map_vars),
                    evidence=Assignment.of(
                        {local[v]: s for v, s in evidence.items() if v in members}
                    ),
                ),
                origin=origin,
            )
        )

    logger.debug(
        "pruned %s: %d barren, %d discarded, %d components",
        net.name,
        len(dropped),
        len(discarded),
        len(components),
    )
    return PrunedNetwork(
        components=tuple(components), dropped=dropped, discarded=tuple(sorted(discarded))
    )
