from enum import StrEnum, auto
from functools import cached_property
import itertools
import math
from pathlib import Path
from typing import Iterator, Mapping

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

import config
from errors import ContractError, ProblemError, StructureError

type VariableId = int
type StateIndex = int
type LogProb = float

IDENTIFIER = r"^[A-Za-z_][A-Za-z0-9_\-]*$"


class Variable(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: VariableId = Field(ge=0)
    name: str = Field(pattern=IDENTIFIER)
    states: tuple[str, ...]

    @model_validator(mode="after")
    def _check_states(self) -> "Variable":
        if len(self.states) == 0:
            raise StructureError(f"variable {self.name} has no states", self.name)
        if len(set(self.states)) != len(self.states):
            raise StructureError(
                f"variable {self.name} declares a state twice", self.name
            )
        if any(state == "" for state in self.states):
            raise StructureError(f"variable {self.name} has an empty state", self.name)
        return self

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, state: str) -> StateIndex:
        try:
            return self.states.index(state)
        except ValueError:
            raise ProblemError(f"variable {self.name} has no state {state!r}")


class Cpt(BaseModel):
    """p(child | parents); rows enumerate parent configurations, last parent fastest."""

    model_config = ConfigDict(frozen=True)

    child: VariableId
    parents: tuple[VariableId, ...] = ()
    table: tuple[tuple[float, ...], ...]


class Assignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    bindings: dict[VariableId, StateIndex] = Field(default_factory=dict)

    @classmethod
    def of(cls, bindings: Mapping[VariableId, StateIndex]) -> "Assignment":
        # trusted fast path for the sampler's inner loop
        return cls.model_construct(bindings=dict(bindings))

    def __len__(self) -> int:
        return len(self.bindings)

    def __contains__(self, variable: VariableId) -> bool:
        return variable in self.bindings

    def __getitem__(self, variable: VariableId) -> StateIndex:
        return self.bindings[variable]

    @property
    def variables(self) -> tuple[VariableId, ...]:
        return tuple(sorted(self.bindings))

    def key(self, order: tuple[VariableId, ...]) -> tuple[StateIndex, ...]:
        return tuple(self.bindings[variable] for variable in order)

    def restrict(self, variables) -> "Assignment":
        keep = set(variables)
        return Assignment.of({v: s for v, s in self.bindings.items() if v in keep})

    def with_binding(self, variable: VariableId, state: StateIndex) -> "Assignment":
        return Assignment.of({**self.bindings, variable: state})

    def merge(self, other: "Assignment") -> "Assignment":
        clash = [
            v
            for v, s in other.bindings.items()
            if v in self.bindings and self.bindings[v] != s
        ]
        if clash:
            raise ContractError(f"assignments disagree on variables {clash}")
        return Assignment.of({**self.bindings, **other.bindings})

    def check(self, net: "BayesianNetwork") -> None:
        for variable, state in self.bindings.items():
            if not 0 <= variable < len(net.variables):
                raise ContractError(f"unknown variable id {variable}")
            if not 0 <= state < net.cardinality(variable):
                raise ContractError(
                    f"state {state} out of range for {net.variables[variable].name}"
                )

    def is_full(self, net: "BayesianNetwork") -> bool:
        return len(self.bindings) == len(net.variables)

    def describe(
        self, net: "BayesianNetwork", order: tuple[VariableId, ...] | None = None
    ) -> str:
        order = self.variables if order is None else order
        return " ".join(
            f"{net.variables[v].name}={net.variables[v].states[self.bindings[v]]}"
            for v in order
        )


class BayesianNetwork(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(pattern=IDENTIFIER)
    variables: tuple[Variable, ...] = ()
    cpts: tuple[Cpt, ...] = ()

    @model_validator(mode="after")
    def _check_structure(self) -> "BayesianNetwork":
        names: set[str] = set()
        for index, variable in enumerate(self.variables):
            if variable.id != index:
                raise StructureError(
                    f"variable {variable.name} has id {variable.id}, expected {index}",
                    variable.name,
                )
            if variable.name in names:
                raise StructureError(
                    f"variable {variable.name} declared twice", variable.name
                )
            names.add(variable.name)

        seen: set[VariableId] = set()
        for cpt in self.cpts:
            if not 0 <= cpt.child < len(self.variables):
                raise StructureError(f"cpt for unknown variable id {cpt.child}")
            child = self.variables[cpt.child]
            if cpt.child in seen:
                raise StructureError(f"variable {child.name} has two cpts", child.name)
            seen.add(cpt.child)
            self._check_cpt(cpt, child)

        for variable in self.variables:
            if variable.id not in seen:
                raise StructureError(
                    f"variable {variable.name} has no cpt", variable.name
                )

        self.topological_order()
        return self

    def _check_cpt(self, cpt: Cpt, child: Variable) -> None:
        rows = 1
        for parent in cpt.parents:
            if not 0 <= parent < len(self.variables):
                raise StructureError(
                    f"{child.name} has unknown parent id {parent}", child.name
                )
            rows *= self.variables[parent].cardinality
        if cpt.child in cpt.parents:
            raise StructureError(f"{child.name} is its own parent", child.name)
        if len(set(cpt.parents)) != len(cpt.parents):
            raise StructureError(f"{child.name} lists a parent twice", child.name)
        if len(cpt.table) != rows:
            raise StructureError(
                f"cpt of {child.name} has {len(cpt.table)} rows, expected {rows}",
                child.name,
            )
        for row in cpt.table:
            if len(row) != child.cardinality:
                raise StructureError(
                    f"cpt row of {child.name} has {len(row)} entries, "
                    f"expected {child.cardinality}",
                    child.name,
                )
            if any(not (0.0 <= p <= 1.0) for p in row):
                raise StructureError(
                    f"cpt of {child.name} has an entry outside [0, 1]", child.name
                )
            if abs(math.fsum(row) - 1.0) > config.ROW_TOLERANCE:
                raise StructureError(
                    f"cpt row of {child.name} sums to {math.fsum(row):.10g}",
                    child.name,
                )

    @cached_property
    def graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.variables)))
        graph.add_edges_from(
            (parent, cpt.child) for cpt in self.cpts for parent in cpt.parents
        )
        return graph

    @cached_property
    def _cpt_by_child(self) -> dict[VariableId, Cpt]:
        return {cpt.child: cpt for cpt in self.cpts}

    @cached_property
    def _order(self) -> tuple[VariableId, ...]:
        try:
            return tuple(nx.lexicographical_topological_sort(self.graph))
        except nx.NetworkXUnfeasible:
            parent, _ = nx.find_cycle(self.graph)[0]
            name = self.variables[parent].name
            raise StructureError(f"cycle through variable {name}", name)

    @cached_property
    def tables(self) -> tuple[np.ndarray, ...]:
        """CPT arrays shaped (*parent cardinalities, child cardinality)."""
        arrays = []
        for variable in self.variables:
            cpt = self.cpt(variable.id)
            shape = tuple(self.cardinality(p) for p in cpt.parents) + (
                variable.cardinality,
            )
            arrays.append(np.asarray(cpt.table, dtype=np.float64).reshape(shape))
        return tuple(arrays)

    @cached_property
    def ancestry(self) -> tuple[frozenset[VariableId], ...]:
        return tuple(
            frozenset(nx.ancestors(self.graph, v)) for v in range(len(self.variables))
        )

    @cached_property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(variable.cardinality for variable in self.variables)

    @cached_property
    def _index(self) -> dict[str, VariableId]:
        return {variable.name: variable.id for variable in self.variables}

    def cpt(self, variable: VariableId) -> Cpt:
        return self._cpt_by_child[variable]

    def parents(self, variable: VariableId) -> tuple[VariableId, ...]:
        return self.cpt(variable).parents

    def children(self, variable: VariableId) -> tuple[VariableId, ...]:
        return tuple(sorted(self.graph.successors(variable)))

    def cardinality(self, variable: VariableId) -> int:
        return self.variables[variable].cardinality

    def variable_id(self, name: str) -> VariableId:
        try:
            return self._index[name]
        except KeyError:
            raise ProblemError(f"network {self.name} has no variable {name!r}")

    def roots(self) -> tuple[VariableId, ...]:
        return tuple(v.id for v in self.variables if not self.parents(v.id))

    def leaves(self) -> tuple[VariableId, ...]:
        return tuple(v.id for v in self.variables if not self.children(v.id))

    def topological_order(self) -> tuple[VariableId, ...]:
        return self._order

    def joint_log_prob(self, full: Assignment) -> LogProb:
        missing = [v.name for v in self.variables if v.id not in full]
        if missing:
            raise ContractError(f"unbound variables {missing}")
        total = 0.0
        for variable in self.variables:
            cpt = self.cpt(variable.id)
            index = tuple(full[p] for p in cpt.parents) + (full[variable.id],)
            p = float(self.tables[variable.id][index])
            if p == 0.0:
                return -math.inf
            total += math.log(p)
        return total

    def complete(self, partial: Assignment) -> Iterator[Assignment]:
        partial.check(self)
        free = [v.id for v in self.variables if v.id not in partial]
        for states in itertools.product(*(range(self.cardinality(v)) for v in free)):
            yield Assignment.of({**partial.bindings, **dict(zip(free, states))})

    def subnetwork(
        self, variables, name: str | None = None
    ) -> tuple["BayesianNetwork", tuple[VariableId, ...]]:
        """Re-index a parent-closed subset densely; returns the net and local->original ids."""
        origin = tuple(sorted(set(variables)))
        local = {v: i for i, v in enumerate(origin)}
        new_variables = []
        new_cpts = []
        for v in origin:
            cpt = self.cpt(v)
            if any(p not in local for p in cpt.parents):
                raise StructureError(
                    f"subset is not closed under parents of {self.variables[v].name}",
                    self.variables[v].name,
                )
            new_variables.append(
                self.variables[v].model_copy(update={"id": local[v]})
            )
            new_cpts.append(
                Cpt(
                    child=local[v],
                    parents=tuple(local[p] for p in cpt.parents),
                    table=cpt.table,
                )
            )
        subnet = BayesianNetwork(
            name=name or self.name, variables=tuple(new_variables), cpts=tuple(new_cpts)
        )
        return subnet, origin


def topological_order(net: BayesianNetwork) -> tuple[VariableId, ...]:
    return net.topological_order()


def joint_log_prob(net: BayesianNetwork, full: Assignment) -> LogProb:
    return net.joint_log_prob(full)


def complete(partial: Assignment, net: BayesianNetwork) -> Iterator[Assignment]:
    return net.complete(partial)


class MapProblem(BaseModel):
    model_config = ConfigDict(frozen=True)

    map_vars: tuple[VariableId, ...]
    evidence: Assignment = Field(default_factory=Assignment)

    @model_validator(mode="after")
    def _check_sets(self) -> "MapProblem":
        if len(self.map_vars) == 0:
            raise ProblemError("at least one MAP variable required")
        if len(set(self.map_vars)) != len(self.map_vars):
            raise ProblemError("a MAP variable is listed twice")
        overlap = sorted(set(self.map_vars) & set(self.evidence.bindings))
        if overlap:
            raise ProblemError(f"variables {overlap} are both MAP and evidence")
        return self

    def check(self, net: BayesianNetwork) -> None:
        for variable in self.map_vars:
            if not 0 <= variable < len(net.variables):
                raise ProblemError(f"unknown MAP variable id {variable}")
        try:
            self.evidence.check(net)
        except ContractError as ex:
            raise ProblemError(str(ex))


class Component(BaseModel):
    model_config = ConfigDict(frozen=True)

    network: BayesianNetwork
    problem: MapProblem
    origin: tuple[VariableId, ...]

    def lift(self, local: Assignment) -> Assignment:
        return Assignment.of({self.origin[v]: s for v, s in local.bindings.items()})

    def lower(self, original: Assignment) -> Assignment:
        local = {v: i for i, v in enumerate(self.origin)}
        return Assignment.of(
            {local[v]: s for v, s in original.bindings.items() if v in local}
        )


class PrunedNetwork(BaseModel):
    model_config = ConfigDict(frozen=True)

    components: tuple[Component, ...]
    dropped: tuple[VariableId, ...] = ()
    discarded: tuple[VariableId, ...] = ()


class Algorithm(StrEnum):
    anneal = auto()
    oracle = auto()
    hillclimb = auto()


class AnnealSchedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    t0: float = config.DEFAULT_T0
    alpha: float = config.DEFAULT_ALPHA
    k: float = config.DEFAULT_K
    wait: int = config.DEFAULT_WAIT
    stop: int = config.DEFAULT_STOP
    t_min: float = config.DEFAULT_T_MIN

    @model_validator(mode="after")
    def _check_ranges(self) -> "AnnealSchedule":
        if not 0 < self.alpha < 1:
            raise ContractError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.t_min <= self.t0 <= 1:
            raise ContractError(
                f"need 0 < t_min <= t0 <= 1, got t_min={self.t_min}, t0={self.t0}"
            )
        if not 0 < self.wait <= self.stop:
            raise ContractError(
                f"need 0 < wait <= stop, got wait={self.wait}, stop={self.stop}"
            )
        if not (self.k >= 0 and math.isfinite(self.k)):
            raise ContractError(f"k must be finite and nonnegative, got {self.k}")
        return self


class TraceRow(BaseModel):
    component: int
    restart: int
    sweep: int
    temperature: float
    current_logp: LogProb
    best_logp: LogProb
    specific_heat: float
    reheated: bool = False
    resampled: int = 0


class SolveReport(BaseModel):
    algorithm: Algorithm
    best: Assignment
    logp: LogProb
    sweeps: int = 0
    reheats: int = 0
    best_found_sweep: int = 0
    restarts_used: int = 1
    trace: list[TraceRow] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_probability(self) -> "SolveReport":
        if math.isnan(self.logp) or self.logp > 0.0:
            raise ContractError(f"log-probability {self.logp} is not in (-inf, 0]")
        return self

    @property
    def prob(self) -> float:
        return math.exp(self.logp)

    @property
    def log10_prob(self) -> float:
        return self.logp / math.log(10)


class BenchConfig(BaseModel):
    networks: list[Path] = Field(min_length=1)
    cases: int = Field(default=20, ge=1)
    map_counts: list[int] = Field(default_factory=lambda: [20], min_length=1)
    evid_counts: list[int] = Field(default_factory=lambda: [20], min_length=1)
    algorithms: list[Algorithm] = Field(
        default_factory=lambda: [Algorithm.anneal, Algorithm.oracle], min_length=1
    )
    seed: int = 0
    schedule: AnnealSchedule = Field(default_factory=AnnealSchedule)
    restarts: int = Field(default=config.DEFAULT_RESTARTS, ge=1)
    output: Path
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_counts(self) -> "BenchConfig":
        if any(count < 1 for count in self.map_counts + self.evid_counts):
            raise ContractError("MAP and evidence counts must be at least 1")
        lengths = {len(self.map_counts), len(self.evid_counts)}
        if len(lengths) > 1 and 1 not in lengths:
            raise ContractError("--map-count and --evid-count lists differ in length")
        return self

    def count_pairs(self) -> list[tuple[int, int]]:
        size = max(len(self.map_counts), len(self.evid_counts))
        maps = self.map_counts * size if len(self.map_counts) == 1 else self.map_counts
        evids = (
            self.evid_counts * size if len(self.evid_counts) == 1 else self.evid_counts
        )
        return list(zip(maps, evids))


class ReportRow(BaseModel):
    """One CSV line of a benchmark. Probabilities stay empty for an oracle over the cap."""

    network: str
    case_id: int
    algorithm: Algorithm
    seed: int
    log10_prob: float | None = None
    prob: float | None = None
    sweeps: int
    restarts_used: int
    best_found_sweep: int
    reheats: int
    wall_ms: float
    matches_oracle: bool | None = None
    n_map: int
    n_evid: int
