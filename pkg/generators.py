"""Random benchmark networks and MAP problems: MAP variables among the roots,
evidence on the leaves read from one prior sample."""

import logging

import numpy as np

from engine import forward_sample
from errors import ProblemError
from models import Assignment, BayesianNetwork, Cpt, MapProblem, Variable

logger = logging.getLogger(__name__)


def derive_seed(*keys: int) -> int:
    """Mix integer keys (master seed, network index, case index, ...) into one seed."""
    sequence = np.random.SeedSequence([int(key) & 0xFFFFFFFFFFFFFFFF for key in keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> 1)


def _states(count: int) -> tuple[str, ...]:
    return tuple(f"s{index}" for index in range(count))


def _rows(
    parent_cards: list[int], card: int, rng: np.random.Generator
) -> tuple[tuple[float, ...], ...]:
    rows = []
    for _ in range(int(np.prod(parent_cards, dtype=np.int64))):
        row = rng.dirichlet(np.ones(card))
        rows.append(tuple(float(p) for p in row))
    return tuple(rows)


def random_network(
    n_vars: int,
    rng: np.random.Generator,
    max_parents: int = 2,
    min_states: int = 2,
    max_states: int = 3,
    name: str = "random",
) -> BayesianNetwork:
    """Random DAG over ids 0..n-1 (parents always have lower ids) with Dirichlet(1) rows."""
    cards = [int(rng.integers(min_states, max_states + 1)) for _ in range(n_vars)]
    variables = []
    cpts = []
    for child in range(n_vars):
        n_parents = int(rng.integers(0, min(max_parents, child) + 1))
        parents = (
            sorted(int(p) for p in rng.choice(child, size=n_parents, replace=False))
            if n_parents
            else []
        )
        variables.append(Variable(id=child, name=f"v{child}", states=_states(cards[child])))
        cpts.append(
            Cpt(
                child=child,
                parents=tuple(parents),
                table=_rows([cards[p] for p in parents], cards[child], rng),
            )
        )
    return BayesianNetwork(name=name, variables=tuple(variables), cpts=tuple(cpts))


def bipartite_network(
    n_roots: int,
    n_leaves: int,
    rng: np.random.Generator,
    extra_edge_prob: float = 0.05,
    name: str = "bipartite",
) -> BayesianNetwork:
    """Two-layer binary network; leaf i hangs off root i mod n_roots plus, rarely, one more root."""
    variables = [
        Variable(id=index, name=f"r{index}", states=_states(2)) for index in range(n_roots)
    ]
    cpts = [
        Cpt(child=index, parents=(), table=_rows([], 2, rng)) for index in range(n_roots)
    ]
    for leaf in range(n_leaves):
        child = n_roots + leaf
        parents = {leaf % n_roots}
        if n_roots > 1 and rng.random() < extra_edge_prob:
            parents.add(int(rng.integers(n_roots)))
        parents = sorted(parents)
        variables.append(Variable(id=child, name=f"l{leaf}", states=_states(2)))
        cpts.append(
            Cpt(child=child, parents=tuple(parents), table=_rows([2] * len(parents), 2, rng))
        )
    return BayesianNetwork(name=name, variables=tuple(variables), cpts=tuple(cpts))


def generate_problem(
    net: BayesianNetwork, n_map: int, n_evid: int, rng: np.random.Generator
) -> MapProblem:
    """MAP variables sampled among the roots, evidence among the leaves, states from one prior sample.

    A variable that is both root and leaf (isolated) is kept out of the evidence pool
    once chosen as a MAP variable.
    """
    roots = net.roots()
    if len(roots) == 0:
        raise ProblemError(f"network {net.name} has no root variables")
    map_vars = tuple(
        sorted(int(v) for v in rng.choice(roots, size=min(n_map, len(roots)), replace=False))
    )
    pool = [v for v in net.leaves() if v not in set(map_vars)]
    observed = (
        sorted(int(v) for v in rng.choice(pool, size=min(n_evid, len(pool)), replace=False))
        if pool
        else []
    )
    sample = forward_sample(net, rng)
    problem = MapProblem(
        map_vars=map_vars,
        evidence=Assignment.of({v: sample[v] for v in observed}),
    )
    logger.info(
        "generated problem on %s: %d MAP, %d evidence", net.name, len(map_vars), len(observed)
    )
    return problem
