from collections import defaultdict
import math

import numpy as np

from engine import forward_sample
from generators import random_network
from models import Assignment, BayesianNetwork, MapProblem

SPRINKLER = """\
# rain makes the grass wet; so does the sprinkler, which is rarely on when it rains
network sprinkler
var R { t, f }
var S { t, f }
var W { t, f }
cpt R { 0.2 0.8 }
cpt S | R { 0.01 0.99; 0.4 0.6 }
cpt W | S R {
    0.99 0.01;
    0.9 0.1;
    0.8 0.2;
    0.0 1.0
}
"""

# Sequential initialization lands on (A=a0, B=b0), p = 0.30, a strict local optimum;
# the global optimum is (a1, b1) with p = 0.40 given C=yes.
CRAFTED = """\
network crafted
var A { a0, a1 }
var B { b0, b1 }
var C { yes, no }
cpt A { 0.5 0.5 }
cpt B { 0.5 0.5 }
cpt C | A B { 0.3 0.7; 0.28 0.72; 0.02 0.98; 0.4 0.6 }
"""

P_EVIDENCE = 0.2 * 0.01 * 0.99 + 0.8 * 0.4 * 0.9 + 0.2 * 0.99 * 0.8


def enumerate_posterior(net: BayesianNetwork, problem: MapProblem) -> dict[tuple, float]:
    """p(x | E) for every x over problem.map_vars, by summing the full joint."""
    totals: dict[tuple, float] = defaultdict(float)
    for full in net.complete(problem.evidence):
        totals[full.key(problem.map_vars)] += math.exp(net.joint_log_prob(full))
    normalizer = sum(totals.values())
    return {key: value / normalizer for key, value in totals.items()}


def random_corpus(
    count: int,
    seed: int,
    min_vars: int = 3,
    max_vars: int = 8,
    max_joint: int = 4096,
) -> list[BayesianNetwork]:
    rng = np.random.default_rng(seed)
    nets = []
    while len(nets) < count:
        net = random_network(int(rng.integers(min_vars, max_vars + 1)), rng, name=f"n{len(nets)}")
        if math.prod(net.cardinalities) <= max_joint:
            nets.append(net)
    return nets


def random_problem(net: BayesianNetwork, rng: np.random.Generator) -> MapProblem:
    """Random disjoint MAP / evidence split; evidence read from a prior sample so p(E) > 0."""
    order = [int(v) for v in rng.permutation(len(net.variables))]
    n_map = int(rng.integers(1, len(order) + 1))
    n_evid = int(rng.integers(0, len(order) - n_map + 1))
    sample = forward_sample(net, rng)
    observed = order[n_map : n_map + n_evid]
    return MapProblem(
        map_vars=tuple(order[:n_map]),
        evidence=Assignment.of({v: sample[v] for v in observed}),
    )
