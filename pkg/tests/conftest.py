import pytest

from formats import parse_network, parse_problem
from models import BayesianNetwork, MapProblem
from tests.helpers import CRAFTED, SPRINKLER


@pytest.fixture
def sprinkler() -> BayesianNetwork:
    return parse_network(SPRINKLER)


@pytest.fixture
def sprinkler_problem(sprinkler) -> MapProblem:
    return parse_problem("map S R\nevidence W=t\n", sprinkler)


@pytest.fixture
def crafted() -> BayesianNetwork:
    return parse_network(CRAFTED)


@pytest.fixture
def crafted_problem(crafted) -> MapProblem:
    return parse_problem("map A B\nevidence C=yes\n", crafted)
