import math

import numpy as np
import pytest

import config
from errors import InconsistentEvidenceError, OracleCapError
from formats import parse_network, parse_problem
from models import Algorithm, Assignment, MapProblem
from search import brute_force_map, hill_climb_map, sequential_init
from tests.helpers import P_EVIDENCE, enumerate_posterior, random_corpus, random_problem


class TestSequentialInit:
    def test_sprinkler(self, sprinkler, sprinkler_problem):
        assert sequential_init(sprinkler, sprinkler_problem) == Assignment(bindings={0: 1, 1: 0})

    def test_crafted_lands_on_the_local_optimum(self, crafted, crafted_problem):
        assert sequential_init(crafted, crafted_problem).bindings == {0: 0, 1: 0}

    def test_conditions_on_evidence(self, sprinkler):
        problem = parse_problem("map W\nevidence R=f S=f\n", sprinkler)
        init = sequential_init(sprinkler, problem)
        assert init.bindings == {2: 1}
        problem = parse_problem("map S\nevidence R=f W=t\n", sprinkler)
        assert sequential_init(sprinkler, problem).bindings == {1: 0}

    def test_zero_probability_evidence_is_rejected(self):
        net = parse_network(
            "network det\nvar A { a0, a1 }\nvar B { b0, b1 }\n"
            "cpt A { 1.0 0.0 }\ncpt B | A { 0.7 0.3; 0.4 0.6 }\n"
        )
        with pytest.raises(InconsistentEvidenceError):
            sequential_init(net, parse_problem("map B\nevidence A=a1\n", net))


class TestBruteForce:
    def test_sprinkler(self, sprinkler, sprinkler_problem):
        report = brute_force_map(sprinkler, sprinkler_problem)
        assert report.algorithm == Algorithm.oracle
        assert report.best.bindings == {1: 0, 0: 1}
        assert report.prob == pytest.approx(0.288 / P_EVIDENCE)

    def test_crafted_global_optimum(self, crafted, crafted_problem):
        report = brute_force_map(crafted, crafted_problem)
        assert report.best.bindings == {0: 1, 1: 1}
        assert report.prob == pytest.approx(0.4)

    def test_cap(self, sprinkler, sprinkler_problem):
        with pytest.raises(OracleCapError) as caught:
            brute_force_map(sprinkler, sprinkler_problem, cap=3)
        assert (caught.value.size, caught.value.cap) == (4, 3)

    def test_cap_counts_each_component_separately(self):
        net = parse_network(
            "network roots\nvar A { t, f }\nvar B { t, f }\nvar C { t, f }\n"
            "cpt A { 0.3 0.7 }\ncpt B { 0.6 0.4 }\ncpt C { 0.2 0.8 }\n"
        )
        # three single-variable pieces: 2 + 2 + 2 configurations, not 2 * 2 * 2
        report = brute_force_map(net, MapProblem(map_vars=(0, 1, 2)), cap=6)
        assert report.best.bindings == {0: 1, 1: 0, 2: 1}
        assert report.prob == pytest.approx(0.7 * 0.6 * 0.8)
        with pytest.raises(OracleCapError):
            brute_force_map(net, MapProblem(map_vars=(0, 1, 2)), cap=5)

    def test_cap_from_environment(self, sprinkler, sprinkler_problem, monkeypatch):
        monkeypatch.setenv(config.ORACLE_CAP_ENV, "2")
        with pytest.raises(OracleCapError):
            brute_force_map(sprinkler, sprinkler_problem)

    def test_bad_cap_in_environment(self, sprinkler, sprinkler_problem, monkeypatch):
        monkeypatch.setenv(config.ORACLE_CAP_ENV, "lots")
        with pytest.raises(ValueError, match=config.ORACLE_CAP_ENV):
            brute_force_map(sprinkler, sprinkler_problem)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(8)
        for net in random_corpus(30, seed=8):
            problem = random_problem(net, rng)
            posterior = enumerate_posterior(net, problem)
            report = brute_force_map(net, problem)
            assert report.prob == pytest.approx(max(posterior.values()), abs=1e-9)
            assert posterior[report.best.key(problem.map_vars)] == pytest.approx(
                report.prob, abs=1e-9
            )

    def test_ties_go_to_the_lowest_configuration(self):
        net = parse_network(
            "network flat\nvar A { a0, a1 }\nvar B { b0, b1 }\n"
            "cpt A { 0.5 0.5 }\ncpt B { 0.5 0.5 }\n"
        )
        report = brute_force_map(net, parse_problem("map A B\nevidence\n", net))
        assert report.best.bindings == {0: 0, 1: 0}
        assert report.prob == pytest.approx(0.25)


class TestHillClimb:
    def test_stuck_on_the_crafted_local_optimum(self, crafted, crafted_problem):
        report = hill_climb_map(crafted, crafted_problem, np.random.default_rng(0))
        assert report.algorithm == Algorithm.hillclimb
        assert report.best.bindings == {0: 0, 1: 0}
        assert report.prob == pytest.approx(0.3)
        assert report.sweeps == 0

    def test_never_worse_than_its_start(self):
        rng = np.random.default_rng(12)
        for net in random_corpus(20, seed=12):
            problem = random_problem(net, rng)
            start = enumerate_posterior(net, problem)[
                sequential_init(net, problem).key(problem.map_vars)
            ]
            report = hill_climb_map(net, problem, np.random.default_rng(0))
            assert report.prob >= start - 1e-12
            assert report.prob <= brute_force_map(net, problem).prob + 1e-12

    def test_deterministic_for_a_seed(self):
        rng = np.random.default_rng(13)
        for net in random_corpus(5, seed=13):
            problem = random_problem(net, rng)
            first = hill_climb_map(net, problem, np.random.default_rng(7))
            second = hill_climb_map(net, problem, np.random.default_rng(7))
            assert first.best == second.best
            assert first.logp == second.logp

    def test_probability_is_exact(self, sprinkler, sprinkler_problem):
        report = hill_climb_map(sprinkler, sprinkler_problem, np.random.default_rng(1))
        assert math.exp(report.logp) == pytest.approx(0.288 / P_EVIDENCE)
