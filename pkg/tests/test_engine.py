import math

import numpy as np
import pytest

from engine import (
    Factor,
    conditional,
    eliminate,
    evidence_log_prob,
    forward_sample,
    map_posterior,
    min_fill_order,
    prune,
    relevant_variables,
    require_consistent,
    sample_index,
)
from errors import ContractError, InconsistentEvidenceError
from formats import parse_network, parse_problem
from models import Assignment, BayesianNetwork, Cpt, MapProblem, Variable
from tests.helpers import P_EVIDENCE, enumerate_posterior, random_corpus, random_problem

TWO_TREES = """\
network trees
var A { t, f }
var B { t, f }
var C { t, f }
var D { t, f }
cpt A { 0.3 0.7 }
cpt B { 0.6 0.4 }
cpt C | A { 0.9 0.1; 0.2 0.8 }
cpt D | B { 0.5 0.5; 0.1 0.9 }
"""

DETERMINISTIC = """\
network det
var A { a0, a1 }
var B { b0, b1 }
cpt A { 1.0 0.0 }
cpt B | A { 0.7 0.3; 0.4 0.6 }
"""


def _posterior_table(net, problem) -> dict[tuple, float]:
    factor = eliminate(net, problem.map_vars, problem.evidence).transpose(problem.map_vars)
    table = factor.normalized()
    return {
        tuple(int(s) for s in np.unravel_index(flat, table.shape)): float(p)
        for flat, p in enumerate(table.reshape(-1))
    }


class TestFactor:
    def test_multiply_aligns_scopes(self):
        left = Factor((0,), np.array([0.5, 2.0]))
        right = Factor((1, 0), np.array([[1.0, 3.0], [10.0, 30.0]]))
        product = left.multiply(right)
        assert product.scope == (0, 1)
        np.testing.assert_allclose(product.values, [[0.5, 5.0], [6.0, 60.0]])

    def test_sum_out_and_reduce(self):
        factor = Factor((0, 1), np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_allclose(factor.sum_out(0).values, [4.0, 6.0])
        reduced = factor.reduce({1: 0})
        assert reduced.scope == (0,)
        np.testing.assert_allclose(reduced.values, [1.0, 3.0])

    def test_rescaling_keeps_the_true_value(self):
        factor = Factor((0,), np.array([1e-200, 3e-200])).rescaled()
        assert factor.values.max() == 1.0
        assert factor.log_total() == pytest.approx(math.log(4e-200), rel=1e-12)

    def test_transpose_rejects_other_scope(self):
        with pytest.raises(ContractError):
            Factor((0, 1), np.ones((2, 2))).transpose((0, 2))


class TestMinFillOrder:
    def test_chain_lowest_first(self):
        assert min_fill_order([(0, 1), (1, 2)], {0, 1, 2}) == [0, 1, 2]

    def test_chain_highest_first(self):
        assert min_fill_order([(0, 1), (1, 2)], {0, 1, 2}, tie_break="highest") == [2, 1, 0]

    def test_prefers_no_fill(self):
        # eliminating the hub 0 of a star would connect every leaf
        order = min_fill_order([(0, 1), (0, 2), (0, 3)], {0, 1, 2, 3})
        assert order[-1] in (0, 3) and order[0] == 1


class TestEliminate:
    def test_sprinkler_rain_given_wet(self, sprinkler):
        factor = eliminate(sprinkler, [0], Assignment(bindings={2: 0}))
        assert factor.scope == (0,)
        np.testing.assert_allclose(factor.table * math.exp(factor.log_scale), [0.16038, 0.288])

    def test_scope_is_sorted(self, sprinkler):
        assert eliminate(sprinkler, [2, 0], {}).scope == (0, 2)

    def test_evidence_probability(self, sprinkler):
        assert evidence_log_prob(sprinkler, {2: 0}) == pytest.approx(math.log(P_EVIDENCE))
        assert evidence_log_prob(sprinkler, {}) == pytest.approx(0.0, abs=1e-15)

    def test_kept_and_observed(self, sprinkler):
        with pytest.raises(ContractError):
            eliminate(sprinkler, [2], {2: 0})

    def test_tie_break_does_not_change_the_result(self):
        rng = np.random.default_rng(21)
        for net in random_corpus(15, seed=21):
            problem = random_problem(net, rng)
            lowest = eliminate(net, problem.map_vars, problem.evidence)
            highest = eliminate(net, problem.map_vars, problem.evidence, tie_break="highest")
            np.testing.assert_allclose(lowest.normalized(), highest.normalized(), atol=1e-12)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(4)
        for net in random_corpus(25, seed=4):
            problem = random_problem(net, rng)
            expected = enumerate_posterior(net, problem)
            actual = _posterior_table(net, problem)
            for key, p in expected.items():
                assert actual[key] == pytest.approx(p, abs=1e-9)

    @pytest.mark.slow
    def test_matches_enumeration_on_many_networks(self):
        rng = np.random.default_rng(5)
        for net in random_corpus(200, seed=5, max_vars=10):
            problem = random_problem(net, rng)
            expected = enumerate_posterior(net, problem)
            actual = _posterior_table(net, problem)
            for key, p in expected.items():
                assert actual[key] == pytest.approx(p, abs=1e-9)

    def test_tiny_evidence_probability_does_not_underflow(self):
        count = 400
        net = BayesianNetwork(
            name="many",
            variables=tuple(Variable(id=i, name=f"v{i}", states=("t", "f")) for i in range(count)),
            cpts=tuple(Cpt(child=i, table=((0.01, 0.99),)) for i in range(count)),
        )
        evidence = {i: 0 for i in range(1, count)}
        assert evidence_log_prob(net, evidence) == pytest.approx((count - 1) * math.log(0.01))
        assert map_posterior(net, Assignment(bindings={0: 1}), evidence) == pytest.approx(
            math.log(0.99)
        )


class TestConditional:
    def test_rain_given_wet(self, sprinkler):
        distribution = conditional(sprinkler, 0, {2: 0})
        assert not distribution.impossible
        np.testing.assert_allclose(
            distribution.probs, np.array([0.16038, 0.288]) / P_EVIDENCE, rtol=1e-12
        )

    def test_impossible_context_is_flagged(self):
        net = parse_network(DETERMINISTIC)
        distribution = conditional(net, 1, {0: 1})
        assert distribution.impossible
        np.testing.assert_allclose(distribution.probs, [0.5, 0.5])

    def test_bound_target(self, sprinkler):
        with pytest.raises(ContractError):
            conditional(sprinkler, 0, {0: 1})


class TestMapPosterior:
    def test_sprinkler_best(self, sprinkler):
        logp = map_posterior(sprinkler, Assignment(bindings={1: 0, 0: 1}), {2: 0})
        assert logp == pytest.approx(math.log(0.288 / P_EVIDENCE))

    def test_zero_probability_configuration(self, sprinkler):
        assert map_posterior(sprinkler, Assignment(bindings={0: 1, 1: 1}), {2: 0}) == -math.inf

    def test_inconsistent_evidence(self):
        net = parse_network(DETERMINISTIC)
        with pytest.raises(InconsistentEvidenceError):
            map_posterior(net, Assignment(bindings={1: 0}), {0: 1})

    def test_precomputed_evidence_probability(self, sprinkler):
        evidence_logp = evidence_log_prob(sprinkler, {2: 0})
        for bindings in ({1: 0, 0: 1}, {1: 1, 0: 0}, {1: 0, 0: 0}, {1: 1, 0: 1}):
            x = Assignment(bindings=bindings)
            assert map_posterior(sprinkler, x, {2: 0}, evidence_logp) == map_posterior(
                sprinkler, x, {2: 0}
            )

    def test_precomputed_value_is_used(self, sprinkler):
        x = Assignment(bindings={1: 0, 0: 1})
        assert map_posterior(sprinkler, x, {2: 0}, evidence_logp=0.0) == pytest.approx(
            math.log(0.288)
        )
        with pytest.raises(InconsistentEvidenceError):
            map_posterior(sprinkler, x, {2: 0}, evidence_logp=-math.inf)

    def test_overlap(self, sprinkler):
        with pytest.raises(ContractError):
            map_posterior(sprinkler, Assignment(bindings={2: 0}), {2: 0})

    def test_require_consistent(self, sprinkler):
        require_consistent(sprinkler, Assignment(bindings={2: 0}))
        with pytest.raises(InconsistentEvidenceError):
            require_consistent(sprinkler, Assignment(bindings={0: 1, 1: 1, 2: 0}))


class TestSampling:
    def test_sample_index_frequencies(self):
        rng = np.random.default_rng(0)
        draws = [sample_index(np.array([0.2, 0.8]), rng) for _ in range(20_000)]
        assert np.mean(draws) == pytest.approx(0.8, abs=0.015)

    def test_sample_index_skips_zero_mass(self):
        rng = np.random.default_rng(0)
        assert {sample_index(np.array([0.0, 1.0, 0.0]), rng) for _ in range(1000)} == {1}

    def test_sample_index_tolerates_loose_rows(self):
        rng = np.random.default_rng(0)
        draws = {sample_index(np.array([0.5, 0.5000005]), rng) for _ in range(1000)}
        assert draws == {0, 1}

    def test_forward_sample_marginal(self, sprinkler):
        rng = np.random.default_rng(9)
        samples = [forward_sample(sprinkler, rng) for _ in range(10_000)]
        assert all(s.is_full(sprinkler) for s in samples)
        rain = np.mean([s[0] == 0 for s in samples])
        wet = np.mean([s[2] == 0 for s in samples])
        assert rain == pytest.approx(0.2, abs=0.015)
        assert wet == pytest.approx(P_EVIDENCE, abs=0.02)


class TestPrune:
    def test_barren_leaf_is_dropped(self, sprinkler):
        pruned = prune(sprinkler, MapProblem(map_vars=(1,)))
        assert pruned.dropped == (2,)
        assert len(pruned.components) == 1
        assert pruned.components[0].origin == (0, 1)

    def test_relevant_variables(self, sprinkler):
        assert relevant_variables(sprinkler, {1}) == {0, 1}
        assert relevant_variables(sprinkler, {2}) == {0, 1, 2}

    def test_independent_trees_split(self):
        net = parse_network(TWO_TREES)
        problem = parse_problem("map A B\nevidence C=t D=f\n", net)
        pruned = prune(net, problem)
        assert [c.origin for c in pruned.components] == [(0, 2), (1, 3)]
        assert [c.network.name for c in pruned.components] == ["trees_part0", "trees_part1"]
        assert pruned.components[1].problem.map_vars == (0,)
        assert pruned.components[1].problem.evidence.bindings == {1: 1}

    def test_piece_without_map_variable_is_discarded(self):
        net = parse_network(TWO_TREES)
        pruned = prune(net, parse_problem("map A\nevidence D=t\n", net))
        assert [c.origin for c in pruned.components] == [(0,)]
        assert pruned.discarded == (1, 3)
        assert pruned.dropped == (2,)

    def test_components_preserve_the_posterior(self):
        net = parse_network(TWO_TREES)
        problem = parse_problem("map A B\nevidence C=t D=f\n", net)
        expected = enumerate_posterior(net, problem)
        pruned = prune(net, problem)
        for key, p in expected.items():
            x = Assignment.of(dict(zip(problem.map_vars, key)))
            local = sum(
                map_posterior(c.network, c.lower(x), c.problem.evidence)
                for c in pruned.components
            )
            assert math.exp(local) == pytest.approx(p, abs=1e-12)

    def test_barren_chain_cascades(self):
        net = parse_network(
            "network chain\nvar A { t, f }\nvar B { t, f }\nvar C { t, f }\n"
            "cpt A { 0.3 0.7 }\ncpt B | A { 0.9 0.1; 0.2 0.8 }\ncpt C | B { 0.5 0.5; 0.1 0.9 }\n"
        )
        pruned = prune(net, MapProblem(map_vars=(0,)))
        assert pruned.dropped == (1, 2)
        assert [c.origin for c in pruned.components] == [(0,)]

    def test_pruning_invariance_on_random_networks(self):
        rng = np.random.default_rng(40)
        for net in random_corpus(40, seed=40):
            problem = random_problem(net, rng)
            pruned = prune(net, problem)
            expected = enumerate_posterior(net, problem)
            for key, p in expected.items():
                x = Assignment.of(dict(zip(problem.map_vars, key)))
                logs = [
                    map_posterior(c.network, c.lower(x), c.problem.evidence)
                    for c in pruned.components
                ]
                product = 0.0 if -math.inf in logs else math.exp(math.fsum(logs))
                assert product == pytest.approx(p, abs=1e-12)
