"""Tests for chains: validation, prefix probabilities, products, SCCs,
absorption, stationary distributions, and mean payoff with silent moves."""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from quanta import (
    BOTTOM, INF, LIMAVG, AllSilentEndScc, LabeledMarkovChain, NotIrreducible,
    end_sccs, limavg_of_chain, product_chain, reach_probabilities,
    stationary_distribution, validate_chain, word_prefix_probability,
)
from quanta.gen import uniform_chain
from quanta.markov import solve_linear

from conftest import make_wa

F = Fraction


class TestSolveLinear:
    def test_exact_solution(self):
        a = [[F(1), F(2)], [F(3), F(4)]]
        x = solve_linear(a, [F(5), F(6)])
        assert x == [F(-4), F(9, 2)]

    def test_singular_rejected(self):
        from quanta import SingularSystem

        with pytest.raises(SingularSystem):
            solve_linear([[F(1), F(1)], [F(2), F(2)]], [F(1), F(2)])


class TestValidateChain:
    def test_uniform_valid(self):
        assert validate_chain(uniform_chain(("a", "b"))).ok

    def test_row_sum_violation(self):
        m = LabeledMarkovChain(
            alphabet=("a",), states=("u",), initial="u",
            edge_prob={("u", "a", "u"): F(9, 10)})
        report = validate_chain(m)
        assert not report.ok and "9/10" in report.errors[0]

    def test_negative_probability_rejected(self):
        with pytest.raises(ValueError):
            LabeledMarkovChain(
                alphabet=("a",), states=("u",), initial="u",
                edge_prob={("u", "a", "u"): F(-1, 2)})


class TestWordPrefixProbability:
    def test_uniform_pair(self):
        m = uniform_chain(("a", "b"))
        assert word_prefix_probability(m, tuple("ab")) == F(1, 4)

    def test_empty_word(self):
        assert word_prefix_probability(uniform_chain(("a",)), ()) == 1

    def test_matches_path_enumeration(self):
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("x", "y"), initial="x",
            edge_prob={("x", "a", "x"): F(1, 3), ("x", "a", "y"): F(1, 3),
                       ("x", "b", "y"): F(1, 3), ("y", "a", "x"): F(1, 2),
                       ("y", "b", "y"): F(1, 2)})
        for word in itertools.product("ab", repeat=3):
            # brute force over labeled paths
            total = F(0)
            paths = [("x", F(1))]
            for a in word:
                nxt = []
                for (s, p) in paths:
                    for (s1, b, s2), q in m.edge_prob.items():
                        if s1 == s and b == a:
                            nxt.append((s2, p * q))
                paths = nxt
            total = sum((p for _s, p in paths), F(0))
            assert word_prefix_probability(m, word) == total


class TestProductChain:
    def test_one_state_automaton_is_identity(self):
        m = uniform_chain(("a", "b"))
        wa = make_wa(("a", "b"), {("q0", "a"): ("q0", 1), ("q0", "b"): ("q0", 2)},
                     value_fn=LIMAVG, word_mode="infinite")
        prod = product_chain(wa, m)
        assert prod.sink is None
        assert len(prod.chain.states) == 1
        assert prod.chain.weight((("q0", "u"), "a", ("q0", "u"))) == 1

    def test_weights_add_across_the_product(self):
        m = LabeledMarkovChain(
            alphabet=("a",), states=("u",), initial="u",
            edge_prob={("u", "a", "u"): F(1)}, weights={("u", "a", "u"): 5})
        wa = make_wa(("a",), {("q0", "a"): ("q0", 2)},
                     value_fn=LIMAVG, word_mode="infinite")
        prod = product_chain(wa, m)
        assert prod.chain.weight((("q0", "u"), "a", ("q0", "u"))) == 7
        # a silent automaton step keeps only the chain's contribution
        from quanta import BOTTOM

        silent = make_wa(("a",), {("q0", "a"): ("q0", BOTTOM)},
                         value_fn=LIMAVG, word_mode="infinite")
        prod2 = product_chain(silent, m)
        assert prod2.chain.weight((("q0", "u"), "a", ("q0", "u"))) == 5

    def test_rejecting_sink_mass(self):
        m = uniform_chain(("a", "b"))
        # automaton dies on 'b' from q0; survives forever on a-loop? no:
        # every step has 1/2 chance of 'b', so rejection mass is 1
        wa = make_wa(("a", "b"), {("q0", "a"): ("q0", 0)},
                     value_fn=INF, word_mode="infinite")
        prod = product_chain(wa, m)
        assert prod.sink is not None
        assert prod.rejecting_mass() == 1

    def test_partial_rejection_mass(self):
        # first letter decides: 'b' rejects immediately, 'a' is safe forever
        m = uniform_chain(("a", "b"))
        wa = make_wa(("a", "b"),
                     {("q0", "a"): ("q1", 0),
                      ("q1", "a"): ("q1", 0), ("q1", "b"): ("q1", 1)},
                     value_fn=INF, word_mode="infinite")
        prod = product_chain(wa, m)
        assert prod.rejecting_mass() == F(1, 2)


class TestEndSccs:
    def test_irreducible_chain(self):
        m = uniform_chain(("a", "b"))
        assert end_sccs(m) == [frozenset({"u"})]

    def test_transient_feeding_two_absorbers(self):
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("t", "x", "y"), initial="t",
            edge_prob={("t", "a", "x"): F(1, 3), ("t", "b", "y"): F(2, 3),
                       ("x", "a", "x"): F(1), ("y", "a", "y"): F(1)})
        comps = {frozenset(c) for c in end_sccs(m)}
        assert comps == {frozenset({"x"}), frozenset({"y"})}

    def test_every_state_reaches_an_end_scc(self, rng):
        for _ in range(10):
            n = rng.randint(2, 6)
            states = [f"s{i}" for i in range(n)]
            probs = {}
            for s in states:
                targets = rng.sample(states, rng.randint(1, 2))
                p = F(1, len(targets))
                for i, t in enumerate(targets):
                    probs[(s, "a", t)] = probs.get((s, "a", t), F(0)) + p
            m = LabeledMarkovChain(alphabet=("a",), states=tuple(states),
                                   initial="s0", edge_prob=probs)
            sccs = end_sccs(m)
            masses = reach_probabilities(m, sccs)
            assert sum(masses, F(0)) == 1


class TestReachProbabilities:
    def test_two_way_split(self):
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("t", "x", "y"), initial="t",
            edge_prob={("t", "a", "x"): F(1, 3), ("t", "b", "y"): F(2, 3),
                       ("x", "a", "x"): F(1), ("y", "a", "y"): F(1)})
        assert reach_probabilities(
            m, [frozenset({"x"}), frozenset({"y"})]) == [F(1, 3), F(2, 3)]

    def test_initial_inside_target(self):
        m = uniform_chain(("a",))
        assert reach_probabilities(m, [frozenset({"u"})]) == [F(1)]

    def test_random_walk_matches_truncated_enumeration(self):
        # 4-state walk: 0 and 3 absorbing, 1 and 2 step left/right evenly
        probs = {("s0", "a", "s0"): F(1), ("s3", "a", "s3"): F(1)}
        for i in (1, 2):
            probs[(f"s{i}", "a", f"s{i - 1}")] = F(1, 2)
            probs[(f"s{i}", "b", f"s{i + 1}")] = F(1, 2)
        m = LabeledMarkovChain(alphabet=("a", "b"),
                               states=("s0", "s1", "s2", "s3"),
                               initial="s1", edge_prob=probs)
        exact = reach_probabilities(m, [frozenset({"s0"}), frozenset({"s3"})])
        assert exact == [F(2, 3), F(1, 3)]
        # truncated path enumeration to depth 20
        reach0 = F(0)
        layer = {"s1": F(1)}
        for _ in range(20):
            nxt = {}
            for s, mass in layer.items():
                for (s1, _a, s2), p in m.edge_prob.items():
                    if s1 != s:
                        continue
                    if s2 == "s0":
                        reach0 += mass * p
                    elif s2 != "s3":
                        nxt[s2] = nxt.get(s2, F(0)) + mass * p
            layer = nxt
        assert abs(exact[0] - reach0) < F(1, 10 ** 6)


class TestStationary:
    def test_symmetric_flip(self):
        m = LabeledMarkovChain(
            alphabet=("a",), states=("x", "y"), initial="x",
            edge_prob={("x", "a", "y"): F(1), ("y", "a", "x"): F(1)})
        assert stationary_distribution(m, {"x", "y"}) == {"x": F(1, 2),
                                                          "y": F(1, 2)}

    def test_self_loop_only(self):
        m = uniform_chain(("a",))
        assert stationary_distribution(m, {"u"}) == {"u": F(1)}

    def test_not_irreducible(self):
        m = LabeledMarkovChain(
            alphabet=("a",), states=("x", "y"), initial="x",
            edge_prob={("x", "a", "y"): F(1), ("y", "a", "y"): F(1)})
        with pytest.raises(NotIrreducible):
            stationary_distribution(m, {"x", "y"})

    def test_three_cycle_matches_power_iteration(self):
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("x", "y", "z"), initial="x",
            edge_prob={("x", "a", "y"): F(3, 4), ("x", "b", "x"): F(1, 4),
                       ("y", "a", "z"): F(2, 3), ("y", "b", "x"): F(1, 3),
                       ("z", "a", "x"): F(1)})
        pi = stationary_distribution(m, {"x", "y", "z"})
        vec = {"x": 1.0, "y": 0.0, "z": 0.0}
        for _ in range(1000):
            nxt = {s: 0.0 for s in vec}
            for (s, _a, s2), p in m.edge_prob.items():
                nxt[s2] += vec[s] * float(p)
            vec = nxt
        for s in vec:
            assert abs(vec[s] - float(pi[s])) < 1e-9


class TestLimAvgOfChain:
    def test_deterministic_two_cycle(self):
        m = LabeledMarkovChain(
            alphabet=("a",), states=("p", "q"), initial="p",
            edge_prob={("p", "a", "q"): F(1), ("q", "a", "p"): F(1)},
            weights={("p", "a", "q"): 1, ("q", "a", "p"): 3})
        assert limavg_of_chain(m).overall == 2

    def test_silent_edge_removed(self):
        m = LabeledMarkovChain(
            alphabet=("a",), states=("p", "q"), initial="p",
            edge_prob={("p", "a", "q"): F(1), ("q", "a", "p"): F(1)},
            weights={("p", "a", "q"): 1, ("q", "a", "p"): BOTTOM})
        assert limavg_of_chain(m).overall == 1

    def test_half_silent_state(self):
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("p",), initial="p",
            edge_prob={("p", "a", "p"): F(1, 2), ("p", "b", "p"): F(1, 2)},
            weights={("p", "a", "p"): 1, ("p", "b", "p"): BOTTOM})
        assert limavg_of_chain(m).overall == 1

    def test_letter_weights(self):
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("p",), initial="p",
            edge_prob={("p", "a", "p"): F(1, 2), ("p", "b", "p"): F(1, 2)},
            weights={("p", "a", "p"): 0, ("p", "b", "p"): 1})
        assert limavg_of_chain(m).overall == F(1, 2)

    def test_all_silent_flagged(self):
        m = LabeledMarkovChain(
            alphabet=("a",), states=("p",), initial="p",
            edge_prob={("p", "a", "p"): F(1)},
            weights={("p", "a", "p"): BOTTOM})
        with pytest.raises(AllSilentEndScc):
            limavg_of_chain(m)

    def test_silent_split_invariance(self):
        # replacing a weight-w edge by w followed by a silent hop through a
        # fresh state keeps the mean payoff
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("p", "q"), initial="p",
            edge_prob={("p", "a", "q"): F(1), ("q", "a", "p"): F(1, 2),
                       ("q", "b", "q"): F(1, 2)},
            weights={("p", "a", "q"): 4, ("q", "a", "p"): 1,
                     ("q", "b", "q"): 2})
        split = LabeledMarkovChain(
            alphabet=("a", "b"), states=("p", "mid", "q"), initial="p",
            edge_prob={("p", "a", "mid"): F(1), ("mid", "a", "q"): F(1),
                       ("q", "a", "p"): F(1, 2), ("q", "b", "q"): F(1, 2)},
            weights={("p", "a", "mid"): 4, ("mid", "a", "q"): BOTTOM,
                     ("q", "a", "p"): 1, ("q", "b", "q"): 2})
        assert limavg_of_chain(m).overall == limavg_of_chain(split).overall

    def test_mixture_across_end_sccs(self):
        m = LabeledMarkovChain(
            alphabet=("a", "b"), states=("t", "x", "y"), initial="t",
            edge_prob={("t", "a", "x"): F(1, 3), ("t", "b", "y"): F(2, 3),
                       ("x", "a", "x"): F(1), ("y", "a", "y"): F(1)},
            weights={("x", "a", "x"): 1, ("y", "a", "y"): 4})
        res = limavg_of_chain(m)
        assert res.overall == F(1) * F(1, 3) + F(4) * F(2, 3)
