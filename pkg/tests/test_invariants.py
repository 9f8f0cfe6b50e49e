"""Cross-cutting property tests tying the engines together."""

from __future__ import annotations

import random
from fractions import Fraction

from quanta import (
    INF, LIMINF, NestedWeightedAutomaton, analyze_limavg_nwa,
    bsum_nwa_to_inf_wa, check_equivalence_on_prefixes, check_width_bound,
    mca_to_nwa, monte_carlo_estimate, nwa_to_mca, sample_words,
    simulate_nwa_prefix,
)
from quanta.analysis import _as_bsum_nwa
from quanta.core import slave_outcome
from quanta.gen import build_art, build_blocks_diff, request_grant_chain, uniform_chain
from quanta.markov import LabeledMarkovChain
from quanta.nwa import Completed

from conftest import random_connected_nwa

F = Fraction


def active_counts(nwa, word):
    """Number of slaves reading each position, from the prefix trace."""
    trace = simulate_nwa_prefix(nwa, word)
    spans = []
    for p, o in enumerate(trace.outcomes):
        if isinstance(o, Completed):
            if o.value is None or o.value is trace:  # unreachable guard
                continue
            from quanta import BOTTOM

            if o.value is BOTTOM:
                continue
            _kind, _value, steps = slave_outcome(
                nwa.slave(nwa.master.transitions[
                    (trace.master_states[p], word[p])][1]), word[p:])
            spans.append((p, p + steps - 1))
        elif o.__class__.__name__ == "StillRunning":
            spans.append((p, len(word) - 1))
    counts = [0] * len(word)
    for (start, end) in spans:
        for t in range(start, end + 1):
            counts[t] += 1
    return counts


class TestWidthAgainstSimulation:
    def test_bounded_width_never_exceeded_on_random_prefixes(self):
        art = build_art(3)
        chain = request_grant_chain()
        assert check_width_bound(art, 3).bounded
        words = sample_words(chain, 30, seed=33, count=10_000)
        for word in words:
            assert max(active_counts(art, word), default=0) <= 3

    def test_exceeding_instance_witnessed_in_simulation(self, rng):
        # a slave that waits for 'b' while the master relaunches it on 'a'
        from conftest import make_master, make_wa

        slave = make_wa(("a", "b"), {("s0", "a"): ("s0", 1),
                                     ("s0", "b"): ("acc", 0)},
                        initial="s0", accepting={"acc"})
        master = make_master(("a", "b"), {("m0", "a"): ("m0", 1),
                                          ("m0", "b"): ("m0", 1)})
        nwa = NestedWeightedAutomaton(master=master, master_fn=LIMINF,
                                      slaves=(slave,))
        res = check_width_bound(nwa, 2)
        assert not res.bounded
        counts = active_counts(nwa, res.witness)
        assert max(counts) == 3


class TestRandomTranslationRoundTrips:
    def test_random_instances_round_trip(self):
        rng = random.Random(31337)
        done = 0
        while done < 8:
            nwa = random_connected_nwa(rng, LIMINF, max_master_states=3,
                                       n_slaves=2, max_slave_states=2)
            tight = next((k for k in range(13)
                          if check_width_bound(nwa, k).bounded), None)
            if tight is None:
                continue
            mca = nwa_to_mca(nwa, tight)
            assert check_equivalence_on_prefixes(nwa, mca,
                                                 max_len=6).equivalent
            back = mca_to_nwa(mca)
            assert check_equivalence_on_prefixes(mca, back,
                                                 max_len=6).equivalent
            done += 1


class TestMonteCarloConvergence:
    def test_limavg_interval_shrinks_and_contains_exact(self):
        art = build_art(2)
        chain = request_grant_chain()
        exact = float(analyze_limavg_nwa(art, chain).expected)
        widths = []
        for horizon in (1000, 10_000, 100_000):
            est = monte_carlo_estimate(art, chain, horizon=horizon,
                                       samples=2000, seed=77, max_active=2)
            ci = 4 * est.stderr()
            widths.append(ci)
            assert abs(est.mean - exact) <= ci
        assert widths[0] > widths[1] > widths[2]

    def test_within_4_sigma_in_most_repetitions(self):
        art = build_art(2)
        chain = request_grant_chain()
        hits = 0
        for seed in range(20):
            est = monte_carlo_estimate(art, chain, horizon=2000,
                                       samples=1000, seed=seed, max_active=2)
            if abs(est.mean - 2.0) <= 4 * est.stderr():
                hits += 1
        assert hits >= 19

    def test_mca_and_translated_nwa_estimates_coincide(self):
        # same seed, same words, emissions at identical positions: the
        # estimators see the very same value stream
        blocks = build_blocks_diff()
        nwa = mca_to_nwa(blocks)
        chain = LabeledMarkovChain(
            alphabet=("a", "#"), states=("c0", "c1", "c2", "c3"),
            initial="c0",
            edge_prob={("c0", "#", "c1"): F(1), ("c1", "#", "c2"): F(1),
                       ("c2", "a", "c2"): F(1, 2), ("c2", "#", "c3"): F(1, 2),
                       ("c3", "a", "c3"): F(1, 2), ("c3", "#", "c0"): F(1, 2)})
        kw = dict(horizon=400, samples=400, seed=41, burn_in=0)
        e1 = monte_carlo_estimate(blocks, chain, **kw)
        e2 = monte_carlo_estimate(nwa, chain, **kw)
        assert e1.rejection_rate == 0
        assert e1.mean == e2.mean
        assert e1.samples_used == e2.samples_used


class TestInfAgainstDeterministicTails:
    def test_branching_chain_matches_word_enumeration(self):
        # the chain commits on the first letter to an all-a or all-b tail,
        # so both possible words are fully deterministic and the automaton
        # value on each can be read off a long-enough prefix simulation;
        # the distribution must be the two-point mixture
        rng = random.Random(777)
        chain = LabeledMarkovChain(
            alphabet=("a", "b"), states=("t", "x", "y"), initial="t",
            edge_prob={("t", "a", "x"): F(1, 3), ("t", "b", "y"): F(2, 3),
                       ("x", "a", "x"): F(1), ("y", "b", "y"): F(1)})
        from quanta import analyze_inf_exact
        from quanta.analysis import NotAlmostSureAccepting, almost_sure_acceptance

        checked = 0
        attempts = 0
        while checked < 10 and attempts < 200:
            attempts += 1
            nwa = random_connected_nwa(rng, INF, max_master_states=3,
                                       n_slaves=2, max_slave_states=2,
                                       forbid_negative_cycles=True)
            if not almost_sure_acceptance(nwa, chain).ok:
                continue

            def word_value(letter):
                word = (letter,) * 64
                trace = simulate_nwa_prefix(nwa, word)
                assert trace.first_rejection() is None
                values = trace.completed_map()
                early = min(v for p, v in values.items() if p <= 40)
                late = min(v for p, v in values.items())
                assert early == late, "value not settled within the prefix"
                return early

            expected_points = {}
            for letter, mass in (("a", F(1, 3)), ("b", F(2, 3))):
                v = F(word_value(letter))
                expected_points[v] = expected_points.get(v, F(0)) + mass
            rep = analyze_inf_exact(nwa, chain)
            assert dict(rep.distribution.points) == expected_points
            checked += 1
        assert checked == 10


class TestEngineCrossChecks:
    def test_liminf_engine_agrees_with_compiled_automaton(self):
        # two unrelated exact pipelines: per-SCC minimal achievable values
        # via shortest paths, versus compiling the nested automaton into a
        # plain weighted automaton (per-position completion minima as
        # weights) and reading end-SCC extrema off the product
        rng = random.Random(888)
        chain = uniform_chain(("a", "b"))
        from dataclasses import replace as dc_replace

        from quanta import analyze_liminf_nwa, bsum
        from quanta.analysis import _as_bsum_nwa, analyze_deterministic_wa

        for _ in range(10):
            nwa = random_connected_nwa(rng, LIMINF, max_master_states=3,
                                       n_slaves=2, max_slave_states=2,
                                       forbid_negative_cycles=True)
            direct = analyze_liminf_nwa(nwa, chain)
            compiled = bsum_nwa_to_inf_wa(dc_replace(
                _as_bsum_nwa(nwa, 64), master_fn=INF))
            via_wa = analyze_deterministic_wa(
                dc_replace(compiled, value_fn=LIMINF), chain)
            assert via_wa.distribution.points == direct.distribution.points

    def test_random_limavg_instances_match_monte_carlo(self):
        rng = random.Random(999)
        chain = uniform_chain(("a", "b"))
        from quanta import LIMAVG

        for i in range(6):
            nwa = random_connected_nwa(rng, LIMAVG, max_master_states=3,
                                       n_slaves=2, max_slave_states=2)
            exact = analyze_limavg_nwa(nwa, chain)
            est = monte_carlo_estimate(nwa, chain, horizon=4000,
                                       samples=2000, seed=4242 + i)
            assert est.rejection_rate < 0.01
            assert abs(est.mean - float(exact.expected)) < max(
                6 * est.stderr(), 0.05)


class TestApproxSandwich:
    def test_clip_at_bound_and_double_bound_agree(self):
        rng = random.Random(1212)
        chain = uniform_chain(("a", "b"))
        for _ in range(10):
            nwa = random_connected_nwa(rng, INF, max_master_states=3,
                                       n_slaves=2, max_slave_states=2,
                                       forbid_negative_cycles=True)
            from quanta import unary_size
            from quanta.analysis import analyze_deterministic_wa

            b = unary_size(nwa) + 1
            rep_b = analyze_deterministic_wa(
                bsum_nwa_to_inf_wa(_as_bsum_nwa(nwa, b)), chain)
            rep_2b = analyze_deterministic_wa(
                bsum_nwa_to_inf_wa(_as_bsum_nwa(nwa, 2 * b)), chain)
            assert abs(rep_b.expected - rep_2b.expected) <= F(1, 100)
            assert rep_b.distribution.points == rep_2b.distribution.points
