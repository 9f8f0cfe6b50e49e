"""Tests for core value functions, run semantics, duality, and slave
normalization."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from quanta import (
    BOTTOM, EmptyAfterFilter, INF, LIMAVG, LIMINF, LIMSUP, MAX, MIN,
    POS_INF, SUM, SUM_PLUS, SUP, NotDualizable, apply_finval, bsum,
    dualize, estimate_infval, normalize_slave, run_weighted_finite,
    slave_outcome, to_sum_slave,
)
from quanta.nwa import simulate_nwa_prefix

from conftest import all_words, make_master, make_wa


def outcome_sig(outcome):
    """Completion value / rejection position, ignoring internal states."""
    return outcome[:1] if outcome[0] == "running" else outcome


class TestApplyFinval:
    def test_sum(self):
        assert apply_finval(SUM, [1, -2, 3]) == 2

    def test_bsum_clips_at_first_excess(self):
        assert apply_finval(bsum(2), [1, 1, 1]) == 2

    def test_bsum_negative_excess(self):
        assert apply_finval(bsum(2), [-1, -2, 5]) == -2

    def test_bsum_boundary_not_clipped(self):
        # |prefix| == bound is allowed
        assert apply_finval(bsum(2), [2, -4, 2]) == 0

    def test_empty_is_bottom(self):
        assert apply_finval(MIN, []) is BOTTOM

    def test_sum_plus(self):
        assert apply_finval(SUM_PLUS, [1, -2]) == 3

    def test_min_max(self):
        assert apply_finval(MIN, [3, 1, 2]) == 1
        assert apply_finval(MAX, [3, 1, 2]) == 3

    @given(st.lists(st.integers(-5, 5), min_size=1),
           st.integers(min_value=1, max_value=4))
    def test_bsum_stays_within_bound(self, seq, b):
        v = apply_finval(bsum(b), seq)
        assert -b <= v <= b

    @given(st.lists(st.integers(-5, 5), min_size=1))
    def test_sum_plus_dominates_sum(self, seq):
        plus = apply_finval(SUM_PLUS, seq)
        total = apply_finval(SUM, seq)
        assert plus >= abs(total) and plus >= 0


class TestRunWeightedFinite:
    @pytest.fixture
    def counter(self):
        return make_wa(
            ("a", "#"),
            {("q0", "a"): ("q0", 1), ("q0", "#"): ("acc", 0)},
            accepting={"acc"})

    def test_accepting_word(self, counter):
        assert run_weighted_finite(counter, tuple("aa#")) == 2

    def test_word_off_the_map_is_infinite(self, counter):
        assert run_weighted_finite(counter, tuple("aa#a")) == POS_INF

    def test_nonaccepting_end_is_infinite(self, counter):
        assert run_weighted_finite(counter, tuple("aa")) == POS_INF

    def test_empty_word_accepting_initial(self):
        wa = make_wa(("a",), {("q0", "a"): ("q0", 1)}, accepting={"q0"})
        assert run_weighted_finite(wa, ()) is BOTTOM

    def test_empty_word_rejecting_initial(self):
        wa = make_wa(("a",), {("q0", "a"): ("q0", 1)}, accepting=set())
        assert run_weighted_finite(wa, ()) == POS_INF


class TestEstimateInfval:
    def test_limavg_skips_bottom(self):
        assert estimate_infval(LIMAVG, [1, BOTTOM, 3]) == 2

    def test_inf_is_min(self):
        assert estimate_infval(INF, [5, 2, 9]) == 2

    def test_burn_in_is_positional(self):
        assert estimate_infval(LIMINF, [9, 1, 1, 1], burn_in=1) == 1

    def test_empty_after_filter(self):
        with pytest.raises(EmptyAfterFilter):
            estimate_infval(LIMAVG, [BOTTOM, BOTTOM], burn_in=0)


class TestDualize:
    def test_letter_valued_negation(self):
        wa = make_wa(("a", "b"),
                     {("q0", "a"): ("q0", 1), ("q0", "b"): ("q0", 2)},
                     value_fn=LIMSUP, word_mode="infinite")
        dual = dualize(wa)
        assert dual.value_fn == LIMINF
        assert sorted(w for w in dual.weights()) == [-2, -1]

    def test_involution(self):
        wa = make_wa(("a", "b"),
                     {("q0", "a"): ("q1", 3), ("q0", "b"): ("q0", -1),
                      ("q1", "a"): ("q0", 0), ("q1", "b"): ("q1", 2)},
                     value_fn=SUP, word_mode="infinite")
        back = dualize(dualize(wa))
        assert back.transitions == wa.transitions
        assert back.value_fn == wa.value_fn

    def test_sum_plus_refused(self):
        wa = make_wa(("a",), {("q0", "a"): ("q0", 1)}, value_fn=SUM_PLUS)
        with pytest.raises(NotDualizable):
            dualize(wa)

    def test_limavg_refused(self):
        wa = make_wa(("a",), {("q0", "a"): ("q0", 1)},
                     value_fn=LIMAVG, word_mode="infinite")
        with pytest.raises(NotDualizable):
            dualize(wa)

    def test_nwa_prefix_values_negate(self):
        from quanta import NestedWeightedAutomaton

        slave = make_wa(("a", "b"),
                        {("s0", "a"): ("acc", 1), ("s0", "b"): ("acc", 2)},
                        initial="s0", accepting={"acc"})
        master = make_master(("a", "b"),
                             {("m0", "a"): ("m0", 1), ("m0", "b"): ("m0", 1)})
        nwa = NestedWeightedAutomaton(master=master, master_fn=LIMSUP,
                                      slaves=(slave,))
        dual = dualize(nwa)
        assert dual.master_fn == LIMINF
        word = tuple("abba")
        vals = simulate_nwa_prefix(nwa, word).completed_map()
        dual_vals = simulate_nwa_prefix(dual, word).completed_map()
        assert dual_vals == {p: -v for p, v in vals.items()}

    def test_dual_negates_on_accepted_words(self, rng):
        for _ in range(10):
            wa = make_wa(
                ("a", "b"),
                {(f"q{i}", x): (f"q{rng.randint(0, 2)}", rng.randint(-3, 3))
                 for i in range(3) for x in "ab"},
                value_fn=random.Random(rng.random()).choice([MIN, MAX, SUM]),
                accepting={"q0", "q1"})
            dual = dualize(wa)
            for word in all_words(("a", "b"), 8):
                v = run_weighted_finite(wa, word)
                dv = run_weighted_finite(dual, word)
                if v == POS_INF:
                    assert dv == POS_INF  # rejection stays rejection
                elif v is BOTTOM:
                    assert dv is BOTTOM
                else:
                    assert dv == -v


class TestNormalizeSlave:
    def test_min_example(self):
        slave = make_wa(
            ("a", "b"),
            {("s0", "a"): ("s1", 5), ("s1", "a"): ("s2", 1),
             ("s2", "a"): ("acc", 5), ("s0", "b"): ("acc", 5)},
            initial="s0", accepting={"acc"}, value_fn=MIN)
        norm = normalize_slave(slave)
        assert norm.value_fn.kind == "bsum"
        word = tuple("aaa")
        assert run_weighted_finite(slave, word) == 1
        assert run_weighted_finite(norm, word) == 1

    def test_single_transition(self):
        slave = make_wa(("a",), {("s0", "a"): ("acc", 7)}, initial="s0",
                        accepting={"acc"}, value_fn=MIN)
        norm = normalize_slave(slave)
        assert run_weighted_finite(norm, ("a",)) == 7

    def test_state_bound(self, rng):
        for _ in range(20):
            n = rng.randint(1, 4)
            trans = {}
            weights = set()
            for i in range(n):
                for x in "ab":
                    w = rng.randint(-3, 3)
                    weights.add(w)
                    target = rng.choice([f"s{j}" for j in range(n)] + ["acc"])
                    trans[(f"s{i}", x)] = (target, w)
            slave = make_wa(("a", "b"), trans, initial="s0",
                            accepting={"acc"}, value_fn=MAX)
            norm = normalize_slave(slave)
            assert len(norm.states) <= len(slave.states) * len(weights)

    def test_exhaustive_value_equality(self, rng):
        for _ in range(15):
            n = rng.randint(1, 4)
            fn = rng.choice([MIN, MAX])
            trans = {}
            for i in range(n):
                for x in "ab":
                    if rng.random() < 0.85:
                        target = rng.choice(
                            [f"s{j}" for j in range(n)] + ["acc"])
                        trans[(f"s{i}", x)] = (target, rng.randint(-3, 3))
            slave = make_wa(("a", "b"), trans, initial="s0",
                            accepting={"acc"}, value_fn=fn)
            norm = normalize_slave(slave)
            for word in all_words(("a", "b"), 6):
                assert (outcome_sig(slave_outcome(slave, word))
                        == outcome_sig(slave_outcome(norm, word))), (trans, fn, word)


class TestToSumSlave:
    @pytest.mark.parametrize("fn", [MIN, MAX, SUM_PLUS, bsum(2), SUM])
    def test_value_equivalent(self, fn, rng):
        for _ in range(10):
            n = rng.randint(1, 3)
            trans = {}
            for i in range(n):
                for x in "ab":
                    if rng.random() < 0.9:
                        target = rng.choice(
                            [f"s{j}" for j in range(n)] + ["acc"])
                        trans[(f"s{i}", x)] = (target, rng.randint(-3, 3))
            slave = make_wa(("a", "b"), trans, initial="s0",
                            accepting={"acc"}, value_fn=fn)
            summed = to_sum_slave(slave)
            assert summed.value_fn.kind == "sum"
            for word in all_words(("a", "b"), 6):
                assert (outcome_sig(slave_outcome(slave, word))
                        == outcome_sig(slave_outcome(summed, word)))
