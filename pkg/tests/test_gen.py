"""Tests for the example builders and reduction-style generators."""

from __future__ import annotations

from fractions import Fraction

import pytest

from quanta import (
    LIMAVG, analyze_inf_exact, check_width_bound, simulate_mca_prefix,
    simulate_nwa_prefix, validate_mca, validate_nwa, word_prefix_probability,
)
from quanta.gen import (
    build_art, build_blocks_diff, cnf_to_nwa, count_satisfying_assignments,
    intersection_to_nwa, request_grant_chain, uniform_chain,
)

from conftest import make_master

F = Fraction


class TestBlocksDiff:
    def test_block_value(self):
        trace = simulate_mca_prefix(build_blocks_diff(),
                                    tuple("##aa#aaaaa#"))
        assert sorted(v for _p, v in trace.emissions) == [-3, 3]

    def test_equal_blocks_cancel(self):
        trace = simulate_mca_prefix(build_blocks_diff(), tuple("##a#a#"))
        assert sorted(v for _p, v in trace.emissions) == [0, 0]

    def test_off_language_word_gets_stuck(self):
        trace = simulate_mca_prefix(build_blocks_diff(), tuple("a"))
        assert trace.stuck == 0

    def test_valid(self):
        assert validate_mca(build_blocks_diff()).ok


class TestArt:
    def test_width_bounded_by_k(self):
        for k in (1, 2, 3):
            assert check_width_bound(build_art(k), k).bounded

    def test_slave_value_on_requests(self):
        trace = simulate_nwa_prefix(build_art(2), tuple("r##g"))
        assert trace.completed_map() == {0: 3}

    def test_valid(self):
        assert validate_nwa(build_art(2)).ok

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            build_art(0)

    def test_master_function(self):
        assert build_art(2).master_fn == LIMAVG


class TestUniformChain:
    def test_two_letters(self):
        m = uniform_chain(("a", "b"))
        assert m.edge_prob[("u", "a", "u")] == F(1, 2)
        assert word_prefix_probability(m, tuple("ab")) == F(1, 4)

    def test_single_letter(self):
        m = uniform_chain(("a",))
        assert word_prefix_probability(m, ("a",)) == 1


class TestCnf:
    def test_single_clause_two_vars(self):
        nwa = cnf_to_nwa([[1, 2]], 2)
        rep = analyze_inf_exact(nwa, uniform_chain(("0", "1")))
        assert rep.expected == F(3, 4)
        assert 1 - rep.cdf(F(0)) == F(3, 4)

    def test_unit_clause(self):
        rep = analyze_inf_exact(cnf_to_nwa([[1]], 1), uniform_chain(("0", "1")))
        assert rep.expected == F(1, 2)

    def test_unsatisfiable_pair(self):
        rep = analyze_inf_exact(cnf_to_nwa([[1], [-1]], 1),
                                uniform_chain(("0", "1")))
        assert rep.expected == 0 and rep.cdf(F(0)) == 1

    def test_value_by_direct_simulation(self):
        # the word's padding block is ignored; the assignment block decides
        nwa = cnf_to_nwa([[1, -2], [2]], 2)
        m, n = 2, 2
        for bits in range(4):
            assignment = format(bits, "02b")  # x1 = first letter
            word = tuple("00" + assignment + "0000")
            values = set(simulate_nwa_prefix(nwa, word).completed_map().values())
            x1, x2 = assignment[0] == "1", assignment[1] == "1"
            sat = (x1 or not x2) and x2
            clause_values = {F(1) if sat else F(0), F(1)}
            assert min(values) == (1 if sat else 0)

    def test_count_oracle(self):
        assert count_satisfying_assignments([[1, 2]], 2) == 3
        assert count_satisfying_assignments([[1], [-1]], 1) == 0
        assert count_satisfying_assignments([[1, -2], [2]], 2) == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cnf_to_nwa([], 1)


class TestIntersection:
    @staticmethod
    def dfa_ends_with(letter):
        """Accepts a/b words ending with the given letter."""
        trans = {}
        for q in ("e0", "e1"):
            trans[(q, "a")] = ("e1" if letter == "a" else "e0", 0)
            trans[(q, "b")] = ("e1" if letter == "b" else "e0", 0)
        return make_master(("a", "b"), trans, initial="e0",
                           accepting={"e1"})

    def test_common_word_reaches_value_one(self):
        # both automata accept "ab": ends-with-b and ends-with-b again
        d1 = self.dfa_ends_with("b")
        d2 = self.dfa_ends_with("b")
        nwa = intersection_to_nwa([d1, d2])
        word = tuple("xx".replace("x", "a")) + tuple("ab#")
        trace = simulate_nwa_prefix(nwa, word)
        clause_vals = [v for p, v in sorted(trace.completed_map().items())
                       if p < 2]
        assert clause_vals == [1, 1]

    def test_disjoint_languages_expected_zero(self):
        d1 = self.dfa_ends_with("a")
        d2 = self.dfa_ends_with("b")
        nwa = intersection_to_nwa([d1, d2])
        rep = analyze_inf_exact(nwa, uniform_chain(("a", "b", "#")))
        assert rep.expected == 0

    def test_equal_languages_expected_positive(self):
        d1 = self.dfa_ends_with("a")
        d2 = self.dfa_ends_with("a")
        nwa = intersection_to_nwa([d1, d2])
        rep = analyze_inf_exact(nwa, uniform_chain(("a", "b", "#")))
        # value 1 iff the body ends with 'a' and then '#'
        assert 0 < rep.expected < 1

    def test_expected_matches_body_enumeration(self):
        # enumerate bodies up to length 8; the tail of longer bodies is a
        # geometric remainder
        import itertools

        d1 = self.dfa_ends_with("a")
        d2 = self.dfa_ends_with("b")
        both = self.dfa_ends_with("a")
        for dfas in ([d1, d2], [both, self.dfa_ends_with("a")]):
            nwa = intersection_to_nwa(dfas)
            rep = analyze_inf_exact(nwa, uniform_chain(("a", "b", "#")))
            enum = F(0)
            for j in range(9):
                for body in itertools.product("ab", repeat=j):
                    ok = True
                    for d in dfas:
                        q = d.initial
                        for x in body:
                            q = d.step(q, x)[0]
                        ok = ok and q in d.accepting
                    if ok:
                        # the stagger block is arbitrary (mass 1); the body
                        # letters and the closing separator carry the mass
                        enum += F(1, 3) ** (j + 1)
            tail = F(2, 3) ** 9
            assert enum <= rep.expected <= enum + tail

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            intersection_to_nwa([])


class TestRequestGrantChain:
    def test_row_sums(self):
        from quanta import validate_chain

        assert validate_chain(request_grant_chain()).ok

    def test_art_pipeline_value(self):
        from quanta import analyze_limavg_nwa

        rep = analyze_limavg_nwa(build_art(2), request_grant_chain(F(1, 2)))
        assert rep.expected == 2
