"""Builders for the standard example automata and reduction-style
instances used as ground-truth generators in tests.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Sequence

from .core import (
    LIMAVG, SUP, INF, MIN, SUM, LabeledAutomaton, WeightedAutomaton,
)
from .markov import LabeledMarkovChain
from .mca import MonitorCounterAutomaton, START, TERMINATE
from .nwa import NestedWeightedAutomaton


def build_blocks_diff() -> MonitorCounterAutomaton:
    """The 4-state, 2-counter sup-automaton measuring the absolute length
    difference of consecutive letter blocks in words shaped
    ``##a^k#a^m#``: counter 1 accumulates k - m, counter 2 accumulates
    m - k, and both are terminated at the closing separator."""
    q0, q1, q2, q3 = "q0", "q1", "q2", "q3"
    trans = {
        (q0, "#"): (q1, (START, 0)),
        (q1, "#"): (q2, (0, START)),
        (q2, "a"): (q2, (1, -1)),
        (q2, "#"): (q3, (0, 0)),
        (q3, "a"): (q3, (-1, 1)),
        (q3, "#"): (q0, (TERMINATE, TERMINATE)),
    }
    return MonitorCounterAutomaton(
        alphabet=("a", "#"), states=(q0, q1, q2, q3), initial=q0,
        transitions=trans, accepting=frozenset({q0}), value_fn=SUP,
        counters=2)


def build_art(k: int) -> NestedWeightedAutomaton:
    """Average response time with at most ``k`` outstanding requests: on a
    request the master launches the response-time slave (which counts every
    letter up to and including nothing at the grant); null steps and grants
    launch a dummy.  The master accepts only words with infinitely many
    requests and grants, every grant followed directly by a request."""
    if k < 1:
        raise ValueError("need k >= 1")
    alphabet = ("r", "g", "#")
    states = tuple(f"q{i}" for i in range(k + 1))
    trans: Dict = {("q0", "r"): ("q1", 2)}
    for i in range(1, k + 1):
        trans[(f"q{i}", "#")] = (f"q{i}", 1)
        trans[(f"q{i}", "g")] = ("q0", 1)
        if i < k:
            trans[(f"q{i}", "r")] = (f"q{i + 1}", 2)
    master = LabeledAutomaton(
        alphabet=alphabet, states=states, initial="q0", transitions=trans,
        accepting=frozenset({"q0"}))
    dummy = WeightedAutomaton(
        alphabet=alphabet, states=("d",), initial="d", transitions={},
        accepting=frozenset({"d"}), value_fn=SUM, word_mode="finite")
    responder = WeightedAutomaton(
        alphabet=alphabet, states=("wait", "done"), initial="wait",
        transitions={
            ("wait", "r"): ("wait", 1),
            ("wait", "#"): ("wait", 1),
            ("wait", "g"): ("done", 0),
        },
        accepting=frozenset({"done"}), value_fn=SUM, word_mode="finite")
    return NestedWeightedAutomaton(master=master, master_fn=LIMAVG,
                                   slaves=(dummy, responder))


def uniform_chain(alphabet: Sequence[str]) -> LabeledMarkovChain:
    """One-state chain emitting each letter with equal probability."""
    letters = tuple(alphabet)
    p = Fraction(1, len(letters))
    return LabeledMarkovChain(
        alphabet=letters, states=("u",), initial="u",
        edge_prob={("u", a, "u"): p for a in letters})


def request_grant_chain(p: Fraction = Fraction(1, 2)) -> LabeledMarkovChain:
    """Request-grant word source: a request is always emitted first, then
    null steps with probability ``p`` until the grant arrives."""
    p = Fraction(p)
    return LabeledMarkovChain(
        alphabet=("r", "g", "#"), states=("s0", "s1"), initial="s0",
        edge_prob={
            ("s0", "r", "s1"): Fraction(1),
            ("s1", "#", "s1"): p,
            ("s1", "g", "s0"): 1 - p,
        })


# ---------------------------------------------------------------------------
# CNF counting instances
# ---------------------------------------------------------------------------

Clause = Sequence[int]  # DIMACS-style literals: +i / -i for variable i


def _clause_slave(clause: Clause, n_vars: int, skip: int,
                  alphabet: tuple) -> WeightedAutomaton:
    """Slave launched ``skip`` positions before the assignment block: it
    ignores ``skip`` letters, reads the ``n_vars`` assignment letters, and
    its final transition carries 1 when the clause is satisfied, else 0
    (min-valued, so the final transition decides)."""
    positive = {abs(l) for l in clause if l > 0}
    negative = {abs(l) for l in clause if l < 0}
    trans: Dict = {}
    states: List = ["acc"]
    for i in range(skip):
        states.append(("skip", i))
        tgt = ("skip", i + 1) if i + 1 < skip else ("var", 1, False)
        for a in alphabet:
            trans[(("skip", i), a)] = (tgt, 1)
    first = ("skip", 0) if skip else ("var", 1, False)
    for v in range(1, n_vars + 1):
        for sat in (False, True):
            states.append(("var", v, sat))
            for a in alphabet:
                sat2 = sat or (a == "1" and v in positive) or (
                    a == "0" and v in negative)
                if v == n_vars:
                    trans[(("var", v, sat), a)] = ("acc", 1 if sat2 else 0)
                else:
                    trans[(("var", v, sat), a)] = (("var", v + 1, sat2), 1)
    return WeightedAutomaton(
        alphabet=alphabet, states=tuple(states), initial=first,
        transitions=trans, accepting=frozenset({"acc"}), value_fn=MIN,
        word_mode="finite")


def _constant_one_slave(alphabet: tuple) -> WeightedAutomaton:
    """Single-step slave returning 1 (keeps the infimum pinned after the
    assignment prefix has been judged)."""
    return WeightedAutomaton(
        alphabet=alphabet, states=("go", "acc"), initial="go",
        transitions={("go", a): ("acc", 1) for a in alphabet},
        accepting=frozenset({"acc"}), value_fn=MIN, word_mode="finite")


def cnf_to_nwa(clauses: Sequence[Clause], n_vars: int) -> NestedWeightedAutomaton:
    """Counting instance over the uniform bit source: the word's first
    ``m`` letters are padding, the next ``n_vars`` letters pick an
    assignment, and the value is 1 exactly when the assignment satisfies
    every clause (else 0), so the expected value over uniform bits times
    2^n counts satisfying assignments.

    Clause slave ``i`` is launched at position ``i - 1``, skips to the
    assignment block, and returns the clause's truth value; afterwards the
    master launches a constant-1 slave forever.
    """
    if n_vars < 1 or not clauses:
        raise ValueError("need n_vars >= 1 and at least one clause")
    m = len(clauses)
    alphabet = ("0", "1")
    slaves = [
        _clause_slave(clause, n_vars, skip=m - i + 1, alphabet=alphabet)
        for i, clause in enumerate(clauses, start=1)
    ]
    slaves.append(_constant_one_slave(alphabet))
    tail_label = len(slaves)
    states = tuple(f"m{i}" for i in range(m)) + ("tail",)
    trans: Dict = {}
    for i in range(m):
        tgt = f"m{i + 1}" if i + 1 < m else "tail"
        for a in alphabet:
            trans[(f"m{i}", a)] = (tgt, i + 1)
    for a in alphabet:
        trans[("tail", a)] = ("tail", tail_label)
    master = LabeledAutomaton(
        alphabet=alphabet, states=states, initial="m0", transitions=trans,
        accepting=frozenset({"tail"}))
    return NestedWeightedAutomaton(master=master, master_fn=INF,
                                   slaves=tuple(slaves))


def count_satisfying_assignments(clauses: Sequence[Clause], n_vars: int) -> int:
    """Brute-force model count (the oracle the counting instance is checked
    against)."""
    count = 0
    for bits in range(2 ** n_vars):
        assign = {v: bool(bits >> (v - 1) & 1) for v in range(1, n_vars + 1)}
        if all(any((l > 0) == assign[abs(l)] for l in clause)
               for clause in clauses):
            count += 1
    return count


# ---------------------------------------------------------------------------
# Language-intersection instances
# ---------------------------------------------------------------------------

def _dfa_slave(dfa: LabeledAutomaton, index: int, total: int,
               alphabet: tuple) -> WeightedAutomaton:
    """Slave launched at position ``index - 1``: skips to the end of the
    stagger block, simulates the finite automaton on the a/b body, and at
    the first separator returns 1 when the automaton accepts, else 0."""
    skip = total - index + 1
    trans: Dict = {}
    states: List = ["acc", "dead"]
    for i in range(skip):
        states.append(("skip", i))
        tgt = ("skip", i + 1) if i + 1 < skip else ("sim", dfa.initial)
        for a in alphabet:
            trans[(("skip", i), a)] = (tgt, 1)
    for q in dfa.states:
        states.append(("sim", q))
        for a in ("a", "b"):
            nxt = dfa.step(q, a)
            tgt = ("sim", nxt[0]) if nxt is not None else "dead"
            trans[(("sim", q), a)] = (tgt, 1)
        trans[(("sim", q), "#")] = ("acc", 1 if q in dfa.accepting else 0)
    for a in ("a", "b"):
        trans[("dead", a)] = ("dead", 1)
    trans[("dead", "#")] = ("acc", 0)
    return WeightedAutomaton(
        alphabet=alphabet, states=tuple(states), initial=("skip", 0),
        transitions=trans, accepting=frozenset({"acc"}), value_fn=MIN,
        word_mode="finite")


def intersection_to_nwa(dfas: Sequence[LabeledAutomaton]) -> NestedWeightedAutomaton:
    """Language-intersection instance over {a, b, #}: after an n-letter
    stagger block the word's a/b body up to the first separator is fed to
    every automaton; the word's value is 1 exactly when all of them accept
    it (else 0)."""
    if not dfas:
        raise ValueError("need at least one automaton")
    n = len(dfas)
    alphabet = ("a", "b", "#")
    slaves = [_dfa_slave(d, i, n, alphabet) for i, d in enumerate(dfas, start=1)]
    slaves.append(_constant_one_slave(alphabet))
    tail_label = len(slaves)
    states = tuple(f"m{i}" for i in range(n)) + ("tail",)
    trans: Dict = {}
    for i in range(n):
        tgt = f"m{i + 1}" if i + 1 < n else "tail"
        for a in alphabet:
            trans[(f"m{i}", a)] = (tgt, i + 1)
    for a in alphabet:
        trans[("tail", a)] = ("tail", tail_label)
    master = LabeledAutomaton(
        alphabet=alphabet, states=states, initial="m0", transitions=trans,
        accepting=frozenset({"tail"}))
    return NestedWeightedAutomaton(master=master, master_fn=INF,
                                   slaves=tuple(slaves))
