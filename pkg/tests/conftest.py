"""Shared constructors and random-instance generators."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from quanta import (
    SUM, LabeledAutomaton, LabeledMarkovChain, NestedWeightedAutomaton,
    WeightedAutomaton,
)
from quanta.analysis import _slave_has_negative_cycle


def make_wa(alphabet, transitions, initial="q0", accepting=None,
            value_fn=SUM, word_mode="finite"):
    """Transitions as {(state, letter): (state, weight)}; states inferred."""
    states = {initial}
    for (q, _a), (q2, _w) in transitions.items():
        states.update((q, q2))
    if accepting is None:
        accepting = states
    else:
        states.update(accepting)
    return WeightedAutomaton(
        alphabet=tuple(alphabet), states=tuple(sorted(states, key=repr)),
        initial=initial, transitions=transitions,
        accepting=frozenset(accepting), value_fn=value_fn,
        word_mode=word_mode)


def make_master(alphabet, transitions, initial="m0", accepting=None):
    states = {initial}
    for (q, _a), (q2, _lab) in transitions.items():
        states.update((q, q2))
    if accepting is None:
        accepting = states
    return LabeledAutomaton(
        alphabet=tuple(alphabet), states=tuple(sorted(states, key=repr)),
        initial=initial, transitions=transitions,
        accepting=frozenset(accepting))


def all_words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def letter_chain(probs):
    """One-state chain with the given {letter: Fraction} emission law."""
    return LabeledMarkovChain(
        alphabet=tuple(probs), states=("u",), initial="u",
        edge_prob={("u", a, "u"): Fraction(p) for a, p in probs.items()})


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def random_slave(rng: random.Random, alphabet, max_states=3,
                 weight_range=(-2, 2), forbid_negative_cycles=False):
    """Total slave with acceptance reachable from every state (hence
    almost-surely terminating under any full-support chain)."""
    lo, hi = weight_range
    for _attempt in range(200):
        n = rng.randint(1, max_states)
        states = [f"s{i}" for i in range(n)] + ["acc"]
        trans = {}
        for q in states[:-1]:
            for a in alphabet:
                target = rng.choice(states)
                trans[(q, a)] = (target, rng.randint(lo, hi))
        slave = WeightedAutomaton(
            alphabet=tuple(alphabet), states=tuple(states), initial="s0",
            transitions=trans, accepting=frozenset({"acc"}),
            value_fn=SUM, word_mode="finite")
        # acceptance must be reachable from every non-accepting state
        ok = True
        for q in states[:-1]:
            seen = {q}
            stack = [q]
            hit = False
            while stack and not hit:
                cur = stack.pop()
                for a in alphabet:
                    tgt = trans[(cur, a)][0]
                    if tgt == "acc":
                        hit = True
                        break
                    if tgt not in seen:
                        seen.add(tgt)
                        stack.append(tgt)
            if not hit:
                ok = False
                break
        if not ok:
            continue
        if forbid_negative_cycles and _slave_has_negative_cycle(slave):
            continue
        return slave
    raise RuntimeError("could not generate a slave")


def random_connected_nwa(rng: random.Random, master_fn,
                         alphabet=("a", "b"), max_master_states=4,
                         n_slaves=2, max_slave_states=3,
                         weight_range=(-2, 2),
                         forbid_negative_cycles=False):
    """Strongly-connected total master (all states accepting) over total
    slaves; almost-surely accepting under any full-support chain."""
    slaves = [
        random_slave(rng, alphabet, max_slave_states, weight_range,
                     forbid_negative_cycles)
        for _ in range(n_slaves)
    ]
    dummy = WeightedAutomaton(
        alphabet=tuple(alphabet), states=("d",), initial="d", transitions={},
        accepting=frozenset({"d"}), value_fn=SUM, word_mode="finite")
    slaves.append(dummy)
    dummy_label = len(slaves)
    for _attempt in range(200):
        n = rng.randint(1, max_master_states)
        states = [f"m{i}" for i in range(n)]
        trans = {}
        labels_used = set()
        for q in states:
            for a in alphabet:
                label = rng.randint(1, dummy_label)
                labels_used.add(label)
                trans[(q, a)] = (rng.choice(states), label)
        if labels_used == {dummy_label}:
            continue  # needs at least one non-dummy launch
        master = LabeledAutomaton(
            alphabet=tuple(alphabet), states=tuple(states), initial="m0",
            transitions=trans, accepting=frozenset(states))
        # strong connectivity of the full graph
        def reach(start, graph):
            seen = {start}
            stack = [start]
            while stack:
                cur = stack.pop()
                for a in alphabet:
                    tgt = graph[(cur, a)][0]
                    if tgt not in seen:
                        seen.add(tgt)
                        stack.append(tgt)
            return seen

        if len(reach("m0", trans)) != n:
            continue
        rev = {}
        for (q, a), (q2, _lab) in trans.items():
            rev.setdefault(q2, []).append(q)
        seen = {"m0"}
        stack = ["m0"]
        while stack:
            cur = stack.pop()
            for p in rev.get(cur, ()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        if len(seen) != n:
            continue
        return NestedWeightedAutomaton(master=master, master_fn=master_fn,
                                       slaves=tuple(slaves))
    raise RuntimeError("could not generate a master")


@pytest.fixture
def rng():
    return random.Random(20240817)
