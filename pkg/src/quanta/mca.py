"""Automata with monitor counters: representation, validation, prefix
simulation, and translation to nested weighted automata.

A transition carries one instruction per counter: start (``"s"``), terminate
(``"t"``), or an integer to add.  Counter values never influence the
transitions.  A ``0`` on an inactive counter is tolerated as padding (the
standard blocks-difference automaton is written that way); any other
instruction on a counter in the wrong activity state is a runtime error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from .core import (
    InfValFn, LabeledAutomaton, QuantaError, State, SUM, WeightedAutomaton,
)

START = "s"
TERMINATE = "t"


class RuntimeInstructionError(QuantaError):
    """Start of an active counter, or a nonzero add / terminate of an
    inactive one, encountered while simulating a run."""

    def __init__(self, position: int, counter: int, detail: str):
        super().__init__(f"position {position}, counter {counter}: {detail}")
        self.position = position
        self.counter = counter


@dataclass(frozen=True, eq=False)
class MonitorCounterAutomaton(LabeledAutomaton):
    """Deterministic automaton over infinite words whose transition labels
    are instruction vectors for ``counters`` monitor counters; at most one
    counter may be started per transition."""

    value_fn: InfValFn = None  # type: ignore[assignment]
    counters: int = 0

    def __post_init__(self):
        super().__post_init__()
        if not isinstance(self.value_fn, InfValFn):
            raise ValueError("monitor-counter automaton needs an InfValFn")
        if self.counters < 0:
            raise ValueError("counter count must be >= 0")
        for key, (_q2, instr) in self.transitions.items():
            instr = tuple(instr)
            if len(instr) != self.counters:
                raise ValueError(f"instruction vector on {key} has wrong arity")
            starts = 0
            for op in instr:
                if op == START:
                    starts += 1
                elif op != TERMINATE and not isinstance(op, int):
                    raise ValueError(f"bad instruction {op!r} on {key}")
            if starts > 1:
                raise ValueError(f"transition {key} starts more than one counter")

    def instruction(self, state: State, letter: str):
        nxt = self.step(state, letter)
        if nxt is None:
            return None
        return nxt[0], tuple(nxt[1])


@dataclass(frozen=True)
class McaValidationReport:
    errors: tuple
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_mca(mca: MonitorCounterAutomaton) -> McaValidationReport:
    """Static checks: single-start rule (enforced structurally), plus a
    counter-activity abstraction that flags instruction misuse reachable
    along some path.

    Activity abstraction: explore (state, active-counter-set) pairs; a
    start on a possibly-active counter or a terminate on a possibly-inactive
    one is an error, and a nonzero add on a counter that is inactive on
    every path to that point is reported as a warning.
    """
    errors: List[str] = []
    warnings: List[str] = []
    seen = {(mca.initial, frozenset())}
    stack = [(mca.initial, frozenset())]
    added_inactive: set = set()
    while stack:
        q, active = stack.pop()
        for a in mca.alphabet:
            nxt = mca.instruction(q, a)
            if nxt is None:
                continue
            q2, instr = nxt
            live = set(active)
            bad = False
            for j, op in enumerate(instr):
                if op == START:
                    if j in active:
                        errors.append(
                            f"start of possibly-active counter {j} on {(q, a)}")
                        bad = True
                    else:
                        live.add(j)
                elif op == TERMINATE:
                    if j not in active:
                        errors.append(
                            f"terminate of possibly-inactive counter {j} on {(q, a)}")
                        bad = True
                    else:
                        live.discard(j)
                elif op != 0 and j not in active:
                    added_inactive.add((q, a, j))
            if bad:
                continue
            cfg = (q2, frozenset(live))
            if cfg not in seen:
                seen.add(cfg)
                stack.append(cfg)
    for (q, a, j) in sorted(added_inactive, key=repr):
        warnings.append(f"add to never-started counter {j} on {(q, a)}")
    return McaValidationReport(errors=tuple(errors), warnings=tuple(warnings))


@dataclass(frozen=True)
class McaPrefixTrace:
    """Result of stepping a monitor-counter automaton over a finite prefix:
    values emitted at terminations, keyed by activation position, plus
    counters still pending and the position of a missing transition (if the
    run got stuck)."""

    emissions: tuple  # of (activation_position, value)
    pending: tuple    # of (counter, activation_position, current_value)
    stuck: Optional[int]
    states: tuple

    def completed_map(self) -> Dict[int, int]:
        return {pos: val for pos, val in self.emissions}

    def pending_positions(self) -> frozenset:
        return frozenset(pos for (_c, pos, _v) in self.pending)


def simulate_mca_prefix(mca: MonitorCounterAutomaton, word) -> McaPrefixTrace:
    """Step configurations over a finite word.

    A missing transition is reported via ``stuck`` (rejection is not an
    error); illegal instruction use raises :class:`RuntimeInstructionError`.
    """
    q = mca.initial
    value: List[Optional[int]] = [None] * mca.counters
    born: List[Optional[int]] = [None] * mca.counters
    emissions = []
    states = [q]
    stuck = None
    for pos, a in enumerate(word):
        nxt = mca.instruction(q, a)
        if nxt is None:
            stuck = pos
            break
        q, instr = nxt
        for j, op in enumerate(instr):
            if op == START:
                if value[j] is not None:
                    raise RuntimeInstructionError(pos, j, "start of active counter")
                value[j] = 0
                born[j] = pos
            elif op == TERMINATE:
                if value[j] is None:
                    raise RuntimeInstructionError(pos, j, "terminate of inactive counter")
                emissions.append((born[j], value[j]))
                value[j] = None
                born[j] = None
            elif op != 0:
                if value[j] is None:
                    raise RuntimeInstructionError(pos, j, "add to inactive counter")
                value[j] += op
            # op == 0 adds nothing whether the counter is active or not
        states.append(q)
    pending = tuple((j, born[j], value[j]) for j in range(mca.counters)
                    if value[j] is not None)
    return McaPrefixTrace(emissions=tuple(emissions), pending=pending,
                          stuck=stuck, states=tuple(states))


# ---------------------------------------------------------------------------
# Translation to nested weighted automata
# ---------------------------------------------------------------------------

def _counter_slave(mca: MonitorCounterAutomaton, j: int, source: State):
    """Slave tracking counter ``j`` for launches from master state
    ``source``: the graph copy weighted by the counter-``j`` instructions,
    terminating into a single accepting sink."""
    acc = "acc"
    trans = {}
    for (q, a), (q2, instr) in mca.transitions.items():
        op = instr[j]
        if op == TERMINATE:
            trans[(q, a)] = (acc, 0)
        elif op == START:
            trans[(q, a)] = (q2, 0)
        else:
            trans[(q, a)] = (q2, int(op))
    return WeightedAutomaton(
        alphabet=mca.alphabet,
        states=tuple(sorted(set(mca.states) | {acc}, key=repr)),
        initial=source, transitions=trans, accepting=frozenset({acc}),
        value_fn=SUM, word_mode="finite")


def mca_to_nwa(mca: MonitorCounterAutomaton):
    """Equivalent nested weighted automaton (master value function kept,
    slaves summing).

    The master copies the graph; wherever counter ``j`` is started it
    launches the slave dedicated to that counter and launch state.  Each
    such slave is a copy of the graph weighted by the counter-``j``
    instructions (the start contributes 0 at entry, adds become weights,
    terminate moves to an accepting sink), so its run spans exactly the
    counter's lifetime and sums to the counter's final value.  Positions
    starting no counter launch a shared dummy slave.  The result has width
    at most ``n + 1``.
    """
    from .nwa import NestedWeightedAutomaton

    slaves = []
    index_of = {}  # (counter, source state) -> slave label
    for (q, _a), (_q2, instr) in sorted(mca.transitions.items(), key=repr):
        for j, op in enumerate(instr):
            if op == START and (j, q) not in index_of:
                slaves.append(_counter_slave(mca, j, q))
                index_of[(j, q)] = len(slaves)

    dummy = WeightedAutomaton(
        alphabet=mca.alphabet, states=("d",), initial="d", transitions={},
        accepting=frozenset({"d"}), value_fn=SUM, word_mode="finite")
    slaves.append(dummy)
    dummy_index = len(slaves)

    master_trans = {}
    for (q, a), (q2, instr) in mca.transitions.items():
        label = dummy_index
        for j, op in enumerate(instr):
            if op == START:
                label = index_of[(j, q)]
        master_trans[(q, a)] = (q2, label)
    master = LabeledAutomaton(
        alphabet=mca.alphabet, states=mca.states, initial=mca.initial,
        transitions=master_trans, accepting=mca.accepting)
    return NestedWeightedAutomaton(master=master, master_fn=mca.value_fn,
                                   slaves=tuple(slaves))
