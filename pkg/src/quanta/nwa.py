"""Nested weighted automata: representation, validation, prefix simulation,
width checking, and translation to automata with monitor counters.

A nested automaton pairs a master automaton over infinite words (each
transition labeled with a slave index) with finite-word slave automata.  A
slave launched at a position reads the word from that position on and halts
at the first accepting state it enters; a slave whose initial state is
already accepting (a dummy) returns the empty-run bottom immediately, which
makes its launches silent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .core import (
    BOTTOM, InfValFn, LabeledAutomaton, QuantaError, RunValue, State,
    WeightedAutomaton, apply_finval,
)


class WidthExceeded(QuantaError):
    """More concurrently active slaves are reachable than the translation
    was asked to support."""


@dataclass(frozen=True, eq=False)
class NestedWeightedAutomaton:
    """Master automaton with labels in ``1..k``, a master value function,
    and ``k`` finite-word slave automata (1-indexed by label)."""

    master: LabeledAutomaton
    master_fn: InfValFn
    slaves: tuple

    def __post_init__(self):
        if not isinstance(self.master_fn, InfValFn):
            raise ValueError("master value function must be an InfValFn")
        object.__setattr__(self, "slaves", tuple(self.slaves))
        k = len(self.slaves)
        for (_q, _a), (_q2, label) in self.master.transitions.items():
            if not isinstance(label, int) or not 1 <= label <= k:
                raise ValueError(f"master label {label!r} outside 1..{k}")

    def slave(self, label: int) -> WeightedAutomaton:
        return self.slaves[label - 1]

    def is_dummy(self, label: int) -> bool:
        s = self.slave(label)
        return s.initial in s.accepting

    @property
    def dummy_indices(self) -> frozenset:
        return frozenset(i for i in range(1, len(self.slaves) + 1)
                         if self.is_dummy(i))

    def slave_fn_kind(self) -> Optional[str]:
        """Common value-function kind of the non-dummy slaves, or None when
        every slave is a dummy."""
        kinds = {self.slave(i).value_fn.kind
                 for i in range(1, len(self.slaves) + 1)
                 if not self.is_dummy(i)}
        if len(kinds) > 1:
            raise ValueError(f"slaves mix value functions: {sorted(kinds)}")
        return next(iter(kinds), None)


@dataclass(frozen=True)
class NwaValidationReport:
    errors: tuple
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_nwa(nwa: NestedWeightedAutomaton) -> NwaValidationReport:
    """Structural checks: label range, alphabet agreement, common slave
    value function, and prefix-freeness.

    Under halt-at-first-accept semantics an accepting state is never left,
    so a transition out of an accepting state that can reach acceptance
    again is reported as a warning (the structural prefix-free violation is
    operationally unreachable), not an error.
    """
    errors: List[str] = []
    warnings: List[str] = []
    try:
        nwa.slave_fn_kind()
    except ValueError as exc:
        errors.append(str(exc))
    for i, slave in enumerate(nwa.slaves, start=1):
        if set(slave.alphabet) != set(nwa.master.alphabet):
            errors.append(f"slave {i} alphabet differs from the master's")
        if slave.word_mode != "finite":
            errors.append(f"slave {i} is not a finite-word automaton")
        # prefix-freeness: from any accepting state, can we take >= 1 step
        # and reach an accepting state again?
        for f in slave.accepting:
            frontier = [q2 for a in slave.alphabet
                        for (q2, _w) in [slave.step(f, a) or (None, None)]
                        if q2 is not None]
            if not frontier:
                continue
            seen = set(frontier)
            stack = list(frontier)
            hit = any(q in slave.accepting for q in frontier)
            while stack and not hit:
                q = stack.pop()
                for a in slave.alphabet:
                    nxt = slave.step(q, a)
                    if nxt is None:
                        continue
                    if nxt[0] in slave.accepting:
                        hit = True
                        break
                    if nxt[0] not in seen:
                        seen.add(nxt[0])
                        stack.append(nxt[0])
            if hit:
                warnings.append(
                    f"slave {i}: accepting state {f!r} can reach acceptance "
                    f"again (prefix-freeness holds only by halt-at-accept)")
            else:
                warnings.append(
                    f"slave {i}: accepting state {f!r} has outgoing "
                    f"transitions (unreachable under halt-at-accept)")
    return NwaValidationReport(errors=tuple(errors), warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Prefix simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Completed:
    value: RunValue


@dataclass(frozen=True)
class StillRunning:
    label: int
    state: State


@dataclass(frozen=True)
class Rejected:
    position: int


@dataclass(frozen=True)
class NwaPrefixTrace:
    """Per-launch-position outcomes of running a nested automaton over a
    finite prefix.  ``outcomes[i]`` describes the slave launched at
    position ``i``; ``master_stuck`` is the position of a missing master
    transition, if any (nothing is launched there or later)."""

    outcomes: tuple
    master_states: tuple
    master_stuck: Optional[int]

    def completed_map(self) -> Dict[int, RunValue]:
        """Positions of completed non-silent launches mapped to values."""
        return {i: o.value for i, o in enumerate(self.outcomes)
                if isinstance(o, Completed) and o.value is not BOTTOM}

    def pending_positions(self) -> frozenset:
        return frozenset(i for i, o in enumerate(self.outcomes)
                         if isinstance(o, StillRunning))

    def first_rejection(self) -> Optional[int]:
        rejects = [o.position for o in self.outcomes if isinstance(o, Rejected)]
        if self.master_stuck is not None:
            rejects.append(self.master_stuck)
        return min(rejects) if rejects else None

    def values_in_launch_order(self) -> List[RunValue]:
        return [o.value for o in self.outcomes if isinstance(o, Completed)]


def simulate_nwa_prefix(nwa: NestedWeightedAutomaton, word) -> NwaPrefixTrace:
    """Run the master along the word, launching a slave per position; each
    slave consumes the suffix from its launch position (inclusive) and
    halts at its first accepting state.

    A slave with no transition on the current letter rejects, which kills
    the whole run; simulation stops at that position (as it does when the
    master is stuck).
    """
    q = nwa.master.initial
    master_states = [q]
    outcomes: List[object] = []
    active: List[Tuple[int, int, State, List[int]]] = []  # (pos, label, state, weights)
    master_stuck = None
    for pos, a in enumerate(word):
        nxt = nwa.master.step(q, a)
        if nxt is None:
            master_stuck = pos
            break
        q, label = nxt
        master_states.append(q)
        slave = nwa.slave(label)
        if slave.initial in slave.accepting:
            outcomes.append(Completed(BOTTOM))
        else:
            active.append((pos, label, slave.initial, []))
            outcomes.append(None)
        still = []
        rejected = False
        for (p0, lab, s, ws) in active:
            sl = nwa.slave(lab)
            step = sl.step(s, a)
            if step is None:
                outcomes[p0] = Rejected(pos)
                rejected = True
                continue
            s2, w = step
            ws = ws + [w]
            if s2 in sl.accepting:
                outcomes[p0] = Completed(apply_finval(sl.value_fn, ws))
            else:
                still.append((p0, lab, s2, ws))
        active = still
        if rejected:
            break
    for (p0, lab, s, _ws) in active:
        outcomes[p0] = StillRunning(lab, s)
    return NwaPrefixTrace(outcomes=tuple(outcomes),
                          master_states=tuple(master_states),
                          master_stuck=master_stuck)


# ---------------------------------------------------------------------------
# Width
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WidthResult:
    bound: int
    witness: Optional[tuple]  # shortest word activating bound+1 slaves

    @property
    def bounded(self) -> bool:
        return self.witness is None


def check_width_bound(nwa: NestedWeightedAutomaton, k: int) -> WidthResult:
    """Decide exactly whether at most ``k`` slaves are ever simultaneously
    active, by breadth-first reachability over configurations
    ``(master state, multiset of active slave (label, state) pairs)``.

    A slave is active at every position it reads, including its last.
    Words on which the master or some slave has no transition carry no run
    and are pruned.  The witness for an excess is the shortest such word,
    with letters tie-broken in sorted order.
    """
    if k < 0:
        raise ValueError("width bound must be >= 0")
    letters = sorted(nwa.master.alphabet)
    start = (nwa.master.initial, frozenset())
    seen = {start}
    frontier: List[Tuple[State, frozenset, tuple]] = [(start[0], start[1], ())]
    while frontier:
        nxt_frontier = []
        for (q, active, word) in frontier:
            for a in letters:
                step = nwa.master.step(q, a)
                if step is None:
                    continue
                q2, label = step
                slave = nwa.slave(label)
                launches = 0 if slave.initial in slave.accepting else 1
                reading = sum(c for (_ls, c) in active) + launches
                if reading > k:
                    return WidthResult(bound=k, witness=word + (a,))
                counts: Dict[Tuple[int, State], int] = {}
                dead = False
                for ((lab, s), count) in active:
                    sl = nwa.slave(lab)
                    mv = sl.step(s, a)
                    if mv is None:
                        dead = True
                        break
                    s2, _w = mv
                    if s2 not in sl.accepting:
                        key = (lab, s2)
                        counts[key] = counts.get(key, 0) + count
                if dead:
                    continue
                if launches:
                    mv = slave.step(slave.initial, a)
                    if mv is None:
                        continue
                    s2, _w = mv
                    if s2 not in slave.accepting:
                        key = (label, s2)
                        counts[key] = counts.get(key, 0) + 1
                cfg = (q2, frozenset(counts.items()))
                if cfg not in seen:
                    seen.add(cfg)
                    nxt_frontier.append((q2, cfg[1], word + (a,)))
        frontier = nxt_frontier
    return WidthResult(bound=k, witness=None)


# ---------------------------------------------------------------------------
# Translation to monitor counters
# ---------------------------------------------------------------------------

_FREE = None


def nwa_to_mca(nwa: NestedWeightedAutomaton, k: int):
    """Translate a width-``k`` nested automaton with summing slaves into an
    equivalent automaton with monitor counters.

    Counters cannot add on their start or terminate steps, so the product
    state carries, per slot, the launched slave's current state together
    with the not-yet-added weight of its launch step; the carry is charged
    with the next step's add.  When a slave accepts, its final add (carry
    plus last weight) is issued on the acceptance step and the counter is
    terminated one step later; a zero final add terminates immediately.
    Consequently a counter may outlive its slave by up to two steps, and
    ``k + 2`` counter slots always suffice for width ``k``.

    The emitted (activation position, value) pairs coincide with the
    nested automaton's completed launches on every word.
    """
    from .mca import MonitorCounterAutomaton, START, TERMINATE

    for i in range(1, len(nwa.slaves) + 1):
        if not nwa.is_dummy(i) and nwa.slave(i).value_fn.kind != "sum":
            raise ValueError("nwa_to_mca needs summing slaves "
                             "(normalize or convert first)")
    width = check_width_bound(nwa, k)
    if not width.bounded:
        raise WidthExceeded(
            f"width exceeds {k}; witness {''.join(width.witness)!r}")

    n_slots = k + 2
    # slot content: None (free) | ("run", label, state, carry) | ("add", w)
    # | ("term",)
    init = (nwa.master.initial, (_FREE,) * n_slots)
    states = {init}
    transitions = {}
    accepting = set()
    stack = [init]
    while stack:
        cur = stack.pop()
        q, slots = cur
        if q in nwa.master.accepting:
            accepting.add(cur)
        for a in nwa.master.alphabet:
            step = nwa.master.step(q, a)
            if step is None:
                continue
            q2, label = step
            instr = [0] * n_slots
            new_slots = list(slots)
            dead = False
            for j, slot in enumerate(slots):
                if slot is _FREE:
                    continue
                if slot[0] == "run":
                    _tag, lab, s, carry = slot
                    sl = nwa.slave(lab)
                    mv = sl.step(s, a)
                    if mv is None:
                        dead = True
                        break
                    s2, w = mv
                    if s2 in sl.accepting:
                        final = carry + w
                        if final == 0:
                            instr[j] = TERMINATE
                            new_slots[j] = _FREE
                        else:
                            instr[j] = final
                            new_slots[j] = ("term",)
                    else:
                        instr[j] = carry + w
                        new_slots[j] = ("run", lab, s2, 0)
                elif slot[0] == "add":
                    instr[j] = slot[1]
                    new_slots[j] = ("term",)
                else:  # ("term",)
                    instr[j] = TERMINATE
                    new_slots[j] = _FREE
            if dead:
                continue
            slave = nwa.slave(label)
            if slave.initial not in slave.accepting:
                mv = slave.step(slave.initial, a)
                if mv is None:
                    continue
                s2, w = mv
                slot_j = next((j for j in range(n_slots)
                               if new_slots[j] is _FREE and instr[j] == 0), None)
                if slot_j is None:
                    raise WidthExceeded("ran out of counter slots")
                instr[slot_j] = START
                if s2 in slave.accepting:
                    new_slots[slot_j] = ("add", w) if w != 0 else ("term",)
                else:
                    new_slots[slot_j] = ("run", label, s2, w)
            tgt = (q2, tuple(new_slots))
            transitions[(cur, a)] = (tgt, tuple(instr))
            if tgt not in states:
                states.add(tgt)
                stack.append(tgt)
    return MonitorCounterAutomaton(
        alphabet=nwa.master.alphabet, states=tuple(sorted(states, key=repr)),
        initial=init, transitions=transitions,
        accepting=frozenset(accepting), value_fn=nwa.master_fn,
        counters=n_slots)
