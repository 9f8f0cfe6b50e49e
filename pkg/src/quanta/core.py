"""Alphabets, weights, extended values, value functions, and deterministic
weighted-automaton run semantics.

Values flowing through the library are exact: rationals are
:class:`fractions.Fraction`, infinities are the :data:`POS_INF` /
:data:`NEG_INF` sentinels (comparable with rationals), and the empty-run
value is the :data:`BOTTOM` sentinel, which never participates in
aggregation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Hashable, Mapping, Optional, Sequence, Union


class QuantaError(Exception):
    """Base class for all library errors."""


class NotDualizable(QuantaError):
    """Raised when an automaton's value functions fall outside the
    weight-negation duality family."""


class EmptyAfterFilter(QuantaError):
    """Raised when an estimator has no surviving values to aggregate."""


# ---------------------------------------------------------------------------
# Extended values
# ---------------------------------------------------------------------------

class _Infinity:
    """Signed infinity, totally ordered against rationals."""

    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = sign

    def __neg__(self) -> "_Infinity":
        return NEG_INF if self.sign > 0 else POS_INF

    def __lt__(self, other):
        if isinstance(other, _Infinity):
            return self.sign < other.sign
        return self.sign < 0

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        if isinstance(other, _Infinity):
            return self.sign > other.sign
        return self.sign > 0

    def __ge__(self, other):
        return self == other or self > other

    def __eq__(self, other):
        return isinstance(other, _Infinity) and other.sign == self.sign

    def __hash__(self):
        return hash(("inf", self.sign))

    def __repr__(self):
        return "+inf" if self.sign > 0 else "-inf"


class _Bottom:
    """The empty-run value; excluded from ordering and aggregation."""

    __slots__ = ()

    def __repr__(self):
        return "bottom"


POS_INF = _Infinity(1)
NEG_INF = _Infinity(-1)
BOTTOM = _Bottom()

Rational = Fraction
#: A value an automaton can assign to a word: rational or signed infinity.
Value = Union[Fraction, int, _Infinity]
#: A run value: a word value or the empty-run marker.
RunValue = Union[Value, _Bottom]
State = Hashable
Letter = str
Word = Sequence[str]


def is_finite(x: RunValue) -> bool:
    return not isinstance(x, (_Infinity, _Bottom))


def ext_neg(x: RunValue) -> RunValue:
    """Negate a value; infinities swap sign, bottom is fixed."""
    if isinstance(x, _Bottom):
        return x
    return -x


# ---------------------------------------------------------------------------
# Value functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FinValFn:
    """Aggregator for finite weight sequences.

    ``kind`` is one of ``min``, ``max``, ``sum``, ``sum+`` (sum of absolute
    values) or ``bsum`` (sum bounded by ``bound``; freezes at the bound as
    soon as a prefix sum leaves ``[-bound, bound]``).
    """

    kind: str
    bound: Optional[int] = None

    _KINDS = ("min", "max", "sum", "sum+", "bsum")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown finite value function {self.kind!r}")
        if self.kind == "bsum":
            if self.bound is None or self.bound < 1:
                raise ValueError("bsum requires bound >= 1")
        elif self.bound is not None:
            raise ValueError(f"{self.kind} takes no bound")

    def __repr__(self):
        return f"bsum({self.bound})" if self.kind == "bsum" else self.kind


@dataclass(frozen=True)
class InfValFn:
    """Aggregator for infinite weight sequences: ``sup``, ``inf``,
    ``limsup``, ``liminf`` or ``limavg``."""

    kind: str

    _KINDS = ("sup", "inf", "limsup", "liminf", "limavg")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown infinite value function {self.kind!r}")

    def __repr__(self):
        return self.kind


MIN = FinValFn("min")
MAX = FinValFn("max")
SUM = FinValFn("sum")
SUM_PLUS = FinValFn("sum+")


def bsum(bound: int) -> FinValFn:
    return FinValFn("bsum", bound)


SUP = InfValFn("sup")
INF = InfValFn("inf")
LIMSUP = InfValFn("limsup")
LIMINF = InfValFn("liminf")
LIMAVG = InfValFn("limavg")

_DUAL_FIN = {"min": "max", "max": "min", "sum": "sum", "bsum": "bsum"}
_DUAL_INF = {"sup": "inf", "inf": "sup", "limsup": "liminf", "liminf": "limsup"}


# ---------------------------------------------------------------------------
# Automata
# ---------------------------------------------------------------------------

def _check_alphabet(letters: Sequence[str]) -> tuple:
    letters = tuple(letters)
    if not letters:
        raise ValueError("alphabet must be non-empty")
    if len(set(letters)) != len(letters):
        raise ValueError("alphabet has duplicate letters")
    for a in letters:
        if not isinstance(a, str) or len(a) < 1:
            raise ValueError(f"bad letter {a!r}")
    return letters


@dataclass(frozen=True, eq=False)
class LabeledAutomaton:
    """Deterministic labeled automaton with a partial transition map.

    ``transitions`` maps ``(state, letter) -> (next_state, label)``; the
    label's meaning depends on context (an integer weight, a slave index,
    or a monitor-counter instruction vector).  Missing entries encode
    rejection; there are no implicit sink states.
    """

    alphabet: tuple
    states: tuple
    initial: State
    transitions: Mapping
    accepting: frozenset

    def __post_init__(self):
        object.__setattr__(self, "alphabet", _check_alphabet(self.alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", dict(self.transitions))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        known = set(self.states)
        if self.initial not in known:
            raise ValueError("initial state not among states")
        if not self.accepting <= known:
            raise ValueError("accepting states not among states")
        letters = set(self.alphabet)
        for (q, a), (q2, _label) in self.transitions.items():
            if q not in known or q2 not in known:
                raise ValueError(f"transition {(q, a)} uses unknown state")
            if a not in letters:
                raise ValueError(f"transition letter {a!r} not in alphabet")

    def step(self, state: State, letter: Letter):
        """Return ``(next_state, label)`` or ``None`` when undefined."""
        return self.transitions.get((state, letter))

    def reachable_states(self) -> set:
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            q = stack.pop()
            for a in self.alphabet:
                nxt = self.transitions.get((q, a))
                if nxt is not None and nxt[0] not in seen:
                    seen.add(nxt[0])
                    stack.append(nxt[0])
        return seen


@dataclass(frozen=True, eq=False)
class WeightedAutomaton(LabeledAutomaton):
    """Deterministic automaton whose labels are integer weights (or
    :data:`BOTTOM` for silent transitions), plus a value-function tag.

    ``word_mode`` selects finite-word semantics (value function from
    :class:`FinValFn`, acceptance at the last state) or infinite-word
    semantics (:class:`InfValFn`, Buchi acceptance).
    """

    value_fn: Union[FinValFn, InfValFn] = SUM
    word_mode: str = "finite"

    def __post_init__(self):
        super().__post_init__()
        if self.word_mode not in ("finite", "infinite"):
            raise ValueError("word_mode must be 'finite' or 'infinite'")
        if self.word_mode == "finite" and not isinstance(self.value_fn, FinValFn):
            raise ValueError("finite-word automaton needs a FinValFn")
        if self.word_mode == "infinite" and not isinstance(self.value_fn, InfValFn):
            raise ValueError("infinite-word automaton needs an InfValFn")
        for key, (_q2, w) in self.transitions.items():
            if not (isinstance(w, (int, Fraction)) or isinstance(w, _Bottom)):
                raise ValueError(f"weight {w!r} on {key} is not an integer or silent")

    def weights(self) -> list:
        return [w for (_q2, w) in self.transitions.values() if not isinstance(w, _Bottom)]


def unary_size(x) -> int:
    """Automaton size under the unary-weight convention: number of states
    plus the sum of absolute weights (nested automata sum over all parts)."""
    if hasattr(x, "master"):  # nested automaton, avoids a circular import
        total = len(x.master.states)
        for slave in x.slaves:
            total += len(slave.states) + sum(abs(int(w)) for w in slave.weights())
        return total
    return len(x.states) + sum(abs(int(w)) for w in x.weights())


# ---------------------------------------------------------------------------
# Value-function application
# ---------------------------------------------------------------------------

def apply_finval(g: FinValFn, seq: Sequence[int]) -> RunValue:
    """Value of a finite weight sequence; the empty sequence (a length-1
    run) has the external value :data:`BOTTOM`."""
    if not seq:
        return BOTTOM
    if g.kind == "min":
        return Fraction(min(seq))
    if g.kind == "max":
        return Fraction(max(seq))
    if g.kind == "sum":
        return Fraction(sum(seq))
    if g.kind == "sum+":
        return Fraction(sum(abs(w) for w in seq))
    # bsum: sum unless some prefix leaves [-B, B]; then the bound with the
    # sign of the first offending prefix.
    b = g.bound
    total = 0
    for w in seq:
        total += w
        if abs(total) > b:
            return Fraction(b if total > 0 else -b)
    return Fraction(total)


def run_weighted_finite(wa: WeightedAutomaton, word: Word) -> RunValue:
    """Value of a finite word under classic run semantics: consume the whole
    word; a missing transition or a non-accepting end state yields
    :data:`POS_INF` (a word with no accepting run has infinite value)."""
    if wa.word_mode != "finite":
        raise ValueError("run_weighted_finite needs a finite-word automaton")
    q = wa.initial
    weights = []
    for a in word:
        nxt = wa.step(q, a)
        if nxt is None:
            return POS_INF
        q, w = nxt
        weights.append(w)
    if q not in wa.accepting:
        return POS_INF
    return apply_finval(wa.value_fn, weights)


def slave_outcome(slave: WeightedAutomaton, suffix: Word):
    """Run a slave on a suffix under the halt-at-first-accept protocol.

    Returns ``("completed", value, letters_read)``,
    ``("running", state)`` when the suffix ends first, or
    ``("rejected", position)`` on a missing transition (position is the
    offset into ``suffix``).
    """
    q = slave.initial
    if q in slave.accepting:
        return ("completed", BOTTOM, 0)
    weights = []
    for i, a in enumerate(suffix):
        nxt = slave.step(q, a)
        if nxt is None:
            return ("rejected", i)
        q, w = nxt
        weights.append(w)
        if q in slave.accepting:
            return ("completed", apply_finval(slave.value_fn, weights), i + 1)
    return ("running", q)


def estimate_infval(f: InfValFn, seq: Sequence[RunValue], burn_in: int = 0) -> Value:
    """Truncated estimator for an infinite-word value function: drop the
    burn-in prefix, remove bottoms, then aggregate."""
    kept = [x for x in seq[burn_in:] if not isinstance(x, _Bottom)]
    if not kept:
        raise EmptyAfterFilter("no values survive burn-in and bottom removal")
    if f.kind == "limavg":
        total = Fraction(0)
        for x in kept:
            if isinstance(x, _Infinity):
                return x
            total += x
        return total / len(kept)
    if f.kind in ("inf", "liminf"):
        return min(kept)
    return max(kept)


# ---------------------------------------------------------------------------
# Duality and slave normalization
# ---------------------------------------------------------------------------

def _negate_weight(w):
    return w if isinstance(w, _Bottom) else -w


def _dual_weighted(wa: WeightedAutomaton) -> WeightedAutomaton:
    fn = wa.value_fn
    if isinstance(fn, FinValFn):
        if fn.kind not in _DUAL_FIN:
            raise NotDualizable(f"{fn!r} has no weight-negation dual")
        dual_fn = FinValFn(_DUAL_FIN[fn.kind], fn.bound)
    else:
        if fn.kind not in _DUAL_INF:
            raise NotDualizable(f"{fn!r} has no weight-negation dual")
        dual_fn = InfValFn(_DUAL_INF[fn.kind])
    flipped = {k: (q2, _negate_weight(w)) for k, (q2, w) in wa.transitions.items()}
    return replace(wa, transitions=flipped, value_fn=dual_fn)


def dualize(x):
    """Negate all weights and swap the value functions so that the result
    assigns ``-value(w)`` to every word ``w``.

    Applies to weighted automata and nested weighted automata whose value
    functions lie in the duality family (``sup``/``inf``,
    ``limsup``/``liminf``; ``min``/``max``, ``sum``, ``bsum``).  ``sum+``
    and ``limavg`` are excluded.
    """
    if hasattr(x, "master"):
        from .nwa import NestedWeightedAutomaton

        if x.master_fn.kind not in _DUAL_INF:
            raise NotDualizable(f"master function {x.master_fn!r} is not dualizable")
        return NestedWeightedAutomaton(
            master=x.master,
            master_fn=InfValFn(_DUAL_INF[x.master_fn.kind]),
            slaves=tuple(_dual_weighted(s) for s in x.slaves),
        )
    return _dual_weighted(x)


_ACCEPT = "acc"


def normalize_slave(slave: WeightedAutomaton) -> WeightedAutomaton:
    """Rewrite a min- or max-valued slave as a bounded-sum slave.

    The result tracks the running extremum in its states, takes weight-0
    internal transitions, and charges the extremum on the final transition
    into a single accepting sink; it is value-equivalent on every word
    under the halt-at-first-accept protocol.  The bound is the largest
    absolute weight of the slave.
    """
    fn = slave.value_fn
    if not (isinstance(fn, FinValFn) and fn.kind in ("min", "max")):
        raise ValueError("normalize_slave expects a min or max slave")
    pick = min if fn.kind == "min" else max
    weights = slave.weights()
    bound = max((abs(int(w)) for w in weights), default=1) or 1
    track = len(set(int(w) for w in weights)) > 1

    if slave.initial in slave.accepting:
        # dummy slave: value is always the empty-run bottom
        return WeightedAutomaton(
            alphabet=slave.alphabet, states=(_ACCEPT,), initial=_ACCEPT,
            transitions={}, accepting=frozenset({_ACCEPT}),
            value_fn=bsum(bound), word_mode="finite")

    def node(q, ext):
        return (q, ext) if track else q

    start = node(slave.initial, None)
    trans = {}
    states = {start, _ACCEPT}
    stack = [node(slave.initial, None)]
    seen = {start}
    while stack:
        cur = stack.pop()
        q, ext = cur if track else (cur, None)
        for a in slave.alphabet:
            nxt = slave.step(q, a)
            if nxt is None:
                continue
            q2, w = nxt
            w = int(w)
            ext2 = w if ext is None else pick(ext, w)
            if q2 in slave.accepting:
                trans[(cur, a)] = (_ACCEPT, ext2)
                continue
            tgt = node(q2, ext2)
            trans[(cur, a)] = (tgt, 0)
            if tgt not in seen:
                seen.add(tgt)
                states.add(tgt)
                stack.append(tgt)
    return WeightedAutomaton(
        alphabet=slave.alphabet, states=tuple(sorted(states, key=repr)),
        initial=start, transitions=trans, accepting=frozenset({_ACCEPT}),
        value_fn=bsum(bound), word_mode="finite")


def to_sum_slave(slave: WeightedAutomaton) -> WeightedAutomaton:
    """Value-equivalent sum-valued version of a slave (any finite value
    function), used where downstream machinery needs plain addition.

    Bounded-sum slaves get their clipped running total tracked in the
    state (transition weights become deltas, so the accumulated sum always
    equals the bounded-sum value); min/max go through
    :func:`normalize_slave` first; ``sum+`` takes absolute weights.
    """
    fn = slave.value_fn
    if fn.kind == "sum":
        return slave
    if fn.kind == "sum+":
        flipped = {k: (q2, abs(int(w))) for k, (q2, w) in slave.transitions.items()}
        return replace(slave, transitions=flipped, value_fn=SUM)
    if fn.kind in ("min", "max"):
        return to_sum_slave(normalize_slave(slave))

    # bsum: track the running prefix sum, freezing at +/-bound the first
    # time a prefix leaves [-bound, bound].
    b = fn.bound

    def advance(total, w):
        if total == "pos" or total == "neg":
            return total, 0
        t2 = total + w
        if abs(t2) > b:
            frozen_at = b if t2 > 0 else -b
            return ("pos" if t2 > 0 else "neg"), frozen_at - total
        return t2, w

    if slave.initial in slave.accepting:
        return replace(slave, value_fn=SUM)
    start = (slave.initial, 0)
    trans = {}
    states = {start}
    acc = set()
    stack = [start]
    while stack:
        cur = stack.pop()
        q, total = cur
        for a in slave.alphabet:
            nxt = slave.step(q, a)
            if nxt is None:
                continue
            q2, w = nxt
            total2, delta = advance(total, int(w))
            tgt = (q2, total2)
            trans[(cur, a)] = (tgt, delta)
            if tgt not in states:
                states.add(tgt)
                if q2 in slave.accepting:
                    acc.add(tgt)
                else:
                    stack.append(tgt)
            elif q2 in slave.accepting:
                acc.add(tgt)
    return WeightedAutomaton(
        alphabet=slave.alphabet, states=tuple(sorted(states, key=repr)),
        initial=start, transitions=trans, accepting=frozenset(acc),
        value_fn=SUM, word_mode="finite")
