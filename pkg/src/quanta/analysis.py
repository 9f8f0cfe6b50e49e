"""Probabilistic questions for deterministic nested weighted automata over
labeled Markov chains: expected value, distribution, approximation, and
almost-sure distribution, with exact rational answers.

The value functions of the master automaton route through three engines:

* ``liminf`` / ``limsup``: per end SCC of the master-chain product, almost
  all absorbed words share one value, the cheapest value any slave launched
  inside the SCC can realize with positive probability; mixing by reach
  probability gives the full distribution.
* ``limavg``: the product chain re-weighted with exact per-launch expected
  slave values has the same expected limit average and the same (discrete)
  distribution.
* ``inf`` / ``sup``: the nested automaton is compiled into a deterministic
  infinite-word automaton that tracks active slaves with their clipped
  running values (deduplicating dominated copies), and the plain
  weighted-automaton engine finishes the job.  Unbounded-below sums admit
  no exact answer and are truncated for the approximation question.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Set, Tuple

from .core import (
    BOTTOM, INF, LIMAVG, LIMINF, LIMSUP, NEG_INF, POS_INF, SUP,
    QuantaError, RunValue, State, Value, WeightedAutomaton, _Bottom, bsum,
    dualize, to_sum_slave, unary_size,
)
from .markov import (
    AllSilentEndScc, DiscreteDistribution, LabeledMarkovChain, end_sccs,
    limavg_of_chain, product_chain, reach_probabilities, solve_linear,
)
from .nwa import NestedWeightedAutomaton


class NotAlmostSureAccepting(QuantaError):
    """The automaton rejects a positive-probability set of words, so the
    probabilistic questions are refused."""

    def __init__(self, reasons):
        super().__init__("; ".join(reasons))
        self.reasons = tuple(reasons)


class NotAlmostSurelyTerminating(QuantaError):
    """A launched slave fails to terminate with probability one."""


class NoAcceptingPath(QuantaError):
    """A slave can never accept with positive probability from the given
    configuration."""


class SumUnboundedBelow(QuantaError):
    """Exact inf/sup questions for summing slaves with reachable negative
    cycles are uncomputable; use the approximation question instead."""


class OpenProblem(QuantaError):
    """The expected value of sup-of-absolute-sums automata has no known
    algorithm."""


class UndefinedExpected(QuantaError):
    """Both infinities carry positive mass."""


class RejectionMassPositive(QuantaError):
    """The automaton-chain product rejects with positive probability."""


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalysisReport:
    """Exact (or certified-approximate) answer: expected value, discrete
    distribution, the method that produced it, and its parameters."""

    expected: Optional[Value]
    distribution: Optional[DiscreteDistribution]
    method: str
    exact: bool
    params: Mapping = dc_field(default_factory=dict)

    def cdf(self, lam: Fraction) -> Fraction:
        if self.distribution is None:
            raise ValueError(f"method {self.method} carries no distribution")
        return self.distribution.cdf(lam)

    def almost_sure(self, lam: Fraction) -> bool:
        """Is the value at most ``lam`` with probability exactly 1?"""
        return self.cdf(lam) == 1

    @property
    def almost_sure_witness(self) -> Optional[Value]:
        """Least threshold with cumulative mass 1, when known."""
        if self.distribution is None:
            return None
        return self.distribution.max_value()

    def negate(self) -> "AnalysisReport":
        dist = self.distribution.negate() if self.distribution else None
        exp = None if self.expected is None else (
            self.expected if isinstance(self.expected, _Bottom) else -self.expected)
        return replace(self, expected=exp, distribution=dist)


# ---------------------------------------------------------------------------
# Master-chain product
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _MasterProduct:
    chain: LabeledMarkovChain              # over reachable (q, s) pairs
    labels: Mapping                        # ((q, s), a, (q2, s2)) -> slave label
    sink_edges: tuple                      # of ((q, s), a, prob) with no master move


def _master_product(nwa: NestedWeightedAutomaton,
                    m: LabeledMarkovChain) -> _MasterProduct:
    if set(nwa.master.alphabet) != set(m.alphabet):
        raise ValueError("nested automaton and chain must share an alphabet")
    init = (nwa.master.initial, m.initial)
    states = {init}
    probs: Dict = {}
    labels: Dict = {}
    sink_edges = []
    stack = [init]
    while stack:
        q, s = stack.pop()
        for (s1, a, s2), p in m.edge_prob.items():
            if s1 != s:
                continue
            step = nwa.master.step(q, a)
            if step is None:
                sink_edges.append(((q, s), a, p))
                continue
            q2, label = step
            tgt = (q2, s2)
            probs[((q, s), a, tgt)] = p
            labels[((q, s), a, tgt)] = label
            if tgt not in states:
                states.add(tgt)
                stack.append(tgt)
    chain = LabeledMarkovChain(
        alphabet=m.alphabet, states=tuple(sorted(states, key=repr)),
        initial=init, edge_prob=probs)
    return _MasterProduct(chain=chain, labels=labels,
                          sink_edges=tuple(sink_edges))


# ---------------------------------------------------------------------------
# Almost-sure acceptance and slave termination
# ---------------------------------------------------------------------------

def _slave_chain_nodes(slave: WeightedAutomaton, m: LabeledMarkovChain,
                       seeds: Set[Tuple[State, State]]) -> Set[Tuple[State, State]]:
    """Configurations (non-accepting slave state, chain state) reachable
    from the seeds while the slave keeps running."""
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        u, cs = stack.pop()
        for (s1, a, s2), _p in m.edge_prob.items():
            if s1 != cs:
                continue
            mv = slave.step(u, a)
            if mv is None or mv[0] in slave.accepting:
                continue
            cfg = (mv[0], s2)
            if cfg not in seen:
                seen.add(cfg)
                stack.append(cfg)
    return seen


def _slave_as_termination_failures(slave: WeightedAutomaton,
                                   m: LabeledMarkovChain,
                                   seeds: Set[Tuple[State, State]]) -> List[str]:
    """Reasons the slave fails to accept almost surely from some seed
    configuration: a positive-probability letter it cannot read, or a
    configuration from which acceptance is unreachable."""
    reasons = []
    nodes = _slave_chain_nodes(slave, m, seeds)
    can_accept = set()
    for (u, cs) in nodes:
        for (s1, a, _s2), _p in m.edge_prob.items():
            if s1 != cs:
                continue
            mv = slave.step(u, a)
            if mv is None:
                reasons.append(
                    f"slave stuck on letter {a!r} in state {u!r} while the "
                    f"chain is at {cs!r}")
            elif mv[0] in slave.accepting:
                can_accept.add((u, cs))
    # backward closure of "acceptance reachable"
    changed = True
    while changed:
        changed = False
        for (u, cs) in nodes:
            if (u, cs) in can_accept:
                continue
            for (s1, a, s2), _p in m.edge_prob.items():
                if s1 != cs:
                    continue
                mv = slave.step(u, a)
                if mv is not None and (mv[0], s2) in can_accept:
                    can_accept.add((u, cs))
                    changed = True
                    break
    for (u, cs) in sorted(nodes - can_accept, key=repr):
        reasons.append(
            f"slave cannot reach acceptance from state {u!r} with the chain "
            f"at {cs!r}")
    return reasons


@dataclass(frozen=True)
class AlmostSureReport:
    ok: bool
    reasons: tuple

    def __bool__(self):
        return self.ok


def almost_sure_acceptance(nwa: NestedWeightedAutomaton,
                           m: LabeledMarkovChain) -> AlmostSureReport:
    """Decide whether the accepted-word set has probability exactly 1.

    Three conditions: (i) the master never gets stuck with positive
    probability; (ii) every reachable end SCC of the master-chain product
    meets the master's accepting states and launches some non-dummy slave
    with positive probability (infinitely many non-silent launches); and
    (iii) every slave, from every configuration it can be launched in
    (conditioned on the launch edge, since the slave reads the launch
    letter), accepts with probability 1.
    """
    reasons: List[str] = []
    prod = _master_product(nwa, m)
    for ((q, s), a, _p) in prod.sink_edges:
        reasons.append(
            f"master has no transition on {a!r} at {q!r} (chain state {s!r}, "
            f"positive probability)")

    for comp in end_sccs(prod.chain):
        if not any(q in nwa.master.accepting for (q, _s) in comp):
            reasons.append(
                f"end SCC {sorted(map(repr, comp))} avoids master accepting "
                f"states")
        launches = any(
            not nwa.is_dummy(lab)
            for (src, _a, tgt), lab in prod.labels.items() if src in comp)
        if not launches:
            reasons.append(
                f"end SCC {sorted(map(repr, comp))} launches only dummy "
                f"slaves (finitely many non-silent transitions)")

    # condition (iii): group launch seeds per slave
    seeds_by_label: Dict[int, Set[Tuple[State, State]]] = {}
    for ((q, s), a, (q2, s2)), label in prod.labels.items():
        if nwa.is_dummy(label):
            continue
        slave = nwa.slave(label)
        mv = slave.step(slave.initial, a)
        if mv is None:
            reasons.append(
                f"slave {label} launched at {q!r} cannot read its launch "
                f"letter {a!r}")
            continue
        if mv[0] not in slave.accepting:
            seeds_by_label.setdefault(label, set()).add((mv[0], s2))
    for label, seeds in sorted(seeds_by_label.items()):
        for why in _slave_as_termination_failures(nwa.slave(label), m, seeds):
            reasons.append(f"slave {label}: {why}")
    return AlmostSureReport(ok=not reasons, reasons=tuple(reasons))


# ---------------------------------------------------------------------------
# Minimal achievable slave values (shortest paths with negative weights)
# ---------------------------------------------------------------------------

_TARGET = ("#accept#",)


def _bellman_ford_min(edges, source, target):
    """Exact minimal path cost from source to target, NEG_INF when a
    negative cycle lies on some source-target path, or None when the target
    is unreachable.  ``edges``: mapping node -> list of (node, cost)."""
    nodes = set(edges) | {source, target}
    for outs in edges.values():
        nodes.update(n for n, _c in outs)
    dist = {source: 0}
    n = len(nodes)
    for _ in range(n):
        changed = False
        for u, outs in edges.items():
            du = dist.get(u)
            if du is None:
                continue
            for v, c in outs:
                if dist.get(v) is None or du + c < dist[v]:
                    dist[v] = du + c
                    changed = True
        if not changed:
            break
    else:
        # still relaxing after n rounds: negative cycle somewhere reachable
        improving = set()
        for u, outs in edges.items():
            du = dist.get(u)
            if du is None:
                continue
            for v, c in outs:
                if du + c < dist[v]:
                    improving.add(v)
        # co-reachability to the target
        rev: Dict = {}
        for u, outs in edges.items():
            for v, _c in outs:
                rev.setdefault(v, []).append(u)
        co = {target}
        stack = [target]
        while stack:
            v = stack.pop()
            for u in rev.get(v, ()):
                if u not in co:
                    co.add(u)
                    stack.append(u)
        # forward closure of improving nodes
        seen = set(improving)
        stack = list(improving)
        while stack:
            u = stack.pop()
            for v, _c in edges.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if seen & co:
            return NEG_INF
    if target not in dist:
        return None
    return Fraction(dist[target])


def min_achievable_slave_value(slave: WeightedAutomaton,
                               m: LabeledMarkovChain,
                               start_chain_state: State,
                               first_letter: Optional[str] = None) -> RunValue:
    """Minimum over positive-probability finite words (generated by the
    chain from ``start_chain_state``) of the slave's value, via shortest
    paths over the slave-chain support graph.

    ``first_letter`` restricts to launches on that letter (the slave reads
    its launch letter, so launch edges condition the word).  Returns
    NEG_INF when a negative cycle lies on a path to acceptance, BOTTOM for
    dummy slaves, and raises :class:`NoAcceptingPath` when the slave can
    never accept with positive probability.
    """
    if slave.initial in slave.accepting:
        return BOTTOM
    sl = to_sum_slave(slave)
    source = ("#source#",)
    edges: Dict = {source: []}

    def expand(u, cs, into):
        for (s1, a, s2), _p in m.edge_prob.items():
            if s1 != cs:
                continue
            if into is edges[source] and first_letter is not None and a != first_letter:
                continue
            mv = sl.step(u, a)
            if mv is None:
                continue
            u2, w = mv
            if u2 in sl.accepting:
                into.append((_TARGET, int(w)))
            else:
                into.append(((u2, s2), int(w)))

    expand(sl.initial, start_chain_state, edges[source])
    seen = set()
    stack = [v for v, _c in edges[source] if v != _TARGET]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        edges[node] = []
        u, cs = node
        expand(u, cs, edges[node])
        for v, _c in edges[node]:
            if v != _TARGET and v not in seen:
                stack.append(v)
    best = _bellman_ford_min(edges, source, _TARGET)
    if best is None:
        raise NoAcceptingPath(
            f"slave never accepts from chain state {start_chain_state!r}"
            + (f" on first letter {first_letter!r}" if first_letter else ""))
    return best


# ---------------------------------------------------------------------------
# liminf / limsup analysis
# ---------------------------------------------------------------------------

def _with_sum_slaves(nwa: NestedWeightedAutomaton) -> NestedWeightedAutomaton:
    """Value-equivalent variant with every slave converted to a summing
    slave (min/max/bounded/absolute sums tracked in slave states)."""
    return NestedWeightedAutomaton(
        master=nwa.master, master_fn=nwa.master_fn,
        slaves=tuple(to_sum_slave(s) for s in nwa.slaves))


def analyze_liminf_nwa(nwa: NestedWeightedAutomaton,
                       m: LabeledMarkovChain) -> AnalysisReport:
    """Exact expected value and distribution for liminf (or, by duality,
    limsup) masters: almost every run absorbs into an end SCC of the
    master-chain product, and almost all words absorbed into the same SCC
    share a single value, the minimum achievable slave value over launch
    edges inside the SCC."""
    if nwa.master_fn == LIMSUP:
        # absolute sums are not weight-negation dual, so convert slaves to
        # equivalent summing slaves before dualizing
        return analyze_liminf_nwa(dualize(_with_sum_slaves(nwa)), m).negate()
    if nwa.master_fn != LIMINF:
        raise ValueError("analyze_liminf_nwa needs a liminf or limsup master")
    acc = almost_sure_acceptance(nwa, m)
    if not acc:
        raise NotAlmostSureAccepting(acc.reasons)
    prod = _master_product(nwa, m)
    sccs = end_sccs(prod.chain)
    probs = reach_probabilities(prod.chain, sccs)
    cache: Dict = {}
    values = []
    for comp in sccs:
        best = None
        for ((q, s), a, _tgt), label in prod.labels.items():
            if (q, s) not in comp or nwa.is_dummy(label):
                continue
            key = (label, s, a)
            if key not in cache:
                cache[key] = min_achievable_slave_value(
                    nwa.slave(label), m, s, first_letter=a)
            v = cache[key]
            if best is None or v < best:
                best = v
        if best is None:
            raise NotAlmostSureAccepting(
                (f"end SCC {sorted(map(repr, comp))} has no non-dummy launch",))
        values.append(best)
    dist = DiscreteDistribution.from_masses(zip(values, probs))
    try:
        expected = dist.expected()
    except ValueError as exc:  # both infinities with mass: cannot occur here
        raise UndefinedExpected(str(exc)) from None
    return AnalysisReport(expected=expected, distribution=dist,
                          method="liminf-scc", exact=True)


# ---------------------------------------------------------------------------
# Compilation of inf/sup nested automata into plain weighted automata
# ---------------------------------------------------------------------------

_FROZEN_NEG = "frozen-"
_FROZEN_POS = "frozen+"
_HIGH = "high"


def _entry_rank(vkey, bound):
    """Dominance order of a tracked slave value: with equal slave states,
    the eventual outcome is monotone in this rank."""
    tag, v = vkey
    if tag == _FROZEN_NEG:
        return (-1, -bound)
    if tag == "live":
        return (0, v)
    if tag == _HIGH:
        return (1, 0)
    return (2, bound)


def _advance_vkey(vkey, w, bound, ceiling):
    tag, v = vkey
    if tag != "live":
        return vkey
    t = v + w
    if abs(t) > bound:
        return (_FROZEN_POS if t > 0 else _FROZEN_NEG, None)
    if ceiling is not None and t > ceiling:
        return (_HIGH, None)
    return ("live", t)


def _vkey_final(vkey, bound, ceiling):
    tag, v = vkey
    if tag == "live":
        return v
    if tag == _FROZEN_NEG:
        return -bound
    if tag == _FROZEN_POS:
        return bound
    return ceiling  # high: any stand-in above the relevant range is sound


def bsum_nwa_to_inf_wa(nwa: NestedWeightedAutomaton,
                       value_ceiling: Optional[int] = None) -> WeightedAutomaton:
    """Compile an inf (or sup) master over bounded-sum slaves into an
    equivalent deterministic infinite-word automaton with silent moves.

    States pair the master state with the set of live slave copies, each
    tracked as (slave state, clipped running value); among copies sharing a
    slave state only the dominating one is kept (minimal for inf, maximal
    for sup), since equal states imply identical futures.  A transition's
    weight is the inf (resp. sup) of the values of slaves completing on
    that step, silent when none completes.

    ``value_ceiling`` (inf mode only) soundly saturates running values
    above ``ceiling + sum of the slave's negative weights``: such a copy
    can only complete above the ceiling, and almost surely some value at or
    below the automaton size is realized, so the saturated stand-in never
    changes the analysis; it keeps the state space finite when huge clip
    bounds never bind.  Leave it ``None`` for per-word exactness.
    """
    mode = nwa.master_fn.kind
    if mode not in ("inf", "sup"):
        raise ValueError("bsum compilation needs an inf or sup master")
    if value_ceiling is not None and mode != "inf":
        raise ValueError("value ceiling applies to inf masters only")
    pick = min if mode == "inf" else max
    bounds = {}
    ceilings = {}
    for i in range(1, len(nwa.slaves) + 1):
        if nwa.is_dummy(i):
            continue
        fn = nwa.slave(i).value_fn
        if fn.kind != "bsum":
            raise ValueError("bsum compilation needs bounded-sum slaves")
        bounds[i] = fn.bound
        if value_ceiling is not None:
            # saturation margin: no continuation can descend by more than
            # the slave's total negative weight without a prefix sum
            # freezing first, so values above ceiling + margin stay above
            # the ceiling forever
            neg = sum(abs(int(w)) for w in nwa.slave(i).weights() if int(w) < 0)
            ceilings[i] = min(value_ceiling + neg, fn.bound)
        else:
            ceilings[i] = None

    def track(nxt, i, state, vkey):
        key = (i, state)
        if key in nxt:
            nxt[key] = pick(nxt[key], vkey,
                            key=lambda vk: _entry_rank(vk, bounds[i]))
        else:
            nxt[key] = vkey

    init = (nwa.master.initial, frozenset())
    states = {init}
    trans = {}
    accepting = set()
    stack = [init]
    while stack:
        cur = stack.pop()
        mq, entries = cur
        if mq in nwa.master.accepting:
            accepting.add(cur)
        for a in nwa.master.alphabet:
            step = nwa.master.step(mq, a)
            if step is None:
                continue
            mq2, label = step
            finished = []
            nxt: Dict = {}
            dead = False
            for (i, s, vkey) in entries:
                sl = nwa.slave(i)
                mv = sl.step(s, a)
                if mv is None:
                    dead = True
                    break
                s2, w = mv
                vkey2 = _advance_vkey(vkey, int(w), bounds[i], ceilings[i])
                if s2 in sl.accepting:
                    finished.append(_vkey_final(vkey2, bounds[i], ceilings[i]))
                else:
                    track(nxt, i, s2, vkey2)
            if dead:
                continue
            if not nwa.is_dummy(label):
                sl = nwa.slave(label)
                mv = sl.step(sl.initial, a)
                if mv is None:
                    continue
                s2, w = mv
                vkey = _advance_vkey(("live", 0), int(w), bounds[label],
                                     ceilings[label])
                if s2 in sl.accepting:
                    finished.append(_vkey_final(vkey, bounds[label],
                                                ceilings[label]))
                else:
                    track(nxt, label, s2, vkey)
            weight = pick(finished) if finished else BOTTOM
            tgt = (mq2, frozenset((i, s, vk) for (i, s), vk in nxt.items()))
            trans[(cur, a)] = (tgt, weight)
            if tgt not in states:
                states.add(tgt)
                stack.append(tgt)
    fn = INF if mode == "inf" else SUP
    return WeightedAutomaton(
        alphabet=nwa.master.alphabet, states=tuple(sorted(states, key=repr)),
        initial=init, transitions=trans, accepting=frozenset(accepting),
        value_fn=fn, word_mode="infinite")


# ---------------------------------------------------------------------------
# Plain deterministic weighted automata over chains
# ---------------------------------------------------------------------------

def _buchi_check(prod, wa):
    if prod.sink is not None:
        raise RejectionMassPositive(
            f"product rejects with probability {prod.rejecting_mass()}")
    bad = []
    for comp in end_sccs(prod.chain):
        if not any(q in wa.accepting for (q, _s) in comp):
            bad.append(comp)
    if bad:
        raise RejectionMassPositive(
            f"acceptance condition violated in end SCCs "
            f"{[sorted(map(repr, c)) for c in bad]}")


def _scc_weights(chain, comp):
    ws = []
    for (s, a, s2), _p in chain.edge_prob.items():
        if s in comp:
            w = chain.weight((s, a, s2))
            if not isinstance(w, _Bottom):
                ws.append(Fraction(w))
    return ws


def _analyze_extremum_wa(wa, m, mode):
    """inf/sup engine: augment product states with the running extremum of
    non-silent weights, absorb, and read each absorbing class's value off
    the stabilized extremum component."""
    pick = min if mode == "inf" else max
    prod = product_chain(wa, m)
    _buchi_check(prod, wa)
    base = prod.chain
    init = (base.initial, None)
    states = {init}
    probs = {}
    stack = [init]
    while stack:
        p, mv = stack.pop()
        for (s1, a, s2), pr in base.edge_prob.items():
            if s1 != p:
                continue
            w = base.weight((s1, a, s2))
            mv2 = mv if isinstance(w, _Bottom) else (
                Fraction(w) if mv is None else pick(mv, Fraction(w)))
            tgt = (s2, mv2)
            probs[((p, mv), a, tgt)] = pr
            if tgt not in states:
                states.add(tgt)
                stack.append(tgt)
    aug = LabeledMarkovChain(
        alphabet=base.alphabet, states=tuple(sorted(states, key=repr)),
        initial=init, edge_prob=probs)
    sccs = end_sccs(aug)
    values = []
    for comp in sccs:
        underlying = frozenset(p for (p, _mv) in comp)
        if not _scc_weights(base, underlying):
            raise AllSilentEndScc(underlying)
        extrema = {mv for (_p, mv) in comp}
        if len(extrema) != 1 or None in extrema:
            raise AssertionError("running extremum failed to stabilize")
        values.append(next(iter(extrema)))
    masses = reach_probabilities(aug, sccs)
    dist = DiscreteDistribution.from_masses(zip(values, masses))
    return dist


def analyze_deterministic_wa(wa: WeightedAutomaton,
                             m: LabeledMarkovChain) -> AnalysisReport:
    """Expected value and distribution of a deterministic infinite-word
    weighted automaton (silent weights allowed) under the chain.

    Per value function, on the automaton-chain product: liminf/limsup read
    the extremal positive-probability non-silent weight of each end SCC;
    limavg solves the stationary mean-payoff equations; inf/sup track the
    running extremum into absorption.  Positive rejecting or
    acceptance-violating mass is refused.
    """
    if wa.word_mode != "infinite":
        raise ValueError("analysis needs an infinite-word automaton")
    kind = wa.value_fn.kind
    if kind in ("inf", "sup"):
        dist = _analyze_extremum_wa(wa, m, kind)
        return AnalysisReport(expected=dist.expected(), distribution=dist,
                              method="wa-direct", exact=True,
                              params={"engine": kind})
    prod = product_chain(wa, m)
    _buchi_check(prod, wa)
    if kind in ("liminf", "limsup"):
        pick = min if kind == "liminf" else max
        sccs = end_sccs(prod.chain)
        values = []
        for comp in sccs:
            ws = _scc_weights(prod.chain, comp)
            if not ws:
                raise AllSilentEndScc(comp)
            values.append(pick(ws))
        masses = reach_probabilities(prod.chain, sccs)
        dist = DiscreteDistribution.from_masses(zip(values, masses))
        return AnalysisReport(expected=dist.expected(), distribution=dist,
                              method="wa-direct", exact=True,
                              params={"engine": kind})
    # limavg
    res = limavg_of_chain(prod.chain)
    masses = reach_probabilities(prod.chain, [c for c, _v in res.per_end_scc])
    dist = DiscreteDistribution.from_masses(
        (v, p) for (_c, v), p in zip(res.per_end_scc, masses))
    if dist.expected() != res.overall:
        raise AssertionError("mean payoff mixture mismatch")
    return AnalysisReport(expected=res.overall, distribution=dist,
                          method="wa-direct", exact=True,
                          params={"engine": "limavg"})


# ---------------------------------------------------------------------------
# inf / sup nested automata: exact and approximate questions
# ---------------------------------------------------------------------------

def _slave_has_negative_cycle(slave: WeightedAutomaton) -> bool:
    """Negative cycle in the summing slave's graph that lies on some path
    from the initial state to acceptance (the unbounded-below criterion)."""
    sl = to_sum_slave(slave)
    edges: Dict = {}
    for (q, _a), (q2, w) in sl.transitions.items():
        edges.setdefault(q, []).append(
            (_TARGET if q2 in sl.accepting else q2, int(w)))
    if sl.initial in sl.accepting:
        return False
    return _bellman_ford_min(edges, sl.initial, _TARGET) == NEG_INF


def _as_bsum_nwa(nwa: NestedWeightedAutomaton, bound: int) -> NestedWeightedAutomaton:
    """Reinterpret summing (or absolute-sum) slaves as bounded-sum slaves
    with the given bound; min/max slaves are normalized first."""
    from .core import normalize_slave

    new_slaves = []
    for i in range(1, len(nwa.slaves) + 1):
        slave = nwa.slave(i)
        if nwa.is_dummy(i):
            new_slaves.append(replace(slave, value_fn=bsum(bound)))
            continue
        kind = slave.value_fn.kind
        if kind in ("min", "max"):
            new_slaves.append(normalize_slave(slave))
        elif kind == "bsum":
            new_slaves.append(slave)
        elif kind == "sum+":
            flipped = {k: (q2, abs(int(w)))
                       for k, (q2, w) in slave.transitions.items()}
            new_slaves.append(replace(slave, transitions=flipped,
                                      value_fn=bsum(bound)))
        else:  # sum
            new_slaves.append(replace(slave, value_fn=bsum(bound)))
    return NestedWeightedAutomaton(master=nwa.master, master_fn=nwa.master_fn,
                                   slaves=tuple(new_slaves))


def analyze_inf_exact(nwa: NestedWeightedAutomaton,
                      m: LabeledMarkovChain) -> AnalysisReport:
    """Exact expected value and distribution for inf (or sup) masters.

    Min/max/bounded-sum slaves always work; absolute sums are bounded
    below by 0 and summing slaves without reachable negative cycles are
    bounded below by the automaton size, so both clip soundly at the size
    bound.  Summing slaves with a negative cycle are refused
    (:class:`SumUnboundedBelow`: the exact question is uncomputable); the
    sup-of-absolute-sums expected value is refused as an open problem.
    """
    g = nwa.slave_fn_kind()
    if nwa.master_fn == SUP:
        if g == "sum+":
            raise OpenProblem(
                "expected value of sup-of-absolute-sums automata is open; "
                "the distribution question is supported")
        return analyze_inf_exact(dualize(_with_sum_slaves(nwa)), m).negate()
    if nwa.master_fn != INF:
        raise ValueError("analyze_inf_exact needs an inf or sup master")
    acc = almost_sure_acceptance(nwa, m)
    if not acc:
        raise NotAlmostSureAccepting(acc.reasons)
    if g is None:
        raise NotAlmostSureAccepting(
            ("every slave is a dummy: no non-silent launches",))
    size = unary_size(nwa)
    if g == "sum":
        for i in range(1, len(nwa.slaves) + 1):
            if not nwa.is_dummy(i) and _slave_has_negative_cycle(nwa.slave(i)):
                raise SumUnboundedBelow(
                    f"slave {i} has a reachable negative cycle; the exact "
                    f"question is uncomputable, use the approximation")
    working = nwa if g == "bsum" else _as_bsum_nwa(nwa, size)
    wa = bsum_nwa_to_inf_wa(working, value_ceiling=size + 1)
    rep = analyze_deterministic_wa(wa, m)
    return replace(rep, method="inf-exact",
                   params={"slave_fn": g, "size": size})


def distribution_at(nwa: NestedWeightedAutomaton, m: LabeledMarkovChain,
                    lam: Fraction) -> Fraction:
    """Cumulative distribution at a threshold, including the
    sup-of-absolute-sums case (clipping at the threshold plus one never
    changes which words stay at or below it)."""
    lam = Fraction(lam)
    if nwa.master_fn == SUP and nwa.slave_fn_kind() == "sum+":
        if lam < 0:
            return Fraction(0)
        acc = almost_sure_acceptance(nwa, m)
        if not acc:
            raise NotAlmostSureAccepting(acc.reasons)
        bound = int(math.floor(lam)) + 1
        clipped = _as_bsum_nwa(nwa, bound)
        wa = bsum_nwa_to_inf_wa(clipped)
        rep = analyze_deterministic_wa(wa, m)
        return rep.cdf(lam)
    return analyze_nwa(nwa, m).cdf(lam)


def _log2_fraction(x: Fraction) -> float:
    if x <= 0:
        raise ValueError("log of a non-positive value")
    num, den = x.numerator, x.denominator
    shift = num.bit_length() - den.bit_length()
    scaled = Fraction(num, den * (2 ** shift)) if shift >= 0 else (
        Fraction(num * 2 ** (-shift), den))
    return shift + math.log2(float(scaled))


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def truncation_bound(nwa: NestedWeightedAutomaton, m: LabeledMarkovChain,
                     epsilon: Fraction) -> int:
    """Clip bound for the approximation question: with n the automaton size
    and p the chain's least positive probability, values beyond
    ceil((n / p^n) * |log2((n^2 / p^n) * epsilon)|) are returned with
    probability below epsilon.  Forced to at least n + 1 so end-SCC values
    are never clipped spuriously."""
    n = unary_size(nwa)
    p = m.min_positive_prob()
    s = abs(_log2_fraction(Fraction(n * n, 1) / p ** n * Fraction(epsilon)))
    b = _ceil(Fraction(n, 1) / p ** n * Fraction(s))
    return max(b, n + 1)


def approx_inf_sum(nwa: NestedWeightedAutomaton, m: LabeledMarkovChain,
                   epsilon: Fraction) -> AnalysisReport:
    """Approximate expected value and distribution for inf (or sup) masters
    with summing or absolute-sum slaves, within ``epsilon``.

    The liminf (resp. limsup) variant is computed first: if it is already
    infinite the answer is exact.  Otherwise slaves are clipped to a
    bounded sum at the truncation bound and analyzed exactly; for
    integer-valued automata and ``epsilon < 1/2`` the distribution at
    integer thresholds is within epsilon as well.  When every slave is
    free of negative cycles the clip provably never binds, so a small
    equivalent bound is used for the actual computation (the certified
    bound is reported).
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    g = nwa.slave_fn_kind()
    if g not in ("sum", "sum+"):
        raise ValueError("approx_inf_sum is for summing slaves")
    if nwa.master_fn == SUP and g == "sum":
        return approx_inf_sum(dualize(nwa), m, epsilon).negate()
    if nwa.master_fn not in (INF, SUP):
        raise ValueError("approx_inf_sum needs an inf or sup master")
    acc = almost_sure_acceptance(nwa, m)
    if not acc:
        raise NotAlmostSureAccepting(acc.reasons)
    tail_fn = LIMINF if nwa.master_fn == INF else LIMSUP
    tail_sign = NEG_INF if nwa.master_fn == INF else POS_INF
    variant = NestedWeightedAutomaton(
        master=nwa.master, master_fn=tail_fn, slaves=nwa.slaves)
    floor = analyze_liminf_nwa(variant, m)
    if floor.expected == tail_sign:
        return AnalysisReport(
            expected=tail_sign, distribution=None, method="inf-approx",
            exact=True,
            params={"epsilon": epsilon,
                    "reason": f"{tail_fn.kind} variant is already infinite"})
    b_formula = truncation_bound(nwa, m, epsilon)
    bounded = g == "sum+" or all(
        nwa.is_dummy(i) or not _slave_has_negative_cycle(nwa.slave(i))
        for i in range(1, len(nwa.slaves) + 1))
    b_eff = unary_size(nwa) + 1 if bounded else b_formula
    clipped = _as_bsum_nwa(nwa, b_eff)
    rep = analyze_inf_exact(clipped, m)
    return AnalysisReport(
        expected=rep.expected, distribution=rep.distribution,
        method="inf-approx", exact=False,
        params={"epsilon": epsilon, "B": b_formula, "B_effective": b_eff,
                "n": unary_size(nwa), "p": m.min_positive_prob()})


# ---------------------------------------------------------------------------
# limavg nested automata
# ---------------------------------------------------------------------------

def _slave_expectations(slave: WeightedAutomaton, m: LabeledMarkovChain,
                        nodes: Set[Tuple[State, State]]) -> Dict:
    """Exact expected remaining total weight to acceptance from each
    (slave state, chain state) configuration, by one linear solve."""
    order = sorted(nodes, key=repr)
    idx = {node: i for i, node in enumerate(order)}
    n = len(order)
    rows = [[Fraction(0)] * n for _ in range(n)]
    rhs = [Fraction(0)] * n
    for i, (u, cs) in enumerate(order):
        rows[i][i] += 1
        for (s1, a, s2), p in m.edge_prob.items():
            if s1 != cs:
                continue
            mv = slave.step(u, a)
            if mv is None:
                raise NotAlmostSurelyTerminating(
                    f"slave stuck on {a!r} from {(u, cs)!r}")
            u2, w = mv
            rhs[i] += p * int(w)
            if u2 not in slave.accepting:
                rows[i][idx[(u2, s2)]] -= p
    sol = solve_linear(rows, rhs)
    return {node: sol[idx[node]] for node in order}


def slave_expected_value(slave: WeightedAutomaton, m: LabeledMarkovChain,
                         start_state: State) -> RunValue:
    """Exact expected total weight of the slave run from (initial state,
    chain start state); BOTTOM for dummy slaves.  Requires almost-sure
    termination from the start configuration."""
    if slave.initial in slave.accepting:
        return BOTTOM
    sl = to_sum_slave(slave)
    seeds = {(sl.initial, start_state)}
    failures = _slave_as_termination_failures(sl, m, seeds)
    if failures:
        raise NotAlmostSurelyTerminating("; ".join(failures))
    nodes = _slave_chain_nodes(sl, m, seeds)
    exp = _slave_expectations(sl, m, nodes)
    return exp[(sl.initial, start_state)]


def analyze_limavg_nwa(nwa: NestedWeightedAutomaton,
                       m: LabeledMarkovChain) -> AnalysisReport:
    """Exact expected value and distribution for limavg masters: re-weight
    the master-chain product so each launch edge carries the launched
    slave's exact expected value (conditioned on the launch edge), then
    take the chain's mean payoff; the distribution is discrete with one
    point per end SCC."""
    if nwa.master_fn != LIMAVG:
        raise ValueError("analyze_limavg_nwa needs a limavg master")
    acc = almost_sure_acceptance(nwa, m)
    if not acc:
        raise NotAlmostSureAccepting(acc.reasons)
    prod = _master_product(nwa, m)
    sum_slaves: Dict[int, WeightedAutomaton] = {}
    exp_cache: Dict[int, Dict] = {}
    weights: Dict = {}
    for ((q, s), a, (q2, s2)), label in prod.labels.items():
        edge = ((q, s), a, (q2, s2))
        if nwa.is_dummy(label):
            continue
        if label not in sum_slaves:
            sum_slaves[label] = to_sum_slave(nwa.slave(label))
        sl = sum_slaves[label]
        mv = sl.step(sl.initial, a)
        if mv is None:
            raise NotAlmostSurelyTerminating(
                f"slave {label} cannot read its launch letter {a!r}")
        u1, w1 = mv
        if u1 in sl.accepting:
            weights[edge] = Fraction(int(w1))
            continue
        if label not in exp_cache:
            seeds = set()
            for ((qq, ss), aa, (qq2, ss2)), lab in prod.labels.items():
                if lab != label:
                    continue
                mv2 = sl.step(sl.initial, aa)
                if mv2 is not None and mv2[0] not in sl.accepting:
                    seeds.add((mv2[0], ss2))
            nodes = _slave_chain_nodes(sl, m, seeds)
            exp_cache[label] = _slave_expectations(sl, m, nodes)
        weights[edge] = int(w1) + exp_cache[label][(u1, s2)]
    weighted = LabeledMarkovChain(
        alphabet=prod.chain.alphabet, states=prod.chain.states,
        initial=prod.chain.initial, edge_prob=prod.chain.edge_prob,
        weights=weights)
    res = limavg_of_chain(weighted)
    masses = reach_probabilities(weighted, [c for c, _v in res.per_end_scc])
    dist = DiscreteDistribution.from_masses(
        (v, p) for (_c, v), p in zip(res.per_end_scc, masses))
    return AnalysisReport(expected=res.overall, distribution=dist,
                          method="limavg-product", exact=True)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def analyze_nwa(nwa: NestedWeightedAutomaton, m: LabeledMarkovChain,
                approx: bool = False,
                epsilon: Optional[Fraction] = None) -> AnalysisReport:
    """Route a nested automaton to the engine for its master value
    function; ``approx`` selects the truncation route for summing slaves
    under inf/sup masters."""
    kind = nwa.master_fn.kind
    if kind in ("liminf", "limsup"):
        return analyze_liminf_nwa(nwa, m)
    if kind == "limavg":
        return analyze_limavg_nwa(nwa, m)
    if approx:
        if epsilon is None:
            raise ValueError("approximation needs an epsilon")
        return approx_inf_sum(nwa, m, epsilon)
    return analyze_inf_exact(nwa, m)
