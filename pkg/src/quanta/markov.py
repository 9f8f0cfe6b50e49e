"""Labeled Markov chains with exact rational probabilities: validation,
prefix probabilities, products with automata, SCC machinery, absorption
probabilities, stationary distributions, and mean payoff with silent moves.

Every linear solve is exact (Fraction Gaussian elimination) and verified by
substituting the solution back and checking a zero residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import (
    BOTTOM, NEG_INF, POS_INF, QuantaError, RunValue, State, Value,
    WeightedAutomaton, _Bottom, _check_alphabet,
)


class SingularSystem(QuantaError):
    """A linear system that should be uniquely solvable was not."""


class NotIrreducible(QuantaError):
    """A stationary distribution was requested outside one closed SCC."""


class AllSilentEndScc(QuantaError):
    """An end SCC carries no non-silent positive-probability edge, so the
    limit average of runs absorbed there is undefined."""

    def __init__(self, scc):
        super().__init__(f"end SCC {sorted(map(repr, scc))} has only silent edges")
        self.scc = frozenset(scc)


# ---------------------------------------------------------------------------
# Exact linear algebra
# ---------------------------------------------------------------------------

def solve_linear(a_rows: List[List[Fraction]], b: List[Fraction]) -> List[Fraction]:
    """Solve ``A x = b`` exactly over the rationals.

    Partial pivoting picks the entry of largest magnitude; the solution is
    verified by an exact residual check before being returned.
    """
    n = len(a_rows)
    m = [[Fraction(x) for x in row] + [Fraction(b[i])] for i, row in enumerate(a_rows)]
    for col in range(n):
        pivot = None
        best = Fraction(0)
        for r in range(col, n):
            v = abs(m[r][col])
            if v > best:
                best, pivot = v, r
        if pivot is None:
            raise SingularSystem(f"no pivot in column {col}")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    x = [m[i][n] for i in range(n)]
    for i, row in enumerate(a_rows):
        if sum(c * xi for c, xi in zip(row, x)) != b[i]:
            raise SingularSystem("residual check failed")
    return x


# ---------------------------------------------------------------------------
# Chains
# ---------------------------------------------------------------------------

Edge = Tuple[State, str, State]


@dataclass(frozen=True, eq=False)
class LabeledMarkovChain:
    """Finite-state letter-emitting chain with exact rational edge
    probabilities and optional integer (or silent) edge weights."""

    alphabet: tuple
    states: tuple
    initial: State
    edge_prob: Mapping[Edge, Fraction]
    weights: Mapping[Edge, RunValue] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", _check_alphabet(self.alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        probs = {}
        for edge, p in self.edge_prob.items():
            p = Fraction(p)
            if p < 0:
                raise ValueError(f"negative probability on {edge}")
            if p > 0:
                probs[edge] = p
        object.__setattr__(self, "edge_prob", probs)
        object.__setattr__(self, "weights", dict(self.weights))
        known = set(self.states)
        if self.initial not in known:
            raise ValueError("initial state not among states")
        letters = set(self.alphabet)
        for (s, a, s2) in probs:
            if s not in known or s2 not in known or a not in letters:
                raise ValueError(f"edge {(s, a, s2)} malformed")

    def out_edges(self, s: State) -> List[Tuple[str, State, Fraction]]:
        return [(a, s2, p) for (s1, a, s2), p in self.edge_prob.items() if s1 == s]

    def succ(self, s: State) -> set:
        return {s2 for (s1, _a, s2) in self.edge_prob if s1 == s}

    def weight(self, edge: Edge) -> RunValue:
        return self.weights.get(edge, BOTTOM)

    def min_positive_prob(self) -> Fraction:
        return min(self.edge_prob.values())


@dataclass(frozen=True)
class ChainValidationReport:
    errors: tuple
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_chain(m: LabeledMarkovChain) -> ChainValidationReport:
    """Exact row-sum and range checks."""
    errors = []
    for s in m.states:
        total = sum((p for (s1, _a, _s2), p in m.edge_prob.items() if s1 == s),
                    Fraction(0))
        if total != 1:
            errors.append(f"outgoing probability from {s!r} sums to {total}, not 1")
    return ChainValidationReport(errors=tuple(errors))


def word_prefix_probability(m: LabeledMarkovChain, word: Sequence[str]) -> Fraction:
    """Probability of the cylinder of a finite word: the sum over all paths
    labeled by it of the product of edge probabilities."""
    current: Dict[State, Fraction] = {m.initial: Fraction(1)}
    for a in word:
        nxt: Dict[State, Fraction] = {}
        for s, mass in current.items():
            for (s1, b, s2), p in m.edge_prob.items():
                if s1 == s and b == a:
                    nxt[s2] = nxt.get(s2, Fraction(0)) + mass * p
        current = nxt
        if not current:
            return Fraction(0)
    return sum(current.values(), Fraction(0))


# ---------------------------------------------------------------------------
# Product of a deterministic weighted automaton and a chain
# ---------------------------------------------------------------------------

REJECT = ("#reject#",)


def _combine_weights(wa_weight, chain_weight):
    if isinstance(wa_weight, _Bottom) and isinstance(chain_weight, _Bottom):
        return BOTTOM
    if isinstance(wa_weight, _Bottom):
        return chain_weight
    if isinstance(chain_weight, _Bottom):
        return wa_weight
    return wa_weight + chain_weight


@dataclass(frozen=True, eq=False)
class ProductChain:
    """Product of a deterministic automaton and a chain: a chain over pairs
    ``(automaton state, chain state)``; chain moves without a matching
    automaton transition are redirected to an absorbing rejecting sink."""

    chain: LabeledMarkovChain
    sink: Optional[State]

    @property
    def has_rejecting_mass(self) -> bool:
        return self.sink is not None

    def rejecting_mass(self) -> Fraction:
        """Exact probability of ever falling into the rejecting sink."""
        if self.sink is None:
            return Fraction(0)
        closed = [c for c in end_sccs(self.chain) if self.sink not in c]
        probs = reach_probabilities(self.chain, closed + [frozenset({self.sink})])
        return probs[-1]


def product_chain(wa: WeightedAutomaton, m: LabeledMarkovChain) -> ProductChain:
    """Build the reachable part of the automaton-chain product.

    Edge weights add the automaton weight and the chain weight, with silent
    parts contributing nothing (both silent stays silent).
    """
    if set(wa.alphabet) != set(m.alphabet):
        raise ValueError("automaton and chain must share an alphabet")
    init = (wa.initial, m.initial)
    states = {init}
    probs: Dict[Edge, Fraction] = {}
    weights: Dict[Edge, RunValue] = {}
    sink = None
    stack = [init]
    while stack:
        q, s = stack.pop()
        for (s1, a, s2), p in m.edge_prob.items():
            if s1 != s:
                continue
            nxt = wa.step(q, a)
            if nxt is None:
                sink = REJECT
                edge = ((q, s), a, REJECT)
                probs[edge] = probs.get(edge, Fraction(0)) + p
                continue
            q2, w = nxt
            tgt = (q2, s2)
            edge = ((q, s), a, tgt)
            probs[edge] = probs.get(edge, Fraction(0)) + p
            cw = m.weight((s1, a, s2))
            weights[edge] = _combine_weights(w, cw)
            if tgt not in states:
                states.add(tgt)
                stack.append(tgt)
    if sink is not None:
        states.add(REJECT)
        loop = (REJECT, m.alphabet[0], REJECT)
        probs[loop] = Fraction(1)
    chain = LabeledMarkovChain(
        alphabet=m.alphabet, states=tuple(sorted(states, key=repr)),
        initial=init, edge_prob=probs, weights=weights)
    return ProductChain(chain=chain, sink=sink)


# ---------------------------------------------------------------------------
# SCC machinery (iterative Tarjan over positive-probability edges)
# ---------------------------------------------------------------------------

def strongly_connected_components(m: LabeledMarkovChain) -> List[frozenset]:
    """All SCCs of the positive-probability edge graph, in reverse
    topological order (successors before predecessors)."""
    succ = {s: sorted(m.succ(s), key=repr) for s in m.states}
    index: Dict[State, int] = {}
    low: Dict[State, int] = {}
    on_stack: set = set()
    stack: List[State] = []
    sccs: List[frozenset] = []
    counter = [0]

    for root in m.states:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                sccs.append(frozenset(comp))
    return sccs


def end_sccs(m: LabeledMarkovChain) -> List[frozenset]:
    """SCCs with no positive-probability edge leaving them, restricted to
    the part reachable from the initial state."""
    reachable = {m.initial}
    stack = [m.initial]
    while stack:
        s = stack.pop()
        for s2 in m.succ(s):
            if s2 not in reachable:
                reachable.add(s2)
                stack.append(s2)
    out = []
    for comp in strongly_connected_components(m):
        if not comp <= reachable:
            continue
        if all(s2 in comp for s in comp for s2 in m.succ(s)):
            out.append(comp)
    return out


# ---------------------------------------------------------------------------
# Absorption probabilities
# ---------------------------------------------------------------------------

def reach_probabilities(m: LabeledMarkovChain,
                        targets: Sequence[frozenset]) -> List[Fraction]:
    """Exact probabilities of reaching each of the given disjoint closed
    state sets from the initial state.

    Mass is propagated through the condensation of the transient part in
    topological order; cyclic transient blocks are resolved by a local
    exact solve.  When the targets cover every end SCC the probabilities
    sum to exactly 1 (verified).
    """
    targets = [frozenset(t) for t in targets]
    target_of: Dict[State, int] = {}
    for i, t in enumerate(targets):
        for s in t:
            if s in target_of:
                raise ValueError("targets must be disjoint")
            target_of[s] = i

    result = [Fraction(0) for _ in targets]
    if m.initial in target_of:
        result[target_of[m.initial]] = Fraction(1)
        return result

    # transient graph: everything reachable before entering a target
    transient = set()
    stack = [m.initial]
    seen = {m.initial}
    while stack:
        s = stack.pop()
        transient.add(s)
        for s2 in m.succ(s):
            if s2 not in seen and s2 not in target_of:
                seen.add(s2)
                stack.append(s2)

    sub = LabeledMarkovChain(
        alphabet=m.alphabet, states=tuple(sorted(transient, key=repr)) or (m.initial,),
        initial=m.initial,
        edge_prob={(s, a, s2): p for (s, a, s2), p in m.edge_prob.items()
                   if s in transient and s2 in transient})
    comps = strongly_connected_components(sub)  # reverse topological
    comp_of = {s: i for i, comp in enumerate(comps) for s in comp}

    mass: Dict[State, Fraction] = {m.initial: Fraction(1)}

    def push(s: State, s2: State, amount: Fraction):
        if amount == 0:
            return
        if s2 in target_of:
            result[target_of[s2]] += amount
        elif s2 in transient:
            mass[s2] = mass.get(s2, Fraction(0)) + amount
        # otherwise the mass escapes to an uncovered end SCC and is dropped;
        # callers targeting every end SCC never hit this case

    out = {s: [] for s in transient}
    for (s, a, s2), p in m.edge_prob.items():
        if s in transient:
            out[s].append((s2, p))

    for comp in reversed(comps):  # topological order
        comp = sorted(comp, key=repr)
        incoming = {s: mass.pop(s, Fraction(0)) for s in comp}
        if all(v == 0 for v in incoming.values()):
            continue
        internal_cycle = any(s2 in comp for s in comp for s2, _p in out[s])
        if not internal_cycle:
            for s in comp:
                for s2, p in out[s]:
                    push(s, s2, incoming[s] * p)
            continue
        # expected visit counts v solve v = incoming + v P restricted to comp
        idx = {s: i for i, s in enumerate(comp)}
        n = len(comp)
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = Fraction(1)
        for s in comp:
            for s2, p in out[s]:
                if s2 in idx:
                    rows[idx[s2]][idx[s]] -= p
        visits = solve_linear(rows, [incoming[s] for s in comp])
        for s in comp:
            for s2, p in out[s]:
                if s2 not in idx:
                    push(s, s2, visits[idx[s]] * p)
    return result


def stationary_distribution(m: LabeledMarkovChain,
                            scc: Iterable[State]) -> Dict[State, Fraction]:
    """Exact stationary distribution of the chain restricted to one closed
    irreducible SCC (balance equations plus normalization)."""
    comp = sorted(set(scc), key=repr)
    comp_set = set(comp)
    for s in comp:
        for s2 in m.succ(s):
            if s2 not in comp_set:
                raise NotIrreducible(f"edge {s!r} -> {s2!r} leaves the component")
    restricted = LabeledMarkovChain(
        alphabet=m.alphabet, states=tuple(comp), initial=comp[0],
        edge_prob={(s, a, s2): p for (s, a, s2), p in m.edge_prob.items()
                   if s in comp_set})
    comps = strongly_connected_components(restricted)
    if len(comps) != 1:
        raise NotIrreducible("restriction is not strongly connected")

    idx = {s: i for i, s in enumerate(comp)}
    n = len(comp)
    # rows 0..n-2: balance pi(s2) = sum_s pi(s) P(s, s2); last row: sum = 1
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n - 1):
        rows[i][i] = Fraction(1)
    for (s, _a, s2), p in restricted.edge_prob.items():
        j = idx[s2]
        if j < n - 1:
            rows[j][idx[s]] -= p
    rows[n - 1] = [Fraction(1)] * n
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    pi = solve_linear(rows, rhs)
    # verify the full balance system, including the dropped row
    for s2 in comp:
        total = sum((pi[idx[s]] * p for (s, _a, t), p in restricted.edge_prob.items()
                     if t == s2), Fraction(0))
        if total != pi[idx[s2]]:
            raise SingularSystem("stationary balance residual is nonzero")
    return {s: pi[idx[s]] for s in comp}


# ---------------------------------------------------------------------------
# Mean payoff with silent moves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite list of (value, mass) point masses, sorted by value with
    exact-equal values merged; masses sum to 1."""

    points: tuple  # of (Value, Fraction)

    @staticmethod
    def from_masses(pairs: Iterable[Tuple[Value, Fraction]]) -> "DiscreteDistribution":
        merged: Dict[Value, Fraction] = {}
        for v, p in pairs:
            if p == 0:
                continue
            merged[v] = merged.get(v, Fraction(0)) + p
        pts = sorted(merged.items(), key=lambda vp: (
            0 if vp[0] == NEG_INF else 2 if vp[0] == POS_INF else 1,
            Fraction(vp[0]) if vp[0] not in (NEG_INF, POS_INF) else 0))
        dist = DiscreteDistribution(points=tuple(pts))
        total = sum((p for _v, p in pts), Fraction(0))
        if total != 1:
            raise ValueError(f"point masses sum to {total}, not 1")
        return dist

    def cdf(self, lam) -> Fraction:
        """P(value <= lam)."""
        total = Fraction(0)
        for v, p in self.points:
            if v == NEG_INF or (v != POS_INF and Fraction(v) <= lam):
                total += p
        return total

    def expected(self) -> Value:
        has_neg = any(v == NEG_INF for v, _p in self.points)
        has_pos = any(v == POS_INF for v, _p in self.points)
        if has_neg and has_pos:
            raise ValueError("expected value undefined: both infinities have mass")
        if has_neg:
            return NEG_INF
        if has_pos:
            return POS_INF
        return sum((Fraction(v) * p for v, p in self.points), Fraction(0))

    def almost_sure_value(self):
        """The unique value of mass 1, or None."""
        if len(self.points) == 1:
            return self.points[0][0]
        return None

    def max_value(self) -> Value:
        return self.points[-1][0]

    def negate(self) -> "DiscreteDistribution":
        return DiscreteDistribution.from_masses(
            (-v, p) for v, p in self.points)


@dataclass(frozen=True)
class LimAvgResult:
    overall: Value
    per_end_scc: tuple  # of (frozenset, Fraction)


def limavg_of_chain(m: LabeledMarkovChain) -> LimAvgResult:
    """Expected limit average of the chain's weight sequence, with silent
    edges removed before averaging.

    Per end SCC the value is the stationary-frequency-weighted mean of the
    non-silent edge weights, normalized by the non-silent frequency mass;
    the overall value mixes the per-SCC values by reach probability.
    """
    sccs = end_sccs(m)
    per = []
    for comp in sccs:
        pi = stationary_distribution(m, comp)
        num = Fraction(0)
        den = Fraction(0)
        for (s, a, s2), p in m.edge_prob.items():
            if s not in comp:
                continue
            w = m.weight((s, a, s2))
            if isinstance(w, _Bottom):
                continue
            freq = pi[s] * p
            num += freq * Fraction(w)
            den += freq
        if den == 0:
            raise AllSilentEndScc(comp)
        per.append((comp, num / den))
    probs = reach_probabilities(m, sccs)
    overall = sum((p * v for p, (_c, v) in zip(probs, per)), Fraction(0))
    if sum(probs, Fraction(0)) != 1:
        raise SingularSystem("end SCCs do not absorb all probability mass")
    return LimAvgResult(overall=overall, per_end_scc=tuple(per))
