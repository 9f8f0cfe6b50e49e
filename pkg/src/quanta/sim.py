"""Seeded Monte Carlo sampling and exhaustive brute-force oracles, used as
independent checks of every exact analysis.

Randomness is counter-based: the uniform draw for step ``t`` of sample
``i`` is a 64-bit hash of (seed, t, i), so a (seed, sampleIndex) pair fully
determines a trajectory no matter how many samples run, in what order, or
on how many threads.  Samples are simulated in parallel with numba.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numba import config as _numba_config, njit, prange

_numba_config.THREADING_LAYER = "workqueue"

from .core import QuantaError, WeightedAutomaton, _Bottom
from .markov import LabeledMarkovChain
from .mca import (
    MonitorCounterAutomaton, RuntimeInstructionError, START, TERMINATE,
    simulate_mca_prefix,
)
from .nwa import NestedWeightedAutomaton, simulate_nwa_prefix


class DepthCap(QuantaError):
    """Exhaustive enumeration was asked to exceed its configured depth."""


MAX_EXHAUSTIVE_DEPTH = 24

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_LANE = np.uint64(0xBF58476D1CE4E5B9)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(33))) * np.uint64(0xFF51AFD7ED558CCD)
    z = (z ^ (z >> np.uint64(33))) * np.uint64(0xC4CEB9FE1A85EC53)
    return z ^ (z >> np.uint64(33))


@njit(cache=True, inline="always")
def _uniform(seed, step, index):
    z = _mix64(seed * _GOLDEN + np.uint64(step) * _LANE)
    z = _mix64(z + np.uint64(index) * _GOLDEN)
    return (z >> np.uint64(11)) * 1.1102230246251565e-16  # 2**-53


def _np_mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(33))) * np.uint64(0xFF51AFD7ED558CCD)
    z = (z ^ (z >> np.uint64(33))) * np.uint64(0xC4CEB9FE1A85EC53)
    return z ^ (z >> np.uint64(33))


def _np_uniforms(seed: int, step: int, count: int) -> np.ndarray:
    with np.errstate(over="ignore"):  # wrapping is the point
        base = _np_mix64(np.uint64(seed) * _GOLDEN + np.uint64(step) * _LANE)
        z = _np_mix64(base + np.arange(count, dtype=np.uint64) * _GOLDEN)
    return (z >> np.uint64(11)) * (2.0 ** -53)


# ---------------------------------------------------------------------------
# Chain sampling
# ---------------------------------------------------------------------------

class _ChainSampler:
    """Per-state cumulative-probability tables for table-driven letter and
    successor sampling."""

    def __init__(self, m: LabeledMarkovChain):
        self.m = m
        self.letters = tuple(m.alphabet)
        self.letter_index = {a: i for i, a in enumerate(self.letters)}
        self.state_index = {s: i for i, s in enumerate(m.states)}
        per_state: List[List[Tuple[float, int, int]]] = [[] for _ in m.states]
        for (s, a, s2), p in sorted(m.edge_prob.items(), key=repr):
            per_state[self.state_index[s]].append(
                (float(p), self.letter_index[a], self.state_index[s2]))
        width = max((len(es) for es in per_state), default=1) or 1
        self.cum = np.full((len(m.states), width), 2.0)
        self.edge_letter = np.zeros((len(m.states), width), dtype=np.int64)
        self.edge_next = np.zeros((len(m.states), width), dtype=np.int64)
        for i, es in enumerate(per_state):
            acc = 0.0
            for j, (p, li, ni) in enumerate(es):
                acc += p
                self.cum[i, j] = acc
                self.edge_letter[i, j] = li
                self.edge_next[i, j] = ni
            if es:
                self.cum[i, len(es) - 1] = 1.0 + 1e-9  # guard against rounding

    def step(self, chain_state: np.ndarray, u: np.ndarray):
        idx = (u[:, None] > self.cum[chain_state]).sum(axis=1)
        return (self.edge_letter[chain_state, idx],
                self.edge_next[chain_state, idx])


def sample_word(m: LabeledMarkovChain, length: int, seed: int,
                sample_index: int = 0) -> tuple:
    """Word of the given length sampled from the chain; fully determined by
    (seed, sample_index)."""
    sampler = _ChainSampler(m)
    cs = np.array([sampler.state_index[m.initial]])
    word = []
    for t in range(length):
        u = _np_uniforms(seed, t, sample_index + 1)[sample_index:]
        li, cs = sampler.step(cs, u)
        word.append(sampler.letters[li[0]])
    return tuple(word)


def sample_words(m: LabeledMarkovChain, length: int, seed: int,
                 count: int) -> list:
    """All of sample_word(m, length, seed, 0..count-1) at once."""
    sampler = _ChainSampler(m)
    cs = np.full(count, sampler.state_index[m.initial], dtype=np.int64)
    letters = np.zeros((count, length), dtype=np.int64)
    for t in range(length):
        u = _np_uniforms(seed, t, count)
        li, cs = sampler.step(cs, u)
        letters[:, t] = li
    return [tuple(sampler.letters[li] for li in row) for row in letters]


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    mean: float
    variance: float
    rejection_rate: float
    samples_used: int
    minimum: float = float("nan")
    maximum: float = float("nan")

    def stderr(self) -> float:
        if self.samples_used <= 1:
            return float("inf")
        return (self.variance / self.samples_used) ** 0.5


_KIND = {"limavg": 0, "inf": 1, "liminf": 1, "sup": 2, "limsup": 2}


def _finish(est: np.ndarray, counted: np.ndarray,
            rejected: np.ndarray) -> McEstimate:
    ok = (counted > 0) & ~rejected
    n_ok = int(ok.sum())
    n = rejected.shape[0]
    if n_ok == 0:
        return McEstimate(mean=float("nan"), variance=float("nan"),
                          rejection_rate=1.0, samples_used=0)
    vals = est[ok]
    mean = float(vals.mean())
    var = float(vals.var(ddof=1)) if n_ok > 1 else 0.0
    return McEstimate(mean=mean, variance=var,
                      rejection_rate=1.0 - n_ok / n, samples_used=n_ok,
                      minimum=float(vals.min()), maximum=float(vals.max()))


def monte_carlo_estimate(obj, m: LabeledMarkovChain, horizon: int,
                         samples: int, seed: int,
                         burn_in: Optional[int] = None,
                         max_active: int = 64) -> McEstimate:
    """Estimate the expected value of a nested automaton, a monitor-counter
    automaton, or a plain infinite-word weighted automaton by seeded
    simulation of ``samples`` prefixes of length ``horizon``.

    Completed slave values (terminated counter values, non-silent weights)
    from positions past the burn-in (default horizon/10) are folded through
    the estimator matching the master value function, and the per-sample
    estimates are aggregated into a mean and sample variance.  Samples that
    get stuck, run an illegal counter instruction, exceed ``max_active``
    concurrent slaves, or complete nothing count into the rejection rate.
    """
    if burn_in is None:
        burn_in = horizon // 10
    if burn_in > horizon:
        raise ValueError("burn-in exceeds the horizon")
    own = obj.master.alphabet if hasattr(obj, "master") else obj.alphabet
    if set(own) != set(m.alphabet):
        raise ValueError("automaton and chain must share an alphabet")
    sampler = _ChainSampler(m)
    if isinstance(obj, NestedWeightedAutomaton):
        run = _run_nwa(obj, sampler, horizon, samples, seed, burn_in,
                       max_active)
    elif isinstance(obj, MonitorCounterAutomaton):
        run = _run_mca(obj, sampler, horizon, samples, seed, burn_in)
    elif isinstance(obj, WeightedAutomaton):
        run = _run_wa(obj, sampler, horizon, samples, seed, burn_in)
    else:
        raise TypeError(f"cannot simulate {type(obj).__name__}")
    return _finish(*run)


def _letter_tables(states, alphabet, lidx):
    sidx = {s: i for i, s in enumerate(states)}
    nxt = np.full((len(states), len(alphabet)), -1, dtype=np.int64)
    return sidx, nxt


def _run_wa(wa, sampler, horizon, samples, seed, burn_in):
    if wa.word_mode != "infinite":
        raise ValueError("simulation needs an infinite-word automaton")
    lidx = sampler.letter_index
    sidx, nxt_t = _letter_tables(wa.states, sampler.letters, lidx)
    w_t = np.zeros_like(nxt_t)
    silent_t = np.ones(nxt_t.shape, dtype=np.bool_)
    for (q, a), (q2, w) in wa.transitions.items():
        nxt_t[sidx[q], lidx[a]] = sidx[q2]
        if not isinstance(w, _Bottom):
            w_t[sidx[q], lidx[a]] = int(w)
            silent_t[sidx[q], lidx[a]] = False
    est = np.zeros(samples)
    counted = np.zeros(samples, dtype=np.int64)
    rejected = np.zeros(samples, dtype=np.bool_)
    _wa_kernel(np.uint64(seed), horizon, burn_in, _KIND[wa.value_fn.kind],
               sampler.cum, sampler.edge_letter, sampler.edge_next,
               sampler.state_index[sampler.m.initial],
               nxt_t, w_t, silent_t, sidx[wa.initial],
               est, counted, rejected)
    return est, counted, rejected


@njit(cache=True, parallel=True)
def _wa_kernel(seed, horizon, burn_in, kind, cum, edge_letter, edge_next,
               cs0, nxt_t, w_t, silent_t, q0, est, counted, rejected):
    n = est.shape[0]
    for i in prange(n):
        cs = cs0
        q = q0
        total = 0.0
        cur = np.inf if kind == 1 else -np.inf
        cnt = 0
        for t in range(horizon):
            u = _uniform(seed, t, i)
            j = 0
            while u > cum[cs, j]:
                j += 1
            li = edge_letter[cs, j]
            cs = edge_next[cs, j]
            q2 = nxt_t[q, li]
            if q2 < 0:
                rejected[i] = True
                break
            if t >= burn_in and not silent_t[q, li]:
                w = w_t[q, li]
                if kind == 0:
                    total += w
                elif kind == 1:
                    cur = min(cur, float(w))
                else:
                    cur = max(cur, float(w))
                cnt += 1
            q = q2
        counted[i] = cnt
        est[i] = total / cnt if (kind == 0 and cnt > 0) else cur


def _run_mca(mca, sampler, horizon, samples, seed, burn_in):
    lidx = sampler.letter_index
    sidx = {s: i for i, s in enumerate(mca.states)}
    n = mca.counters
    shape = (len(mca.states), len(sampler.letters))
    nxt_t = np.full(shape, -1, dtype=np.int64)
    add_t = np.zeros(shape + (n,), dtype=np.int64)
    start_t = np.zeros(shape + (n,), dtype=np.bool_)
    term_t = np.zeros(shape + (n,), dtype=np.bool_)
    for (q, a), (q2, instr) in mca.transitions.items():
        i, j = sidx[q], lidx[a]
        nxt_t[i, j] = sidx[q2]
        for c, op in enumerate(instr):
            if op == START:
                start_t[i, j, c] = True
            elif op == TERMINATE:
                term_t[i, j, c] = True
            else:
                add_t[i, j, c] = int(op)
    est = np.zeros(samples)
    counted = np.zeros(samples, dtype=np.int64)
    rejected = np.zeros(samples, dtype=np.bool_)
    _mca_kernel(np.uint64(seed), horizon, burn_in, _KIND[mca.value_fn.kind],
                sampler.cum, sampler.edge_letter, sampler.edge_next,
                sampler.state_index[sampler.m.initial],
                nxt_t, add_t, start_t, term_t, sidx[mca.initial], n,
                est, counted, rejected)
    return est, counted, rejected


@njit(cache=True, parallel=True)
def _mca_kernel(seed, horizon, burn_in, kind, cum, edge_letter, edge_next,
                cs0, nxt_t, add_t, start_t, term_t, q0, n_counters,
                est, counted, rejected):
    n = est.shape[0]
    for i in prange(n):
        cs = cs0
        q = q0
        value = np.zeros(n_counters, dtype=np.int64)
        active = np.zeros(n_counters, dtype=np.bool_)
        born = np.zeros(n_counters, dtype=np.int64)
        total = 0.0
        cur = np.inf if kind == 1 else -np.inf
        cnt = 0
        for t in range(horizon):
            u = _uniform(seed, t, i)
            j = 0
            while u > cum[cs, j]:
                j += 1
            li = edge_letter[cs, j]
            cs = edge_next[cs, j]
            q2 = nxt_t[q, li]
            if q2 < 0:
                rejected[i] = True
                break
            bad = False
            for c in range(n_counters):
                if start_t[q, li, c]:
                    if active[c]:
                        bad = True
                        break
                    active[c] = True
                    value[c] = 0
                    born[c] = t
                elif term_t[q, li, c]:
                    if not active[c]:
                        bad = True
                        break
                    if born[c] >= burn_in:
                        if kind == 0:
                            total += value[c]
                        elif kind == 1:
                            cur = min(cur, float(value[c]))
                        else:
                            cur = max(cur, float(value[c]))
                        cnt += 1
                    active[c] = False
                else:
                    w = add_t[q, li, c]
                    if w != 0:
                        if not active[c]:
                            bad = True
                            break
                        value[c] += w
            if bad:
                rejected[i] = True
                break
            q = q2
        counted[i] = cnt
        est[i] = total / cnt if (kind == 0 and cnt > 0) else cur


def _run_nwa(nwa, sampler, horizon, samples, seed, burn_in, max_active):
    lidx = sampler.letter_index
    midx = {q: i for i, q in enumerate(nwa.master.states)}
    n_letters = len(sampler.letters)
    m_nxt = np.full((len(nwa.master.states), n_letters), -1, dtype=np.int64)
    m_label = np.zeros_like(m_nxt)
    for (q, a), (q2, label) in nwa.master.transitions.items():
        m_nxt[midx[q], lidx[a]] = midx[q2]
        m_label[midx[q], lidx[a]] = label
    k = len(nwa.slaves)
    max_states = max(len(s.states) for s in nwa.slaves)
    s_nxt = np.full((k + 1, max_states, n_letters), -1, dtype=np.int64)
    s_w = np.zeros_like(s_nxt)
    s_acc = np.zeros((k + 1, max_states), dtype=np.bool_)
    s_init = np.zeros(k + 1, dtype=np.int64)
    dummy = np.zeros(k + 1, dtype=np.bool_)
    for label in range(1, k + 1):
        sl = nwa.slave(label)
        si = {s: i for i, s in enumerate(sl.states)}
        s_init[label] = si[sl.initial]
        dummy[label] = sl.initial in sl.accepting
        for s in sl.accepting:
            s_acc[label, si[s]] = True
        for (q, a), (q2, w) in sl.transitions.items():
            s_nxt[label, si[q], lidx[a]] = si[q2]
            s_w[label, si[q], lidx[a]] = int(w)
    est = np.zeros(samples)
    counted = np.zeros(samples, dtype=np.int64)
    rejected = np.zeros(samples, dtype=np.bool_)
    _nwa_kernel(np.uint64(seed), horizon, burn_in,
                _KIND[nwa.master_fn.kind],
                sampler.cum, sampler.edge_letter, sampler.edge_next,
                sampler.state_index[sampler.m.initial],
                m_nxt, m_label, midx[nwa.master.initial],
                s_nxt, s_w, s_acc, s_init, dummy, max_active,
                est, counted, rejected)
    return est, counted, rejected


@njit(cache=True, parallel=True)
def _nwa_kernel(seed, horizon, burn_in, kind, cum, edge_letter, edge_next,
                cs0, m_nxt, m_label, q0, s_nxt, s_w, s_acc, s_init, dummy,
                max_active, est, counted, rejected):
    n = est.shape[0]
    for i in prange(n):
        cs = cs0
        q = q0
        lab = np.zeros(max_active, dtype=np.int64)
        st = np.zeros(max_active, dtype=np.int64)
        accum = np.zeros(max_active, dtype=np.int64)
        born = np.zeros(max_active, dtype=np.int64)
        total = 0.0
        cur = np.inf if kind == 1 else -np.inf
        cnt = 0
        for t in range(horizon):
            u = _uniform(seed, t, i)
            j = 0
            while u > cum[cs, j]:
                j += 1
            li = edge_letter[cs, j]
            cs = edge_next[cs, j]
            q2 = m_nxt[q, li]
            if q2 < 0:
                rejected[i] = True
                break
            label = m_label[q, li]
            if label > 0 and not dummy[label]:
                slot = -1
                for c in range(max_active):
                    if lab[c] == 0:
                        slot = c
                        break
                if slot < 0:
                    rejected[i] = True
                    break
                lab[slot] = label
                st[slot] = s_init[label]
                accum[slot] = 0
                born[slot] = t
            bad = False
            for c in range(max_active):
                if lab[c] == 0:
                    continue
                nx = s_nxt[lab[c], st[c], li]
                if nx < 0:
                    bad = True
                    break
                accum[c] += s_w[lab[c], st[c], li]
                if s_acc[lab[c], nx]:
                    if born[c] >= burn_in:
                        if kind == 0:
                            total += accum[c]
                        elif kind == 1:
                            cur = min(cur, float(accum[c]))
                        else:
                            cur = max(cur, float(accum[c]))
                        cnt += 1
                    lab[c] = 0
                else:
                    st[c] = nx
            if bad:
                rejected[i] = True
                break
            q = q2
        counted[i] = cnt
        est[i] = total / cnt if (kind == 0 and cnt > 0) else cur


# ---------------------------------------------------------------------------
# Exhaustive oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExhaustiveResult:
    """Exact expectation over completions within the depth, plus how the
    remaining probability mass splits."""

    value_sum: Fraction        # sum over completed words of P(word) * value
    completed_mass: Fraction   # non-silent completions
    bottom_mass: Fraction      # silent (dummy) completions
    residual_mass: Fraction    # still running at the depth
    rejected_mass: Fraction

    def restricted_expectation(self) -> Fraction:
        return self.value_sum


def exhaustive_prefix_expectation(slave: WeightedAutomaton,
                                  m: LabeledMarkovChain,
                                  start_state,
                                  depth: int) -> ExhaustiveResult:
    """Exact expectation of a slave's value over all chain-generated words
    completing within ``depth`` letters of the launch, with the residual
    (still-running) and rejected masses reported."""
    if depth > MAX_EXHAUSTIVE_DEPTH:
        raise DepthCap(f"depth {depth} exceeds cap {MAX_EXHAUSTIVE_DEPTH}")
    from .core import to_sum_slave

    if slave.initial in slave.accepting:
        return ExhaustiveResult(Fraction(0), Fraction(0), Fraction(1),
                                Fraction(0), Fraction(0))
    sl = to_sum_slave(slave)
    # per (slave state, chain state): (probability mass, mass-weighted
    # accumulated value)
    layer: Dict[Tuple, Tuple[Fraction, Fraction]] = {
        (sl.initial, start_state): (Fraction(1), Fraction(0))}
    value_sum = Fraction(0)
    completed = Fraction(0)
    rejected = Fraction(0)
    for _ in range(depth):
        nxt: Dict[Tuple, Tuple[Fraction, Fraction]] = {}
        for (u, cs), (mass, acc) in layer.items():
            for (s1, a, s2), p in m.edge_prob.items():
                if s1 != cs:
                    continue
                mv = sl.step(u, a)
                if mv is None:
                    rejected += mass * p
                    continue
                u2, w = mv
                mass2 = mass * p
                acc2 = acc * p + mass2 * int(w)
                if u2 in sl.accepting:
                    value_sum += acc2
                    completed += mass2
                else:
                    old = nxt.get((u2, s2), (Fraction(0), Fraction(0)))
                    nxt[(u2, s2)] = (old[0] + mass2, old[1] + acc2)
        layer = nxt
        if not layer:
            break
    residual = sum((mass for mass, _acc in layer.values()), Fraction(0))
    return ExhaustiveResult(value_sum=value_sum, completed_mass=completed,
                            bottom_mass=Fraction(0), residual_mass=residual,
                            rejected_mass=rejected)


# ---------------------------------------------------------------------------
# Prefix-trace equivalence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    counterexample: Optional[tuple] = None
    reason: Optional[str] = None


def _claims(obj, word):
    """(completed {position: value}, open positions, death position)."""
    if isinstance(obj, NestedWeightedAutomaton):
        trace = simulate_nwa_prefix(obj, word)
        completed = {p: Fraction(v) for p, v in trace.completed_map().items()}
        open_pos = set(trace.pending_positions())
        death = trace.first_rejection()
        from .nwa import Rejected

        open_pos |= {i for i, o in enumerate(trace.outcomes)
                     if isinstance(o, Rejected)}
        return completed, open_pos, death
    if isinstance(obj, MonitorCounterAutomaton):
        try:
            trace = simulate_mca_prefix(obj, word)
        except RuntimeInstructionError as exc:
            completed, open_pos, _death = _claims(obj, word[:exc.position])
            return completed, open_pos, exc.position
        completed = {p: Fraction(v) for p, v in trace.emissions}
        return completed, set(trace.pending_positions()), trace.stuck
    raise TypeError(f"cannot extract prefix claims from {type(obj).__name__}")


def check_equivalence_on_prefixes(a, b, alphabet: Optional[Sequence[str]] = None,
                                  max_len: int = 8) -> EquivalenceResult:
    """Exhaustively compare per-position completed values of two automata
    (nested or monitor-counter) on every word up to ``max_len``.

    Both sides must die at the same position (or not at all); where both
    have completed a launch the values must agree exactly; a launch
    completed on one side may still be in flight on the other (counter
    terminations may trail slave completion by up to two steps), but may
    not be absent.
    """
    if alphabet is None:
        alphabet = (a.master.alphabet if hasattr(a, "master") else a.alphabet)
    letters = sorted(alphabet)

    def compare(word):
        ca, oa, da = _claims(a, word)
        cb, ob, db = _claims(b, word)
        if da != db:
            return f"death positions differ: {da} vs {db}"
        for p in set(ca) | set(cb) | oa | ob:
            in_a = ("done", ca[p]) if p in ca else ("open" if p in oa else "absent")
            in_b = ("done", cb[p]) if p in cb else ("open" if p in ob else "absent")
            if in_a == "absent" and in_b == "absent":
                continue
            if in_a == "absent" or in_b == "absent":
                if da is not None and p >= da:
                    continue  # half-committed launch at the death position
                return f"position {p}: {in_a} vs {in_b}"
            if in_a != "open" and in_b != "open" and in_a[1] != in_b[1]:
                return f"position {p}: values {in_a[1]} vs {in_b[1]}"
        return None

    stack = [()]
    while stack:
        word = stack.pop()
        if len(word) == max_len:
            reason = compare(word)
            if reason is not None:
                return EquivalenceResult(False, counterexample=word,
                                         reason=reason)
            continue
        for x in letters:
            stack.append(word + (x,))
    return EquivalenceResult(True)
