"""The five probabilistic questions, and what gets refused.

Expected value, distribution, approximation, and the almost-sure question
all flow from one report.  Exact questions that no algorithm can answer are
refused with a pointer to the approximation: summing slaves with a
negative cycle make the exact infimum question uncomputable, and the
expected value of sup-of-absolute-sums automata is an open problem (its
distribution question still works).
"""

from fractions import Fraction

from quanta import (
    INF, SUM, SUM_PLUS, SUP, LabeledAutomaton, NestedWeightedAutomaton,
    OpenProblem, SumUnboundedBelow, WeightedAutomaton, analyze_nwa,
    approx_inf_sum, distribution_at,
)
from quanta.gen import uniform_chain

chain = uniform_chain(("a", "b"))
master = LabeledAutomaton(
    alphabet=("a", "b"), states=("m",), initial="m",
    transitions={("m", "a"): ("m", 1), ("m", "b"): ("m", 1)},
    accepting=frozenset({"m"}))


def one_step_slave(value_fn, wa=1, wb=2):
    return WeightedAutomaton(
        alphabet=("a", "b"), states=("s", "acc"), initial="s",
        transitions={("s", "a"): ("acc", wa), ("s", "b"): ("acc", wb)},
        accepting=frozenset({"acc"}), value_fn=value_fn, word_mode="finite")


# Q1/Q2/Q5 from one exact report
nwa = NestedWeightedAutomaton(master=master, master_fn=INF,
                              slaves=(one_step_slave(SUM_PLUS),))
report = analyze_nwa(nwa, chain)
lam = Fraction(3, 2)
print(f"expected {report.expected}; D({lam}) = {report.cdf(lam)}; "
      f"almost surely <= {lam}: {report.almost_sure(lam)}")

# Q3/Q4: truncation-certified approximation
approx = approx_inf_sum(nwa, chain, Fraction(1, 100))
print(f"approx expected {approx.expected} "
      f"(certified clip bound B = {approx.params['B']})")

# refusals
looping = WeightedAutomaton(
    alphabet=("a", "b"), states=("s", "acc"), initial="s",
    transitions={("s", "a"): ("s", -1), ("s", "b"): ("acc", 0)},
    accepting=frozenset({"acc"}), value_fn=SUM, word_mode="finite")
unbounded = NestedWeightedAutomaton(master=master, master_fn=INF,
                                    slaves=(looping,))
try:
    analyze_nwa(unbounded, chain)
except SumUnboundedBelow as exc:
    print(f"refused: {exc}")
print(f"  ... but approximable: "
      f"{approx_inf_sum(unbounded, chain, Fraction(1, 10)).expected}")

sup_plus = NestedWeightedAutomaton(master=master, master_fn=SUP,
                                   slaves=(one_step_slave(SUM_PLUS),))
try:
    analyze_nwa(sup_plus, chain)
except OpenProblem as exc:
    print(f"refused: {exc}")
print(f"  ... but its distribution works: D(2) = "
      f"{distribution_at(sup_plus, chain, Fraction(2))}")
