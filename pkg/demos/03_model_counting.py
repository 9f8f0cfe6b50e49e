"""Counting satisfying assignments with an infimum automaton.

Each clause becomes a slave judging the assignment block of the word; the
word's value is 1 exactly when all clauses hold.  Over the uniform bit
source the expected value times 2^n is the model count, computed here
exactly through the clipped-sum compilation, and checked against brute
force.
"""

from quanta import analyze_inf_exact
from quanta.gen import cnf_to_nwa, count_satisfying_assignments, uniform_chain

chain = uniform_chain(("0", "1"))

for clauses, n in [
    ([[1, 2]], 2),          # x1 or x2
    ([[1], [-1]], 1),       # contradiction
    ([[1, -2], [2, 3]], 3),
]:
    nwa = cnf_to_nwa(clauses, n)
    report = analyze_inf_exact(nwa, chain)
    models = report.expected * 2 ** n
    brute = count_satisfying_assignments(clauses, n)
    print(f"clauses {clauses} over {n} vars: expected {report.expected}, "
          f"models {models} (brute force {brute})")
    assert models == brute
