"""Monitor counters in action: the blocks-difference automaton.

Words shaped ##a^k#a^m# get the value |k - m| per block: two counters are
started on the leading separators, count the blocks in opposite directions,
and are terminated together; the sup over emissions picks the absolute
difference.  The same automaton translates into a nested weighted automaton
whose per-position values coincide on every word.
"""

from quanta import check_equivalence_on_prefixes, mca_to_nwa, simulate_mca_prefix
from quanta.gen import build_blocks_diff

mca = build_blocks_diff()

for k, m in [(2, 5), (4, 1), (3, 3)]:
    word = tuple("##" + "a" * k + "#" + "a" * m + "#")
    trace = simulate_mca_prefix(mca, word)
    print(f"block k={k} m={m}: emissions {trace.emissions} "
          f"-> sup {max(v for _p, v in trace.emissions)}")

nwa = mca_to_nwa(mca)
print(f"\ntranslated nested automaton: {len(nwa.slaves)} slaves "
      f"(dummies: {sorted(nwa.dummy_indices)})")
result = check_equivalence_on_prefixes(mca, nwa, max_len=10)
print(f"prefix-trace equivalence up to length 10: {result.equivalent}")
