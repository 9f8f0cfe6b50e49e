"""Expected average response time, exactly.

The nested automaton launches a response-time slave on every request; the
slave counts letters up to the grant.  Against the request-grant chain
(null steps with probability 1/2) the expected limit average is exactly 2:
the per-launch expected slave value re-weights the product chain, whose
mean payoff is then solved in exact rational arithmetic.  A seeded Monte
Carlo run agrees.
"""

from fractions import Fraction

from quanta import (
    analyze_limavg_nwa, check_width_bound, monte_carlo_estimate,
    simulate_nwa_prefix, slave_expected_value,
)
from quanta.gen import build_art, request_grant_chain

art = build_art(2)
chain = request_grant_chain(Fraction(1, 2))

trace = simulate_nwa_prefix(art, tuple("r##g"))
print(f"slave launched on the request of 'r##g' returns "
      f"{trace.completed_map()[0]}")
print(f"width bounded by 2: {check_width_bound(art, 2).bounded}")
print(f"expected slave value from a fresh request: "
      f"{slave_expected_value(art.slaves[1], chain, 's0')}")

report = analyze_limavg_nwa(art, chain)
print(f"\nexpected average response time: {report.expected} "
      f"(distribution {report.distribution.points})")

est = monte_carlo_estimate(art, chain, horizon=10_000, samples=20_000,
                           seed=7, max_active=2)
print(f"Monte Carlo (horizon 1e4, 2e4 samples): {est.mean:.4f} "
      f"+- {4 * est.stderr():.4f}")
