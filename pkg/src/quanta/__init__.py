"""Nested weighted automata, automata with monitor counters, and their
probabilistic analysis over labeled Markov chains, in exact rational
arithmetic."""

from .core import (
    BOTTOM, INF, LIMAVG, LIMINF, LIMSUP, MAX, MIN, NEG_INF, POS_INF, SUM,
    SUM_PLUS, SUP, EmptyAfterFilter, FinValFn, InfValFn, LabeledAutomaton,
    NotDualizable, QuantaError, WeightedAutomaton, apply_finval, bsum,
    dualize, estimate_infval, normalize_slave, run_weighted_finite,
    slave_outcome, to_sum_slave, unary_size,
)
from .markov import (
    AllSilentEndScc, DiscreteDistribution, LabeledMarkovChain, LimAvgResult,
    NotIrreducible, ProductChain, SingularSystem, end_sccs, limavg_of_chain,
    product_chain, reach_probabilities, stationary_distribution,
    validate_chain, word_prefix_probability,
)
from .mca import (
    MonitorCounterAutomaton, RuntimeInstructionError, START, TERMINATE,
    mca_to_nwa, simulate_mca_prefix, validate_mca,
)
from .nwa import (
    NestedWeightedAutomaton, WidthExceeded, check_width_bound, nwa_to_mca,
    simulate_nwa_prefix, validate_nwa,
)
from .analysis import (
    AnalysisReport, NoAcceptingPath, NotAlmostSureAccepting,
    NotAlmostSurelyTerminating, OpenProblem, RejectionMassPositive,
    SumUnboundedBelow, UndefinedExpected, almost_sure_acceptance,
    analyze_deterministic_wa, analyze_inf_exact, analyze_liminf_nwa,
    analyze_limavg_nwa, analyze_nwa, approx_inf_sum, bsum_nwa_to_inf_wa,
    distribution_at, min_achievable_slave_value, slave_expected_value,
    truncation_bound,
)
from .sim import (
    DepthCap, EquivalenceResult, ExhaustiveResult, McEstimate,
    check_equivalence_on_prefixes, exhaustive_prefix_expectation,
    monte_carlo_estimate, sample_word, sample_words,
)

__version__ = "0.1.0"
