"""Coalescence times of iterated uniform random functions on a finite set.

Compose independent uniform random functions f_1, f_2, ... from [n] to
[n] and stop at the first step T whose composition is constant.  This
package computes the exact finite-n law of T through the range-size
Markov chain, samples trajectories fast at large n, evaluates the
limiting law of T/n (the absorption time of Kingman's coalescent), and
tests simulations against that limit.
"""

from .analysis import FitReport, dkw_epsilon, fit_report, ks_statistic
from .chain import (
    DEFAULT_EXACT_CEILING,
    RangeChain,
    build_chain,
    lambda_stay,
    stirling2,
    transition_prob,
)
from .errors import ResourceCeilingError
from .exact import (
    DiscretePMF,
    SplitSpec,
    conditional_t1_charfn,
    conditional_t1_pmf,
    expected_visited_count,
    tau_conditional_pmf,
    time_to_constant_pmf,
    visit_probabilities,
    visit_probability,
)
from .limitlaw import (
    LimitLawConfig,
    SeriesEval,
    cdf,
    charfn_closed,
    charfn_product,
    density,
    limit_moments,
)
from .montecarlo import (
    ExperimentConfig,
    SimSummary,
    TrajectorySample,
    distinct_count_sample,
    run_experiment,
    sample_chain,
    sample_direct,
)
from .rng import RandomStream

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_EXACT_CEILING",
    "DiscretePMF",
    "ExperimentConfig",
    "FitReport",
    "LimitLawConfig",
    "RandomStream",
    "RangeChain",
    "ResourceCeilingError",
    "SeriesEval",
    "SimSummary",
    "SplitSpec",
    "TrajectorySample",
    "build_chain",
    "cdf",
    "charfn_closed",
    "charfn_product",
    "conditional_t1_charfn",
    "conditional_t1_pmf",
    "density",
    "distinct_count_sample",
    "dkw_epsilon",
    "expected_visited_count",
    "fit_report",
    "ks_statistic",
    "lambda_stay",
    "limit_moments",
    "run_experiment",
    "sample_chain",
    "sample_direct",
    "stirling2",
    "tau_conditional_pmf",
    "time_to_constant_pmf",
    "transition_prob",
    "visit_probabilities",
    "visit_probability",
]
