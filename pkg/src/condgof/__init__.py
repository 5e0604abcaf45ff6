"""Exact conditional goodness-of-fit tests for count data.

Under a geometric null the sample given its total is uniform over the
compositions of the total, so p-values can be simulated without estimating
the geometric parameter.
"""

from .conditional import (
    PowerSeriesMH,
    bars_to_composition,
    composition_to_bars,
    sample_conditional_binomial,
    sample_conditional_geometric,
    sample_conditional_negbinomial,
    sample_conditional_poisson,
    sample_conditional_powerseries_mh,
)
from .datasets import load_fixture, parse_dataset, read_dataset
from .distributions import (
    BetaGeometric,
    Binomial,
    DiscreteWeibull,
    Geometric,
    NegBinomial,
    Poisson,
    PowerSeries,
    fit_betageometric,
    fit_discrete_weibull,
    fit_geometric,
)
from .engine import (
    StudyResult,
    StudySpec,
    TestResult,
    conditional_p_value,
    conditional_p_values,
    run_power_study,
    run_type1_study,
)
from .errors import (
    CondGofError,
    DegenerateSampleError,
    EstimationError,
    InfeasibleTotalError,
    MalformedInputError,
    ParameterError,
    ParseError,
    SupportError,
    UndefinedStatisticError,
)
from .sample import Sample
from .stats import ALL_STATISTICS, STUDY_STATISTICS, Statistic, evaluate, grouped_summary

__version__ = "0.1.0"
