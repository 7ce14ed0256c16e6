"""Exact desk-scale analysis of randomized experiments on networks.

The package enumerates small designs exactly: assignment laws and their
support, exposure events on graphs, potential-outcome tables under three
interference structures, estimators with a uniform (assignment, observed
outcomes) signature, closed-form variance identities cross-checked against
enumeration, least-squares existence certificates for unbiased estimators,
worst-case MSE constructions, and random-graph moment formulas with
exhaustive and Monte Carlo oracles.
"""

from ._kernels import active_backend
from .designs import (
    ARM_A,
    ARM_B,
    ENUMERATION_CAP,
    Assignment,
    Design,
    enumerate_support,
    exposure_probability,
    pmf,
    sample,
    support_size,
)
from .er import (
    DENSE,
    SPARSE,
    ConstantOutcomes,
    ERSpec,
    MCVariance,
    UniformOutcomes,
    classify_regime,
    dense_lower_bound,
    exhaustive_expected_variance,
    exhaustive_moments,
    expected_effective_treatments,
    expected_informative_fraction,
    h_bound,
    mc_expected_variance,
    moment_two_pow_nbhd,
    moment_two_pow_shared,
    prob_no_common,
    regime_report,
    sample_er_graph,
)
from .errors import (
    CapacityError,
    ConfigError,
    FeasibilityPrecisionError,
    GraphFormatError,
    IncompleteEstimatorError,
    IncompleteTableError,
    InterferenceLabError,
    InvalidArgumentError,
    InvalidDesignError,
    UnsupportedDesignError,
    UnsupportedEstimandError,
)
from .estimators import (
    ConstantEstimator,
    DifferenceInMeans,
    HorvitzThompson,
    PureArmIPW,
    SoloTreatedIPW,
    TabularEstimator,
    diff_in_means,
    ht_estimate,
    observed_key,
)
from .exact import (
    HTVarianceTerms,
    MomentReport,
    NeymanTerms,
    exact_moments,
    ht_variance_closed_form,
    neyman_variance_terms,
)
from .feasibility import (
    AdversaryResult,
    FeasibilityCertificate,
    default_witness_family,
    mse_adversary,
    unbiased_feasibility,
)
from .graphs import (
    Arbitrary,
    Graph,
    InterferenceStructure,
    KLocal,
    NeighborhoodIndex,
    NoInterference,
    effective_treatment,
    effective_treatment_count,
    effective_treatment_key,
    informative_set,
    is_exposed,
    k_step_neighborhood,
    reference_group,
)
from .outcomes import (
    ATE,
    AdditiveEstimand,
    AverageTreatmentEffect,
    Estimand,
    PotentialOutcomeTable,
    SoloTreatmentEffect,
    estimand_value,
)

__version__ = "0.1.0"
