"""Random-priority one-sided matching: mechanisms, generators, bounds, experiments."""

__version__ = "0.1.0"

from .core import (
    Allocation,
    Matching,
    ValuationProfile,
    agent_utility,
    fixed_entries,
    matrix_norm,
    read_profile_csv,
    social_welfare,
    validate_unit_range,
    write_profile_csv,
)
from .generate import (
    HardFamilyParams,
    PerturbationSpec,
    hard_instance,
    perturb,
    sample_uniform_profile,
)
from .matching import brute_force_opt, max_weight_matching
from .mechanisms import (
    N_EXACT,
    RpMode,
    random_priority_exact,
    random_priority_sampled,
    rp_exact_welfare,
    rp_welfare,
    serial_dictatorship,
)
from .bounds import (
    BoundReport,
    average_ratio_bound,
    default_tail_exponent,
    gauss_mass_in_range,
    gauss_mass_lower_bound,
    half_welfare_check,
    irwin_hall_cdf,
    low_welfare_fraction_bound,
    row_sum_cdf,
    smoothed_ratio_bound,
    welfare_tail_bound,
)
from .harness import (
    RNG_ID,
    BayesianRatio,
    ExperimentConfig,
    RatioEstimate,
    SearchResult,
    WorstFamilyResult,
    default_candidates,
    estimate_average_ratio,
    estimate_bayesian_ratio,
    estimate_smoothed_ratio,
    run_experiment,
    smoothed_ratio_search,
    substream,
    worst_family_sweep,
)

__all__ = [
    "__version__",
    "Allocation",
    "Matching",
    "ValuationProfile",
    "agent_utility",
    "fixed_entries",
    "matrix_norm",
    "read_profile_csv",
    "social_welfare",
    "validate_unit_range",
    "write_profile_csv",
    "HardFamilyParams",
    "PerturbationSpec",
    "hard_instance",
    "perturb",
    "sample_uniform_profile",
    "brute_force_opt",
    "max_weight_matching",
    "N_EXACT",
    "RpMode",
    "random_priority_exact",
    "random_priority_sampled",
    "rp_exact_welfare",
    "rp_welfare",
    "serial_dictatorship",
    "BoundReport",
    "average_ratio_bound",
    "default_tail_exponent",
    "gauss_mass_in_range",
    "gauss_mass_lower_bound",
    "half_welfare_check",
    "irwin_hall_cdf",
    "low_welfare_fraction_bound",
    "row_sum_cdf",
    "smoothed_ratio_bound",
    "welfare_tail_bound",
    "RNG_ID",
    "BayesianRatio",
    "ExperimentConfig",
    "RatioEstimate",
    "SearchResult",
    "WorstFamilyResult",
    "default_candidates",
    "estimate_average_ratio",
    "estimate_bayesian_ratio",
    "estimate_smoothed_ratio",
    "run_experiment",
    "smoothed_ratio_search",
    "substream",
    "worst_family_sweep",
]
