"""Online selection policies for the finite-support multi-secretary problem."""

__version__ = "0.1.0"

from .distribution import (
    AbilityDistribution,
    ThresholdSet,
    action_index_j0,
    dist_from_dict,
    dist_from_json,
    half_min_mass,
    load_distribution,
    mean,
    new_distribution,
    sample,
    survival,
    thresholds,
)
from .dp import DPTable, accept_cut, accept_threshold, full_value_check, optimal_value, solve
from .errors import (
    BadDelta,
    BadEpsilon,
    BadPmf,
    CountMismatch,
    DimensionMismatch,
    IndexOutOfRange,
    InfeasiblePair,
    InstanceTooLarge,
    ModelError,
    NonDecreasingSupport,
    NonMarkovPolicy,
    NonPositiveValue,
    TableMismatch,
)
from .evaluate import (
    RegretRecord,
    clear_caches,
    exact_policy_value,
    exact_regret,
    mc_regret,
    sweep,
    write_records,
)
from .offline import (
    OfflineResult,
    OfflineValue,
    RealizationCounts,
    binomial_overshoot,
    binomial_undershoot,
    dr_solution,
    offline_expectation,
    offline_expected_value,
    offline_sort,
)
from .policies import (
    AdaptiveIndexPolicy,
    BudgetRatioPolicy,
    Decision,
    DpPolicy,
    NonAdaptiveMatrix,
    NonAdaptivePolicy,
    PolicyContext,
    ai_decide,
    ai_ratio_increment_mean,
    br_decide,
    dp_decide,
    index_matrix,
    make_policy,
    nonadaptive_decide,
    take_top_matrix,
)
from .simulate import (
    EpisodeRecord,
    OrbitDiagnostics,
    OrbitSample,
    cutoff_time,
    drift_at_state,
    episode_stream,
    orbit_diagnostics,
    orbit_stats,
    paired_payoffs,
    ratio_mean_curve,
    run_episode,
    simulate_paths,
)
