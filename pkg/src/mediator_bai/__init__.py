"""Best-arm identification under mediators' feedback.

The learner cannot pull arms directly: it queries mediators, each holding a
fixed stochastic arm policy, and observes which arm the mediator pulled and
the reward.  This package computes the instance's characteristic time and
oracle querying weights, runs a track-and-stop agent (known or estimated
policies) plus baselines, and drives seeded Monte-Carlo experiments.
"""

from .bandits import (
    BanditModel,
    DistributionFamily,
    MediatorSample,
    MediatorSet,
    RngStream,
    binary_kl,
    dirac_mediators,
    generalized_js,
    kl_divergence,
    sample_step,
)
from .characteristic_time import (
    AltInfimumBreakdown,
    ClassicalComparison,
    OracleSolution,
    alt_infimum,
    compare_with_classical,
    g_value,
    lower_bound,
    single_mediator_closed_form,
    solve_characteristic_time,
)
from .engine import (
    EngineConfig,
    Mode,
    RunRecord,
    StoppingConfig,
    TrackingState,
    beta_threshold,
    epsilon_t,
    glr_statistic,
    project_weights,
    prune_duplicate_policies,
    run_trial,
    select_mediator,
    update_policy_estimates,
)
from .harness import (
    AggregateRow,
    ConfigError,
    ExperimentConfig,
    bundled_config_path,
    characteristic_time_report,
    parse_config,
    run_experiment,
    write_csv,
    write_ctime_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "AltInfimumBreakdown",
    "BanditModel",
    "ClassicalComparison",
    "ConfigError",
    "DistributionFamily",
    "EngineConfig",
    "ExperimentConfig",
    "MediatorSample",
    "MediatorSet",
    "Mode",
    "OracleSolution",
    "RngStream",
    "RunRecord",
    "StoppingConfig",
    "TrackingState",
    "alt_infimum",
    "beta_threshold",
    "binary_kl",
    "bundled_config_path",
    "characteristic_time_report",
    "compare_with_classical",
    "dirac_mediators",
    "epsilon_t",
    "g_value",
    "generalized_js",
    "glr_statistic",
    "kl_divergence",
    "lower_bound",
    "parse_config",
    "project_weights",
    "prune_duplicate_policies",
    "run_experiment",
    "run_trial",
    "sample_step",
    "select_mediator",
    "single_mediator_closed_form",
    "solve_characteristic_time",
    "update_policy_estimates",
    "write_csv",
    "write_ctime_csv",
]
