"""Turn-based stochastic game workbench.

Exact equilibrium planners for tabular two-player turn-based stochastic
games, a generative-model sampling pipeline that plans in the estimated
game, analytical game transforms (absorbing rewrites, reward
perturbation, reward-response traces), and a seeded experiment harness
that checks the theory numerically.
"""

from ._kernels import backend_name
from .analysis import (
    SampleSizeQuery,
    bernstein_coverage_experiment,
    bernstein_envelope,
    check_lemma1_identity,
    check_variance_bound,
    gap_frequency_experiment,
    one_step_variance,
    sample_size_bound,
)
from .corpus import bundled_games, hand_built_games
from .experiments import ResultRow, ScalingConfig, ScalingSummary, run_scaling_study
from .generators import GeneratorSpec, generate_game
from .model import (
    MAX,
    MIN,
    GameModel,
    GapReport,
    StrategyPair,
    ValueTable,
    load_game,
    save_game,
    validate_game,
)
from .sampling import (
    EmpiricalModel,
    PluginResult,
    estimate_model,
    load_counts,
    plug_in_pipeline,
    sample_transition,
    save_counts,
    substream,
)
from .solve import (
    CertificationRecord,
    brute_force_nash,
    certify_epsilon_nash,
    counterstrategy,
    evaluate_pair,
    greedy_pair,
    nash_strategy_iteration,
    nash_value_iteration,
    shapley_residual,
    suboptimality_gap_counter,
    suboptimality_gap_nash,
)
from .transforms import (
    AbsorbingSpec,
    CoverSet,
    PerturbationSpec,
    TauTrace,
    build_cover,
    cover_cardinality,
    make_absorbing,
    perturb_rewards,
    perturbation_gap_threshold,
    trace_nash_q_vs_tau,
    trace_to_csv,
    u_for_strategy,
    u_star,
)
from .verification import verify_lemmas

__version__ = "0.1.0"

__all__ = [
    "MAX",
    "MIN",
    "AbsorbingSpec",
    "CertificationRecord",
    "CoverSet",
    "EmpiricalModel",
    "GameModel",
    "GapReport",
    "GeneratorSpec",
    "PerturbationSpec",
    "PluginResult",
    "ResultRow",
    "SampleSizeQuery",
    "ScalingConfig",
    "ScalingSummary",
    "StrategyPair",
    "TauTrace",
    "ValueTable",
    "backend_name",
    "bernstein_coverage_experiment",
    "bernstein_envelope",
    "brute_force_nash",
    "build_cover",
    "bundled_games",
    "certify_epsilon_nash",
    "check_lemma1_identity",
    "check_variance_bound",
    "counterstrategy",
    "cover_cardinality",
    "estimate_model",
    "evaluate_pair",
    "gap_frequency_experiment",
    "generate_game",
    "greedy_pair",
    "hand_built_games",
    "load_counts",
    "load_game",
    "make_absorbing",
    "nash_strategy_iteration",
    "nash_value_iteration",
    "one_step_variance",
    "perturb_rewards",
    "perturbation_gap_threshold",
    "plug_in_pipeline",
    "run_scaling_study",
    "sample_size_bound",
    "sample_transition",
    "save_counts",
    "save_game",
    "shapley_residual",
    "suboptimality_gap_counter",
    "suboptimality_gap_nash",
    "substream",
    "trace_nash_q_vs_tau",
    "trace_to_csv",
    "u_for_strategy",
    "u_star",
    "validate_game",
    "verify_lemmas",
]
