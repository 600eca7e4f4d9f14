"""Unsupervised sequential selection bandits: environments, policies,
oracles, and a seeded regret harness."""

__version__ = "0.1.0"

from .core import (
    JointTable,
    PropertyReport,
    UssInstance,
    candidate_set_b,
    check_sd,
    check_wd,
    disagreement_matrix,
    error_rates,
    optimal_arm,
    report_from_table,
    sub_optimality_gaps,
    verify_prop1,
    xi_values,
)
from .environments import (
    BscGenerator,
    FeedbackRound,
    TraceSource,
    empirical_properties,
    generate_rounds,
    load_trace,
    make_bsc_instance,
    sample_round,
    to_joint_table,
)
from .harness import (
    ExperimentConfig,
    RegretCurve,
    SweepPoint,
    bound_curve,
    kl_bernoulli,
    run_episode,
    run_experiment,
    true_properties,
    xi_sweep,
    xi_transition_ok,
)
from .policies import (
    FixedArmPolicy,
    PolicyDecision,
    ThompsonSamplingPolicy,
    UcbPolicy,
    preferences,
    transitivity_violations,
)

__all__ = [
    "BscGenerator",
    "ExperimentConfig",
    "FeedbackRound",
    "FixedArmPolicy",
    "JointTable",
    "PolicyDecision",
    "PropertyReport",
    "RegretCurve",
    "SweepPoint",
    "ThompsonSamplingPolicy",
    "TraceSource",
    "UcbPolicy",
    "UssInstance",
    "bound_curve",
    "candidate_set_b",
    "check_sd",
    "check_wd",
    "disagreement_matrix",
    "empirical_properties",
    "error_rates",
    "generate_rounds",
    "kl_bernoulli",
    "load_trace",
    "make_bsc_instance",
    "optimal_arm",
    "preferences",
    "report_from_table",
    "run_episode",
    "run_experiment",
    "sample_round",
    "sub_optimality_gaps",
    "to_joint_table",
    "transitivity_violations",
    "true_properties",
    "verify_prop1",
    "xi_sweep",
    "xi_transition_ok",
    "xi_values",
]
