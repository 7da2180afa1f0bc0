"""Planning with factored linear models of finite MDPs and auditing their policy-error bounds."""

from .bounds import (
    AuditConfig,
    BoundReport,
    TheoremRecord,
    adp_bounds,
    audit,
    baseline_bound,
    bound_lp,
    bound_lp_linear_r,
    bound_lp_via_wsup,
    bound_sup,
    bound_wsup,
    concentrability,
)
from .counterexamples import ExampleInstance, error_gaps_mdp, harsh_mdp, tightness_mdp, verify_example
from .errors import (
    AssumptionViolated,
    DivergedError,
    FactoredMDPError,
    MaxIterationsError,
    NotContractiveError,
    UnsupportedNormError,
    ValidationError,
)
from .mdp import (
    Mdp,
    bellman_return,
    greedy,
    max_select,
    optimal_values,
    policy_evaluation,
    policy_select,
    random_mdp,
    value_iteration,
)
from .model import (
    FactoredLinearModel,
    GeneralRight,
    JoinHomRight,
    apply_R,
    contraction_modulus,
    hard_aggregation,
    kbrl_model,
    point_evaluator,
    random_normalized,
    soft_aggregation,
    t_piaq,
    t_q,
    unfactored_identity,
    validate_join_hom,
)
from .norms import NormSpec, NormedOperator, lip_point_evaluator_lp, lyapunov_beta, mixed_norm, op_norm, vec_norm
from .planner import PlanResult, compressed_value_iteration, extract_policy, lift, plan

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated",
    "AuditConfig",
    "BoundReport",
    "DivergedError",
    "ExampleInstance",
    "FactoredLinearModel",
    "FactoredMDPError",
    "GeneralRight",
    "JoinHomRight",
    "MaxIterationsError",
    "Mdp",
    "NormSpec",
    "NormedOperator",
    "NotContractiveError",
    "PlanResult",
    "TheoremRecord",
    "UnsupportedNormError",
    "ValidationError",
    "adp_bounds",
    "apply_R",
    "audit",
    "baseline_bound",
    "bellman_return",
    "bound_lp",
    "bound_lp_linear_r",
    "bound_lp_via_wsup",
    "bound_sup",
    "bound_wsup",
    "compressed_value_iteration",
    "concentrability",
    "contraction_modulus",
    "error_gaps_mdp",
    "extract_policy",
    "greedy",
    "hard_aggregation",
    "harsh_mdp",
    "kbrl_model",
    "lift",
    "lip_point_evaluator_lp",
    "lyapunov_beta",
    "max_select",
    "mixed_norm",
    "op_norm",
    "optimal_values",
    "plan",
    "point_evaluator",
    "policy_evaluation",
    "policy_select",
    "random_mdp",
    "random_normalized",
    "soft_aggregation",
    "t_piaq",
    "t_q",
    "tightness_mdp",
    "unfactored_identity",
    "validate_join_hom",
    "value_iteration",
    "vec_norm",
    "verify_example",
]
