"""Solver and verification toolkit for the average and discounted control of
piecewise deterministic Markov processes."""

from ._pdmp import (
    AverageSolution,
    ContractViolation,
    ConvergenceError,
    CostEstimate,
    DiscountedSolution,
    FeedbackSelector,
    ModelBundle,
    OracleResult,
    check_witnesses,
    constant_policy,
    estimate_average_cost,
    estimate_discounted_cost,
    load_config_bundle,
    make_benchmark,
    operator_identity_defect,
    oracle_average,
    solve_average,
    solve_discounted,
    __version__,
)

__all__ = [
    "AverageSolution",
    "ContractViolation",
    "ConvergenceError",
    "CostEstimate",
    "DiscountedSolution",
    "FeedbackSelector",
    "ModelBundle",
    "OracleResult",
    "check_witnesses",
    "constant_policy",
    "estimate_average_cost",
    "estimate_discounted_cost",
    "load_config_bundle",
    "make_benchmark",
    "operator_identity_defect",
    "oracle_average",
    "solve_average",
    "solve_discounted",
    "__version__",
]
