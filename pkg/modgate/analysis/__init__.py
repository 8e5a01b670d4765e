"""Bounds, identities and diagnostics of the robust gating game."""

from modgate.analysis.bounds import (
    BoundReport,
    capacity_bound,
    jsd_gap_lower_bound,
    overlap_gain,
    robust_bound_report,
    softmax_sigma,
)
from modgate.analysis.diagnostics import (
    DominanceReport,
    dominance_report,
    game_value,
    hausdorff_l1,
    lipschitz_estimate,
    refine_least_favorable,
    simplex_grid,
    static_gate_worst_case,
    static_grid_minimum,
    worst_case_risk,
)
from modgate.analysis.linear_family import (
    coincidence_norm,
    family_dist,
    linear_family_project,
    loss_bound,
    loss_lipschitz,
    retraining_coincidence,
)

__all__ = [
    "BoundReport",
    "DominanceReport",
    "capacity_bound",
    "coincidence_norm",
    "dominance_report",
    "family_dist",
    "game_value",
    "hausdorff_l1",
    "jsd_gap_lower_bound",
    "linear_family_project",
    "lipschitz_estimate",
    "loss_bound",
    "loss_lipschitz",
    "overlap_gain",
    "refine_least_favorable",
    "retraining_coincidence",
    "robust_bound_report",
    "simplex_grid",
    "softmax_sigma",
    "static_gate_worst_case",
    "static_grid_minimum",
    "worst_case_risk",
]
