"""Minimax solvers for the robust gate and the fixed-mixture optimum."""

from modgate.solvers.exact import solve_exact
from modgate.solvers.fixed import (
    ClippedResponse,
    clipped_best_response,
    constant_gate_bound,
    kl_vs_optimal,
    optimal_fixed_gate,
)
from modgate.solvers.game import GameData, build_game
from modgate.solvers.lambdas import LambdaSet, eg_update, kl_project_lambda
from modgate.solvers.primal_dual import (
    PDConfig,
    solve_primal_dual,
    solve_quadratic_penalty,
    stochastic_objective,
)
from modgate.solvers.trace import (
    Checkpoint,
    GameTrace,
    TraceRecord,
    duality_gap,
    least_favorable_mixture,
)

__all__ = [
    "Checkpoint",
    "ClippedResponse",
    "GameData",
    "GameTrace",
    "LambdaSet",
    "PDConfig",
    "TraceRecord",
    "build_game",
    "clipped_best_response",
    "constant_gate_bound",
    "duality_gap",
    "eg_update",
    "kl_project_lambda",
    "kl_vs_optimal",
    "least_favorable_mixture",
    "optimal_fixed_gate",
    "solve_exact",
    "solve_primal_dual",
    "solve_quadratic_penalty",
    "stochastic_objective",
]
