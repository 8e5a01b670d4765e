"""Game values, static-gate baselines and set-level diagnostics.

The linearized payoff L̃(λ, g) = Σ_k λ_k KL(p̂_k ‖ π_g) is linear in λ, so
worst cases over a mixture set Λ are attained at its vertices, and the
gate player's best response to a fixed λ is the clipped optimum of
:mod:`modgate.solvers.fixed`. Both facts make the saddle value computable
on small instances without running a solver.
"""

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import rel_entr

from modgate.core.distributions import DiscreteDist, MixtureWeights, WeightsLike, as_weights
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert
from modgate.gates.base import Gate
from modgate.gates.tabular import TabularGate
from modgate.solvers.fixed import clipped_best_response
from modgate.solvers.game import GameData, build_game
from modgate.solvers.lambdas import LambdaSet

logger = logging.getLogger(__name__)

_MAX_GRID_POINTS = 2_000_000


def simplex_grid(p: int, steps: int) -> np.ndarray:
    """All points of the simplex with coordinates in {0, 1/steps, …, 1}."""
    if p < 1 or steps < 1:
        raise ValidationError("grid needs p >= 1 and steps >= 1", field="steps")
    if math.comb(steps + p - 1, p - 1) > _MAX_GRID_POINTS:
        raise ValidationError(f"simplex grid too large for p={p}, steps={steps}", field="steps")
    points = []
    for bars in itertools.combinations(range(steps + p - 1), p - 1):
        edges = (-1, *bars, steps + p - 1)
        points.append([edges[i + 1] - edges[i] - 1 for i in range(p)])
    return np.array(points, dtype=np.float64) / steps


def static_gate_worst_case(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    weights: WeightsLike,
) -> float:
    """max_k KL(p̂_k ‖ Σ_j w_j π̂_j) for the constant gate w."""
    game = build_game(sources, experts)
    return float(game.losses(game.likelihoods @ as_weights(weights)).max())


def static_grid_minimum(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    steps: int = 1000,
) -> tuple[float, MixtureWeights]:
    """Best worst-case KL over a grid of constant gates, with its argmin."""
    game = build_game(sources, experts)
    grid = simplex_grid(game.num_experts, steps)
    best, best_w = math.inf, grid[0]
    for chunk in np.array_split(grid, max(1, grid.shape[0] // 2048)):
        pis = game.likelihoods @ chunk.T
        worst = rel_entr(game.sources[:, :, None], pis[None, :, :]).sum(axis=1).max(axis=0)
        j = int(np.argmin(worst))
        if worst[j] < best:
            best, best_w = float(worst[j]), chunk[j]
    return best, MixtureWeights(best_w / best_w.sum())


def worst_case_risk(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    gate: Gate,
    lambda_set: LambdaSet | None = None,
) -> float:
    """max_{λ∈Λ} Σ_k λ_k KL(p̂_k ‖ π_g), attained at a vertex of Λ."""
    game = build_game(sources, experts)
    lambda_set = lambda_set or LambdaSet.simplex(game.num_sources)
    losses = game.losses(game.gate_probs(gate, experts))
    return max(float(v @ losses) for v in lambda_set.vertices())


def _response_value(game: GameData, lam: np.ndarray) -> float:
    """min over normalized gates of L̃(λ, g)."""
    best = clipped_best_response(game.target(lam), game.likelihoods)
    return float(lam @ game.losses(best.pi))


def _grid_in_set(lambda_set: LambdaSet, resolution: int) -> np.ndarray:
    p = lambda_set.dim
    steps = resolution if p <= 3 else max(2, min(resolution, 12))
    grid = simplex_grid(p, steps)
    inside = np.all(grid >= lambda_set.lower - 1e-12, axis=1) & np.all(
        grid <= lambda_set.upper + 1e-12, axis=1
    )
    return np.vstack([grid[inside], *lambda_set.vertices()])


def refine_least_favorable(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    lambda_set: LambdaSet | None = None,
    initial: WeightsLike | None = None,
    tol: float = 1e-9,
) -> tuple[float, MixtureWeights]:
    """Polish a least-favorable mixture by local maximization of the response value.

    Two sources use a bounded scalar search over λ₁; more sources use a
    pairwise mass-transfer pattern search started at ``initial``.
    """
    game = build_game(sources, experts)
    p = game.num_sources
    lambda_set = lambda_set or LambdaSet.simplex(p)

    if p == 1:
        return _response_value(game, np.ones(1)), MixtureWeights(np.ones(1))
    if p == 2:
        lo = max(lambda_set.lower[0], 1.0 - lambda_set.upper[1])
        hi = min(lambda_set.upper[0], 1.0 - lambda_set.lower[1])
        if hi - lo <= tol:
            lam = np.array([lo, 1.0 - lo])
            return _response_value(game, lam), MixtureWeights(lam)
        result = minimize_scalar(
            lambda a: -_response_value(game, np.array([a, 1.0 - a])),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": tol},
        )
        a = float(result.x)
        candidates = [a, lo, hi]
        values = [_response_value(game, np.array([c, 1.0 - c])) for c in candidates]
        best = int(np.argmax(values))
        a = candidates[best]
        return values[best], MixtureWeights(np.array([a, 1.0 - a]))

    lam = as_weights(initial) if initial is not None else np.full(p, 1.0 / p)
    lam = np.clip(lam, lambda_set.lower, lambda_set.upper)
    lam = lam / lam.sum()
    value = _response_value(game, lam)
    step = 0.1
    while step > tol:
        improved = False
        for i, j in itertools.permutations(range(p), 2):
            move = min(step, lam[i] - lambda_set.lower[i], lambda_set.upper[j] - lam[j])
            if move <= 0:
                continue
            trial = lam.copy()
            trial[i] -= move
            trial[j] += move
            v = _response_value(game, trial)
            if v > value + 1e-15:
                lam, value, improved = trial, v, True
        if not improved:
            step /= 2.0
    return value, MixtureWeights(lam, tol=1e-9)


def game_value(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    lambda_set: LambdaSet | None = None,
    resolution: int = 50,
) -> tuple[float, MixtureWeights]:
    """Saddle value V* and a least-favorable λ* of the linearized game.

    Grid search over Λ (coarse above three sources) followed by
    :func:`refine_least_favorable`.
    """
    game = build_game(sources, experts)
    lambda_set = lambda_set or LambdaSet.simplex(game.num_sources)
    if lambda_set.dim != game.num_sources:
        raise ValidationError("mixture set dimension != number of sources")
    grid = _grid_in_set(lambda_set, resolution)
    values = np.array([_response_value(game, lam) for lam in grid])
    start = grid[int(np.argmax(values))]
    refined_value, refined = refine_least_favorable(sources, experts, lambda_set, start)
    if refined_value >= values.max():
        value, lam = refined_value, refined
    else:
        value, lam = float(values.max()), MixtureWeights(start / start.sum())
    logger.debug("game value %.6g at lambda*=%s", value, np.round(lam.values, 6))
    return value, lam


def hausdorff_l1(lambda_set: LambdaSet) -> float:
    """ℓ₁ Hausdorff distance between Λ and the full simplex.

    The farthest simplex point from Λ is a vertex e_k, and
    min_{λ∈Λ} ‖e_k − λ‖₁ = 2(1 − max_{λ∈Λ} λ_k) in closed form.
    """
    lower, upper = lambda_set.lower, lambda_set.upper
    best = np.minimum(upper, 1.0 - (lower.sum() - lower))
    return float(np.max(2.0 * (1.0 - best)))


def lipschitz_estimate(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    witness_gates: Sequence[Gate] = (),
) -> float:
    """Witness-set estimate of max_{k,g} Σ_x p̂_k(x)|ln(p̂_k(x)/π_g(x))|.

    The witness set always contains the p pure-expert gates and the uniform
    gate; extra gates only add candidates. This is a lower estimate of the
    maximum over all normalized gates.
    """
    game = build_game(sources, experts)
    p = game.num_experts
    gates: list[Gate] = [TabularGate.one_hot(game.support, p, k) for k in range(p)]
    gates.append(TabularGate.constant(game.support, np.full(p, 1.0 / p)))
    gates.extend(witness_gates)
    best = 0.0
    for gate in gates:
        pi = game.gate_probs(gate, experts)
        for src in game.sources:
            mask = src > 0
            if np.any(pi[mask] <= 0.0):
                return math.inf
            term = float(np.sum(src[mask] * np.abs(np.log(src[mask] / pi[mask]))))
            best = max(best, term)
    logger.info("Lipschitz constant estimated over %d witness gates: %.6g", len(gates), best)
    return best


@dataclass(frozen=True)
class DominanceReport:
    """Restricted versus full-simplex game values."""

    value_restricted: float
    value_full: float
    lipschitz: float
    hausdorff: float

    @property
    def improvement_ceiling(self) -> float:
        """V*_Λ + L̂·d_H, the estimated upper end of the chain."""
        return self.value_restricted + self.lipschitz * self.hausdorff


def dominance_report(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    lambda_set: LambdaSet,
    resolution: int = 50,
) -> DominanceReport:
    """Compare V*_Λ with V*_Δ; only V*_Λ ≤ V*_Δ is a guarantee."""
    v_restricted, _ = game_value(sources, experts, lambda_set, resolution)
    v_full, _ = game_value(sources, experts, None, resolution)
    report = DominanceReport(
        value_restricted=v_restricted,
        value_full=v_full,
        lipschitz=lipschitz_estimate(sources, experts),
        hausdorff=hausdorff_l1(lambda_set),
    )
    if v_full > report.improvement_ceiling + 1e-9:
        logger.info(
            "V*_full=%.6g exceeds V*_restricted + L*d_H=%.6g (L is an estimate)",
            v_full, report.improvement_ceiling,
        )
    return report
