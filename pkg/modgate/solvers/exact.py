"""Exact no-regret dynamics for the robust gate over an enumerable support.

The mixture player runs exponentiated gradient on the linearized losses
ℓ_t(k) = KL(p̂_k ‖ π_{g_t}); the gate player runs projected online gradient
descent on g with gradient v_t(x,k) = −(p̂_{λ_{t+1}}(x)/π_{g_t}(x))·π̂_k(x),
projected back onto 𝒢₁ every step. Time averages of both players are the
approximate saddle point.
"""

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np

from modgate.constants import GAIN_CAP, PI_FLOOR
from modgate.core.distributions import DiscreteDist, MixtureWeights
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert
from modgate.gates.projection import project_onto_normalized_gates
from modgate.gates.tabular import TabularGate
from modgate.solvers.game import GameData, build_game
from modgate.solvers.lambdas import LambdaSet, eg_update, kl_project_lambda
from modgate.solvers.trace import Checkpoint, GameTrace, TraceRecord, gap_at

logger = logging.getLogger(__name__)

_MAX_CELLS = 1_000_000


def default_eta_lambda(initial_gains: np.ndarray, iterations: int) -> float:
    """√(ln p / T) / M_λ with M_λ the largest finite initial gain (capped)."""
    p = initial_gains.size
    if not np.all(np.isfinite(initial_gains)):
        scale = GAIN_CAP
    else:
        peak = float(initial_gains.max())
        scale = min(GAIN_CAP, peak) if peak > 0 else 1.0
    return math.sqrt(math.log(p) / iterations) / scale


def default_eta_g(initial_grad: np.ndarray, iterations: int) -> float:
    """D / (G √T) with D = 2√|𝒳₀| and G the initial gradient norm."""
    diameter = 2.0 * math.sqrt(initial_grad.shape[0])
    norm = float(np.linalg.norm(initial_grad))
    if not np.isfinite(norm) or norm <= 0.0:
        norm = 1.0
    return diameter / (norm * math.sqrt(iterations))


def _gate_gradient(game: GameData, lam: np.ndarray, pi: np.ndarray) -> np.ndarray:
    target = game.target(lam)
    ratio = np.where(target > 0, target / np.maximum(pi, PI_FLOOR), 0.0)
    return -ratio[:, None] * game.likelihoods


def solve_exact(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    lambda_set: LambdaSet | None = None,
    iterations: int = 2000,
    eta_lambda: float | None = None,
    eta_g: float | None = None,
    checkpoint_every: int | None = None,
    initial_gate: TabularGate | None = None,
    progress: Callable[[int], None] | None = None,
) -> GameTrace:
    """Run exponentiated gradient against projected gradient descent on 𝒢₁."""
    if iterations < 1:
        raise ValidationError("iterations must be positive", field="iterations")
    game = build_game(sources, experts)
    n, p = game.likelihoods.shape
    if n * p > _MAX_CELLS:
        raise ValidationError(
            f"support too large for the exact solver ({n} x {p} cells)",
            field="sources",
        )
    lambda_set = lambda_set or LambdaSet.simplex(p)
    if lambda_set.dim != p:
        raise ValidationError("mixture set dimension != number of sources")
    vertices = lambda_set.vertices()
    every = checkpoint_every or max(1, iterations // 20)

    if initial_gate is not None:
        if initial_gate.support != game.support:
            raise ValidationError("initial gate must live on the union support")
        W = np.array(initial_gate.W)
    else:
        W = np.full((n, p), 1.0 / p)
    W, _ = project_onto_normalized_gates(W, game.likelihoods)
    lam = kl_project_lambda(MixtureWeights.uniform(p), lambda_set).values

    pi = np.sum(W * game.likelihoods, axis=1)
    gains0 = game.losses(pi)
    if eta_lambda is None:
        eta_lambda = default_eta_lambda(gains0, iterations)
    if eta_g is None:
        eta_g = default_eta_g(_gate_gradient(game, lam, pi), iterations)
    logger.info(
        "exact solver: n=%d p=%d T=%d eta_lambda=%.4g eta_g=%.4g",
        n, p, iterations, eta_lambda, eta_g,
    )

    trace = GameTrace(
        method="exact",
        num_sources=p,
        settings={"iterations": iterations, "eta_lambda": eta_lambda, "eta_g": eta_g},
    )
    W_sum = np.zeros_like(W)
    lam_sum = np.zeros(p)
    for t in range(1, iterations + 1):
        pi = np.sum(W * game.likelihoods, axis=1)
        losses = game.losses(pi)
        W_sum += W
        lam_next = eg_update(lam, losses, eta_lambda)
        if not lambda_set.is_simplex():
            lam_next = kl_project_lambda(lam_next, lambda_set)
        lam = lam_next.values
        lam_sum += lam

        grad = _gate_gradient(game, lam, pi)
        W, nu = project_onto_normalized_gates(W - eta_g * grad, game.likelihoods)

        if t % every == 0 or t == iterations:
            mean_W = W_sum / t
            mean_lam = lam_sum / t
            mean_pi = np.sum(mean_W * game.likelihoods, axis=1)
            gap = gap_at(game, mean_lam, mean_pi, vertices)
            trace.records.append(
                TraceRecord(
                    iteration=t,
                    lam=lam.copy(),
                    losses=losses,
                    mu=nu,
                    z_hat=float(np.sum(W * game.likelihoods)),
                    z_ema=float(mean_pi.sum()),
                    gap=gap,
                )
            )
            trace.checkpoints.append(
                Checkpoint(t, mean_lam, TabularGate(game.support, mean_W))
            )
            logger.debug("iter %d: losses=%s gap=%.3g", t, np.round(losses, 6), gap)
        if progress is not None:
            progress(t)

    trace.final_gate = trace.checkpoints[-1].mean_gate
    trace.last_gate = TabularGate(game.support, W)
    trace.mean_lambda = MixtureWeights(lam_sum / iterations, tol=1e-9)
    logger.info("exact solver finished: final gap %.3g", trace.final_record.gap)
    return trace
