"""Closed-form machinery for a fixed mixture λ.

For a known test mixture p̂_λ the constant gate g(x,·) = λ already
guarantees KL(p̂_λ ‖ π_λ) ≤ Σ_k λ_k ε_k. The optimal normalized gate is a
clipped rescaling of the target, π_g(x) = clip(p̂_λ(x)/μ*, m(x), M(x)),
with m and M the smallest and largest expert likelihood at x and μ* the
unique level at which the clipped mass is 1.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from modgate.constants import BISECTION_MAX_ITER, BRACKET_WIDEN, PROJECTION_TOL
from modgate.core.distributions import DiscreteDist, WeightsLike, as_weights, relative_entropy
from modgate.exceptions import NumericalError, ValidationError
from modgate.experts.base import SequenceExpert
from modgate.gates.projection import check_feasible
from modgate.gates.tabular import TabularGate
from modgate.solvers.game import build_game

logger = logging.getLogger(__name__)


def constant_gate_bound(epsilons: Sequence[float] | np.ndarray, weights: WeightsLike) -> float:
    """Σ_k λ_k ε_k."""
    eps = np.asarray(epsilons, dtype=np.float64)
    lam = as_weights(weights)
    if eps.shape != lam.shape:
        raise ValidationError(
            f"{eps.size} epsilons but {lam.size} weights", field="epsilons"
        )
    return float(eps @ lam)


@dataclass(frozen=True)
class ClippedResponse:
    """Optimal normalized mixture for a fixed target."""

    pi: np.ndarray
    W: np.ndarray
    mu: float


def clipped_mass(
    mu: float, target: np.ndarray, low: np.ndarray, high: np.ndarray
) -> float:
    """Z(μ) = Σ_x clip(p̂(x)/μ, m(x), M(x)), with π = m where p̂ = 0."""
    pos = target > 0
    return float(
        np.clip(target[pos] / mu, low[pos], high[pos]).sum() + low[~pos].sum()
    )


def _realize(pi: np.ndarray, likelihoods: np.ndarray) -> np.ndarray:
    """Two-point gate rows reproducing π between argmin and argmax experts."""
    n, p = likelihoods.shape
    kmin = np.argmin(likelihoods, axis=1)
    kmax = np.argmax(likelihoods, axis=1)
    rows = np.arange(n)
    low = likelihoods[rows, kmin]
    span = likelihoods[rows, kmax] - low
    t = np.zeros(n)
    varied = span > 0
    t[varied] = np.clip((pi[varied] - low[varied]) / span[varied], 0.0, 1.0)
    W = np.zeros((n, p))
    np.add.at(W, (rows, kmin), 1.0 - t)
    np.add.at(W, (rows, kmax), t)
    return W


def clipped_best_response(
    target: np.ndarray, likelihoods: np.ndarray, tol: float = PROJECTION_TOL
) -> ClippedResponse:
    """Minimizer of KL(target ‖ π_g) over normalized simplex-row gates.

    Also the exact best response of the gate player to a fixed λ in the
    linearized game, since Σ_k λ_k KL(p̂_k ‖ π) differs from
    KL(p̂_λ ‖ π) by a constant.
    """
    target = np.asarray(target, dtype=np.float64)
    check_feasible(likelihoods, tol)
    low = likelihoods.min(axis=1)
    high = likelihoods.max(axis=1)
    pos = target > 0
    if not np.any(pos):
        raise ValidationError("target has no mass", field="target")

    def z(mu: float) -> float:
        return clipped_mass(mu, target, low, high)

    ceiling = float(high[pos].sum() + low[~pos].sum())
    if ceiling < 1.0 - tol:
        # Target points saturate at M; the remaining mass goes off-target.
        pi = np.where(pos, high, low)
        slack = high[~pos] - low[~pos]
        share = (1.0 - ceiling) / slack.sum()
        pi[~pos] = low[~pos] + share * slack
        logger.warning("clipped optimum saturates the target support; mu*=0")
        return ClippedResponse(pi=pi, W=_realize(pi, likelihoods), mu=0.0)

    with np.errstate(divide="ignore"):
        up = target[pos] / high[pos]
        down = target[pos] / low[pos]
    finite_up = up[np.isfinite(up)]
    finite_down = down[np.isfinite(down) & (down > 0)]
    lo = float(finite_up.min()) / BRACKET_WIDEN if finite_up.size else 1.0
    hi = float(finite_down.max()) * BRACKET_WIDEN if finite_down.size else 1.0
    for _ in range(BISECTION_MAX_ITER):
        if z(lo) >= 1.0:
            break
        lo /= BRACKET_WIDEN
    for _ in range(BISECTION_MAX_ITER):
        if z(hi) <= 1.0:
            break
        hi *= BRACKET_WIDEN
    if not (z(lo) >= 1.0 - tol and z(hi) <= 1.0 + tol):
        raise NumericalError("could not bracket the clipping level mu*")

    mu = float(np.sqrt(lo * hi))
    for _ in range(BISECTION_MAX_ITER):
        mu = float(np.sqrt(lo * hi))
        zm = z(mu)
        if abs(zm - 1.0) <= tol:
            break
        if zm > 1.0:
            lo = mu
        else:
            hi = mu
    pi = np.where(pos, np.clip(np.where(pos, target, 0.0) / mu, low, high), low)
    return ClippedResponse(pi=pi, W=_realize(pi, likelihoods), mu=mu)


def optimal_fixed_gate(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    weights: WeightsLike,
) -> tuple[TabularGate, float]:
    """Clipped optimal gate for the fixed mixture λ and its level μ*."""
    game = build_game(sources, experts)
    lam = as_weights(weights)
    response = clipped_best_response(game.target(lam), game.likelihoods)
    return TabularGate(game.support, response.W), response.mu


def kl_vs_optimal(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    weights: WeightsLike,
) -> tuple[float, float]:
    """KL(p̂_λ ‖ π) for the constant gate λ and for the clipped optimum."""
    game = build_game(sources, experts)
    lam = as_weights(weights)
    target = game.target(lam)
    kl_constant = relative_entropy(target, game.likelihoods @ lam)
    response = clipped_best_response(target, game.likelihoods)
    return kl_constant, relative_entropy(target, response.pi)
