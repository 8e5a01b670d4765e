"""Closed-form robustness bounds.

The robust existence bound for a least-favorable λ* and a test mixture λ is

    ln Σ_k e^{ε_k}  −  H^{λ*}_σ(K|X)  −  JSD^λ(p̂_1, …, p̂_p),

a capacity cost, minus the overlap gain of the softmax witness gate
σ_k ∝ e^{ε_k}, minus the diversity of the sources under λ.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from modgate.core.distributions import (
    DiscreteDist,
    MixtureWeights,
    WeightsLike,
    align,
    as_weights,
    entropy,
    jsd,
)
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert
from modgate.gates.base import Gate
from modgate.solvers.game import build_game

logger = logging.getLogger(__name__)


def _finite_epsilons(epsilons: Sequence[float] | np.ndarray) -> np.ndarray:
    eps = np.asarray(epsilons, dtype=np.float64).reshape(-1)
    if eps.size == 0 or not np.all(np.isfinite(eps)):
        raise ValidationError("expert errors must be finite", field="epsilons")
    return eps


def softmax_sigma(epsilons: Sequence[float] | np.ndarray) -> MixtureWeights:
    """σ_k = e^{ε_k} / Σ_j e^{ε_j}."""
    sigma = softmax(_finite_epsilons(epsilons))
    return MixtureWeights(sigma / sigma.sum())


def capacity_bound(epsilons: Sequence[float] | np.ndarray) -> float:
    """ln Σ_k e^{ε_k}: no constant gate does better in the worst case."""
    return float(logsumexp(_finite_epsilons(epsilons)))


def overlap_gain(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    sigma: WeightsLike,
    lambda_star: WeightsLike,
) -> float:
    """Σ_k λ*_k E_{p̂_k}[−ln(σ_k π̂_k(x) / π_σ(x))].

    Returns ``math.inf`` when the witness mixture misses a source point.
    """
    game = build_game(sources, experts)
    sig = as_weights(sigma)
    lam = as_weights(lambda_star)
    if sig.size != game.num_experts or lam.size != game.num_sources:
        raise ValidationError("sigma and lambda must have one entry per expert", field="sigma")
    joint = game.likelihoods * sig[None, :]
    pi_sigma = joint.sum(axis=1)
    total = 0.0
    for k in range(game.num_sources):
        if lam[k] == 0.0:
            continue
        mask = game.sources[k] > 0
        num = joint[mask, k]
        den = pi_sigma[mask]
        if np.any(num <= 0.0) or np.any(den <= 0.0):
            return math.inf
        total += lam[k] * float(np.sum(game.sources[k, mask] * -np.log(num / den)))
    return total


def jsd_gap_lower_bound(
    sources: Sequence[DiscreteDist],
    epsilons: Sequence[float] | np.ndarray,
    weights: WeightsLike,
) -> float:
    """Σ_k λ_k ε_k − JSD^λ: the floor under any retrained model's KL(p̂_λ ‖ ·)."""
    lam = as_weights(weights)
    eps = np.asarray(epsilons, dtype=np.float64)
    return float(lam @ eps) - jsd(align(sources), lam)


@dataclass(frozen=True)
class BoundReport:
    """Every term of the robust bound plus a measured risk."""

    epsilons: np.ndarray
    sigma: np.ndarray
    capacity: float
    overlap: float
    diversity: float
    lambda_star: np.ndarray
    lambda_test: np.ndarray
    measured_risk: float = math.nan

    @property
    def value(self) -> float:
        return self.capacity - self.overlap - self.diversity

    def rows(self) -> list[tuple[str, float]]:
        """``quantity,value`` pairs for export."""
        out: list[tuple[str, float]] = []
        out += [(f"epsilon_{k + 1}", float(e)) for k, e in enumerate(self.epsilons)]
        out += [(f"sigma_{k + 1}", float(s)) for k, s in enumerate(self.sigma)]
        out += [(f"lambda_star_{k + 1}", float(v)) for k, v in enumerate(self.lambda_star)]
        out += [(f"lambda_test_{k + 1}", float(v)) for k, v in enumerate(self.lambda_test)]
        out += [
            ("capacity", self.capacity),
            ("overlap", self.overlap),
            ("diversity", self.diversity),
            ("bound", self.value),
            ("measured_risk", self.measured_risk),
        ]
        return out


def robust_bound_report(
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    lambda_star: WeightsLike | None = None,
    lambda_test: WeightsLike | None = None,
    gate: Gate | None = None,
) -> BoundReport:
    """Assemble the bound terms.

    Without ``lambda_star`` the least-favorable mixture of the full simplex
    game is computed by grid search; ``lambda_test`` defaults to it. With a
    ``gate`` the report also carries its worst-case risk over the sources.
    """
    game = build_game(sources, experts)
    if lambda_star is None:
        from modgate.analysis.diagnostics import game_value

        _, lambda_star = game_value(sources, experts)
    lam_star = as_weights(lambda_star)
    lam_test = as_weights(lambda_test) if lambda_test is not None else lam_star
    eps = game.epsilons
    sigma = softmax_sigma(eps).values
    diversity = jsd(align(sources), lam_test)
    ceiling = entropy(lam_test)
    if diversity > ceiling + 1e-9:
        logger.warning("diversity %.6g exceeds H(lambda)=%.6g", diversity, ceiling)

    measured = math.nan
    if gate is not None:
        measured = float(game.losses(game.gate_probs(gate, experts)).max())

    report = BoundReport(
        epsilons=eps,
        sigma=sigma,
        capacity=capacity_bound(eps),
        overlap=overlap_gain(sources, experts, sigma, lam_star),
        diversity=diversity,
        lambda_star=lam_star,
        lambda_test=lam_test,
        measured_risk=measured,
    )
    logger.info(
        "bound %.6g = capacity %.6g - overlap %.6g - diversity %.6g",
        report.value, report.capacity, report.overlap, report.diversity,
    )
    return report
