"""Projections onto linear families of distributions.

For a family {Σ_i w_i b_i : w ∈ Δ} the KL projection of a target is found
by exponentiated-gradient steps with unit step size,
w_i ← w_i · Σ_x t(x) b_i(x) / m_w(x), which keep w on the simplex and
never increase KL(t ‖ m_w). Retraining on a mixture of sources then
coincides with mixing the per-source projections whenever the projection
is linear in the target. The coincidence norm and the loss bound M of a
gate are the two constants of the generalization estimate.
"""

import logging
from collections.abc import Sequence

import numpy as np

from modgate.core.distributions import (
    DiscreteDist,
    MixtureWeights,
    SupportSet,
    WeightsLike,
    align,
    as_weights,
)
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert, likelihood_matrix
from modgate.gates.base import Gate, gate_log_prob

logger = logging.getLogger(__name__)


def _stationarity(w: np.ndarray, ratio: np.ndarray) -> float:
    """KKT residual: w_i|r_i − 1| on the support plus positive excess off it."""
    return float(max(np.max(w * np.abs(ratio - 1.0)), np.max(np.maximum(ratio - 1.0, 0.0))))


def linear_family_project(
    target: DiscreteDist,
    basis: Sequence[DiscreteDist],
    iters: int = 100_000,
    tol: float = 1e-8,
) -> MixtureWeights:
    """argmin_{w∈Δ} KL(target ‖ Σ_i w_i b_i)."""
    if not basis:
        raise ValidationError("basis must be non-empty", field="basis")
    aligned = align([target, *basis])
    t = aligned[0].probs
    B = np.stack([b.probs for b in aligned[1:]], axis=1)
    mask = t > 0
    if np.any(B[mask].sum(axis=1) <= 0.0):
        raise ValidationError(
            "target puts mass where every basis element is zero", field="target"
        )
    t, B = t[mask], B[mask]
    m = B.shape[1]
    w = np.full(m, 1.0 / m)
    residual = np.inf
    for _ in range(iters):
        mix = B @ w
        ratio = (t / mix) @ B
        residual = _stationarity(w, ratio)
        if residual <= tol:
            break
        w = w * ratio
        w /= w.sum()
    else:
        logger.warning("linear-family projection stopped with residual %.3g", residual)
    return MixtureWeights(w, tol=1e-9)


def family_dist(basis: Sequence[DiscreteDist], weights: WeightsLike) -> np.ndarray:
    """Σ_i w_i b_i on the union support of the basis."""
    aligned = align(basis)
    return as_weights(weights) @ np.stack([b.probs for b in aligned])


def retraining_coincidence(
    sources: Sequence[DiscreteDist],
    basis: Sequence[DiscreteDist],
    weights: WeightsLike,
) -> tuple[np.ndarray, np.ndarray]:
    """Projection of p̂_λ versus the λ-blend of per-source projections.

    Both distributions are returned on the union support of basis and
    sources, in that order.
    """
    lam = as_weights(weights)
    everything = align([*basis, *sources])
    basis_al = everything[: len(basis)]
    sources_al = everything[len(basis) :]
    support = everything[0].support
    target = DiscreteDist(
        support, lam @ np.stack([s.probs for s in sources_al]), tol=1e-9
    )
    retrained = family_dist(basis_al, linear_family_project(target, basis_al))
    blended = sum(
        lam[k] * family_dist(basis_al, linear_family_project(src, basis_al))
        for k, src in enumerate(sources_al)
    )
    return retrained, np.asarray(blended)


def coincidence_norm(experts: Sequence[SequenceExpert], support: SupportSet) -> float:
    """C_Π = max_x ‖(π̂_1(x), …, π̂_p(x))‖₂ over the support."""
    likelihoods = likelihood_matrix(experts, support.tokens)
    return float(np.linalg.norm(likelihoods, axis=1).max())


def loss_bound(gate: Gate, experts: Sequence[SequenceExpert], support: SupportSet) -> float:
    """M = max_x −ln π_g(x) over the support; +inf if the gate misses a point."""
    logpi = gate_log_prob(gate, experts, support.tokens)
    return float(-logpi.min())


def loss_lipschitz(gate: Gate, experts: Sequence[SequenceExpert], support: SupportSet) -> float:
    """C_Π·e^M, the Lipschitz constant of the log-loss in the gate weights."""
    M = loss_bound(gate, experts, support)
    if not np.isfinite(M):
        return float("inf")
    return coincidence_norm(experts, support) * float(np.exp(M))
