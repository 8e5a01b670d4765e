"""Shared numerical view of a robust game over an enumerated support.

Sources are aligned on their union 𝒳₀; experts are evaluated once into an
``(n, p)`` likelihood matrix. Every exact solver, the fixed-mixture optimum
and the bound computations work on this view.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

from modgate.constants import GAIN_CAP
from modgate.core.distributions import DiscreteDist, SupportSet, align
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert, epsilon, likelihood_matrix
from modgate.gates.base import Gate, gate_log_prob
from modgate.gates.tabular import TabularGate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GameData:
    """Sources as a ``(p, n)`` matrix and experts as an ``(n, p)`` matrix."""

    support: SupportSet
    sources: np.ndarray
    likelihoods: np.ndarray
    epsilons: np.ndarray

    @property
    def num_sources(self) -> int:
        return self.sources.shape[0]

    @property
    def num_experts(self) -> int:
        return self.likelihoods.shape[1]

    def target(self, lam: np.ndarray) -> np.ndarray:
        """p̂_λ as a vector over the support."""
        return lam @ self.sources

    def losses(self, pi: np.ndarray) -> np.ndarray:
        """ℓ_k = KL(p̂_k ‖ π) for every source (π may be unnormalized)."""
        return rel_entr(self.sources, pi[None, :]).sum(axis=1)

    def gate_probs(self, gate: Gate, experts: Sequence[SequenceExpert]) -> np.ndarray:
        """π_g over the support for any gate."""
        if isinstance(gate, TabularGate) and gate.support == self.support:
            return gate.mixture_probs(self.likelihoods)
        return np.exp(gate_log_prob(gate, experts, self.support.tokens, strict=False))


def build_game(
    sources: Sequence[DiscreteDist], experts: Sequence[SequenceExpert]
) -> GameData:
    """Align sources on 𝒳₀ and evaluate experts there."""
    if len(sources) != len(experts):
        raise ValidationError(
            f"{len(sources)} sources but {len(experts)} experts", field="experts"
        )
    if not sources:
        raise ValidationError("at least one source is required", field="sources")
    aligned = align(sources)
    support = aligned[0].support
    return GameData(
        support=support,
        sources=np.stack([d.probs for d in aligned]),
        likelihoods=likelihood_matrix(experts, support.tokens),
        epsilons=np.array([epsilon(s, e) for s, e in zip(sources, experts, strict=True)]),
    )


def clamp_gains(gains: np.ndarray, cap: float = GAIN_CAP) -> tuple[np.ndarray, int]:
    """Clamp gains to [−cap, cap]; returns the clamped vector and the count."""
    gains = np.asarray(gains, dtype=np.float64)
    if np.any(np.isnan(gains)):
        raise ValidationError("gains contain NaN", field="gains")
    over = np.abs(gains) > cap
    return np.clip(gains, -cap, cap), int(over.sum())
