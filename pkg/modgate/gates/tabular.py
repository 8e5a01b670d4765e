"""Tabular gates over an enumerated support 𝒳₀."""

import logging
from collections.abc import Sequence

import numpy as np

from modgate.constants import G1_MEMBERSHIP_TOL, ROW_SIMPLEX_TOL
from modgate.core.distributions import SupportSet, WeightsLike, as_token_array, as_weights
from modgate.exceptions import OffSupportError, ValidationError
from modgate.experts.base import SequenceExpert, likelihood_matrix
from modgate.gates.base import Gate

logger = logging.getLogger(__name__)


class TabularGate(Gate):
    """One simplex row of expert weights per support sequence."""

    def __init__(self, support: SupportSet, W: np.ndarray, tol: float = ROW_SIMPLEX_TOL):
        W = np.array(W, dtype=np.float64, copy=True)
        if W.ndim != 2 or W.shape[0] != len(support):
            raise ValidationError(
                f"gate matrix must have {len(support)} rows, got shape {W.shape}",
                field="W",
            )
        if not np.all(np.isfinite(W)) or np.any(W < -tol):
            raise ValidationError("gate entries must be finite and >= 0", field="W")
        if np.any(np.abs(W.sum(axis=1) - 1.0) > tol):
            raise ValidationError("every gate row must sum to 1", field="W")
        W = np.clip(W, 0.0, None)
        W.setflags(write=False)
        self.support = support
        self.W = W
        self.num_experts = W.shape[1]

    @classmethod
    def constant(cls, support: SupportSet, weights: WeightsLike) -> "TabularGate":
        """The constant gate g(x,·) = λ."""
        lam = as_weights(weights)
        return cls(support, np.tile(lam, (len(support), 1)))

    @classmethod
    def one_hot(cls, support: SupportSet, num_experts: int, k: int) -> "TabularGate":
        W = np.zeros((len(support), num_experts))
        W[:, k] = 1.0
        return cls(support, W)

    def __repr__(self) -> str:
        return f"TabularGate(n={len(self.support)}, p={self.num_experts})"

    def rows(self, seqs: np.ndarray, strict: bool = True) -> np.ndarray:
        """Gate rows for a batch; zero rows off-support unless ``strict``."""
        tokens = as_token_array(seqs)
        idx = self.support.locate(tokens)
        missing = idx < 0
        if strict and np.any(missing):
            first = tuple(int(t) for t in tokens[int(np.argmax(missing))])
            raise OffSupportError("tabular gate queried off its support", first)
        out = np.zeros((tokens.shape[0], self.num_experts))
        out[~missing] = self.W[idx[~missing]]
        return out

    def log_weights(self, seqs: np.ndarray, strict: bool = True) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.rows(seqs, strict=strict))

    def mixture_probs(self, likelihoods: np.ndarray) -> np.ndarray:
        """π_g over the support from an ``(n, p)`` likelihood matrix."""
        return np.sum(self.W * likelihoods, axis=1)

    def blend(self, other: "TabularGate", t: float) -> "TabularGate":
        """Convex combination t·self + (1−t)·other on the same support."""
        if other.support != self.support or other.num_experts != self.num_experts:
            raise ValidationError("gates must share support and expert count")
        return TabularGate(self.support, t * self.W + (1.0 - t) * other.W)


def partition_Z(gate: TabularGate, experts: Sequence[SequenceExpert]) -> float:
    """Exact Z_g = Σ_{x∈𝒳₀} Σ_k g(x,k) π̂_k(x)."""
    likelihoods = likelihood_matrix(experts, gate.support.tokens)
    return float(gate.mixture_probs(likelihoods).sum())


def is_normalized(
    gate: TabularGate,
    experts: Sequence[SequenceExpert],
    tol: float = G1_MEMBERSHIP_TOL,
) -> bool:
    """Membership test for 𝒢₁ (rows are simplex by construction)."""
    return abs(partition_Z(gate, experts) - 1.0) <= tol
