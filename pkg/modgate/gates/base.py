"""Gate interface and mixture-model evaluation π_g(x) = Σ_k g(x,k) π̂_k(x)."""

import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from modgate.core.distributions import Seq, SupportSet, as_token_array
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert, log_likelihood_matrix

logger = logging.getLogger(__name__)


class Gate(ABC):
    """Per-sequence simplex weights over p experts."""

    num_experts: int

    @abstractmethod
    def log_weights(self, seqs: np.ndarray, strict: bool = True) -> np.ndarray:
        """``(n, p)`` log gate weights; −inf where a weight is zero.

        Tabular gates raise on off-support rows when ``strict`` is set and
        return all −inf rows otherwise.
        """

    def weights(self, seqs: np.ndarray, strict: bool = True) -> np.ndarray:
        return np.exp(self.log_weights(seqs, strict=strict))


@dataclass(frozen=True)
class GateEval:
    """log π_g over queried sequences plus the partition value."""

    logpi: np.ndarray
    Z: float


def _check_experts(gate: Gate, experts: Sequence[SequenceExpert]) -> None:
    if len(experts) != gate.num_experts:
        raise ValidationError(
            f"gate routes over {gate.num_experts} experts, got {len(experts)}",
            field="experts",
        )


def gate_log_prob(
    gate: Gate,
    experts: Sequence[SequenceExpert],
    seqs: np.ndarray,
    strict: bool = True,
    log_likelihoods: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized log π_g for an ``(n, T)`` batch."""
    _check_experts(gate, experts)
    tokens = as_token_array(seqs)
    if log_likelihoods is None:
        log_likelihoods = log_likelihood_matrix(experts, tokens)
    joint = gate.log_weights(tokens, strict=strict) + log_likelihoods
    return logsumexp(joint, axis=1)


def gate_logpi(gate: Gate, experts: Sequence[SequenceExpert], x: Seq) -> float:
    """LSE_k(ln g(x,k) + ln π̂_k(x)) for a single sequence."""
    return float(gate_log_prob(gate, experts, as_token_array([x]))[0])


def evaluate_gate(
    gate: Gate, experts: Sequence[SequenceExpert], support: SupportSet
) -> GateEval:
    """π_g over a whole support together with its exact mass Z."""
    logpi = gate_log_prob(gate, experts, support.tokens)
    return GateEval(logpi=logpi, Z=float(np.exp(logpi).sum()))
