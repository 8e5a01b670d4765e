"""Abstract interface for frozen expert sequence models.

An expert assigns exact log-probabilities to complete sequences, exposes
its next-token conditionals, and samples autoregressively. The Markov
experts in :mod:`modgate.experts.markov` are the only implementation
shipped, but solvers, samplers and routers only talk to this interface.
"""

import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence

import numpy as np

from modgate.core.distributions import DiscreteDist, Seq, as_token_array

logger = logging.getLogger(__name__)


class SequenceExpert(ABC):
    """Base class for experts over length-T sequences on [0, V)."""

    vocab_size: int
    length: int

    @abstractmethod
    def log_prob(self, seqs: np.ndarray) -> np.ndarray:
        """Log-probabilities of an ``(n, T)`` batch; −inf where zero."""

    @abstractmethod
    def next_token_probs(self, prefixes: np.ndarray) -> np.ndarray:
        """Next-token conditionals for an ``(n, t)`` batch of prefixes.

        Returns an ``(n, V)`` row-stochastic array. ``t`` may be 0.
        """

    @abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` complete sequences by ancestral sampling."""

    def conditional(self, prefix: Sequence[int]) -> np.ndarray:
        """Next-token distribution after a single prefix."""
        arr = np.asarray(prefix, dtype=np.int64).reshape(1, -1)
        return self.next_token_probs(arr)[0]


def log_likelihood_matrix(
    experts: Sequence[SequenceExpert], seqs: np.ndarray
) -> np.ndarray:
    """``(n, p)`` matrix of expert log-likelihoods L_k(x)."""
    tokens = as_token_array(seqs)
    return np.stack([e.log_prob(tokens) for e in experts], axis=1)


def likelihood_matrix(
    experts: Sequence[SequenceExpert], seqs: np.ndarray
) -> np.ndarray:
    """``(n, p)`` matrix of expert likelihoods π̂_k(x)."""
    return np.exp(log_likelihood_matrix(experts, seqs))


def expert_logprob(expert: SequenceExpert, x: Seq) -> float:
    """Log-probability of a single sequence."""
    return float(expert.log_prob(as_token_array([x]))[0])


def expert_sample(expert: SequenceExpert, seed: int | np.random.Generator) -> Seq:
    """One ancestral sample; deterministic given an integer seed."""
    rng = np.random.default_rng(seed)
    return tuple(int(t) for t in expert.sample(rng, 1)[0])


def induced_dist(expert: SequenceExpert, support) -> np.ndarray:
    """exp(log π̂(x)) for every support element; sums to at most 1."""
    return np.exp(expert.log_prob(support.tokens))


def epsilon(source: DiscreteDist, expert: SequenceExpert) -> float:
    """Approximation error KL(p̂ ‖ π̂) of an expert against its source.

    Uses the expert's full (unrestricted) likelihood, so leaked mass off the
    source support counts toward the error.
    """
    p = source.probs
    mask = p > 0
    logq = expert.log_prob(source.support.tokens[mask])
    if np.any(np.isneginf(logq)):
        return float("inf")
    return float(np.sum(p[mask] * (np.log(p[mask]) - logq)))
