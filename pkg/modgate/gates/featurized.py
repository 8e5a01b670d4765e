"""Featurized softmax gates for the stochastic solvers.

The feature map is fixed: for a sequence x over [0, V),

* token counts: how often each token id occurs (V dims),
* offset counts: how often each step offset (x_{t+1} − x_t) mod V occurs
  (V dims),
* a bias term (1 dim),

so d = 2V + 1. The offset block separates the increment and decrement
rules linearly.
"""

import logging

import numpy as np
from scipy.special import log_softmax, softmax

from modgate.core.distributions import MixtureWeights, Seq, as_token_array
from modgate.exceptions import ValidationError
from modgate.gates.base import Gate

logger = logging.getLogger(__name__)


def feature_dim(vocab_size: int) -> int:
    return 2 * vocab_size + 1


def sequence_features(seqs: np.ndarray, vocab_size: int) -> np.ndarray:
    """``(n, 2V+1)`` feature matrix φ(x)."""
    tokens = as_token_array(seqs)
    n, T = tokens.shape
    V = vocab_size
    feats = np.zeros((n, feature_dim(V)))
    rows = np.repeat(np.arange(n), T)
    np.add.at(feats, (rows, tokens.ravel()), 1.0)
    if T > 1:
        offsets = np.mod(tokens[:, 1:] - tokens[:, :-1], V)
        rows = np.repeat(np.arange(n), T - 1)
        np.add.at(feats, (rows, V + offsets.ravel()), 1.0)
    feats[:, -1] = 1.0
    return feats


class FeatGate(Gate):
    """Softmax gate g_θ(x) = softmax(Θᵀφ(x))."""

    def __init__(self, vocab_size: int, theta: np.ndarray):
        theta = np.array(theta, dtype=np.float64, copy=True)
        d = feature_dim(vocab_size)
        if theta.ndim != 2 or theta.shape[0] != d:
            raise ValidationError(
                f"theta must have {d} rows for V={vocab_size}, got {theta.shape}",
                field="theta",
            )
        if not np.all(np.isfinite(theta)):
            raise ValidationError("theta must be finite", field="theta")
        theta.setflags(write=False)
        self.vocab_size = int(vocab_size)
        self.theta = theta
        self.num_experts = theta.shape[1]

    @classmethod
    def zeros(cls, vocab_size: int, num_experts: int) -> "FeatGate":
        return cls(vocab_size, np.zeros((feature_dim(vocab_size), num_experts)))

    def __repr__(self) -> str:
        return f"FeatGate(V={self.vocab_size}, p={self.num_experts})"

    def logits(self, seqs: np.ndarray) -> np.ndarray:
        return sequence_features(seqs, self.vocab_size) @ self.theta

    def log_weights(self, seqs: np.ndarray, strict: bool = True) -> np.ndarray:
        return log_softmax(self.logits(seqs), axis=1)

    def weights(self, seqs: np.ndarray, strict: bool = True) -> np.ndarray:
        return softmax(self.logits(seqs), axis=1)


def featgate_weights(gate: FeatGate, x: Seq) -> MixtureWeights:
    """softmax(Θᵀφ(x)) for one sequence."""
    row = gate.weights(as_token_array([x]))[0]
    return MixtureWeights(row / row.sum())
