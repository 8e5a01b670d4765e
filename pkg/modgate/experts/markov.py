"""Order-1 Markov experts with additive smoothing.

A :class:`MarkovExpert` is a start distribution plus a row-stochastic
transition matrix. Log-probabilities are summed in log-space; zero
transitions give −inf rather than raising.
"""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from modgate.core.distributions import as_token_array
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert

logger = logging.getLogger(__name__)

_STOCHASTIC_TOL = 1e-9


def _normalize_rows(counts: np.ndarray) -> np.ndarray:
    """Row-normalize; rows with no mass become uniform."""
    totals = counts.sum(axis=-1, keepdims=True)
    empty = totals[..., 0] <= 0.0
    if np.any(empty):
        logger.debug("%d unobserved rows replaced by uniform rows", int(empty.sum()))
    safe = np.where(totals > 0.0, totals, 1.0)
    out = counts / safe
    out[empty] = 1.0 / counts.shape[-1]
    return out


@dataclass(frozen=True, eq=False)
class MarkovExpert(SequenceExpert):
    """Start distribution + V×V transition matrix over length-T sequences."""

    vocab_size: int
    length: int
    start: np.ndarray
    trans: np.ndarray
    alpha: float = 0.0

    def __post_init__(self) -> None:
        V = self.vocab_size
        start = np.array(self.start, dtype=np.float64, copy=True)
        trans = np.array(self.trans, dtype=np.float64, copy=True)
        if start.shape != (V,) or trans.shape != (V, V):
            raise ValidationError(
                f"expected start ({V},) and trans ({V}, {V}), "
                f"got {start.shape} and {trans.shape}",
                field="tables",
            )
        if self.length < 1:
            raise ValidationError("length must be at least 1", field="length")
        if self.alpha < 0:
            raise ValidationError("smoothing must be non-negative", field="alpha")
        if np.any(start < 0) or np.any(trans < 0):
            raise ValidationError("probabilities must be non-negative", field="tables")
        if abs(start.sum() - 1.0) > _STOCHASTIC_TOL or np.any(
            np.abs(trans.sum(axis=1) - 1.0) > _STOCHASTIC_TOL
        ):
            raise ValidationError("start and transition rows must sum to 1", field="tables")
        start.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "trans", trans)
        with np.errstate(divide="ignore"):
            object.__setattr__(self, "_log_start", np.log(start))
            object.__setattr__(self, "_log_trans", np.log(trans))
        cum = np.cumsum(trans, axis=1)
        object.__setattr__(self, "_cum_trans", cum / cum[:, -1:])

    def _check(self, tokens: np.ndarray, width: int | None = None) -> None:
        expected = self.length if width is None else width
        if tokens.shape[1] != expected:
            raise ValidationError(
                f"sequence length {tokens.shape[1]} != {expected}", field="seqs"
            )
        if tokens.size and (tokens.min() < 0 or tokens.max() >= self.vocab_size):
            raise ValidationError("token id out of range", field="seqs")

    def log_prob(self, seqs: np.ndarray) -> np.ndarray:
        tokens = as_token_array(seqs)
        if tokens.shape[0] == 0:
            return np.zeros(0)
        self._check(tokens)
        out = self._log_start[tokens[:, 0]].copy()
        if self.length > 1:
            out += self._log_trans[tokens[:, :-1], tokens[:, 1:]].sum(axis=1)
        return out

    def next_token_probs(self, prefixes: np.ndarray) -> np.ndarray:
        prefixes = np.asarray(prefixes, dtype=np.int64)
        if prefixes.ndim == 1:
            prefixes = prefixes[None, :]
        if prefixes.shape[1] >= self.length:
            raise ValidationError("prefix must be shorter than the sequence length")
        if prefixes.shape[1] == 0:
            return np.broadcast_to(self.start, (prefixes.shape[0], self.vocab_size)).copy()
        self._check(prefixes, width=prefixes.shape[1])
        return self.trans[prefixes[:, -1]]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty((n, self.length), dtype=np.int64)
        out[:, 0] = rng.choice(self.vocab_size, size=n, p=self.start)
        for t in range(1, self.length):
            u = rng.random(n)
            rows = self._cum_trans[out[:, t - 1]]
            out[:, t] = (rows <= u[:, None]).sum(axis=1)
        return out


def fit_mle_weighted(
    seqs: Iterable[Sequence[int]] | np.ndarray,
    weights: Sequence[float] | np.ndarray,
    vocab_size: int,
    length: int,
    alpha: float = 0.0,
) -> MarkovExpert:
    """Smoothed maximum-likelihood tables from weighted sequences.

    With weights equal to an exact distribution this is the population MLE
    of that distribution.
    """
    tokens = as_token_array(seqs)
    w = np.asarray(weights, dtype=np.float64)
    if tokens.shape[0] == 0:
        raise ValidationError("cannot fit an expert on an empty sample", field="samples")
    if tokens.shape[1] != length:
        raise ValidationError(
            f"sample length {tokens.shape[1]} != {length}", field="samples"
        )
    if w.shape != (tokens.shape[0],) or np.any(w < 0):
        raise ValidationError("one non-negative weight per sequence", field="weights")
    if alpha < 0:
        raise ValidationError("smoothing must be non-negative", field="alpha")

    V = vocab_size
    start_counts = np.bincount(tokens[:, 0], weights=w, minlength=V) + alpha
    trans_counts = np.full((V, V), float(alpha))
    if length > 1:
        prev = tokens[:, :-1].ravel()
        nxt = tokens[:, 1:].ravel()
        pair_w = np.repeat(w, length - 1)
        np.add.at(trans_counts, (prev, nxt), pair_w)
    return MarkovExpert(
        vocab_size=V,
        length=length,
        start=_normalize_rows(start_counts[None, :])[0],
        trans=_normalize_rows(trans_counts),
        alpha=float(alpha),
    )


def fit_mle(
    samples: Iterable[Sequence[int]] | np.ndarray,
    vocab_size: int,
    length: int,
    alpha: float = 0.0,
) -> MarkovExpert:
    """Smoothed bigram MLE from a list of sequences."""
    tokens = as_token_array(list(samples) if not isinstance(samples, np.ndarray) else samples)
    return fit_mle_weighted(
        tokens, np.ones(tokens.shape[0]), vocab_size, length, alpha=alpha
    )


def fit_unigram(
    seqs: Iterable[Sequence[int]] | np.ndarray,
    weights: Sequence[float] | np.ndarray,
    vocab_size: int,
    length: int,
    alpha: float = 0.0,
) -> MarkovExpert:
    """Position-independent baseline: every transition row is the same.

    The shared row is the aggregate frequency of tokens after the first
    position, so the model ignores the previous token entirely.
    """
    tokens = as_token_array(seqs)
    w = np.asarray(weights, dtype=np.float64)
    full = fit_mle_weighted(tokens, w, vocab_size, length, alpha=alpha)
    if length == 1:
        return full
    counts = np.bincount(
        tokens[:, 1:].ravel(), weights=np.repeat(w, length - 1), minlength=vocab_size
    ) + alpha
    row = _normalize_rows(counts[None, :])[0]
    return MarkovExpert(
        vocab_size=vocab_size,
        length=length,
        start=full.start,
        trans=np.tile(row, (vocab_size, 1)),
        alpha=float(alpha),
    )
