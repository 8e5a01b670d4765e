"""Finite sequence spaces, discrete distributions and divergence primitives.

Everything in modgate lives on an enumerated support: a :class:`SupportSet`
of fixed-length token sequences. Distributions over a support are plain
probability vectors; divergences follow the usual conventions
(0·ln(0/q) = 0, and p(x) > 0 = q(x) gives an infinite KL). All quantities
are in nats.
"""

import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr, logsumexp, rel_entr

from modgate.constants import ARITHMETIC_TOL, CONSTRUCTION_TOL
from modgate.exceptions import SupportMismatchError, ValidationError

logger = logging.getLogger(__name__)

Seq = tuple[int, ...]

INF_KL = math.inf


def as_token_array(seqs: Iterable[Sequence[int]] | np.ndarray) -> np.ndarray:
    """Stack sequences into an ``(n, T)`` int64 array."""
    if isinstance(seqs, np.ndarray):
        arr = np.asarray(seqs, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[None, :]
        return arr
    rows = [tuple(int(t) for t in s) for s in seqs]
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValidationError("sequences must share one length", field="seqs")
    return np.array(rows, dtype=np.int64)


class SupportSet:
    """Ordered, duplicate-free set of length-T sequences over [0, V).

    Lookups go through a dict from token tuple to row index; batch lookups
    return -1 for sequences outside the support.
    """

    __slots__ = ("vocab_size", "length", "_tokens", "_index")

    def __init__(self, tokens: np.ndarray, vocab_size: int):
        tokens = np.array(tokens, dtype=np.int64, copy=True)
        if tokens.ndim != 2:
            raise ValidationError("support tokens must be a 2-D array", field="tokens")
        if vocab_size < 1:
            raise ValidationError("vocab_size must be positive", field="vocab_size")
        if tokens.size and (tokens.min() < 0 or tokens.max() >= vocab_size):
            raise ValidationError(
                f"token ids must lie in [0, {vocab_size})", field="tokens"
            )
        index: dict[Seq, int] = {}
        for i, row in enumerate(tokens.tolist()):
            key = tuple(row)
            if key in index:
                raise ValidationError(f"duplicate sequence {key}", field="tokens")
            index[key] = i
        tokens.setflags(write=False)
        self.vocab_size = int(vocab_size)
        self.length = int(tokens.shape[1])
        self._tokens = tokens
        self._index = index

    @classmethod
    def from_sequences(
        cls, seqs: Iterable[Sequence[int]], vocab_size: int
    ) -> "SupportSet":
        """Build a support from an iterable of sequences (order preserved)."""
        return cls(as_token_array(list(seqs)), vocab_size)

    @classmethod
    def full_space(cls, vocab_size: int, length: int) -> "SupportSet":
        """Enumerate all V^T sequences in lexicographic order."""
        grids = np.indices((vocab_size,) * length).reshape(length, -1).T
        return cls(grids, vocab_size)

    @property
    def tokens(self) -> np.ndarray:
        """Read-only ``(n, T)`` token matrix."""
        return self._tokens

    @property
    def seqs(self) -> list[Seq]:
        return [tuple(row) for row in self._tokens.tolist()]

    def __len__(self) -> int:
        return self._tokens.shape[0]

    def __iter__(self) -> Iterator[Seq]:
        return iter(self.seqs)

    def __contains__(self, seq: object) -> bool:
        return tuple(seq) in self._index  # type: ignore[arg-type]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SupportSet):
            return NotImplemented
        return (
            self is other
            or (
                self.vocab_size == other.vocab_size
                and self._tokens.shape == other._tokens.shape
                and bool(np.array_equal(self._tokens, other._tokens))
            )
        )

    def __hash__(self) -> int:
        return hash((self.vocab_size, self._tokens.tobytes()))

    def __repr__(self) -> str:
        return f"SupportSet(n={len(self)}, V={self.vocab_size}, T={self.length})"

    def index(self, seq: Sequence[int]) -> int:
        """Position of ``seq``; raises ``KeyError`` when absent."""
        return self._index[tuple(int(t) for t in seq)]

    def locate(self, batch: np.ndarray) -> np.ndarray:
        """Row indices for a token batch, -1 where a row is off-support."""
        batch = as_token_array(batch)
        get = self._index.get
        return np.fromiter(
            (get(tuple(row), -1) for row in batch.tolist()),
            dtype=np.int64,
            count=batch.shape[0],
        )

    def union(self, *others: "SupportSet") -> "SupportSet":
        """Union in first-seen order: this support's rows, then new rows."""
        rows = list(self.seqs)
        seen = set(self._index)
        for other in others:
            if other.vocab_size != self.vocab_size or (
                len(other) and other.length != self.length
            ):
                raise SupportMismatchError(
                    "cannot merge supports with different vocabulary or length"
                )
            for seq in other.seqs:
                if seq not in seen:
                    seen.add(seq)
                    rows.append(seq)
        return SupportSet(as_token_array(rows), self.vocab_size)


def _check_simplex(values: np.ndarray, tol: float, what: str) -> None:
    if values.ndim != 1:
        raise ValidationError("must be a vector", field=what)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValidationError("entries must be finite and non-negative", field=what)
    total = float(values.sum())
    if abs(total - 1.0) > tol:
        raise ValidationError(f"entries sum to {total!r}, expected 1", field=what)


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """Probability vector over a :class:`SupportSet`."""

    support: SupportSet
    probs: np.ndarray
    tol: float = field(default=CONSTRUCTION_TOL, repr=False)

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64, copy=True)
        if probs.shape != (len(self.support),):
            raise ValidationError(
                f"expected {len(self.support)} probabilities, got {probs.shape}",
                field="probs",
            )
        _check_simplex(probs, self.tol, "probs")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(
        cls, weights: dict[Seq, float], vocab_size: int
    ) -> "DiscreteDist":
        """Distribution over exactly the keys of ``weights``."""
        support = SupportSet.from_sequences(weights.keys(), vocab_size)
        return cls(support, np.fromiter(weights.values(), dtype=np.float64))

    def prob(self, seq: Sequence[int]) -> float:
        try:
            return float(self.probs[self.support.index(seq)])
        except KeyError:
            return 0.0

    def on(self, support: SupportSet) -> "DiscreteDist":
        """Re-express this distribution on a superset support."""
        if support == self.support:
            return self
        idx = support.locate(self.support.tokens)
        if np.any(idx < 0):
            raise SupportMismatchError(
                "target support does not contain every sequence of the source"
            )
        probs = np.zeros(len(support))
        probs[idx] = self.probs
        return DiscreteDist(support, probs)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` support rows i.i.d., returned as an ``(n, T)`` array."""
        rows = rng.choice(len(self.support), size=n, p=self.probs)
        return self.support.tokens[rows]


class MixtureWeights:
    """A point of the probability simplex over p sources or experts."""

    __slots__ = ("_values",)

    def __init__(self, values: Sequence[float] | np.ndarray, tol: float = CONSTRUCTION_TOL):
        arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
        if arr.size == 0:
            raise ValidationError("mixture weights must be non-empty", field="lambda")
        _check_simplex(arr, tol, "lambda")
        arr.setflags(write=False)
        self._values = arr

    @classmethod
    def uniform(cls, p: int) -> "MixtureWeights":
        return cls(np.full(p, 1.0 / p))

    @classmethod
    def one_hot(cls, p: int, k: int) -> "MixtureWeights":
        values = np.zeros(p)
        values[k] = 1.0
        return cls(values)

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __getitem__(self, k: int) -> float:
        return float(self._values[k])

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return self._values if dtype is None else self._values.astype(dtype)

    def __repr__(self) -> str:
        return f"MixtureWeights({np.array2string(self._values, precision=6)})"


WeightsLike = MixtureWeights | Sequence[float] | np.ndarray


def as_weights(weights: WeightsLike) -> np.ndarray:
    """Validated weight vector from any weights-like input."""
    if isinstance(weights, MixtureWeights):
        return weights.values
    return MixtureWeights(weights).values


def require_shared_support(dists: Sequence[DiscreteDist]) -> SupportSet:
    """Return the common support or raise :class:`SupportMismatchError`."""
    if not dists:
        raise ValidationError("at least one distribution is required", field="dists")
    support = dists[0].support
    for d in dists[1:]:
        if d.support != support:
            raise SupportMismatchError("distributions do not share a SupportSet")
    return support


def align(dists: Sequence[DiscreteDist]) -> list[DiscreteDist]:
    """Re-express every distribution on the union of their supports."""
    if not dists:
        return []
    union = dists[0].support.union(*(d.support for d in dists[1:]))
    return [d.on(union) for d in dists]


def relative_entropy(p: np.ndarray, q: np.ndarray) -> float:
    """Σ p ln(p/q) for arrays; ``q`` need not be normalized."""
    terms = rel_entr(p, q)
    total = float(np.sum(terms))
    return INF_KL if math.isinf(total) else total


def kl(p: DiscreteDist, q: DiscreteDist) -> float:
    """KL(p ‖ q) in nats; ``math.inf`` when p puts mass where q has none."""
    if p.support != q.support:
        raise SupportMismatchError("kl requires distributions on the same support")
    if p is q:
        return 0.0
    return relative_entropy(p.probs, q.probs)


def mixture(dists: Sequence[DiscreteDist], weights: WeightsLike) -> DiscreteDist:
    """Pointwise convex combination Σ_k λ_k p_k."""
    lam = as_weights(weights)
    if len(dists) != lam.size:
        raise ValidationError(
            f"{len(dists)} distributions but {lam.size} weights", field="lambda"
        )
    support = require_shared_support(dists)
    k_hot = np.flatnonzero(lam == 1.0)
    if k_hot.size == 1:
        return dists[int(k_hot[0])]
    probs = lam @ np.stack([d.probs for d in dists])
    return DiscreteDist(support, probs, tol=ARITHMETIC_TOL)


def jsd(dists: Sequence[DiscreteDist], weights: WeightsLike) -> float:
    """Generalized Jensen-Shannon divergence Σ_k λ_k KL(p_k ‖ p_λ)."""
    lam = as_weights(weights)
    mix = mixture(dists, lam)
    return float(
        sum(lam[k] * kl(d, mix) for k, d in enumerate(dists) if lam[k] > 0.0)
    )


def entropy(weights: WeightsLike) -> float:
    """Shannon entropy −Σ λ ln λ of a weight vector."""
    return float(np.sum(entr(as_weights(weights))))


def log_sum_exp(values: Sequence[float] | np.ndarray) -> float:
    """Stable ln Σ e^v."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("log_sum_exp of an empty list", field="values")
    return float(logsumexp(arr))
