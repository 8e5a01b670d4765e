"""Causal routers: per-step expert weights computed from a prefix alone.

A router γ maps every prefix x_{<t} to a point of the simplex over the p
experts. Combined with the experts' next-token conditionals it defines an
autoregressive student

    π_γ(x) = Π_t Σ_k γ_k(x_{<t}) π̂_k(x_t | x_{<t}).

:class:`CausalRouter` is the trainable softmax router over a fixed prefix
feature map, :class:`TabularRouter` stores one weight row per prefix (the
exact posterior router is one of these) and :class:`UniformRouter` is the
trivial baseline.
"""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence

import numpy as np
from scipy.special import log_softmax, logsumexp, softmax

from modgate.core.distributions import MixtureWeights, Seq, as_token_array
from modgate.exceptions import ValidationError, ZeroMassError
from modgate.experts.base import SequenceExpert, likelihood_matrix
from modgate.gates.tabular import TabularGate

logger = logging.getLogger(__name__)


def router_feature_dim(vocab_size: int) -> int:
    return 2 * vocab_size + 2


def prefix_features(prefixes: np.ndarray, vocab_size: int, length: int) -> np.ndarray:
    """ψ for an ``(n, t)`` batch of equal-length prefixes.

    Blocks: one-hot of the last token (zero when t = 0), one-hot of the last
    offset (x_t − x_{t−1}) mod V (zero when t < 2), t/T, and a bias.
    """
    prefixes = np.asarray(prefixes, dtype=np.int64)
    if prefixes.ndim == 1:
        prefixes = prefixes[None, :]
    n, t = prefixes.shape
    V = vocab_size
    feats = np.zeros((n, router_feature_dim(V)))
    rows = np.arange(n)
    if t >= 1:
        feats[rows, prefixes[:, -1]] = 1.0
    if t >= 2:
        feats[rows, V + np.mod(prefixes[:, -1] - prefixes[:, -2], V)] = 1.0
    feats[:, -2] = t / length
    feats[:, -1] = 1.0
    return feats


class Router(ABC):
    """Prefix-to-simplex map over p experts."""

    vocab_size: int
    length: int
    num_experts: int

    @abstractmethod
    def log_routing(self, prefixes: np.ndarray) -> np.ndarray:
        """``(n, p)`` log routing weights for an ``(n, t)`` prefix batch."""

    def routing(self, prefix: Sequence[int]) -> MixtureWeights:
        row = np.exp(self.log_routing(np.asarray(prefix, dtype=np.int64).reshape(1, -1))[0])
        return MixtureWeights(row / row.sum(), tol=1e-9)


class CausalRouter(Router):
    """γ_φ(x_{<t}) = softmax(Φᵀψ(x_{<t}))."""

    def __init__(self, vocab_size: int, length: int, phi: np.ndarray):
        phi = np.array(phi, dtype=np.float64, copy=True)
        d = router_feature_dim(vocab_size)
        if phi.ndim != 2 or phi.shape[0] != d:
            raise ValidationError(
                f"Phi must have {d} rows for V={vocab_size}, got {phi.shape}",
                field="phi",
            )
        if not np.all(np.isfinite(phi)):
            raise ValidationError("Phi must be finite", field="phi")
        phi.setflags(write=False)
        self.vocab_size = int(vocab_size)
        self.length = int(length)
        self.phi = phi
        self.num_experts = phi.shape[1]

    @classmethod
    def zeros(cls, vocab_size: int, length: int, num_experts: int) -> "CausalRouter":
        return cls(vocab_size, length, np.zeros((router_feature_dim(vocab_size), num_experts)))

    def __repr__(self) -> str:
        return f"CausalRouter(V={self.vocab_size}, T={self.length}, p={self.num_experts})"

    def log_routing(self, prefixes: np.ndarray) -> np.ndarray:
        feats = prefix_features(prefixes, self.vocab_size, self.length)
        return log_softmax(feats @ self.phi, axis=1)


class UniformRouter(Router):
    """γ ≡ (1/p, …, 1/p)."""

    def __init__(self, vocab_size: int, length: int, num_experts: int):
        self.vocab_size = vocab_size
        self.length = length
        self.num_experts = num_experts

    def log_routing(self, prefixes: np.ndarray) -> np.ndarray:
        prefixes = np.asarray(prefixes)
        n = 1 if prefixes.ndim == 1 else prefixes.shape[0]
        return np.full((n, self.num_experts), -math.log(self.num_experts))


class TabularRouter(Router):
    """Explicit routing row for every prefix it knows.

    Unknown prefixes raise :class:`ZeroMassError`; the posterior router
    only knows prefixes that carry teacher mass.
    """

    def __init__(
        self,
        vocab_size: int,
        length: int,
        num_experts: int,
        table: Mapping[Seq, np.ndarray],
    ):
        self.vocab_size = vocab_size
        self.length = length
        self.num_experts = num_experts
        self.table: dict[Seq, np.ndarray] = {}
        for prefix, row in table.items():
            row = np.asarray(row, dtype=np.float64)
            if row.shape != (num_experts,) or np.any(row < 0) or abs(row.sum() - 1.0) > 1e-9:
                raise ValidationError(f"routing row for {prefix} is not a simplex vector")
            self.table[tuple(int(t) for t in prefix)] = row

    def __contains__(self, prefix: object) -> bool:
        return tuple(prefix) in self.table  # type: ignore[arg-type]

    def log_routing(self, prefixes: np.ndarray) -> np.ndarray:
        prefixes = np.asarray(prefixes, dtype=np.int64)
        if prefixes.ndim == 1:
            prefixes = prefixes[None, :]
        out = np.empty((prefixes.shape[0], self.num_experts))
        for i, row in enumerate(prefixes.tolist()):
            key = tuple(row)
            if key not in self.table:
                raise ZeroMassError(f"prefix {key} carries no teacher mass")
            out[i] = self.table[key]
        with np.errstate(divide="ignore"):
            return np.log(out)

    def perturbed(self, noise: float, seed: int | np.random.Generator = 0) -> "TabularRouter":
        """Copy with Gaussian noise of scale ``noise`` added to every logit.

        Zero weights stay zero.
        """
        rng = np.random.default_rng(seed)
        table = {}
        for prefix, row in self.table.items():
            with np.errstate(divide="ignore"):
                logits = np.log(row) + noise * rng.standard_normal(row.size)
            table[prefix] = softmax(logits)
        return TabularRouter(self.vocab_size, self.length, self.num_experts, table)


def _posterior_table(gate: TabularGate, experts: Sequence[SequenceExpert]) -> dict[Seq, np.ndarray]:
    """Unnormalized Σ_{x extends h} g(x,k)π̂_k(x) for every prefix h of the support."""
    tokens = gate.support.tokens
    joint = gate.W * likelihood_matrix(experts, tokens)
    table: dict[Seq, np.ndarray] = {}
    for t in range(gate.support.length + 1):
        for row, mass in zip(tokens[:, :t].tolist(), joint, strict=True):
            key = tuple(row)
            if key in table:
                table[key] = table[key] + mass
            else:
                table[key] = mass.copy()
    return table


def posterior_table(gate: TabularGate, experts: Sequence[SequenceExpert]) -> TabularRouter:
    """The exact posterior-mean router of a tabular teacher, by enumeration."""
    raw = _posterior_table(gate, experts)
    table = {}
    for prefix, mass in raw.items():
        total = float(mass.sum())
        if total > 0.0:
            table[prefix] = mass / total
    if not table:
        raise ZeroMassError("teacher has zero mass on its whole support")
    first = experts[0]
    return TabularRouter(first.vocab_size, first.length, len(experts), table)


class PosteriorRouter(TabularRouter):
    """Posterior-mean router γ*_k(h) ∝ Σ_{x extends h} g(x,k) π̂_k(x).

    Sums run over the gate's support only. See :func:`posterior_router`
    for when the resulting student reproduces the teacher exactly.
    """

    def __init__(self, gate: TabularGate, experts: Sequence[SequenceExpert]):
        base = posterior_table(gate, experts)
        super().__init__(base.vocab_size, base.length, base.num_experts, base.table)


def posterior_router(
    gate: TabularGate, experts: Sequence[SequenceExpert], prefix: Sequence[int]
) -> MixtureWeights:
    """γ*(prefix) for a single prefix; zero teacher mass is an error.

    The causal student built from these weights matches the teacher
    exactly (zero KL) only when two things hold: every expert puts all of
    its mass on the gate's support, and each gate column g(·,k) is constant
    over the sequences expert k can produce. A smoothed expert leaks mass
    off the support that the table never sees, and a gate that varies
    along extensions of a prefix reweights continuations in a way no
    prefix-only router can express. Otherwise the weights are still the
    per-prefix posterior means, and :func:`chain_rule_decomposition`
    reports the remaining error.
    """
    key = tuple(int(t) for t in prefix)
    mass = _posterior_table(gate, experts).get(key)
    if mass is None or float(mass.sum()) <= 0.0:
        raise ZeroMassError(f"prefix {key} carries no teacher mass")
    return MixtureWeights(mass / mass.sum(), tol=1e-9)


def _step_log_probs(
    router: Router, experts: Sequence[SequenceExpert], tokens: np.ndarray, t: int
) -> np.ndarray:
    """ln Σ_k γ_k(x_{<t}) π̂_k(x_t | x_{<t}) for every row."""
    prefixes = tokens[:, :t]
    cond = np.stack(
        [e.next_token_probs(prefixes)[np.arange(tokens.shape[0]), tokens[:, t]] for e in experts],
        axis=1,
    )
    with np.errstate(divide="ignore"):
        return logsumexp(router.log_routing(prefixes) + np.log(cond), axis=1)


def student_log_prob(
    router: Router, experts: Sequence[SequenceExpert], seqs: np.ndarray
) -> np.ndarray:
    """ln π_γ for an ``(n, T)`` batch; −inf where every expert gives zero."""
    tokens = as_token_array(seqs)
    if len(experts) != router.num_experts:
        raise ValidationError(
            f"router over {router.num_experts} experts, got {len(experts)}",
            field="experts",
        )
    out = np.zeros(tokens.shape[0])
    for t in range(tokens.shape[1]):
        out += _step_log_probs(router, experts, tokens, t)
    return out


def student_seq_logprob(router: Router, experts: Sequence[SequenceExpert], x: Seq) -> float:
    return float(student_log_prob(router, experts, as_token_array([x]))[0])


def router_sample(
    router: Router,
    experts: Sequence[SequenceExpert],
    seed: int | np.random.Generator,
    n: int,
) -> np.ndarray:
    """Autoregressive samples from π_γ."""
    rng = np.random.default_rng(seed)
    T, V = router.length, router.vocab_size
    out = np.zeros((n, T), dtype=np.int64)
    for t in range(T):
        prefixes = out[:, :t]
        gamma = np.exp(router.log_routing(prefixes))
        cond = np.stack([e.next_token_probs(prefixes) for e in experts], axis=1)
        probs = np.einsum("nk,nkv->nv", gamma, cond)
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n) * cum[:, -1]
        out[:, t] = np.minimum((cum <= u[:, None]).sum(axis=1), V - 1)
    return out


def inversion_rate(seqs: np.ndarray, vocab_size: int) -> float:
    """Share of sequences that step both up and down by one (mod V)."""
    if vocab_size < 3:
        raise ValidationError("inversions need V >= 3", field="vocab_size")
    tokens = as_token_array(seqs)
    if tokens.shape[0] == 0 or tokens.shape[1] < 3:
        return 0.0
    offsets = np.mod(np.diff(tokens, axis=1), vocab_size)
    up = np.any(offsets == 1, axis=1)
    down = np.any(offsets == vocab_size - 1, axis=1)
    return float(np.mean(up & down))
