"""Structural and monolithic distillation of a gated teacher.

Structural distillation keeps the frozen experts and trains only a causal
router. Teacher samples are drawn once by rejection sampling; for every
position the experts' next-token probabilities of the observed token are
cached, so router training never touches the experts again. The loss of a
cached tuple (h, x_t, 𝐏) is −ln(γ(h)·𝐏).

Monolithic distillation fits a single Markov student on the same kind of
corpus.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, logsumexp, softmax

from modgate.core.distributions import Seq, relative_entropy
from modgate.distill.routers import (
    CausalRouter,
    PosteriorRouter,
    Router,
    prefix_features,
    router_feature_dim,
    student_log_prob,
)
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert
from modgate.experts.markov import MarkovExpert, fit_mle
from modgate.gates.base import Gate
from modgate.gates.tabular import TabularGate
from modgate.sampling.samplers import exact_model_dist, rejection_sample_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CachedTuple:
    """History, observed next token, and every expert's probability of it."""

    prefix: Seq
    target: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64, copy=True).reshape(-1)
        if np.any(probs < 0.0) or np.any(probs > 1.0) or not np.all(np.isfinite(probs)):
            raise ValidationError("cached probabilities must lie in [0, 1]", field="probs")
        probs.setflags(write=False)
        object.__setattr__(self, "prefix", tuple(int(t) for t in self.prefix))
        object.__setattr__(self, "probs", probs)


def cache_sequences(
    tokens: np.ndarray, experts: Sequence[SequenceExpert]
) -> list[CachedTuple]:
    """One tuple per (sequence, position), sequence-major."""
    n, T = tokens.shape
    rows = np.arange(n)
    per_step = []
    for t in range(T):
        prefixes = tokens[:, :t]
        per_step.append(
            np.stack([e.next_token_probs(prefixes)[rows, tokens[:, t]] for e in experts], axis=1)
        )
    dataset = []
    for i in range(n):
        seq = tokens[i].tolist()
        for t in range(T):
            dataset.append(CachedTuple(tuple(seq[:t]), seq[t], per_step[t][i]))
    return dataset


def generate_cached_dataset(
    gate: Gate,
    experts: Sequence[SequenceExpert],
    corpus_size: int,
    seed: int | np.random.Generator = 0,
    max_trials: int | None = None,
) -> list[CachedTuple]:
    """Sample a teacher corpus and cache per-expert next-token probabilities."""
    if corpus_size < 1:
        raise ValidationError("corpus size must be at least 1", field="corpus_size")
    tokens, stats = rejection_sample_batch(gate, experts, corpus_size, seed, max_trials)
    logger.info(
        "cached %d teacher sequences (acceptance %.3f)", corpus_size, stats.acceptance_rate
    )
    return cache_sequences(tokens, experts)


def dataset_arrays(
    dataset: Sequence[CachedTuple], vocab_size: int, length: int
) -> tuple[np.ndarray, np.ndarray, int]:
    """Router features, probability rows, and the number of all-zero tuples dropped."""
    kept = [d for d in dataset if np.any(d.probs > 0.0)]
    skipped = len(dataset) - len(kept)
    if skipped:
        logger.warning("skipped %d cached tuples with zero probability under every expert", skipped)
    if not kept:
        raise ValidationError("no usable cached tuples", field="dataset")
    by_len: dict[int, list[int]] = {}
    for i, d in enumerate(kept):
        by_len.setdefault(len(d.prefix), []).append(i)
    feats = np.empty((len(kept), router_feature_dim(vocab_size)))
    for t, idx in by_len.items():
        prefixes = np.array([kept[i].prefix for i in idx], dtype=np.int64).reshape(len(idx), t)
        feats[idx] = prefix_features(prefixes, vocab_size, length)
    probs = np.stack([d.probs for d in kept])
    return feats, probs, skipped


def router_loss(phi: np.ndarray, feats: np.ndarray, probs: np.ndarray) -> float:
    """Mean −ln(softmax(Φᵀψ)·𝐏) over cached tuples."""
    logw = log_softmax(feats @ phi, axis=1)
    with np.errstate(divide="ignore"):
        return float(-np.mean(logsumexp(logw + np.log(probs), axis=1)))


def _router_grad(phi: np.ndarray, feats: np.ndarray, probs: np.ndarray) -> np.ndarray:
    w = softmax(feats @ phi, axis=1)
    joint = w * probs
    resp = joint / joint.sum(axis=1, keepdims=True)
    return feats.T @ (w - resp) / feats.shape[0]


def train_router(
    dataset: Sequence[CachedTuple],
    router: CausalRouter,
    steps: int = 4000,
    eta: float = 0.5,
    seed: int | np.random.Generator = 0,
    batch_size: int | None = None,
) -> CausalRouter:
    """Gradient descent on the cached-tuple loss.

    Full-batch by default, which makes training deterministic and the loss
    monotone for small enough ``eta``; with ``batch_size`` set, minibatches
    are drawn from a generator seeded by ``seed``.
    """
    if not dataset:
        raise ValidationError("cannot train a router on an empty dataset", field="dataset")
    if steps < 0 or not eta > 0:
        raise ValidationError("steps must be >= 0 and eta > 0", field="steps")
    feats, probs, _ = dataset_arrays(dataset, router.vocab_size, router.length)
    if probs.shape[1] != router.num_experts:
        raise ValidationError(
            f"dataset caches {probs.shape[1]} experts, router has {router.num_experts}",
            field="dataset",
        )
    rng = np.random.default_rng(seed)
    phi = np.array(router.phi)
    m = feats.shape[0]
    logger.info("training router on %d tuples: steps=%d eta=%g", m, steps, eta)
    for step in range(1, steps + 1):
        if batch_size is None or batch_size >= m:
            grad = _router_grad(phi, feats, probs)
        else:
            idx = rng.choice(m, size=batch_size, replace=False)
            grad = _router_grad(phi, feats[idx], probs[idx])
        phi -= eta * grad
        if step % 1000 == 0:
            logger.debug("router step %d: loss %.6f", step, router_loss(phi, feats, probs))
    logger.info("router training finished: loss %.6f", router_loss(phi, feats, probs))
    return CausalRouter(router.vocab_size, router.length, phi)


@dataclass(frozen=True)
class ChainRuleReport:
    """Sequence-level KL and its per-step decompositions."""

    total_kl: float
    stepwise_sum: float
    router_bound: float


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.array([relative_entropy(a, b) for a, b in zip(p, q, strict=True)])


def chain_rule_decomposition(
    gate: TabularGate, experts: Sequence[SequenceExpert], router: Router
) -> ChainRuleReport:
    """KL(π_g ‖ π_γ) three ways, by enumeration of the gate's support.

    ``stepwise_sum`` adds the expected conditional KLs of every step and must
    equal ``total_kl``; ``router_bound`` adds the expected KL between the
    posterior-mean routing and γ. Prefixes without teacher mass are skipped.
    """
    teacher = exact_model_dist(gate, experts)
    mass = teacher.probs
    live = mass > 0.0
    tokens = gate.support.tokens[live]
    w = mass[live]
    T, V = gate.support.length, experts[0].vocab_size

    student = student_log_prob(router, experts, tokens)
    total_kl = float(np.sum(w * (np.log(w) - student)))

    posterior = PosteriorRouter(gate, experts)
    stepwise = 0.0
    bound = 0.0
    for t in range(T):
        groups: dict[Seq, list[int]] = {}
        for i, row in enumerate(tokens[:, :t].tolist()):
            groups.setdefault(tuple(row), []).append(i)
        prefixes = np.array(list(groups), dtype=np.int64).reshape(len(groups), t)
        weights = np.array([w[idx].sum() for idx in groups.values()])
        cond_teacher = np.zeros((len(groups), V))
        for j, idx in enumerate(groups.values()):
            np.add.at(cond_teacher[j], tokens[idx, t], w[idx])
        cond_teacher /= weights[:, None]

        gamma = np.exp(router.log_routing(prefixes))
        expert_cond = np.stack([e.next_token_probs(prefixes) for e in experts], axis=1)
        cond_student = np.einsum("nk,nkv->nv", gamma, expert_cond)
        stepwise += float(weights @ _kl_rows(cond_teacher, cond_student))

        gamma_star = np.exp(posterior.log_routing(prefixes))
        bound += float(weights @ _kl_rows(gamma_star, gamma))

    logger.debug("chain rule: total %.3g stepwise %.3g bound %.3g", total_kl, stepwise, bound)
    return ChainRuleReport(total_kl=total_kl, stepwise_sum=stepwise, router_bound=bound)


def monolithic_distill(
    gate: Gate,
    experts: Sequence[SequenceExpert],
    corpus_size: int,
    alpha: float = 0.0,
    seed: int | np.random.Generator = 0,
    max_trials: int | None = None,
) -> MarkovExpert:
    """Order-1 Markov student fitted on a teacher corpus."""
    if corpus_size < 1:
        raise ValidationError("corpus size must be at least 1", field="corpus_size")
    tokens, _ = rejection_sample_batch(gate, experts, corpus_size, seed, max_trials)
    first = experts[0]
    return fit_mle(tokens, first.vocab_size, first.length, alpha=alpha)
