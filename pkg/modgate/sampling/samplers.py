"""Sampling from the non-causal gated mixture.

Both samplers propose from the uniform expert mixture
q(x) = (1/p) Σ_k π̂_k(x): pick an expert uniformly, then sample it
ancestrally. Because gate rows lie in the simplex, π_g(x) ≤ Σ_k π̂_k(x) =
p·q(x), so p is a strict rejection envelope and the acceptance probability
A(x) = π_g(x) / (p·q(x)) never exceeds 1.

All weights and acceptance tests are computed in log-space.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from modgate.constants import DEFAULT_SIR_CANDIDATES, REJECTION_TRIALS_PER_EXPERT
from modgate.core.distributions import DiscreteDist, Seq, SupportSet
from modgate.exceptions import SamplingBudgetError, ValidationError, ZeroMassError
from modgate.experts.base import SequenceExpert, likelihood_matrix, log_likelihood_matrix
from modgate.gates.base import Gate, gate_log_prob
from modgate.gates.tabular import TabularGate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleStats:
    """Bookkeeping of one sampler call."""

    num_samples: int
    trials: np.ndarray
    fallbacks: int = 0

    @property
    def total_trials(self) -> int:
        return int(self.trials.sum())

    @property
    def acceptance_rate(self) -> float:
        total = self.total_trials
        return self.num_samples / total if total else math.nan

    @property
    def mean_trials(self) -> float:
        return float(self.trials.mean()) if self.trials.size else math.nan


def _as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    return np.random.default_rng(seed)


def proposal_sample(
    experts: Sequence[SequenceExpert], rng: np.random.Generator, n: int
) -> np.ndarray:
    """Draw ``n`` sequences from q: uniform expert choice, then ancestral sampling."""
    p = len(experts)
    if p == 0:
        raise ValidationError("at least one expert is required", field="experts")
    choice = rng.integers(p, size=n)
    out = np.empty((n, experts[0].length), dtype=np.int64)
    for k, expert in enumerate(experts):
        rows = np.flatnonzero(choice == k)
        if rows.size:
            out[rows] = expert.sample(rng, rows.size)
    return out


def log_proposal(log_likelihoods: np.ndarray) -> np.ndarray:
    """ln q(x) from an ``(n, p)`` log-likelihood matrix."""
    return logsumexp(log_likelihoods, axis=1) - math.log(log_likelihoods.shape[1])


def _log_target(
    gate: Gate, experts: Sequence[SequenceExpert], tokens: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    log_lik = log_likelihood_matrix(experts, tokens)
    logpi = gate_log_prob(gate, experts, tokens, strict=False, log_likelihoods=log_lik)
    return logpi, log_proposal(log_lik)


def sir_sample_batch(
    gate: Gate,
    experts: Sequence[SequenceExpert],
    num_samples: int,
    candidates: int = DEFAULT_SIR_CANDIDATES,
    seed: int | np.random.Generator = 0,
) -> tuple[np.ndarray, SampleStats]:
    """Sampling-importance-resampling, one resampled candidate per output.

    Every output draws its own ``candidates`` proposals, weights them by
    w = π_g/q and keeps one in proportion to w. Rows whose weights are all
    zero or non-finite fall back to a uniform pick; the count is reported.
    """
    if candidates < 1:
        raise ValidationError("candidate count must be at least 1", field="candidates")
    if num_samples < 0:
        raise ValidationError("sample count must be non-negative", field="num_samples")
    rng = _as_rng(seed)
    n, N = num_samples, candidates
    pool = proposal_sample(experts, rng, n * N)
    logpi, logq = _log_target(gate, experts, pool)
    logw = (logpi - logq).reshape(n, N)
    logw[~np.isfinite(logw)] = -np.inf

    norm = logsumexp(logw, axis=1, keepdims=True)
    degenerate = ~np.isfinite(norm[:, 0])
    fallbacks = int(degenerate.sum())
    if fallbacks:
        logger.warning("SIR fell back to uniform resampling on %d of %d draws", fallbacks, n)
    probs = np.exp(logw - np.where(degenerate, 0.0, norm[:, 0])[:, None])
    probs[degenerate] = 1.0 / N
    cum = np.cumsum(probs, axis=1)
    u = rng.random(n) * cum[:, -1]
    pick = np.minimum((cum <= u[:, None]).sum(axis=1), N - 1)
    chosen = pool.reshape(n, N, -1)[np.arange(n), pick]
    stats = SampleStats(num_samples=n, trials=np.full(n, N), fallbacks=fallbacks)
    return chosen, stats


def sir_sample(
    gate: Gate,
    experts: Sequence[SequenceExpert],
    candidates: int = DEFAULT_SIR_CANDIDATES,
    seed: int | np.random.Generator = 0,
) -> Seq:
    """One SIR draw."""
    tokens, _ = sir_sample_batch(gate, experts, 1, candidates, seed)
    return tuple(int(t) for t in tokens[0])


def rejection_sample_batch(
    gate: Gate,
    experts: Sequence[SequenceExpert],
    num_samples: int,
    seed: int | np.random.Generator = 0,
    max_trials: int | None = None,
    progress: Callable[[int], None] | None = None,
) -> tuple[np.ndarray, SampleStats]:
    """Exact sampling from π_g/Z_g with envelope p·q.

    Every output slot retries until acceptance; a slot that uses up
    ``max_trials`` proposals raises :class:`SamplingBudgetError`.
    """
    p = len(experts)
    if num_samples < 0:
        raise ValidationError("sample count must be non-negative", field="num_samples")
    if max_trials is None:
        max_trials = REJECTION_TRIALS_PER_EXPERT * p
    elif max_trials < 1:
        raise ValidationError("max_trials must be positive", field="max_trials")
    rng = _as_rng(seed)
    out = np.empty((num_samples, experts[0].length), dtype=np.int64)
    trials = np.zeros(num_samples, dtype=np.int64)
    pending = np.arange(num_samples)
    log_p = math.log(p)

    for _ in range(max_trials):
        if pending.size == 0:
            break
        proposals = proposal_sample(experts, rng, pending.size)
        logpi, logq = _log_target(gate, experts, proposals)
        log_accept = np.minimum(logpi - log_p - logq, 0.0)
        log_u = np.log(rng.random(pending.size))
        trials[pending] += 1
        accepted = log_u <= log_accept
        out[pending[accepted]] = proposals[accepted]
        pending = pending[~accepted]
        if progress is not None:
            progress(num_samples - pending.size)

    if pending.size:
        raise SamplingBudgetError(
            f"{pending.size} of {num_samples} draws not accepted within the budget",
            trials=max_trials,
        )
    stats = SampleStats(num_samples=num_samples, trials=trials)
    logger.debug(
        "rejection sampler: %d samples, acceptance %.4f", num_samples, stats.acceptance_rate
    )
    return out, stats


def rejection_sample(
    gate: Gate,
    experts: Sequence[SequenceExpert],
    seed: int | np.random.Generator = 0,
    max_trials: int | None = None,
) -> tuple[Seq, int]:
    """One exact draw and the number of proposals it took."""
    tokens, stats = rejection_sample_batch(gate, experts, 1, seed, max_trials)
    return tuple(int(t) for t in tokens[0]), int(stats.trials[0])


def exact_model_dist(gate: TabularGate, experts: Sequence[SequenceExpert]) -> DiscreteDist:
    """π_g/Z_g over the gate's support, by enumeration."""
    pi = gate.mixture_probs(likelihood_matrix(experts, gate.support.tokens))
    Z = float(pi.sum())
    if Z <= 0.0:
        raise ZeroMassError("gated mixture has zero mass on its support")
    return DiscreteDist(gate.support, pi / Z, tol=1e-9)


def empirical_dist(tokens: np.ndarray, support: SupportSet) -> np.ndarray:
    """Empirical frequencies of ``tokens`` over ``support`` (off-support rows dropped)."""
    idx = support.locate(tokens)
    idx = idx[idx >= 0]
    counts = np.bincount(idx, minlength=len(support)).astype(np.float64)
    return counts / max(tokens.shape[0], 1)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
