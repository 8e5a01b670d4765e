"""Stochastic primal-dual training of a featurized gate.

Each iteration draws an equal-size batch from every source, measures the
per-source negative log-likelihood of the gated mixture, estimates the
partition Ẑ by importance weighting against the uniform expert mixture
q(x) = (1/p)Σ_k π̂_k(x), and then

* updates λ by exponentiated gradient on the per-source losses,
* updates the multiplier μ by dual ascent on the smoothed constraint
  Z̄ − 1 (frozen during warmup),
* takes a gradient step on Θ for 𝒥 = Σ_k λ_k ℓ_k + μ(Ẑ − 1).

The quadratic-penalty variant drops μ and uses 𝒥 = Σ_k λ_k ℓ_k + β(Ẑ − 1)².
Gradients are analytic through the softmax.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.special import log_softmax, logsumexp

from modgate.core.distributions import MixtureWeights
from modgate.exceptions import NumericalError, ValidationError
from modgate.experts.base import SequenceExpert, log_likelihood_matrix
from modgate.gates.featurized import FeatGate, sequence_features
from modgate.solvers.lambdas import LambdaSet, eg_update, kl_project_lambda
from modgate.solvers.trace import Checkpoint, GameTrace, TraceRecord

logger = logging.getLogger(__name__)


class SourceSampler(Protocol):
    """Anything that can draw an ``(n, T)`` batch of sequences."""

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...


@dataclass(frozen=True)
class PDConfig:
    """Hyperparameters of the stochastic solvers."""

    eta_g: float = 0.02
    eta_lambda: float = 0.05
    eta_mu: float = 0.01
    alpha: float = 0.9
    iterations: int = 2000
    batch_size: int = 32
    warmup: int = 0
    seed: int = 0
    max_grad_norm: float | None = None
    checkpoint_every: int = 50

    def __post_init__(self) -> None:
        for name in ("eta_g", "eta_lambda", "eta_mu"):
            if not getattr(self, name) > 0:
                raise ValidationError("learning rates must be positive", field=name)
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("EMA factor must lie in (0, 1)", field="alpha")
        if self.iterations < 1:
            raise ValidationError("iterations must be positive", field="iterations")
        if self.batch_size < 1:
            raise ValidationError("batch size must be positive", field="batch_size")
        if self.warmup < 0:
            raise ValidationError("warmup must be non-negative", field="warmup")
        if self.max_grad_norm is not None and not self.max_grad_norm > 0:
            raise ValidationError("gradient clip must be positive", field="max_grad_norm")
        if self.checkpoint_every < 1:
            raise ValidationError("checkpoint interval must be positive", field="checkpoint_every")


@dataclass(frozen=True)
class BatchStats:
    """Per-batch quantities of the stochastic objective."""

    objective: float
    losses: np.ndarray
    z_hat: float


def stochastic_objective(
    theta: np.ndarray,
    feats: np.ndarray,
    log_lik: np.ndarray,
    owner: np.ndarray,
    lam: np.ndarray,
    multiplier: float,
    penalty_beta: float | None = None,
) -> tuple[BatchStats, np.ndarray]:
    """Batch objective and its exact gradient with respect to Θ.

    ``owner[i]`` is the source index of row i; every source contributes the
    same number of rows. With ``penalty_beta`` set, the constraint term is
    β(Ẑ − 1)² and ``multiplier`` is ignored.
    """
    p = lam.size
    B = feats.shape[0]
    per_source = B // p
    logw = log_softmax(feats @ theta, axis=1)
    joint = logw + log_lik
    logpi = logsumexp(joint, axis=1)
    if not np.all(np.isfinite(logpi)):
        raise NumericalError(
            "gated likelihood is zero on a sampled sequence",
            details="raise the expert smoothing alpha so every sequence has mass",
        )
    log_q = logsumexp(log_lik, axis=1) - math.log(log_lik.shape[1])
    is_w = np.exp(logpi - log_q)
    z_hat = float(is_w.mean())
    losses = np.bincount(owner, weights=-logpi, minlength=p) / per_source

    if penalty_beta is None:
        objective = float(lam @ losses + multiplier * (z_hat - 1.0))
        slope = multiplier
    else:
        objective = float(lam @ losses + penalty_beta * (z_hat - 1.0) ** 2)
        slope = 2.0 * penalty_beta * (z_hat - 1.0)

    resp = np.exp(joint - logpi[:, None])
    coeff = -lam[owner] / per_source + slope * is_w / B
    dlogits = coeff[:, None] * (resp - np.exp(logw))
    grad = feats.T @ dlogits
    return BatchStats(objective=objective, losses=losses, z_hat=z_hat), grad


def _run_stochastic(
    method: str,
    sources: Sequence[SourceSampler],
    experts: Sequence[SequenceExpert],
    gate: FeatGate,
    cfg: PDConfig,
    penalty_beta: float | None,
    lambda_set: LambdaSet | None,
    progress: Callable[[int], None] | None,
) -> GameTrace:
    p = len(sources)
    if p != len(experts) or p != gate.num_experts:
        raise ValidationError(
            f"{p} sources, {len(experts)} experts, gate over {gate.num_experts}",
            field="experts",
        )
    rng = np.random.default_rng(cfg.seed)
    V = gate.vocab_size
    theta = np.array(gate.theta)
    theta_sum = np.zeros_like(theta)
    restricted = lambda_set is not None and not lambda_set.is_simplex()
    lam = MixtureWeights.uniform(p).values
    if restricted:
        lam = kl_project_lambda(lam, lambda_set).values
    lam_sum = np.zeros(p)
    mu = 0.0
    z_ema = 1.0
    owner = np.repeat(np.arange(p), cfg.batch_size)
    clipped = 0

    trace = GameTrace(
        method=method,
        num_sources=p,
        settings={
            "eta_g": cfg.eta_g,
            "eta_lambda": cfg.eta_lambda,
            "eta_mu": cfg.eta_mu,
            "alpha": cfg.alpha,
            "iterations": cfg.iterations,
            "batch_size": cfg.batch_size,
            "warmup": cfg.warmup,
            "seed": cfg.seed,
            "beta": penalty_beta,
        },
    )
    logger.info("%s solver: p=%d T=%d batch=%d", method, p, cfg.iterations, cfg.batch_size)

    for t in range(1, cfg.iterations + 1):
        batch = np.concatenate([src.sample(rng, cfg.batch_size) for src in sources])
        feats = sequence_features(batch, V)
        log_lik = log_likelihood_matrix(experts, batch)

        stats, _ = stochastic_objective(
            theta, feats, log_lik, owner, lam, mu, penalty_beta
        )
        z_ema = cfg.alpha * z_ema + (1.0 - cfg.alpha) * stats.z_hat
        lam = eg_update(lam, stats.losses, cfg.eta_lambda).values
        if restricted:
            lam = kl_project_lambda(lam, lambda_set).values
        if penalty_beta is None and t > cfg.warmup:
            mu += cfg.eta_mu * (z_ema - 1.0)

        _, grad = stochastic_objective(
            theta, feats, log_lik, owner, lam, mu, penalty_beta
        )
        if cfg.max_grad_norm is not None:
            norm = float(np.linalg.norm(grad))
            if norm > cfg.max_grad_norm:
                grad *= cfg.max_grad_norm / norm
                clipped += 1
        theta -= cfg.eta_g * grad
        theta_sum += theta
        lam_sum += lam

        if t % cfg.checkpoint_every == 0 or t == cfg.iterations:
            gap = float(stats.losses.max() - lam @ stats.losses)
            trace.records.append(
                TraceRecord(
                    iteration=t,
                    lam=lam.copy(),
                    losses=stats.losses,
                    mu=mu if penalty_beta is None else 0.0,
                    z_hat=stats.z_hat,
                    z_ema=z_ema,
                    gap=gap,
                )
            )
            trace.checkpoints.append(
                Checkpoint(t, lam_sum / t, FeatGate(V, theta_sum / t))
            )
            logger.debug(
                "iter %d: losses=%s Z_ema=%.4f mu=%.4f", t, np.round(stats.losses, 4), z_ema, mu
            )
        if progress is not None:
            progress(t)

    if clipped:
        logger.info("gradient clipped on %d of %d steps", clipped, cfg.iterations)
    trace.final_gate = trace.checkpoints[-1].mean_gate
    trace.last_gate = FeatGate(V, theta)
    trace.mean_lambda = MixtureWeights(lam_sum / cfg.iterations, tol=1e-9)
    logger.info(
        "%s solver finished: Z_ema=%.4f lambda_bar=%s",
        method, z_ema, np.round(trace.mean_lambda.values, 4),
    )
    return trace


def solve_primal_dual(
    sources: Sequence[SourceSampler],
    experts: Sequence[SequenceExpert],
    gate: FeatGate,
    cfg: PDConfig,
    lambda_set: LambdaSet | None = None,
    progress: Callable[[int], None] | None = None,
) -> GameTrace:
    """Lagrangian primal-dual loop with an EMA-smoothed partition estimate."""
    return _run_stochastic(
        "primal-dual", sources, experts, gate, cfg, None, lambda_set, progress
    )


def solve_quadratic_penalty(
    sources: Sequence[SourceSampler],
    experts: Sequence[SequenceExpert],
    gate: FeatGate,
    beta: float,
    cfg: PDConfig,
    lambda_set: LambdaSet | None = None,
    progress: Callable[[int], None] | None = None,
) -> GameTrace:
    """Same loop with the normalization as a soft penalty β(Ẑ − 1)²."""
    if beta < 0:
        raise ValidationError("penalty weight must be non-negative", field="beta")
    return _run_stochastic(
        "quadratic", sources, experts, gate, cfg, float(beta), lambda_set, progress
    )
