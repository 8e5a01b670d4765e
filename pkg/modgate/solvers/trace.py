"""Solver traces and convergence diagnostics.

A :class:`GameTrace` holds one :class:`TraceRecord` per checkpoint and the
time-averaged iterates at each checkpoint. The duality gap of the averaged
iterates is bounded above by comparing the best mixture response (a vertex
of Λ, since the linearized payoff is linear in λ) with the best gate among a
witness set that always contains the exact best response to λ̄.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import softmax

from modgate.core.distributions import DiscreteDist, MixtureWeights
from modgate.exceptions import ValidationError
from modgate.experts.base import SequenceExpert
from modgate.gates.base import Gate
from modgate.solvers.fixed import clipped_best_response
from modgate.solvers.game import GameData, build_game
from modgate.solvers.lambdas import LambdaSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceRecord:
    """Solver state at one checkpoint."""

    iteration: int
    lam: np.ndarray
    losses: np.ndarray
    mu: float
    z_hat: float
    z_ema: float
    gap: float = math.nan


@dataclass(frozen=True)
class Checkpoint:
    """Time-averaged iterates after ``iteration`` steps."""

    iteration: int
    mean_lambda: np.ndarray
    mean_gate: Gate


@dataclass
class GameTrace:
    """Everything a solver run produced."""

    method: str
    num_sources: int
    records: list[TraceRecord] = field(default_factory=list)
    checkpoints: list[Checkpoint] = field(default_factory=list)
    final_gate: Gate | None = None
    last_gate: Gate | None = None
    mean_lambda: MixtureWeights | None = None
    settings: dict[str, Any] = field(default_factory=dict)

    @property
    def final_record(self) -> TraceRecord:
        return self.records[-1]

    def csv_header(self) -> list[str]:
        p = self.num_sources
        return (
            ["iter"]
            + [f"lambda_{k + 1}" for k in range(p)]
            + [f"loss_{k + 1}" for k in range(p)]
            + ["mu", "Z_hat", "Z_ema", "gap"]
        )

    def csv_rows(self) -> list[list[float]]:
        return [
            [r.iteration, *r.lam.tolist(), *r.losses.tolist(), r.mu, r.z_hat, r.z_ema, r.gap]
            for r in self.records
        ]


def witness_sigma(epsilons: np.ndarray) -> np.ndarray:
    """Softmax of finite expert errors (infinite errors get zero weight)."""
    eps = np.where(np.isfinite(epsilons), epsilons, -np.inf)
    if not np.any(np.isfinite(eps)):
        return np.full(eps.size, 1.0 / eps.size)
    return softmax(eps)


def gap_at(
    game: GameData,
    mean_lambda: np.ndarray,
    mean_pi: np.ndarray,
    vertices: Sequence[np.ndarray],
) -> float:
    """max_{λ∈vert Λ} L̃(λ, ḡ) − min_{g∈witnesses} L̃(λ̄, g)."""
    losses_bar = game.losses(mean_pi)
    upper = max(float(v @ losses_bar) for v in vertices)
    p = game.num_sources
    witnesses = [*vertices, np.full(p, 1.0 / p), witness_sigma(game.epsilons)]
    candidates = [float(mean_lambda @ game.losses(game.likelihoods @ w)) for w in witnesses]
    best = clipped_best_response(game.target(mean_lambda), game.likelihoods)
    candidates.append(float(mean_lambda @ game.losses(best.pi)))
    return upper - min(candidates)


def duality_gap(
    trace: GameTrace,
    sources: Sequence[DiscreteDist],
    experts: Sequence[SequenceExpert],
    lambda_set: LambdaSet | None = None,
) -> np.ndarray:
    """Witness gap estimate at every checkpoint of ``trace``."""
    game = build_game(sources, experts)
    lambda_set = lambda_set or LambdaSet.simplex(game.num_sources)
    vertices = lambda_set.vertices()
    gaps = [
        gap_at(game, cp.mean_lambda, game.gate_probs(cp.mean_gate, experts), vertices)
        for cp in trace.checkpoints
    ]
    return np.array(gaps)


def least_favorable_mixture(trace: GameTrace) -> MixtureWeights:
    """Time-averaged mixture weights λ̄_T of a finished run."""
    if trace.mean_lambda is None:
        raise ValidationError("trace has no averaged mixture weights", field="trace")
    return trace.mean_lambda
