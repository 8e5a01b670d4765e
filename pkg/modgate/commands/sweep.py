"""sweep: expected NLL of the gate and the baselines along λ ∈ [0, 1]."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from modgate.commands.common import (
    RunContext,
    console,
    expected_nll,
    load_run,
    require_gate,
    require_two_sources,
    summary_table,
    two_source_target,
)
from modgate.config.settings import ExperimentConfig
from modgate.experts.markov import fit_mle_weighted, fit_unigram
from modgate.gates.base import Gate, evaluate_gate
from modgate.storage.textio import write_csv

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "lambda",
    "gate_nll",
    "fixed_small_nll",
    "fixed_large_nll",
    "oracle_nll",
    "expert_a_nll",
    "expert_b_nll",
]


@dataclass
class SweepResult:
    header: list[str]
    rows: list[list[float]]

    def column(self, name: str) -> np.ndarray:
        j = self.header.index(name)
        return np.array([row[j] for row in self.rows])


def fixed_log_probs(ctx: RunContext, gate: Gate, alpha: float) -> dict[str, np.ndarray]:
    """Log-probabilities over the shared support of every λ-independent model.

    The gate is renormalized by its mass on the support; the two fixed
    baselines are trained once on the 50/50 aggregate.
    """
    support = ctx.sources[0].support
    tokens = support.tokens
    V, T = ctx.vocab_size, ctx.length
    aggregate = two_source_target(ctx.sources, 0.5)
    evaluation = evaluate_gate(gate, ctx.experts, support)
    if abs(evaluation.Z - 1.0) > 1e-6:
        logger.info("gate mass on the support is %.6g; renormalizing", evaluation.Z)
    return {
        "gate": evaluation.logpi - np.log(evaluation.Z),
        "fixed_small": fit_unigram(tokens, aggregate, V, T, alpha).log_prob(tokens),
        "fixed_large": fit_mle_weighted(tokens, aggregate, V, T, alpha).log_prob(tokens),
        "expert_a": ctx.experts[0].log_prob(tokens),
        "expert_b": ctx.experts[1].log_prob(tokens),
    }


def _resampled_nll(
    rng: np.random.Generator, target: np.ndarray, logp: np.ndarray, repeats: int, size: int
) -> tuple[float, float]:
    scores = []
    for _ in range(repeats):
        idx = rng.choice(target.size, size=size, p=target)
        scores.append(float(-np.mean(logp[idx])))
    return float(np.mean(scores)), float(np.std(scores))


def sweep(cfg: ExperimentConfig, out_dir: Path) -> SweepResult:
    """Population NLL per sequence under the exact mixture at every grid point.

    With ``resample`` > 0 each model is also scored on ``resample`` test sets
    of ``test_size`` sequences drawn from p̂_λ, reported as mean/std columns.
    """
    ctx = load_run(out_dir)
    require_two_sources(ctx, "sweep")
    gate = require_gate(ctx.paths)
    tokens = ctx.sources[0].support.tokens
    V, T = ctx.vocab_size, ctx.length
    fixed = fixed_log_probs(ctx, gate, cfg.alpha)

    names = ["gate", "fixed_small", "fixed_large", "oracle", "expert_a", "expert_b"]
    header = list(SWEEP_COLUMNS)
    if cfg.resample:
        header += [f"{name}_nll_{stat}" for name in names for stat in ("mean", "std")]

    rng = np.random.default_rng(cfg.seed)
    rows = []
    for lam in cfg.lambda_grid():
        target = two_source_target(ctx.sources, lam)
        oracle = fit_mle_weighted(tokens, target, V, T, cfg.alpha)
        logps = {**fixed, "oracle": oracle.log_prob(tokens)}
        row = [lam] + [expected_nll(target, logps[name]) for name in names]
        if cfg.resample:
            for name in names:
                row.extend(_resampled_nll(rng, target, logps[name], cfg.resample, cfg.test_size))
        rows.append(row)
        logger.debug("lambda=%g gate=%.6g oracle=%.6g", lam, row[1], row[4])

    write_csv(ctx.paths.sweep, header, rows, ctx.provenance())
    result = SweepResult(header=header, rows=rows)
    mid = min(range(len(rows)), key=lambda i: abs(rows[i][0] - 0.5))
    console.print(
        summary_table(
            f"NLL at lambda={rows[mid][0]:g}",
            [(column, f"{rows[mid][j]:.6g}") for j, column in enumerate(SWEEP_COLUMNS) if j],
        )
    )
    return result
