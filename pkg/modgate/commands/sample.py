"""sample: draw a corpus from the robust model with rejection or SIR."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from modgate.commands.common import console, load_run, require_gate, summary_table
from modgate.config.settings import ExperimentConfig
from modgate.sampling.samplers import SampleStats, rejection_sample_batch, sir_sample_batch
from modgate.storage.textio import save_corpus
from modgate.utils.progress import step_progress

logger = logging.getLogger(__name__)


@dataclass
class SampleResult:
    tokens: np.ndarray
    stats: SampleStats
    path: Path


def sample(cfg: ExperimentConfig, out_dir: Path) -> SampleResult:
    ctx = load_run(out_dir)
    gate = require_gate(ctx.paths)
    if cfg.sampler == "sir":
        tokens, stats = sir_sample_batch(
            gate, ctx.experts, cfg.num_samples, cfg.candidates, cfg.seed
        )
    else:
        with step_progress("Rejection sampling", cfg.num_samples) as progress:
            tokens, stats = rejection_sample_batch(
                gate,
                ctx.experts,
                cfg.num_samples,
                cfg.seed,
                cfg.trials_budget(ctx.num_experts),
                progress,
            )
    path = save_corpus(tokens, ctx.vocab_size, ctx.paths.corpus)
    logger.info("wrote %d sequences to %s", tokens.shape[0], path)
    console.print(
        summary_table(
            f"Corpus ({cfg.sampler})",
            [
                ("sequences", str(stats.num_samples)),
                ("proposals", str(stats.total_trials)),
                ("acceptance rate", f"{stats.acceptance_rate:.4f}"),
                ("fallbacks", str(stats.fallbacks)),
            ],
        )
    )
    return SampleResult(tokens=tokens, stats=stats, path=path)
