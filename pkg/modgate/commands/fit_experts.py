"""fit-experts: train one Markov expert per configured domain."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from modgate.commands.common import RunPaths, console, summary_table
from modgate.config.settings import ExperimentConfig
from modgate.experts.base import epsilon
from modgate.experts.domains import domain_dist
from modgate.experts.markov import MarkovExpert, fit_mle, fit_mle_weighted
from modgate.storage.manifest import ExpertEntry, RunManifest, save_manifest
from modgate.storage.textio import save_expert

logger = logging.getLogger(__name__)


@dataclass
class FitResult:
    manifest: RunManifest
    experts: list[MarkovExpert]
    manifest_path: Path


def fit_experts(cfg: ExperimentConfig, out_dir: Path) -> FitResult:
    """Fit, persist and score every domain expert.

    With ``samples_per_domain`` = 0 each expert is the population MLE of its
    exact domain distribution; otherwise it is fitted on i.i.d. samples.
    """
    specs = cfg.domain_specs()
    paths = RunPaths(Path(out_dir))
    rng = np.random.default_rng(cfg.seed)
    manifest = RunManifest(
        vocab_size=cfg.vocab_size, length=cfg.length, alpha=cfg.alpha, seed=cfg.seed
    )
    experts = []
    for k, spec in enumerate(specs):
        source = domain_dist(spec)
        if cfg.samples_per_domain == 0:
            expert = fit_mle_weighted(
                source.support.tokens, source.probs, spec.vocab_size, spec.length, cfg.alpha
            )
        else:
            samples = source.sample(rng, cfg.samples_per_domain)
            expert = fit_mle(samples, spec.vocab_size, spec.length, cfg.alpha)
        path = save_expert(expert, paths.expert(k))
        eps = epsilon(source, expert)
        manifest.experts.append(
            ExpertEntry(
                name=f"expert_{k + 1}",
                domain=spec.label,
                file=path.name,
                epsilon=float(eps),
                num_samples=cfg.samples_per_domain,
            )
        )
        experts.append(expert)
        logger.info("fitted expert %d on %s: epsilon=%.6g", k + 1, spec.label, eps)

    manifest_path = save_manifest(manifest, paths.root)
    console.print(
        summary_table(
            "Fitted experts",
            [(f"{e.name} ({e.domain})", f"eps={e.epsilon:.6g}") for e in manifest.experts],
        )
    )
    return FitResult(manifest=manifest, experts=experts, manifest_path=manifest_path)
