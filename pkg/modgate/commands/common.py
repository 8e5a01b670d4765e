"""Run-directory layout and loaders shared by the subcommands.

Every subcommand reads from and writes to one run directory given by
``--out``. fit-experts creates the experts and the manifest; later steps
find everything else by the fixed file names below.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.table import Table

from modgate.config.settings import ExperimentConfig, parse_domains
from modgate.core.distributions import DiscreteDist, align
from modgate.exceptions import ConfigurationError, PersistenceError
from modgate.experts.domains import DomainSpec, domain_dist
from modgate.experts.markov import MarkovExpert
from modgate.gates.base import Gate
from modgate.solvers.lambdas import LambdaSet
from modgate.storage.manifest import RunManifest, load_manifest
from modgate.storage.textio import load_expert, load_gate

logger = logging.getLogger(__name__)
console = Console()


@dataclass(frozen=True)
class RunPaths:
    """Fixed file names inside a run directory."""

    root: Path

    def expert(self, k: int) -> Path:
        return self.root / f"expert_{k + 1}.txt"

    @property
    def gate(self) -> Path:
        return self.root / "gate.txt"

    @property
    def trace(self) -> Path:
        return self.root / "trace.csv"

    @property
    def bounds(self) -> Path:
        return self.root / "bounds.csv"

    @property
    def sweep(self) -> Path:
        return self.root / "sweep.csv"

    @property
    def corpus(self) -> Path:
        return self.root / "corpus.txt"

    @property
    def cache(self) -> Path:
        return self.root / "cache.txt"

    @property
    def router(self) -> Path:
        return self.root / "router.txt"

    @property
    def distill(self) -> Path:
        return self.root / "distill.csv"

    @property
    def analysis(self) -> Path:
        return self.root / "analysis.csv"


@dataclass(frozen=True)
class RunContext:
    """Experts, their exact sources and the manifest of a run."""

    paths: RunPaths
    manifest: RunManifest
    experts: list[MarkovExpert]
    sources: list[DiscreteDist]

    @property
    def vocab_size(self) -> int:
        return self.manifest.vocab_size

    @property
    def length(self) -> int:
        return self.manifest.length

    @property
    def num_experts(self) -> int:
        return len(self.experts)

    def provenance(self) -> str:
        domains = ",".join(e.domain for e in self.manifest.experts)
        return (
            f"V={self.vocab_size} T={self.length} domains={domains} "
            f"alpha={self.manifest.alpha:g} seed={self.manifest.seed}"
        )


def manifest_specs(manifest: RunManifest) -> list[DomainSpec]:
    return [
        DomainSpec(manifest.vocab_size, manifest.length, rule, contamination)
        for entry in manifest.experts
        for rule, contamination in parse_domains(entry.domain)
    ]


def load_run(run_dir: Path) -> RunContext:
    """Load experts and rebuild their exact source distributions."""
    paths = RunPaths(Path(run_dir))
    manifest = load_manifest(paths.root)
    experts = [load_expert(paths.root / entry.file) for entry in manifest.experts]
    sources = align([domain_dist(spec) for spec in manifest_specs(manifest)])
    logger.debug("Loaded %d experts from %s", len(experts), paths.root)
    return RunContext(paths=paths, manifest=manifest, experts=experts, sources=sources)


def require_gate(paths: RunPaths) -> Gate:
    if not paths.gate.exists():
        raise PersistenceError("no gate found; run solve first", path=str(paths.gate))
    return load_gate(paths.gate)


def lambda_set_from(cfg: ExperimentConfig, p: int) -> LambdaSet | None:
    """Box mixture set from lambda_lower/lambda_upper, or None for the full simplex."""
    if cfg.lambda_lower is None and cfg.lambda_upper is None:
        return None
    lower = np.array(cfg.lambda_lower) if cfg.lambda_lower is not None else np.zeros(p)
    upper = np.array(cfg.lambda_upper) if cfg.lambda_upper is not None else np.ones(p)
    if lower.size != p or upper.size != p:
        raise ConfigurationError(f"lambda bounds need {p} entries, one per expert")
    return LambdaSet(lower, upper)


def require_two_sources(ctx: RunContext, command: str) -> None:
    if ctx.num_experts != 2:
        raise ConfigurationError(
            f"{command} sweeps the mixture of exactly two domains, run has {ctx.num_experts}"
        )


def two_source_target(sources: Sequence[DiscreteDist], lam: float) -> np.ndarray:
    """λ p̂_1 + (1 − λ) p̂_2 on the shared support."""
    return lam * sources[0].probs + (1.0 - lam) * sources[1].probs


def expected_nll(target: np.ndarray, log_probs: np.ndarray) -> float:
    """−Σ_x p̂(x) ln q(x), +inf when q misses target mass."""
    mask = target > 0
    if np.any(np.isneginf(log_probs[mask])):
        return float("inf")
    return float(-np.sum(target[mask] * log_probs[mask]))


def summary_table(title: str, rows: Sequence[tuple[str, str]]) -> Table:
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Quantity", style="bold")
    table.add_column("Value", justify="right")
    for name, value in rows:
        table.add_row(name, value)
    return table
