"""
Shared pytest fixtures for modgate tests.

The fixtures build small, fully enumerable instances whose game values,
losses and likelihoods are known in closed form.
"""

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest
from typer.testing import CliRunner

from modgate.core.distributions import DiscreteDist, SupportSet, align
from modgate.experts.domains import DomainSpec, Rule, domain_dist
from modgate.experts.markov import MarkovExpert, fit_mle_weighted


@dataclass
class Instance:
    """Sources on one shared support together with their frozen experts."""

    sources: list[DiscreteDist]
    experts: list[MarkovExpert]

    @property
    def support(self) -> SupportSet:
        return self.sources[0].support


def domain_instance(
    vocab_size: int, length: int, contamination: float = 0.0, alpha: float = 0.0
) -> Instance:
    """Increment and decrement sources with experts fitted on their populations."""
    specs = [
        DomainSpec(vocab_size, length, Rule.INCREMENT, contamination),
        DomainSpec(vocab_size, length, Rule.DECREMENT, contamination),
    ]
    sources = align([domain_dist(spec) for spec in specs])
    experts = [
        fit_mle_weighted(s.support.tokens, s.probs, vocab_size, length, alpha)
        for s in sources
    ]
    return Instance(sources, experts)


def single_token_instance(
    source_probs: list[list[float]], expert_probs: list[list[float]]
) -> Instance:
    """Length-one instance given directly by source and expert probability vectors."""
    vocab_size = len(source_probs[0])
    support = SupportSet.full_space(vocab_size, 1)
    uniform = np.full((vocab_size, vocab_size), 1.0 / vocab_size)
    sources = [DiscreteDist(support, np.asarray(p, dtype=float)) for p in source_probs]
    experts = [
        MarkovExpert(vocab_size, 1, np.asarray(pi, dtype=float), uniform)
        for pi in expert_probs
    ]
    return Instance(sources, experts)


# --- Directory and CLI Fixtures ---


@pytest.fixture
def cli_runner() -> CliRunner:
    """Click test runner for the modgate app."""
    return CliRunner()


@pytest.fixture
def run_dir(tmp_path: Path) -> Path:
    """Empty run directory."""
    path = tmp_path / "run"
    path.mkdir()
    return path


@pytest.fixture(autouse=True)
def clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep MODGATE_* variables from the developer's shell out of tests."""
    for key in list(os.environ):
        if key.startswith("MODGATE_"):
            monkeypatch.delenv(key, raising=False)


# --- Instance Fixtures ---


@pytest.fixture
def disjoint_short() -> Instance:
    """Clean increment/decrement domains with V=3, T=2 and exact experts."""
    return domain_instance(3, 2)


@pytest.fixture
def disjoint_long() -> Instance:
    """Clean increment/decrement domains with V=3, T=4 and exact experts."""
    return domain_instance(3, 4)


@pytest.fixture
def identical_experts() -> Instance:
    """With V=2 both rules draw the same sequences, so the experts coincide."""
    return domain_instance(2, 2, alpha=0.1)


@pytest.fixture
def dominance_instance() -> Instance:
    """Disjoint sources where a small restricted set lowers the game value."""
    return single_token_instance(
        [[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]],
        [[0.495, 0.495, 0.005, 0.005], [0.19673, 0.19673, 0.30327, 0.30327]],
    )


@pytest.fixture
def capacity_instance() -> Instance:
    """Disjoint sources with misfit experts of unequal quality."""
    return single_token_instance(
        [[0.7, 0.3, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]],
        [[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.9, 0.1]],
    )


@pytest.fixture
def overlap_instance() -> Instance:
    """Two points, one source each, experts that disagree on both."""
    return single_token_instance(
        [[1.0, 0.0], [0.0, 1.0]],
        [[0.9, 0.1], [0.2, 0.8]],
    )
