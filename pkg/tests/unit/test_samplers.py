"""Unit tests for SIR and rejection sampling from the gated mixture."""

import math

import numpy as np
import pytest

from modgate.exceptions import SamplingBudgetError, ValidationError, ZeroMassError
from modgate.gates.tabular import TabularGate
from modgate.sampling.samplers import (
    SampleStats,
    empirical_dist,
    exact_model_dist,
    log_proposal,
    proposal_sample,
    rejection_sample,
    rejection_sample_batch,
    sir_sample,
    sir_sample_batch,
    total_variation,
)


def skewed_gate(inst) -> TabularGate:
    """A normalized gate that favors the first expert everywhere."""
    return TabularGate.constant(inst.support, [0.8, 0.2])


def routing_gate(inst, inc_row, dec_row) -> TabularGate:
    W = np.array([inc_row] * 3 + [dec_row] * 3, dtype=float)
    return TabularGate(inst.support, W)


@pytest.mark.unit
class TestProposal:
    """Tests for the uniform expert mixture proposal."""

    def test_proposal_covers_both_experts(self, disjoint_short):
        """Half of the proposals come from each exact expert."""
        draws = proposal_sample(disjoint_short.experts, np.random.default_rng(0), 4000)
        freq = empirical_dist(draws, disjoint_short.support)
        assert total_variation(freq, np.full(6, 1 / 6)) < 0.03

    def test_log_proposal(self):
        """ln q is the log of the averaged likelihoods."""
        log_lik = np.log(np.array([[0.2, 0.4]]))
        assert log_proposal(log_lik)[0] == pytest.approx(math.log(0.3))


@pytest.mark.unit
class TestRejectionSampler:
    """Tests for exact rejection sampling."""

    def test_uniform_gate_acceptance(self, disjoint_short):
        """A uniform gate accepts with probability 1/p."""
        gate = TabularGate.constant(disjoint_short.support, [0.5, 0.5])
        _, stats = rejection_sample_batch(gate, disjoint_short.experts, 5000, seed=0)
        assert stats.acceptance_rate == pytest.approx(0.5, abs=0.02)
        assert stats.num_samples == 5000

    def test_matches_exact_distribution(self, disjoint_short):
        """Empirical frequencies converge to π_g/Z."""
        gate = routing_gate(disjoint_short, (0.8, 0.2), (0.8, 0.2))
        tokens, _ = rejection_sample_batch(gate, disjoint_short.experts, 20000, seed=1)
        exact = exact_model_dist(gate, disjoint_short.experts)
        assert exact.probs[:3] == pytest.approx([0.8 / 3] * 3)
        assert total_variation(empirical_dist(tokens, disjoint_short.support), exact.probs) < 0.05

    def test_reproducible(self, disjoint_short):
        """The same seed gives the same corpus."""
        gate = skewed_gate(disjoint_short)
        a, _ = rejection_sample_batch(gate, disjoint_short.experts, 100, seed=5)
        b, _ = rejection_sample_batch(gate, disjoint_short.experts, 100, seed=5)
        assert np.array_equal(a, b)

    def test_budget_exhausted(self, disjoint_short):
        """A slot that runs out of proposals raises."""
        gate = TabularGate.constant(disjoint_short.support, [0.5, 0.5])
        with pytest.raises(SamplingBudgetError) as exc:
            rejection_sample_batch(gate, disjoint_short.experts, 200, seed=0, max_trials=1)
        assert exc.value.trials == 1

    @pytest.mark.parametrize("budget", [0, -3])
    def test_non_positive_budget_rejected(self, disjoint_short, budget):
        """An explicit budget below one is an error, not a request for the default."""
        gate = TabularGate.constant(disjoint_short.support, [0.5, 0.5])
        with pytest.raises(ValidationError, match="max_trials"):
            rejection_sample_batch(gate, disjoint_short.experts, 5, seed=0, max_trials=budget)
        with pytest.raises(ValidationError):
            rejection_sample(gate, disjoint_short.experts, seed=0, max_trials=budget)

    def test_single_draw(self, disjoint_short):
        """A single draw returns a support sequence and its trial count."""
        gate = skewed_gate(disjoint_short)
        seq, trials = rejection_sample(gate, disjoint_short.experts, seed=2)
        assert seq in disjoint_short.support
        assert trials >= 1

    def test_negative_count(self, disjoint_short):
        """Sample counts may not be negative."""
        gate = skewed_gate(disjoint_short)
        with pytest.raises(ValidationError):
            rejection_sample_batch(gate, disjoint_short.experts, -1)


@pytest.mark.unit
class TestSIR:
    """Tests for sampling-importance-resampling."""

    def test_single_candidate_is_the_proposal(self, disjoint_short):
        """With one candidate SIR returns proposals unchanged."""
        gate = skewed_gate(disjoint_short)
        tokens, stats = sir_sample_batch(gate, disjoint_short.experts, 20000, candidates=1, seed=0)
        freq = empirical_dist(tokens, disjoint_short.support)
        assert total_variation(freq, np.full(6, 1 / 6)) < 0.05
        assert stats.acceptance_rate == pytest.approx(1.0)

    def test_many_candidates_approach_target(self, disjoint_short):
        """With 64 candidates the corpus is close to π_g/Z."""
        gate = skewed_gate(disjoint_short)
        tokens, stats = sir_sample_batch(gate, disjoint_short.experts, 10000, candidates=64, seed=1)
        exact = exact_model_dist(gate, disjoint_short.experts)
        assert total_variation(empirical_dist(tokens, disjoint_short.support), exact.probs) < 0.05
        assert stats.fallbacks == 0

    def test_zero_mass_falls_back(self, disjoint_short):
        """All-zero weights fall back to uniform picks and are counted."""
        gate = routing_gate(disjoint_short, (0.0, 1.0), (1.0, 0.0))
        tokens, stats = sir_sample_batch(gate, disjoint_short.experts, 50, candidates=4, seed=0)
        assert stats.fallbacks == 50
        assert tokens.shape == (50, 2)

    def test_single_draw_is_seeded(self, disjoint_short):
        """One SIR draw is deterministic given the seed."""
        gate = skewed_gate(disjoint_short)
        assert sir_sample(gate, disjoint_short.experts, seed=9) == sir_sample(
            gate, disjoint_short.experts, seed=9
        )

    def test_candidates_validated(self, disjoint_short):
        """At least one candidate is required."""
        with pytest.raises(ValidationError):
            sir_sample_batch(skewed_gate(disjoint_short), disjoint_short.experts, 1, candidates=0)


@pytest.mark.unit
class TestExactModel:
    """Tests for enumeration helpers."""

    def test_zero_mass_gate(self, disjoint_short):
        """A gate that sends every sequence to the wrong expert has no mass."""
        gate = routing_gate(disjoint_short, (0.0, 1.0), (1.0, 0.0))
        with pytest.raises(ZeroMassError):
            exact_model_dist(gate, disjoint_short.experts)

    def test_empirical_drops_off_support(self, disjoint_short):
        """Rows off the support count toward the total but not any cell."""
        freq = empirical_dist(np.array([[0, 1], [0, 0]]), disjoint_short.support)
        assert freq.sum() == pytest.approx(0.5)

    def test_stats(self):
        """Acceptance is samples over proposals."""
        stats = SampleStats(num_samples=2, trials=np.array([1, 3]))
        assert stats.total_trials == 4
        assert stats.acceptance_rate == 0.5
        assert stats.mean_trials == 2.0
