"""Unit tests for the stochastic primal-dual and quadratic-penalty solvers."""

import math

import numpy as np
import pytest

from modgate.exceptions import NumericalError, ValidationError
from modgate.experts.base import log_likelihood_matrix
from modgate.gates.featurized import FeatGate, feature_dim, sequence_features
from modgate.solvers.lambdas import LambdaSet
from modgate.solvers.primal_dual import (
    PDConfig,
    solve_primal_dual,
    solve_quadratic_penalty,
    stochastic_objective,
)
from tests.conftest import domain_instance


def batch_inputs(inst, rng, per_source=8):
    batch = np.concatenate([s.sample(rng, per_source) for s in inst.sources])
    V = inst.experts[0].vocab_size
    owner = np.repeat(np.arange(len(inst.sources)), per_source)
    return sequence_features(batch, V), log_likelihood_matrix(inst.experts, batch), owner


@pytest.mark.unit
class TestStochasticObjective:
    """Tests for the batch objective and its analytic gradient."""

    @pytest.mark.parametrize("beta", [None, 3.0])
    def test_gradient_matches_finite_differences(self, beta):
        """The analytic Θ-gradient agrees with central differences."""
        inst = domain_instance(3, 3, contamination=0.1, alpha=0.2)
        rng = np.random.default_rng(0)
        feats, log_lik, owner = batch_inputs(inst, rng)
        theta = rng.normal(scale=0.3, size=(feature_dim(3), 2))
        lam = np.array([0.3, 0.7])
        _, grad = stochastic_objective(theta, feats, log_lik, owner, lam, 0.8, beta)
        h = 1e-6
        numeric = np.zeros_like(theta)
        for idx in np.ndindex(theta.shape):
            up, down = theta.copy(), theta.copy()
            up[idx] += h
            down[idx] -= h
            f_up = stochastic_objective(up, feats, log_lik, owner, lam, 0.8, beta)[0].objective
            f_down = stochastic_objective(down, feats, log_lik, owner, lam, 0.8, beta)[0].objective
            numeric[idx] = (f_up - f_down) / (2 * h)
        assert grad == pytest.approx(numeric, rel=1e-4, abs=1e-7)

    def test_uniform_gate_partition_is_one(self, disjoint_short):
        """With Θ = 0 and exact experts every importance weight is one."""
        feats, log_lik, owner = batch_inputs(disjoint_short, np.random.default_rng(1))
        theta = np.zeros((feature_dim(3), 2))
        stats, _ = stochastic_objective(theta, feats, log_lik, owner, np.array([0.5, 0.5]), 0.0)
        assert stats.z_hat == pytest.approx(1.0)
        assert stats.losses == pytest.approx([math.log(6)] * 2)

    def test_zero_likelihood_raises(self, disjoint_short):
        """A sampled sequence no expert can produce is a numerical error."""
        feats = sequence_features(np.array([[0, 0], [0, 0]]), 3)
        log_lik = log_likelihood_matrix(disjoint_short.experts, np.array([[0, 0], [0, 0]]))
        with pytest.raises(NumericalError):
            stochastic_objective(
                np.zeros((7, 2)), feats, log_lik, np.array([0, 1]), np.array([0.5, 0.5]), 0.0
            )


@pytest.mark.unit
class TestPDConfig:
    """Tests for solver hyperparameter validation."""

    def test_defaults(self):
        """Defaults are positive and the EMA factor lies in (0, 1)."""
        cfg = PDConfig()
        assert cfg.eta_g == 0.02
        assert cfg.alpha == 0.9

    @pytest.mark.parametrize(
        "kwargs",
        [{"eta_g": 0.0}, {"alpha": 1.0}, {"iterations": 0}, {"batch_size": 0}, {"max_grad_norm": -1.0}],
    )
    def test_invalid(self, kwargs):
        """Out-of-range hyperparameters are rejected."""
        with pytest.raises(ValidationError):
            PDConfig(**kwargs)


@pytest.mark.unit
class TestPrimalDual:
    """Tests for the Lagrangian solver on small instances."""

    def test_disjoint_domains(self, disjoint_short):
        """Symmetric domains keep λ̄ balanced and drive Z̄ toward one."""
        cfg = PDConfig(eta_g=0.2, eta_mu=0.05, iterations=3000, batch_size=16, seed=3)
        trace = solve_primal_dual(
            disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 2), cfg
        )
        assert trace.mean_lambda.values == pytest.approx([0.5, 0.5], abs=0.1)
        assert abs(trace.final_record.z_ema - 1.0) <= 0.15
        assert isinstance(trace.final_gate, FeatGate)
        assert trace.records[-1].iteration == 3000

    def test_deterministic_given_seed(self, disjoint_short):
        """Two runs with one seed produce identical traces."""
        cfg = PDConfig(iterations=60, batch_size=8, seed=11, checkpoint_every=20)
        runs = [
            solve_primal_dual(disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 2), cfg)
            for _ in range(2)
        ]
        assert runs[0].csv_rows() == runs[1].csv_rows()
        assert np.array_equal(runs[0].final_gate.theta, runs[1].final_gate.theta)

    def test_restricted_lambda(self, disjoint_short):
        """Mixture weights never leave a restricted Λ."""
        box = LambdaSet(np.zeros(2), np.array([1.0, 0.2]))
        cfg = PDConfig(iterations=200, batch_size=8, checkpoint_every=10)
        trace = solve_primal_dual(
            disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 2), cfg, box
        )
        assert all(box.contains(r.lam, tol=1e-9) for r in trace.records)

    def test_count_mismatch(self, disjoint_short):
        """The gate must route over one expert per source."""
        with pytest.raises(ValidationError):
            solve_primal_dual(
                disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 3), PDConfig(iterations=1)
            )

    def test_warmup_holds_multiplier(self, disjoint_short):
        """μ stays exactly zero through warmup and moves once it ends."""
        cfg = PDConfig(eta_g=0.2, iterations=100, batch_size=8, warmup=40, seed=5, checkpoint_every=1)
        trace = solve_primal_dual(
            disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 2), cfg
        )
        assert len(trace.records) == 100
        assert all(r.mu == 0.0 for r in trace.records[: cfg.warmup])
        assert trace.records[cfg.warmup].mu != 0.0
        assert any(r.mu != trace.records[cfg.warmup].mu for r in trace.records[cfg.warmup + 1 :])

    def test_averaged_violation_shrinks_with_horizon(self, disjoint_short):
        """The time-averaged constraint violation falls from T to 4T iterations."""

        def averaged_violation(iterations):
            cfg = PDConfig(
                eta_g=0.2, eta_mu=0.05, iterations=iterations, batch_size=16, seed=3, checkpoint_every=1
            )
            trace = solve_primal_dual(
                disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 2), cfg
            )
            return abs(float(np.mean([r.z_ema for r in trace.records])) - 1.0)

        short, long = averaged_violation(400), averaged_violation(1600)
        assert long < short


@pytest.mark.unit
class TestQuadraticPenalty:
    """Tests for the soft-penalty variant."""

    def test_runs_without_multiplier(self, disjoint_short):
        """The penalty solver records μ = 0 and a finite partition estimate."""
        cfg = PDConfig(eta_g=0.05, iterations=300, batch_size=16, max_grad_norm=1.0)
        trace = solve_quadratic_penalty(
            disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 2), 10.0, cfg
        )
        assert trace.method == "quadratic"
        assert all(r.mu == 0.0 for r in trace.records)
        assert all(math.isfinite(r.z_ema) for r in trace.records)
        assert trace.settings["beta"] == 10.0

    def test_stiff_penalty_matches_primal_dual(self, disjoint_short):
        """At β = 1000 Ẑ ends within 0.01 of one and λ̄ matches the Lagrangian run."""
        srcs, experts = disjoint_short.sources, disjoint_short.experts
        penalty = solve_quadratic_penalty(
            srcs,
            experts,
            FeatGate.zeros(3, 2),
            1000.0,
            PDConfig(eta_g=0.001, iterations=1500, batch_size=16, seed=3, max_grad_norm=1.0),
        )
        lagrangian = solve_primal_dual(
            srcs,
            experts,
            FeatGate.zeros(3, 2),
            PDConfig(eta_g=0.2, eta_mu=0.05, iterations=3000, batch_size=16, seed=3),
        )
        assert abs(penalty.final_record.z_hat - 1.0) <= 0.01
        assert abs(penalty.final_record.z_ema - 1.0) <= 0.01
        assert penalty.mean_lambda.values == pytest.approx(lagrangian.mean_lambda.values, abs=0.1)

    def test_negative_beta(self, disjoint_short):
        """The penalty weight may not be negative."""
        with pytest.raises(ValidationError):
            solve_quadratic_penalty(
                disjoint_short.sources, disjoint_short.experts, FeatGate.zeros(3, 2), -1.0, PDConfig()
            )


@pytest.mark.slow
class TestPrimalDualAtScale:
    """Larger smoothed instance; slow."""

    def test_balanced_mixture(self):
        """Increment and decrement experts over V=20, T=6 end near λ̄ = (½, ½)."""
        inst = domain_instance(20, 6, alpha=0.01)
        cfg = PDConfig(eta_g=0.02, iterations=3000, batch_size=32, seed=0)
        trace = solve_primal_dual(inst.sources, inst.experts, FeatGate.zeros(20, 2), cfg)
        assert trace.mean_lambda.values == pytest.approx([0.5, 0.5], abs=0.1)
        assert all(math.isfinite(r.z_ema) for r in trace.records)
