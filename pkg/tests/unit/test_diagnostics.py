"""Unit tests for game values, static baselines and dominance diagnostics."""

import math

import numpy as np
import pytest

from modgate.analysis.bounds import capacity_bound, softmax_sigma
from modgate.analysis.diagnostics import (
    dominance_report,
    game_value,
    hausdorff_l1,
    lipschitz_estimate,
    simplex_grid,
    static_gate_worst_case,
    static_grid_minimum,
    worst_case_risk,
)
from modgate.exceptions import ValidationError
from modgate.gates.tabular import TabularGate
from modgate.solvers.game import build_game
from modgate.solvers.lambdas import LambdaSet

RESTRICTED = LambdaSet(np.zeros(2), np.array([1.0, 0.05]))


def binary_entropy(a: float) -> float:
    return -a * math.log(a) - (1 - a) * math.log(1 - a)


@pytest.mark.unit
class TestSimplexGrid:
    """Tests for simplex grids."""

    def test_counts(self):
        """A 3-simplex grid with two steps has six points."""
        grid = simplex_grid(3, 2)
        assert grid.shape == (6, 3)
        assert grid.sum(axis=1) == pytest.approx(np.ones(6))

    def test_two_sources(self):
        """With two coordinates the grid is evenly spaced."""
        grid = simplex_grid(2, 4)
        assert sorted(grid[:, 0].tolist()) == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_rejects_bad_sizes(self):
        """Grids need at least one step."""
        with pytest.raises(ValidationError):
            simplex_grid(2, 0)


@pytest.mark.unit
class TestStaticGates:
    """Tests for constant-gate baselines."""

    def test_capacity_is_grid_floor(self, capacity_instance):
        """No constant gate beats ln Σ e^ε, and the grid gets close to it."""
        game = build_game(capacity_instance.sources, capacity_instance.experts)
        capacity = capacity_bound(game.epsilons)
        best, _ = static_grid_minimum(capacity_instance.sources, capacity_instance.experts)
        assert best >= capacity - 1e-9
        assert best <= capacity + 5e-3

    def test_softmax_witness_attains_capacity(self, capacity_instance):
        """The gate σ ∝ e^ε equalizes the losses at the capacity value."""
        game = build_game(capacity_instance.sources, capacity_instance.experts)
        sigma = softmax_sigma(game.epsilons)
        value = static_gate_worst_case(
            capacity_instance.sources, capacity_instance.experts, sigma
        )
        assert value == pytest.approx(capacity_bound(game.epsilons), abs=1e-9)

    def test_epsilons(self, capacity_instance):
        """Expert errors of the capacity instance match their closed forms."""
        game = build_game(capacity_instance.sources, capacity_instance.experts)
        eps1 = 0.7 * math.log(0.7 / 0.5) + 0.3 * math.log(0.3 / 0.5)
        eps2 = 0.5 * math.log(0.5 / 0.9) + 0.5 * math.log(0.5 / 0.1)
        assert game.epsilons == pytest.approx([eps1, eps2])


@pytest.mark.unit
class TestGameValue:
    """Tests for saddle values and least-favorable mixtures."""

    def test_disjoint_value_is_ln2(self, disjoint_short):
        """Disjoint exact domains have value ln 2 at the balanced mixture."""
        value, lam = game_value(disjoint_short.sources, disjoint_short.experts)
        assert value == pytest.approx(math.log(2), abs=1e-9)
        assert lam.values == pytest.approx([0.5, 0.5], abs=1e-3)

    def test_restricted_value(self, dominance_instance):
        """Capping λ₂ at 0.05 lowers the value to H(0.95)."""
        value, lam = game_value(
            dominance_instance.sources, dominance_instance.experts, RESTRICTED
        )
        assert value == pytest.approx(binary_entropy(0.95), abs=1e-6)
        assert lam.values == pytest.approx([0.95, 0.05], abs=1e-6)

    def test_full_value_dominates(self, dominance_instance):
        """The full-simplex value is ln 2 and dominates the restricted one."""
        report = dominance_report(
            dominance_instance.sources, dominance_instance.experts, RESTRICTED
        )
        assert report.value_full == pytest.approx(math.log(2), abs=1e-6)
        assert report.value_restricted <= report.value_full
        assert report.hausdorff == pytest.approx(1.9)
        assert math.isfinite(report.lipschitz)
        assert report.improvement_ceiling >= report.value_restricted

    def test_worst_case_risk_of_uniform_gate(self, disjoint_short):
        """The uniform gate loses ln 2 in the worst case."""
        gate = TabularGate.constant(disjoint_short.support, [0.5, 0.5])
        risk = worst_case_risk(disjoint_short.sources, disjoint_short.experts, gate)
        assert risk == pytest.approx(math.log(2))


@pytest.mark.unit
class TestSetDiagnostics:
    """Tests for the Hausdorff distance and the Lipschitz estimate."""

    def test_hausdorff_of_simplex_is_zero(self):
        """The full simplex is at distance zero from itself."""
        assert hausdorff_l1(LambdaSet.simplex(3)) == pytest.approx(0.0)

    def test_hausdorff_of_floor(self):
        """A floor of 0.2 on every coordinate of three sources keeps e_k at ℓ₁ distance 0.8."""
        box = LambdaSet(np.full(3, 0.2), np.ones(3))
        assert hausdorff_l1(box) == pytest.approx(0.8)

    def test_lipschitz_infinite_when_witness_misses(self, disjoint_short):
        """A pure-expert witness that misses a source makes the estimate infinite."""
        assert math.isinf(lipschitz_estimate(disjoint_short.sources, disjoint_short.experts))
