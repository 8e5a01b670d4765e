"""Unit tests for the mixture-weight player."""

import logging
import math

import numpy as np
import pytest

from modgate.core.distributions import MixtureWeights
from modgate.exceptions import ValidationError
from modgate.solvers.lambdas import LambdaSet, eg_update, kl_project_lambda


@pytest.mark.unit
class TestLambdaSet:
    """Tests for box-constrained mixture sets."""

    def test_simplex(self):
        """The unconstrained set is the whole simplex."""
        box = LambdaSet.simplex(3)
        assert box.is_simplex()
        assert box.dim == 3
        assert sorted(tuple(v) for v in box.vertices()) == [
            (0.0, 0.0, 1.0),
            (0.0, 1.0, 0.0),
            (1.0, 0.0, 0.0),
        ]

    def test_restricted_vertices(self):
        """Capping the second weight at 0.05 moves one vertex."""
        box = LambdaSet(np.zeros(2), np.array([1.0, 0.05]))
        assert not box.is_simplex()
        vertices = sorted(tuple(np.round(v, 12)) for v in box.vertices())
        assert vertices == [(0.95, 0.05), (1.0, 0.0)]

    def test_contains(self):
        """Membership checks both the box and the simplex."""
        box = LambdaSet(np.zeros(2), np.array([1.0, 0.05]))
        assert box.contains([0.97, 0.03])
        assert not box.contains([0.9, 0.1])
        assert not box.contains([0.5, 0.4])

    def test_empty_set_rejected(self):
        """Lower bounds summing above one leave nothing."""
        with pytest.raises(ValidationError):
            LambdaSet(np.array([0.6, 0.6]), np.ones(2))
        with pytest.raises(ValidationError):
            LambdaSet(np.zeros(2), np.array([0.3, 0.3]))
        with pytest.raises(ValidationError):
            LambdaSet(np.array([0.5]), np.array([0.4]))


@pytest.mark.unit
class TestExponentiatedGradient:
    """Tests for multiplicative-weights updates."""

    def test_update(self):
        """Weights grow with the exponential of the gain."""
        lam = eg_update(MixtureWeights.uniform(2), np.array([1.0, 0.0]), eta=1.0)
        e = math.e
        assert lam.values == pytest.approx([e / (1 + e), 1 / (1 + e)])

    def test_zero_gain_keeps_weights(self):
        """Equal gains leave λ unchanged."""
        lam = eg_update([0.3, 0.7], np.array([2.0, 2.0]), eta=0.5)
        assert lam.values == pytest.approx([0.3, 0.7])

    def test_infinite_gain_is_clamped(self, caplog, monkeypatch):
        """An infinite loss is capped and logged instead of breaking the update."""
        monkeypatch.setattr(logging.getLogger("modgate"), "propagate", True)
        lam = eg_update(MixtureWeights.uniform(2), np.array([np.inf, 0.0]), eta=1.0)
        assert np.all(np.isfinite(lam.values))
        assert lam[0] == pytest.approx(1.0)
        assert "clamped 1" in caplog.text

    def test_size_mismatch(self):
        """One gain per weight."""
        with pytest.raises(ValidationError):
            eg_update(MixtureWeights.uniform(2), np.zeros(3), eta=1.0)


@pytest.mark.unit
class TestKLProjection:
    """Tests for the I-projection onto a box set."""

    def test_inside_is_unchanged(self):
        """Points already in Λ are returned as they are."""
        box = LambdaSet(np.zeros(2), np.array([1.0, 0.5]))
        assert kl_project_lambda([0.7, 0.3], box).values.tolist() == [0.7, 0.3]

    def test_lower_bound_binds(self):
        """A coordinate below its floor is clipped up and the rest rescaled."""
        box = LambdaSet(np.array([0.0, 0.3]), np.ones(2))
        assert kl_project_lambda([0.9, 0.1], box).values == pytest.approx([0.7, 0.3])

    def test_upper_bound_binds(self):
        """A coordinate above its cap is clipped down."""
        box = LambdaSet(np.zeros(3), np.array([1.0, 1.0, 0.2]))
        q = kl_project_lambda([0.1, 0.1, 0.8], box).values
        assert q == pytest.approx([0.4, 0.4, 0.2])
        assert box.contains(q, tol=1e-9)
