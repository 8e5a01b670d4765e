"""Mixture-weight player: multiplicative-weights updates and the box set Λ."""

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from modgate.constants import BISECTION_MAX_ITER, CONSTRUCTION_TOL
from modgate.core.distributions import MixtureWeights, WeightsLike, as_weights
from modgate.exceptions import NumericalError, ValidationError
from modgate.solvers.game import clamp_gains

logger = logging.getLogger(__name__)

_BOX_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LambdaSet:
    """Λ = {λ ∈ Δ : lower ≤ λ ≤ upper} coordinate-wise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.array(self.lower, dtype=np.float64, copy=True).reshape(-1)
        upper = np.array(self.upper, dtype=np.float64, copy=True).reshape(-1)
        if lower.shape != upper.shape or lower.size == 0:
            raise ValidationError("lower and upper must have one entry per source")
        if np.any(lower < 0) or np.any(upper > 1) or np.any(lower > upper):
            raise ValidationError("bounds must satisfy 0 <= lower <= upper <= 1")
        if lower.sum() > 1.0 + _BOX_TOL or upper.sum() < 1.0 - _BOX_TOL:
            raise ValidationError(
                f"empty mixture set: sum(lower)={lower.sum():.6g}, "
                f"sum(upper)={upper.sum():.6g}",
                field="lambda_set",
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def simplex(cls, p: int) -> "LambdaSet":
        return cls(np.zeros(p), np.ones(p))

    @property
    def dim(self) -> int:
        return self.lower.size

    def is_simplex(self) -> bool:
        return bool(np.all(self.lower == 0.0) and np.all(self.upper == 1.0))

    def contains(self, weights: WeightsLike, tol: float = _BOX_TOL) -> bool:
        lam = np.asarray(weights, dtype=np.float64)
        return bool(
            abs(lam.sum() - 1.0) <= CONSTRUCTION_TOL
            and np.all(lam >= self.lower - tol)
            and np.all(lam <= self.upper + tol)
        )

    def vertices(self) -> list[np.ndarray]:
        """Extreme points of the box ∩ simplex polytope.

        Every vertex has at most one coordinate strictly between its bounds.
        """
        p = self.dim
        found: list[np.ndarray] = []
        seen: set[tuple[float, ...]] = set()
        for free in range(p):
            others = [k for k in range(p) if k != free]
            for picks in itertools.product((0, 1), repeat=p - 1):
                lam = np.empty(p)
                for k, pick in zip(others, picks, strict=True):
                    lam[k] = self.upper[k] if pick else self.lower[k]
                lam[free] = 1.0 - lam[others].sum()
                if lam[free] < self.lower[free] - _BOX_TOL or lam[free] > self.upper[free] + _BOX_TOL:
                    continue
                lam[free] = min(max(lam[free], self.lower[free]), self.upper[free])
                key = tuple(np.round(lam, 12))
                if key not in seen:
                    seen.add(key)
                    found.append(lam)
        return found


def eg_update(weights: WeightsLike, gains: np.ndarray, eta: float) -> MixtureWeights:
    """λ_{t+1}(k) ∝ λ_t(k)·exp(η·ℓ_t(k)), with gains clamped to the cap."""
    lam = as_weights(weights)
    clamped, count = clamp_gains(gains)
    if clamped.shape != lam.shape:
        raise ValidationError(
            f"{clamped.size} gains for {lam.size} weights", field="gains"
        )
    if count:
        logger.warning("clamped %d infinite or oversized gains", count)
    with np.errstate(divide="ignore"):
        logits = np.log(lam) + eta * clamped
    norm = logsumexp(logits)
    if not np.isfinite(norm):
        raise NumericalError("multiplicative-weights normalizer is not finite")
    out = np.exp(logits - norm)
    return MixtureWeights(out / out.sum())


def kl_project_lambda(raw: WeightsLike, lambda_set: LambdaSet) -> MixtureWeights:
    """I-projection argmin_{q∈Λ} KL(q ‖ raw).

    The minimizer has the form q_k = clip(raw_k·s, lower_k, upper_k) for a
    scalar s chosen so that Σ q = 1.
    """
    lam = as_weights(raw)
    if lam.size != lambda_set.dim:
        raise ValidationError("weights and mixture set differ in size", field="lambda")
    if lambda_set.contains(lam):
        return MixtureWeights(lam)

    def mass(log_s: float) -> tuple[float, np.ndarray]:
        q = np.clip(lam * np.exp(log_s), lambda_set.lower, lambda_set.upper)
        return float(q.sum()), q

    lo, hi = -745.0, 709.0
    q = mass(0.0)[1]
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        total, q = mass(mid)
        if abs(total - 1.0) <= 1e-15:
            break
        if total > 1.0:
            hi = mid
        else:
            lo = mid
    return MixtureWeights(q, tol=1e-12)
