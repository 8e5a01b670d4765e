"""Euclidean projection onto the normalized gate space 𝒢₁.

𝒢₁ is the set of tabular gates whose rows lie in the simplex and whose
mixture has unit mass, Σ_x Σ_k g(x,k) π̂_k(x) = 1. Dualizing the single
affine constraint with a scalar ν turns the projection into independent
row-wise simplex projections of (g_raw − ν·π̂(x)); Z(ν) is non-increasing
in ν, so ν is found by bisection.
"""

import logging
from collections.abc import Sequence

import numpy as np

from modgate.constants import BISECTION_MAX_ITER, PROJECTION_TOL
from modgate.core.distributions import SupportSet
from modgate.exceptions import InfeasibleGateError, NumericalError, ValidationError
from modgate.experts.base import SequenceExpert, likelihood_matrix
from modgate.gates.tabular import TabularGate

logger = logging.getLogger(__name__)


def simplex_project_rows(v: np.ndarray) -> np.ndarray:
    """Project every row of ``v`` onto the probability simplex.

    Sort-based O(p log p) per row.
    """
    v = np.asarray(v, dtype=np.float64)
    n, p = v.shape
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, p + 1)
    cond = u - css / ind > 0
    rho = p - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(n), rho - 1] / rho
    return np.maximum(v - theta[:, None], 0.0)


def check_feasible(likelihoods: np.ndarray, tol: float = PROJECTION_TOL) -> None:
    """Raise when no simplex-row gate can reach unit mass."""
    low = float(likelihoods.min(axis=1).sum())
    high = float(likelihoods.max(axis=1).sum())
    if low > 1.0 + tol or high < 1.0 - tol:
        raise InfeasibleGateError(
            "normalized gate space is empty for these experts", low, high
        )


def project_onto_normalized_gates(
    raw: np.ndarray,
    likelihoods: np.ndarray,
    tol: float = PROJECTION_TOL,
) -> tuple[np.ndarray, float]:
    """Projection of ``raw`` onto 𝒢₁ given the ``(n, p)`` likelihood matrix.

    Returns the projected weight matrix and the dual variable ν.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != likelihoods.shape:
        raise ValidationError(
            f"raw gate shape {raw.shape} != likelihood shape {likelihoods.shape}",
            field="g_raw",
        )
    if not np.all(np.isfinite(raw)):
        raise NumericalError("gate update produced non-finite entries")
    check_feasible(likelihoods, tol)

    def mass(nu: float) -> tuple[float, np.ndarray]:
        W = simplex_project_rows(raw - nu * likelihoods)
        return float(np.sum(W * likelihoods)), W

    z0, W0 = mass(0.0)
    if abs(z0 - 1.0) <= tol:
        return W0, 0.0

    # Grow a bracket [lo, hi] with Z(lo) >= 1 >= Z(hi).
    step = max(1.0, float(np.abs(raw).max())) / max(float(likelihoods.max()), 1e-300)
    if z0 > 1.0:
        lo, hi = 0.0, step
        while mass(hi)[0] > 1.0 + tol:
            lo, hi = hi, hi * 2.0
            if not np.isfinite(hi):
                raise NumericalError("could not bracket the normalization dual")
    else:
        lo, hi = -step, 0.0
        while mass(lo)[0] < 1.0 - tol:
            hi, lo = lo, lo * 2.0
            if not np.isfinite(lo):
                raise NumericalError("could not bracket the normalization dual")

    best_nu, best_W, best_err = 0.0, W0, abs(z0 - 1.0)
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        z, W = mass(mid)
        err = abs(z - 1.0)
        if err < best_err:
            best_nu, best_W, best_err = mid, W, err
        if err <= tol:
            break
        if z > 1.0:
            lo = mid
        else:
            hi = mid
    if best_err > tol:
        logger.warning("projection onto normalized gates stopped at |Z-1|=%.3g", best_err)
    return best_W, best_nu


def project_G1(
    g_raw: np.ndarray,
    experts: Sequence[SequenceExpert],
    support: SupportSet,
) -> TabularGate:
    """Frobenius projection of a raw weight matrix onto 𝒢₁."""
    likelihoods = likelihood_matrix(experts, support.tokens)
    W, _ = project_onto_normalized_gates(g_raw, likelihoods)
    return TabularGate(support, W)
