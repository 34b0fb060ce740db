"""Fisher z-transform, Hodrick-Prescott trend/cycle split, rolling equicorrelation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .sample import corr_from_cov, cov_data, DegenerateRowError


def fisher_z(rho):
    """``0.5 * log((1 + rho)/(1 - rho))``, defined for ``|rho| < 1``."""
    r = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(np.abs(r) >= 1):
        raise ValueError("Fisher z-transform needs |rho| < 1")
    out = np.arctanh(r)
    return out if out.ndim else float(out)


def second_difference(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return np.zeros(0)
    return x[:-2] - 2.0 * x[1:-1] + x[2:]


@dataclass(frozen=True)
class HPDecomposition:
    trend: np.ndarray
    cycle: np.ndarray
    lamb: float


def _hp_dual_banded(m: int, lamb: float) -> np.ndarray:
    """Upper banded storage of ``I + lamb D D^T`` (size n - 2) for the second-difference D."""
    # D D^T is the Toeplitz band (1, -4, 6, -4, 1)
    ab = np.zeros((3, m))
    ab[2] = 1.0 + 6.0 * lamb
    ab[1, 1:] = -4.0 * lamb
    ab[0, 2:] = lamb
    return ab


def _apply_dt(w: np.ndarray) -> np.ndarray:
    """``D^T w`` for a length n - 2 vector w."""
    out = np.zeros(w.size + 2)
    out[:-2] += w
    out[1:-1] -= 2.0 * w
    out[2:] += w
    return out


def hp_filter(y, lamb: float = 1600.0) -> HPDecomposition:
    """Trend minimizing ``||y - x||^2 + lamb ||D2 x||^2`` and the cycle ``y - trend``.

    The trend solves ``(I + lamb D^T D) x = y``.  We solve the equivalent
    dual system ``(I + lamb D D^T) w = D y`` by banded Cholesky and set
    ``cycle = lamb D^T w``.  Working from ``D y`` keeps linear inputs exact
    and makes the error scale with the roughness of y instead of its level.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("empty series")
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    lamb = float(lamb)
    if lamb < 0 or not np.isfinite(lamb):
        raise ValueError("lambda must be a finite nonnegative number")
    if lamb == 0 or y.size < 3:
        return HPDecomposition(trend=y.copy(), cycle=np.zeros_like(y), lamb=lamb)
    w = solveh_banded(_hp_dual_banded(y.size - 2, lamb), second_difference(y), lower=False, check_finite=False)
    cycle = lamb * _apply_dt(w)
    return HPDecomposition(trend=y - cycle, cycle=cycle, lamb=lamb)


def hp_residual(y, decomposition: HPDecomposition) -> float:
    """Normwise relative residual of ``(I + lamb D^T D) x = y`` at the computed trend.

    Scaled by ``||A|| ||x|| + ||y||`` with ``||A|| <= 1 + 16 lamb``; dividing by
    ``||y||`` alone would charge the rounding of x times lamb to the solver.
    """
    y = np.asarray(y, dtype=float)
    x = decomposition.trend
    if x.size < 3:
        return float(np.linalg.norm(x - y) / max(np.linalg.norm(y), 1e-300))
    r = x + decomposition.lamb * _apply_dt(second_difference(x)) - y
    scale = (1.0 + 16.0 * decomposition.lamb) * np.linalg.norm(x) + np.linalg.norm(y)
    return float(np.linalg.norm(r) / max(scale, 1e-300))


def rolling_equicorr(X, window: int) -> np.ndarray:
    """Mean off-diagonal sample correlation over each trailing window.

    Returns an array of length ``n - window + 1``; windows containing a
    constant row are NaN.
    """
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    if p < 2:
        raise ValueError("equicorrelation needs at least two variables")
    if window < 3 or window > n:
        raise ValueError(f"window must lie in [3, {n}], got {window}")
    out = np.empty(n - window + 1)
    for t in range(out.size):
        try:
            C = corr_from_cov(cov_data(X[:, t : t + window]))
        except DegenerateRowError:
            out[t] = np.nan
            continue
        out[t] = (C.sum() - p) / (p * (p - 1))
    return out
