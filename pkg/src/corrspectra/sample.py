"""Sample covariance and correlation matrices of a p x n data matrix.

Rows are variables and columns are observations throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix
from .models import FactorModelSpec

VARIANCE_FLOOR = 1e-300


class DegenerateRowError(ValueError):
    """A variable has zero sample variance, so its correlations are undefined."""

    def __init__(self, rows):
        self.rows = [int(r) for r in rows]
        super().__init__(
            f"zero-variance row(s) {self.rows}; correlation undefined (remove them or use clean)"
        )


@dataclass(frozen=True)
class SampleMatrices:
    cov: np.ndarray
    corr: np.ndarray
    D: np.ndarray
    centering: str


def cov_theoretical(X, mu) -> np.ndarray:
    """Covariance about the known mean: ``(X - M)(X - M)^T / n``."""
    X = as_matrix(X, "X")
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size != X.shape[0]:
        raise ValueError(f"mu has length {mu.size}, X has {X.shape[0]} rows")
    Y = X - mu[:, None]
    S = Y @ Y.T / X.shape[1]
    return 0.5 * (S + S.T)


def cov_data(X) -> np.ndarray:
    """Covariance about the row means with divisor ``n - 1``."""
    X = as_matrix(X, "X")
    n = X.shape[1]
    if n < 2:
        raise ValueError("data-centered covariance needs n >= 2 observations")
    Y = X - X.mean(axis=1, keepdims=True)
    S = Y @ Y.T / (n - 1)
    return 0.5 * (S + S.T)


def corr_from_cov(cov) -> np.ndarray:
    """``D^{-1/2} S D^{-1/2}`` with ``D = diag(S)``."""
    S = as_matrix(cov, "cov")
    if S.shape[0] != S.shape[1]:
        raise ValueError("covariance must be square")
    d = np.diag(S)
    bad = np.flatnonzero(d <= VARIANCE_FLOOR)
    if bad.size:
        raise DegenerateRowError(bad)
    s = 1.0 / np.sqrt(d)
    C = s[:, None] * S * s[None, :]
    C = 0.5 * (C + C.T)
    np.fill_diagonal(C, 1.0)
    return np.clip(C, -1.0, 1.0)


def sample_matrices(X, mu=None) -> SampleMatrices:
    """Covariance/correlation pair; theoretical centering when ``mu`` is given."""
    if mu is None:
        S = cov_data(X)
        centering = "data"
    else:
        S = cov_theoretical(X, mu)
        centering = "theoretical"
    return SampleMatrices(cov=S, corr=corr_from_cov(S), D=np.diag(S).copy(), centering=centering)


def zero_variance_rows(X) -> np.ndarray:
    X = as_matrix(X, "X")
    return np.flatnonzero(np.ptp(X, axis=1) == 0)


def clean_rows(X):
    """Drop constant rows; returns ``(X_clean, removed_indices)``."""
    X = as_matrix(X, "X")
    bad = zero_variance_rows(X)
    keep = np.setdiff1d(np.arange(X.shape[0]), bad)
    if keep.size == 0:
        raise ValueError("every row is constant")
    return X[keep], bad


def diag_ratio_deviation(X, spec: FactorModelSpec, centering: str = "data") -> float:
    """``max_i |D_ii / Delta_ii - 1|`` for sample variances D and population variances Delta."""
    X = as_matrix(X, "X")
    if X.shape[0] != spec.p:
        raise ValueError(f"X has {X.shape[0]} rows but the model has p = {spec.p}")
    if centering == "data":
        D = np.diag(cov_data(X))
    elif centering == "theoretical":
        Y = X - spec.mu[:, None]
        D = np.einsum("ij,ij->i", Y, Y) / X.shape[1]
    else:
        raise ValueError(f"unknown centering {centering!r}")
    Delta = spec.population_variances()
    return float(np.max(np.abs(D / Delta - 1.0)))


def rescaled_cov(S, Delta) -> np.ndarray:
    """``Delta^{-1/2} S Delta^{-1/2}`` for a vector of population variances."""
    s = 1.0 / np.sqrt(np.asarray(Delta, dtype=float))
    return s[:, None] * np.asarray(S) * s[None, :]
