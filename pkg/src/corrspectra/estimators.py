"""Component-retention rules on correlation spectra.

``bs_rule`` is the broken-stick rule, ``act_estimate`` adjusted correlation
thresholding (Fan, Guo & Zheng, JASA 2022), and ``bai_ng`` the Bai & Ng
(2002) information criterion.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .linalg import Spectrum, as_matrix, singular_values, sym_eigvals
from .sample import DegenerateRowError, cov_data, corr_from_cov

REPORT_SCHEMA_VERSION = 1


def broken_stick_thresholds(p: int) -> np.ndarray:
    """``t_i = sum_{j=i}^{p} 1/j`` for i = 1..p."""
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")
    p = int(p)
    # accumulate from the small end with Neumaier compensation; a plain cumsum
    # drifts by ~1e-9 in the total at p = 1e5
    out = np.empty(p)
    total = comp = 0.0
    for j in range(p, 0, -1):
        term = 1.0 / j
        t = total + term
        if abs(total) >= term:
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        out[j - 1] = total + comp
    return out


def holst_expected_lengths(p: int) -> np.ndarray:
    """Expected lengths, longest first, of the p pieces of a uniformly broken unit stick."""
    return broken_stick_thresholds(p) / p


def _values(eigs) -> np.ndarray:
    vals = eigs.values if isinstance(eigs, Spectrum) else np.asarray(eigs, dtype=float)
    if vals.size == 0:
        raise ValueError("empty spectrum")
    if vals.size > 1 and np.any(np.diff(vals) > 0):
        raise ValueError("eigenvalues must be sorted descending")
    return vals


def bs_rule(eigs, p: int | None = None) -> int:
    """Broken-stick count.

    Returns ``i - 1`` for the first i with ``lambda_i <= t_i``, or p when every
    eigenvalue beats its threshold.  A spectrum shorter than p (rank-deficient
    solver output) is padded with zeros.
    """
    vals = _values(eigs)
    p = vals.size if p is None else int(p)
    if vals.size > p:
        raise ValueError(f"spectrum has {vals.size} values but p = {p}")
    lam = np.zeros(p)
    lam[: vals.size] = vals
    below = np.flatnonzero(lam <= broken_stick_thresholds(p))
    return int(below[0]) if below.size else p


def act_threshold(p: int, n: int) -> float:
    return 1.0 + math.sqrt(p / (n - 1))


def act_adjusted_eigenvalues(eigs, p: int, n: int) -> np.ndarray:
    """Bias-corrected correlation eigenvalues for j = 1..p-1.

    With ``rho_j = (p - j)/(n - 1)`` and, for z = lambda_j,

        m_j(z)  = (1/(p-j)) [ sum_{l>j} 1/(lambda_l - z) + 1/((3 lambda_j + lambda_{j+1})/4 - z) ]
        mu_j(z) = -(1 - rho_j)/z + rho_j m_j(z)

    the adjusted value is ``-1/mu_j(lambda_j)``.  It never exceeds lambda_j;
    a tie ``lambda_j == lambda_{j+1}`` sends it to 0.  The last eigenvalue has
    no successor and is reported as 0.
    """
    vals = _values(eigs)
    if n < 2:
        raise ValueError("ACT needs n >= 2")
    lam = np.zeros(p)
    lam[: vals.size] = vals
    adj = np.zeros(p)
    for j in range(p - 1):
        z = lam[j]
        nxt = lam[j + 1]
        if z <= 0 or nxt >= z:
            continue
        rest = lam[j + 1 :]
        m = (np.sum(1.0 / (rest - z)) + 1.0 / ((3.0 * z + nxt) / 4.0 - z)) / (p - j - 1)
        rho = (p - j - 1) / (n - 1)
        mu = -(1.0 - rho) / z + rho * m
        adj[j] = -1.0 / mu
    return adj


def act_estimate(eigs, p: int, n: int, threshold_only: bool = False) -> int:
    """Number of adjusted correlation eigenvalues above ``1 + sqrt(p/(n-1))``.

    ``threshold_only`` instead counts raw eigenvalues above the squared
    threshold (the Marchenko-Pastur right edge at unit scale).
    """
    if n < 2:
        raise ValueError("ACT needs n >= 2")
    vals = _values(eigs)
    thr = act_threshold(p, n)
    if threshold_only:
        return int(np.sum(vals > thr**2))
    # adjusted <= raw, so only eigenvalues above the threshold can count
    candidates = int(np.sum(vals > thr))
    if candidates == 0:
        return 0
    adj = act_adjusted_eigenvalues(vals, p, n)
    return int(np.sum(adj > thr))


def _penalty_icp1(p, n):
    return (p + n) / (p * n) * math.log(p * n / (p + n))


def _penalty_icp2(p, n):
    return (p + n) / (p * n) * math.log(min(p, n))


def _penalty_icp3(p, n):
    return math.log(min(p, n)) / min(p, n)


BAI_NG_PENALTIES = {"icp1": _penalty_icp1, "icp2": _penalty_icp2, "icp3": _penalty_icp3}


def bai_ng_criterion(X, k_max: int, penalty: str = "icp2") -> np.ndarray:
    """``log V(k) + k g(p, n)`` for k = 0..k_max on row-standardized data."""
    X = as_matrix(X, "X")
    p, n = X.shape
    if int(k_max) != k_max or k_max < 0:
        raise ValueError("k_max must be a nonnegative integer")
    if k_max > min(p, n) / 2:
        raise ValueError(f"k_max = {k_max} exceeds min(p, n)/2 = {min(p, n) / 2}")
    if penalty not in BAI_NG_PENALTIES:
        raise ValueError(f"unknown penalty {penalty!r}; choose from {sorted(BAI_NG_PENALTIES)}")
    Y = X - X.mean(axis=1, keepdims=True)
    sd = Y.std(axis=1, ddof=1)
    if np.any(sd == 0):
        raise DegenerateRowError(np.flatnonzero(sd == 0))
    Y /= sd[:, None]
    s2 = singular_values(Y).values ** 2
    total = np.sum(s2)
    # residual sum of squares after removing the top k principal components
    tail = total - np.concatenate([[0.0], np.cumsum(s2[:k_max])])
    V = np.maximum(tail, 0.0) / (p * n)
    g = BAI_NG_PENALTIES[penalty](p, n)
    with np.errstate(divide="ignore"):
        return np.log(V) + np.arange(k_max + 1) * g


def bai_ng(X, k_max: int, penalty: str = "icp2") -> int:
    return int(np.argmin(bai_ng_criterion(X, k_max, penalty)))


@dataclass
class VarahReport:
    lower_bound: float
    lambda_r: float
    passes: bool


def varah_gap_diagnostic(L, b_p: float) -> VarahReport:
    """Column-angle lower bound on the smallest eigenvalue of ``L^T L``.

    The bound is ``min_k(1 - sum_{j != k} |cos(l_j, l_k)|) * min_k ||l_k||^2``
    over the columns ``l_k`` of L.  It is compared against ``b_p``.
    """
    L = as_matrix(L, "L")
    norms = np.linalg.norm(L, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"column {int(zero[0])} of L is zero")
    cos = (L.T @ L) / np.outer(norms, norms)
    off = np.sum(np.abs(cos), axis=1) - np.abs(np.diag(cos))
    bound = float(np.min(1.0 - off) * np.min(norms) ** 2)
    lam_r = float(sym_eigvals(L.T @ L).values[-1])
    scale = float(np.max(norms) ** 2)
    assert bound <= lam_r + 1e-9 * scale, "Varah bound exceeded lambda_r(L^T L)"
    return VarahReport(lower_bound=bound, lambda_r=lam_r, passes=bound > b_p)


@dataclass
class EstimatorReport:
    """One row of the estimator table."""

    p: int
    n: int
    ratio: float
    lambda1_over_p: float
    bs: int
    act: int
    bai_ng: int
    label: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = REPORT_SCHEMA_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorReport":
        if d.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        fields = {k: d[k] for k in ("p", "n", "ratio", "lambda1_over_p", "bs", "act", "bai_ng")}
        return cls(label=d.get("label", ""), **fields)


TABLE_COLUMNS = ("dataset", "n", "p/n", "lambda1(C)/p", "p", "BS", "ACT", "Bai-Ng")


def format_table(reports) -> str:
    """Aligned text table, one row per report, in the published column order."""
    rows = [TABLE_COLUMNS]
    for r in reports:
        rows.append(
            (
                r.label or "-",
                str(r.n),
                f"{r.ratio:.4f}",
                f"{r.lambda1_over_p:.3f}",
                str(r.p),
                str(r.bs),
                str(r.act),
                str(r.bai_ng),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for k, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def default_k_max(p: int, n: int) -> int:
    return max(0, min(8, min(p, n) // 2))


def estimate_all(
    X,
    k_max: int | None = None,
    penalty: str = "icp2",
    threshold_only: bool = False,
    label: str = "",
) -> EstimatorReport:
    """Run every estimator on a p x n data matrix (data-centered correlation)."""
    X = as_matrix(X, "X")
    p, n = X.shape
    C = corr_from_cov(cov_data(X))
    eigs = sym_eigvals(C)
    k_max = default_k_max(p, n) if k_max is None else k_max
    return EstimatorReport(
        p=p,
        n=n,
        ratio=p / n,
        lambda1_over_p=float(eigs.values[0] / p),
        bs=bs_rule(eigs, p),
        act=act_estimate(eigs, p, n, threshold_only=threshold_only),
        bai_ng=bai_ng(X, k_max, penalty),
        label=label,
    )
