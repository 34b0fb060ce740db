"""Dense spectral routines and executable singular-value inequalities.

Eigen/singular decompositions are delegated to LAPACK through numpy; this
module owns validation, ordering and the inequality checks built on top.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SYMMETRY_RTOL = 1e-10
INEQUALITY_SLACK = 1e-9


class SpectrumKind(str, Enum):
    EIGENVALUES_SYMMETRIC = "eigenvalues_symmetric"
    SINGULAR_VALUES = "singular_values"


@dataclass(frozen=True)
class Spectrum:
    """Descending eigenvalues or singular values of a matrix."""

    values: np.ndarray
    kind: SpectrumKind
    source_dims: tuple[int, int]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("spectrum values must be one-dimensional")
        if vals.size > 1 and np.any(np.diff(vals) > 0):
            raise ValueError("spectrum values must be sorted descending")
        if self.kind == SpectrumKind.SINGULAR_VALUES and np.any(vals < 0):
            raise ValueError("singular values must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def __getitem__(self, idx):
        return self.values[idx]

    def padded(self, length: int) -> np.ndarray:
        """Values extended with trailing zeros (or truncated) to ``length``."""
        out = np.zeros(length)
        k = min(length, self.values.size)
        out[:k] = self.values[:k]
        return out


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Validate ``A`` as a finite, nonempty real 2-D array."""
    if np.iscomplexobj(A):
        raise ValueError(f"{name} is complex; only real matrices are supported")
    M = np.asarray(A, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got ndim={M.ndim}")
    if M.shape[0] == 0 or M.shape[1] == 0:
        raise ValueError(f"{name} has an empty dimension {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _descending(values: np.ndarray) -> np.ndarray:
    # stable sort keeps tied values in their original relative order
    order = np.argsort(-values, kind="stable")
    return values[order], order


def symmetrize(M, name: str = "matrix") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    asym = np.max(np.abs(M - M.T))
    if asym > SYMMETRY_RTOL * (1.0 + np.max(np.abs(M))):
        raise ValueError(f"{name} is not symmetric (max |M - M^T| = {asym:.3e})")
    return 0.5 * (M + M.T)


def sym_eigvals(M, vectors: bool = False):
    """Eigenvalues of a real symmetric matrix, largest first.

    With ``vectors=True`` returns ``(spectrum, Q)`` where the columns of ``Q``
    are the matching orthonormal eigenvectors.
    """
    S = symmetrize(M)
    if vectors:
        w, Q = np.linalg.eigh(S)
        w, order = _descending(w)
        spec = Spectrum(w, SpectrumKind.EIGENVALUES_SYMMETRIC, S.shape)
        return spec, Q[:, order]
    w, _ = _descending(np.linalg.eigvalsh(S))
    return Spectrum(w, SpectrumKind.EIGENVALUES_SYMMETRIC, S.shape)


def singular_values(A) -> Spectrum:
    A = as_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    s, _ = _descending(s)
    return Spectrum(s, SpectrumKind.SINGULAR_VALUES, A.shape)


def spectral_norm(A) -> float:
    return float(singular_values(A).values[0])


@dataclass
class InequalityReport:
    """Outcome of checking a family of indexed inequalities.

    Each violation is a tuple ``(index, lhs, middle, rhs)`` where the checked
    relation was ``lhs <= middle <= rhs`` (one-sided relations repeat a bound).
    """

    name: str
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _le(a: float, b: float, scale: float) -> bool:
    return a <= b + INEQUALITY_SLACK * max(scale, 1e-300)


def check_mult_perturbation(A, B, lower_factor: str = "inner") -> InequalityReport:
    """Check the two-sided multiplicative bound on singular values of ``AB``.

    For ``A`` (m x n) and ``B`` (n x p) and every i up to max(m, n, p)::

        s_k(A) s_i(B) <= s_i(AB) <= s_1(A) s_i(B)

    Singular values past the rank are zero.  ``lower_factor="inner"`` uses
    k = n, which holds for every shape.  ``lower_factor="rows"`` uses k = m;
    that form agrees with the inner one for square ``A`` but fails for
    wide ``A`` (m < n), e.g. A = [1, 0], B = [0, 1]^T.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    m, n = A.shape
    if B.shape[0] != n:
        raise ValueError(f"inner dimensions disagree: A is {A.shape}, B is {B.shape}")
    p = B.shape[1]
    if lower_factor not in ("inner", "rows"):
        raise ValueError(f"unknown lower_factor {lower_factor!r}")
    N = max(m, n, p)
    sA = singular_values(A).padded(N)
    sB = singular_values(B).padded(N)
    sAB = singular_values(A @ B).padded(N)
    low = sA[(n if lower_factor == "inner" else m) - 1]
    report = InequalityReport("multiplicative")
    for i in range(N):
        lo, mid, hi = low * sB[i], sAB[i], sA[0] * sB[i]
        scale = max(abs(lo), abs(mid), abs(hi), sA[0] * sB[0])
        report.checked += 1
        if not (_le(lo, mid, scale) and _le(mid, hi, scale)):
            report.violations.append((i + 1, lo, mid, hi))
    return report


def check_additive_perturbation(A, B) -> InequalityReport:
    """Check ``|s_i(A + B) - s_i(A)| <= s_1(B)`` for every index."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    N = min(A.shape)
    sA = singular_values(A).padded(N)
    sAB = singular_values(A + B).padded(N)
    sB1 = spectral_norm(B)
    report = InequalityReport("additive")
    for i in range(N):
        gap = abs(sAB[i] - sA[i])
        report.checked += 1
        if not _le(gap, sB1, max(sAB[0], sA[0], sB1)):
            report.violations.append((i + 1, 0.0, gap, sB1))
    return report


def check_weyl(N, H) -> InequalityReport:
    """Check ``lambda_{i+j-1}(N + H) <= lambda_i(N) + lambda_j(H)`` for all valid i, j."""
    lN = sym_eigvals(N).values
    lH = sym_eigvals(H).values
    if lN.size != lH.size:
        raise ValueError("N and H must have the same order")
    lM = sym_eigvals(symmetrize(N) + symmetrize(H)).values
    scale = max(np.max(np.abs(lN)), np.max(np.abs(lH)), np.max(np.abs(lM)))
    p = lN.size
    report = InequalityReport("weyl")
    for i in range(p):
        for j in range(p - i):
            report.checked += 1
            if not _le(lM[i + j], lN[i] + lH[j], scale):
                report.violations.append((i + j + 1, lM[i + j], lM[i + j], lN[i] + lH[j]))
    return report
