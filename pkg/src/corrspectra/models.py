"""K-factor model families and deterministic data generation.

A K-factor model draws ``X = M + L F + Lambda Psi`` with a p x K loading
matrix ``L``, a noise coefficient matrix ``Lambda`` (stored as its diagonal
when diagonal), and i.i.d. standardized factor and noise arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import as_matrix, sym_eigvals

FAMILIES = ("generic", "enp", "clfm", "acfm", "brokenstick")


@dataclass(frozen=True)
class Distribution:
    """Standardized (mean 0, variance 1) scalar law."""

    name: str = "standard_normal"
    df: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("standard_normal", "rademacher", "student_t"):
            raise ValueError(f"unknown distribution {self.name!r}")
        if self.name == "student_t":
            # df > 4 keeps the fourth moment finite
            if self.df is None or not self.df > 4:
                raise ValueError("student_t requires df > 4")
        elif self.df is not None:
            raise ValueError(f"{self.name} takes no df parameter")

    @classmethod
    def parse(cls, text: str) -> "Distribution":
        """Parse ``standard_normal``, ``rademacher`` or ``student_t(df)``."""
        text = text.strip()
        if text.startswith("student_t"):
            inner = text[len("student_t"):].strip()
            if not (inner.startswith("(") and inner.endswith(")")):
                raise ValueError(f"expected student_t(df), got {text!r}")
            return cls("student_t", float(inner[1:-1]))
        return cls(text)

    def __str__(self):
        if self.name == "student_t":
            return f"student_t({self.df:g})"
        return self.name

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.name == "standard_normal":
            return rng.standard_normal(shape)
        if self.name == "rademacher":
            return rng.integers(0, 2, size=shape) * 2.0 - 1.0
        return rng.standard_t(self.df, size=shape) / np.sqrt(self.df / (self.df - 2.0))


STANDARD_NORMAL = Distribution()


@dataclass(frozen=True)
class FactorModelSpec:
    """Complete description of a K-factor model.

    ``Lambda`` is either a length-p vector (diagonal noise coefficients) or a
    full p x p matrix.  ``params`` records the constructor arguments so the
    spec can be written back to a config file.
    """

    mu: np.ndarray
    L: np.ndarray
    Lambda: np.ndarray
    factor_dist: Distribution = STANDARD_NORMAL
    noise_dist: Distribution = STANDARD_NORMAL
    family: str = "generic"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        p = mu.size
        if mu.ndim != 1 or p < 1:
            raise ValueError("mu must be a nonempty vector")
        L = np.asarray(self.L, dtype=float)
        if L.ndim == 1:
            L = L.reshape(-1, 1)
        if L.size == 0:
            L = np.zeros((p, 0))
        if L.ndim != 2 or L.shape[0] != p:
            raise ValueError(f"L must have {p} rows, got shape {L.shape}")
        Lam = np.asarray(self.Lambda, dtype=float)
        if Lam.ndim == 1:
            if Lam.size != p:
                raise ValueError(f"diagonal Lambda must have length {p}")
        elif Lam.shape != (p, p):
            raise ValueError(f"Lambda must be {p} x {p}, got {Lam.shape}")
        for name, arr in (("mu", mu), ("L", L), ("Lambda", Lam)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        noise_sq = Lam**2 if Lam.ndim == 1 else np.sum(Lam**2, axis=1)
        row_norms = np.sqrt(np.sum(L**2, axis=1) + noise_sq)
        zero = np.flatnonzero(row_norms == 0)
        if zero.size:
            raise ValueError(f"row {int(zero[0])} of [L Lambda] is zero; variable is degenerate")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        for name, arr in (("mu", mu), ("L", L), ("Lambda", Lam)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @staticmethod
    def gamma_from(L: np.ndarray, Lam: np.ndarray) -> np.ndarray:
        lam = np.diag(Lam) if Lam.ndim == 1 else Lam
        return np.hstack([L, lam])

    @property
    def p(self) -> int:
        return self.mu.size

    @property
    def K(self) -> int:
        return self.L.shape[1]

    @property
    def diagonal_noise(self) -> bool:
        return self.Lambda.ndim == 1

    @property
    def Gamma(self) -> np.ndarray:
        return self.gamma_from(self.L, self.Lambda)

    def noise_matrix(self) -> np.ndarray:
        return np.diag(self.Lambda) if self.diagonal_noise else self.Lambda.copy()

    def population_variances(self) -> np.ndarray:
        """Diagonal of the population covariance (squared row norms of Gamma)."""
        if self.diagonal_noise:
            return np.sum(self.L**2, axis=1) + self.Lambda**2
        return np.sum(self.L**2, axis=1) + np.sum(self.Lambda**2, axis=1)


@dataclass(frozen=True)
class ModelDiagnostics:
    rho: Optional[float]
    rank_L: int
    nonzero_eigs_LtL: np.ndarray
    row_norm_min: float
    row_norm_max: float


def _validate_count(name: str, value, minimum: int) -> int:
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _positive(name: str, value) -> float:
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


def build_enp(p: int, L: float, sigma: float) -> FactorModelSpec:
    """Equi-correlated normal population: constant loading ``L``, noise ``sigma I``."""
    p = _validate_count("p", p, 2)
    L = _positive("L", L)
    sigma = _positive("sigma", sigma)
    return FactorModelSpec(
        mu=np.zeros(p),
        L=np.full((p, 1), L),
        Lambda=np.full(p, sigma),
        family="enp",
        params={"p": p, "L": L, "sigma": sigma},
    )


def enp_rho(L: float, sigma: float) -> float:
    return L**2 / (L**2 + sigma**2)


def _fixed_rotation(r: int) -> np.ndarray:
    # deterministic orthogonal matrix, independent of any user seed
    rng = np.random.default_rng(0x5EED0F)
    Q, R = np.linalg.qr(rng.standard_normal((r, r)))
    return Q * np.sign(np.diag(R))


def build_clfm(
    p: int,
    K: int,
    r: int,
    L: float,
    sigma: float,
    factor_dist: Distribution = STANDARD_NORMAL,
    noise_dist: Distribution = STANDARD_NORMAL,
    rotate: bool = False,
) -> FactorModelSpec:
    """Constant-length loading model with a cyclic block design.

    Row i loads only on factor ``i mod r`` with weight ``L`` (zero-padded to K
    columns), so every row has norm ``L``, rank(L) = r and the nonzero
    eigenvalues of L^T L are ``L^2 * ceil(p/r)`` or ``L^2 * floor(p/r)``.
    ``rotate=True`` mixes the first r columns by a fixed orthogonal matrix,
    which preserves row norms and the Gram spectrum.
    """
    p = _validate_count("p", p, 1)
    K = _validate_count("K", K, 1)
    r = _validate_count("r", r, 1)
    if r > K:
        raise ValueError(f"r = {r} exceeds K = {K}")
    if r > p:
        raise ValueError(f"r = {r} exceeds p = {p}")
    L = _positive("L", L)
    sigma = _positive("sigma", sigma)
    load = np.zeros((p, K))
    load[np.arange(p), np.arange(p) % r] = L
    if rotate:
        load[:, :r] = load[:, :r] @ _fixed_rotation(r)
    return FactorModelSpec(
        mu=np.zeros(p),
        L=load,
        Lambda=np.full(p, sigma),
        factor_dist=factor_dist,
        noise_dist=noise_dist,
        family="clfm",
        params={"p": p, "K": K, "r": r, "L": L, "sigma": sigma, "rotate": rotate},
    )


def build_acfm(
    p: int,
    K: int,
    ell,
    sigma: float,
    drift_scale: float = 0.0,
    factor_dist: Distribution = STANDARD_NORMAL,
    noise_dist: Distribution = STANDARD_NORMAL,
) -> FactorModelSpec:
    """Asymptotically convergent loading model.

    Row k (1-based) of L is ``ell + drift_scale / k * e_{(k-1) mod K}`` and the
    k-th noise coefficient is ``sigma * (1 + drift_scale / k)``, so rows
    converge to ``ell`` and coefficients to ``sigma`` with squared row drift
    summing to at most ``drift_scale**2 * pi**2 / 6``.
    """
    p = _validate_count("p", p, 1)
    K = _validate_count("K", K, 1)
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    if ell.shape != (K,):
        raise ValueError(f"ell must have length K = {K}")
    sigma = _positive("sigma", sigma)
    drift_scale = float(drift_scale)
    if drift_scale < 0:
        raise ValueError("drift_scale must be nonnegative")
    k = np.arange(1, p + 1)
    load = np.tile(ell, (p, 1))
    load[k - 1, (k - 1) % K] += drift_scale / k
    return FactorModelSpec(
        mu=np.zeros(p),
        L=load,
        Lambda=sigma * (1.0 + drift_scale / k),
        factor_dist=factor_dist,
        noise_dist=noise_dist,
        family="acfm",
        params={"p": p, "K": K, "ell": ell.tolist(), "sigma": sigma, "drift_scale": drift_scale},
    )


def acfm_drift(spec: FactorModelSpec, ell) -> float:
    """Sum over rows of the squared distance between the loading row and ``ell``."""
    return float(np.sum((spec.L - np.asarray(ell, dtype=float)) ** 2))


def random_partition_lengths(rng: np.random.Generator, rows: int, K: int) -> np.ndarray:
    """Descending piece lengths of [0, 1] cut by K - 1 uniform separators, one row per draw."""
    cuts = np.sort(rng.random((rows, K - 1)), axis=1)
    edges = np.hstack([np.zeros((rows, 1)), cuts, np.ones((rows, 1))])
    pieces = np.diff(edges, axis=1)
    return -np.sort(-pieces, axis=1)


def build_brokenstick_loading(
    p: int, K: int, seed: int, sigma: float = 1.0
) -> FactorModelSpec:
    """Random loading ``L_ik = B_ik sqrt(y_ik)`` with Rademacher signs.

    ``y_i`` holds the descending piece lengths of an independent uniform
    partition of [0, 1] into K pieces, so every row has unit norm.
    """
    p = _validate_count("p", p, 1)
    K = _validate_count("K", K, 1)
    sigma = _positive("sigma", sigma)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB5]))
    y = random_partition_lengths(rng, p, K)
    signs = rng.integers(0, 2, size=(p, K)) * 2.0 - 1.0
    return FactorModelSpec(
        mu=np.zeros(p),
        L=signs * np.sqrt(y),
        Lambda=np.full(p, sigma),
        family="brokenstick",
        params={"p": p, "K": K, "seed": int(seed), "sigma": sigma},
    )


def build_noise(p: int, sigma=1.0, noise_dist: Distribution = STANDARD_NORMAL) -> FactorModelSpec:
    """Factor-free model ``X = M + diag(sigma) Psi``."""
    p = _validate_count("p", p, 1)
    lam = np.broadcast_to(np.asarray(sigma, dtype=float), (p,)).copy()
    return FactorModelSpec(
        mu=np.zeros(p),
        L=np.zeros((p, 0)),
        Lambda=lam,
        noise_dist=noise_dist,
        family="generic",
        params={"p": p, "sigma": float(lam[0]) if np.all(lam == lam[0]) else lam.tolist()},
    )


def replicate_rng(master_seed: int, replicate: int) -> np.random.Generator:
    """Independent generator for replicate ``replicate`` of a run."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(replicate)]))


def sample_dataset(spec: FactorModelSpec, n: int, seed) -> np.ndarray:
    """Draw a p x n data matrix ``X = M + L F + Lambda Psi``.

    ``seed`` is an integer or a ``numpy.random.Generator``; an integer seed
    makes the result a pure function of ``(spec, n, seed)``.
    """
    n = _validate_count("n", n, 2)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(int(seed))
    F = spec.factor_dist.sample(rng, (spec.K, n))
    Psi = spec.noise_dist.sample(rng, (spec.p, n))
    if spec.diagonal_noise:
        X = spec.Lambda[:, None] * Psi
    else:
        X = spec.Lambda @ Psi
    if spec.K:
        X += spec.L @ F
    X += spec.mu[:, None]
    return X


def population_cov(spec: FactorModelSpec) -> np.ndarray:
    """``Sigma = L L^T + Lambda Lambda^T``."""
    lam = spec.noise_matrix()
    return spec.L @ spec.L.T + lam @ lam.T


def population_corr(spec: FactorModelSpec) -> np.ndarray:
    Sigma = population_cov(spec)
    d = np.diag(Sigma)
    if np.any(d <= 0):
        raise ValueError(f"zero population variance in row {int(np.argmin(d))}")
    s = 1.0 / np.sqrt(d)
    R = s[:, None] * Sigma * s[None, :]
    np.fill_diagonal(R, 1.0)
    return 0.5 * (R + R.T)


def diagnostics(spec: FactorModelSpec, tol: float = 1e-10) -> ModelDiagnostics:
    L = spec.L
    norms = np.linalg.norm(L, axis=1) if spec.K else np.zeros(spec.p)
    if spec.K:
        eig = sym_eigvals(L.T @ L).values
        top = eig[0] if eig.size else 0.0
        nz = eig[eig > tol * max(top, 1.0)]
    else:
        nz = np.zeros(0)
    rho = None
    if spec.family in ("enp", "clfm"):
        Lsq = spec.params["L"] ** 2
        rho = Lsq / (Lsq + spec.params["sigma"] ** 2)
    return ModelDiagnostics(
        rho=rho,
        rank_L=int(nz.size),
        nonzero_eigs_LtL=nz,
        row_norm_min=float(norms.min()),
        row_norm_max=float(norms.max()),
    )


def build_generic(mu, L, Lambda, factor_dist=STANDARD_NORMAL, noise_dist=STANDARD_NORMAL):
    L = np.asarray(L, dtype=float)
    if L.size:
        as_matrix(L.reshape(len(mu), -1), "L")
    return FactorModelSpec(mu=mu, L=L, Lambda=Lambda, factor_dist=factor_dist, noise_dist=noise_dist)
