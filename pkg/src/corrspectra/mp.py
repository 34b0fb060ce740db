"""Marchenko-Pastur law and empirical spectral distributions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import Spectrum

ZERO_SNAP = 1e-9


@dataclass(frozen=True)
class MPParams:
    """Marchenko-Pastur law of index ``c`` (ratio p/n) and scale ``s``."""

    c: float
    s: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and self.s > 0 and np.isfinite(self.c) and np.isfinite(self.s)):
            raise ValueError(f"MP parameters must be positive, got c={self.c}, s={self.s}")

    @property
    def a_minus(self) -> float:
        return self.s * (1.0 - np.sqrt(self.c)) ** 2

    @property
    def a_plus(self) -> float:
        return self.s * (1.0 + np.sqrt(self.c)) ** 2

    @property
    def point_mass(self) -> float:
        return max(0.0, 1.0 - 1.0 / self.c)

    @property
    def continuous_mass(self) -> float:
        return 1.0 - self.point_mass


def mp_edges(c: float, s: float = 1.0) -> tuple[float, float]:
    params = MPParams(c, s)
    return params.a_minus, params.a_plus


def mp_density(x, params: MPParams):
    """Density of the absolutely continuous part; zero off ``[a-, a+]``."""
    x = np.asarray(x, dtype=float)
    lo, hi = params.a_minus, params.a_plus
    inside = (x >= lo) & (x <= hi) & (x > 0)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = np.sqrt(np.maximum((hi - xi) * (xi - lo), 0.0)) / (
        2.0 * np.pi * xi * params.c * params.s
    )
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _continuous_cdf(x: np.ndarray, params: MPParams, order: int = 96) -> np.ndarray:
    # x = mid - half cos(t) turns the square-root edges into a smooth integrand
    lo, hi = params.a_minus, params.a_plus
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    t_end = np.arccos(np.clip((mid - x) / half, -1.0, 1.0))
    nodes, weights = _gauss_legendre(order)
    t = 0.5 * t_end[:, None] * (nodes[None, :] + 1.0)
    xt = mid - half * np.cos(t)
    sin_t = np.sin(t)
    # sin^2 / x stays bounded at x -> 0 when a- = 0 (c = 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(xt > 0, half**2 * sin_t**2 / xt, half * (1 + np.cos(t)))
    integrand /= 2.0 * np.pi * params.c * params.s
    return 0.5 * t_end * (integrand @ weights)


def mp_cdf(x, params: MPParams):
    """CDF including the atom of mass ``max(0, 1 - 1/c)`` at the origin."""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    out = _continuous_cdf(flat, params)
    out = np.clip(out, 0.0, params.continuous_mass)
    out[flat >= params.a_plus] = params.continuous_mass
    out[flat <= params.a_minus] = 0.0
    out += params.point_mass * (flat >= 0)
    out = out.reshape(x.shape)
    return out if out.ndim else float(out)


def mp_curve(params: MPParams, num: int = 512):
    """Sample ``(x, density)`` on the support, for plotting."""
    x = np.linspace(params.a_minus, params.a_plus, num)
    return x, mp_density(x, params)


def mp_quantiles(params: MPParams, p: int) -> np.ndarray:
    """Midpoint quantiles ``F^{-1}((i - 1/2)/p)`` of the law, ascending."""
    from scipy.optimize import brentq

    u = (np.arange(p) + 0.5) / p
    out = np.zeros(p)
    pm = params.point_mass
    for i, ui in enumerate(u):
        if ui <= pm:
            continue
        out[i] = brentq(
            lambda x: mp_cdf(x, params) - ui, params.a_minus, params.a_plus, xtol=1e-14
        )
    return out


class ESD:
    """Uniform probability measure on a list of eigenvalues."""

    def __init__(self, values):
        vals = np.sort(np.asarray(values, dtype=float).ravel())
        if vals.size == 0:
            raise ValueError("empty spectrum")
        self.values = vals

    def __len__(self):
        return self.values.size

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.values, x, side="right") / self.values.size
        return out if out.ndim else float(out)

    def cdf_left(self, x):
        """Left limit ``F(x-)``."""
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.values, x, side="left") / self.values.size
        return out if out.ndim else float(out)


def esd_from_spectrum(spec) -> ESD:
    values = spec.values if isinstance(spec, Spectrum) else spec
    return ESD(values)


def ks_distance(esd: ESD, params: MPParams, grid: int = 10_000) -> float:
    """Kolmogorov distance ``sup_x |F_esd(x) - F_MP(x)|``.

    Both one-sided limits are compared at every jump of either CDF (the
    eigenvalues and the MP atom at 0), plus a uniform grid over the support.
    Eigenvalues within ``ZERO_SNAP`` (relative) of zero are treated as exact
    zeros so rank-deficient spectra line up with the atom.
    """
    vals = esd.values.copy()
    top = max(1.0, float(np.max(np.abs(vals))))
    vals[np.abs(vals) <= ZERO_SNAP * top] = 0.0
    snapped = ESD(vals)
    pts = np.unique(np.concatenate([vals, [0.0], np.linspace(params.a_minus, params.a_plus, grid)]))
    F_right = mp_cdf(pts, params)
    F_left = F_right - params.point_mass * (pts == 0.0)
    d_right = np.abs(snapped.cdf(pts) - F_right)
    d_left = np.abs(snapped.cdf_left(pts) - F_left)
    return float(max(d_right.max(), d_left.max()))
