"""Monte Carlo checks of the limiting eigenvalue locations.

A job names a statistic family, a model template, a grid of (p, n) and a
replicate count.  Replicate ``r`` at grid point ``g`` draws its data from a
generator seeded by ``(master_seed, g, r)``, so results do not depend on the
number of worker threads or on scheduling order.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimators import bs_rule
from .io import ModelConfig
from .linalg import singular_values, sym_eigvals
from .models import FactorModelSpec, sample_dataset
from .mp import MPParams, esd_from_spectrum, ks_distance
from .sample import corr_from_cov, cov_data, cov_theoretical, diag_ratio_deviation

RESULT_SCHEMA_VERSION = 1
THREADS_ENV = "CORRSPECTRA_THREADS"

THEOREMS = (
    "spike_ratio",
    "bounded_edge",
    "bs_clfm",
    "bs_acfm",
    "acfm_spike",
    "mp_bulk",
    "edge_law",
    "diag_concentration",
)

# kind -> default tolerance
#   point: relative gap of the median to the limit
#   upper: median must not exceed the tolerance
#   count: fraction of replicates hitting the limit exactly must reach the tolerance
DEFAULT_TOLERANCE = {"point": 0.05, "upper": 0.05, "count": 0.95}
_DIAG_TOLERANCE = 0.1


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return min(8, os.cpu_count() or 1)


@dataclass
class VerifyJob:
    theorem: str
    model: ModelConfig
    grid: list
    replicates: int = 20
    master_seed: int = 0
    tolerance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ValueError(f"unknown theorem {self.theorem!r}; expected one of {THEOREMS}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.grid:
            raise ValueError("empty grid")
        grid = []
        for p, n in self.grid:
            if int(p) < 1 or int(n) < 2:
                raise ValueError(f"invalid grid point ({p}, {n}); need p >= 1 and n >= 2")
            grid.append((int(p), int(n)))
        self.grid = grid

    def tolerance_for(self, kind: str) -> float:
        if kind in self.tolerance:
            return float(self.tolerance[kind])
        if self.theorem == "diag_concentration":
            return _DIAG_TOLERANCE
        return DEFAULT_TOLERANCE[kind]

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "model": self.model.to_dict(),
            "grid": [list(g) for g in self.grid],
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "tolerance": dict(self.tolerance),
        }


@dataclass
class StatSummary:
    name: str
    kind: str
    limit: float
    values: list
    median: float
    q1: float
    q3: float
    max: float
    abs_gap: float
    rel_gap: float
    tolerance: float
    passed: bool
    hit_rate: float | None = None


@dataclass
class GridResult:
    p: int
    n: int
    c: float
    stats: list


@dataclass
class VerifyResult:
    job: dict
    points: list
    passed: bool

    def to_dict(self) -> dict:
        return {"schema_version": RESULT_SCHEMA_VERSION, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"theorem: {self.job['theorem']}  replicates: {self.job['replicates']}"]
        head = f"{'p':>6} {'n':>7} {'statistic':<22} {'median':>11} {'IQR':>11} {'limit':>11} {'rel gap':>9}  result"
        lines += [head, "-" * len(head)]
        for g in self.points:
            for s in g.stats:
                iqr = s.q3 - s.q1
                extra = f" hit={s.hit_rate:.2f}" if s.hit_rate is not None else ""
                lines.append(
                    f"{g.p:>6} {g.n:>7} {s.name:<22} {s.median:>11.5g} {iqr:>11.4g} "
                    f"{s.limit:>11.5g} {s.rel_gap:>9.4f}  {'PASS' if s.passed else 'FAIL'}{extra}"
                )
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _loading_constants(spec: FactorModelSpec):
    q = spec.params
    if spec.family not in ("enp", "clfm"):
        raise ValueError(f"this statistic needs an enp or clfm model, got {spec.family}")
    r = 1 if spec.family == "enp" else q["r"]
    return q["L"], q["sigma"], r


def _noise_sigma(spec: FactorModelSpec) -> float:
    lam = spec.Lambda if spec.diagonal_noise else None
    if lam is None or not np.allclose(lam, lam[0]):
        raise ValueError("mp_bulk needs a constant diagonal noise coefficient")
    return float(lam[0])


def _limits(theorem: str, spec: FactorModelSpec, p: int, n: int):
    """Statistic names with their (kind, limit)."""
    c = p / n
    if theorem == "spike_ratio":
        L, sigma, r = _loading_constants(spec)
        return {f"lambda{k}(C)/lambda{k}(LL')": ("point", 1.0 / (L**2 + sigma**2)) for k in range(1, r + 1)}
    if theorem == "bounded_edge":
        L, sigma, r = _loading_constants(spec)
        return {f"lambda{r + 1}(C)": ("point", sigma**2 * (1 + math.sqrt(c)) ** 2 / (L**2 + sigma**2))}
    if theorem == "bs_clfm":
        _, _, r = _loading_constants(spec)
        return {"BS(C)": ("count", float(r)), "BS(C~)": ("count", float(r))}
    if theorem == "bs_acfm":
        ell = np.asarray(spec.params["ell"], dtype=float)
        target = float(np.any(ell != 0))
        return {"BS(C)": ("count", target), "BS(C~)": ("count", target)}
    if theorem == "acfm_spike":
        ell = np.asarray(spec.params["ell"], dtype=float)
        e2 = float(ell @ ell)
        return {"lambda1(C)/p": ("point", e2 / (e2 + spec.params["sigma"] ** 2))}
    if theorem == "mp_bulk":
        return {"KS(ESD(S~), MP)": ("upper", 0.0)}
    if theorem == "edge_law":
        return {
            "lambda1(ZZ'/n)": ("point", (1 + math.sqrt(c)) ** 2),
            "s1((Z-Zbar)/sqrt(n))": ("point", 1 + math.sqrt(c)),
        }
    if theorem == "diag_concentration":
        return {"max|D/Delta-1|": ("upper", 0.0)}
    raise ValueError(theorem)


def replicate_statistics(theorem: str, spec: FactorModelSpec, n: int, rng) -> dict:
    """Evaluate the theorem's statistics on one simulated dataset."""
    p = spec.p
    if theorem == "edge_law":
        Z = spec.noise_dist.sample(rng, (p, n))
        lam1 = sym_eigvals(Z @ Z.T / n).values[0]
        s1 = singular_values((Z - Z.mean(axis=1, keepdims=True)) / math.sqrt(n)).values[0]
        return {"lambda1(ZZ'/n)": lam1, "s1((Z-Zbar)/sqrt(n))": s1}
    X = sample_dataset(spec, n, rng)
    if theorem == "diag_concentration":
        return {"max|D/Delta-1|": diag_ratio_deviation(X, spec, "data")}
    if theorem == "mp_bulk":
        St = cov_theoretical(X, spec.mu)
        params = MPParams(p / n, _noise_sigma(spec) ** 2)
        return {"KS(ESD(S~), MP)": ks_distance(esd_from_spectrum(sym_eigvals(St)), params)}
    C = corr_from_cov(cov_data(X))
    eig = sym_eigvals(C).values
    if theorem == "spike_ratio":
        lam_LL = sym_eigvals(spec.L.T @ spec.L).values
        _, _, r = _loading_constants(spec)
        return {f"lambda{k}(C)/lambda{k}(LL')": eig[k - 1] / lam_LL[k - 1] for k in range(1, r + 1)}
    if theorem == "bounded_edge":
        _, _, r = _loading_constants(spec)
        return {f"lambda{r + 1}(C)": eig[r]}
    if theorem == "acfm_spike":
        return {"lambda1(C)/p": eig[0] / p}
    if theorem in ("bs_clfm", "bs_acfm"):
        Ct = corr_from_cov(cov_theoretical(X, spec.mu))
        return {"BS(C)": bs_rule(eig, p), "BS(C~)": bs_rule(sym_eigvals(Ct), p)}
    raise ValueError(theorem)


def _task(args):
    theorem, model, p, n, seed_key = args
    spec = model.build(p)
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    return replicate_statistics(theorem, spec, n, rng)


def _summarize(name, kind, limit, values, tol) -> StatSummary:
    v = np.asarray(values, dtype=float)
    med = float(np.median(v))
    q1, q3 = (float(x) for x in np.percentile(v, [25, 75]))
    abs_gap = abs(med - limit)
    rel_gap = abs_gap / abs(limit) if limit != 0 else abs_gap
    hit = None
    if kind == "point":
        passed = rel_gap <= tol
    elif kind == "upper":
        passed = med <= tol
    else:
        hit = float(np.mean(v == limit))
        passed = hit >= tol
    return StatSummary(
        name=name, kind=kind, limit=float(limit), values=[float(x) for x in v],
        median=med, q1=q1, q3=q3, max=float(v.max()), abs_gap=abs_gap, rel_gap=rel_gap,
        tolerance=tol, passed=bool(passed), hit_rate=hit,
    )


def run_verify(job: VerifyJob, threads: int | None = None) -> VerifyResult:
    threads = default_threads() if threads is None else max(1, int(threads))
    tasks = []
    for g, (p, n) in enumerate(job.grid):
        for r in range(job.replicates):
            tasks.append((job.theorem, job.model, p, n, [int(job.master_seed), g, r]))
    if threads == 1:
        outputs = [_task(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(_task, tasks))
    points = []
    all_ok = True
    for g, (p, n) in enumerate(job.grid):
        spec = job.model.build(p)
        chunk = outputs[g * job.replicates : (g + 1) * job.replicates]
        stats = []
        for name, (kind, limit) in _limits(job.theorem, spec, p, n).items():
            s = _summarize(name, kind, limit, [o[name] for o in chunk], job.tolerance_for(kind))
            all_ok &= s.passed
            stats.append(s)
        points.append(GridResult(p=p, n=n, c=p / n, stats=stats))
    return VerifyResult(job=job.to_dict(), points=points, passed=bool(all_ok))


def parse_grid(text: str) -> list:
    """``"600x2400, 300x1200"`` -> ``[(600, 2400), (300, 1200)]``."""
    grid = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            p, n = item.lower().split("x")
            grid.append((int(p), int(n)))
        except ValueError:
            raise ValueError(f"bad grid point {item!r}; expected PxN") from None
    return grid


def job_from_config(model: ModelConfig, section: dict) -> VerifyJob:
    """Build a job from a parsed ``[verify]`` config section."""
    tol = {}
    for kind in ("point", "upper", "count"):
        key = f"tolerance_{kind}"
        if key in section:
            tol[kind] = float(section[key])
    if "tolerance" in section:
        tol.setdefault("point", float(section["tolerance"]))
        tol.setdefault("upper", float(section["tolerance"]))
    return VerifyJob(
        theorem=section["theorem"].strip(),
        model=model,
        grid=parse_grid(section["grid"]),
        replicates=int(section.get("replicates", 20)),
        master_seed=int(section.get("master_seed", 0)),
        tolerance=tol,
    )
