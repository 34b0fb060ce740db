"""CSV and config-file plumbing.

Data CSVs hold observations as rows and variables as columns, with a header
row; in memory the library works with the transposed p x n layout.

Model config files are INI-style key/value files with a ``[model]`` section::

    [model]
    family = clfm          ; enp | clfm | acfm | noise | brokenstick
    p = 300
    K = 3
    r = 3
    L = 1.0
    sigma = 1.0
    factor_dist = standard_normal   ; or rademacher, student_t(8)
    noise_dist = standard_normal

    [sample]
    n = 1200

ACFM uses ``ell = 1.0, 1.0`` and ``drift_scale``; ``brokenstick`` uses
``K``, ``seed`` and ``sigma``; ``noise`` uses ``sigma``.
"""

from __future__ import annotations

import configparser
import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import (
    Distribution,
    FactorModelSpec,
    build_acfm,
    build_brokenstick_loading,
    build_clfm,
    build_enp,
    build_noise,
)

MODEL_FAMILIES = ("enp", "clfm", "acfm", "noise", "brokenstick")

_REQUIRED = {
    "enp": ("L", "sigma"),
    "clfm": ("K", "r", "L", "sigma"),
    "acfm": ("K", "ell", "sigma"),
    "noise": ("sigma",),
    "brokenstick": ("K", "seed"),
}


@dataclass
class ModelConfig:
    """Model family plus parameters, with the dimension left free."""

    family: str
    params: dict = field(default_factory=dict)
    p: int | None = None

    def __post_init__(self):
        if self.family not in MODEL_FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}; expected one of {MODEL_FAMILIES}")
        missing = [k for k in _REQUIRED[self.family] if k not in self.params]
        if missing:
            raise ValueError(f"{self.family} config is missing {', '.join(missing)}")

    def _dist(self, key):
        return Distribution.parse(str(self.params.get(key, "standard_normal")))

    def build(self, p: int | None = None) -> FactorModelSpec:
        p = self.p if p is None else p
        if p is None:
            raise ValueError("model dimension p is not set")
        q = self.params
        if self.family == "enp":
            return build_enp(p, q["L"], q["sigma"])
        if self.family == "clfm":
            return build_clfm(
                p, int(q["K"]), int(q["r"]), q["L"], q["sigma"],
                factor_dist=self._dist("factor_dist"),
                noise_dist=self._dist("noise_dist"),
                rotate=bool(q.get("rotate", False)),
            )
        if self.family == "acfm":
            return build_acfm(
                p, int(q["K"]), q["ell"], q["sigma"], q.get("drift_scale", 0.0),
                factor_dist=self._dist("factor_dist"),
                noise_dist=self._dist("noise_dist"),
            )
        if self.family == "noise":
            return build_noise(p, q["sigma"], noise_dist=self._dist("noise_dist"))
        return build_brokenstick_loading(p, int(q["K"]), int(q["seed"]), q.get("sigma", 1.0))

    def to_dict(self) -> dict:
        d = {"family": self.family, **self.params}
        if self.p is not None:
            d["p"] = self.p
        return d


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in ("factor_dist", "noise_dist", "family"):
        return raw
    if key == "ell":
        return [float(v) for v in raw.replace(",", " ").split()]
    if key == "rotate":
        return raw.lower() in ("1", "true", "yes", "on")
    if key in ("p", "K", "r", "seed", "n"):
        return int(raw)
    return float(raw)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys are case-sensitive (K vs k)
    return cp


def parse_model_config(text: str) -> tuple[ModelConfig, dict]:
    """Parse config text into a model template and the remaining sections."""
    cp = _parser()
    cp.read_string(text)
    if not cp.has_section("model"):
        raise ValueError("config has no [model] section")
    items = {k: _parse_value(k, v) for k, v in cp.items("model")}
    family = items.pop("family", None)
    if family is None:
        raise ValueError("[model] section needs a family key")
    p = items.pop("p", None)
    extra = {s: dict(cp.items(s)) for s in cp.sections() if s != "model"}
    return ModelConfig(family, items, p), extra


def load_model_config(path) -> tuple[ModelConfig, dict]:
    return parse_model_config(Path(path).read_text(encoding="utf-8"))


def dump_model_config(model: ModelConfig, extra: dict | None = None) -> str:
    cp = _parser()
    cp.add_section("model")
    for k, v in model.to_dict().items():
        if isinstance(v, (list, tuple)):
            v = ", ".join(repr(float(x)) for x in v)
        cp.set("model", k, str(v))
    for section, items in (extra or {}).items():
        cp.add_section(section)
        for k, v in items.items():
            cp.set(section, k, str(v))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def write_data_csv(path, X, names=None) -> None:
    """Write a p x n matrix as n observation rows by p variable columns."""
    X = np.asarray(X, dtype=float)
    p = X.shape[0]
    names = names or [f"x{i + 1}" for i in range(p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in X.T:
            w.writerow([_fmt(v) for v in row])


def read_data_csv(path, min_rows: int = 2) -> tuple[np.ndarray, list[str]]:
    """Read an observations-by-variables CSV; returns the p x n matrix and column names."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header = rows[0]
    try:
        [float(c) for c in header]
        names = [f"x{i + 1}" for i in range(len(header))]
    except ValueError:
        names = [c.strip() for c in header]
        rows = rows[1:]
    if any(len(r) != len(names) for r in rows):
        raise ValueError(f"{path}: ragged rows (expected {len(names)} columns)")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if data.shape[0] < min_rows:
        raise ValueError(f"{path}: need at least {min_rows} observation rows")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite entries")
    return data.T.copy(), names


def read_series_csv(path) -> np.ndarray:
    """Single numeric column, optional header line."""
    X, _ = read_data_csv(path, min_rows=1)
    if X.shape[0] != 1:
        raise ValueError(f"{path}: expected a single column, found {X.shape[0]}")
    return X[0]


def write_columns_csv(path_or_fh, columns: dict) -> None:
    """Write equal-length named columns with a header row."""
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    close = False
    if isinstance(path_or_fh, (str, Path)):
        fh = open(path_or_fh, "w", newline="", encoding="utf-8")
        close = True
    else:
        fh = path_or_fh
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(cols[0].size if cols else 0):
            w.writerow(["" if np.isnan(c[i]) else _fmt(c[i]) for c in cols])
    finally:
        if close:
            fh.close()
