"""Command-line entry point: ``corrspectra <command> ...``.

Exit codes: 0 success, 2 tolerance breach (``verify``), 1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import BAI_NG_PENALTIES, estimate_all, format_table
from .hp import fisher_z, hp_filter, rolling_equicorr
from .io import (
    dump_model_config,
    load_model_config,
    read_data_csv,
    read_series_csv,
    write_columns_csv,
    write_data_csv,
)
from .linalg import sym_eigvals
from .models import sample_dataset
from .mp import MPParams, esd_from_spectrum, ks_distance, mp_cdf, mp_curve
from .sample import DegenerateRowError, clean_rows, corr_from_cov, cov_data, cov_theoretical
from .verify import THEOREMS, job_from_config, run_verify

log = logging.getLogger("corrspectra")

EXIT_OK, EXIT_ERROR, EXIT_BREACH = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _load_matrix(path, clean: bool, names_out: list | None = None):
    X, names = read_data_csv(path)
    if clean:
        X, removed = clean_rows(X)
        if removed.size:
            print(f"corrspectra: removed constant column(s): {', '.join(names[i] for i in removed)}", file=sys.stderr)
            names = [nm for i, nm in enumerate(names) if i not in set(removed.tolist())]
    else:
        flat = np.flatnonzero(np.ptp(X, axis=1) == 0)
        if flat.size:
            raise UsageError(
                f"{path}: zero-variance column(s) {', '.join(names[i] for i in flat)}; "
                "rerun with --clean to drop them"
            )
    if names_out is not None:
        names_out.extend(names)
    return X


def cmd_simulate(args) -> int:
    model, extra = load_model_config(args.config)
    n = args.n if args.n is not None else int(extra.get("sample", {}).get("n", 0))
    if n < 2:
        raise UsageError("sample size missing: give --n or n in a [sample] section")
    spec = model.build()
    X = sample_dataset(spec, n, args.seed)
    write_data_csv(args.out, X)
    meta = {
        "model": model.to_dict(),
        "n": n,
        "seed": args.seed,
        "layout": "rows=observations, columns=variables",
        "config": dump_model_config(model, {"sample": {"n": n}}),
    }
    Path(str(args.out) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    log.info("wrote %d x %d observations to %s", n, spec.p, args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.k_max is not None and args.k_max < 0:
        raise UsageError("--k-max must be nonnegative")
    reports = []
    for path in args.csv:
        X = _load_matrix(path, args.clean)
        reports.append(
            estimate_all(
                X,
                k_max=args.k_max,
                penalty=args.penalty,
                threshold_only=args.threshold_only,
                label=Path(path).stem,
            )
        )
    payload = [r.to_dict() for r in reports]
    text = json.dumps(payload[0] if len(payload) == 1 else payload, indent=2, sort_keys=True)
    if args.json:
        Path(args.json).write_text(text + "\n")
    if args.format == "json":
        print(text)
    else:
        print(format_table(reports))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    X = _load_matrix(args.csv, args.clean)
    if args.centering == "data":
        S = cov_data(X)
    else:
        mu = np.zeros(X.shape[0]) if args.mu is None else np.array([float(v) for v in args.mu.split(",")])
        S = cov_theoretical(X, mu)
    M = corr_from_cov(S) if args.which == "corr" else S
    values = sym_eigvals(M).values
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_columns_csv(out, {"eigenvalue": values})
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.config:
        model, extra = load_model_config(args.config)
        section = dict(extra.get("verify", {}))
    else:
        raise UsageError("verify needs --config with a [model] section")
    overrides = {
        "theorem": args.theorem,
        "grid": args.grid,
        "replicates": args.replicates,
        "master_seed": args.seed,
        "tolerance": args.tolerance,
    }
    for k, v in overrides.items():
        if v is not None:
            section[k] = str(v)
    if "theorem" not in section or "grid" not in section:
        raise UsageError("verify needs a theorem and a grid (flags or [verify] section)")
    job = job_from_config(model, section)
    result = run_verify(job, threads=args.threads)
    text = result.to_json()
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text if args.format == "json" else result.table())
    return EXIT_OK if result.passed else EXIT_BREACH


def cmd_hpfilter(args) -> int:
    y = read_series_csv(args.csv)
    if args.fisher_z:
        if np.any(np.abs(y) >= 1):
            bad = int(np.flatnonzero(np.abs(y) >= 1)[0])
            raise UsageError(f"value {y[bad]!r} at row {bad + 1} is outside (-1, 1); cannot apply --fisher-z")
        y = fisher_z(y)
    dec = hp_filter(y, args.lamb)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_columns_csv(out, {"input": y, "trend": dec.trend, "cycle": dec.cycle})
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_equicorr(args) -> int:
    X = _load_matrix(args.csv, clean=False) if not args.allow_constant else read_data_csv(args.csv)[0]
    window = args.window or X.shape[1]
    series = rolling_equicorr(X, window)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_columns_csv(out, {"equicorrelation": series})
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_mpcurve(args) -> int:
    params = MPParams(args.c, args.s)
    x, y = mp_curve(params, args.points)
    columns = {"x": x, "density": y, "mp_cdf": mp_cdf(x, params)}
    if args.csv:
        X = _load_matrix(args.csv, args.clean)
        S = cov_data(X)
        M = corr_from_cov(S) if args.which == "corr" else S
        esd = esd_from_spectrum(sym_eigvals(M))
        columns["esd_cdf"] = esd.cdf(x)
        log.info("KS distance to MP(c=%g, s=%g): %.6f", args.c, args.s, ks_distance(esd, params))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_columns_csv(out, columns)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="corrspectra", description="Correlation spectra of factor models and component-retention rules.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="draw a dataset from a model config")
    sp.add_argument("config")
    sp.add_argument("out")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, help="sample size (overrides [sample] n)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="n, p/n, lambda1(C)/p, p, BS, ACT, Bai-Ng for CSV datasets")
    sp.add_argument("csv", nargs="+")
    sp.add_argument("--clean", action="store_true", help="drop zero-variance columns")
    sp.add_argument("--k-max", type=int, help="largest factor count for Bai-Ng (default min(8, min(p,n)/2))")
    sp.add_argument("--penalty", choices=sorted(BAI_NG_PENALTIES), default="icp2")
    sp.add_argument("--threshold-only", action="store_true", help="ACT without eigenvalue adjustment")
    sp.add_argument("--format", choices=("table", "json"), default="table")
    sp.add_argument("--json", help="also write the JSON report here")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("spectrum", help="descending eigenvalues of the sample covariance/correlation")
    sp.add_argument("csv")
    sp.add_argument("--which", choices=("cov", "corr"), default="corr")
    sp.add_argument("--centering", choices=("data", "theoretical"), default="data")
    sp.add_argument("--mu", help="comma-separated known means for theoretical centering (default 0)")
    sp.add_argument("--clean", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("verify", help="Monte Carlo check of a limiting eigenvalue statement")
    sp.add_argument("--config", required=True, help="model config, optionally with a [verify] section")
    sp.add_argument("--theorem", choices=THEOREMS)
    sp.add_argument("--grid", help="comma-separated PxN points, e.g. 600x2400")
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--tolerance", type=float, help="tolerance for point and upper-bound statistics")
    sp.add_argument("--threads", type=int, default=None, help="worker threads (default $CORRSPECTRA_THREADS)")
    sp.add_argument("--format", choices=("table", "json"), default="table")
    sp.add_argument("--json", help="also write the JSON result here")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("hpfilter", help="Hodrick-Prescott trend/cycle of a single-column series")
    sp.add_argument("csv")
    sp.add_argument("--lambda", dest="lamb", type=float, default=1600.0)
    sp.add_argument("--fisher-z", action="store_true", help="z-transform the series first")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_hpfilter)

    sp = sub.add_parser("equicorr", help="rolling mean off-diagonal correlation")
    sp.add_argument("csv")
    sp.add_argument("--window", type=int, help="window length (default: full sample)")
    sp.add_argument("--allow-constant", action="store_true", help="emit blanks for degenerate windows")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_equicorr)

    sp = sub.add_parser("mp-curve", help="Marchenko-Pastur density/CDF, optionally with a data ESD")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--s", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=512)
    sp.add_argument("--csv", help="data CSV whose ESD is overlaid")
    sp.add_argument("--which", choices=("cov", "corr"), default="cov")
    sp.add_argument("--clean", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_mpcurve)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, DegenerateRowError, ValueError, OSError, KeyError) as exc:
        print(f"corrspectra: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
