"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import dgp, hte, montecarlo
from . import selection as sel
from .lasso import PenaltyConfig
from .regression import Dataset, DegreesOfFreedomError, EstimateReport
from .split import split_sample_estimate

THREADS_ENV = "POSTDOUBLE_THREADS"
METHODS = ("ds", "post-lasso", "ds-i3", "union-ads", "split", "lasso")


class UsageError(Exception):
    pass


def _design(value: str) -> str:
    try:
        return dgp.check_design(value)
    except dgp.UnknownDesignError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _floats(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from None


def _estimators(value: str) -> list[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    try:
        montecarlo.check_estimators(names)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return names


def _level(value: str) -> float:
    v = float(value)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def read_config_file(path) -> list[str]:
    """Flat ``key = value`` file turned into ``--key value`` arguments.

    Blank lines and ``#`` comments are ignored; a bare ``key`` is a switch.
    """
    args = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not key:
            raise UsageError(f"{path}:{lineno}: missing key")
        args.append(f"--{key}")
        if sep:
            args.append(value.strip())
    return args


def _penalty_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("penalty")
    g.add_argument("--c", type=float, default=1.1, help="penalty slack constant c > 1 (default 1.1)")
    g.add_argument("--gamma", type=float, default=0.05, help="penalty confidence gamma (default 0.05)")
    g.add_argument("--loading-iterations", type=int, default=5, help="loading refinement rounds (default 5)")


def _config(args) -> PenaltyConfig:
    return PenaltyConfig(c=args.c, gamma=args.gamma, loading_iterations=args.loading_iterations)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="postdouble",
        description="Post-double-selection inference on a treatment effect with many controls.")
    parser.add_argument("--config", metavar="FILE",
                        help="key = value file mirroring the flags; explicit flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte Carlo over one design and an R^2 grid")
    s.add_argument("--design", type=_design, default="1",
                   help=f"design id, one of {', '.join(dgp.DESIGNS)} (default 1)")
    s.add_argument("--r2y", type=_floats, default=[0.0], help="comma list of R^2_y values (default 0)")
    s.add_argument("--r2d", type=_floats, default=[0.0], help="comma list of R^2_d values (default 0)")
    s.add_argument("--reps", type=int, default=1000, help="replications per cell (default 1000)")
    s.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    s.add_argument("--estimators", type=_estimators, default=list(montecarlo.ESTIMATORS),
                   help=f"comma list from {', '.join(montecarlo.ESTIMATORS)} (default all)")
    s.add_argument("--n", type=int, default=100, help="sample size (default 100)")
    s.add_argument("--p", type=int, default=200, help="number of controls (default 200)")
    s.add_argument("--alpha0", type=float, default=0.5, help="true treatment effect (default 0.5)")
    s.add_argument("--literal-cy", action="store_true",
                   help="use R^2_d instead of R^2_y inside c_y for the 'a' designs")
    s.add_argument("--threads", type=int, default=_default_threads(),
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    s.add_argument("--out", default="simulate.csv", help="output report path (default simulate.csv)")
    s.add_argument("--format", choices=("csv", "json"), default="csv", help="report format (default csv)")
    _penalty_args(s)

    e = sub.add_parser("estimate", help="estimate the treatment coefficient from a CSV file")
    e.add_argument("--data", required=True, help="CSV with a header row and numeric columns")
    e.add_argument("--outcome", required=True, help="outcome column name")
    e.add_argument("--treatment", required=True, help="treatment column name")
    e.add_argument("--method", choices=METHODS, default="ds", help="estimator (default ds)")
    e.add_argument("--level", type=_level, default=0.95, help="confidence level (default 0.95)")
    e.add_argument("--seed", type=int, default=0, help="seed for the split method (default 0)")
    e.add_argument("--no-intercept", action="store_true",
                   help="do not partial out a constant before selection")
    _penalty_args(e)

    a = sub.add_parser("ate", help="ATE/ATT for a binary treatment from a CSV file")
    a.add_argument("--data", required=True, help="CSV with a header row and numeric columns")
    a.add_argument("--outcome", required=True, help="outcome column name")
    a.add_argument("--treatment", required=True, help="binary (0/1) treatment column name")
    a.add_argument("--kind", choices=("ate", "att"), default="ate", help="target (default ate)")
    a.add_argument("--link", choices=hte.LINKS, default="linear", help="propensity link (default linear)")
    a.add_argument("--trim", type=float, default=0.01, help="propensity clip epsilon (default 0.01)")
    a.add_argument("--level", type=_level, default=0.95, help="confidence level (default 0.95)")
    a.add_argument("--union", action="store_true", help="refit nuisances on the union of selections")
    _penalty_args(a)

    d = sub.add_parser("demo-p1", help="single vs double t-test selection with one control")
    d.add_argument("--beta-g", type=float, default=0.0, help="coefficient of x in the outcome equation")
    d.add_argument("--beta-m", type=float, default=0.0, help="coefficient of x in the treatment equation")
    d.add_argument("--n", type=int, default=100, help="sample size (default 100)")
    d.add_argument("--reps", type=int, default=2000, help="replications, at least 10 (default 2000)")
    d.add_argument("--seed", type=int, default=0, help="seed (default 0)")
    return parser


def load_csv(path, outcome: str, treatment: str, intercept: bool = True) -> tuple[Dataset, list[str]]:
    """Read a numeric CSV. Raises UsageError naming the offending row/column."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise UsageError(f"{path}: empty file") from None
        rows = list(reader)
    for col in (outcome, treatment):
        if col not in header:
            raise UsageError(f"column {col!r} not found; available: {', '.join(header)}")
    values = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise UsageError(f"row {i}: expected {len(header)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise UsageError(f"row {i}, column {header[j]!r}: non-numeric value {cell!r}") from None
            if not math.isfinite(v):
                raise UsageError(f"row {i}, column {header[j]!r}: non-finite value {cell!r}")
            values[i - 2, j] = v
    iy, idd = header.index(outcome), header.index(treatment)
    controls = [j for j in range(len(header)) if j not in (iy, idd)]
    y, d, X = values[:, iy], values[:, idd], values[:, controls]
    if intercept:
        y, d, X = y - y.mean(), d - d.mean(), X - X.mean(axis=0)
    return Dataset(y, d, X), [header[j] for j in controls]


def _print_report(report: EstimateReport, names, out):
    lo, hi = report.ci_lower, report.ci_upper
    print(f"alpha_hat  {report.alpha_hat:.6f}", file=out)
    print(f"se         {report.se:.6f}", file=out)
    print(f"ci_{report.level:g}    [{lo:.6f}, {hi:.6f}]", file=out)
    print(f"s_hat      {report.s_hat}", file=out)
    chosen = ", ".join(names[j] for j in report.selected) if report.selected else "(none)"
    print(f"selected   {chosen}", file=out)
    if report.flags:
        print(f"flags      {', '.join(report.flags)}", file=out)


def cmd_simulate(args, out=sys.stdout) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    for r2 in args.r2y + args.r2d:
        if not 0 <= r2 < 1:
            raise UsageError(f"R^2 values must lie in [0, 1), got {r2}")
    rows = montecarlo.run_grid(args.design, args.r2y, args.estimators, args.reps, args.seed, args.n, args.p,
                               args.alpha0, max(1, args.threads), _config(args), r2_d_values=args.r2d,
                               literal_cy=args.literal_cy)
    montecarlo.emit_report(rows, args.format, args.out)
    print(f"{'estimator':<11}{'r2_y':>6}{'r2_d':>6}{'bias':>9}{'rmse':>8}{'rej5%':>7}{'cov95':>7}"
          f"{'ci_len':>8}{'s_hat':>7}{'fail':>6}", file=out)
    for r in rows:
        print(f"{r.estimator:<11}{r.r2_y:>6.2f}{r.r2_d:>6.2f}{r.mean_bias:>9.4f}{r.rmse:>8.4f}"
              f"{r.rejection_rate_5pct:>7.3f}{r.coverage_95:>7.3f}{r.mean_ci_length:>8.4f}"
              f"{r.mean_s_hat:>7.2f}{r.failures:>6d}", file=out)
    print(f"wrote {args.out}", file=out)
    return 0


def cmd_estimate(args, out=sys.stdout) -> int:
    data, names = load_csv(args.data, args.outcome, args.treatment, intercept=not args.no_intercept)
    config = _config(args)
    level = args.level
    if args.method == "split":
        report = split_sample_estimate(data, config, level, seed=args.seed)[0]
    else:
        sets = sel.selection_sets(data, config, include_i3=args.method != "ds")
        if args.method == "ds":
            report = sel.double_selection(data, config, level, sets=sets)
        elif args.method == "post-lasso":
            report = sel.single_selection_post_lasso(data, config, level, sets=sets)
        elif args.method == "ds-i3":
            report = sel.ds_plus_i3(data, config, level, sets=sets)
        elif args.method == "lasso":
            report = sel.lasso_direct(data, config, level, sets=sets)
        else:
            report = sel.union_ads(sel.double_selection(data, config, level, sets=sets),
                                   sel.single_selection_post_lasso(data, config, level, sets=sets))
    print(f"method     {args.method}", file=out)
    _print_report(report, names, out)
    return 0


def cmd_ate(args, out=sys.stdout) -> int:
    data, _ = load_csv(args.data, args.outcome, args.treatment, intercept=False)
    if not np.all((data.d == 0) | (data.d == 1)):
        raise UsageError(f"treatment column {args.treatment!r} must be binary 0/1")
    if not 0 < args.trim < 0.5:
        raise UsageError("--trim must lie in (0, 0.5)")
    if args.kind == "att" and data.d.sum() == 0:
        raise RuntimeError("no treated observations")
    fn = hte.ate_estimate if args.kind == "ate" else hte.att_estimate
    rep = fn(data.y, data.d, data.X, args.link, _config(args), args.level, args.trim, args.union)
    print(f"kind       {rep.kind}", file=out)
    print(f"effect     {rep.effect_hat:.6f}", file=out)
    print(f"se         {rep.se:.6f}", file=out)
    print(f"ci_{rep.level:g}    [{rep.ci_lower:.6f}, {rep.ci_upper:.6f}]", file=out)
    if rep.mu_hat is not None:
        print(f"mu_hat     {rep.mu_hat:.6f}", file=out)
    return 0


DEMO_HEADER = ("method", "coverage_95", "rejection_rate_5pct", "mean_bias", "rmse", "mean_s_hat")


def cmd_demo_p1(args, out=sys.stdout) -> int:
    if args.reps < 10:
        raise UsageError("--reps must be >= 10")
    if args.n < 4:
        raise UsageError("--n must be >= 4")
    res = montecarlo.p1_ttest_demo(args.beta_g, args.beta_m, args.n, args.reps, args.seed)
    print("\t".join(DEMO_HEADER), file=out)
    for name in ("single", "double"):
        s = res[name]
        print(f"{name}\t{s.coverage_95:.4f}\t{s.rejection_rate_5pct:.4f}\t{s.mean_bias:.4f}\t"
              f"{s.rmse:.4f}\t{s.mean_s_hat:.4f}", file=out)
    return 0


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "ate": cmd_ate, "demo-p1": cmd_demo_p1}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = _split_config(argv)
        if pre is not None:
            argv = _merge_config(argv, pre)
        # argparse writes usage/help to the process streams; route them to ours
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"postdouble: error: {exc}", file=err)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"postdouble {args.command}: error: {exc}", file=err)
        parser.print_usage(err)
        return 2
    except (DegreesOfFreedomError, hte.ArmSizeError, RuntimeError, ValueError, np.linalg.LinAlgError,
            OSError) as exc:
        print(f"postdouble {args.command}: {exc}", file=err)
        return 1


def _split_config(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1], i
        if tok.startswith("--config="):
            return tok.split("=", 1)[1], i
    return None, None


def _merge_config(argv, path):
    """Insert file-derived flags right after the subcommand so explicit flags,
    which come later, take precedence."""
    try:
        extra = read_config_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    cleaned = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--config":
            skip = True
            continue
        if tok.startswith("--config="):
            continue
        cleaned.append(tok)
    for i, tok in enumerate(cleaned):
        if tok in COMMANDS:
            return cleaned[: i + 1] + extra + cleaned[i + 1:]
    raise UsageError("config file given without a command")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
