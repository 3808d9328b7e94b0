"""Replication engine, summary metrics and report writers."""

from __future__ import annotations

import csv
import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import selection as sel
from .dgp import DesignSpec, generate, toeplitz_sigma
from .lasso import PenaltyConfig
from .regression import EstimateReport
from .split import split_sample_estimate

ESTIMATORS = ("oracle", "ds-oracle", "post-lasso", "ds", "lasso", "union-ads", "ds-i3", "split")
FIELDS = ("estimator", "design", "r2_y", "r2_d", "reps", "mean_bias", "median_bias", "rmse",
          "rejection_rate_5pct", "coverage_95", "mean_ci_length", "mean_s_hat", "failures")
LEVEL = 0.95


@dataclass(frozen=True)
class McSummary:
    estimator: str
    design: str
    r2_y: float
    r2_d: float
    reps: int
    mean_bias: float
    median_bias: float
    rmse: float
    rejection_rate_5pct: float
    coverage_95: float
    mean_ci_length: float
    mean_s_hat: float
    failures: int

    def as_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Draw:
    """One estimator's outcome in one replication."""
    error: float
    covered: bool
    ci_length: float
    s_hat: int
    failed: bool


def _key(*parts) -> int:
    return zlib.crc32("|".join(str(p) for p in parts).encode())


def cell_key(spec: DesignSpec) -> int:
    return _key(spec.design_id, spec.n, spec.p, repr(spec.r2_y), repr(spec.r2_d),
                repr(spec.alpha0), spec.literal_cy)


def replication_rng(master_seed: int, spec: DesignSpec, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, cell_key(spec), r]))


def estimator_seed(master_seed: int, spec: DesignSpec, r: int, name: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, cell_key(spec), r, _key(name)])


def check_estimators(names) -> tuple:
    names = tuple(names)
    bad = [e for e in names if e not in ESTIMATORS]
    if bad:
        raise ValueError(f"unknown estimator(s) {bad}; choose from {', '.join(ESTIMATORS)}")
    if not names:
        raise ValueError("no estimators requested")
    return names


def run_estimators(data, names, config: PenaltyConfig, level: float = LEVEL,
                   split_seed=0) -> dict:
    """Run the named estimators on one dataset; failures map to the exception."""
    needs_sets = {"post-lasso", "ds", "lasso", "union-ads", "ds-i3"} & set(names)
    sets = None
    if needs_sets:
        want_i3 = bool({"post-lasso", "lasso", "union-ads", "ds-i3"} & set(names))
        sets = sel.selection_sets(data, config, include_i3=want_i3)
    out = {}
    cache = {}

    def get(name):
        if name in cache:
            return cache[name]
        try:
            if name == "oracle":
                res = sel.oracle(data, level)
            elif name == "ds-oracle":
                res = sel.ds_oracle(data, level)
            elif name == "ds":
                res = sel.double_selection(data, config, level, sets=sets)
            elif name == "post-lasso":
                res = sel.single_selection_post_lasso(data, config, level, sets=sets)
            elif name == "lasso":
                res = sel.lasso_direct(data, config, level, sets=sets)
            elif name == "ds-i3":
                res = sel.ds_plus_i3(data, config, level, sets=sets)
            elif name == "union-ads":
                a, b = get("ds"), get("post-lasso")
                res = sel.union_ads(a, b) if isinstance(a, EstimateReport) and isinstance(b, EstimateReport) \
                    else (a if not isinstance(a, EstimateReport) else b)
            elif name == "split":
                res = split_sample_estimate(data, config, level, seed=split_seed)[0]
            else:  # pragma: no cover
                raise ValueError(name)
        except (ValueError, np.linalg.LinAlgError) as exc:
            res = exc
        cache[name] = res
        return res

    for name in names:
        out[name] = get(name)
    return out


def _draw(res, alpha0) -> Draw:
    if not isinstance(res, EstimateReport):
        return Draw(np.nan, False, np.nan, 0, True)
    return Draw(res.alpha_hat - alpha0, res.covers(alpha0), res.ci_length, res.s_hat, bool(res.flags))


def run_replication(spec: DesignSpec, names, master_seed: int, r: int, config: PenaltyConfig,
                    sigma_factor=None, level: float = LEVEL) -> dict:
    sample = generate(spec, replication_rng(master_seed, spec, r), sigma_factor)
    results = run_estimators(sample.data, names, config, level,
                             split_seed=estimator_seed(master_seed, spec, r, "split"))
    return {k: _draw(v, spec.alpha0) for k, v in results.items()}


def summarize(draws, estimator: str, design: str, r2_y: float, r2_d: float) -> McSummary:
    draws = list(draws)
    reps = len(draws)
    err = np.array([d.error for d in draws])
    ok = err[np.isfinite(err)]
    covered = np.array([d.covered for d in draws])
    lengths = np.array([d.ci_length for d in draws])
    lengths = lengths[~np.isnan(lengths)]
    if ok.size:
        mean_bias = float(ok.mean())
        median_bias = float(np.sort(ok)[(ok.size - 1) // 2])
        rmse = float(np.sqrt(np.mean(ok ** 2)))
    else:
        mean_bias = median_bias = rmse = float("nan")
    cov = float(covered.mean()) if reps else float("nan")
    return McSummary(estimator, design, float(r2_y), float(r2_d), reps, mean_bias, median_bias, rmse,
                     1.0 - cov, cov, float(lengths.mean()) if lengths.size else float("nan"),
                     float(np.mean([d.s_hat for d in draws])) if reps else float("nan"),
                     int(sum(d.failed for d in draws)))


def run_cell(spec: DesignSpec, estimators, reps: int, master_seed: int = 0, parallelism: int = 1,
             config: PenaltyConfig = PenaltyConfig(), level: float = LEVEL) -> list[McSummary]:
    names = check_estimators(estimators)
    if reps < 1:
        raise ValueError("reps must be >= 1")
    factor = toeplitz_sigma(spec.p)

    def one(r):
        return run_replication(spec, names, master_seed, r, config, factor, level)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(one, range(reps)))
    else:
        results = [one(r) for r in range(reps)]
    return [summarize((res[name] for res in results), name, spec.design_id, spec.r2_y, spec.r2_d)
            for name in names]


def run_grid(design_id, r2_values, estimators, reps: int, master_seed: int = 0, n: int = 100,
             p: int = 200, alpha0: float = 0.5, parallelism: int = 1,
             config: PenaltyConfig = PenaltyConfig(), r2_d_values=None, literal_cy: bool = False):
    """One row per (r2_y, r2_d, estimator) over the cross of the R^2 values."""
    r2_d_values = r2_values if r2_d_values is None else r2_d_values
    rows = []
    for r2_y in r2_values:
        for r2_d in r2_d_values:
            spec = DesignSpec(str(design_id), n, p, r2_y, r2_d, alpha0, master_seed, literal_cy)
            rows.extend(run_cell(spec, estimators, reps, master_seed, parallelism, config))
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(rows, fmt: str, path) -> Path:
    path = Path(path)
    records = [r.as_row() if isinstance(r, McSummary) else dict(r) for r in rows]
    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(FIELDS)
            for rec in records:
                w.writerow([_fmt(rec[k]) for k in FIELDS])
    elif fmt == "json":
        with path.open("w", encoding="utf-8") as fh:
            json.dump([{k: rec[k] for k in FIELDS} for rec in records], fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    return path


def read_report(path) -> list[McSummary]:
    path = Path(path)
    if path.suffix == ".json":
        recs = json.loads(path.read_text(encoding="utf-8"))
    else:
        with path.open(encoding="utf-8", newline="") as fh:
            recs = list(csv.DictReader(fh))
    types = {f.name: f.type for f in fields(McSummary)}
    out = []
    for rec in recs:
        conv = {}
        for k in FIELDS:
            t = types[k]
            conv[k] = rec[k] if t == "str" else (int(rec[k]) if t == "int" else float(rec[k]))
        out.append(McSummary(**conv))
    return out


def p1_ttest_demo(beta_g: float, beta_m: float, n: int = 100, reps: int = 2000, seed: int = 0,
                  alpha0: float = 0.5, level: float = LEVEL) -> dict:
    """Single vs double selection with t-test selectors in the one-control model."""
    single, double = [], []
    for r in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence([seed, _key("p1"), r]))
        data = sel.p1_draw(beta_g, beta_m, n, rng, alpha0)
        s, d = sel.p1_estimates(data, level)
        single.append(_draw(s, alpha0))
        double.append(_draw(d, alpha0))
    return {"single": summarize(single, "single", "p1", 0.0, 0.0),
            "double": summarize(double, "double", "p1", 0.0, 0.0)}
