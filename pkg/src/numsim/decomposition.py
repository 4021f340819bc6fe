"""OLS decomposition of similarity grids with bootstrap confidence intervals.

An elicited grid is regressed (after z-scoring target and predictors)
against theoretical similarity grids, combined and one predictor at a
time. Confidence intervals come from a percentile bootstrap over the
number pairs, with per-replicate derived seeds so results are
reproducible bit-for-bit.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InsufficientDataError
from .matrix import zscore

CONDITION_LIMIT = 1e10


@dataclass
class RegressionFit:
    intercept: float
    coefficients: dict
    r_squared: float


@dataclass
class BootstrapResult:
    statistic_name: str
    point: float
    ci_low: float
    ci_high: float
    n_reps: int = 1000
    ci_level: float = 0.95
    n_skipped: int = 0


@dataclass
class DecompositionReport:
    predictor_names: list
    n_pairs: int
    combined: RegressionFit
    combined_r2: BootstrapResult
    combined_coefficients: dict = field(default_factory=dict)  # name -> BootstrapResult
    per_predictor: dict = field(default_factory=dict)  # name -> (fit, BootstrapResult)


def _design(target, predictors):
    names = list(predictors)
    y = np.asarray(target, dtype=np.float64)
    cols = [np.ones_like(y)] + [np.asarray(predictors[k], dtype=np.float64) for k in names]
    x = np.column_stack(cols)
    if x.shape[0] != y.shape[0]:
        raise ValueError("target and predictors must have equal length")
    if x.shape[0] < x.shape[1] + 1:
        raise InsufficientDataError(
            f"need at least {x.shape[1] + 1} observations for {len(names)} predictor(s)"
        )
    return y, x, names


def _solve(y, x):
    xtx = x.T @ x
    if np.linalg.cond(xtx) > CONDITION_LIMIT:
        raise DegenerateInputError("design matrix is (near-)collinear")
    beta = np.linalg.solve(xtx, x.T @ y)
    resid = y - x @ beta
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DegenerateInputError("target has zero variance")
    return beta, 1.0 - ss_res / ss_tot


def ols_fit(target, predictors):
    """Least-squares fit with intercept via the normal equations.

    ``predictors`` maps name -> sequence. Returns coefficients and
    R^2 = 1 - SS_res / SS_tot.
    """
    y, x, names = _design(target, predictors)
    beta, r2 = _solve(y, x)
    return RegressionFit(
        intercept=float(beta[0]),
        coefficients={k: float(b) for k, b in zip(names, beta[1:])},
        r_squared=r2,
    )


def _bootstrap(target, predictors, stat_fn, statistic_name, n_reps, ci_level, seed):
    y, x, names = _design(target, predictors)
    point = stat_fn(*_solve(y, x))
    stats = np.empty(n_reps)
    n = len(y)
    skipped = 0
    kept = 0
    for rep in range(n_reps):
        rng = np.random.default_rng(seed + rep)
        idx = rng.integers(0, n, size=n)
        try:
            stats[kept] = stat_fn(*_solve(y[idx], x[idx]))
        except DegenerateInputError:
            skipped += 1
            continue
        kept += 1
    if kept == 0:
        raise DegenerateInputError("every bootstrap replicate was degenerate")
    lo, hi = (1 - ci_level) / 2, 1 - (1 - ci_level) / 2
    ci_low, ci_high = np.quantile(stats[:kept], [lo, hi])
    return BootstrapResult(
        statistic_name=statistic_name,
        point=float(point),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        n_reps=n_reps,
        ci_level=ci_level,
        n_skipped=skipped,
    )


def bootstrap_r2(target, predictors, n_reps=1000, ci_level=0.95, seed=0):
    """Percentile bootstrap over observations for the fit's R^2."""
    return _bootstrap(
        target, predictors, lambda beta, r2: r2, "r_squared", n_reps, ci_level, seed
    )


def bootstrap_coefficient(target, predictors, name, n_reps=1000, ci_level=0.95, seed=0):
    """Percentile bootstrap CI for one named coefficient of the combined fit."""
    pos = 1 + list(predictors).index(name)
    return _bootstrap(
        target,
        predictors,
        lambda beta, r2: beta[pos],
        f"coef:{name}",
        n_reps,
        ci_level,
        seed,
    )


def grid_pairs(grid, include_diagonal=True):
    """Upper-triangle values of a (symmetrized) grid, one per unordered pair."""
    n = grid.values.shape[0]
    iu = np.triu_indices(n, k=0 if include_diagonal else 1)
    return grid.values[iu]


def decompose(
    grid,
    predictor_grids,
    include_diagonal=True,
    n_reps=1000,
    ci_level=0.95,
    seed=0,
):
    """Regress a similarity grid on named theoretical grids.

    All grids must share the range. Each unordered pair enters once;
    absent pairs are dropped. Target and predictors are z-scored, so
    coefficients are in z-units (R^2 is invariant to this).
    """
    names = list(predictor_grids)
    for name in names:
        pg = predictor_grids[name]
        if (pg.n_min, pg.n_max) != (grid.n_min, grid.n_max):
            raise ValueError(f"predictor {name!r} covers a different range")
    y_raw = grid_pairs(grid, include_diagonal)
    preds_raw = {k: grid_pairs(predictor_grids[k], include_diagonal) for k in names}
    usable = ~np.isnan(y_raw)
    for k in names:
        usable &= ~np.isnan(preds_raw[k])
    if usable.sum() < 3:
        raise InsufficientDataError(f"only {int(usable.sum())} usable pair(s)")
    y = zscore(y_raw[usable])
    preds = {k: zscore(preds_raw[k][usable]) for k in names}

    combined = ols_fit(y, preds)
    combined_r2 = bootstrap_r2(y, preds, n_reps=n_reps, ci_level=ci_level, seed=seed)
    coef_boots = {
        k: bootstrap_coefficient(y, preds, k, n_reps=n_reps, ci_level=ci_level, seed=seed)
        for k in names
    }
    per_predictor = {}
    for k in names:
        single = {k: preds[k]}
        per_predictor[k] = (
            ols_fit(y, single),
            bootstrap_r2(y, single, n_reps=n_reps, ci_level=ci_level, seed=seed),
        )
    return DecompositionReport(
        predictor_names=names,
        n_pairs=int(usable.sum()),
        combined=combined,
        combined_r2=combined_r2,
        combined_coefficients=coef_boots,
        per_predictor=per_predictor,
    )


def _fmt_boot(b):
    return f"{b.point:.6f} ci=[{b.ci_low:.6f}, {b.ci_high:.6f}] reps={b.n_reps} level={b.ci_level}"


def save_report(report, path):
    """Write a decomposition report as key/value lines plus a coefficient table."""
    lines = [
        "# numsim decomposition report v1",
        f"predictors={','.join(report.predictor_names)}",
        f"n_pairs={report.n_pairs}",
        f"combined_r2={report.combined.r_squared!r}",
        f"combined_r2_boot={_fmt_boot(report.combined_r2)}",
        f"combined_intercept={report.combined.intercept!r}",
    ]
    for k in report.predictor_names:
        lines.append(f"combined_coef_{k}={report.combined.coefficients[k]!r}")
        lines.append(f"combined_coef_{k}_boot={_fmt_boot(report.combined_coefficients[k])}")
    for k in report.predictor_names:
        fit, boot = report.per_predictor[k]
        lines.append(f"single_{k}_r2={fit.r_squared!r}")
        lines.append(f"single_{k}_coef={fit.coefficients[k]!r}")
        lines.append(f"single_{k}_r2_boot={_fmt_boot(boot)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
