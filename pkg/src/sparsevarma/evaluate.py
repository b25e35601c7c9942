"""Tuning by time-series cross-validation, forecast evaluation and lag-structure reports."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .core import PanelData
from .exceptions import DegenerateTestError, InvalidInputError

MIN = "min"
ONE_SE = "one_se"


@dataclass
class CvReport:
    """Cross-validation outcome.

    ``grid`` holds one row per candidate: ``(lambda,)`` for a 1-d grid or
    ``(lambda_phi, lambda_theta)`` for the Phase-II grid.
    """

    grid: np.ndarray
    msfe: np.ndarray
    se: np.ndarray
    chosen: int
    rule: str = ONE_SE
    origins: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def chosen_point(self) -> tuple:
        return tuple(float(v) for v in self.grid[self.chosen])

    def to_dict(self):
        return {"grid": self.grid.tolist(), "msfe": self.msfe.tolist(), "se": self.se.tolist(),
                "chosen": int(self.chosen), "rule": self.rule,
                "origins": [int(t) for t in self.origins]}


def regularization_keys(grid: np.ndarray) -> list:
    """Sort keys, larger = more regularized.

    Two-column grids rank by ``lambda_phi + lambda_theta`` and break ties by the
    MA weight.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] == 1:
        return [(float(g[0]),) for g in grid]
    return [(float(g.sum()), float(g[1]), float(g[0])) for g in grid]


def select_index(msfe, se, grid, rule: str = ONE_SE) -> int:
    msfe = np.asarray(msfe, dtype=float)
    best = int(np.argmin(msfe))
    if rule == MIN:
        return best
    if rule != ONE_SE:
        raise InvalidInputError(f"unknown selection rule {rule!r}")
    bound = msfe[best] + np.asarray(se, dtype=float)[best]
    keys = regularization_keys(grid)
    eligible = [i for i in range(msfe.size) if msfe[i] <= bound]
    return max(eligible, key=lambda i: (keys[i], -i))


def cv_origins(T: int, h: int = 1, start_frac: float = 0.9) -> np.ndarray:
    """Training lengths ``t = S..T-h`` with ``S = floor(start_frac * T)``."""
    S = int(math.floor(start_frac * T))
    return np.arange(S, T - h + 1)


def cv_select(data, fit_factory: Callable, grid, h: int = 1, rule: str = ONE_SE,
              start_frac: float = 0.9) -> CvReport:
    """Time-series cross-validation over a penalty grid.

    ``fit_factory(t, h)`` fits on the first ``t`` observations at every grid
    point and returns an ``(n_points, d)`` array of h-step forecasts of
    observation ``t + h`` (1-based).
    """
    values = data.values if isinstance(data, PanelData) else np.atleast_2d(data)
    T, d = values.shape
    grid = np.asarray(getattr(grid, "values", grid), dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    origins = cv_origins(T, h, start_frac)
    if origins.size < 2:
        raise InvalidInputError(f"only {origins.size} cross-validation origins for T={T}, h={h}")
    losses = np.empty((origins.size, grid.shape[0]))
    for row, t in enumerate(origins):
        fc = np.asarray(fit_factory(int(t), h), dtype=float)
        err = values[t + h - 1] - fc
        losses[row] = np.sum(err ** 2, axis=1) / d
    msfe = losses.mean(axis=0)
    se = losses.std(axis=0, ddof=1) / math.sqrt(origins.size)
    chosen = select_index(msfe, se, grid, rule)
    return CvReport(grid, msfe, se, chosen, rule, origins)


def msfe(actuals, forecasts) -> float:
    """Mean over time of ``||y - yhat||^2 / d``."""
    a = np.atleast_2d(np.asarray(actuals, dtype=float))
    f = np.atleast_2d(np.asarray(forecasts, dtype=float))
    if a.shape != f.shape or a.shape[0] < 1:
        raise InvalidInputError(f"actuals {a.shape} and forecasts {f.shape} must match")
    return float(np.mean(np.sum((a - f) ** 2, axis=1) / a.shape[1]))


def _loss(errors) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    if e.ndim == 1:
        return e ** 2
    return np.sum(e ** 2, axis=1) / e.shape[1]


def dm_test(errors_a, errors_b, h: int = 1) -> tuple[float, float]:
    """Diebold-Mariano test of equal squared-error accuracy.

    Uses the loss differential ``d_t = L(e_a) - L(e_b)`` (per-origin mean squared
    error over series for 2-d inputs), a rectangular-kernel long-run variance
    with ``h - 1`` autocovariance lags and a two-sided normal p-value.
    """
    la, lb = _loss(errors_a), _loss(errors_b)
    if la.shape != lb.shape:
        raise InvalidInputError("error series must have equal length")
    n = la.size
    if n < 5:
        raise InvalidInputError("Diebold-Mariano test needs at least 5 observations")
    diff = la - lb
    if not np.any(diff):
        return 0.0, 1.0
    mean = diff.mean()
    dev = diff - mean
    lrv = float(dev @ dev) / n
    for lag in range(1, h):
        if lag >= n:
            break
        lrv += 2.0 * float(dev[lag:] @ dev[:-lag]) / n
    if lrv <= 0.0:
        raise DegenerateTestError(f"long-run variance is {lrv:.3g}")
    stat = mean / math.sqrt(lrv / n)
    return float(stat), float(2.0 * stats.norm.sf(abs(stat)))


@dataclass
class EvalResult:
    """Expanding-window evaluation output.

    ``errors[name][h]`` is an ``(n_origins, d)`` array of forecast errors with
    NaN rows where the estimator failed.
    """

    horizons: tuple
    origins: dict
    errors: dict
    failures: dict

    def msfe_table(self) -> dict:
        table = {}
        for name, per_h in self.errors.items():
            table[name] = {}
            for h, err in per_h.items():
                ok = np.all(np.isfinite(err), axis=1)
                table[name][h] = float(np.mean(_loss(err[ok]))) if ok.any() else float("nan")
        return table

    def compare(self, a: str, b: str, h: int) -> tuple[float, float]:
        """DM test on origins where both estimators produced forecasts."""
        ea, eb = self.errors[a][h], self.errors[b][h]
        ok = np.all(np.isfinite(ea), axis=1) & np.all(np.isfinite(eb), axis=1)
        return dm_test(ea[ok], eb[ok], h)


def default_eval_start(T: int, frac: float = 0.25) -> int:
    """Origin such that the last ``frac`` of observations are forecast targets."""
    return T - int(math.ceil(frac * T))


def _run_origin(args):
    estimator, values, names, t, hmax = args
    try:
        return np.asarray(estimator(PanelData(values[:t], names), hmax), dtype=float), None
    except Exception as exc:  # recorded, excluded from comparisons
        return None, f"{type(exc).__name__}: {exc}"


def expanding_window_eval(data: PanelData, estimators: Mapping[str, Callable], S: int | None = None,
                          horizons: Sequence[int] = (1,), n_jobs: int = 1) -> EvalResult:
    """Refit every estimator on ``data[:t]`` for ``t = S..T-1`` and score h-step forecasts.

    ``estimator(train, hmax)`` returns an ``(hmax, d)`` forecast array.
    """
    values = data.values
    T, d = values.shape
    horizons = tuple(sorted(set(int(h) for h in horizons)))
    if not horizons or horizons[0] < 1:
        raise InvalidInputError("horizons must be positive")
    S = default_eval_start(T) if S is None else int(S)
    hmax = horizons[-1]
    if S < 1 or S > T - horizons[0]:
        raise InvalidInputError(f"start {S} leaves no evaluation origins for T={T}")
    all_origins = np.arange(S, T - horizons[0] + 1)
    errors, failures, origins = {}, {}, {}
    for name, est in estimators.items():
        jobs = [(est, values, data.names, int(t), hmax) for t in all_origins]
        if n_jobs == 1:
            results = [_run_origin(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                results = list(pool.map(_run_origin, jobs))
        failures[name] = {int(t): msg for t, (_, msg) in zip(all_origins, results) if msg}
        errors[name] = {}
        for h in horizons:
            ts = all_origins[all_origins <= T - h]
            origins[h] = ts
            err = np.full((ts.size, d), np.nan)
            for row, t in enumerate(ts):
                fc, _ = results[row]
                if fc is not None:
                    err[row] = values[t + h - 1] - fc[h - 1]
            errors[name][h] = err
    return EvalResult(horizons, origins, errors, failures)


@dataclass
class LagMatrixReport:
    ar_lags: np.ndarray
    ma_lags: np.ndarray
    nonzero_count: int
    total_params: int

    def summary(self) -> str:
        d2 = self.ar_lags.size
        lines = [f"AR lag matrix: {int(np.sum(self.ar_lags == 0))} out of {d2} entries are equal to zero"]
        if self.ma_lags.size:
            lines.append(f"MA lag matrix: {int(np.sum(self.ma_lags == 0))} out of {d2} entries are equal to zero")
        share = 100.0 * self.nonzero_count / self.total_params if self.total_params else 0.0
        lines.append(f"{self.nonzero_count} out of {self.total_params} parameters are non-zero ({share:.1f}%)")
        return "\n".join(lines)

    def to_dict(self):
        return {"ar_lags": self.ar_lags.tolist(), "ma_lags": self.ma_lags.tolist(),
                "nonzero_count": self.nonzero_count, "total_params": self.total_params}


def max_lags(block, d: int, zero_tol: float = 1e-8) -> np.ndarray:
    """Per (i, j), the deepest lag with ``|coef| > zero_tol`` (0 if none)."""
    block = np.asarray(block, dtype=float)
    if block.size == 0:
        return np.zeros((d, d), dtype=int)
    s = block.shape[1] // d
    nz = np.abs(block.reshape(d, s, d)) > zero_tol  # (i, lag, j)
    lags = np.arange(1, s + 1)[None, :, None]
    return np.max(np.where(nz, lags, 0), axis=1)


def lag_matrix(fit, zero_tol: float = 1e-8) -> LagMatrixReport:
    ar = fit.ar_block
    ma = fit.ma_block
    d = ar.shape[0]
    nnz = int(np.sum(np.abs(ar) > zero_tol) + np.sum(np.abs(ma) > zero_tol))
    ma_lags = max_lags(ma, d, zero_tol) if ma.size else np.zeros((0, 0), dtype=int)
    return LagMatrixReport(max_lags(ar, d, zero_tol), ma_lags, nnz, ar.size + ma.size)


def format_lag_matrix(mat: np.ndarray, names: Sequence[str] | None = None) -> str:
    """Aligned text grid of a lag matrix; zeros print as '.'."""
    mat = np.asarray(mat, dtype=int)
    d = mat.shape[0]
    names = list(names) if names is not None else [str(j + 1) for j in range(d)]
    w = max(max(len(n) for n in names), len(str(mat.max(initial=0))), 1)
    head = " " * w + " " + " ".join(n.rjust(w) for n in names)
    rows = [head]
    for i in range(d):
        cells = " ".join(("." if v == 0 else str(v)).rjust(w) for v in mat[i])
        rows.append(names[i].rjust(w) + " " + cells)
    return "\n".join(rows)
