"""Plug-in h-step forecasts for fitted VAR and VARMA models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PanelData, VarmaModel
from .exceptions import InvalidInputError


def recursive_forecast(ar, ma, y_hist, e_hist=None, h: int = 1) -> np.ndarray:
    """Conditional-mean forecasts ``y_{T+1..T+h}``.

    Parameters
    ----------
    ar : (p, d, d) AR coefficients
    ma : (q, d, d) MA coefficients (may be empty)
    y_hist : (n, d) observed history, last row is time T
    e_hist : (n, d) in-sample innovations aligned with ``y_hist``; future ones are zero
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    y_hist = np.atleast_2d(np.asarray(y_hist, dtype=float))
    n, d = y_hist.shape
    p = ar.shape[0]
    q = ma.shape[0] if np.any(ma) else 0
    if h < 1:
        raise InvalidInputError("forecast horizon must be positive")
    if n < p:
        raise InvalidInputError(f"history has {n} rows but the fit needs {p} lags")
    if q:
        if e_hist is None:
            raise InvalidInputError("residual history is required for a model with MA terms")
        e_hist = np.atleast_2d(np.asarray(e_hist, dtype=float))
        if e_hist.shape[0] < q or e_hist.shape[1] != d:
            raise InvalidInputError(f"residual history must have at least {q} rows of width {d}")
        if not np.all(np.isfinite(e_hist[-q:])):
            raise InvalidInputError("residual history has missing values within the MA window")
    path = np.zeros((p + h, d))
    if p:
        path[:p] = y_hist[n - p:]
    out = np.zeros((h, d))
    for s in range(1, h + 1):
        acc = np.zeros(d)
        for ell in range(1, p + 1):
            acc += ar[ell - 1] @ path[p + s - 1 - ell]
        for m in range(s, q + 1):
            # innovation at time T + s - m, in-sample only when m >= s
            acc += ma[m - 1] @ e_hist[e_hist.shape[0] - 1 - (m - s)]
        path[p + s - 1] = acc
        out[s - 1] = acc
    return out


@dataclass
class ForecastRequest:
    """What to forecast from.

    ``history`` is on the original data scale; ``residual_history`` is on the
    fit's working scale (standardized for pipeline fits).  Either may be left
    out for pipeline fits, which then use their own training sample.
    """

    fit: object
    history: PanelData | np.ndarray | None = None
    residual_history: np.ndarray | None = None
    h: int = 1


def _values(x):
    if x is None:
        return None
    return x.values if isinstance(x, PanelData) else np.atleast_2d(np.asarray(x, dtype=float))


class _Identity:
    @staticmethod
    def transform(values):
        return np.asarray(values, dtype=float)

    inverse = transform


def forecast_h(req: ForecastRequest) -> np.ndarray:
    """``h x d`` array of forecasts on the original scale."""
    fit = req.fit
    hist = _values(req.history)
    if isinstance(fit, VarmaModel):
        if hist is None:
            raise InvalidInputError("a history is required to forecast from a VarmaModel")
        return recursive_forecast(fit.phi.coeffs, fit.theta.coeffs, hist,
                                  req.residual_history, req.h)
    if not hasattr(fit, "ar_coeffs"):
        raise InvalidInputError(f"cannot forecast from {type(fit).__name__}")
    scaling = fit.scaling
    if scaling is None:
        scaling = _Identity()
    if hist is None:
        y_std = fit.history
        e_std = fit.error_history if req.residual_history is None else req.residual_history
    else:
        y_std = scaling.transform(hist)
        e_std = req.residual_history
        if e_std is None and fit.ma_coeffs.shape[0]:
            e_std = fit.errors_for(y_std)
    fc = recursive_forecast(fit.ar_coeffs, fit.ma_coeffs, y_std, e_std, req.h)
    return scaling.inverse(fc)
