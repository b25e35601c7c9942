"""Two-phase sparse VARMA estimation.

Phase I fits a penalized long VAR and keeps its residuals as proxies for the
latent innovations; Phase II regresses ``y_t`` on lags of ``y`` and of those
residuals under separate AR and MA penalties.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import PanelData
from .evaluate import ONE_SE, CvReport, cv_select
from .exceptions import InvalidInputError
from .forecast import recursive_forecast
from .penalty import HLAG, LambdaGrid, PenaltySpec, make_grid
from .solver import DEFAULT_EPS, DEFAULT_MAX_ITER, RegressionSystem

log = logging.getLogger(__name__)

MIN_PHASE2_ROWS = 10


@dataclass(frozen=True)
class Scaling:
    """Per-series affine transform ``(y - mean) / scale``."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def identity(cls, d: int) -> "Scaling":
        return cls(np.zeros(d), np.ones(d))

    @classmethod
    def fit(cls, values: np.ndarray) -> "Scaling":
        mean = values.mean(axis=0)
        scale = values.std(axis=0, ddof=1) if values.shape[0] > 1 else np.ones(values.shape[1])
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, values):
        return (np.asarray(values, dtype=float) - self.mean) / self.scale

    def inverse(self, values):
        return np.asarray(values, dtype=float) * self.scale + self.mean

    def to_original(self, block: np.ndarray) -> np.ndarray:
        """Map a d x (d*s) coefficient block from the standardized to the data scale."""
        d = self.scale.size
        if block.size == 0:
            return block.copy()
        s = block.shape[1] // d
        b = block.reshape(d, s, d)
        return (self.scale[:, None, None] * b / self.scale[None, None, :]).reshape(d, s * d)

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}


def default_orders(T: int) -> tuple[int, int, int]:
    """``(p_tilde, p_hat, q_hat) = (floor(1.5 sqrt T), floor(0.75 sqrt T), floor(0.75 sqrt T))``."""
    if T < 4:
        raise InvalidInputError(f"T={T} is too short for any lag order")
    root = math.sqrt(T)
    p_tilde = min(int(math.floor(1.5 * root)), T // 2)
    p_hat = int(math.floor(0.75 * root))
    return p_tilde, p_hat, p_hat


def lag_design(values: np.ndarray, lags: int, start: int) -> np.ndarray:
    """``(d*lags) x (T-start)`` matrix whose column for row t stacks ``y_{t-1}..y_{t-lags}``."""
    T, d = values.shape
    if lags == 0:
        return np.zeros((0, T - start))
    if start < lags:
        raise InvalidInputError("start must leave room for every lag")
    return np.concatenate([values[start - ell:T - ell].T for ell in range(1, lags + 1)], axis=0)


def var_residuals(values: np.ndarray, pi_block: np.ndarray, lags: int) -> np.ndarray:
    """``y_t - sum Pi_tau y_{t-tau}`` for t = lags..T-1."""
    Z = lag_design(values, lags, lags)
    return values[lags:] - (pi_block @ Z).T


def block_to_coeffs(block: np.ndarray, d: int) -> np.ndarray:
    """d x (d*s) block -> (s, d, d) stack."""
    if block.size == 0:
        return np.zeros((0, d, d))
    return block.reshape(d, -1, d).transpose(1, 0, 2).copy()


def _axis(lmax: float, size: int) -> np.ndarray:
    if lmax <= 0:
        return np.zeros(1)
    return make_grid(lmax, size).values


@dataclass
class Tuning:
    """Cross-validation settings; ``None`` in place of a Tuning means fixed penalties."""

    horizon: int = 1
    rule: str = ONE_SE
    start_frac: float = 0.9
    grid_size: int = 10


def _path_order(n_phi: int, n_theta: int):
    """Grid visit order and warm-start parent (index into the flattened grid)."""
    order = []
    for i in range(n_phi):
        for j in range(n_theta):
            parent = None
            if j > 0:
                parent = i * n_theta + j - 1
            elif i > 0:
                parent = (i - 1) * n_theta
            order.append((i * n_theta + j, parent))
    return order


def solve_path(system: RegressionSystem, phi_grid, theta_grid, penalty: PenaltySpec,
               eps=DEFAULT_EPS, max_iter=DEFAULT_MAX_ITER, l1_bound=None, stop_at=None):
    """Solve on the Cartesian grid with warm starts, largest penalties first.

    Returns a list (flattened grid order, ``lambda_phi`` major) of coefficient
    matrices and per-point diagnostics.  ``stop_at`` ends the path early.
    """
    n_phi, n_theta = len(phi_grid), len(theta_grid)
    sols = [None] * (n_phi * n_theta)
    diags = [None] * (n_phi * n_theta)
    for idx, parent in _path_order(n_phi, n_theta):
        pen = replace(penalty, lambda_phi=float(phi_grid[idx // n_theta]),
                      lambda_theta=float(theta_grid[idx % n_theta]))
        init = None if parent is None else sols[parent]
        sols[idx], diags[idx] = system.solve(pen, init, eps, max_iter, l1_bound)
        if stop_at is not None and idx == stop_at:
            break
    return sols, diags


@dataclass
class PhaseIResult:
    pi_hat: np.ndarray
    residuals: np.ndarray
    lambda_chosen: float
    p_tilde: int
    diagnostics: list = field(default_factory=list)
    cv: CvReport | None = None
    scaling: Scaling | None = None
    history: np.ndarray | None = None
    flags: list = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.pi_hat.shape[0]

    @property
    def ar_block(self):
        return self.pi_hat

    @property
    def ma_block(self):
        return np.zeros((self.d, 0))

    @property
    def ar_coeffs(self):
        return block_to_coeffs(self.pi_hat, self.d)

    @property
    def ma_coeffs(self):
        return np.zeros((0, self.d, self.d))

    @property
    def error_history(self):
        return None

    def errors_for(self, values):
        return None

    def error_series(self, values: np.ndarray) -> np.ndarray:
        """Residuals aligned with ``values`` (NaN for the first ``p_tilde`` rows)."""
        out = np.full(values.shape, np.nan)
        out[self.p_tilde:] = var_residuals(values, self.pi_hat, self.p_tilde)
        return out


@dataclass
class PhaseIIResult:
    phi_hat: np.ndarray
    theta_hat: np.ndarray
    lambda_phi: float
    lambda_theta: float
    residuals: np.ndarray
    p: int
    q: int
    start: int
    diagnostics: list = field(default_factory=list)
    cv: CvReport | None = None
    scaling: Scaling | None = None
    history: np.ndarray | None = None
    errors: np.ndarray | None = None
    phase1_pi: np.ndarray | None = None
    response: str = "observed"

    @property
    def d(self) -> int:
        return self.phi_hat.shape[0]

    @property
    def ar_block(self):
        return self.phi_hat

    @property
    def ma_block(self):
        return self.theta_hat

    @property
    def ar_coeffs(self):
        return block_to_coeffs(self.phi_hat, self.d)

    @property
    def ma_coeffs(self):
        return block_to_coeffs(self.theta_hat, self.d)

    @property
    def error_history(self):
        return self.errors

    def errors_for(self, values):
        """Phase-I residuals for a new standardized history."""
        if self.phase1_pi is None:
            raise InvalidInputError("fit carries no Phase-I coefficients; pass residual_history")
        p_tilde = self.phase1_pi.shape[1] // self.d
        out = np.full(values.shape, np.nan)
        out[p_tilde:] = var_residuals(values, self.phase1_pi, p_tilde)
        return out

    def implied_pi(self, k: int = 200, original_scale: bool = True):
        """VAR(inf) coefficients implied by the fitted pair (requires invertible Theta)."""
        from .core import VarmaModel, invert_to_var
        phi, theta = self.phi_hat, self.theta_hat
        if original_scale and self.scaling is not None:
            phi, theta = self.scaling.to_original(phi), self.scaling.to_original(theta)
        model = VarmaModel.from_matrices(block_to_coeffs(phi, self.d), block_to_coeffs(theta, self.d),
                                         dim=self.d)
        return invert_to_var(model, k)


def _fit_var_path(values, lags, penalty, grid, tuning, eps, max_iter):
    """Penalized VAR(lags) on ``values``; shared by Phase I and the plain VAR estimator."""
    T, d = values.shape
    if T <= lags:
        raise InvalidInputError(f"T={T} must exceed the lag order {lags}")
    Y = values[lags:].T
    Z = lag_design(values, lags, lags)
    system = RegressionSystem.build(Y, Z, d=d)
    cv = None
    if tuning is None:
        axis = np.array([penalty.lambda_phi])
        chosen = 0
    else:
        axis = grid.values if grid is not None else _axis(system.lambda_max()[0], tuning.grid_size)

        def factory(t, h):
            sub = RegressionSystem.build(Y[:, : t - lags], Z[:, : t - lags], d=d)
            sols, _ = solve_path(sub, axis, [0.0], penalty, eps, max_iter)
            return np.stack([recursive_forecast(block_to_coeffs(B, d), np.zeros((0, d, d)),
                                                values[:t], None, h)[h - 1] for B in sols])

        cv = cv_select(values, factory, axis, tuning.horizon, tuning.rule, tuning.start_frac)
        chosen = cv.chosen
    sols, diags = solve_path(system, axis, [0.0], penalty, eps, max_iter, stop_at=chosen)
    return sols[chosen], float(axis[chosen]), diags[chosen], cv, system.flags


def phase1_fit(data, p_tilde: int, penalty: PenaltySpec = PenaltySpec(), grid: LambdaGrid | None = None,
               tuning: Tuning | None = Tuning(), *, eps=DEFAULT_EPS, max_iter=DEFAULT_MAX_ITER) -> PhaseIResult:
    """Penalized VAR(p_tilde) with residuals approximating the innovations.

    With ``tuning=None`` the penalty weight is ``penalty.lambda_phi``.
    """
    values = data.values if isinstance(data, PanelData) else np.atleast_2d(np.asarray(data, float))
    if values.size == 0:
        raise InvalidInputError("empty data")
    B, lam, diags, cv, flags = _fit_var_path(values, p_tilde, penalty, grid, tuning, eps, max_iter)
    if flags:
        log.warning("Phase I design is degenerate: %s", flags)
    return PhaseIResult(pi_hat=B, residuals=var_residuals(values, B, p_tilde), lambda_chosen=lam,
                        p_tilde=p_tilde, diagnostics=diags, cv=cv, history=values, flags=flags)


def fit_var(data, p: int, penalty: PenaltySpec = PenaltySpec(), grid=None, tuning: Tuning | None = Tuning(),
            *, eps=DEFAULT_EPS, max_iter=DEFAULT_MAX_ITER) -> PhaseIResult:
    """Plain penalized VAR(p); identical to a Phase-I fit of order ``p``."""
    return phase1_fit(data, p, penalty, grid, tuning, eps=eps, max_iter=max_iter)


def phase2_design(values, errors, p, q, error_start, response="observed"):
    """Response and lag designs for Phase II.

    ``errors`` is aligned with ``values`` and usable from row ``error_start``.
    Rows start at ``error_start + max(p, q)`` when MA lags are used, else at ``p``.
    """
    start = error_start + max(p, q) if q > 0 else p
    T = values.shape[0]
    if T - start < MIN_PHASE2_ROWS:
        raise InvalidInputError(f"only {T - start} usable rows after alignment (need {MIN_PHASE2_ROWS})")
    Z = lag_design(values, p, start)
    X = lag_design(errors, q, start) if q > 0 else np.zeros((0, T - start))
    if response == "observed":
        Y = values[start:].T
    elif response == "fitted":
        Y = (values[start:] - errors[start:]).T
    else:
        raise InvalidInputError(f"unknown response {response!r}")
    if q > 0 and not np.all(np.isfinite(X)):
        raise InvalidInputError("error series has gaps inside the Phase-II window")
    return Y, Z, X, start


def phase2_fit(data, phase1: PhaseIResult | None, p: int, q: int, penalty: PenaltySpec = PenaltySpec(),
               grids: tuple | None = None, tuning: Tuning | None = Tuning(), *, errors=None,
               response: str = "observed", l1_bound: float | None = None,
               eps=DEFAULT_EPS, max_iter=DEFAULT_MAX_ITER) -> PhaseIIResult:
    """Penalized regression of ``y_t`` on ``y_{t-1..t-p}`` and error lags ``1..q``.

    ``errors`` (T x d, aligned with the data) replaces the Phase-I residuals,
    e.g. with the true innovations.
    """
    values = data.values if isinstance(data, PanelData) else np.atleast_2d(np.asarray(data, float))
    T, d = values.shape
    if p < 0 or q < 0:
        raise InvalidInputError("orders must be non-negative")
    if errors is not None:
        err = np.asarray(errors, dtype=float)
        if err.shape != values.shape:
            raise InvalidInputError("errors must have the same shape as the data")
        error_start = 0
    elif phase1 is not None:
        err = phase1.error_series(values)
        error_start = phase1.p_tilde
    elif q == 0:
        err = np.zeros_like(values)
        error_start = 0
    else:
        raise InvalidInputError("Phase II with MA lags needs Phase-I residuals or explicit errors")
    Y, Z, X, start = phase2_design(values, err, p, q, error_start, response)
    system = RegressionSystem.build(Y, Z, X, d=d)
    lmax_phi, lmax_theta = system.lambda_max()
    cv = None
    if tuning is None:
        phi_axis, theta_axis = np.array([penalty.lambda_phi]), np.array([penalty.lambda_theta])
        chosen = 0
    else:
        if grids is not None:
            phi_axis, theta_axis = (np.asarray(getattr(g, "values", g), float) for g in grids)
        else:
            phi_axis = _axis(lmax_phi, tuning.grid_size) if p > 0 else np.zeros(1)
            theta_axis = _axis(lmax_theta, tuning.grid_size) if q > 0 else np.zeros(1)
        grid_pts = np.array([(a, b) for a in phi_axis for b in theta_axis])
        if q == 0:
            grid_pts = grid_pts[:, :1]

        def factory(t, h):
            n = t - start
            sub = RegressionSystem.build(Y[:, :n], Z[:, :n], X[:, :n], d=d)
            sols, _ = solve_path(sub, phi_axis, theta_axis, penalty, eps, max_iter, l1_bound)
            kp = d * p
            out = []
            for B in sols:
                fc = recursive_forecast(block_to_coeffs(B[:, :kp], d), block_to_coeffs(B[:, kp:], d),
                                        values[:t], err[:t], h)
                out.append(fc[h - 1])
            return np.stack(out)

        cv = cv_select(values, factory, grid_pts, tuning.horizon, tuning.rule, tuning.start_frac)
        chosen = cv.chosen
    sols, diags = solve_path(system, phi_axis, theta_axis, penalty, eps, max_iter, l1_bound, stop_at=chosen)
    B = sols[chosen]
    kp = d * p
    resid = (Y - B @ np.vstack([Z, X])).T
    n_theta = len(theta_axis)
    return PhaseIIResult(phi_hat=B[:, :kp], theta_hat=B[:, kp:],
                         lambda_phi=float(phi_axis[chosen // n_theta]),
                         lambda_theta=float(theta_axis[chosen % n_theta]),
                         residuals=resid, p=p, q=q, start=start, diagnostics=diags[chosen], cv=cv,
                         history=values, errors=err,
                         phase1_pi=None if phase1 is None else phase1.pi_hat, response=response)


@dataclass
class FitConfig:
    """Settings for :func:`two_phase_fit`; ``None`` orders mean the T-based defaults."""

    penalty: str = HLAG
    p: int | None = None
    q: int | None = None
    p_tilde: int | None = None
    alpha: float = 0.0
    standardize: bool = True
    tuning: Tuning | None = field(default_factory=Tuning)
    lambda_pi: float = 0.0
    lambda_phi: float = 0.0
    lambda_theta: float = 0.0
    response: str = "observed"
    l1_bound: float | None = None
    eps: float = DEFAULT_EPS
    max_iter: int = DEFAULT_MAX_ITER

    def orders(self, T: int) -> tuple[int, int, int]:
        p_tilde, p_hat, q_hat = default_orders(T)
        return (p_tilde if self.p_tilde is None else self.p_tilde,
                p_hat if self.p is None else self.p,
                q_hat if self.q is None else self.q)

    def to_dict(self):
        out = {k: getattr(self, k) for k in ("penalty", "p", "q", "p_tilde", "alpha", "standardize",
                                              "lambda_pi", "lambda_phi", "lambda_theta", "response",
                                              "l1_bound", "eps", "max_iter")}
        out["tuning"] = None if self.tuning is None else vars(self.tuning).copy()
        return out


def two_phase_fit(data: PanelData, config: FitConfig = FitConfig(), innovations=None,
                  phase1: PhaseIResult | None = None):
    """Standardize, run Phase I and Phase II; returns ``(PhaseIResult | None, PhaseIIResult)``.

    ``innovations`` (T x d, data scale) switches to oracle-error mode: Phase II
    uses them directly and Phase I is skipped.  A ``phase1`` from an earlier
    call on the same data and config is reused instead of refitting.
    """
    values = data.values if isinstance(data, PanelData) else np.atleast_2d(np.asarray(data, float))
    T, d = values.shape
    scaling = Scaling.fit(values) if config.standardize else Scaling.identity(d)
    std = scaling.transform(values)
    p_tilde, p, q = config.orders(T)
    penalty = PenaltySpec(config.penalty, config.lambda_phi, config.lambda_theta, config.alpha)
    errors = None
    if innovations is not None:
        phase1 = None
        errors = np.asarray(innovations, dtype=float) / scaling.scale
    elif phase1 is None:
        phase1 = phase1_fit(std, p_tilde, replace(penalty, lambda_phi=config.lambda_pi),
                            tuning=config.tuning, eps=config.eps, max_iter=config.max_iter)
        phase1.scaling = scaling
    phase2 = phase2_fit(std, phase1, p, q, penalty, tuning=config.tuning, errors=errors,
                        response=config.response, l1_bound=config.l1_bound,
                        eps=config.eps, max_iter=config.max_iter)
    phase2.scaling = scaling
    return phase1, phase2
