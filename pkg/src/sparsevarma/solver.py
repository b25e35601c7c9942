"""Row-separable accelerated proximal gradient engine.

Each response row ``i`` solves::

    min  1/2 ||y_i - phi Z - theta X||^2 + lam_phi P(phi) + lam_theta P(theta)
         + alpha/2 (lam_phi ||phi||^2 + lam_theta ||theta||^2)

with a common step ``1 / sigma_1([Z; X])^2``.  Rows never share state, so a
row's solution does not depend on which other rows are solved with it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import InvalidInputError, SolverError
from .penalty import HLAG, L1, PenaltySpec

DEFAULT_EPS = 1e-4
DEFAULT_MAX_ITER = 10_000

_KIND_CODE = {L1: _kernels.KIND_L1, HLAG: _kernels.KIND_HLAG}


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    converged: bool
    final_objective: float
    final_delta_inf: float
    initial_objective: float = float("nan")

    def to_dict(self):
        return {"iterations": self.iterations, "converged": self.converged,
                "final_objective": self.final_objective,
                "final_delta_inf": self.final_delta_inf}


def top_eigenvalue(G: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration (Rayleigh quotient)."""
    n = G.shape[0]
    v = np.linspace(1.0, 2.0, n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = G @ v
        new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(new - est) <= tol * abs(new):
            return new
        est = new
    return est


def _stack(Z, X):
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if X is None:
        return Z, 0
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return Z, 0
    X = np.atleast_2d(X)
    if X.shape[1] != Z.shape[1]:
        raise InvalidInputError("Z and X must have the same number of columns")
    return np.vstack([Z, X]), X.shape[0]


def spectral_step(Z, X=None) -> float:
    """``1 / sigma_1^2`` for the row-stacked design ``[Z; X]``."""
    A, _ = _stack(Z, X)
    if A.size == 0 or not np.any(A):
        raise InvalidInputError("design matrix is empty or all zero")
    return 1.0 / top_eigenvalue(A @ A.T)


@dataclass
class RegressionSystem:
    """Sufficient statistics of ``Y ~ [Z; X]`` for fast repeated row solves.

    Attributes
    ----------
    G : (k, k) Gram matrix ``A A^T``
    C : (rows, k) cross products ``Y A^T``
    yy : (rows,) ``sum(Y**2, axis=1)``
    kp : number of AR regressors (leading block of ``A``)
    d : series count used to group lag profiles
    step : proximal step size
    """

    G: np.ndarray
    C: np.ndarray
    yy: np.ndarray
    kp: int
    d: int
    step: float
    n_obs: int = 0
    flags: list = field(default_factory=list)

    @classmethod
    def build(cls, Y, Z, X=None, d: int | None = None, step: float | None = None):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        A, kq = _stack(Z, X)
        if Y.shape[1] != A.shape[1]:
            raise InvalidInputError(f"Y has {Y.shape[1]} columns, regressors have {A.shape[1]}")
        kp = A.shape[0] - kq
        d = Y.shape[0] if d is None else d
        if kp % d or kq % d:
            raise InvalidInputError("regressor blocks are not multiples of the series count")
        G = A @ A.T
        flags = []
        if np.any(np.diag(G) == 0.0):
            flags.append("degenerate_regressor")
        if step is None:
            if not np.any(G):
                raise InvalidInputError("design matrix is all zero")
            step = 1.0 / top_eigenvalue(G)
        return cls(G=np.ascontiguousarray(G), C=np.ascontiguousarray(Y @ A.T),
                   yy=np.einsum("ij,ij->i", Y, Y), kp=kp, d=d, step=float(step),
                   n_obs=Y.shape[1], flags=flags)

    @property
    def k(self) -> int:
        return self.G.shape[0]

    @property
    def rows(self) -> int:
        return self.C.shape[0]

    def lambda_max(self) -> tuple[float, float]:
        """Zero-solution thresholds ``(max|Y Z^T|, max|Y X^T|)``."""
        a = float(np.max(np.abs(self.C[:, : self.kp]), initial=0.0))
        b = float(np.max(np.abs(self.C[:, self.kp:]), initial=0.0))
        return a, b

    def solve_row(self, i: int, penalty: PenaltySpec, init=None, eps=DEFAULT_EPS,
                  max_iter=DEFAULT_MAX_ITER, l1_bound=None):
        b0 = np.zeros(self.k) if init is None else np.array(init, dtype=float).ravel()
        if b0.size != self.k:
            raise InvalidInputError(f"initial row has {b0.size} entries, expected {self.k}")
        b, it, status, obj, delta, obj0 = _kernels.fista_row(
            self.G, self.C[i], float(self.yy[i]), b0, self.kp, self.d, self.step,
            penalty.lambda_phi, penalty.lambda_theta, penalty.alpha, _KIND_CODE[penalty.kind],
            float(eps), int(max_iter), float(l1_bound or 0.0))
        diag = SolveDiagnostics(int(it), status == _kernels.STATUS_OK, float(obj), float(delta), float(obj0))
        if status == _kernels.STATUS_DIVERGED:
            raise SolverError(f"row {i} diverged after {it} iterations", diag)
        return b, diag

    def solve(self, penalty: PenaltySpec, init=None, eps=DEFAULT_EPS,
              max_iter=DEFAULT_MAX_ITER, l1_bound=None):
        """All rows; returns ``(B, diagnostics)`` with ``B`` of shape (rows, k)."""
        B = np.zeros((self.rows, self.k))
        diags = []
        failed = []
        for i in range(self.rows):
            row_init = None if init is None else init[i]
            try:
                B[i], diag = self.solve_row(i, penalty, row_init, eps, max_iter, l1_bound)
            except SolverError as err:
                failed.append((i, err.diagnostics))
                continue
            diags.append(diag)
        if failed:
            rows = [i for i, _ in failed]
            raise SolverError(f"solver failed on rows {rows}", failed)
        return B, diags

    def objective(self, i: int, b, penalty: PenaltySpec) -> float:
        b = np.asarray(b, dtype=float)
        u = b @ self.G
        return float(_kernels.row_objective(b, u, self.C[i], float(self.yy[i]), self.kp, self.d,
                                            penalty.lambda_phi, penalty.lambda_theta,
                                            penalty.alpha, _KIND_CODE[penalty.kind]))

    def prox_grad_step(self, i: int, b, penalty: PenaltySpec) -> np.ndarray:
        return _kernels.prox_grad_step(self.G, self.C[i], np.asarray(b, dtype=float), self.kp,
                                       self.d, self.step, penalty.lambda_phi,
                                       penalty.lambda_theta, penalty.alpha,
                                       _KIND_CODE[penalty.kind])


@dataclass
class RowProblem:
    y_row: np.ndarray
    Z: np.ndarray
    X: np.ndarray | None = None
    penalty: PenaltySpec = field(default_factory=PenaltySpec)
    step: float | None = None
    epsilon: float = DEFAULT_EPS
    max_iter: int = DEFAULT_MAX_ITER
    n_series: int = 1
    l1_bound: float | None = None

    def system(self) -> RegressionSystem:
        sys_ = RegressionSystem.build(np.atleast_2d(self.y_row), self.Z, self.X,
                                      d=self.n_series, step=self.step)
        bound = 1.0 / top_eigenvalue(sys_.G)
        if sys_.step > bound * (1 + 1e-6):
            raise InvalidInputError(f"step {sys_.step} exceeds 1/sigma_1^2 = {bound}")
        return sys_


def solve_row(problem: RowProblem, init_phi=None, init_theta=None):
    """Solve one row; returns ``(phi_row, theta_row, SolveDiagnostics)``."""
    sys_ = problem.system()
    init = None
    if init_phi is not None or init_theta is not None:
        phi0 = np.zeros(sys_.kp) if init_phi is None else np.ravel(init_phi)
        theta0 = np.zeros(sys_.k - sys_.kp) if init_theta is None else np.ravel(init_theta)
        init = np.concatenate([phi0, theta0])
    b, diag = sys_.solve_row(0, problem.penalty, init, problem.epsilon, problem.max_iter,
                             problem.l1_bound)
    return b[: sys_.kp], b[sys_.kp:], diag


def solve_all_rows(Y, Z, X=None, penalty: PenaltySpec = PenaltySpec(), init=None, *,
                   n_series: int | None = None, step=None, eps=DEFAULT_EPS,
                   max_iter=DEFAULT_MAX_ITER, l1_bound=None):
    """Solve every response row of ``Y`` against ``[Z; X]``.

    Returns the ``rows x (kp + kq)`` coefficient matrix and per-row diagnostics.
    """
    sys_ = RegressionSystem.build(Y, Z, X, d=n_series, step=step)
    return sys_.solve(penalty, init, eps, max_iter, l1_bound)
