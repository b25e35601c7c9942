"""Penalized identification targets within a VARMA equivalence class.

Given a VAR(inf) operator ``Pi(L) = I - sum Pi_tau L^tau``, every VARMA(p, q)
pair with ``Phi(L) = Theta(L) Pi(L)`` generates the same process.  Among
those, :func:`solve_target` returns the unique minimizer of a sparsity
penalty plus a small ridge term and :func:`limit_target` follows it as the
ridge weight goes to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AR, LagPolynomial, VarmaModel
from .exceptions import ConvergenceError, InfeasibleError, InvalidInputError
from .penalty import L1, _check_kind, penalty_value, prox

FEASIBILITY_TOL = 1e-6
SOLVER_TOL = 1e-8
LIMIT_TOL = 1e-5
ALPHA_SCHEDULE = tuple(10.0 ** -e for e in range(1, 9))


@dataclass(frozen=True)
class IdentProblem:
    """Orders, penalty and ridge weight for a target computed from ``pi``.

    ``weight_phi`` and ``weight_theta`` scale the AR and MA penalties.
    """

    pi: LagPolynomial
    p: int
    q: int
    kind: str = L1
    alpha: float = 1e-3
    weight_phi: float = 1.0
    weight_theta: float = 1.0

    def __post_init__(self):
        if self.pi.convention != AR:
            raise InvalidInputError("pi must use the AR sign convention")
        if self.p < 0 or self.q < 0:
            raise InvalidInputError("orders must be non-negative")
        if self.alpha < 0 or self.weight_phi < 0 or self.weight_theta < 0:
            raise InvalidInputError("alpha and penalty weights must be non-negative")
        _check_kind(self.kind)

    @property
    def d(self) -> int:
        return self.pi.dim

    @property
    def constraint_order(self) -> int:
        """Largest lag exponent carrying a non-trivial coefficient equation."""
        return max(self.p, self.q + self.pi.order)

    def with_alpha(self, alpha: float) -> "IdentProblem":
        return IdentProblem(self.pi, self.p, self.q, self.kind, alpha,
                            self.weight_phi, self.weight_theta)


@dataclass
class IdentTarget:
    phi: np.ndarray
    theta: np.ndarray
    alpha_used: float
    constraint_violation: float
    objective: float
    iterations: int = 0
    trajectory: list = field(default_factory=list)
    multipliers: np.ndarray | None = field(default=None, repr=False)

    @property
    def penalty_part(self) -> float:
        ridge = np.sum(self.phi ** 2) + np.sum(self.theta ** 2)
        return float(self.objective - 0.5 * self.alpha_used * ridge)

    def model(self) -> VarmaModel:
        d = self.phi.shape[0]
        phi = self.phi.reshape(d, -1, d).transpose(1, 0, 2)
        theta = self.theta.reshape(d, -1, d).transpose(1, 0, 2)
        return VarmaModel.from_matrices(phi, theta, dim=d)

    def to_dict(self):
        return {"phi": self.phi.tolist(), "theta": self.theta.tolist(),
                "alpha_used": self.alpha_used, "constraint_violation": self.constraint_violation,
                "objective": self.objective, "iterations": self.iterations,
                "trajectory": [[float(a), None if not np.isfinite(c) else float(c)]
                               for a, c in self.trajectory]}


def build_constraints(pi: LagPolynomial, p: int, q: int):
    """Coefficient-matching system ``x M = b`` shared by every response row.

    A row ``x = [phi_i, theta_i]`` stacks row ``i`` of ``Phi_1..Phi_p`` and
    ``Theta_1..Theta_q`` (lag-major).  Column block ``n`` encodes the lag-``n``
    coefficient of ``Phi(L) = Theta(L) Pi(L)``::

        -Phi_n - sum_m Theta_m P_{n-m} = P_n,   P_0 = I,  P_j = -Pi_j

    Returns ``(M, B)`` with ``M`` of shape ``(d(p+q), d K)`` and the right-hand
    sides ``B`` of shape ``(d, d K)``, one row per response.
    """
    d, k = pi.dim, pi.order
    K = max(p, q + k)
    P = np.zeros((K + 1, d, d))
    P[0] = np.eye(d)
    P[1:k + 1] = -pi.coeffs
    M = np.zeros((d * (p + q), d * K))
    for n in range(1, K + 1):
        cols = slice((n - 1) * d, n * d)
        if n <= p:
            M[(n - 1) * d:n * d, cols] = -np.eye(d)
        for m in range(1, min(q, n) + 1):
            if n - m <= k:
                M[d * p + (m - 1) * d:d * p + m * d, cols] = -P[n - m]
    B = np.concatenate([P[n] for n in range(1, K + 1)], axis=1) if K else np.zeros((d, 0))
    return M, B


class _AffineSet:
    """Residuals and least-squares solution of ``X M = B``."""

    def __init__(self, M, B):
        self.M, self.B = M, B
        self.pinv = np.linalg.pinv(M) if M.size else np.zeros((M.shape[1], M.shape[0]))

    def violation(self, X) -> float:
        if self.M.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(X @ self.M - self.B), initial=0.0))

    def least_squares(self):
        return self.B @ self.pinv if self.M.size else np.zeros((self.B.shape[0], self.M.shape[0]))


def _split(X, d, p):
    return X[:, : d * p], X[:, d * p:]


def _objective(problem: IdentProblem, X) -> float:
    d, p, q = problem.d, problem.p, problem.q
    phi, theta = _split(X, d, p)
    val = 0.0
    if p:
        val += problem.weight_phi * penalty_value(problem.kind, phi, p)
    if q:
        val += problem.weight_theta * penalty_value(problem.kind, theta, q)
    return val + 0.5 * problem.alpha * float(np.sum(X ** 2))


def _weights(problem: IdentProblem) -> np.ndarray:
    d, p, q = problem.d, problem.p, problem.q
    return np.concatenate([np.full(d * p, problem.weight_phi), np.full(d * q, problem.weight_theta)])


def _prox_row(problem: IdentProblem, s) -> np.ndarray:
    """Prox of the (unit-step) weighted penalty at a single row ``s``."""
    d, p, q = problem.d, problem.p, problem.q
    out = np.empty_like(s)
    if p:
        out[: d * p] = prox(problem.kind, s[: d * p], problem.weight_phi, p)
    if q:
        out[d * p:] = prox(problem.kind, s[d * p:], problem.weight_theta, q)
    return out


def _profile_jacobian(v, t: float) -> np.ndarray:
    """Jacobian of the nested suffix-group soft-threshold on one lag profile."""
    v = v.copy()
    s = v.size
    J = np.eye(s)
    for lag in range(s - 1, -1, -1):
        tail = v[lag:]
        nrm = float(np.sqrt(tail @ tail))
        step = np.eye(s)
        if nrm > t:
            step[lag:, lag:] = (1.0 - t / nrm) * np.eye(s - lag) + t * np.outer(tail, tail) / nrm ** 3
            v[lag:] *= 1.0 - t / nrm
        else:
            step[lag:, lag:] = 0.0
            v[lag:] = 0.0
        J = step @ J
    return J


def _prox_jacobian(problem: IdentProblem, s) -> np.ndarray:
    """An element of the generalized Jacobian of :func:`_prox_row` at ``s``."""
    d, p = problem.d, problem.p
    w = _weights(problem)
    if problem.kind == L1:
        return np.diag((np.abs(s) > w).astype(float))
    J = np.zeros((s.size, s.size))
    for offset, n_lags, t in ((0, p, problem.weight_phi), (d * p, problem.q, problem.weight_theta)):
        for j in range(d if n_lags else 0):
            idx = offset + np.arange(n_lags) * d + j
            J[np.ix_(idx, idx)] = _profile_jacobian(s[idx], t)
    return J


def _dual_row(problem: IdentProblem, M, b, tol: float, max_iter: int, lam0=None):
    """Maximize the smooth dual of one row by a damped semismooth Newton method.

    For multipliers ``lam`` the Lagrangian minimizer is ``prox(M lam) / alpha``,
    so every iterate is exactly optimal in the primal variable and only the
    constraint residual ``b - M^T x`` has to be driven to zero.  Rounding
    limits the attainable residual to roughly ``eps * |lam| / alpha``; the
    iteration stops once it no longer improves and returns the best iterate
    if that is within :data:`SOLVER_TOL`.
    """
    alpha = problem.alpha
    lam = np.zeros(M.shape[1]) if lam0 is None else np.array(lam0, dtype=float)

    def evaluate(lam):
        x = _prox_row(problem, M @ lam) / alpha
        r = b - x @ M
        g = _objective(problem, x[None, :]) + r @ lam
        return x, r, g

    x, r, g = evaluate(lam)
    lipschitz = float(np.linalg.norm(M, 2)) ** 2 / alpha
    best = (float(np.max(np.abs(r), initial=0.0)), x, lam)
    it = stalled = 0
    while it < max_iter and best[0] > tol and stalled < 20:
        it += 1
        H = M.T @ _prox_jacobian(problem, M @ lam) @ M / alpha
        scale = max(1.0, float(np.max(np.abs(np.diag(H)), initial=0.0)))
        mu = 1e-6 * scale * min(1.0, float(np.linalg.norm(r)))
        step = np.linalg.lstsq(H + mu * np.eye(H.shape[0]), r, rcond=None)[0]
        slope = float(r @ step)
        if slope <= 0.0:
            step, slope = r / lipschitz, float(r @ r) / lipschitz
        rnorm = float(np.linalg.norm(r))
        t = 1.0
        while True:
            x_new, r_new, g_new = evaluate(lam + t * step)
            # near the rounding floor the dual value is noisy; a shrinking
            # residual is accepted as progress too
            if (g_new >= g + 1e-4 * t * slope or t < 1e-30
                    or np.linalg.norm(r_new) <= (1.0 - 1e-4 * t) * rnorm):
                break
            t *= 0.5
        gained = g_new > g
        lam, x, r, g = lam + t * step, x_new, r_new, g_new
        res = float(np.max(np.abs(r), initial=0.0))
        improved = res < best[0]
        if improved:
            best = (res, x, lam)
        stalled = 0 if improved or gained else stalled + 1
    res, x, lam = best
    if res > SOLVER_TOL:
        raise ConvergenceError(f"dual Newton iterations stalled at residual {res:.3g}", [res])
    return x, lam, it


def solve_target(problem: IdentProblem, init=None, tol: float = 1e-11,
                 max_iter: int = 2000) -> IdentTarget:
    """Penalized, ridge-regularized target for ``alpha > 0``.

    Each response row is solved independently through its dual, a concave
    function whose gradient is the constraint residual.  ``init`` optionally
    gives starting multipliers, one row of length ``d * constraint_order`` per
    response; the strongly convex problem has the same solution from any start.
    """
    if problem.alpha <= 0:
        raise InvalidInputError("alpha must be positive; use limit_target for the alpha -> 0 limit")
    d, p, q = problem.d, problem.p, problem.q
    M, B = build_constraints(problem.pi, p, q)
    aff = _AffineSet(M, B)
    resid = aff.violation(aff.least_squares())
    if resid > FEASIBILITY_TOL:
        raise InfeasibleError(f"Pi admits no VARMA({p},{q}) representation "
                              f"(least-squares residual {resid:.3g})", resid)
    n = d * (p + q)
    X = np.zeros((d, n))
    lam = np.zeros((d, M.shape[1]))
    iters = 0
    if n and M.shape[1]:
        for i in range(d):
            lam0 = None if init is None else np.asarray(init, dtype=float)[i]
            X[i], lam[i], it = _dual_row(problem, M, B[i], tol, max_iter, lam0)
            iters = max(iters, it)
    violation = aff.violation(X)
    if violation > SOLVER_TOL:
        raise ConvergenceError(f"constraint violation {violation:.3g} above {SOLVER_TOL}", [violation])
    phi, theta = _split(X, d, p)
    return IdentTarget(phi.copy(), theta.copy(), problem.alpha, violation,
                       _objective(problem, X), iters, multipliers=lam)


def limit_target(problem: IdentProblem, schedule=ALPHA_SCHEDULE, tol: float = LIMIT_TOL,
                 **solver_kw) -> IdentTarget:
    """Follow :func:`solve_target` along a decreasing ``alpha`` schedule.

    Stops once two successive targets differ by less than ``tol`` in Frobenius
    norm and returns the last one; ``trajectory`` records ``(alpha, change)``.
    """
    prev = None
    trajectory = []
    init = None
    for alpha in schedule:
        # multipliers converge as alpha -> 0, so each solve starts from the last
        tgt = solve_target(problem.with_alpha(alpha), init=init, **solver_kw)
        init = tgt.multipliers
        X = np.hstack([tgt.phi, tgt.theta])
        change = float("inf") if prev is None else float(np.linalg.norm(X - prev))
        trajectory.append((alpha, change))
        if change < tol:
            tgt.trajectory = trajectory
            return tgt
        prev = X
    raise ConvergenceError(f"targets still moving after {len(trajectory)} values of alpha", trajectory)

