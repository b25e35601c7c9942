"""Compiled inner loops for the row-wise accelerated proximal gradient solver."""
import math

import numpy as np
from numba import njit

KIND_L1 = 0
KIND_HLAG = 1

STATUS_OK = 0
STATUS_MAXITER = 1
STATUS_DIVERGED = 2


@njit(cache=True)
def prox_block(x, off, n_lags, d, t, kind):
    """In-place prox of ``t * penalty`` on ``x[off : off + n_lags*d]``."""
    if t <= 0.0 or n_lags == 0:
        return
    if kind == KIND_L1:
        for i in range(off, off + n_lags * d):
            v = x[i]
            a = abs(v) - t
            if a > 0.0:
                x[i] = a if v > 0.0 else -a
            else:
                x[i] = 0.0
        return
    fac = np.empty(n_lags)
    for j in range(d):
        r2 = 0.0
        for lag in range(n_lags - 1, -1, -1):
            xl = x[off + lag * d + j]
            nrm = math.sqrt(xl * xl + r2)
            f = 1.0 - t / nrm if nrm > t else 0.0
            fac[lag] = f
            r2 = (f * nrm) ** 2
        c = 1.0
        for lag in range(n_lags):
            c *= fac[lag]
            x[off + lag * d + j] *= c


@njit(cache=True)
def penalty_block(x, off, n_lags, d, kind):
    total = 0.0
    if kind == KIND_L1:
        for i in range(off, off + n_lags * d):
            total += abs(x[i])
        return total
    for j in range(d):
        r2 = 0.0
        for lag in range(n_lags - 1, -1, -1):
            v = x[off + lag * d + j]
            r2 += v * v
            total += math.sqrt(r2)
    return total


@njit(cache=True)
def project_l1(x, radius):
    k = x.size
    s = 0.0
    for i in range(k):
        s += abs(x[i])
    if s <= radius:
        return
    u = np.sort(np.abs(x))[::-1]
    css = 0.0
    theta = 0.0
    for i in range(k):
        css += u[i]
        th = (css - radius) / (i + 1.0)
        if u[i] > th:
            theta = th
    for i in range(k):
        a = abs(x[i]) - theta
        if a > 0.0:
            x[i] = a if x[i] > 0.0 else -a
        else:
            x[i] = 0.0


@njit(cache=True)
def _accumulate(u, b, lo, hi, G):
    """u = b[lo:hi] @ G[lo:hi, :], skipping zero coefficients."""
    k = G.shape[1]
    for i in range(k):
        u[i] = 0.0
    for r in range(lo, hi):
        br = b[r]
        if br != 0.0:
            for i in range(k):
                u[i] += br * G[r, i]


@njit(cache=True)
def row_objective(b, u, c, yy, kp, d, lam_phi, lam_theta, alpha, kind):
    """Objective at ``b`` given ``u = b @ G``."""
    k = b.size
    quad = 0.0
    lin = 0.0
    sq_phi = 0.0
    sq_theta = 0.0
    for i in range(k):
        quad += b[i] * u[i]
        lin += b[i] * c[i]
        if i < kp:
            sq_phi += b[i] * b[i]
        else:
            sq_theta += b[i] * b[i]
    obj = 0.5 * (yy - 2.0 * lin + quad)
    obj += lam_phi * penalty_block(b, 0, kp // d, d, kind)
    obj += lam_theta * penalty_block(b, kp, (k - kp) // d, d, kind)
    obj += 0.5 * alpha * (lam_phi * sq_phi + lam_theta * sq_theta)
    return obj


@njit(cache=True)
def fista_row(G, c, yy, b0, kp, d, step, lam_phi, lam_theta, alpha, kind,
              eps, max_iter, l1_bound):
    """Accelerated proximal gradient for one response row.

    ``G = A A^T`` and ``c = y A^T`` with ``A = [Z; X]``; the first ``kp`` entries
    of the coefficient row belong to the AR block.  The AR block is updated
    first and the MA gradient is taken at the fresh AR iterate.

    Returns ``(b, iterations, status, objective, delta_inf, initial_objective)``.
    """
    k = b0.size
    kq = k - kp
    p_lags = kp // d
    q_lags = kq // d
    b = b0.copy()
    b_prev = b0.copy()
    b_new = np.empty(k)
    u_phi = np.empty(k)
    u_theta = np.empty(k)
    _accumulate(u_phi, b, 0, kp, G)
    _accumulate(u_theta, b, kp, k, G)
    u_phi_prev = u_phi.copy()
    u_theta_prev = u_theta.copy()
    u_phi_new = np.empty(k)
    u_theta_new = np.empty(k)
    u_sum = u_phi + u_theta
    obj0 = row_objective(b, u_sum, c, yy, kp, d, lam_phi, lam_theta, alpha, kind)
    obj_last = obj0
    increases = 0
    shrink_phi = 1.0 / (1.0 + alpha * step * lam_phi)
    shrink_theta = 1.0 / (1.0 + alpha * step * lam_theta)
    r = 3
    it = 0
    status = STATUS_MAXITER
    delta = 0.0
    obj = obj0
    while it < max_iter:
        it += 1
        w = (r - 2.0) / (r + 1.0)
        # AR block: extrapolate, gradient at (phi_hat, theta[r-1]), prox, shrink
        for i in range(kp):
            phat = b[i] + w * (b[i] - b_prev[i])
            g = (1.0 + w) * u_phi[i] - w * u_phi_prev[i] + u_theta[i] - c[i]
            b_new[i] = phat - step * g
        prox_block(b_new, 0, p_lags, d, step * lam_phi, kind)
        for i in range(kp):
            b_new[i] *= shrink_phi
        _accumulate(u_phi_new, b_new, 0, kp, G)
        # MA block: gradient at (phi[r], theta_hat)
        for i in range(kp, k):
            that = b[i] + w * (b[i] - b_prev[i])
            g = u_phi_new[i] + (1.0 + w) * u_theta[i] - w * u_theta_prev[i] - c[i]
            b_new[i] = that - step * g
        prox_block(b_new, kp, q_lags, d, step * lam_theta, kind)
        for i in range(kp, k):
            b_new[i] *= shrink_theta
        if l1_bound > 0.0:
            project_l1(b_new, l1_bound)
            _accumulate(u_phi_new, b_new, 0, kp, G)
        _accumulate(u_theta_new, b_new, kp, k, G)

        delta = 0.0
        for i in range(k):
            dv = abs(b_new[i] - b[i])
            if dv > delta:
                delta = dv
        for i in range(k):
            u_sum[i] = u_phi_new[i] + u_theta_new[i]
        obj = row_objective(b_new, u_sum, c, yy, kp, d, lam_phi, lam_theta, alpha, kind)
        if not math.isfinite(obj) or obj > 1e3 * abs(obj0) + 1e-12:
            status = STATUS_DIVERGED
            b[:] = b_new
            break
        if obj > obj_last:
            increases += 1
        else:
            increases = 0
        obj_last = obj

        if increases >= 2:
            # momentum restart
            b_prev[:] = b_new
            u_phi_prev[:] = u_phi_new
            u_theta_prev[:] = u_theta_new
            increases = 0
            r = 3
        else:
            b_prev[:] = b
            u_phi_prev[:] = u_phi
            u_theta_prev[:] = u_theta
            r += 1
        b[:] = b_new
        u_phi[:] = u_phi_new
        u_theta[:] = u_theta_new
        if delta <= eps:
            status = STATUS_OK
            break
    return b, it, status, obj, delta, obj0


@njit(cache=True)
def prox_grad_step(G, c, b, kp, d, step, lam_phi, lam_theta, alpha, kind):
    """One plain (non-extrapolated) Gauss-Seidel proximal-gradient step from ``b``."""
    k = b.size
    out = b.copy()
    u = np.empty(k)
    _accumulate(u, b, 0, k, G)
    for i in range(kp):
        out[i] = b[i] - step * (u[i] - c[i])
    prox_block(out, 0, kp // d, d, step * lam_phi, kind)
    for i in range(kp):
        out[i] /= 1.0 + alpha * step * lam_phi
    u2 = np.empty(k)
    tmp = b.copy()
    tmp[:kp] = out[:kp]
    _accumulate(u2, tmp, 0, k, G)
    for i in range(kp, k):
        out[i] = b[i] - step * (u2[i] - c[i])
    prox_block(out, kp, (k - kp) // d, d, step * lam_theta, kind)
    for i in range(kp, k):
        out[i] /= 1.0 + alpha * step * lam_theta
    return out
