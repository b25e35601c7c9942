"""Lag-polynomial algebra and the VARMA equivalence-class utilities.

Conventions
-----------
An AR-type polynomial stores ``A_1..A_p`` of ``I - A_1 L - ... - A_p L^p`` and an
MA-type polynomial stores ``B_1..B_q`` of ``I + B_1 L + ... + B_q L^q``.  The
identity coefficient at ``L^0`` is never stored.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DomainError, InvalidInputError

AR = "AR"
MA = "MA"

STABILITY_MARGIN = 1.0 - 1e-8
DEFAULT_TRUNCATION = 200


def _as_coeff_stack(coeffs, dim=None) -> np.ndarray:
    if isinstance(coeffs, np.ndarray) and coeffs.ndim == 3:
        arr = np.array(coeffs, dtype=float)
    else:
        mats = [np.atleast_2d(np.asarray(c, dtype=float)) for c in coeffs]
        if not mats:
            if dim is None:
                raise InvalidInputError("dim is required for an order-0 polynomial")
            return np.zeros((0, dim, dim))
        arr = np.stack(mats)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise InvalidInputError(f"coefficients must be square matrices, got shape {arr.shape}")
    if dim is not None and arr.shape[0] and arr.shape[1] != dim:
        raise InvalidInputError(f"coefficients are {arr.shape[1]}x{arr.shape[1]}, expected {dim}x{dim}")
    return arr


@dataclass(frozen=True)
class LagPolynomial:
    """Matrix polynomial in the lag operator with an implicit identity at lag 0.

    Parameters
    ----------
    coeffs : array of shape (order, dim, dim) or sequence of square matrices
    convention : ``"AR"`` for ``I - sum A_l L^l`` or ``"MA"`` for ``I + sum A_l L^l``
    dim : required only when ``coeffs`` is empty
    """

    coeffs: np.ndarray
    convention: str = AR
    dim: int = field(default=None)

    def __post_init__(self):
        if self.convention not in (AR, MA):
            raise InvalidInputError(f"unknown sign convention {self.convention!r}")
        arr = _as_coeff_stack(self.coeffs, self.dim)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("lag polynomial has non-finite coefficients")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "dim", int(arr.shape[1]))

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, lag: int) -> np.ndarray:
        """Stored coefficient at ``lag`` (1-based); zero beyond the order."""
        if lag < 1:
            raise IndexError("stored coefficients start at lag 1")
        if lag > self.order:
            return np.zeros((self.dim, self.dim))
        return self.coeffs[lag - 1]

    def operator_coeffs(self, order: int | None = None) -> np.ndarray:
        """Signed operator coefficients ``C_0 = I, C_1, ...`` padded or cut to ``order``."""
        order = self.order if order is None else order
        out = np.zeros((order + 1, self.dim, self.dim))
        out[0] = np.eye(self.dim)
        n = min(order, self.order)
        sign = -1.0 if self.convention == AR else 1.0
        out[1:n + 1] = sign * self.coeffs[:n]
        return out

    def block(self) -> np.ndarray:
        """Coefficients side by side, ``[A_1 ... A_order]`` (dim x dim*order)."""
        if self.order == 0:
            return np.zeros((self.dim, 0))
        return np.concatenate(list(self.coeffs), axis=1)

    @classmethod
    def from_block(cls, block, dim: int, convention: str = AR) -> "LagPolynomial":
        block = np.asarray(block, dtype=float).reshape(dim, -1)
        if block.shape[1] % dim:
            raise InvalidInputError("block width is not a multiple of dim")
        order = block.shape[1] // dim
        coeffs = block.reshape(dim, order, dim).transpose(1, 0, 2)
        return cls(coeffs, convention, dim)

    @classmethod
    def zero(cls, dim: int, order: int = 0, convention: str = AR) -> "LagPolynomial":
        return cls(np.zeros((order, dim, dim)), convention, dim)


class SpectralReport(NamedTuple):
    ok: bool
    radius: float


def companion_matrix(poly: LagPolynomial) -> np.ndarray:
    """dp x dp companion matrix whose eigenvalues are the inverse roots of ``det poly(z)``."""
    d, p = poly.dim, poly.order
    # Root condition for I + sum B_l z^l is that of I - sum (-B_l) z^l.
    lead = poly.coeffs if poly.convention == AR else -poly.coeffs
    comp = np.zeros((d * p, d * p))
    comp[:d, :] = np.concatenate(list(lead), axis=1)
    if p > 1:
        comp[d:, :-d] = np.eye(d * (p - 1))
    return comp


def spectral_radius(poly: LagPolynomial) -> float:
    if poly.order == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(poly)))))


def check_stable(poly: LagPolynomial) -> SpectralReport:
    """Stability of an AR polynomial: companion spectral radius below one."""
    if poly.convention != AR:
        raise InvalidInputError("check_stable expects an AR-convention polynomial")
    radius = spectral_radius(poly)
    return SpectralReport(radius < STABILITY_MARGIN, radius)


def check_invertible(poly: LagPolynomial) -> SpectralReport:
    """Invertibility of an MA polynomial: companion spectral radius below one."""
    if poly.convention != MA:
        raise InvalidInputError("check_invertible expects an MA-convention polynomial")
    radius = spectral_radius(poly)
    return SpectralReport(radius < STABILITY_MARGIN, radius)


@dataclass(frozen=True)
class VarmaModel:
    """``Phi(L) y_t = Theta(L) a_t`` with innovation covariance ``sigma_a``."""

    phi: LagPolynomial
    theta: LagPolynomial
    sigma_a: np.ndarray = None

    def __post_init__(self):
        if self.phi.convention != AR or self.theta.convention != MA:
            raise InvalidInputError("phi must use the AR and theta the MA convention")
        if self.phi.dim != self.theta.dim:
            raise InvalidInputError("phi and theta dimensions differ")
        d = self.phi.dim
        sigma = np.eye(d) if self.sigma_a is None else np.array(self.sigma_a, dtype=float)
        if sigma.shape != (d, d):
            raise InvalidInputError(f"sigma_a must be {d}x{d}")
        if not np.all(np.isfinite(sigma)) or not np.allclose(sigma, sigma.T, atol=1e-12):
            raise InvalidInputError("sigma_a must be finite and symmetric")
        if np.linalg.eigvalsh(sigma).min() <= 0:
            raise InvalidInputError("sigma_a must be positive definite")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma_a", sigma)

    @classmethod
    def from_matrices(cls, phi: Sequence, theta: Sequence = (), sigma_a=None, dim=None):
        if dim is None:
            first = list(phi) + list(theta)
            dim = np.atleast_2d(first[0]).shape[0] if first else np.asarray(sigma_a).shape[0]
        return cls(LagPolynomial(phi, AR, dim), LagPolynomial(theta, MA, dim), sigma_a)

    @property
    def dim(self) -> int:
        return self.phi.dim

    @property
    def p(self) -> int:
        return self.phi.order

    @property
    def q(self) -> int:
        return self.theta.order

    @property
    def is_stable(self) -> bool:
        return check_stable(self.phi).ok

    @property
    def is_invertible(self) -> bool:
        return check_invertible(self.theta).ok

    def beta(self) -> np.ndarray:
        """Stacked ``[Phi_1 : ... : Phi_p : Theta_1 : ... : Theta_q]^T`` of shape d(p+q) x d."""
        return np.concatenate([self.phi.block(), self.theta.block()], axis=1).T


@dataclass(frozen=True)
class PanelData:
    """T x d observations, rows in ascending time order."""

    values: np.ndarray
    names: tuple = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise InvalidInputError(f"panel must be a non-empty T x d matrix, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("panel contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        names = self.names
        if names is None:
            names = tuple(f"y{j + 1}" for j in range(vals.shape[1]))
        names = tuple(str(n) for n in names)
        if len(names) != vals.shape[1]:
            raise InvalidInputError("number of names does not match number of series")
        object.__setattr__(self, "names", names)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def head(self, t: int) -> "PanelData":
        """First ``t`` observations."""
        return PanelData(self.values[:t], self.names)


def invert_to_var(model: VarmaModel, k: int) -> LagPolynomial:
    """``Pi_1..Pi_k`` of ``Pi(L) = Theta(L)^{-1} Phi(L)``.

    With ``P_0 = I`` and ``P_t = -Pi_t`` the convolution ``Theta(L) Pi(L) = Phi(L)``
    gives ``Pi_t = Phi_t + Theta_t - sum_{m=1}^{min(t-1,q)} Theta_m Pi_{t-m}``.
    """
    if k < 1:
        raise InvalidInputError("truncation order k must be positive")
    rep = check_invertible(model.theta)
    if not rep.ok:
        raise DomainError(f"model is not invertible (MA spectral radius {rep.radius:.6g})")
    d, p, q = model.dim, model.p, model.q
    pis = np.zeros((k, d, d))
    for tau in range(1, k + 1):
        acc = model.phi[tau].copy() if tau <= p else np.zeros((d, d))
        if tau <= q:
            acc += model.theta[tau]
        for m in range(1, min(tau - 1, q) + 1):
            acc -= model.theta[m] @ pis[tau - m - 1]
        pis[tau - 1] = acc
    return LagPolynomial(pis, AR, d)


def lag_product(left: LagPolynomial, right: LagPolynomial, order: int) -> np.ndarray:
    """Signed operator coefficients of ``left(L) right(L)`` through lag ``order``."""
    a = left.operator_coeffs(order)
    b = right.operator_coeffs(order)
    out = np.zeros_like(a)
    for n in range(order + 1):
        for m in range(n + 1):
            out[n] += a[m] @ b[n - m]
    return out


def pi_equivalent(a: VarmaModel, b: VarmaModel, k: int = DEFAULT_TRUNCATION, tol: float = 1e-10) -> bool:
    """Whether two models share the VAR(inf) operator through lag ``k``."""
    if a.dim != b.dim:
        raise InvalidInputError("models have different dimensions")
    pa = invert_to_var(a, k).coeffs
    pb = invert_to_var(b, k).coeffs
    return bool(np.max(np.abs(pa - pb), initial=0.0) <= tol)


def ma_infinity(pi: LagPolynomial, k: int) -> np.ndarray:
    """``Psi_0..Psi_k`` of ``y_t = Pi(L)^{-1} a_t``; ``Psi_j = sum_t Pi_t Psi_{j-t}``."""
    d = pi.dim
    psi = np.zeros((k + 1, d, d))
    psi[0] = np.eye(d)
    for j in range(1, k + 1):
        acc = np.zeros((d, d))
        for tau in range(1, min(j, pi.order) + 1):
            acc += pi.coeffs[tau - 1] @ psi[j - tau]
        psi[j] = acc
    return psi


def autocovariances(psi: np.ndarray, sigma_a: np.ndarray, max_lag: int) -> np.ndarray:
    """``Gamma(h) = E[y_t y_{t-h}^T] = sum_j Psi_{j+h} Sigma Psi_j^T`` for h = 0..max_lag."""
    k = psi.shape[0] - 1
    d = psi.shape[1]
    out = np.zeros((max_lag + 1, d, d))
    right = psi @ sigma_a.T  # Psi_j Sigma^T, transposed below
    for h in range(max_lag + 1):
        if h > k:
            break
        out[h] = np.einsum("jab,jcb->ac", psi[h:], right[: k + 1 - h])
    return out


def yule_walker_moments(pi: LagPolynomial, sigma_a: np.ndarray, p: int, q: int, k: int = DEFAULT_TRUNCATION):
    """Population ``(Sigma_z, rho_zy)`` for ``z_t = [y_{t-1..t-p}; a_{t-1..t-q}]``."""
    d = pi.dim
    psi = ma_infinity(pi, k)
    gam = autocovariances(psi, sigma_a, max(p, 1))

    def cov_yy(i, j):  # E[y_{t-i} y_{t-j}^T] = Gamma(j - i)
        h = j - i
        return gam[h] if h >= 0 else gam[-h].T

    def cov_ya(i, m):  # E[y_{t-i} a_{t-m}^T]
        h = m - i
        return psi[h] @ sigma_a if 0 <= h <= k else np.zeros((d, d))

    n = p + q
    sz = np.zeros((d * n, d * n))
    rho = np.zeros((d * n, d))
    for r in range(n):
        rs = slice(r * d, (r + 1) * d)
        for c in range(n):
            cs = slice(c * d, (c + 1) * d)
            if r < p and c < p:
                blk = cov_yy(r + 1, c + 1)
            elif r < p:
                blk = cov_ya(r + 1, c - p + 1)
            elif c < p:
                blk = cov_ya(c + 1, r - p + 1).T
            else:
                blk = sigma_a if r == c else np.zeros((d, d))
            sz[rs, cs] = blk
        if r < p:
            rho[rs] = gam[r + 1].T  # E[y_{t-i} y_t^T]
        else:
            m = r - p + 1
            rho[rs] = (psi[m] @ sigma_a).T if m <= k else 0.0
    return sz, rho


def yule_walker_residual(model: VarmaModel, pi: LagPolynomial, k: int = DEFAULT_TRUNCATION) -> float:
    """``max |rho_zy - Sigma_z beta|`` with population moments of ``y = Pi(L)^{-1} a``.

    ``beta`` stacks the model's (Phi, Theta); moments use ``pi`` and the model's
    innovation covariance.  Zero (up to truncation) iff the model lies in the
    equivalence class of ``pi``.
    """
    if not check_stable(pi).ok:
        raise DomainError("pi does not define a stable process")
    if not model.is_invertible:
        raise DomainError("model is not invertible")
    if model.dim != pi.dim:
        raise InvalidInputError("model and pi dimensions differ")
    if model.p + model.q == 0:
        return 0.0
    sz, rho = yule_walker_moments(pi, model.sigma_a, model.p, model.q, k)
    return float(np.max(np.abs(rho - sz @ model.beta())))


def pi_tail_decay(pi: LagPolynomial) -> tuple[float, float]:
    """Fit ``log ||Pi_t|| ~ log C + t log rho``; returns ``(C, rho)``."""
    norms = np.linalg.norm(pi.coeffs, ord=2, axis=(1, 2))
    tau = np.arange(1, pi.order + 1)
    keep = norms > 1e-300
    if keep.sum() < 2:
        return (float(norms.max(initial=0.0)), 0.0)
    slope, intercept = np.polyfit(tau[keep], np.log(norms[keep]), 1)
    return float(np.exp(intercept)), float(np.exp(slope))
