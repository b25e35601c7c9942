"""Convex regularizers, their proximal operators and penalty grids.

Coefficient rows are laid out lag-major: entry ``l*d + j`` of a row holds the
coefficient of series ``j`` at lag ``l+1``.  The *lag profile* of series ``j`` is
the sub-vector ``(row[j], row[d+j], ..., row[(s-1)d+j])``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

L1 = "l1"
HLAG = "hlag"
KINDS = (L1, HLAG)


def _check_kind(kind: str) -> str:
    k = str(kind).lower()
    if k not in KINDS:
        raise InvalidInputError(f"unknown penalty kind {kind!r}; expected one of {KINDS}")
    return k


@dataclass(frozen=True)
class PenaltySpec:
    kind: str = HLAG
    lambda_phi: float = 0.0
    lambda_theta: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", _check_kind(self.kind))
        for name in ("lambda_phi", "lambda_theta", "alpha"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise InvalidInputError(f"{name} must be finite and non-negative, got {v}")
            object.__setattr__(self, name, v)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lambda_phi": self.lambda_phi,
                "lambda_theta": self.lambda_theta, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "PenaltySpec":
        return cls(d.get("kind", HLAG), d.get("lambda_phi", 0.0),
                   d.get("lambda_theta", 0.0), d.get("alpha", 0.0))


@dataclass(frozen=True)
class LambdaGrid:
    """Descending, log-linearly spaced penalty values spanning two decades."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1 or np.any(v <= 0) or np.any(np.diff(v) > 0):
            raise InvalidInputError("grid values must be positive and descending")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def make_grid(lmax: float, size: int = 10, ratio: float = 100.0) -> LambdaGrid:
    """Geometric grid from ``lmax`` down to ``lmax / ratio``."""
    if not np.isfinite(lmax) or lmax <= 0:
        raise InvalidInputError(f"lmax must be positive, got {lmax}")
    if size < 1:
        raise InvalidInputError("grid size must be at least 1")
    if size == 1:
        return LambdaGrid(np.array([float(lmax)]))
    return LambdaGrid(lmax * np.power(ratio, -np.arange(size) / (size - 1)))


def lambda_max(Y, X) -> float:
    """``max |X Y^T|``: smallest penalty with the all-zero solution (L1 KKT bound).

    ``Y`` is responses (rows) by time, ``X`` regressors by time.  Also a valid
    upper bound for HLag since every coordinate is its own deepest group.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if Y.size == 0 or X.size == 0:
        raise InvalidInputError("lambda_max needs non-empty responses and regressors")
    if Y.shape[1] != X.shape[1]:
        raise InvalidInputError(f"Y has {Y.shape[1]} columns but X has {X.shape[1]}")
    return float(np.max(np.abs(X @ Y.T)))


def _profiles(v: np.ndarray, n_lags):
    """View of ``v`` with shape (..., n_lags, d); a missing n_lags means one profile."""
    if n_lags is None:
        return v[..., :, None]
    if v.shape[-1] % n_lags:
        raise InvalidInputError(f"length {v.shape[-1]} is not a multiple of {n_lags} lags")
    return v.reshape(v.shape[:-1] + (n_lags, v.shape[-1] // n_lags))


def penalty_value(kind: str, B, n_lags: int | None = None) -> float:
    """L1 or HLag penalty of a coefficient block.

    HLag sums, for every profile, the Euclidean norms of all lag suffixes
    ``(b_l, ..., b_s)``.  ``n_lags`` defaults to treating each row as a single
    profile.
    """
    kind = _check_kind(kind)
    B = np.asarray(B, dtype=float)
    if kind == L1:
        if n_lags is not None and B.shape[-1] % n_lags:
            raise InvalidInputError(f"block width {B.shape[-1]} is not a multiple of {n_lags}")
        return float(np.abs(B).sum())
    prof = _profiles(B, n_lags)
    suffix_sq = np.cumsum(prof[..., ::-1, :] ** 2, axis=-2)
    return float(np.sqrt(suffix_sq).sum())


def soft_threshold(v, t):
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox(kind: str, v, t: float, n_lags: int | None = None) -> np.ndarray:
    """Proximal operator of ``t * penalty`` at ``v``.

    For HLag the nested groups of a profile are soft-thresholded one at a time,
    starting from the deepest lag; for a chain of nested groups this composition
    is the exact prox.
    """
    kind = _check_kind(kind)
    if t < 0:
        raise InvalidInputError("prox weight must be non-negative")
    v = np.array(v, dtype=float)
    if t == 0:
        return v
    if kind == L1:
        return soft_threshold(v, t)
    prof = _profiles(v, n_lags)  # view into v
    s = prof.shape[-2]
    for lag in range(s - 1, -1, -1):
        tail = prof[..., lag:, :]
        nrm = np.sqrt(np.sum(tail ** 2, axis=-2, keepdims=True))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(nrm > t, 1.0 - t / nrm, 0.0)
        tail *= scale
    return v


def elastic_shrink(v, alpha: float, lam: float) -> np.ndarray:
    """Ridge shrink ``v / (1 + alpha*lam)``."""
    if alpha < 0 or lam < 0:
        raise InvalidInputError("alpha and lambda must be non-negative")
    return np.asarray(v, dtype=float) / (1.0 + alpha * lam)


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{x : ||x||_1 <= radius}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise InvalidInputError("radius must be non-negative")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, u.size + 1)
    rho = np.nonzero(u * idx > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)
