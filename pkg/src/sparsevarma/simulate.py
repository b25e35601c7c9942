"""Gaussian VARMA sample paths and the benchmark data-generating processes."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import AR, MA, LagPolynomial, PanelData, VarmaModel, check_invertible, check_stable
from .exceptions import DomainError, InvalidInputError

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"

# Dense and sparse members of one equivalence class (d = 2, p = q = 1).
FIG1_DENSE_PHI = np.array([[0.2, 0.05], [0.0, 0.1]])
FIG1_DENSE_THETA = -np.array([[0.0, 0.25], [0.0, 0.1]])
FIG1_SPARSE_PHI = np.array([[0.2, 0.0], [0.0, 0.0]])
FIG1_SPARSE_THETA = -np.array([[0.0, 0.2], [0.0, 0.0]])


@dataclass(frozen=True)
class DgpSpec:
    """Diagonal-AR, banded-MA design: ``Phi_l = (0.4/l) I`` and banded ``Theta_m``."""

    d: int = 10
    p: int = 4
    q: int = 4
    theta_strength: float = 0.8
    sigma_a: tuple | None = None
    burn_in: int = 200
    seed: int = 0

    def to_dict(self):
        return asdict(self)


def banded_ma(d: int, m: int, theta: float) -> np.ndarray:
    """Banded ``Theta_m``: theta/m on the diagonal, /10 and /100 on the two bands."""
    out = np.zeros((d, d))
    for offset, scale in ((0, 1.0), (1, 10.0), (2, 100.0)):
        val = theta / (scale * m)
        idx = np.arange(d - offset)
        out[idx, idx + offset] = val
        out[idx + offset, idx] = val
    return out


def build_dgp(spec: DgpSpec) -> VarmaModel:
    if spec.d < 1 or spec.p < 0 or spec.q < 0 or spec.theta_strength < 0:
        raise InvalidInputError(f"invalid DGP spec {spec}")
    phi = [np.eye(spec.d) * (0.4 / ell) for ell in range(1, spec.p + 1)]
    theta = [banded_ma(spec.d, m, spec.theta_strength) for m in range(1, spec.q + 1)]
    sigma = None if spec.sigma_a is None else np.asarray(spec.sigma_a, dtype=float)
    model = VarmaModel(LagPolynomial(phi, AR, spec.d), LagPolynomial(theta, MA, spec.d), sigma)
    stab, inv = check_stable(model.phi), check_invertible(model.theta)
    if not (stab.ok and inv.ok):
        raise DomainError(f"DGP is not stable/invertible (AR radius {stab.radius:.4f}, "
                          f"MA radius {inv.radius:.4f})")
    return model


def fig1_model(which: str = "dense") -> VarmaModel:
    if which == "dense":
        return VarmaModel.from_matrices([FIG1_DENSE_PHI], [FIG1_DENSE_THETA])
    if which == "sparse":
        return VarmaModel.from_matrices([FIG1_SPARSE_PHI], [FIG1_SPARSE_THETA])
    raise InvalidInputError(f"unknown toy model {which!r}")


def replication_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Independent child stream for replication ``index``."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))


def simulate_path(model: VarmaModel, T: int, burn_in: int = 200, seed=0):
    """Draw ``T`` observations after ``burn_in`` steps from a zero initial state.

    Returns ``(PanelData, innovations)`` where ``innovations[t]`` is the shock
    entering ``y[t]``.
    """
    if T < 1 or burn_in < 0:
        raise InvalidInputError("T must be positive and burn_in non-negative")
    if not model.is_stable or not model.is_invertible:
        raise DomainError("model must be stable and invertible")
    d, p, q = model.dim, model.p, model.q
    n = T + burn_in
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(model.sigma_a)
    a = rng.standard_normal((n, d)) @ chol.T
    y = np.zeros((n, d))
    phi, theta = model.phi.coeffs, model.theta.coeffs
    for t in range(n):
        acc = a[t].copy()
        for ell in range(1, min(p, t) + 1):
            acc += phi[ell - 1] @ y[t - ell]
        for m in range(1, min(q, t) + 1):
            acc += theta[m - 1] @ a[t - m]
        y[t] = acc
    return PanelData(y[burn_in:]), a[burn_in:].copy()
