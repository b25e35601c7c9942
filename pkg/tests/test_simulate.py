import numpy as np
import pytest

from sparsevarma.core import VarmaModel, autocovariances, invert_to_var, ma_infinity
from sparsevarma.exceptions import DomainError, InvalidInputError
from sparsevarma.simulate import DgpSpec, banded_ma, build_dgp, fig1_model, replication_seed, simulate_path


def test_banded_theta_entries():
    m = build_dgp(DgpSpec(d=10, p=4, q=4, theta_strength=0.8))
    th1 = m.theta[1]
    assert np.allclose(np.diag(th1), 0.8)
    assert np.allclose(np.diag(th1, 1), 0.08) and np.allclose(np.diag(th1, -1), 0.08)
    assert np.allclose(np.diag(th1, 2), 0.008) and np.allclose(np.diag(th1, -2), 0.008)
    assert np.all(np.diag(th1, 3) == 0)
    assert np.allclose(np.diag(m.theta[2]), 0.4)


def test_theta_zero_is_var():
    m = build_dgp(DgpSpec(theta_strength=0.0))
    assert not np.any(m.theta.coeffs)


def test_phi_diagonal():
    m = build_dgp(DgpSpec(p=1))
    np.testing.assert_array_equal(m.phi[1], 0.4 * np.eye(10))
    m = build_dgp(DgpSpec(p=3))
    np.testing.assert_allclose(m.phi[3], 0.4 / 3 * np.eye(10))


def test_unstable_design_rejected():
    with pytest.raises(DomainError):
        build_dgp(DgpSpec(d=3, q=1, theta_strength=5.0))


def test_invalid_spec():
    with pytest.raises(InvalidInputError):
        build_dgp(DgpSpec(d=0))


def test_banded_symmetric():
    b = banded_ma(6, 2, 0.6)
    np.testing.assert_array_equal(b, b.T)


def test_determinism():
    m = fig1_model("dense")
    a1, e1 = simulate_path(m, 100, 50, 42)
    a2, e2 = simulate_path(m, 100, 50, 42)
    np.testing.assert_array_equal(a1.values, a2.values)
    np.testing.assert_array_equal(e1, e2)
    a3, _ = simulate_path(m, 100, 50, 43)
    assert not np.array_equal(a1.values, a3.values)


def test_white_noise_covariance():
    wn = VarmaModel.from_matrices([np.zeros((2, 2))])
    data, innov = simulate_path(wn, 20_000, 0, 1)
    np.testing.assert_array_equal(data.values, innov)
    np.testing.assert_allclose(np.cov(data.values.T), np.eye(2), atol=0.05)


def test_ar1_autocorrelation():
    m = VarmaModel.from_matrices([[[0.5]]])
    T = 5000
    y = simulate_path(m, T, 200, 3)[0].values[:, 0]
    rho = np.corrcoef(y[1:], y[:-1])[0, 1]
    assert abs(rho - 0.5) <= 3 / np.sqrt(T)


def test_innovations_drive_recursion():
    m = fig1_model("dense")
    data, a = simulate_path(m, 50, 30, 9)
    y = data.values
    for t in range(1, 50):
        np.testing.assert_allclose(y[t], m.phi[1] @ y[t - 1] + a[t] + m.theta[1] @ a[t - 1], atol=1e-14)


def test_population_gamma0():
    m = fig1_model("dense")
    y = simulate_path(m, 50_000, 200, 5)[0].values
    psi = ma_infinity(invert_to_var(m, 200), 200)
    gamma0 = autocovariances(psi, m.sigma_a, 0)[0]
    emp = y.T @ y / y.shape[0]
    assert np.linalg.norm(emp - gamma0) <= 0.02 * np.linalg.norm(gamma0)


def test_mean_near_zero():
    y = simulate_path(build_dgp(DgpSpec(d=3, q=1)), 20_000, 200, 2)[0].values
    # long-run standard deviation is about 3 here, so 0.1 is roughly 5 standard errors
    assert np.all(np.abs(y.mean(axis=0)) < 0.1)


def test_replication_seeds_independent():
    a = np.random.default_rng(replication_seed(0, 1)).standard_normal(3)
    b = np.random.default_rng(replication_seed(0, 2)).standard_normal(3)
    c = np.random.default_rng(replication_seed(0, 1)).standard_normal(3)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_bad_lengths():
    with pytest.raises(InvalidInputError):
        simulate_path(fig1_model(), 0)
