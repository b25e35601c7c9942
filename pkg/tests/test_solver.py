import numpy as np
import pytest

from oracles import lasso_cd, lasso_objective
from sparsevarma.exceptions import InvalidInputError
from sparsevarma.penalty import HLAG, L1, PenaltySpec, lambda_max
from sparsevarma.pipeline import lag_design
from sparsevarma.simulate import fig1_model, simulate_path
from sparsevarma.solver import RegressionSystem, RowProblem, solve_all_rows, solve_row, spectral_step


def _instance(rng, k=6, n=80, d=1):
    Z = rng.standard_normal((k, n))
    y = rng.standard_normal(k) @ Z * 0.5 + rng.standard_normal(n)
    return y, Z


class TestSpectralStep:
    def test_identity(self):
        assert spectral_step(np.eye(4)) == pytest.approx(1.0)

    def test_scaled_identity(self):
        assert spectral_step(2 * np.eye(3)) == pytest.approx(0.25)

    def test_matches_svd(self, rng):
        A = rng.standard_normal((5, 20))
        sigma = np.linalg.svd(A, compute_uv=False)[0]
        assert spectral_step(A) == pytest.approx(1 / sigma ** 2, rel=1e-5)

    def test_stacked(self, rng):
        Z, X = rng.standard_normal((3, 30)), rng.standard_normal((2, 30))
        sigma = np.linalg.svd(np.vstack([Z, X]), compute_uv=False)[0]
        assert spectral_step(Z, X) == pytest.approx(1 / sigma ** 2, rel=1e-5)

    def test_all_zero(self):
        with pytest.raises(InvalidInputError):
            spectral_step(np.zeros((2, 5)))


class TestSolveRow:
    def test_unpenalized_orthonormal(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
        A = Q.T  # orthonormal rows
        y = rng.standard_normal(40)
        phi, _, diag = solve_row(RowProblem(y, A[:3], A[3:], PenaltySpec(L1), epsilon=1e-12))
        ls = y @ A.T @ np.linalg.inv(A @ A.T)
        np.testing.assert_allclose(np.concatenate([phi, _]), ls, atol=1e-8)
        assert diag.converged

    @pytest.mark.parametrize("kind", [L1, HLAG])
    def test_zero_above_lambda_max(self, kind, rng):
        y, Z = _instance(rng)
        lmax = lambda_max(y[None], Z)
        phi, _, diag = solve_row(RowProblem(y, Z, penalty=PenaltySpec(kind, lmax)))
        assert np.all(phi == 0.0)
        assert diag.converged and diag.iterations <= 2

    def test_matches_coordinate_descent(self, rng):
        X = rng.standard_normal((50, 5))
        y = X @ np.array([1.0, 0, -0.5, 0, 0]) + rng.standard_normal(50)
        lam = 0.3 * lambda_max(y[None], X.T)
        phi, _, _ = solve_row(RowProblem(y, X.T, penalty=PenaltySpec(L1, lam), epsilon=1e-9))
        assert lasso_objective(X, y, phi, lam) == pytest.approx(
            lasso_objective(X, y, lasso_cd(X, y, lam), lam), abs=1e-6)

    def test_step_bound_enforced(self, rng):
        y, Z = _instance(rng)
        with pytest.raises(InvalidInputError):
            solve_row(RowProblem(y, Z, step=10 * spectral_step(Z)))

    def test_bad_init_length(self, rng):
        y, Z = _instance(rng)
        with pytest.raises(InvalidInputError):
            solve_row(RowProblem(y, Z), init_phi=np.zeros(2))

    @pytest.mark.parametrize("kind", [L1, HLAG])
    def test_objective_not_above_init(self, kind, rng):
        y, Z = _instance(rng, k=6)
        sys_ = RegressionSystem.build(y[None], Z[:4], Z[4:], d=2)
        pen = PenaltySpec(kind, 2.0, 1.0)
        init = rng.standard_normal(6)
        b, diag = sys_.solve_row(0, pen, init)
        assert sys_.objective(0, b, pen) <= sys_.objective(0, init, pen)
        assert diag.final_objective == pytest.approx(sys_.objective(0, b, pen), rel=1e-10)

    @pytest.mark.parametrize("kind", [L1, HLAG])
    def test_fixed_point(self, kind, rng):
        y, Z = _instance(rng, k=6)
        sys_ = RegressionSystem.build(y[None], Z[:4], Z[4:], d=2)
        pen = PenaltySpec(kind, 1.5, 0.7, 0.1)
        eps = 1e-6
        b, diag = sys_.solve_row(0, pen, eps=eps)
        assert diag.converged and diag.final_delta_inf <= eps
        assert np.max(np.abs(sys_.prox_grad_step(0, b, pen) - b)) <= 10 * eps

    def test_warm_start_not_worse(self, rng):
        y, Z = _instance(rng, k=8)
        sys_ = RegressionSystem.build(y[None], Z, d=2)
        lmax = sys_.lambda_max()[0]
        eps = 1e-6
        prev, _ = sys_.solve_row(0, PenaltySpec(HLAG, 0.5 * lmax), eps=eps)
        pen = PenaltySpec(HLAG, 0.3 * lmax)
        warm, _ = sys_.solve_row(0, pen, prev, eps=eps)
        cold, _ = sys_.solve_row(0, pen, eps=eps)
        assert sys_.objective(0, warm, pen) <= sys_.objective(0, cold, pen) + eps

    def test_unique_with_ridge(self, rng):
        Z = rng.standard_normal((6, 5))  # more regressors than observations
        y = rng.standard_normal(5)
        sys_ = RegressionSystem.build(y[None], Z, d=1)
        pen = PenaltySpec(L1, 0.2, alpha=1.0)
        eps = 1e-7
        a, _ = sys_.solve_row(0, pen, rng.standard_normal(6), eps=eps, max_iter=200_000)
        b, _ = sys_.solve_row(0, pen, rng.standard_normal(6), eps=eps, max_iter=200_000)
        assert np.max(np.abs(a - b)) <= 10 * eps


class TestSolveAllRows:
    def test_identical_rows(self, rng):
        y, Z = _instance(rng)
        B, _ = solve_all_rows(np.vstack([y, y]), Z, penalty=PenaltySpec(L1, 3.0), n_series=1)
        np.testing.assert_array_equal(B[0], B[1])

    def test_row_permutation(self, rng):
        Y = rng.standard_normal((4, 60))
        Z = rng.standard_normal((8, 60))
        pen = PenaltySpec(HLAG, 2.0)
        B, _ = solve_all_rows(Y, Z, penalty=pen, n_series=4)
        perm = np.array([2, 0, 3, 1])
        Bp, _ = solve_all_rows(Y[perm], Z, penalty=pen, n_series=4)
        np.testing.assert_array_equal(Bp, B[perm])

    def test_phase1_toy_rowwise(self):
        y = simulate_path(fig1_model("dense"), 300, 100, 1)[0].values
        p = 3
        Y, Z = y[p:].T, lag_design(y, p, p)
        pen = PenaltySpec(L1, 5.0)
        B, diags = solve_all_rows(Y, Z, penalty=pen)
        assert len(diags) == 2
        for i in range(2):
            row, _, _ = solve_row(RowProblem(Y[i], Z, penalty=pen, step=spectral_step(Z), n_series=2))
            # single-row cross products may round differently in BLAS
            np.testing.assert_allclose(B[i], row, rtol=0, atol=1e-12)

    def test_shape_mismatch(self, rng):
        with pytest.raises(InvalidInputError):
            solve_all_rows(rng.standard_normal((2, 10)), rng.standard_normal((4, 9)))
