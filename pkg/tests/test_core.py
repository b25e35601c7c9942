import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import pi_recursion
from sparsevarma.core import (AR, MA, LagPolynomial, PanelData, VarmaModel, check_invertible, check_stable,
                              invert_to_var, lag_product, pi_equivalent, pi_tail_decay, yule_walker_residual)
from sparsevarma.exceptions import DomainError, InvalidInputError
from sparsevarma.simulate import DgpSpec, build_dgp, fig1_model


def random_model(rng, d, p, q, radius=0.8):
    def poly(order, conv):
        while True:
            c = [rng.standard_normal((d, d)) * 0.4 for _ in range(order)]
            lp = LagPolynomial(c, conv, d)
            if (check_stable(lp) if conv == AR else check_invertible(lp)).radius < radius:
                return c
    return VarmaModel.from_matrices(poly(p, AR), poly(q, MA), dim=d)


class TestLagPolynomial:
    def test_order_and_block(self):
        lp = LagPolynomial([np.eye(2), 2 * np.eye(2)])
        assert lp.order == 2 and lp.dim == 2
        np.testing.assert_array_equal(lp.block(), np.hstack([np.eye(2), 2 * np.eye(2)]))
        np.testing.assert_array_equal(lp[5], np.zeros((2, 2)))

    def test_block_round_trip(self, rng):
        block = rng.standard_normal((3, 9))
        np.testing.assert_array_equal(LagPolynomial.from_block(block, 3).block(), block)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            LagPolynomial([np.array([[np.nan]])])

    def test_non_square_rejected(self):
        with pytest.raises(InvalidInputError):
            LagPolynomial([np.zeros((2, 3))])

    def test_empty_needs_dim(self):
        with pytest.raises(InvalidInputError):
            LagPolynomial([])
        assert LagPolynomial([], AR, 3).order == 0

    def test_operator_signs(self):
        a = np.array([[0.5]])
        assert LagPolynomial([a], AR).operator_coeffs()[1, 0, 0] == -0.5
        assert LagPolynomial([a], MA).operator_coeffs()[1, 0, 0] == 0.5


class TestStability:
    def test_scalar_ar1(self):
        rep = check_stable(LagPolynomial([[[0.5]]]))
        assert rep.ok and rep.radius == pytest.approx(0.5)

    def test_unit_root(self):
        rep = check_stable(LagPolynomial([np.eye(2)]))
        assert not rep.ok and rep.radius == pytest.approx(1.0)

    def test_dgp_stable_and_invertible(self):
        model = build_dgp(DgpSpec(d=10, p=4, q=4, theta_strength=0.8))
        assert check_stable(model.phi).ok
        assert check_invertible(model.theta).ok

    def test_ma_examples(self):
        assert check_invertible(LagPolynomial([[[0.2]]], MA)).ok
        rep = check_invertible(LagPolynomial([[[0.0, -0.2], [0.0, 0.0]]], MA))
        assert rep.ok and rep.radius == 0.0

    def test_wrong_convention(self):
        with pytest.raises(InvalidInputError):
            check_stable(LagPolynomial([[[0.1]]], MA))
        with pytest.raises(InvalidInputError):
            check_invertible(LagPolynomial([[[0.1]]], AR))


class TestVarmaModel:
    def test_sigma_must_be_pd(self):
        with pytest.raises(InvalidInputError):
            VarmaModel.from_matrices([np.eye(2) * 0.1], sigma_a=np.diag([1.0, -1.0]))

    def test_sigma_symmetric(self):
        with pytest.raises(InvalidInputError):
            VarmaModel.from_matrices([np.eye(2) * 0.1], sigma_a=[[1.0, 0.5], [0.0, 1.0]])

    def test_dim_mismatch(self):
        with pytest.raises(InvalidInputError):
            VarmaModel(LagPolynomial([np.eye(2)]), LagPolynomial([np.eye(3)], MA))

    def test_beta_stacking(self):
        m = fig1_model("dense")
        assert m.beta().shape == (4, 2)
        np.testing.assert_array_equal(m.beta()[:2], m.phi[1].T)


class TestPanelData:
    def test_names_default(self):
        assert PanelData(np.zeros((3, 2))).names == ("y1", "y2")

    def test_rejects_nan(self):
        with pytest.raises(InvalidInputError):
            PanelData([[1.0, np.nan]])

    def test_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            PanelData(np.zeros((0, 2)))

    def test_head(self):
        p = PanelData(np.arange(6.0).reshape(3, 2), ["a", "b"])
        assert p.head(2).T == 2 and p.head(2).names == ("a", "b")


class TestInvertToVar:
    def test_varma11_recursion(self, rng):
        m = random_model(rng, 2, 1, 1)
        pi = invert_to_var(m, 6).coeffs
        np.testing.assert_allclose(pi[0], m.phi[1] + m.theta[1], atol=1e-14)
        for tau in range(1, 6):
            np.testing.assert_allclose(pi[tau], -m.theta[1] @ pi[tau - 1], atol=1e-14)

    def test_fig1_dense(self):
        pi = invert_to_var(fig1_model("dense"), 10).coeffs
        np.testing.assert_allclose(pi[0], [[0.2, -0.2], [0.0, 0.0]], atol=1e-15)
        np.testing.assert_allclose(pi[1:], 0.0, atol=1e-15)

    def test_pure_var(self):
        phis = [np.eye(2) * 0.3, np.eye(2) * 0.1]
        pi = invert_to_var(VarmaModel.from_matrices(phis, dim=2), 5).coeffs
        np.testing.assert_array_equal(pi[:2], phis)
        np.testing.assert_array_equal(pi[2:], 0.0)

    def test_matches_long_division_oracle(self, rng):
        m = random_model(rng, 3, 2, 2)
        ref = pi_recursion(list(m.phi.coeffs), list(m.theta.coeffs), 30)
        np.testing.assert_allclose(invert_to_var(m, 30).coeffs, ref, atol=1e-12)

    def test_non_invertible(self):
        m = VarmaModel.from_matrices([np.eye(1) * 0.1], [np.eye(1) * 1.5])
        with pytest.raises(DomainError):
            invert_to_var(m, 5)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), d=st.integers(1, 3), p=st.integers(0, 2), q=st.integers(0, 2))
    def test_round_trip(self, seed, d, p, q):
        m = random_model(np.random.default_rng(seed), d, p, q)
        k = 40
        pi = invert_to_var(m, k)
        prod = lag_product(m.theta, pi, k)
        expected = m.phi.operator_coeffs(k)
        # beyond lag k the truncated product picks up terms from missing Pi_{>k}
        np.testing.assert_allclose(prod[: k + 1], expected, atol=1e-12)


class TestPiEquivalent:
    def test_fig1_pairs(self):
        assert pi_equivalent(fig1_model("dense"), fig1_model("sparse"), k=20, tol=1e-12)

    def test_reflexive(self, rng):
        m = random_model(rng, 2, 2, 1)
        assert pi_equivalent(m, m)

    def test_symmetric(self):
        a, b = fig1_model("dense"), fig1_model("sparse")
        assert pi_equivalent(a, b) == pi_equivalent(b, a)

    def test_perturbed(self):
        d = fig1_model("dense")
        phi = d.phi[1].copy()
        phi[0, 0] += 0.01
        assert not pi_equivalent(d, VarmaModel.from_matrices([phi], [d.theta[1]]), k=20, tol=1e-12)


class TestYuleWalker:
    def test_fig1_pairs_vanish(self):
        pi = invert_to_var(fig1_model("dense"), 200)
        assert yule_walker_residual(fig1_model("dense"), pi) <= 1e-8
        assert yule_walker_residual(fig1_model("sparse"), pi) <= 1e-8

    def test_off_pair(self):
        pi = invert_to_var(fig1_model("dense"), 200)
        m = fig1_model("dense")
        off = VarmaModel.from_matrices([m.phi[1] + np.array([[0.1, 0], [0, 0]])], [m.theta[1]])
        assert yule_walker_residual(off, pi) > 1e-2

    def test_white_noise(self):
        wn = VarmaModel.from_matrices([np.zeros((2, 2))], [np.zeros((2, 2))])
        assert yule_walker_residual(wn, LagPolynomial([np.zeros((2, 2))])) == 0.0

    def test_agrees_with_pi_equivalent(self, rng):
        for _ in range(5):
            m = random_model(rng, 2, 1, 1)
            pi = invert_to_var(m, 200)
            assert yule_walker_residual(m, pi) <= 1e-8

    def test_unstable_pi(self):
        with pytest.raises(DomainError):
            yule_walker_residual(fig1_model("dense"), LagPolynomial([np.eye(2)]))


def test_pi_tail_decay(rng):
    for _ in range(5):
        m = random_model(rng, 2, 1, 2)
        pi = invert_to_var(m, 60)
        C, rho = pi_tail_decay(pi)
        assert C > 0 and 0 < rho < 1
