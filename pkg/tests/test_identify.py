import json
import time

import numpy as np
import pytest

from oracles import pi_recursion, segment_oracle
from sparsevarma.core import AR, LagPolynomial, VarmaModel, check_stable, invert_to_var, pi_equivalent, \
    yule_walker_residual
from sparsevarma.exceptions import ConvergenceError, InfeasibleError, InvalidInputError
from sparsevarma.identify import ALPHA_SCHEDULE, IdentProblem, build_constraints, limit_target, solve_target
from sparsevarma.penalty import HLAG, L1

TOY = LagPolynomial([[[0.2, -0.2], [0.0, 0.0]]], AR, 2)


def rank_one_pi(rng, d):
    """Pi with Pi_1 = u v^T; a VARMA(1,1) representation exists for any Theta_1 with Theta_1 u = 0."""
    u, v = rng.standard_normal(d), rng.standard_normal(d)
    pi1 = np.outer(u, v)
    pi1 *= 0.5 / max(abs(v @ u), np.linalg.norm(pi1, 2))
    return LagPolynomial([pi1], AR, d)


class TestBuildConstraints:
    def test_varma11_equations(self, rng):
        pi1 = rng.standard_normal((2, 2))
        M, B = build_constraints(LagPolynomial([pi1], AR, 2), 1, 1)
        assert M.shape == (4, 4) and B.shape == (2, 4)
        phi, theta = rng.standard_normal((2, 2, 2))
        x = np.hstack([phi, theta])
        lhs = x @ M - B
        # lag 1: Phi_1 = Pi_1 - Theta_1 ; lag 2: Theta_1 Pi_1 = 0
        np.testing.assert_allclose(lhs[:, :2], -(phi + theta - pi1), atol=1e-14)
        np.testing.assert_allclose(lhs[:, 2:], theta @ pi1, atol=1e-14)

    def test_q0_pins_phi(self, rng):
        pis = rng.standard_normal((2, 3, 3)) * 0.2
        M, B = build_constraints(LagPolynomial(pis, AR, 3), 2, 0)
        x = np.linalg.solve(M.T, B.T).T
        np.testing.assert_allclose(x, np.hstack(list(pis)), atol=1e-14)

    def test_dimension_count(self):
        d, p, q = 3, 2, 2
        pi = LagPolynomial(np.zeros((3, d, d)), AR, d)
        M, B = build_constraints(pi, p, q)
        assert M.shape == (d * (p + q), d * (q + 3))
        assert B.size == d * d * (q + 3)

    def test_constraint_order(self):
        assert IdentProblem(TOY, 1, 1).constraint_order == 2
        assert IdentProblem(TOY, 3, 1).constraint_order == 3


class TestSolveTarget:
    def test_toy_alpha(self):
        t = solve_target(IdentProblem(TOY, 1, 1, L1, 1e-3))
        np.testing.assert_allclose(t.phi, [[0.2, -0.1], [0.0, 0.0]], atol=1e-6)
        np.testing.assert_allclose(t.theta, [[0.0, -0.1], [0.0, 0.0]], atol=1e-6)
        assert t.constraint_violation <= 1e-8

    def test_scalar_reduction_grid(self):
        alpha = 1e-3
        a = np.linspace(-0.3, 0.1, 400001)
        obj = np.abs(0.2 + a) + np.abs(a) + alpha / 2 * ((0.2 + a) ** 2 + a ** 2)
        a_ref = a[np.argmin(obj)]
        t = solve_target(IdentProblem(TOY, 1, 1, L1, alpha))
        # Theta_1[0, 1] = a, Phi_1[0, 1] = -0.2 - a
        assert t.theta[0, 1] == pytest.approx(a_ref, abs=1e-5)

    @pytest.mark.parametrize("alpha", [1e-1, 1e-3])
    def test_q0_any_alpha(self, alpha, rng):
        pis = rng.standard_normal((2, 2, 2)) * 0.2
        t = solve_target(IdentProblem(LagPolynomial(pis, AR, 2), 2, 0, HLAG, alpha))
        np.testing.assert_allclose(t.phi, np.hstack(list(pis)), atol=1e-8)
        assert t.theta.shape == (2, 0)

    def test_yule_walker_cross_check(self):
        t = solve_target(IdentProblem(TOY, 1, 1, L1, 1e-2))
        assert yule_walker_residual(t.model(), invert_to_var(t.model(), 200)) <= 1e-6
        assert yule_walker_residual(t.model(), TOY) <= 1e-6

    def test_alpha_zero_rejected(self):
        with pytest.raises(InvalidInputError):
            solve_target(IdentProblem(TOY, 1, 1, L1, 0.0))

    def test_infeasible(self):
        pi = LagPolynomial([np.eye(2) * 0.5, np.eye(2) * 0.2], AR, 2)
        with pytest.raises(InfeasibleError) as exc:
            solve_target(IdentProblem(pi, 1, 1))
        assert exc.value.residual > 1e-6

    @pytest.mark.parametrize("kind", [L1, HLAG])
    def test_uniqueness(self, kind, rng):
        for _ in range(3):
            pi = rank_one_pi(rng, 3)
            prob = IdentProblem(pi, 1, 1, kind, 1e-2)
            m = prob.d * prob.constraint_order
            a = solve_target(prob, init=rng.standard_normal((3, m)))
            b = solve_target(prob, init=rng.standard_normal((3, m)))
            np.testing.assert_allclose(a.phi, b.phi, atol=1e-6)
            np.testing.assert_allclose(a.theta, b.theta, atol=1e-6)

    @pytest.mark.parametrize("kind", [L1, HLAG])
    def test_membership(self, kind, rng):
        for _ in range(3):
            pi = rank_one_pi(rng, 3)
            t = solve_target(IdentProblem(pi, 1, 1, kind, 1e-3))
            ref = VarmaModel.from_matrices(list(pi.coeffs), dim=3)
            assert pi_equivalent(t.model(), ref, k=50, tol=1e-6)

    def test_repeatable(self, rng):
        prob = IdentProblem(rank_one_pi(rng, 2), 1, 1, HLAG, 1e-2)
        a, b = solve_target(prob), solve_target(prob)
        np.testing.assert_array_equal(a.phi, b.phi)
        np.testing.assert_array_equal(a.theta, b.theta)

    def test_weights(self):
        # a heavy MA weight pushes all of Pi_1 into Phi
        t = solve_target(IdentProblem(TOY, 1, 1, L1, 1e-3, weight_theta=10.0))
        np.testing.assert_allclose(t.theta, 0.0, atol=1e-6)
        np.testing.assert_allclose(t.phi, TOY.coeffs[0], atol=1e-6)


class TestLimitTarget:
    def test_toy(self):
        t0 = time.perf_counter()
        t = limit_target(IdentProblem(TOY, 1, 1, L1))
        assert time.perf_counter() - t0 < 1.0
        a_star, _, _ = segment_oracle(TOY.coeffs[0][0])
        assert a_star == pytest.approx(-0.1, abs=1e-5)
        np.testing.assert_allclose(t.theta, [[0.0, a_star], [0.0, 0.0]], atol=1e-4)
        np.testing.assert_allclose(t.phi, [[0.2, -0.2 - a_star], [0.0, 0.0]], atol=1e-4)

    def test_limit_is_min_norm_on_segment(self):
        t = limit_target(IdentProblem(TOY, 1, 1, L1))
        frob = np.sum(t.phi ** 2) + np.sum(t.theta ** 2)
        for a in np.linspace(-0.2, 0.0, 201):
            other = (0.2 ** 2 + (0.2 + a) ** 2) + a ** 2
            assert frob <= other + 1e-8

    def test_q0_limit_equals_solve(self, rng):
        pi = LagPolynomial(rng.standard_normal((1, 2, 2)) * 0.3, AR, 2)
        lim = limit_target(IdentProblem(pi, 1, 0))
        for alpha in ALPHA_SCHEDULE[:3]:
            np.testing.assert_allclose(solve_target(IdentProblem(pi, 1, 0, L1, alpha)).phi, lim.phi, atol=1e-10)

    @pytest.mark.parametrize("kind", [L1, HLAG])
    def test_penalty_part_monotone(self, kind, rng):
        pi = rank_one_pi(rng, 3)
        parts = [solve_target(IdentProblem(pi, 1, 1, kind, a)).penalty_part for a in ALPHA_SCHEDULE[:6]]
        assert all(b <= a + 1e-8 for a, b in zip(parts, parts[1:]))

    def test_trajectory_recorded_and_json_safe(self):
        t = limit_target(IdentProblem(TOY, 1, 1, L1))
        assert t.trajectory[0][1] == float("inf")
        assert t.trajectory[-1][1] < 1e-5
        json.dumps(t.to_dict(), allow_nan=False)

    def test_nonconvergence_reports_trajectory(self):
        with pytest.raises(ConvergenceError) as exc:
            limit_target(IdentProblem(TOY, 1, 1, L1), schedule=(1e-1, 1e-2), tol=0.0)
        assert len(exc.value.trajectory) == 2


def test_problem_validation():
    with pytest.raises(InvalidInputError):
        IdentProblem(LagPolynomial([[[0.1]]], "MA"), 1, 1)
    with pytest.raises(InvalidInputError):
        IdentProblem(TOY, -1, 1)
    with pytest.raises(InvalidInputError):
        IdentProblem(TOY, 1, 1, "ridge")
