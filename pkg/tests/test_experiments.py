import numpy as np
import pytest

from sparsevarma import experiments
from sparsevarma.exceptions import InvalidInputError, StudyAbortedError
from sparsevarma.experiments import VAR_P, VAR_PTILDE, VARMA_A, VARMA_EPS, StudySpec, oracle_orders, paired_t, \
    replication_forecasts, run_study
from sparsevarma.simulate import DgpSpec

SMALL = dict(d=3, p=1, q=1, T=60, N=3)


class TestPairedT:
    def test_identical(self):
        x = np.arange(5.0)
        assert paired_t(x, x) == (1.0, True)

    def test_regular(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal(30) + 1.0
        p, degenerate = paired_t(a, np.zeros(30))
        assert not degenerate and p < 1e-3


class TestSpec:
    @pytest.mark.parametrize("kw", [{"sweep": "T"}, {"estimators": ("ols",)}, {"estimators": ()},
                                    {"N": 1}, {"T": 10}, {"penalty": "ridge"}])
    def test_rejects(self, kw):
        with pytest.raises(InvalidInputError):
            StudySpec(**kw)

    def test_design_levels(self):
        spec = StudySpec(sweep="theta")
        assert spec.factor_levels() == (0.0, 0.4, 0.6, 0.8)
        assert spec.design(0.4).theta_strength == 0.4
        assert StudySpec(sweep="d", levels=(5,)).design(5).d == 5

    def test_oracle_orders(self):
        assert oracle_orders(DgpSpec(theta_strength=0.0)) == (4, 0)
        assert oracle_orders(DgpSpec(q=6)) == (4, 6)


def test_estimator_subset_independent():
    dgp = DgpSpec(d=3, p=1, q=1)
    full = StudySpec(estimators=(VARMA_A, VARMA_EPS, VAR_PTILDE, VAR_P), **SMALL)
    sub = StudySpec(estimators=(VARMA_EPS,), **SMALL)
    actual_a, fa = replication_forecasts(full, dgp, 1)
    actual_b, fb = replication_forecasts(sub, dgp, 1)
    np.testing.assert_array_equal(actual_a, actual_b)
    np.testing.assert_array_equal(fa[VARMA_EPS], fb[VARMA_EPS])


def test_small_study_outputs():
    res = run_study(StudySpec(estimators=(VARMA_EPS, VAR_PTILDE), **SMALL))
    rows = res.summary()
    assert len(rows) == 1
    header = res.to_csv().splitlines()[0].split(",")
    assert header[:2] == ["factor", "level"]
    assert {"var_ptilde_msfe", "varma_pq_eps_msfe", "varma_pq_eps_p"} <= set(header)
    assert res.errors[None][VARMA_EPS].shape == (3, 3)
    assert res.to_dict()["spec"]["N"] == 3


def test_abort_on_failures(monkeypatch):
    real = experiments.replication_forecasts

    def broken(spec, dgp, rep):
        actual, out = real(spec, dgp, rep)
        if rep == 0:
            out[VAR_PTILDE] = "SolverError: forced"
        return actual, out

    monkeypatch.setattr(experiments, "replication_forecasts", broken)
    with pytest.raises(StudyAbortedError):
        run_study(StudySpec(estimators=(VAR_PTILDE,), **SMALL))


def test_few_failures_tolerated(monkeypatch):
    real = experiments.replication_forecasts

    def broken(spec, dgp, rep):
        actual, out = real(spec, dgp, rep)
        if rep == 0:
            out[VAR_PTILDE] = "SolverError: forced"
        return actual, out

    monkeypatch.setattr(experiments, "replication_forecasts", broken)
    spec = StudySpec(estimators=(VARMA_EPS, VAR_PTILDE), **{**SMALL, "N": 11})
    res = run_study(spec)
    assert list(res.failures[None][VAR_PTILDE]) == [0]
    assert res.summary()[0]["var_ptilde_n"] == 10
