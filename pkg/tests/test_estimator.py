import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from varpflow import CoupledFlowSolver
from varpflow.manufactured import standard_case
from varpflow.spectral import evaluate


@pytest.fixture(scope="module")
def fitted(data):
    return CoupledFlowSolver(n_modes=32, mean_c=0.3).fit(data)


def test_params_round_trip():
    est = CoupledFlowSolver(n_modes=16, A=4.0)
    params = est.get_params()
    assert params["n_modes"] == 16 and params["A"] == 4.0
    est.set_params(tol_residual=1e-8)
    assert est.tol_residual == 1e-8
    assert clone(est).get_params() == est.get_params()


def test_fit_predict(fitted):
    assert fitted.converged_ and fitted.A_ == 8.0
    assert fitted.residual_ <= 1e-10 and fitted.score() == -fitted.residual_
    case = standard_case()
    pts = np.array([[0.0, 0.0], [0.3, 0.7], [0.95, 0.1]])
    out = fitted.predict(pts)
    assert out.shape == (3, 3)
    v = case.velocity(case.synthesis_modes)
    np.testing.assert_allclose(out[:, :2], evaluate(v, pts), atol=1e-5)


def test_fit_from_samples(data):
    f = data.f.values[:, ::8, ::8]
    g = data.g.values[:, ::8, ::8]
    est = CoupledFlowSolver(n_modes=16, mean_c=0.3).fit((f, g))
    assert est.converged_ and est.data_.f.grid.n_modes == 32


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CoupledFlowSolver().predict([[0.1, 0.2]])


@pytest.mark.parametrize("pts", [[[0.1, 0.2, 0.3]], [[np.nan, 0.1]], [0.1, 0.2]])
def test_invalid_points(fitted, pts):
    with pytest.raises(ValueError):
        fitted.predict(pts)


@pytest.mark.parametrize("X", [42, (np.zeros((3, 8, 8)), np.zeros((2, 8, 8)))])
def test_invalid_sources(X):
    with pytest.raises(ValueError):
        CoupledFlowSolver(n_modes=8).fit(X)


def test_invalid_tolerance(data):
    with pytest.raises(ValueError, match="tol_residual"):
        CoupledFlowSolver(tol_residual=-1.0).fit(data)
