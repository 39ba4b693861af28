import numpy as np
import pytest

from varpflow.constitutive import ConstitutiveModel, stress, stress_truncated
from varpflow.manufactured import ManufacturedCase, make_sources, mms_error, standard_case
from varpflow.solver import SolutionState
from varpflow.spectral import differentiate, leray_project, resample, stokes_basis

TWO_PI = 2 * np.pi


def taylor_green(model):
    # psi = sin(2 pi x) sin(2 pi y) / (2 pi)
    a = 1 / (4 * np.pi)
    return ManufacturedCase(((1, -1, a, 0.0), (1, 1, -a, 0.0)), (), 0.0, model, 64, "tg")


def test_trivial_case_has_zero_sources():
    case = ManufacturedCase((), (), 0.7, ConstitutiveModel.canonical(), 32)
    f, g = make_sources(case)
    assert np.abs(f.values).max() == 0 and np.abs(g.values).max() == 0


def test_velocity_divergence_free_and_shear(case):
    v = case.velocity(128)
    assert np.abs(differentiate(v, "div").values).max() < 1e-12
    assert np.abs(v.coeffs[:, 0, 0]).max() == 0
    assert 0 < case.max_shear() < np.inf


def test_taylor_green_newtonian_closed_form():
    case = taylor_green(ConstitutiveModel.newtonian())
    n = case.synthesis_modes
    x, y = case.velocity(n).grid.coords
    X, Y = TWO_PI * x, TWO_PI * y
    v_exact = np.stack([-np.sin(X) * np.cos(Y), np.cos(X) * np.sin(Y)])
    assert np.abs(case.velocity(n).values - v_exact).max() < 1e-12
    f, g = make_sources(case)
    # -div D = -lap v / 2 = 4 pi^2 v; the convective part is a pure gradient
    scale = np.abs(f.values).max()
    assert np.abs(leray_project(f).values - 4 * np.pi ** 2 * v_exact).max() < 1e-10 * scale
    conv = TWO_PI * np.stack([np.sin(X) * np.cos(X), np.sin(Y) * np.cos(Y)])
    assert np.abs(f.values - 4 * np.pi ** 2 * v_exact - conv).max() < 1e-10 * scale
    assert np.abs(g.values).max() == 0


def test_synthesis_resolution_stable():
    # compared on the band a solver grid sees; the top synthesis modes carry
    # roundoff amplified by the second derivatives in f
    f1, g1 = make_sources(standard_case(), n_modes=64)
    f2, g2 = make_sources(standard_case(synthesis_modes=512), n_modes=64)
    for a, b in ((f1, f2), (g1, g2)):
        diff = np.abs(b.values - a.values).max()
        assert diff <= 1e-11 * np.abs(a.values).max()


def test_underresolved_synthesis_refused():
    with pytest.raises(ValueError, match="under-resolves"):
        make_sources(standard_case(synthesis_modes=32))
    with pytest.raises(ValueError):
        ManufacturedCase(((8, 0, 1.0, 0.0),), (), 0.0, synthesis_modes=32)


def test_restricted_sources(case):
    f, g = make_sources(case, n_modes=32)
    assert f.grid.n_modes == 32 and g.grid.n_modes == 32


def test_truncation_inactive_on_exact_field(case):
    D = differentiate(case.velocity(256), "sym_grad").values
    c = case.concentration(256).values
    A = 2 * case.max_shear()
    assert np.array_equal(stress_truncated(case.model, c, D, A), stress(case.model, c, D))


def test_mms_error_of_projection(case):
    n = 32
    basis = stokes_basis(__import__("varpflow").get_grid(n))
    st = SolutionState(alpha=basis.from_spectral(case.velocity(n).coeffs), c=case.concentration(n),
                       basis=basis, A=8.0, mean_c=case.mean_c)
    err = mms_error(st, case)
    assert err["velocity_l2"] < 1e-13 and err["velocity_h1"] < 1e-11 and err["concentration_l2"] < 1e-13


def test_mms_convergence(solutions, case):
    errs = [mms_error(solutions[n], case) for n in (16, 32, 64)]
    for key in ("velocity_l2", "velocity_h1", "concentration_l2"):
        vals = [e[key] for e in errs]
        assert vals[0] >= vals[1] >= vals[2]
    assert errs[2]["velocity_l2"] <= 0.1 * errs[1]["velocity_l2"]
    assert errs[2]["concentration_l2"] <= 0.1 * errs[1]["concentration_l2"]
