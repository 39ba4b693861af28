import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varpflow.holefill import (
    HoleFillCase,
    HypothesisNotVerified,
    check_conclusion,
    check_hypothesis,
    conclusion_bound,
    fit_normal_form,
    mu_exponent,
    power_profile,
    read_case,
    replay,
    synth_case,
    write_case,
)


def dyadic(K, R0=0.125):
    return R0 * 2.0 ** -np.arange(K + 1)


def worst_profile(G0, alpha, beta, nu, radii):
    """Largest profile the hypothesis allows: equality at every step inward."""
    G = [G0]
    for R in radii[1:]:
        G.append((alpha * G[-1] + beta * R ** nu) / (1 + alpha))
    return np.array(G)


@pytest.mark.parametrize("alpha, nu, expected", [(1.0, 1.0, 0.5), (1 / 3, 4.0, 2.0), (1.0, 0.6, 0.3)])
def test_mu_examples(alpha, nu, expected):
    assert mu_exponent(alpha, nu) == pytest.approx(expected, rel=1e-14)


def test_mu_large_alpha_vanishes():
    assert 0 < mu_exponent(1e12, 1.0) < 1e-11


@pytest.mark.parametrize("alpha, nu", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_mu_rejects_nonpositive(alpha, nu):
    with pytest.raises(ValueError):
        mu_exponent(alpha, nu)


def test_pure_power_source_passes():
    radii = dyadic(8)
    case = HoleFillCase(radii, 0.7 * radii ** 1.0, alpha=1.0, beta=0.7, nu=1.0, R0=0.125)
    assert check_hypothesis(case).passed


def test_constant_profile_fails_at_small_radius():
    radii = dyadic(10)
    case = HoleFillCase(radii, np.ones_like(radii), alpha=1.0, beta=1.0, nu=1.0, R0=0.125)
    rep = check_hypothesis(case)
    assert not rep.passed
    # empty annuli: only beta R^nu is available, so the smallest radii fail first
    assert not rep.passed_each[-1]
    with pytest.raises(HypothesisNotVerified, match="hypothesis fails"):
        check_conclusion(case, rep)


def test_power_profile_closed_form():
    radii = dyadic(5)
    np.testing.assert_allclose(power_profile(radii, 1.0), 2 * np.pi * radii, rtol=1e-15)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75])
def test_power_family_passes(s):
    case = synth_case("power", {"s": s})
    hyp = check_hypothesis(case)
    assert hyp.passed
    concl = check_conclusion(case, hyp)
    assert concl.passed and np.all(concl.slack >= 1)
    assert replay(case).passed
    assert case.mu == pytest.approx(min(0.5, 2.0 - s), rel=1e-12)


def test_plateau_constant_beyond_knee():
    case = synth_case("plateau")
    knee = 0.125 / 8
    assert np.all(case.G[case.radii >= knee] == 1.0)
    np.testing.assert_allclose(case.G[case.radii < knee], (case.radii[case.radii < knee] / knee) ** 2)
    assert check_hypothesis(case).passed


def test_random_monotone_golden():
    case = synth_case("random_monotone", seed=42)
    np.testing.assert_allclose(
        case.G[:4],
        [0.014840513588377395, 0.002747450329690467, 0.0010330814244090126, 0.00019460689324555318],
        rtol=1e-14)
    hyp = check_hypothesis(case)
    assert hyp.passed
    assert hyp.beta_min == pytest.approx(0.003290820733162325, rel=1e-12)
    rep = replay(case)
    assert rep.iter6_bound == pytest.approx(2.4981641847301566, rel=1e-12)
    assert rep.eta_top == pytest.approx(0.46875200647516785, rel=1e-12)


def test_random_monotone_is_seeded():
    a = synth_case("random_monotone", seed=7)
    b = synth_case("random_monotone", seed=7)
    c = synth_case("random_monotone", seed=8)
    assert np.array_equal(a.G, b.G) and not np.array_equal(a.G, c.G)


def test_conclusion_refused_without_hypothesis():
    case = synth_case("power", {"s": 1.0})
    with pytest.raises(HypothesisNotVerified):
        check_conclusion(case)
    other = synth_case("power", {"s": 1.0})
    with pytest.raises(HypothesisNotVerified):
        check_conclusion(case, check_hypothesis(other))


def test_zero_profile_trivially_passes():
    radii = dyadic(6)
    case = HoleFillCase(radii, np.zeros_like(radii), alpha=1.0, beta=1e-6, nu=1.0, R0=0.125)
    hyp = check_hypothesis(case)
    assert hyp.passed and hyp.beta_min == 0.0
    concl = check_conclusion(case, hyp)
    assert concl.passed and np.all(np.isinf(concl.slack))


@pytest.mark.parametrize("kind, params", [("power", {"s": 0.5}), ("power", {"s": 1.5}),
                                          ("plateau", {}), ("random_monotone", {})])
def test_replay_factor_and_iteration(kind, params):
    case = synth_case(kind, params, seed=3)
    rep = replay(case)
    assert rep.factor <= 1 + 1e-12
    assert np.all(rep.eta_monotone)
    assert rep.eta_top <= rep.iter6_bound * (1 + 1e-12)


def test_bound_monotone_in_mu():
    case = synth_case("power", {"s": 1.0})
    # at R <= R0 <= 1 a smaller exponent can only weaken (enlarge) the bound
    lo = conclusion_bound(case, 0.2)
    hi = conclusion_bound(case, case.mu)
    assert np.all(lo >= hi * (1 - 1e-14))


def test_brute_force_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        K = int(rng.integers(2, 14))
        R0 = float(rng.uniform(0.05, 1.0))
        alpha = float(10 ** rng.uniform(-2, 2))
        beta = float(10 ** rng.uniform(-4, 1))
        nu = float(rng.uniform(0.1, 3.0))
        radii = dyadic(K, R0)
        G = worst_profile(float(10 ** rng.uniform(-3, 2)), alpha, beta, nu, radii)
        if np.any(np.diff(G) > 0):
            continue
        case = HoleFillCase(radii, G, alpha, beta, nu, R0)
        hyp = check_hypothesis(case)
        assert hyp.passed
        assert check_conclusion(case, hyp).passed
        assert replay(case).passed


@settings(max_examples=200, deadline=None)
@given(masses=st.lists(st.floats(0.0, 1.0), min_size=3, max_size=12),
       nu=st.floats(0.2, 2.5))
def test_fitted_normal_form_always_concludes(masses, nu):
    radii = dyadic(len(masses) - 1)
    G = np.cumsum(np.array(masses)[::-1] * radii[::-1] ** 2)[::-1]
    case = fit_normal_form(radii, G, nu)
    hyp = check_hypothesis(case)
    assert hyp.passed
    assert check_conclusion(case, hyp).passed


def test_case_file_round_trip(tmp_path):
    case = synth_case("random_monotone", seed=5)
    path = tmp_path / "case.ini"
    write_case(path, case)
    back = read_case(path)
    assert np.array_equal(back.G, case.G) and np.array_equal(back.radii, case.radii)
    assert (back.alpha, back.beta, back.nu, back.R0) == (case.alpha, case.beta, case.nu, case.R0)


def test_case_file_with_kind(tmp_path):
    path = tmp_path / "case.ini"
    path.write_text("[holefill]\nkind = power\ns = 1.0\nK = 6\n")
    case = read_case(path)
    assert len(case.radii) == 7
    np.testing.assert_allclose(case.G, power_profile(case.radii, 1.0))


@pytest.mark.parametrize("kwargs, match", [
    ({"radii": [0.125, 0.07]}, "R0"),
    ({"G": [0.5, 1.0]}, "nondecreasing"),
    ({"alpha": 0.0}, "positive"),
    ({"R0": 2.0, "radii": [2.0, 1.0]}, r"\(0, 1\]"),
    ({"G": [1.0, -1.0]}, "nonnegative"),
])
def test_case_validation(kwargs, match):
    base = dict(radii=[0.125, 0.0625], G=[1.0, 0.5], alpha=1.0, beta=1.0, nu=1.0, R0=0.125)
    base.update(kwargs)
    with pytest.raises(ValueError, match=match):
        HoleFillCase(**base)


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown"):
        synth_case("spiral")
