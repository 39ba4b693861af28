"""Exact verifier for the dyadic hole-filling inequality.

A case is a radial mass profile ``G(R) = int_{B_R} |g|`` sampled on the radii
``R0 * 2^-k`` (``k = 0..K``).  The hypothesis

    G(R) <= alpha * (G(2R) - G(R)) + beta * R^nu

is checked at every listed radius whose double is also listed (``k >= 1``);
the conclusion

    G(R) <= R^mu * (2^nu G(R0) / R0^mu + beta / (2^(nu/2) - 1)),
    mu = min(nu / 2, log2((1 + alpha) / alpha)),

at every listed radius.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

REL_TOL = 1e-12


class HypothesisNotVerified(RuntimeError):
    pass


def mu_exponent(alpha: float, nu: float) -> float:
    """Decay exponent ``min(nu / 2, log2((1 + alpha) / alpha))``."""
    if not (alpha > 0 and nu > 0):
        raise ValueError(f"alpha and nu must be positive, got alpha={alpha}, nu={nu}")
    return min(nu / 2.0, float(np.log2((1.0 + alpha) / alpha)))


@dataclass(frozen=True)
class HoleFillCase:
    radii: np.ndarray
    G: np.ndarray
    alpha: float
    beta: float
    nu: float
    R0: float

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        G = np.asarray(self.G, dtype=float)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "G", G)
        if radii.ndim != 1 or radii.shape != G.shape or len(radii) < 2:
            raise ValueError("radii and G must be 1-d arrays of equal length >= 2")
        if not 0 < self.R0 <= 1:
            raise ValueError(f"R0 must lie in (0, 1], got {self.R0}")
        expected = self.R0 * 2.0 ** -np.arange(len(radii))
        if not np.allclose(radii, expected, rtol=1e-12, atol=0):
            raise ValueError("radii must be R0 * 2^-k for k = 0..K")
        if not (self.alpha > 0 and self.beta > 0 and self.nu > 0):
            raise ValueError("alpha, beta and nu must be positive")
        if np.any(G < 0) or not np.all(np.isfinite(G)):
            raise ValueError("G must be finite and nonnegative")
        # G(R) nondecreasing in R, radii are decreasing
        if np.any(np.diff(G) > REL_TOL * np.abs(G[:-1]) + 0.0):
            raise ValueError("G must be nondecreasing in R")

    @property
    def mu(self) -> float:
        return mu_exponent(self.alpha, self.nu)

    def annuli(self) -> np.ndarray:
        """``G(2R) - G(R)`` at radii ``k = 1..K``."""
        return self.G[:-1] - self.G[1:]


@dataclass
class HypothesisReport:
    case: HoleFillCase
    radii: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    passed_each: np.ndarray
    beta_min: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.passed_each))

    def rows(self):
        for R, l, r, ok in zip(self.radii, self.lhs, self.rhs, self.passed_each):
            yield {"radius": R, "lhs": l, "rhs": r, "passed": bool(ok)}


def required_beta(case: HoleFillCase, alpha: float | None = None) -> np.ndarray:
    """Per-radius ``beta`` needed at the given ``alpha`` (negative means slack)."""
    a = case.alpha if alpha is None else alpha
    R = case.radii[1:]
    return (case.G[1:] - a * case.annuli()) / R ** case.nu


def check_hypothesis(case: HoleFillCase) -> HypothesisReport:
    """Per-radius pass/fail of the hypothesis and the least ``beta`` at ``case.alpha``."""
    R = case.radii[1:]
    lhs = case.G[1:]
    rhs = case.alpha * case.annuli() + case.beta * R ** case.nu
    ok = lhs <= rhs * (1 + REL_TOL)
    beta_min = float(max(required_beta(case).max(), 0.0))
    return HypothesisReport(case, R, lhs, rhs, ok, beta_min)


def conclusion_constant(case: HoleFillCase, mu: float | None = None) -> float:
    mu = case.mu if mu is None else mu
    return 2.0 ** case.nu * case.G[0] / case.R0 ** mu + case.beta / (2.0 ** (case.nu / 2) - 1.0)


def conclusion_bound(case: HoleFillCase, mu: float | None = None) -> np.ndarray:
    """Right side of the decay bound at every listed radius (exponent ``mu``, default ``case.mu``)."""
    mu = case.mu if mu is None else mu
    return case.radii ** mu * conclusion_constant(case, mu)


@dataclass
class ConclusionReport:
    case: HoleFillCase
    mu: float
    radii: np.ndarray
    G: np.ndarray
    bound: np.ndarray
    slack: np.ndarray
    passed_each: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.passed_each))

    def rows(self):
        for R, g, b, s, ok in zip(self.radii, self.G, self.bound, self.slack, self.passed_each):
            yield {"radius": R, "G": g, "bound": b, "slack": s, "passed": bool(ok)}


def check_conclusion(case: HoleFillCase, hypothesis: HypothesisReport | None = None) -> ConclusionReport:
    """Verify the decay bound at every listed radius; ``slack = bound / G``.

    Refuses (``HypothesisNotVerified``) unless a passing hypothesis report for
    this very case is supplied.
    """
    if hypothesis is None or hypothesis.case is not case:
        raise HypothesisNotVerified("check_hypothesis must be run on this case first")
    if not hypothesis.passed:
        bad = np.nonzero(~hypothesis.passed_each)[0][0]
        raise HypothesisNotVerified(
            f"hypothesis fails at R={hypothesis.radii[bad]:.6g}: "
            f"{hypothesis.lhs[bad]:.6g} > {hypothesis.rhs[bad]:.6g}")
    mu = case.mu
    bound = conclusion_bound(case, mu)
    with np.errstate(divide="ignore", over="ignore"):
        slack = np.where(case.G > 0, bound / np.where(case.G > 0, case.G, 1.0), np.inf)
    ok = case.G <= bound * (1 + REL_TOL)
    return ConclusionReport(case, mu, case.radii, case.G, bound, slack, ok)


@dataclass
class ReplayReport:
    factor: float
    eta: np.ndarray
    eta_monotone: np.ndarray
    iter6_bound: float
    eta_top: float

    @property
    def passed(self) -> bool:
        return bool(self.factor <= 1 + REL_TOL and np.all(self.eta_monotone)
                    and self.eta_top <= self.iter6_bound * (1 + REL_TOL))


def replay(case: HoleFillCase) -> ReplayReport:
    """Replay the absorption argument numerically.

    With ``eps = 2^(nu/2) - 1`` and
    ``eta(R) = G(R) / R^mu + beta R^(nu - mu) / (eps (1 + alpha))``
    the one-step contraction factor must not exceed 1 and ``eta`` must not
    decrease when ``R`` doubles.
    """
    a, b, nu, mu = case.alpha, case.beta, case.nu, case.mu
    eps = 2.0 ** (nu / 2.0) - 1.0
    factor = max(a * 2.0 ** mu / (1.0 + a), 2.0 ** (mu - nu) * (eps + 1.0))
    R = case.radii
    eta = case.G / R ** mu + b * R ** (nu - mu) / (eps * (1.0 + a))
    mono = eta[1:] <= eta[:-1] * (1 + REL_TOL)
    iter6 = 2.0 ** nu * case.G[0] / case.R0 ** mu + b / eps
    return ReplayReport(float(factor), eta, mono, float(iter6), float(eta[0]))


def fit_normal_form(radii, G, nu: float, R0: float | None = None):
    """Smallest-``alpha`` normal form for a measured profile.

    ``alpha`` is the largest ratio ``G(R) / (G(2R) - G(R))`` (so no radius
    needs ``beta``); if an annulus is empty while its ball is not, ``alpha``
    falls back to 1.  ``beta`` is then the least value making every radius pass,
    floored at a tiny positive number.
    """
    radii = np.asarray(radii, dtype=float)
    G = np.asarray(G, dtype=float)
    ann = G[:-1] - G[1:]
    inner = G[1:]
    if np.any((ann <= 0) & (inner > 0)):
        alpha = 1.0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(inner > 0, inner / np.where(ann > 0, ann, 1.0), 0.0)
        alpha = float(ratios.max()) if ratios.max() > 0 else 1.0
    beta_need = (inner - alpha * ann) / radii[1:] ** nu
    beta = max(float(beta_need.max()) * (1 + 1e-9), 1e-300)
    return HoleFillCase(radii, G, alpha, beta, nu, R0 if R0 is not None else float(radii[0]))


def power_profile(radii, s: float) -> np.ndarray:
    """``int_{B_R} |x|^-s dx = 2 pi R^(2 - s) / (2 - s)`` for ``0 < s < 2``."""
    return 2.0 * np.pi * np.asarray(radii, dtype=float) ** (2.0 - s) / (2.0 - s)


def synth_case(kind: str, params: dict | None = None, seed: int = 0) -> HoleFillCase:
    """Reproducible test cases.

    ``power``: ``g = |x|^-s`` with the closed-form least ``alpha = 1 / (2^(2-s) - 1)``.
    ``plateau``: ``G = G0 min(R, knee)^2 / knee^2`` (constant beyond the knee).
    ``random_monotone``: seeded random positive annulus masses.
    """
    p = dict(params or {})
    R0 = float(p.get("R0", 0.125))
    K = int(p.get("K", 10))
    nu = float(p.get("nu", 1.0))
    radii = R0 * 2.0 ** -np.arange(K + 1)
    if kind == "power":
        s = float(p.get("s", 1.0))
        if not 0 < s < 2:
            raise ValueError(f"power profile needs 0 < s < 2, got {s}")
        G = power_profile(radii, s)
        alpha = float(p.get("alpha", 1.0 / (2.0 ** (2.0 - s) - 1.0)))
        beta = float(p.get("beta", 1e-3))
    elif kind == "plateau":
        knee = float(p.get("knee", R0 / 8))
        G0 = float(p.get("G0", 1.0))
        if knee <= 0 or G0 < 0:
            raise ValueError("plateau needs knee > 0 and G0 >= 0")
        G = G0 * np.minimum(radii, knee) ** 2 / knee ** 2
        alpha = float(p.get("alpha", 1.0))
        beta = float(p.get("beta", 2.0 * G0 / knee ** nu))
    elif kind == "random_monotone":
        rng = np.random.default_rng(seed)
        scale = float(p.get("scale", 1.0))
        masses = scale * rng.uniform(0.0, 1.0, K + 1) * radii ** 2
        G = np.cumsum(masses[::-1])[::-1]
        alpha = float(p.get("alpha", 1.0))
        beta = float(p.get("beta", 1.0))
    else:
        raise ValueError(f"unknown case kind {kind!r}")
    return HoleFillCase(radii, G, alpha, beta, nu, R0)


# -- case files ----------------------------------------------------------------

def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def read_case(path) -> HoleFillCase:
    """Read a ``[holefill]`` section: either ``kind`` (+ parameters) or explicit data."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    return case_from_section(cp["holefill"])


def case_from_section(sec) -> HoleFillCase:
    d = {k.lower(): v for k, v in sec.items()}
    if "kind" in d:
        params = {k: float(v) for k, v in d.items() if k not in ("kind", "seed")}
        if "k" in params:
            params["K"] = int(params.pop("k"))
        if "r0" in params:
            params["R0"] = params.pop("r0")
        return synth_case(d["kind"], params, int(d.get("seed", 0)))
    missing = [k for k in ("radii", "g", "alpha", "beta", "nu", "r0") if k not in d]
    if missing:
        raise ValueError(f"[holefill] missing keys: {', '.join(missing)}")
    return HoleFillCase(
        radii=np.array(_floats(d["radii"])),
        G=np.array(_floats(d["g"])),
        alpha=float(d["alpha"]), beta=float(d["beta"]),
        nu=float(d["nu"]), R0=float(d["r0"]),
    )


def write_case(path, case: HoleFillCase) -> None:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["holefill"] = {
        "R0": repr(case.R0), "alpha": repr(case.alpha), "beta": repr(case.beta),
        "nu": repr(case.nu),
        "radii": ", ".join(repr(float(r)) for r in case.radii),
        "G": ", ".join(repr(float(g)) for g in case.G),
    }
    with open(path, "w") as fh:
        cp.write(fh)
