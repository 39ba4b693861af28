"""Stress and flux laws, their truncation at shear rate ``A``, and a sampling
auditor for the structural growth/coercivity/Lipschitz assumptions.

Tensors carry their two component axes first: ``D.shape == (2, 2) + batch``.
The stress is ``S(c, D) = nu(c, |D|) D`` with the power-law viscosity

    nu(c, s) = (1 + gamma(c) + s**2) ** ((p(c) - 2) / 2),

and the truncated stress freezes the viscosity at shear rate ``A``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ExponentFunction:
    """Concentration-dependent power-law index ``c -> p(c)`` with declared bounds."""

    func: Callable
    p_minus: float
    p_plus: float
    lipschitz: float
    deriv: Callable | None = None
    name: str = "custom"

    def __post_init__(self):
        if not (1.0 < self.p_minus <= 2.0 <= self.p_plus < np.inf):
            raise ValueError(f"need 1 < p- <= 2 <= p+ < inf, got [{self.p_minus}, {self.p_plus}]")
        if self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be nonnegative")

    def __call__(self, c):
        return self.func(np.asarray(c, dtype=float))

    def derivative(self, c, h: float = 1e-5):
        c = np.asarray(c, dtype=float)
        if self.deriv is not None:
            return self.deriv(c)
        step = h * (1.0 + np.abs(c))
        return (self.func(c + step) - self.func(c - step)) / (2 * step)

    @classmethod
    def tanh(cls, a: float = 0.4, b: float = 1.0):
        """``p(c) = 2 + a tanh(b c)``, with ``a`` in ``[0, 0.9]`` and ``b > 0``."""
        if not 0.0 <= a <= 0.9 or b <= 0:
            raise ValueError(f"tanh exponent needs 0 <= a <= 0.9 and b > 0, got a={a}, b={b}")
        return cls(
            func=lambda c: 2.0 + a * np.tanh(b * c),
            deriv=lambda c: a * b / np.cosh(b * c) ** 2,
            p_minus=2.0 - a, p_plus=2.0 + a, lipschitz=a * b, name="tanh",
        )

    @classmethod
    def constant(cls, p: float = 2.0):
        return cls(
            func=lambda c: np.full(np.shape(c), float(p)),
            deriv=lambda c: np.zeros(np.shape(c)),
            p_minus=min(p, 2.0), p_plus=max(p, 2.0), lipschitz=0.0, name="constant",
        )

    @classmethod
    def quadratic(cls, a: float = 1.0, p_plus: float = 2.9, lipschitz: float = 1.0):
        """``p(c) = 2 + a c**2`` with *declared* bounds it does not actually honour.

        Useful only as a negative control for the assumption audit.
        """
        return cls(
            func=lambda c: 2.0 + a * c ** 2,
            deriv=lambda c: 2.0 * a * c,
            p_minus=2.0, p_plus=p_plus, lipschitz=lipschitz, name="quadratic",
        )


@dataclass(frozen=True)
class Coefficient:
    """Smooth scalar map ``c -> gamma(c)`` with its derivative."""

    func: Callable
    deriv: Callable | None = None
    name: str = "custom"

    def __call__(self, c):
        return self.func(np.asarray(c, dtype=float))

    def derivative(self, c, h: float = 1e-5):
        c = np.asarray(c, dtype=float)
        if self.deriv is not None:
            return self.deriv(c)
        step = h * (1.0 + np.abs(c))
        return (self.func(c + step) - self.func(c - step)) / (2 * step)

    @classmethod
    def zero(cls):
        return cls(lambda c: np.zeros(np.shape(c)), lambda c: np.zeros(np.shape(c)), "zero")

    @classmethod
    def constant(cls, value: float):
        if value < 0:
            raise ValueError("gamma must be nonnegative")
        return cls(lambda c: np.full(np.shape(c), float(value)), lambda c: np.zeros(np.shape(c)), "constant")

    @classmethod
    def rational(cls, scale: float = 1.0):
        """``gamma(c) = scale / (1 + c**2)``."""
        if scale < 0:
            raise ValueError("gamma must be nonnegative")
        return cls(lambda c: scale / (1.0 + c ** 2),
                   lambda c: -2.0 * scale * c / (1.0 + c ** 2) ** 2, "rational")


@dataclass(frozen=True)
class ConstitutiveModel:
    exponent: ExponentFunction
    gamma: Coefficient = field(default_factory=Coefficient.zero)
    K1: float = 1.0
    K2: float = 1.0

    def __post_init__(self):
        if not (0 < self.K1 <= self.K2):
            raise ValueError(f"need 0 < K1 <= K2, got K1={self.K1}, K2={self.K2}")

    @classmethod
    def newtonian(cls, K: float = 1.0):
        return cls(ExponentFunction.constant(2.0), Coefficient.zero(), K, K)

    @classmethod
    def canonical(cls, a=0.4, b=1.0, gamma_scale=1.0, K1=0.5, K2=1.0):
        """``p(c) = 2 + a tanh(b c)`` and ``gamma(c) = gamma_scale / (1 + c^2)``."""
        return cls(ExponentFunction.tanh(a, b), Coefficient.rational(gamma_scale), K1, K2)


# -- pointwise laws ------------------------------------------------------------

def frobenius(D):
    D = np.asarray(D, dtype=float)
    return np.sqrt(np.sum(D * D, axis=(0, 1)))


def _magnitude(B):
    B = np.asarray(B, dtype=float)
    if B.ndim >= 2 and B.shape[:2] == (2, 2):
        return frobenius(B)
    return np.abs(B)


def _check_A(A):
    if not A > 1:
        raise ValueError(f"truncation level A must exceed 1, got {A}")


def theta_A(B, A: float):
    """``(2 + min(A^2, |B|^2))^(1/2)``; ``B`` is a tensor (leading ``(2, 2)``) or a magnitude."""
    _check_A(A)
    s = np.minimum(_magnitude(B), A)
    return np.sqrt(2.0 + s * s)


def viscosity(model: ConstitutiveModel, c, s):
    """Generalised viscosity ``nu(c, s)`` at shear magnitude ``s``."""
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    p = model.exponent(c)
    return (1.0 + model.gamma(c) + s * s) ** (0.5 * (p - 2.0))


def stress(model: ConstitutiveModel, c, D):
    D = np.asarray(D, dtype=float)
    return viscosity(model, c, frobenius(D)) * D


def stress_truncated(model: ConstitutiveModel, c, D, A: float):
    """Stress with the viscosity frozen at shear rate ``A`` wherever ``|D| > A``."""
    _check_A(A)
    D = np.asarray(D, dtype=float)
    return viscosity(model, c, np.minimum(frobenius(D), A)) * D


def flux_coefficient(model: ConstitutiveModel, c, s):
    """Scalar ``K1 + (K2 - K1) / (1 + c^2 + s^2)`` multiplying the identity."""
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    return model.K1 + (model.K2 - model.K1) / (1.0 + c * c + s * s)


def flux_matrix(model: ConstitutiveModel, c, s):
    if np.any(np.asarray(s) < 0):
        raise ValueError("shear magnitude must be nonnegative")
    k = flux_coefficient(model, c, s)
    return np.eye(2).reshape((2, 2) + (1,) * np.ndim(k)) * k


# -- derivatives ---------------------------------------------------------------

def stress_jacobian(model, c, D, A: float | None = None):
    """``dS_ij / dD_kl`` as an array of shape ``(2, 2, 2, 2) + batch``.

    With ``A`` given this is the derivative of the truncated stress; the
    rank-one term vanishes on the frozen branch ``|D| > A``.
    """
    D = np.asarray(D, dtype=float)
    c = np.asarray(c, dtype=float)
    s = frobenius(D)
    frozen = np.zeros(s.shape, dtype=bool) if A is None else s > A
    s_eff = s if A is None else np.minimum(s, A)
    p = model.exponent(c)
    base = 1.0 + model.gamma(c) + s_eff ** 2
    nu = base ** (0.5 * (p - 2.0))
    dnu_dq = np.where(frozen, 0.0, 0.5 * (p - 2.0) * base ** (0.5 * (p - 4.0)))
    eye = np.eye(2)
    ident = np.einsum("ik,jl->ijkl", eye, eye).reshape((2, 2, 2, 2) + (1,) * s.ndim)
    return nu * ident + 2.0 * dnu_dq * D[:, :, None, None] * D[None, None, :, :]


def stress_dc(model, c, D, A: float | None = None):
    """``dS / dc`` in closed form (finite differences when a derivative is not supplied)."""
    D = np.asarray(D, dtype=float)
    c = np.asarray(c, dtype=float)
    s = frobenius(D)
    if A is not None:
        s = np.minimum(s, A)
    p = model.exponent(c)
    gam = model.gamma(c)
    base = 1.0 + gam + s * s
    nu = base ** (0.5 * (p - 2.0))
    dnu = nu * (0.5 * model.exponent.derivative(c) * np.log(base)
                + 0.5 * (p - 2.0) * model.gamma.derivative(c) / base)
    return dnu * D


def stress_jacobian_fd(model, c, D, A=None):
    """Central-difference Jacobian with step ``1e-5 (1 + |D|)``."""
    D = np.asarray(D, dtype=float)
    h = 1e-5 * (1.0 + frobenius(D))
    law = (lambda cc, DD: stress(model, cc, DD)) if A is None else \
        (lambda cc, DD: stress_truncated(model, cc, DD, A))
    J = np.zeros((2, 2, 2, 2) + D.shape[2:])
    for k in range(2):
        for l in range(2):
            E = np.zeros_like(D)
            E[k, l] = h
            J[:, :, k, l] = (law(c, D + E) - law(c, D - E)) / (2 * h)
    return J


def log_gap_bound_holds(B, r, s) -> np.ndarray:
    """Predicate ``B^r - B^s <= (r - s) B^r ln B`` for ``B >= 1`` and ``r >= s``.

    A slack of ``1e-14 B^r`` absorbs cancellation in the difference near ``B = 1``.
    """
    B = np.asarray(B, dtype=float)
    Br = B ** r
    lhs = Br - B ** s
    rhs = (r - s) * Br * np.log(B)
    return lhs <= rhs + 1e-14 * Br


# -- assumption audit ----------------------------------------------------------

@dataclass
class SampleSpec:
    n_samples: int = 4000
    c_range: tuple[float, float] = (-4.0, 4.0)
    seed: int = 0
    fd_checks: int = 200
    fd_margin: float = 1e-3


@dataclass
class AssumptionAudit:
    constants: dict
    passed: dict
    witnesses: dict
    messages: list

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def rows(self):
        for name in self.passed:
            yield {
                "check": name,
                "constant": self.constants.get(name, float("nan")),
                "passed": self.passed[name],
                "witness": self.witnesses.get(name, ""),
            }


def _random_sym(rng, n):
    M = rng.standard_normal((2, 2, n))
    M = 0.5 * (M + M.transpose(1, 0, 2))
    return M / frobenius(M)


def audit_samples(A: float, spec: SampleSpec):
    """Stratified ``(c, D, C)`` triples with ``|D|`` near 0, moderate, near ``A`` and far above ``A``."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    q = n // 4
    mags = np.concatenate([
        10.0 ** rng.uniform(-4, -1, q),
        rng.uniform(0.1, A, q),
        A * rng.uniform(0.95, 1.05, q),
        A * 10.0 ** rng.uniform(np.log10(2), 2, n - 3 * q),
    ])
    c = rng.uniform(*spec.c_range, n)
    D = _random_sym(rng, n) * mags
    C = _random_sym(rng, n) * rng.uniform(0.1, 10.0, n)
    return c, D, C


def _max_entry(J):
    return np.max(np.abs(J.reshape((16,) + J.shape[4:])), axis=0)


def _record(audit, name, values, bound, points, lower=False):
    """Store the tightest constant for ``values <= C bound`` (or ``>=`` when ``lower``)."""
    ratio = values / bound
    idx = int(np.argmin(ratio) if lower else np.argmax(ratio))
    const = float(ratio[idx])
    audit.constants[name] = const
    audit.witnesses[name] = points(idx)
    # lower (coercivity) constants must be positive; upper ones only finite
    ok = np.isfinite(const) and (const > 0 if lower else const >= 0)
    audit.passed[name] = bool(ok)
    if not ok:
        audit.messages.append(f"{name}: empirical constant {const!r} at {points(idx)}")


def audit_assumptions(model: ConstitutiveModel, A: float, sample_spec: SampleSpec | None = None) -> AssumptionAudit:
    """Sample the growth, coercivity and Lipschitz assumptions and report tightest constants.

    Upper-bound constants are maxima of ``lhs / envelope``; coercivity constants are
    minima.  A check fails when its constant is not finite and positive, when the
    exponent leaves its declared range or exceeds its Lipschitz constant, or when
    a closed-form derivative disagrees with central differences.
    """
    _check_A(A)
    spec = sample_spec or SampleSpec()
    audit = AssumptionAudit({}, {}, {}, [])
    c, D, C = audit_samples(A, spec)
    s = frobenius(D)

    def at(idx):
        return f"c={c[idx]:.6g} |D|={s[idx]:.6g}"

    # exponent: range and Lipschitz bound on a dense sorted scan plus random pairs
    ex = model.exponent
    cs = np.linspace(*spec.c_range, 20001)
    pv = ex(cs)
    lo, hi = int(np.argmin(pv)), int(np.argmax(pv))
    in_range = pv[lo] >= ex.p_minus - 1e-12 and pv[hi] <= ex.p_plus + 1e-12
    audit.passed["exponent_range"] = bool(in_range)
    audit.constants["exponent_range"] = float(pv[hi] - pv[lo])
    bad = lo if pv[lo] < ex.p_minus - 1e-12 else hi
    audit.witnesses["exponent_range"] = f"c={cs[bad]:.6g} p={pv[bad]:.6g}"
    if not in_range:
        audit.messages.append(f"exponent_range: p(c)={pv[bad]:.6g} at c={cs[bad]:.6g} "
                              f"outside [{ex.p_minus}, {ex.p_plus}]")
    rng = np.random.default_rng(spec.seed + 1)
    a1 = rng.uniform(*spec.c_range, 5000)
    a2 = rng.uniform(*spec.c_range, 5000)
    x1 = np.concatenate([cs[:-1], a1])
    x2 = np.concatenate([cs[1:], a2])
    quot = np.abs(ex(x1) - ex(x2)) / np.maximum(np.abs(x1 - x2), 1e-300)
    k = int(np.argmax(quot))
    audit.constants["exponent_lipschitz"] = float(quot[k])
    lip_ok = quot[k] <= ex.lipschitz * (1 + 1e-6) + 1e-15
    audit.passed["exponent_lipschitz"] = bool(lip_ok)
    audit.witnesses["exponent_lipschitz"] = f"c1={x1[k]:.6g} c2={x2[k]:.6g} quotient={quot[k]:.6g}"
    if not lip_ok:
        audit.messages.append(f"exponent_lipschitz: |p(c1)-p(c2)|/|c1-c2| = {quot[k]:.6g} > "
                              f"L_p = {ex.lipschitz} at c1={x1[k]:.6g}, c2={x2[k]:.6g}")

    # flux bounds
    xi = np.random.default_rng(spec.seed + 2).standard_normal((2, len(c)))
    kap = flux_coefficient(model, c, s)
    kxx = kap * np.sum(xi * xi, axis=0)
    _record(audit, "flux_ellipticity", kxx, np.sum(xi * xi, axis=0), at, lower=True)
    audit.passed["flux_ellipticity"] &= audit.constants["flux_ellipticity"] >= model.K1 * (1 - 1e-12)
    _record(audit, "flux_bound", np.abs(kap), np.ones_like(kap), at)
    audit.passed["flux_bound"] &= audit.constants["flux_bound"] <= model.K2 * (1 + 1e-12)

    p = ex(c)
    one_plus = 1.0 + s
    J = stress_jacobian(model, c, D)
    # (H1)-(H3)
    _record(audit, "H1_growth", _max_entry(J), one_plus ** (p - 2), at)
    JCC = np.einsum("ijkl...,ij...,kl...->...", J, C, C)
    C2 = np.sum(C * C, axis=(0, 1))
    _record(audit, "H2_coercivity", JCC, one_plus ** (p - 2) * C2, at, lower=True)
    dSdc = frobenius(stress_dc(model, c, D))
    _record(audit, "H3_concentration", dSdc, one_plus ** (p - 1) * np.log(2 + s), at)
    nu = viscosity(model, c, s)
    _record(audit, "H4_lower", nu, one_plus ** (p - 2), at, lower=True)
    _record(audit, "H4_upper", nu, one_plus ** (p - 2), at)

    # truncated-stress properties
    th = theta_A(s, A)
    JA = stress_jacobian(model, c, D, A)
    _record(audit, "c00_growth", _max_entry(JA), th ** (p - 2), at)
    JACC = np.einsum("ijkl...,ij...,kl...->...", JA, C, C)
    _record(audit, "c11_coercivity", JACC, th ** (p - 2) * C2, at, lower=True)
    dSAdc = frobenius(stress_dc(model, c, D, A))
    _record(audit, "c22_concentration", dSAdc, np.log(th) * th ** (p - 2) * s, at)

    # closed forms against central differences, away from the |D| = A kink
    m = min(spec.fd_checks, len(c))
    sel = np.nonzero(np.abs(s - A) > 1e-3 * A)[0][:: max(1, len(c) // m)][:m]
    worst, where = 0.0, ""
    for trunc in (None, A):
        Jc = stress_jacobian(model, c[sel], D[:, :, sel], trunc)
        Jf = stress_jacobian_fd(model, c[sel], D[:, :, sel], trunc)
        err = _max_entry(Jc - Jf) / np.maximum(_max_entry(Jc), 1e-300)
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, where = float(err[i]), at(sel[i])
        h = 1e-5 * (1 + np.abs(c[sel]))
        law = (lambda cc: stress(model, cc, D[:, :, sel])) if trunc is None else \
            (lambda cc: stress_truncated(model, cc, D[:, :, sel], trunc))
        fd_c = (law(c[sel] + h) - law(c[sel] - h)) / (2 * h)
        an_c = stress_dc(model, c[sel], D[:, :, sel], trunc)
        scale = np.maximum(frobenius(an_c), 1e-8 * frobenius(D[:, :, sel]) + 1e-300)
        err = frobenius(an_c - fd_c) / scale
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, where = float(err[i]), at(sel[i])
    audit.constants["derivative_consistency"] = worst
    audit.witnesses["derivative_consistency"] = where
    audit.passed["derivative_consistency"] = worst <= spec.fd_margin
    if worst > spec.fd_margin:
        audit.messages.append(f"derivative_consistency: closed form vs finite differences "
                              f"differ by {worst:.3g} at {where}")
    return audit
