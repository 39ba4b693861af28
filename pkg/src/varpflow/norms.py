"""Variable-exponent Lebesgue norms, Korn ratios and local ball quantities.

Campanato convention: ``campanato_quotient`` returns the square root of
``R^-(2+mu) * integral_{B_R} |f - (f)_{B_R}|^2``, i.e. the un-squared quotient
built from the squared oscillation.  The BMO proxy is the supremum of
``mean_oscillation / R`` over dyadic, grid-aligned probes; it is a proxy,
not the BMO norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralField, differentiate

MIN_BALL_POINTS = 16


@dataclass(frozen=True)
class ExponentField:
    """Samples of ``x -> p(c(x))`` on a grid together with their bounds."""

    values: np.ndarray
    p_minus: float
    p_plus: float

    def __post_init__(self):
        v = self.values
        if v.min() < self.p_minus - 1e-12 or v.max() > self.p_plus + 1e-12:
            raise ValueError(f"exponent samples [{v.min()}, {v.max()}] leave "
                             f"[{self.p_minus}, {self.p_plus}]")
        if self.p_minus <= 1:
            raise ValueError("variable exponent must stay above 1")

    @classmethod
    def constant(cls, grid, p: float):
        return cls(np.full(grid.shape, float(p)), float(p), float(p))

    @classmethod
    def from_samples(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(values, float(values.min()), float(values.max()))

    @classmethod
    def from_model(cls, model, c: SpectralField):
        return cls(np.asarray(model.exponent(c.values), dtype=float),
                   model.exponent.p_minus, model.exponent.p_plus)


def _pointwise(f) -> np.ndarray:
    if isinstance(f, SpectralField):
        return f.magnitude()
    return np.abs(np.asarray(f, dtype=float))


def modular(f, pfield: ExponentField) -> float:
    """Grid sum of ``|f(x)|^p(x)`` times the cell area."""
    a = _pointwise(f)
    return float(np.mean(a ** pfield.values))


def luxemburg_norm(f, pfield: ExponentField, rtol: float = 1e-13, max_iter: int = 60) -> float:
    """``inf {lam > 0 : modular(f / lam) <= 1}`` by geometric bisection.

    The initial bracket comes from ``rho^(1/p+)`` and ``rho^(1/p-)`` with
    ``rho = modular(f)``, which always straddles the norm on a unit-measure domain.
    """
    a = _pointwise(f)
    if not np.any(a):
        return 0.0
    p = pfield.values
    pmin, pmax = float(p.min()), float(p.max())
    rho = float(np.mean(a ** p))
    ends = (rho ** (1.0 / pmin), rho ** (1.0 / pmax))
    lo, hi = min(ends) * (1 - 1e-12), max(ends) * (1 + 1e-12)

    def excess(lam):
        return float(np.mean((a / lam) ** p)) - 1.0

    while excess(lo) <= 0:
        lo *= 0.5
    while excess(hi) > 0:
        hi *= 2.0
    for _ in range(max_iter):
        if hi / lo - 1.0 <= rtol:
            return hi
        mid = np.sqrt(lo * hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    if hi / lo - 1.0 > 1e-8:
        raise RuntimeError(f"Luxemburg bisection stalled with bracket [{lo}, {hi}]")
    return hi


def korn_ratio(v: SpectralField, pfield: ExponentField) -> float:
    """``||grad v||_p(.) / ||D v||_p(.)``; the degenerate ``0 / 0`` case is 1."""
    grad = differentiate(v, "grad")
    sym = differentiate(v, "sym_grad")
    num = luxemburg_norm(grad, pfield)
    den = luxemburg_norm(sym, pfield)
    if den == 0.0:
        return 1.0
    return num / den


# -- local quantities ----------------------------------------------------------

def periodic_offsets(grid, center):
    """Per-axis periodic distances of grid points to ``center``."""
    x = np.arange(grid.n_modes) * grid.spacing
    out = []
    for ci in center:
        d = np.abs(x - ci) % 1.0
        out.append(np.minimum(d, 1.0 - d))
    return out


def ball_mask(grid, center, radius) -> np.ndarray:
    dx, dy = periodic_offsets(grid, center)
    return dx[:, None] ** 2 + dy[None, :] ** 2 < radius ** 2


@dataclass
class BallProbe:
    """Ball ``B_R(center)`` on the torus with a cache of local integrals."""

    center: tuple[float, float]
    radius: float
    cache: dict = field(default_factory=dict)
    under_resolved: bool = False

    def __post_init__(self):
        if not 0 < self.radius <= 0.25:
            raise ValueError(f"probe radius must lie in (0, 1/4], got {self.radius}")
        self.center = (float(self.center[0]) % 1.0, float(self.center[1]) % 1.0)

    def mask(self, grid, scale: float = 1.0) -> np.ndarray:
        m = ball_mask(grid, self.center, scale * self.radius)
        if m.sum() < MIN_BALL_POINTS:
            self.under_resolved = True
        return m

    def annulus_mask(self, grid) -> np.ndarray:
        return self.mask(grid, 2.0) & ~self.mask(grid)


def _samples(f):
    if isinstance(f, SpectralField):
        return f.grid, f.values, len(f.values.shape) - 2
    raise TypeError("expected a SpectralField")


def ball_integral(probe: BallProbe, integrand: SpectralField, name: str | None = None) -> float:
    """Cell-centre quadrature of a scalar integrand over the probe ball."""
    if name is not None and name in probe.cache:
        return probe.cache[name]
    grid, vals, lead = _samples(integrand)
    if lead:
        raise ValueError("ball_integral needs a scalar integrand")
    m = probe.mask(grid)
    out = float(vals[m].sum() * grid.spacing ** 2)
    if name is not None:
        probe.cache[name] = out
    return out


def annulus_integral(probe: BallProbe, integrand: SpectralField) -> float:
    grid, vals, lead = _samples(integrand)
    if lead:
        raise ValueError("annulus_integral needs a scalar integrand")
    return float(vals[probe.annulus_mask(grid)].sum() * grid.spacing ** 2)


def _oscillation(grid, vals, lead, m) -> float:
    flat = vals.reshape((-1,) + grid.shape)[:, m]
    if flat.shape[1] == 0:
        return 0.0
    dev = flat - flat.mean(axis=1, keepdims=True)
    return float(np.sqrt(np.sum(dev ** 2) * grid.spacing ** 2))


def mean_oscillation(probe: BallProbe, f: SpectralField) -> float:
    """``(integral_{B_R} |f - (f)_{B_R}|^2)^(1/2)``; vector/tensor fields use the Frobenius norm."""
    grid, vals, lead = _samples(f)
    return _oscillation(grid, vals, lead, probe.mask(grid))


def campanato_quotient(probe: BallProbe, f: SpectralField, mu: float) -> float:
    return probe.radius ** (-(2.0 + mu) / 2.0) * mean_oscillation(probe, f)


def bmo_proxy(f: SpectralField, centers, radii) -> float:
    """``sup mean_oscillation / R`` over the given grid-aligned centres and dyadic radii."""
    best = 0.0
    for c in centers:
        for r in radii:
            best = max(best, mean_oscillation(BallProbe(c, r), f) / r)
    return best


def _shift_distance(grid, shifts):
    d = np.abs(shifts) * grid.spacing
    d = np.minimum(d, 1.0 - d)
    return np.sqrt(np.sum(d * d, axis=1))


def holder_seminorm(f: SpectralField, alpha: float, max_pairs: int = 10 ** 6, seed: int = 0) -> float:
    """Max of ``|f(x) - f(y)| / dist(x, y)^alpha`` over grid pairs with periodic distance.

    Pairs are enumerated by grid displacement; when all ``N^4`` pairs exceed
    ``max_pairs`` the nearest displacements and a seeded random sample of the
    rest are used.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"Holder exponent must lie in (0, 1], got {alpha}")
    grid, vals, lead = _samples(f)
    n = grid.n_modes
    flat = vals.reshape((-1,) + grid.shape)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    shifts = np.stack([ii.ravel(), jj.ravel()], axis=1)
    shifts = shifts[1:]  # drop the zero displacement
    wrapped = np.where(shifts > n // 2, shifts - n, shifts)
    budget = max(1, max_pairs // (n * n))
    if len(shifts) > budget:
        dist = _shift_distance(grid, wrapped)
        order = np.argsort(dist, kind="stable")
        near = order[: budget // 2]
        rest = order[budget // 2:]
        rng = np.random.default_rng(seed)
        far = rng.choice(rest, size=budget - len(near), replace=False)
        shifts = shifts[np.sort(np.concatenate([near, far]))]
        wrapped = np.where(shifts > n // 2, shifts - n, shifts)
    dist = _shift_distance(grid, wrapped)
    best = 0.0
    for (a, b), d in zip(shifts, dist):
        diff = flat - np.roll(flat, shift=(-a, -b), axis=(1, 2))
        m = np.sqrt(np.max(np.sum(diff * diff, axis=0)))
        best = max(best, m / d ** alpha)
    return float(best)
