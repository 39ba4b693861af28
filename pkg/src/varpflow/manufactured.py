"""Manufactured solutions: pick smooth ``(v*, c*)`` and synthesise the sources.

``v* = (-d2 psi, d1 psi)`` for a trigonometric stream function ``psi`` so it is
divergence-free and zero-mean by construction.  Sources are formed on a fine
synthesis grid with the untruncated stress and zero pressure:

    f = div(v* (x) v*) - div S(c*, D v*)
    g = -grad lap^-1 [ div(c* v*) - div(K(c*, |D v*|) grad c*) ]
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import ConstitutiveModel, flux_coefficient, frobenius, stress
from .spectral import SpectralField, differentiate, get_grid, resample

TWO_PI = 2.0 * np.pi
ALIAS_TOL = 1e-12


def trig_poly(terms, x1, x2):
    """``sum a cos(2 pi k.x) + b sin(2 pi k.x)`` over ``(k1, k2, a, b)`` terms."""
    out = np.zeros(np.broadcast(x1, x2).shape)
    for k1, k2, a, b in terms:
        ph = TWO_PI * (k1 * x1 + k2 * x2)
        out = out + a * np.cos(ph) + b * np.sin(ph)
    return out


@dataclass(frozen=True)
class ManufacturedCase:
    psi_terms: tuple
    c_terms: tuple
    mean_c: float
    model: ConstitutiveModel = field(default_factory=ConstitutiveModel.canonical)
    synthesis_modes: int = 256
    name: str = "custom"

    def __post_init__(self):
        band = max([max(abs(t[0]), abs(t[1])) for t in self.psi_terms + self.c_terms] or [0])
        get_grid(self.synthesis_modes)
        if 3 * band >= self.synthesis_modes // 2:
            raise ValueError("synthesis grid too coarse for the prescribed fields")

    @property
    def bandwidth(self) -> int:
        return max([max(abs(t[0]), abs(t[1])) for t in self.psi_terms + self.c_terms] or [0])

    def stream_function(self, n_modes: int) -> SpectralField:
        g = get_grid(n_modes)
        return SpectralField.from_function(g, lambda x, y: trig_poly(self.psi_terms, x, y))

    def velocity(self, n_modes: int) -> SpectralField:
        grad = differentiate(self.stream_function(n_modes), "grad")
        return SpectralField(grad.grid, "vector", coeffs=np.array([-grad.coeffs[1], grad.coeffs[0]]),
                             mean_locked=True)

    def concentration(self, n_modes: int) -> SpectralField:
        g = get_grid(n_modes)
        return SpectralField.from_function(g, lambda x, y: self.mean_c + trig_poly(self.c_terms, x, y))

    def max_shear(self, n_modes: int | None = None) -> float:
        v = self.velocity(n_modes or self.synthesis_modes)
        return float(frobenius(differentiate(v, "sym_grad").values).max())


def standard_case(model: ConstitutiveModel | None = None, synthesis_modes: int = 256) -> ManufacturedCase:
    """Fixed smooth benchmark ("standard-v1"); changing it changes every golden number."""
    psi = (
        (1, 0, 0.0, 0.036),
        (1, 1, 0.024, 0.0),
        (0, 2, 0.0, 0.015),
        (2, 1, 0.009, 0.006),
        (-1, 2, 0.006, 0.0),
    )
    conc = (
        (1, 0, 0.0, 0.4),
        (1, 2, 0.2, 0.0),
        (0, 1, 0.3, 0.1),
        (2, -1, 0.0, 0.1),
    )
    return ManufacturedCase(psi, conc, 0.3, model or ConstitutiveModel.canonical(),
                            synthesis_modes, "standard-v1")


def _high_band_fraction(field: SpectralField) -> float:
    g = field.grid
    e = np.abs(field.coeffs) ** 2 * g.hermitian_weight
    total = e.sum()
    if total == 0:
        return 0.0
    return float(e[..., ~g.retained].sum() / total)


def make_sources(case: ManufacturedCase, n_modes: int | None = None):
    """Exact sources ``(f, g)`` on the synthesis grid, optionally restricted to ``n_modes``.

    Raises ``ValueError`` when the synthesised fields carry more than ``1e-12`` of
    their energy beyond the synthesis grid's 2/3 band (aliasing).
    """
    N = case.synthesis_modes
    grid = get_grid(N)
    v = case.velocity(N)
    c = case.concentration(N)
    model = case.model
    D = differentiate(v, "sym_grad").values
    S = SpectralField(grid, "sym_tensor", values=stress(model, c.values, D))
    vv = SpectralField(grid, "tensor", values=v.values[:, None] * v.values[None, :])
    f = differentiate(vv, "div") - differentiate(S, "div")

    grad_c = differentiate(c, "grad")
    kappa = flux_coefficient(model, c.values, frobenius(D))
    flux = SpectralField(grid, "vector", values=c.values * v.values - kappa * grad_c.values)
    h = differentiate(flux, "div").coeffs
    k2 = grid.k2
    inv = np.where(k2 > 0, -1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    phi = SpectralField(grid, "scalar", coeffs=inv * h, mean_locked=True)
    g = -1.0 * differentiate(phi, "grad")

    for name, fld in (("f", f), ("g", g)):
        frac = _high_band_fraction(fld)
        if frac > ALIAS_TOL:
            raise ValueError(f"synthesis grid {N} under-resolves {name}: "
                             f"energy fraction {frac:.3e} above the 2/3 cutoff")
    if n_modes is not None:
        f, g = resample(f, n_modes), resample(g, n_modes)
    return f, g


def problem_data(case: ManufacturedCase, r: float = 1.0):
    from .solver import ProblemData

    f, g = make_sources(case)
    return ProblemData(f, g, case.model, r)


def mms_error(state, case: ManufacturedCase) -> dict:
    """L2 and H1 velocity errors and the L2 concentration error.

    The discrete fields are spectrally padded to the synthesis grid before
    comparison.
    """
    N = case.synthesis_modes
    v = resample(state.velocity, N)
    c = resample(state.c, N)
    ev = v - case.velocity(N)
    ec = c - case.concentration(N)
    grad = differentiate(ev, "grad")
    l2v = ev.l2_norm()
    return {
        "n_modes": state.grid.n_modes,
        "velocity_l2": l2v,
        "velocity_h1": float(np.sqrt(l2v ** 2 + grad.l2_norm() ** 2)),
        "concentration_l2": ec.l2_norm(),
    }
