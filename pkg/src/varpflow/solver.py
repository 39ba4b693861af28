"""Galerkin / Fourier solver for the steady truncated coupled system.

Velocity lives in the span of the first ``n`` Stokes eigenfunctions, the
concentration on every Fourier mode kept by the 2/3 rule (plus a prescribed
mean).  Nonlinear coefficients are lagged (Picard / Kacanov iteration) so each
step solves two symmetric positive definite linear systems by preconditioned
conjugate gradients.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .constitutive import ConstitutiveModel, flux_coefficient, frobenius, viscosity
from .spectral import (
    PeriodicGrid,
    SpectralField,
    StokesBasis,
    get_grid,
    resample,
    resample_coeffs,
    stokes_basis,
)

log = logging.getLogger(__name__)


class LinearSolveError(RuntimeError):
    pass


class TruncationFailure(RuntimeError):
    """The truncation level exceeded ``A_max`` before the shear bound was met."""

    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


@dataclass
class SolverConfig:
    n_modes: int = 32
    n_basis: int | None = None
    A: float = 2.0
    relaxation: float = 1.0
    tol_residual: float = 1e-10
    max_picard: int = 500
    A_margin: float = 0.9
    A_growth: float = 2.0
    A_max: float = 1e4
    mean_c: float = 0.0
    linear_rtol: float = 1e-14

    def __post_init__(self):
        get_grid(self.n_modes)
        checks = [
            (self.A > 1, "A must exceed 1"),
            (0 < self.relaxation <= 1, "relaxation must lie in (0, 1]"),
            (self.tol_residual > 0, "tol_residual must be positive"),
            (self.max_picard >= 1, "max_picard must be at least 1"),
            (0 < self.A_margin < 1, "A_margin must lie in (0, 1)"),
            (self.A_growth > 1, "A_growth must exceed 1"),
            (self.A_max >= self.A, "A_max must be at least A"),
            (np.isfinite(self.mean_c), "mean_c must be finite"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @property
    def grid(self) -> PeriodicGrid:
        return get_grid(self.n_modes)


@dataclass
class ProblemData:
    """Body force ``f``, concentration source ``g`` and the constitutive model.

    ``r`` records the integrability ``f in L^(2+2r)`` used by default exponents
    in the diagnostics.
    """

    f: SpectralField
    g: SpectralField
    model: ConstitutiveModel
    r: float = 1.0

    def __post_init__(self):
        if self.f.rank != "vector" or self.g.rank != "vector":
            raise ValueError("f and g must be vector fields")
        if not (np.all(np.isfinite(self.f.values)) and np.all(np.isfinite(self.g.values))):
            raise ValueError("f and g must be finite")
        if self.r <= 0:
            raise ValueError("integrability exponent r must be positive")

    @classmethod
    def zero(cls, grid, model, r=1.0):
        return cls(SpectralField.zeros(grid, "vector"), SpectralField.zeros(grid, "vector"), model, r)


@dataclass
class SolutionState:
    alpha: np.ndarray
    c: SpectralField
    basis: StokesBasis
    A: float
    residual_history: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    max_shear: float = 0.0
    mean_c: float = 0.0
    # (A, max_shear, converged) per truncation level
    shear_history: list = field(default_factory=list)
    accepted: bool | None = None
    message: str = ""

    @property
    def grid(self) -> PeriodicGrid:
        return self.basis.grid

    @property
    def velocity(self) -> SpectralField:
        return self.basis.velocity(self.alpha)

    @property
    def residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")


# -- discrete operators --------------------------------------------------------

def _sym_grad_hat(grid, v_hat):
    kv = 1j * grid.wavevector
    G = v_hat[:, None] * kv[None, :]
    return 0.5 * (G + G.transpose(1, 0, 2, 3))


def _div_tensor_hat(grid, T_hat):
    return (T_hat * (1j * grid.wavevector)[None, :]).sum(axis=1)


def max_shear(state_or_vhat, grid=None, refine: int = 2) -> float:
    """``max |Dv|`` sampled on a ``refine``-times finer grid."""
    if isinstance(state_or_vhat, SolutionState):
        grid = state_or_vhat.grid
        v_hat = state_or_vhat.basis.to_spectral(state_or_vhat.alpha)
    else:
        v_hat = state_or_vhat
    fine = get_grid(refine * grid.n_modes)
    D_hat = resample_coeffs(_sym_grad_hat(grid, v_hat), grid, fine)
    return float(frobenius(fine.ifft(D_hat)).max())


class Discretization:
    """Projected data and residual/step kernels for one grid, basis and model."""

    def __init__(self, data: ProblemData, cfg: SolverConfig, basis: StokesBasis | None = None):
        self.cfg = cfg
        self.grid = cfg.grid
        self.basis = basis if basis is not None else stokes_basis(self.grid, cfg.n_basis)
        self.model = data.model
        g = self.grid
        f_hat = resample_coeffs(data.f.coeffs, data.f.grid, g)
        g_hat = resample_coeffs(data.g.coeffs, data.g.grid, g)
        self.f_moments = self.basis.from_spectral(f_hat)
        self.g_hat = np.where(g.retained, g_hat, 0.0)
        self.f_scale = float(np.linalg.norm(self.f_moments))
        self.g_scale = float(np.sqrt(g.inner_hat(self.g_hat[0], self.g_hat[0])
                                     + g.inner_hat(self.g_hat[1], self.g_hat[1])))
        self.g_field = g.ifft(self.g_hat)
        k2 = g.k2
        self._k2_safe = np.where(k2 > 0, k2, 1.0)
        self._conc_mask = g.retained & (k2 > 0)

    # -- state helpers
    def fields(self, alpha, c_tilde_hat):
        """Physical velocity, strain, shear magnitude and concentration for a state."""
        g = self.grid
        v_hat = self.basis.to_spectral(alpha)
        v = g.ifft(v_hat)
        D = g.ifft(_sym_grad_hat(g, v_hat))
        c = g.ifft(c_tilde_hat) + self.cfg.mean_c
        return v_hat, v, D, frobenius(D), c

    def viscosity_field(self, c, s, A):
        return viscosity(self.model, c, np.minimum(s, A))

    # -- linear operators
    def momentum_apply(self, alpha, nu):
        g = self.grid
        D = g.ifft(_sym_grad_hat(g, self.basis.to_spectral(alpha)))
        S_hat = g.fft(nu * D)
        return self.basis.from_spectral(-_div_tensor_hat(g, S_hat))

    def convection_moments(self, v):
        g = self.grid
        vv_hat = g.fft(v[:, None] * v[None, :])
        return self.basis.from_spectral(_div_tensor_hat(g, vv_hat))

    def conc_apply_hat(self, c_hat, kappa):
        g = self.grid
        kv = 1j * g.wavevector
        grad = g.ifft(kv * c_hat)
        flux_hat = g.fft(kappa * grad)
        return np.where(self._conc_mask, -(kv * flux_hat).sum(axis=0), 0.0)

    def conc_source_hat(self, c, v):
        """Coefficients of ``-div(c v + g)`` on the retained modes."""
        g = self.grid
        flux_hat = g.fft(c * v) + self.g_hat
        return np.where(self._conc_mask, -(1j * g.wavevector * flux_hat).sum(axis=0), 0.0)

    # -- residuals
    def residual(self, alpha, c_tilde_hat, A):
        """Momentum residual moments and concentration defect coefficients."""
        g = self.grid
        v_hat, v, D, s, c = self.fields(alpha, c_tilde_hat)
        nu = self.viscosity_field(c, s, A)
        S_hat = g.fft(nu * D)
        mom = (self.basis.from_spectral(-_div_tensor_hat(g, S_hat))
               + self.convection_moments(v) - self.f_moments)
        kappa = flux_coefficient(self.model, c, s)
        conc = self.conc_apply_hat(c_tilde_hat, kappa) - self.conc_source_hat(c, v)
        return mom, conc

    def conc_defect_norm(self, conc_hat) -> float:
        """Dual (H^-1) norm of the concentration defect."""
        g = self.grid
        return float(np.sqrt(np.sum(g.hermitian_weight * np.abs(conc_hat) ** 2 / self._k2_safe)))

    def combined(self, mom, conc) -> float:
        fs = self.f_scale if self.f_scale > 0 else 1.0
        gs = self.g_scale if self.g_scale > 0 else 1.0
        return max(float(np.linalg.norm(mom)) / fs, self.conc_defect_norm(conc) / gs)

    # -- Picard step
    def step(self, alpha, c_tilde_hat, A, iteration=0):
        g = self.grid
        cfg = self.cfg
        v_hat, v, D, s, c = self.fields(alpha, c_tilde_hat)
        nu = self.viscosity_field(c, s, A)
        kappa = flux_coefficient(self.model, c, s)

        n = len(self.basis)
        rhs = self.f_moments - self.convection_moments(v)
        nu_bar = float(nu.mean())
        precond = 2.0 / (nu_bar * self.basis.eigenvalues)
        op = LinearOperator((n, n), matvec=lambda a: self.momentum_apply(a, nu), dtype=float)
        M = LinearOperator((n, n), matvec=lambda r: precond * r, dtype=float)
        alpha_new = self._cg(op, rhs, alpha, M, "momentum", iteration)

        rhs_c = self.conc_source_hat(c, v)
        shape = g.shape
        kappa_bar = float(kappa.mean())
        mask = self._conc_mask
        inv_sym = np.where(mask, 1.0 / (kappa_bar * self._k2_safe), 0.0)

        def lap(u):
            return g.ifft(self.conc_apply_hat(g.fft(u.reshape(shape)), kappa)).ravel()

        def pre(r):
            return g.ifft(inv_sym * g.fft(r.reshape(shape))).ravel()

        N2 = shape[0] * shape[1]
        opc = LinearOperator((N2, N2), matvec=lap, dtype=float)
        Mc = LinearOperator((N2, N2), matvec=pre, dtype=float)
        c0 = g.ifft(c_tilde_hat).ravel()
        c_new = self._cg(opc, g.ifft(rhs_c).ravel(), c0, Mc, "concentration", iteration)
        c_new_hat = np.where(mask, g.fft(c_new.reshape(shape)), 0.0)

        w = cfg.relaxation
        return w * alpha_new + (1 - w) * alpha, w * c_new_hat + (1 - w) * c_tilde_hat

    def _cg(self, op, rhs, x0, M, label, iteration):
        if not np.any(rhs):
            return np.zeros_like(x0)
        x, info = cg(op, rhs, x0=x0, rtol=self.cfg.linear_rtol, atol=0.0, M=M, maxiter=2000)
        if info < 0 or not np.all(np.isfinite(x)):
            raise LinearSolveError(f"{label} solve broke down at Picard iteration {iteration} (info={info})")
        if info > 0:
            res = np.linalg.norm(op.matvec(x) - rhs) / np.linalg.norm(rhs)
            if res > 1e-8:
                raise LinearSolveError(f"{label} solve stalled at Picard iteration {iteration}: "
                                       f"relative residual {res:.3e}")
        return x


# -- public operations ---------------------------------------------------------

def _c_tilde_hat(state: SolutionState, grid):
    c_hat = resample_coeffs(state.c.coeffs, state.c.grid, grid)
    c_hat[0, 0] = 0.0
    return np.where(grid.retained, c_hat, 0.0)


def _make_state(disc, alpha, c_tilde_hat, A, **kw):
    g = disc.grid
    c_hat = c_tilde_hat.copy()
    c_hat[0, 0] = disc.cfg.mean_c
    c = SpectralField(g, "scalar", coeffs=c_hat)
    st = SolutionState(alpha=np.asarray(alpha, dtype=float), c=c, basis=disc.basis, A=A,
                       mean_c=disc.cfg.mean_c, **kw)
    st.max_shear = max_shear(disc.basis.to_spectral(st.alpha), g)
    return st


def zero_state(cfg: SolverConfig, basis: StokesBasis | None = None) -> SolutionState:
    basis = basis if basis is not None else stokes_basis(cfg.grid, cfg.n_basis)
    c_hat = np.zeros(cfg.grid.spec_shape, dtype=complex)
    c_hat[0, 0] = cfg.mean_c
    return SolutionState(alpha=np.zeros(len(basis)), c=SpectralField(cfg.grid, "scalar", coeffs=c_hat),
                         basis=basis, A=cfg.A, mean_c=cfg.mean_c)


def _warm_start(initial, disc):
    """Coefficients of a previous state transferred to this discretisation."""
    g = disc.grid
    if initial is None:
        return np.zeros(len(disc.basis)), np.zeros(g.spec_shape, dtype=complex)
    v_hat = resample_coeffs(initial.basis.to_spectral(initial.alpha), initial.grid, g)
    return disc.basis.from_spectral(v_hat), _c_tilde_hat(initial, g)


def residual(state: SolutionState, data: ProblemData, cfg: SolverConfig):
    """Momentum residual vector and concentration defect field for ``state``.

    The i-th momentum entry is ``int S^A : D w_i - int (v x v) : grad w_i - int f . w_i``;
    the concentration defect is the weak-form defect tested against every retained
    Fourier mode, returned as a scalar field.
    """
    disc = Discretization(data, cfg, state.basis)
    mom, conc = disc.residual(state.alpha, _c_tilde_hat(state, disc.grid), state.A)
    return mom, SpectralField(disc.grid, "scalar", coeffs=conc, mean_locked=True)


def relative_residual(state: SolutionState, data: ProblemData, cfg: SolverConfig) -> float:
    disc = Discretization(data, cfg, state.basis)
    return disc.combined(*disc.residual(state.alpha, _c_tilde_hat(state, disc.grid), state.A))


def picard_step(state: SolutionState, data: ProblemData, cfg: SolverConfig) -> SolutionState:
    """One lagged-coefficient step followed by under-relaxation."""
    disc = Discretization(data, cfg, state.basis)
    alpha, c_hat = disc.step(state.alpha, _c_tilde_hat(state, disc.grid), state.A, state.iterations)
    return _make_state(disc, alpha, c_hat, state.A, iterations=state.iterations + 1,
                       residual_history=list(state.residual_history))


def solve_coupled(data: ProblemData, cfg: SolverConfig, initial: SolutionState | None = None,
                  disc: Discretization | None = None) -> SolutionState:
    """Picard iteration at fixed truncation level ``cfg.A`` until the relative residual
    drops below ``cfg.tol_residual`` or ``cfg.max_picard`` steps are spent.

    Non-convergence is reported through ``converged=False`` and the residual history.
    """
    disc = disc if disc is not None else Discretization(data, cfg)
    if disc.f_scale == 0.0 and disc.g_scale == 0.0:
        st = zero_state(cfg, disc.basis)
        st.residual_history = [0.0]
        st.converged = True
        st.message = "zero data: zero solution"
        return st
    alpha, c_hat = _warm_start(initial, disc)
    history = []
    A = cfg.A
    for it in range(cfg.max_picard + 1):
        rel = disc.combined(*disc.residual(alpha, c_hat, A))
        history.append(rel)
        log.debug("A=%g iteration %d relative residual %.3e", A, it, rel)
        if not np.isfinite(rel):
            return _make_state(disc, alpha, c_hat, A, residual_history=history, iterations=it,
                               converged=False, message=f"residual became non-finite at iteration {it}")
        if rel <= cfg.tol_residual:
            return _make_state(disc, alpha, c_hat, A, residual_history=history, iterations=it,
                               converged=True, message=f"converged in {it} iterations")
        if it == cfg.max_picard:
            break
        alpha, c_hat = disc.step(alpha, c_hat, A, it)
    return _make_state(disc, alpha, c_hat, A, residual_history=history, iterations=cfg.max_picard,
                       converged=False,
                       message=f"no convergence after {cfg.max_picard} iterations "
                               f"(relative residual {history[-1]:.3e} > {cfg.tol_residual:.1e})")


def truncation_loop(data: ProblemData, cfg: SolverConfig, initial: SolutionState | None = None) -> SolutionState:
    """Raise ``A`` geometrically until the converged solution satisfies
    ``max |Dv| <= A_margin * A``; then the truncated and original stresses agree
    on the solution.

    Raises :class:`TruncationFailure` (carrying the last state) once ``A`` would
    exceed ``A_max``.  A non-converged solve is returned as is with
    ``accepted=False``.
    """
    disc = Discretization(data, cfg)
    A = cfg.A
    history = []
    state = initial
    while True:
        state = solve_coupled(data, replace(cfg, A=A, A_max=max(cfg.A_max, A)), state, disc)
        state.A = A
        history.append((A, state.max_shear, state.converged))
        state.shear_history = list(history)
        if not state.converged:
            state.accepted = False
            return state
        if state.max_shear <= cfg.A_margin * A:
            state.accepted = True
            state.message += f"; accepted A={A:g} with max|Dv|={state.max_shear:.6g}"
            return state
        if A * cfg.A_growth > cfg.A_max:
            state.accepted = False
            trail = ", ".join(f"A={a:g}: max|Dv|={s:.4g}" for a, s, _ in history)
            raise TruncationFailure(
                f"A would exceed A_max={cfg.A_max:g} before max|Dv| <= {cfg.A_margin} A; "
                f"shear history: {trail}", state)
        A *= cfg.A_growth


def to_grid(field: SpectralField, n_modes: int) -> SpectralField:
    return resample(field, n_modes)
