"""scikit-learn style front end to the coupled solver."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_positive, check_vector_field
from .constitutive import ConstitutiveModel
from .solver import ProblemData, SolverConfig, solve_coupled, truncation_loop
from .spectral import evaluate


class CoupledFlowSolver(BaseEstimator):
    """Steady flow and concentration for given sources.

    ``fit`` takes ``(f, g)`` (vector fields or ``(2, N, N)`` samples, or a
    :class:`ProblemData`) and solves; ``predict`` returns ``[v1, v2, c]`` at
    arbitrary points of the unit torus.

    Parameters
    ----------
    n_modes : int
        Collocation grid size (power of two, at least 8).
    A : float
        Initial truncation level; raised automatically when ``adapt_A`` is set.
    model : ConstitutiveModel, optional
        Defaults to :meth:`ConstitutiveModel.canonical`.
    """

    def __init__(self, n_modes=32, A=2.0, relaxation=1.0, tol_residual=1e-10, max_picard=500,
                 mean_c=0.0, A_max=1e4, adapt_A=True, model=None, r=1.0):
        self.n_modes = n_modes
        self.A = A
        self.relaxation = relaxation
        self.tol_residual = tol_residual
        self.max_picard = max_picard
        self.mean_c = mean_c
        self.A_max = A_max
        self.adapt_A = adapt_A
        self.model = model
        self.r = r

    def _config(self) -> SolverConfig:
        return SolverConfig(n_modes=int(self.n_modes), A=float(self.A), relaxation=float(self.relaxation),
                            tol_residual=check_positive(self.tol_residual, "tol_residual"),
                            max_picard=int(self.max_picard), A_max=float(self.A_max),
                            mean_c=float(self.mean_c))

    def fit(self, X, y=None):
        """Solve for sources ``X = (f, g)`` or ``X = ProblemData``; ``y`` is ignored."""
        cfg = self._config()
        if isinstance(X, ProblemData):
            data = X
        else:
            try:
                f, g = X
            except (TypeError, ValueError):
                raise ValueError("X must be ProblemData or a pair (f, g)") from None
            model = self.model if self.model is not None else ConstitutiveModel.canonical()
            data = ProblemData(check_vector_field(f, "f"), check_vector_field(g, "g"), model,
                               check_positive(self.r, "r"))
        state = truncation_loop(data, cfg) if self.adapt_A else solve_coupled(data, cfg)
        self.state_ = state
        self.data_ = data
        self.converged_ = bool(state.converged)
        self.A_ = float(state.A)
        self.residual_ = float(state.residual)
        self.n_iter_ = int(state.iterations)
        return self

    def predict(self, X) -> np.ndarray:
        """Velocity and concentration at points ``X`` of shape ``(m, 2)``; returns ``(m, 3)``."""
        check_is_fitted(self, "state_")
        pts = check_points(X)
        v = evaluate(self.state_.velocity, pts)
        c = evaluate(self.state_.c, pts)
        return np.column_stack([v, c])

    def score(self, X=None, y=None) -> float:
        """Negative final relative residual (larger is better)."""
        check_is_fitted(self, "state_")
        return -self.residual_
