"""Pseudo-spectral solver and estimate diagnostics for steady flows with
concentration-dependent power-law viscosity on the unit torus."""
from .constitutive import (AssumptionAudit, Coefficient, ConstitutiveModel, ExponentFunction, SampleSpec,
                           audit_assumptions, flux_matrix, stress, stress_truncated, theta_A)
from .diagnostics import (EstimateReport, ProbeSpec, caccioppoli_report, energy_report, hole_start_report,
                          key_estimate_report, weighted_h2_report)
from .estimator import CoupledFlowSolver
from .holefill import (HoleFillCase, check_conclusion, check_hypothesis, mu_exponent, replay, synth_case)
from .manufactured import ManufacturedCase, make_sources, mms_error, standard_case
from .norms import BallProbe, ExponentField, korn_ratio, luxemburg_norm, modular
from .solver import (ProblemData, SolutionState, SolverConfig, TruncationFailure, picard_step, residual,
                     solve_coupled, truncation_loop)
from .spectral import (PeriodicGrid, SpectralField, StokesBasis, differentiate, get_grid, leray_project,
                       stokes_basis)

__version__ = "0.1.0"

__all__ = [
    "AssumptionAudit", "BallProbe", "Coefficient", "ConstitutiveModel", "CoupledFlowSolver", "EstimateReport",
    "ExponentField", "ExponentFunction", "HoleFillCase", "ManufacturedCase", "PeriodicGrid", "ProbeSpec",
    "ProblemData", "SampleSpec", "SolutionState", "SolverConfig", "SpectralField", "StokesBasis",
    "TruncationFailure", "audit_assumptions", "caccioppoli_report", "check_conclusion", "check_hypothesis",
    "differentiate", "energy_report", "flux_matrix", "get_grid", "hole_start_report", "key_estimate_report",
    "korn_ratio", "leray_project", "luxemburg_norm", "make_sources", "mms_error", "modular", "mu_exponent",
    "picard_step", "replay", "residual", "solve_coupled", "standard_case", "stokes_basis", "stress",
    "stress_truncated", "synth_case", "theta_A", "truncation_loop", "weighted_h2_report",
]
