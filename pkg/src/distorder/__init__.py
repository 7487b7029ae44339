"""Distributed-order fractional diffusion on an interval.

Kernels and special functions, two independent forward solvers (eigenfunction
series and theta-function representation), and recovery of the order weight
``mu`` from a single time trace.
"""

from .errors import (
    AccuracyError,
    AccuracyWarning,
    ConditioningError,
    DistOrderError,
    DomainError,
    ExcitationError,
    RangeError,
    SolverError,
)
from .mu_model import (
    MuSpec,
    PsiParams,
    eta_primitive,
    eval_eta,
    eval_phi,
    eval_phi_sqrt,
    validate,
)
from .series import Field1D, TimeSeries, graded_grid, uniform_grid
from .special_functions import mittag_leffler, ml_relaxation
from .laplace import ContourSpec, bromwich_invert, forward_laplace, kappa
from .dode import apply_Dmu, apply_Imu, solve_dode
from .forward_spectral import EigenSystem, dirichlet_laplacian_eigs, solve_spectral
from .forward_theta import ThetaConfig, g_mu, solve_representation, theta, theta_bar
from .inverse import (
    InverseProblemSpec,
    PhiSampleSet,
    RecoveredMu,
    choose_sample_points,
    invert_F,
    phi_samples_from_data,
    reconstruct_mu,
    synth_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "AccuracyWarning",
    "ConditioningError",
    "DistOrderError",
    "DomainError",
    "ExcitationError",
    "RangeError",
    "SolverError",
    "MuSpec",
    "PsiParams",
    "eta_primitive",
    "eval_eta",
    "eval_phi",
    "eval_phi_sqrt",
    "validate",
    "Field1D",
    "TimeSeries",
    "graded_grid",
    "uniform_grid",
    "mittag_leffler",
    "ml_relaxation",
    "ContourSpec",
    "bromwich_invert",
    "forward_laplace",
    "kappa",
    "apply_Dmu",
    "apply_Imu",
    "solve_dode",
    "EigenSystem",
    "dirichlet_laplacian_eigs",
    "solve_spectral",
    "ThetaConfig",
    "g_mu",
    "solve_representation",
    "theta",
    "theta_bar",
    "InverseProblemSpec",
    "PhiSampleSet",
    "RecoveredMu",
    "choose_sample_points",
    "invert_F",
    "phi_samples_from_data",
    "reconstruct_mu",
    "synth_trace",
]
