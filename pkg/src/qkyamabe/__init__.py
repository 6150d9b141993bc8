"""Numerical toolkit for quasi k-Yamabe gradient solitons on conformally flat metrics."""
from .builder import (
    BuilderParams,
    ProfileState,
    ProfileTable,
    bnk,
    closed_form_family,
    eq_residuals,
    integrate_profile,
    ode_step,
    profile_candidate,
    table_residuals,
)
from .errors import DomainError, SingularSlopeError, SolvabilityError, SolverError
from .linalg import jacobi_eigenvalues
from .soliton import (
    CurvatureReport,
    HalfSpace,
    SolitonCandidate,
    residual_f,
    residual_u,
    trace_check,
    verify_on_grid,
    weighted_density,
)
from .tensor_core import (
    ConformalFactor,
    DirectionVector,
    ScalarField,
    SchoutenSpectrum,
    conformal_ricci,
    conformal_scalar,
    elem_sym,
    hessian_conformal,
    schouten_eigs_translation,
    schouten_matrix,
    sigma_k_two_eig,
)

__version__ = "0.1.0"
