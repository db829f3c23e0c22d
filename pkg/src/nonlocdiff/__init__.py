"""Nonlocal nonlinear diffusion with Dirichlet collar data.

Solves ``u_t(x) = int k(u(x), u(y)) (u(y) - u(x)) J(x - y) dy`` on a box with
``u = psi`` fixed on the one-horizon collar, by Picard iteration on
contraction windows.
"""
__version__ = "0.1.0"

from .analysis import (
    TrivialKind,
    TrivialSpec,
    VerificationReport,
    check_ball_confinement,
    check_contraction,
    check_dirichlet,
    check_linf_decay,
    check_positivity,
    check_smp,
    check_stationarity,
    check_time_regularity,
    check_trace_continuity,
    make_trivial,
    semitrivial_residual,
    trivial_residual,
    weak_pme_residual,
    weak_pme_target,
)
from .conductivity import Conductivity, Family, ZeroSet, ZeroSetKind, lip_modulus, verify_lip, zero_set
from .errors import (
    BadSpacing,
    ConfigError,
    InvalidParameter,
    InvalidSpec,
    NoConvergence,
    NonFiniteState,
    NonFiniteValue,
    NonlocalError,
    NotLipschitzForEvolution,
    PreconditionFailed,
    QuadratureUnderResolved,
    RatioViolation,
    UndefinedAt,
)
from .grid import DomainGrid, ExtremaRecord, Field, build_grid, extrema, make_field
from .kernel import Kernel, KernelShape, Stencil, build_stencil, kernel_eval, kernel_l1_norm, validate_kernel
from .profiles import Pattern, evaluate_profile, sign_pattern
from .solver import (
    SolverOptions,
    SolveWindow,
    Trajectory,
    picard_window,
    rhs,
    rk4_reference,
    solve,
    solve_backward,
    window_length,
)

__all__ = [
    "__version__",
    "Conductivity",
    "DomainGrid",
    "ExtremaRecord",
    "Family",
    "Field",
    "Kernel",
    "KernelShape",
    "Pattern",
    "SolveWindow",
    "SolverOptions",
    "Stencil",
    "Trajectory",
    "TrivialKind",
    "TrivialSpec",
    "VerificationReport",
    "ZeroSet",
    "ZeroSetKind",
    "build_grid",
    "build_stencil",
    "check_ball_confinement",
    "check_contraction",
    "check_dirichlet",
    "check_linf_decay",
    "check_positivity",
    "check_smp",
    "check_stationarity",
    "check_time_regularity",
    "check_trace_continuity",
    "evaluate_profile",
    "extrema",
    "kernel_eval",
    "kernel_l1_norm",
    "lip_modulus",
    "make_field",
    "make_trivial",
    "picard_window",
    "rhs",
    "rk4_reference",
    "semitrivial_residual",
    "sign_pattern",
    "solve",
    "solve_backward",
    "trivial_residual",
    "validate_kernel",
    "verify_lip",
    "weak_pme_residual",
    "weak_pme_target",
    "window_length",
    "zero_set",
    "NonlocalError",
    "BadSpacing",
    "InvalidParameter",
    "NotLipschitzForEvolution",
    "UndefinedAt",
    "NonFiniteValue",
    "NonFiniteState",
    "NoConvergence",
    "RatioViolation",
    "InvalidSpec",
    "PreconditionFailed",
    "QuadratureUnderResolved",
    "ConfigError",
]
