"""
Spectral forward and inverse solvers for the time-fractional subdiffusion
equation with a separable source f(x) g(t) on intervals and rectangles.
"""

__version__ = "0.1.0"

from subdiffusion.errors import (
    AccuracyError,
    CoverageError,
    DomainError,
    NoSolutionError,
    PreconditionError,
)
from subdiffusion.forward import (
    ForwardProblem,
    ForwardSolution,
    solve,
    solve_homogeneous,
    solve_inhomogeneous,
)
from subdiffusion.inverse import (
    InverseProblem,
    InverseResult,
    NearSingularWarning,
    SolvabilityReport,
    recover,
    roundtrip,
    uniqueness_certificate,
)
from subdiffusion.kernel import (
    Constant,
    DuhamelKernel,
    Example1,
    ModeClassification,
    Polynomial,
    Samples,
    TimeProfile,
    bound_check,
    classify,
    duhamel,
)
from subdiffusion.special_functions import MLParams, beta, gamma, mittag_leffler, ml, ml_one
from subdiffusion.spectral import (
    BoxDomain,
    GridFunction,
    SpectralCoeffs,
    analyze,
    decay_diagnostic,
    eigenfunction_at,
    eigenvalue,
    synthesize,
)

__all__ = [
    "AccuracyError",
    "BoxDomain",
    "Constant",
    "CoverageError",
    "DomainError",
    "DuhamelKernel",
    "Example1",
    "ForwardProblem",
    "ForwardSolution",
    "GridFunction",
    "InverseProblem",
    "InverseResult",
    "MLParams",
    "ModeClassification",
    "NearSingularWarning",
    "NoSolutionError",
    "Polynomial",
    "PreconditionError",
    "Samples",
    "SolvabilityReport",
    "SpectralCoeffs",
    "TimeProfile",
    "analyze",
    "beta",
    "bound_check",
    "classify",
    "decay_diagnostic",
    "duhamel",
    "eigenfunction_at",
    "eigenvalue",
    "gamma",
    "mittag_leffler",
    "ml",
    "ml_one",
    "recover",
    "roundtrip",
    "solve",
    "solve_homogeneous",
    "solve_inhomogeneous",
    "synthesize",
    "uniqueness_certificate",
]
