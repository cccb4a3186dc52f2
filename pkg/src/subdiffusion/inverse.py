r"""
Recovery of the spatial source factor from a snapshot.

Given :math:`\varphi`, g and the snapshot :math:`\psi = u(\cdot, t_0)`, each mode
satisfies :math:`\psi_k = \varphi_k E_\rho(-\lambda_k t_0^\rho) + f_k b_k(t_0)`.
Where :math:`b_k(t_0) \ne 0` this fixes :math:`f_k`. On null modes
(:math:`b_k(t_0) = 0`) data are consistent only if
:math:`\psi_k = \varphi_k E_\rho(-\lambda_k t_0^\rho)`, and then :math:`f_k` is free.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from subdiffusion.errors import AccuracyError, DomainError, NoSolutionError, PreconditionError
from subdiffusion.forward import Field, ForwardProblem, ForwardSolution, as_coeffs, solve
from subdiffusion.kernel import (
    DEFAULT_REL_THRESHOLD,
    ModeClassification,
    TimeProfile,
    classify,
    duhamel,
)
from subdiffusion.special_functions import mittag_leffler
from subdiffusion.spectral import (
    DEFAULT_COUNT,
    BoxDomain,
    DecayReport,
    GridFunction,
    SpectralCoeffs,
    decay_diagnostic,
    synthesize,
)

__all__ = [
    "FamilyDescription",
    "InverseProblem",
    "InverseResult",
    "NearSingularWarning",
    "RoundtripReport",
    "SolvabilityReport",
    "UniquenessCertificate",
    "recover",
    "roundtrip",
    "uniqueness_certificate",
]

DEFAULT_SOLVABILITY_RTOL = 1e-7
NEAR_SINGULAR_FACTOR = 10.0


class NearSingularWarning(UserWarning):
    """A regular mode has |b_k(t0)| within a small factor of its null threshold."""


@dataclass
class InverseProblem:
    """Data of the inverse source problem.

    Parameters
    ----------
    domain : BoxDomain
    rho : float
    phi : GridFunction or SpectralCoeffs or None
        Initial data (None means zero).
    psi : GridFunction or SpectralCoeffs or None
        Snapshot at ``t0``.
    g : TimeProfile
    t0 : float
        Snapshot time, 0 < t0 <= horizon.
    horizon : float, optional
        Final time; defaults to ``t0``.
    count : int or tuple of int
    free : dict, optional
        Values of f on null modes, keyed by mode index.
    """

    domain: BoxDomain
    rho: float
    phi: Field
    psi: Field
    g: TimeProfile
    t0: float
    horizon: float | None = None
    count: int | tuple[int, ...] = DEFAULT_COUNT
    free: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 < self.rho <= 1.0):
            raise DomainError("rho must lie in (0, 1]")
        if self.horizon is None:
            self.horizon = float(self.t0)
        if not (0.0 < self.t0 <= self.horizon):
            raise DomainError("t0 must lie in (0, horizon]")
        self.count = self.domain.normalize_counts(self.count)


@dataclass
class SolvabilityReport:
    """Orthogonality residuals on null modes and the overall verdict.

    ``verdict`` is one of ``"unique"``, ``"non-unique-family"`` or ``"no-solution"``.
    """

    null_modes: list
    residuals: NDArray[np.float64]
    tolerances: NDArray[np.float64]
    verdict: str
    amplification: NDArray[np.float64]

    @property
    def passed(self) -> NDArray[np.bool_]:
        return self.residuals <= self.tolerances

    @property
    def violations(self) -> list:
        return [m for m, ok in zip(self.null_modes, self.passed) if not ok]

    def to_dict(self) -> dict:
        def _num(x: float):
            return float(x) if math.isfinite(x) else None

        return {
            "verdict": self.verdict,
            "null_modes": [_label(m) for m in self.null_modes],
            "residuals": [float(r) for r in self.residuals],
            "tolerances": [float(r) for r in self.tolerances],
            "violations": [_label(m) for m in self.violations],
            "amplification": [_num(a) for a in self.amplification],
        }


def _label(m):
    return list(m) if isinstance(m, tuple) else m


@dataclass
class FamilyDescription:
    """Free part of a non-unique solution.

    Any values on ``free_modes`` with :math:`\\sum \\lambda_k^{2\\sigma} |f_k|^2 < \\infty`,
    :math:`\\sigma > N/4`, give a solution; ``decay`` is the finite-sample proxy
    for that condition on the chosen values.
    """

    free_modes: list
    free_values: NDArray[np.float64]
    sigma: float
    decay: DecayReport | None

    @property
    def empty(self) -> bool:
        return not self.free_modes


@dataclass
class InverseResult:
    """Recovered source, reconstructed solution and diagnostics."""

    f: SpectralCoeffs
    u: ForwardSolution
    classification: ModeClassification
    report: SolvabilityReport
    family: FamilyDescription
    near_singular: list
    snapshot_error: float

    @property
    def verdict(self) -> str:
        return self.report.verdict

    def f_grid(self, nodes: int | Sequence[int] | None = None) -> GridFunction:
        return synthesize(self.f, nodes)


def recover(
    problem: InverseProblem,
    *,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
    solvability_rtol: float = DEFAULT_SOLVABILITY_RTOL,
    sigma: float | None = None,
    **kernel_options,
) -> InverseResult:
    """Solve the inverse source problem mode by mode.

    Parameters
    ----------
    problem : InverseProblem
    rel_threshold : float
        Null-mode threshold passed to :func:`subdiffusion.kernel.classify`.
    solvability_rtol : float
        Orthogonality tolerance on null mode k is
        ``solvability_rtol * (1 + |phi_k|)`` plus the kernel error estimate.
    sigma : float, optional
        Smoothness index of the decay proxy for free values; default N/4 + 0.05.
    **kernel_options
        Passed to :func:`subdiffusion.kernel.duhamel`.

    Returns
    -------
    InverseResult

    Raises
    ------
    NoSolutionError
        When a null mode violates the orthogonality condition.
    PreconditionError
        When free values are given for modes that are not null.

    Warns
    -----
    NearSingularWarning
        When some regular mode has |b_k| within 10x of its threshold.
    """
    domain, rho, t0 = problem.domain, problem.rho, float(problem.t0)
    phi = as_coeffs(problem.phi, domain, problem.count)
    psi = as_coeffs(problem.psi, domain, problem.count)
    lam = phi.eigenvalues

    kernel = duhamel(problem.g, rho, lam, t0, **kernel_options)
    cls = classify(problem.g, rho, lam, t0, rel_threshold, kernel=kernel)
    decay = mittag_leffler(-lam * t0**rho, rho, 1.0)
    target = psi.values - phi.values * decay

    null = cls.null_modes
    regular = cls.regular_modes
    labels = [phi.mode_label(i) for i in null]
    residuals = np.abs(target[null])
    tolerances = solvability_rtol * (1.0 + np.abs(phi.values[null])) + kernel.errors[null]

    amplification = np.full(lam.size, math.inf)
    amplification[regular] = 1.0 / (lam[regular] * np.abs(kernel.values[regular]))
    if np.any(residuals > tolerances):
        verdict = "no-solution"
    elif null.size:
        verdict = "non-unique-family"
    else:
        verdict = "unique"
    report = SolvabilityReport(labels, residuals, tolerances, verdict, amplification)
    if verdict == "no-solution":
        raise NoSolutionError(report)

    values = np.zeros(lam.size)
    values[regular] = target[regular] / kernel.values[regular]
    null_set = set(int(i) for i in null)
    for mode, val in problem.free.items():
        idx = phi.index_of(mode)
        if idx not in null_set:
            raise PreconditionError(f"free value given for mode {mode}, which is not a null mode")
        values[idx] = float(val)
    f = phi.with_values(values)

    near = regular[np.abs(kernel.values[regular]) < NEAR_SINGULAR_FACTOR * cls.thresholds[regular]]
    near_labels = [phi.mode_label(i) for i in near]
    if near.size:
        warnings.warn(
            f"near-singular modes {near_labels}: amplification up to "
            f"{float(np.max(amplification[near])):.3g}",
            NearSingularWarning,
            stacklevel=2,
        )

    sigma = domain.dim / 4.0 + 0.05 if sigma is None else float(sigma)
    free_decay = None
    if null.size:
        free_only = np.zeros(lam.size)
        free_only[null] = values[null]
        free_decay = decay_diagnostic(phi.with_values(free_only), 2.0 * sigma)
    family = FamilyDescription(labels, values[null], sigma, free_decay)

    horizon = float(problem.horizon)
    u = ForwardSolution(domain, rho, phi, f, problem.g, horizon, dict(kernel_options))
    snapshot = u.coefficients(t0).values - psi.values
    return InverseResult(
        f, u, cls, report, family, near_labels, float(np.max(np.abs(snapshot), initial=0.0))
    )


@dataclass
class UniquenessCertificate:
    """Per-mode margins lambda_k |b_k(t0)| and the uniqueness verdict."""

    t0: float
    modes: list
    margins: NDArray[np.float64]
    null_modes: list
    sign_definite: bool

    @property
    def unique(self) -> bool:
        return not self.null_modes

    @property
    def statement(self) -> str:
        if self.unique and self.sign_definite:
            return "unique for every t0"
        if self.unique:
            return f"unique at t0={self.t0:g}"
        return f"not unique at t0={self.t0:g}: null modes {self.null_modes}"


def uniqueness_certificate(
    problem: InverseProblem,
    *,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
    **kernel_options,
) -> UniquenessCertificate:
    """Check that b_k(t0) is nonzero on every retained mode.

    For a sign-definite g the null set must be empty for every t0; a null
    mode there signals a numerical failure and raises AccuracyError.
    """
    coeffs = SpectralCoeffs.zeros(problem.domain, problem.count)
    lam = coeffs.eigenvalues
    cls = classify(problem.g, problem.rho, lam, problem.t0, rel_threshold, **kernel_options)
    margins = lam * np.abs(cls.kernel.values)
    sign_definite = problem.g.is_sign_definite(problem.horizon)
    null = [coeffs.mode_label(i) for i in cls.null_modes]
    if sign_definite and null:
        raise AccuracyError(f"sign-definite profile but modes {null} classified null")
    modes = [coeffs.mode_label(i) for i in range(lam.size)]
    return UniquenessCertificate(float(problem.t0), modes, margins, null, sign_definite)


@dataclass
class RoundtripReport:
    """Error of recovering a known source from its own forward snapshot."""

    rel_l2_error: float
    max_error: float
    abs_l2_error: float
    verdict: str
    f_true: SpectralCoeffs
    f_recovered: SpectralCoeffs


def roundtrip(
    domain: BoxDomain,
    rho: float,
    phi: Field,
    f_true: Field,
    g: TimeProfile,
    t0: float,
    *,
    count: int | Sequence[int] = DEFAULT_COUNT,
    nodes: int | Sequence[int] | None = None,
    **kernel_options,
) -> RoundtripReport:
    """Forward-solve with ``f_true``, take the snapshot at ``t0`` and recover f.

    ``rel_l2_error`` compares coefficients (equal to the L2 error of the
    truncated fields); ``max_error`` is the largest nodal difference.
    It is 0/0-safe: for ``f_true = 0`` the relative error equals the absolute one.
    """
    sol = solve(ForwardProblem(domain, rho, phi=phi, f=f_true, g=g, horizon=t0, count=count), **kernel_options)
    psi = sol.coefficients(t0)
    result = recover(InverseProblem(domain, rho, sol.phi, psi, g, t0, count=count), **kernel_options)
    if result.verdict != "unique":
        raise PreconditionError(f"round trip needs an empty null set, found {result.family.free_modes}")
    diff = result.f - sol.f
    abs_err = diff.norm()
    ref = sol.f.norm()
    rel = abs_err / ref if ref > 0 else abs_err
    max_err = float(np.max(np.abs(synthesize(diff, nodes).values)))
    return RoundtripReport(rel, max_err, abs_err, result.verdict, sol.f, result.f)
