"""
Independent verification tools.

Nothing here is used by the solvers. The L1 scheme and the finite-difference
Laplacian give a discretization-based residual of the equation, and
:func:`brute_duhamel` integrates the Duhamel convolution by adaptive
quadrature instead of product integration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate
from scipy.linalg import toeplitz

from subdiffusion.errors import AccuracyError, DomainError
from subdiffusion.forward import ForwardSolution, as_coeffs
from subdiffusion.kernel import Example1, TimeProfile
from subdiffusion.special_functions import gamma, mittag_leffler
from subdiffusion.spectral import BoxDomain, GridFunction, SpectralCoeffs, default_nodes, synthesize

__all__ = [
    "Example1Scenario",
    "ResidualReport",
    "brute_duhamel",
    "caputo_l1",
    "example1_scenario",
    "laplacian_fd",
    "residual_check",
]


def _l1_matrix(n_times: int, tau: float, rho: float) -> NDArray[np.float64]:
    # D u_n = tau^-rho / Gamma(2 - rho) * sum_j a_j (u_{n-j} - u_{n-j-1})
    j = np.arange(n_times - 1, dtype=float)
    a = (j + 1.0) ** (1.0 - rho) - j ** (1.0 - rho)
    weights = toeplitz(a, np.zeros(n_times - 1)) * (tau**-rho / gamma(2.0 - rho))
    return weights


def caputo_l1(samples: ArrayLike, tau: float, rho: float) -> NDArray[np.float64]:
    """Caputo derivative of uniformly sampled data by the L1 scheme.

    Parameters
    ----------
    samples : array_like
        Values at t = 0, tau, 2 tau, ... along axis 0; trailing axes are
        treated independently.
    tau : float
        Time step.
    rho : float
        Order in (0, 1]. For rho = 1 second-order finite differences are used.

    Returns
    -------
    ndarray
        Derivative at every sample time; the entry at t = 0 is 0 for rho < 1.
    """
    u = np.asarray(samples, dtype=float)
    if u.shape[0] < 3:
        raise ValueError("the L1 scheme needs at least three samples")
    if not (0.0 < rho <= 1.0):
        raise DomainError("rho must lie in (0, 1]")
    if rho == 1.0:
        return np.gradient(u, tau, axis=0, edge_order=2)
    du = np.diff(u, axis=0)
    flat = du.reshape(du.shape[0], -1)
    out = np.zeros(u.shape)
    out[1:] = (_l1_matrix(u.shape[0], tau, rho) @ flat).reshape(du.shape)
    return out


def laplacian_fd(h: GridFunction) -> GridFunction:
    """Second-order central-difference Laplacian with zero boundary values."""
    if any(n < 3 for n in h.nodes):
        raise ValueError("need at least three interior nodes per axis")
    out = np.zeros(h.values.shape)
    for axis, dx in enumerate(h.spacing()):
        padded = np.pad(h.values, [(1, 1) if a == axis else (0, 0) for a in range(h.values.ndim)])
        lo = np.take(padded, np.arange(0, h.nodes[axis]), axis=axis)
        hi = np.take(padded, np.arange(2, h.nodes[axis] + 2), axis=axis)
        out += (lo - 2.0 * h.values + hi) / dx**2
    return GridFunction(h.domain, out)


@dataclass
class ResidualReport:
    """Residual of D_t^rho u - Delta u - f g on interior nodes times window times."""

    max_residual: float
    l2_residual: float
    n_steps: int
    nodes: tuple[int, ...]
    window: tuple[float, float]
    n_times: int


def residual_check(
    u: ForwardSolution,
    f: GridFunction | SpectralCoeffs | None = None,
    g: TimeProfile | None = None,
    window: tuple[float, float] | None = None,
    *,
    n_steps: int = 1024,
    nodes: int | Sequence[int] | None = None,
) -> ResidualReport:
    """Pointwise residual of a candidate solution on a space-time grid.

    Parameters
    ----------
    u : ForwardSolution
        Candidate solution.
    f, g : optional
        Source factors; default to those stored in ``u``.
    window : (float, float), optional
        Time window, default ``(T/10, T)`` with T the horizon of ``u``.
    n_steps : int
        Uniform time steps on ``[0, window[1]]`` used by the L1 scheme.
    nodes : int or tuple, optional
        Interior nodes per axis of the finite-difference grid.
    """
    if window is None:
        window = (u.horizon / 10.0, u.horizon)
    t_lo, t_hi = map(float, window)
    if not (0.0 < t_lo < t_hi):
        raise ValueError("window must satisfy 0 < start < end")
    g = u.g if g is None else g
    n = default_nodes(u.domain) if nodes is None else u.domain.normalize_counts(nodes)
    if f is None:
        f = u.f
    f_grid = synthesize(f, n).values if isinstance(f, SpectralCoeffs) else np.asarray(f.values)
    if f_grid.shape != tuple(n):
        raise ValueError("source grid does not match the residual grid")

    tau = t_hi / n_steps
    times = np.arange(n_steps + 1) * tau
    traj = u.trajectory(times)
    dtraj = caputo_l1(traj, tau, u.rho)
    pick = np.flatnonzero(times >= t_lo - 1e-12 * t_hi)
    g_vals = np.zeros(times.size) if g is None else np.asarray(g(times), dtype=float)

    template = u.phi
    cell = float(np.prod([li / (ni + 1) for li, ni in zip(u.domain.lengths, n)]))
    peak = 0.0
    sq = 0.0
    for i in pick:
        grid = synthesize(template.with_values(traj[i]), n)
        deriv = synthesize(template.with_values(dtraj[i]), n).values
        r = deriv - laplacian_fd(grid).values - f_grid * g_vals[i]
        peak = max(peak, float(np.max(np.abs(r))))
        sq += float(np.sum(r * r)) * cell
    l2 = math.sqrt(sq * tau)
    return ResidualReport(peak, l2, n_steps, tuple(n), (t_lo, t_hi), int(pick.size))


def brute_duhamel(
    g: TimeProfile | Callable[[float], float],
    rho: float,
    lam: float,
    t: float,
    tol: float = 1e-10,
    *,
    limit: int = 500,
) -> float:
    r"""Duhamel coefficient by adaptive quadrature.

    With :math:`w = \eta^\rho` the weakly singular integral becomes

    .. math::
        \frac{1}{\rho}\int_0^{t^\rho} E_{\rho,\rho}(-\lambda w)\, g(t - w^{1/\rho})\, dw,

    which has a bounded integrand; the change of variables clusters the
    original nodes near :math:`\eta = 0`.

    Raises
    ------
    AccuracyError
        If the estimated absolute error exceeds ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not t > 0:
        raise DomainError("t must be positive")

    def integrand(w: float) -> float:
        eta = w ** (1.0 / rho)
        gv = float(np.asarray(g(np.array([max(t - eta, 0.0)])))[0])
        return float(mittag_leffler(-lam * w, rho, rho)) * gv / rho

    upper = t**rho
    # breakpoints at the kernel's decay scale help the adaptive splitter
    points = [p for p in (1.0 / lam, 10.0 / lam) if 0 < p < upper]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                integrand, 0.0, upper, epsabs=tol / 4, epsrel=0.0, limit=limit, points=points or None
            )
        except integrate.IntegrationWarning as exc:
            raise AccuracyError(f"adaptive quadrature did not converge: {exc}") from exc
    if err > tol:
        raise AccuracyError(f"quadrature error estimate {err:.3g} exceeds tolerance {tol:.3g}")
    return float(value)


@dataclass
class Example1Scenario:
    r"""Two solutions of one inverse problem with a sign-changing g.

    ``trivial`` and ``nontrivial`` are (u, f) pairs; both have zero initial
    data and vanish at t = 1, since ``T(1) = 0``.
    """

    rho: float
    b: float
    mode: int | tuple[int, ...]
    lam: float
    g: Example1
    trivial: tuple[ForwardSolution, SpectralCoeffs]
    nontrivial: tuple[ForwardSolution, SpectralCoeffs]
    g0: float
    g1: float

    def T(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.g.T(t)

    @property
    def changes_sign(self) -> bool:
        return self.g0 > 0 > self.g1


def example1_scenario(
    rho: float = 0.5,
    b: float = 0.1,
    mode: int | Sequence[int] = 1,
    domain: BoxDomain | None = None,
    *,
    count: int | Sequence[int] = 64,
    horizon: float = 1.0,
) -> Example1Scenario:
    """Build the sign-changing profile for one eigenfunction and its two solutions."""
    if not (0.0 < rho < 1.0):
        raise DomainError("rho must lie in (0, 1)")
    domain = BoxDomain.interval() if domain is None else domain
    zero = SpectralCoeffs.zeros(domain, count)
    vk = SpectralCoeffs.unit(domain, mode, count)
    lam = float(vk.eigenvalues[vk.index_of(mode)])
    g = Example1(rho, b, lam)
    trivial = ForwardSolution(domain, rho, zero, zero, g, horizon)
    nontrivial = ForwardSolution(domain, rho, zero, as_coeffs(vk, domain, count), g, horizon)
    g0, g1 = (float(v) for v in g(np.array([0.0, 1.0])))
    label = vk.mode_label(vk.index_of(mode))
    return Example1Scenario(rho, b, label, lam, g, (trivial, zero), (nontrivial, vk), g0, g1)
