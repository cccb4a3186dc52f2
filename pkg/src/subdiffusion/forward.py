r"""
Series solution of the forward problem.

Each mode of :math:`D_t^\rho u - \Delta u = f(x) g(t)`, :math:`u(\cdot,0) = \varphi`,
with zero boundary values evolves independently:

.. math::
    u_k(t) = \varphi_k E_\rho(-\lambda_k t^\rho) + f_k\, b_k(t),

where :math:`b_k` is the Duhamel coefficient from :mod:`subdiffusion.kernel`.
The solution is kept in spectral form and synthesized on demand.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from subdiffusion.errors import DomainError
from subdiffusion.kernel import TimeProfile, duhamel, power_kernel
from subdiffusion.special_functions import mittag_leffler
from subdiffusion.spectral import (
    DEFAULT_COUNT,
    BoxDomain,
    GridFunction,
    SpectralCoeffs,
    analyze,
    synthesize,
)

__all__ = [
    "ForwardProblem",
    "ForwardSolution",
    "as_coeffs",
    "solve",
    "solve_homogeneous",
    "solve_inhomogeneous",
]

Field = GridFunction | SpectralCoeffs | None


def as_coeffs(h: Field, domain: BoxDomain, count: int | Sequence[int]) -> SpectralCoeffs:
    """Bring grid samples, coefficients or None onto the basis with ``count`` modes."""
    counts = domain.normalize_counts(count)
    if h is None:
        return SpectralCoeffs.zeros(domain, counts)
    if h.domain != domain:
        raise ValueError("field lives on a different domain")
    if isinstance(h, GridFunction):
        return analyze(h, counts)
    if h.count == counts:
        return h
    # re-index onto the requested basis; modes outside it are dropped
    out = SpectralCoeffs.zeros(domain, counts)
    for i in range(len(h)):
        if h.values[i] != 0.0:
            mode = tuple(int(v) for v in h.modes[i])
            if all(m <= c for m, c in zip(mode, counts)):
                out.values[out.index_of(mode)] = h.values[i]
    return out


@dataclass
class ForwardProblem:
    """Data of the forward problem on a box.

    Parameters
    ----------
    domain : BoxDomain
    rho : float
        Order of the time derivative in (0, 1].
    phi, f : GridFunction or SpectralCoeffs or None
        Initial data and spatial source factor; None means zero.
    g : TimeProfile
        Time factor of the source.
    horizon : float
        Final time T.
    count : int or tuple of int
        Retained modes per axis.
    """

    domain: BoxDomain
    rho: float
    phi: Field = None
    f: Field = None
    g: TimeProfile | None = None
    horizon: float = 1.0
    count: int | tuple[int, ...] = DEFAULT_COUNT

    def __post_init__(self) -> None:
        if not (0.0 < self.rho <= 1.0):
            raise DomainError("rho must lie in (0, 1]")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        self.count = self.domain.normalize_counts(self.count)


@dataclass(eq=False)
class ForwardSolution:
    """Lazy spectral trajectory :math:`u_k(t)`.

    Snapshots are cached by time under a lock, so one instance may be shared
    between threads.
    """

    domain: BoxDomain
    rho: float
    phi: SpectralCoeffs
    f: SpectralCoeffs
    g: TimeProfile | None
    horizon: float
    kernel_options: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _errors: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self) -> None:
        if np.any(self.f.values != 0.0) and self.g is None:
            raise ValueError("a nonzero source needs a time profile g")

    @property
    def eigenvalues(self) -> NDArray[np.float64]:
        return self.phi.eigenvalues

    def _active(self) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        return np.flatnonzero(self.phi.values != 0.0), np.flatnonzero(self.f.values != 0.0)

    def _check_time(self, t: float) -> float:
        t = float(t)
        if not (0.0 <= t <= self.horizon * (1 + 1e-12)):
            raise DomainError(f"time {t} outside [0, {self.horizon}]")
        return t

    def coefficients(self, t: float) -> SpectralCoeffs:
        """Spectral coefficients of u(., t)."""
        t = self._check_time(t)
        with self._lock:
            hit = self._cache.get(t)
        if hit is not None:
            return hit
        values = np.zeros(len(self.phi))
        err = np.zeros(len(self.phi))
        iphi, if_ = self._active()
        lam = self.eigenvalues
        if t == 0.0:
            values[iphi] = self.phi.values[iphi]
        else:
            if iphi.size:
                values[iphi] += self.phi.values[iphi] * mittag_leffler(
                    -lam[iphi] * t**self.rho, self.rho, 1.0
                )
            if if_.size:
                kern = duhamel(self.g, self.rho, lam[if_], t, **self.kernel_options)
                values[if_] += self.f.values[if_] * kern.values
                err[if_] = np.abs(self.f.values[if_]) * kern.errors
        out = self.phi.with_values(values)
        with self._lock:
            self._cache.setdefault(t, out)
            self._errors.setdefault(t, err)
        return out

    def error_estimate(self, t: float) -> NDArray[np.float64]:
        """Per-mode absolute error estimate of :meth:`coefficients` at ``t``."""
        t = self._check_time(t)
        self.coefficients(t)
        with self._lock:
            return self._errors[t]

    def at(self, t: float, nodes: int | Sequence[int] | None = None) -> GridFunction:
        """Grid values of u(., t)."""
        return synthesize(self.coefficients(t), nodes)

    def trajectory(self, times: ArrayLike) -> NDArray[np.float64]:
        """Coefficients at many times, shape ``(len(times), modes)``.

        Uses one vectorized closed-form evaluation when g is a sum of powers
        and falls back to per-time kernel evaluation otherwise. Not cached.
        """
        times = np.asarray(times, dtype=float)
        if times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        for t in (times.min(initial=0.0), times.max(initial=0.0)):
            self._check_time(t)
        out = np.zeros((times.size, len(self.phi)))
        iphi, if_ = self._active()
        lam = self.eigenvalues
        tt = times[:, None]
        if iphi.size:
            arg = -lam[iphi][None, :] * tt**self.rho
            out[:, iphi] += self.phi.values[iphi] * mittag_leffler(arg, self.rho, 1.0)
        if if_.size:
            terms = self.g.power_terms()
            method = self.kernel_options.get("method", "auto")
            if terms is not None and method in ("auto", "closed-form"):
                b, _ = power_kernel(terms, self.rho, lam[if_][None, :], tt)
                out[:, if_] += self.f.values[if_] * b
            else:
                for i, t in enumerate(times):
                    if t > 0:
                        kern = duhamel(self.g, self.rho, lam[if_], t, **self.kernel_options)
                        out[i, if_] += self.f.values[if_] * kern.values
        return out

    def tail_indicator(self) -> float:
        """Size of the last retained term, (|phi_K| + |f_K|) / lambda_K."""
        k = int(np.argmax(self.eigenvalues))
        return float((abs(self.phi.values[k]) + abs(self.f.values[k])) / self.eigenvalues[k])


def solve(problem: ForwardProblem, times: ArrayLike | None = None, **kernel_options) -> ForwardSolution:
    """Solution of the full problem, optionally pre-computing snapshots at ``times``.

    Parameters
    ----------
    problem : ForwardProblem
    times : array_like, optional
        Times in [0, horizon] to evaluate eagerly.
    **kernel_options
        Passed to :func:`subdiffusion.kernel.duhamel` (``method``, ``n_cells``, ``workers``).
    """
    phi = as_coeffs(problem.phi, problem.domain, problem.count)
    f = as_coeffs(problem.f, problem.domain, problem.count)
    sol = ForwardSolution(
        problem.domain, problem.rho, phi, f, problem.g, problem.horizon, dict(kernel_options)
    )
    if times is not None:
        for t in np.atleast_1d(np.asarray(times, dtype=float)):
            sol.coefficients(t)
    return sol


def solve_homogeneous(
    domain: BoxDomain,
    rho: float,
    phi: GridFunction | SpectralCoeffs,
    t: float,
    *,
    count: int | Sequence[int] = DEFAULT_COUNT,
    nodes: int | Sequence[int] | None = None,
) -> GridFunction:
    """u(., t) for zero source: sum of phi_k E_rho(-lambda_k t^rho) v_k."""
    if t < 0:
        raise DomainError("time must be non-negative")
    problem = ForwardProblem(domain, rho, phi=phi, horizon=max(float(t), 1.0), count=count)
    return solve(problem).at(t, nodes)


def solve_inhomogeneous(
    domain: BoxDomain,
    rho: float,
    f: GridFunction | SpectralCoeffs,
    g: TimeProfile,
    t: float,
    *,
    count: int | Sequence[int] = DEFAULT_COUNT,
    nodes: int | Sequence[int] | None = None,
    **kernel_options,
) -> GridFunction:
    """u(., t) for zero initial data: sum of f_k b_k(t) v_k."""
    if t < 0:
        raise DomainError("time must be non-negative")
    problem = ForwardProblem(domain, rho, f=f, g=g, horizon=max(float(t), 1.0), count=count)
    return solve(problem, **kernel_options).at(t, nodes)

