r"""
Duhamel coefficients of the time-fractional relaxation equation.

For a mode with eigenvalue :math:`\lambda` the coefficient

.. math::
    b_{\lambda,\rho}(t) = \int_0^t \eta^{\rho-1} E_{\rho,\rho}(-\lambda\eta^\rho)\, g(t-\eta)\, d\eta

is the solution at time t of :math:`D_t^\rho u + \lambda u = g`, u(0) = 0.
Profiles that are finite sums of powers :math:`c\,s^a` are integrated in
closed form,

.. math::
    \int_0^t \eta^{\rho-1}E_{\rho,\rho}(-\lambda\eta^\rho)(t-\eta)^a\,d\eta
    = \Gamma(a+1)\, t^{a+\rho} E_{\rho,\rho+a+1}(-\lambda t^\rho),

everything else by product integration: g is replaced by its piecewise linear
interpolant and each piece is integrated exactly against the kernel through
the antiderivatives :math:`\eta^\rho E_{\rho,\rho+1}(-\lambda\eta^\rho)` and
:math:`\eta^{\rho+1} E_{\rho,\rho+2}(-\lambda\eta^\rho)`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import PchipInterpolator

from subdiffusion.errors import CoverageError, DomainError
from subdiffusion.special_functions import gamma, mittag_leffler

__all__ = [
    "BoundReport",
    "Constant",
    "DuhamelKernel",
    "Example1",
    "ModeClassification",
    "Polynomial",
    "Samples",
    "TimeProfile",
    "bound_check",
    "classify",
    "duhamel",
    "power_kernel",
]

DEFAULT_CELLS = 1024
DEFAULT_REL_THRESHOLD = 1e-9
# relative accuracy credited to a closed-form evaluation
CLOSED_FORM_REL_ERR = 1e-12
# mesh entries per block of eigenvalues in product integration
_BLOCK_ENTRIES = 1 << 16


def default_workers() -> int:
    """Thread count for per-mode work, from ``SUBDIFFUSION_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SUBDIFFUSION_THREADS", "1")))
    except ValueError:
        return 1


class TimeProfile:
    """Time factor g(t) of the source term f(x) g(t)."""

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def power_terms(self) -> list[tuple[float, float]] | None:
        """``[(c, a), ...]`` with g(t) = sum c t**a, or None if not of that form."""
        return None

    def is_sign_definite(self, t_end: float, samples: int = 4097) -> bool:
        """True if g has no zero on [0, t_end] (checked on a dense grid)."""
        vals = np.asarray(self(np.linspace(0.0, t_end, samples)))
        return bool(np.all(vals > 0) or np.all(vals < 0))

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(TimeProfile):
    c: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.c):
            raise ValueError("constant profile must be finite")

    def __call__(self, t):
        return np.full(np.shape(t), float(self.c))

    def power_terms(self):
        return [(float(self.c), 0.0)]

    def to_dict(self) -> dict:
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class Polynomial(TimeProfile):
    """g(t) = sum_j coeffs[j] t**j."""

    coeffs: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.coeffs)

    def power_terms(self):
        return [(c, float(j)) for j, c in enumerate(self.coeffs) if c != 0.0]

    def to_dict(self) -> dict:
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Example1(TimeProfile):
    r"""Sign-changing profile :math:`g = D_t^\rho T + \lambda T` with :math:`T(t) = t^\rho(1-t^b)`.

    With :math:`D_t^\rho t^{\rho+b} = \Gamma(\rho+b+1)/\Gamma(b+1)\, t^b`,

    .. math::
        g(t) = \Gamma(\rho+1) - \frac{\Gamma(\rho+b+1)}{\Gamma(b+1)} t^b + \lambda t^\rho (1 - t^b).

    For the mode with eigenvalue ``lam`` the forced solution with unit source
    is exactly T(t), which vanishes at t = 1.
    """

    rho: float = 0.5
    b: float = 0.1
    lam: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.rho <= 1.0):
            raise ValueError("rho must lie in (0, 1]")
        if not (self.b > 0 and self.lam > 0):
            raise ValueError("b and lam must be positive")

    def T(self, t: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=float)
        return t**self.rho * (1.0 - t**self.b)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape)
        for c, a in self.power_terms():
            total = total + c * (t**a if a else 1.0)
        return total

    def power_terms(self):
        r, b, lam = self.rho, self.b, self.lam
        return [
            (gamma(r + 1.0), 0.0),
            (-gamma(r + b + 1.0) / gamma(b + 1.0), b),
            (lam, r),
            (-lam, r + b),
        ]

    def to_dict(self) -> dict:
        return {"kind": "example1", "rho": self.rho, "b": self.b, "lam": self.lam}


@dataclass(frozen=True, eq=False)
class Samples(TimeProfile):
    """Sampled profile, interpolated by a monotone cubic (PCHIP)."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 2 or times.shape != values.shape:
            raise ValueError("need matching 1-D arrays of at least two samples")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "times", tuple(times))
        object.__setattr__(self, "values", tuple(values))
        object.__setattr__(self, "_interp", PchipInterpolator(times, values, extrapolate=False))

    def covers(self, t_end: float) -> bool:
        return self.times[0] <= 0.0 and self.times[-1] >= t_end

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise CoverageError(
                f"profile sampled on [{self.times[0]}, {self.times[-1]}] evaluated outside it"
            )
        return self._interp(t)

    def to_dict(self) -> dict:
        return {"kind": "samples", "times": list(self.times), "values": list(self.values)}


@dataclass
class DuhamelKernel:
    """Values of b_k(t) for a set of eigenvalues at one time t."""

    t: float
    rho: float
    eigenvalues: NDArray[np.float64]
    values: NDArray[np.float64]
    errors: NDArray[np.float64]
    method: str


def power_kernel(
    terms: list[tuple[float, float]],
    rho: float,
    lam: ArrayLike,
    t: ArrayLike,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Closed-form b for g = sum c s**a; broadcasts over ``lam`` and ``t``.

    Returns the value and the sum of absolute term sizes (for error estimates).
    """
    lam, t = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(t, dtype=float))
    value = np.zeros(lam.shape)
    scale = np.zeros(lam.shape)
    pos = t > 0
    tp = t[pos]
    arg = -lam[pos] * tp**rho
    for c, a in terms:
        term = c * gamma(a + 1.0) * tp ** (a + rho) * mittag_leffler(arg, rho, rho + a + 1.0)
        value[pos] += term
        scale[pos] += np.abs(term)
    return value, scale


def _antiderivatives(rho: float, lam: NDArray[np.float64], eta: NDArray[np.float64]):
    # rows follow lam, columns follow eta
    er = eta**rho
    arg = -lam[:, None] * er
    k1 = er * mittag_leffler(arg, rho, rho + 1.0)
    k2 = eta ** (rho + 1.0) * mittag_leffler(arg, rho, rho + 2.0)
    return k1, k2


def _product_rule(g_rev: NDArray[np.float64], k1, k2, h: float):
    d1 = np.diff(k1, axis=-1)
    d2 = np.diff(k2, axis=-1)
    dg = np.diff(g_rev)
    cells = g_rev[:-1] * d1 + dg * (k1[:, 1:] - d2 / h)
    size = np.sum(np.abs(g_rev[:-1] * d1), axis=-1) + np.sum(np.abs(dg * k1[:, 1:]), axis=-1)
    return np.sum(cells, axis=-1), size


def _product_integration(g: TimeProfile, rho: float, lam: NDArray[np.float64], t: float, n_cells: int):
    eta = np.linspace(0.0, t, n_cells + 1)
    g_rev = np.asarray(g(t - eta), dtype=float)
    k1, k2 = _antiderivatives(rho, lam, eta)
    fine, size = _product_rule(g_rev, k1, k2, t / n_cells)
    coarse, _ = _product_rule(g_rev[::2], k1[:, ::2], k2[:, ::2], 2.0 * t / n_cells)
    # Richardson difference plus a floor for rounding in the cell sums
    return fine, np.abs(fine - coarse) + 16 * np.finfo(float).eps * size


def duhamel(
    g: TimeProfile,
    rho: float,
    lam: ArrayLike,
    t: float,
    *,
    method: str = "auto",
    n_cells: int = DEFAULT_CELLS,
    workers: int | None = None,
) -> DuhamelKernel:
    """Duhamel coefficient b(t) for each eigenvalue in ``lam``.

    Parameters
    ----------
    g : TimeProfile
        Time factor of the source.
    rho : float
        Fractional order in (0, 1].
    lam : float or array_like
        Positive eigenvalues.
    t : float
        Evaluation time, t > 0.
    method : {"auto", "closed-form", "product-integration"}
        ``"auto"`` uses the closed form when g is a sum of powers.
    n_cells : int
        Uniform cells of the product-integration mesh (even).
    workers : int, optional
        Threads used over distinct eigenvalues; defaults to ``SUBDIFFUSION_THREADS``.

    Returns
    -------
    DuhamelKernel
        Values with absolute error estimates. For product integration the
        estimate is the difference between meshes of ``n_cells`` and
        ``n_cells/2`` cells.
    """
    if not (0.0 < rho <= 1.0):
        raise DomainError("rho must lie in (0, 1]")
    if not t > 0:
        raise DomainError(f"Duhamel coefficient needs t > 0, got {t}")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(~(lam_arr > 0)):
        raise DomainError("eigenvalues must be positive")
    if isinstance(g, Samples) and not g.covers(t):
        raise CoverageError(f"sampled profile does not cover [0, {t}]")

    terms = g.power_terms()
    if method == "auto":
        method = "closed-form" if terms is not None else "product-integration"
    if method == "closed-form":
        if terms is None:
            raise ValueError("closed form needs a profile that is a sum of powers")
        values, scale = power_kernel(terms, rho, lam_arr, t)
        errors = CLOSED_FORM_REL_ERR * scale
    elif method == "product-integration":
        if n_cells < 2 or n_cells % 2:
            raise ValueError("n_cells must be an even integer >= 2")
        uniq, inverse = np.unique(lam_arr, return_inverse=True)
        nworkers = default_workers() if workers is None else max(1, int(workers))

        rows = max(1, _BLOCK_ENTRIES // (n_cells + 1))
        blocks = [uniq[i : i + rows] for i in range(0, uniq.size, rows)]

        def one(block: NDArray[np.float64]):
            return _product_integration(g, rho, block, float(t), n_cells)

        if nworkers > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=nworkers) as pool:
                pairs = list(pool.map(one, blocks))
        else:
            pairs = [one(b) for b in blocks]
        vals = np.concatenate([p[0] for p in pairs])
        errs = np.concatenate([p[1] for p in pairs])
        values, errors = vals[inverse], errs[inverse]
    else:
        raise ValueError(f"unknown method {method!r}")
    return DuhamelKernel(float(t), float(rho), lam_arr, values, errors, method)


@dataclass
class ModeClassification:
    """Split of the retained modes into invertible (regular) and null modes."""

    t0: float
    kernel: DuhamelKernel
    thresholds: NDArray[np.float64]
    null: NDArray[np.bool_]

    @property
    def null_modes(self) -> NDArray[np.int64]:
        """Positions (in mode order) of modes with b_k(t0) = 0."""
        return np.flatnonzero(self.null)

    @property
    def regular_modes(self) -> NDArray[np.int64]:
        return np.flatnonzero(~self.null)

    @property
    def is_empty_null_set(self) -> bool:
        return not bool(np.any(self.null))


def null_thresholds(rho: float, lam: NDArray[np.float64], t0: float, rel_threshold: float) -> NDArray[np.float64]:
    # same shape as the a priori bound t0^rho / (1 + lam t0^rho) on |b|
    tr = t0**rho
    return rel_threshold * tr / (1.0 + lam * tr)


def classify(
    g: TimeProfile,
    rho: float,
    eigenvalues: ArrayLike,
    t0: float,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
    *,
    kernel: DuhamelKernel | None = None,
    **kwargs,
) -> ModeClassification:
    """Assign each mode to the null set when |b_k(t0)| is below threshold plus error.

    Extra keyword arguments are passed to :func:`duhamel`.
    """
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    if kernel is None:
        kernel = duhamel(g, rho, lam, t0, **kwargs)
    base = null_thresholds(rho, lam, t0, rel_threshold)
    null = np.abs(kernel.values) < base + kernel.errors
    return ModeClassification(float(t0), kernel, base + kernel.errors, null)


@dataclass
class BoundReport:
    """Two-sided bound check of lam_k |b_k(t0)|."""

    t0: float
    scaled: NDArray[np.float64]
    lower: float
    upper: float
    violations: NDArray[np.int64]
    hypothesis: str | None
    notice: str | None = None

    @property
    def applicable(self) -> bool:
        return self.hypothesis is not None

    @property
    def ratio(self) -> float:
        return self.upper / self.lower if self.lower > 0 else math.inf

    @property
    def holds(self) -> bool | None:
        """Whether the bounds hold; None when no hypothesis applies."""
        if not self.applicable:
            return None
        return self.violations.size == 0 and self.lower > 0


def bound_check(
    g: TimeProfile,
    rho: float,
    eigenvalues: ArrayLike,
    t0: float,
    *,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
    kernel: DuhamelKernel | None = None,
    **kwargs,
) -> BoundReport:
    """Check C0 <= lam_k |b_k(t0)| <= C1 over the retained modes.

    The applicable hypothesis is detected from g: sign-definite on [0, t0];
    for rho = 1 a nonzero g(t0); for rho < 1 a nonzero g(0) (the smallness
    of t0 required there is not quantified and is not enforced). With no
    applicable hypothesis the numbers are still computed and ``notice`` says so.
    """
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    if kernel is None:
        kernel = duhamel(g, rho, lam, t0, **kwargs)
    scaled = lam * np.abs(kernel.values)
    floor = lam * (null_thresholds(rho, lam, t0, rel_threshold) + kernel.errors)
    violations = np.flatnonzero(scaled <= floor)

    hypothesis = None
    if g.is_sign_definite(t0):
        hypothesis = "sign-definite g"
    elif rho == 1.0 and float(g(np.array([t0]))[0]) != 0.0:
        hypothesis = "rho = 1, g(t0) != 0"
    elif rho < 1.0 and float(g(np.array([0.0]))[0]) != 0.0:
        hypothesis = "rho < 1, g(0) != 0, t0 small"
    notice = None if hypothesis else "no two-sided bound applies; values reported only"
    return BoundReport(
        float(t0), scaled, float(scaled.min()), float(scaled.max()), violations, hypothesis, notice
    )
