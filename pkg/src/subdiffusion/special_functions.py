r"""
Gamma, Beta and two-parameter Mittag-Leffler functions.

The Mittag-Leffler function

.. math::
    E_{\rho,\mu}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\rho k + \mu)}

is evaluated for real non-positive arguments only, which is all the
subdiffusion solvers need. Three branches are combined:

- the defining Taylor series (Neumaier-compensated) for :math:`|z| \le 1`;
- the algebraic asymptotic expansion
  :math:`-\sum_{k\ge1} z^{-k}/\Gamma(\mu-\rho k)`, optimally truncated, used
  wherever its smallest term is below round-off relative to the sum;
- inversion of the Laplace transform :math:`s^{\rho-\mu}/(s^\rho - z)` by the
  trapezoidal rule on a parabolic Hankel contour in between.

For :math:`\rho = 1` and integer :math:`\mu` the exponential closed forms are
used instead, since the algebraic expansion vanishes there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "DomainError",
    "MLParams",
    "beta",
    "gamma",
    "ml",
    "ml_one",
    "mittag_leffler",
    "rgamma",
]


class DomainError(ValueError):
    """Argument outside the supported domain of a special function."""


# Lanczos approximation, g = 7, 9 coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# |z| at or below which the Taylor series is used
SERIES_RADIUS = 1.0
# relative size of the smallest asymptotic term that is accepted as converged
ASYMPTOTIC_TOL = 1e-16
ASYMPTOTIC_MAX_TERMS = 120
# target accuracy of the contour quadrature
CONTOUR_EPS = 1e-15
# rows per block in the vectorized series
_CHUNK = 8192
# log of the relative size at which asymptotic terms are dropped
_NEGLIGIBLE = math.log(1e-20)


def _lanczos_gamma(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Gamma for x >= 0.5 (no argument checking)."""
    xm = x - 1.0
    acc = np.full_like(xm, _LANCZOS_COEFFS[0])
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc = acc + c / (xm + i)
    t = xm + _LANCZOS_G + 0.5
    # split the power so it does not overflow before the exponential damps it
    half = t ** (0.5 * (xm + 0.5))
    return _SQRT_2PI * half * (half * np.exp(-t)) * acc


# Gamma(n) = (n-1)! exactly for integer n <= 171
_FACTORIALS = np.array([float(math.factorial(n)) for n in range(171)])


def _gamma_pos(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Gamma for 0.5 <= x <= 171, exact at the integers."""
    # the Lanczos form loses about eps * log(Gamma(x)) at large x; the
    # product (x-1)(x-2)...(x-n) Gamma(x-n) with x - n in [1, 2) does not
    shift = np.maximum(np.floor(x) - 1.0, 0.0)
    out = _lanczos_gamma(x - shift)
    for j in range(1, int(shift.max(initial=0.0)) + 1):
        out = np.where(shift >= j, out * (x - j), out)
    whole = x == np.floor(x)
    out[whole] = _FACTORIALS[x[whole].astype(np.int64) - 1]
    return out


def _sinpi(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """sin(pi x) with exact zeros at the integers."""
    r = x - 2.0 * np.round(0.5 * x)
    out = np.sin(np.pi * r)
    out[r == np.round(r)] = 0.0
    return out


def gamma(x: ArrayLike) -> float | NDArray[np.float64]:
    """Gamma function for positive real arguments.

    Parameters
    ----------
    x : float or array_like
        Positive arguments.

    Returns
    -------
    float or ndarray
        :math:`\\Gamma(x)`, relative accuracy about 1e-15.

    Raises
    ------
    DomainError
        If any argument is not strictly positive.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("gamma is only supported for x > 0")
    small = arr < 0.5
    out = np.empty_like(arr)
    # reflection keeps the Lanczos sum in its accurate range
    xs = arr[small]
    out[small] = np.pi / (np.sin(np.pi * xs) * _lanczos_gamma(1.0 - xs))
    out[~small] = _gamma_pos(arr[~small])
    return float(out) if out.ndim == 0 else out


def rgamma(x: ArrayLike) -> NDArray[np.float64]:
    """Reciprocal gamma 1/Gamma(x) for any real x (zero at the poles)."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(arr)
    big = arr > 171.0
    pos = (arr >= 0.5) & ~big
    out[pos] = 1.0 / _gamma_pos(arr[pos])
    neg = arr < 0.5
    xn = arr[neg]
    out[neg] = _sinpi(xn) * _lanczos_gamma(1.0 - xn) / np.pi
    return out.reshape(np.shape(x))


@lru_cache(maxsize=256)
def _rgamma_scalar(x: float) -> float:
    return float(rgamma(x))


def beta(a: float, b: float) -> float:
    """Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b) for a, b > 0."""
    if not (a > 0 and b > 0):
        raise DomainError("beta is only supported for positive arguments")
    if a + b > 170.0:
        lg = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        return math.exp(lg)
    return gamma(a) * gamma(b) / gamma(a + b)


@dataclass(frozen=True)
class MLParams:
    """Order ``rho`` in (0, 1] and second parameter ``mu`` > 0."""

    rho: float
    mu: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.rho <= 1.0):
            raise DomainError(f"rho must lie in (0, 1], got {self.rho}")
        if not self.mu > 0.0:
            raise DomainError(f"mu must be positive, got {self.mu}")


@lru_cache(maxsize=256)
def _series_coeffs(rho: float, mu: float) -> NDArray[np.float64]:
    nmax = int(math.ceil((25.0 - mu) / rho)) + 2
    out = rgamma(rho * np.arange(nmax, dtype=float) + mu)
    out.flags.writeable = False
    return out


def _series(rho: float, mu: float, z: NDArray[np.float64]) -> NDArray[np.float64]:
    # terms are bounded by 1/min Gamma ~ 1.13 for |z| <= 1, no cancellation issue
    coeffs = _series_coeffs(rho, mu)
    ks = np.arange(coeffs.size)
    out = np.empty_like(z)
    for lo in range(0, z.size, _CHUNK):
        zc = z[lo : lo + _CHUNK, None]
        # pairwise summation along the short axis, smallest terms first
        out[lo : lo + _CHUNK] = (coeffs * zc**ks)[:, ::-1].sum(axis=1)
    return out


@lru_cache(maxsize=256)
def _asymptotic_coeffs(rho: float, mu: float) -> tuple[NDArray[np.float64], ...]:
    ks = np.arange(1, ASYMPTOTIC_MAX_TERMS + 1, dtype=float)
    args = mu - rho * ks
    coeffs = rgamma(args)
    # envelope of 1/|Gamma| so accidental zeros at the poles do not stop truncation
    env_coeffs = np.abs(coeffs)
    neg = args <= 0
    env_coeffs[neg] = np.maximum(
        env_coeffs[neg], np.exp([math.lgamma(1.0 - a) for a in args[neg]]) / np.pi
    )
    for arr in (ks, coeffs, env_coeffs):
        arr.flags.writeable = False
    return ks, coeffs, env_coeffs


def _asymptotic(
    rho: float, mu: float, t: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Optimally truncated expansion of E(-t); returns values and a converged mask."""
    ks, coeffs, env_coeffs = _asymptotic_coeffs(rho, mu)
    log_envc = np.log(env_coeffs)
    signs = (-1.0) ** (ks + 1) * coeffs
    vals = np.empty(t.size)
    ok = np.empty(t.size, dtype=bool)
    for lo in range(0, t.size, _CHUNK):
        logt = np.log(t[lo : lo + _CHUNK])[:, None]
        log_env = log_envc - ks * logt
        rows = np.arange(logt.shape[0])
        kstar = np.argmin(log_env, axis=1)
        # per row, stop where terms fall 1e-20 below the leading one
        tiny = log_env < log_env[:, :1] + _NEGLIGIBLE
        kcut = np.where(tiny.any(axis=1), tiny.argmax(axis=1), ks.size)
        nterms = np.minimum(kstar, kcut)
        least = log_env[rows, kstar]
        # |partial sum| <= nterms * largest term, so these rows can never pass
        hopeless = least > math.log(ASYMPTOTIC_TOL) + np.log(np.maximum(nterms, 1)) + log_env.max(axis=1)
        nterms = np.where(hopeless, 0, nterms)
        width = int(nterms.max(initial=0))
        with np.errstate(over="ignore", under="ignore"):
            terms = signs[:width] * np.exp(-ks[:width] * logt)
        # sum the terms strictly before the cutoff, smallest first; column by
        # column so the padding never changes a row's rounding
        terms[np.arange(width) >= nterms[:, None]] = 0.0
        part = np.zeros(logt.shape[0])
        for j in range(width - 1, -1, -1):
            part += terms[:, j]
        vals[lo : lo + _CHUNK] = part
        ok[lo : lo + _CHUNK] = (kstar > 0) & ~hopeless & (np.exp(least) <= ASYMPTOTIC_TOL * np.abs(part))
    return vals, ok


def _contour_params(p: float, log_eps: float) -> tuple[float, float, int]:
    """Parabolic contour parameters (mu, h, N) when no pole lies on the main sheet.

    The only singularity is the branch point at the origin of strength ``p``.
    """
    log_mach = math.log(np.finfo(float).eps)
    phi_star = 0.0
    phibar = 0.01
    sq_phibar = math.sqrt(phibar)
    f_min, f_max, f_tar = 1.0, 10.0, 5.0
    while True:
        phi_t = phibar
        log_eps_phi_t = log_eps / phi_t
        n = math.ceil(
            phi_t / math.pi * (1.0 - 1.5 * log_eps_phi_t + math.sqrt(1.0 - 2.0 * log_eps_phi_t))
        )
        a = math.pi * n / phi_t
        sq_mu = sq_phibar * abs(4.0 - a) / abs(7.0 - math.sqrt(1.0 + 12.0 * a))
        if p < 1e-14:
            break
        fbar = ((sq_phibar - math.sqrt(phi_star)) / sq_mu) ** (-p)
        if f_min < fbar < f_max:
            break
        sq_phibar = f_tar ** (-1.0 / p) * sq_mu + math.sqrt(phi_star)
        phibar = sq_phibar**2
    mu_c = sq_mu**2
    h = (-3.0 * a - 2.0 + 2.0 * math.sqrt(1.0 + 12.0 * a)) / (4.0 - a) / n
    threshold = log_eps - log_mach
    if mu_c > threshold:
        q = 0.0 if p < 1e-14 else f_tar ** (-1.0 / p) * math.sqrt(mu_c)
        phibar = (q + math.sqrt(phi_star)) ** 2
        if phibar >= threshold:
            raise RuntimeError("no admissible contour for the requested accuracy")
        w = math.sqrt(log_mach / (log_mach - log_eps))
        u = math.sqrt(-phibar / log_mach)
        mu_c = threshold
        n = math.ceil(w * log_eps / (2.0 * math.pi) / (u * w - 1.0))
        h = w / n
    return mu_c, h, n


def _contour(rho: float, mu: float, z: NDArray[np.float64]) -> NDArray[np.float64]:
    if mu >= 1.0 + rho:
        # keep the origin singularity weak; the recurrence is stable for |z| >= 1
        lower = mu - rho
        return (_contour(rho, lower, z) - _rgamma_scalar(lower)) / z
    h, weight, sr = _contour_nodes(rho, mu)
    vals = (weight[None, :] / (sr[None, :] - z[:, None])).sum(axis=1)
    return (h / (2.0j * np.pi) * vals).real


@lru_cache(maxsize=256)
def _contour_nodes(rho: float, mu: float) -> tuple[float, NDArray[np.complex128], NDArray[np.complex128]]:
    p = max(0.0, -2.0 * (rho - mu + 1.0))
    mu_c, h, n = _contour_params(p, math.log(CONTOUR_EPS))
    u = h * np.arange(-n, n + 1)
    s = mu_c * (1j * u + 1.0) ** 2
    ds = 2.0 * mu_c * (1j - u)
    weight = np.exp(s) * s ** (rho - mu) * ds
    sr = s**rho
    weight.flags.writeable = False
    sr.flags.writeable = False
    return h, weight, sr


def _exponential_family(m: int, t: NDArray[np.float64]) -> NDArray[np.float64]:
    """E_{1,m}(-t) for integer m >= 1."""
    out = np.empty_like(t)
    if m == 1:
        return np.exp(-t)
    small = t <= max(2.0, float(m))
    if np.any(small):
        out[small] = _series(1.0, float(m), -t[small])
    big = ~small
    if np.any(big):
        tb = t[big]
        # E_{1,2}(-t) = -expm1(-t)/t, then E_{1,j+1} = (1/(j-1)! - E_{1,j})/t
        val = -np.expm1(-tb) / tb
        for j in range(2, m):
            val = (1.0 / math.factorial(j - 1) - val) / tb
        out[big] = val
    return out


def mittag_leffler(z: ArrayLike, rho: float, mu: float = 1.0) -> float | NDArray[np.float64]:
    r"""Two-parameter Mittag-Leffler function :math:`E_{\rho,\mu}(z)` for real z <= 0.

    Parameters
    ----------
    z : float or array_like
        Non-positive arguments.
    rho : float
        Order in (0, 1].
    mu : float, default 1.0
        Second parameter, positive.

    Returns
    -------
    float or ndarray
        Function values, relative accuracy about 1e-13 for ``mu`` in
        ``{1, rho, rho + 1, rho + 2}``.

    Raises
    ------
    DomainError
        For z > 0 or parameters outside the supported range.
    """
    MLParams(rho, mu)
    zarr = np.asarray(z, dtype=float)
    if np.any(~(zarr <= 0)):
        raise DomainError("Mittag-Leffler evaluation is supported for real z <= 0 only")
    flat = zarr.ravel()
    out = np.empty_like(flat)
    t = -flat

    zero = t == 0.0
    if np.any(zero):
        out[zero] = _rgamma_scalar(float(mu))
    rest = ~zero

    if rho == 1.0 and float(mu).is_integer():
        out[rest] = _exponential_family(int(mu), t[rest])
        return float(out[0]) if zarr.ndim == 0 else out.reshape(zarr.shape)

    small = rest & (t <= SERIES_RADIUS)
    if np.any(small):
        out[small] = _series(rho, mu, flat[small])
    large = rest & ~small
    if np.any(large):
        idx = np.flatnonzero(large)
        vals, ok = _asymptotic(rho, mu, t[idx])
        out[idx[ok]] = vals[ok]
        todo = idx[~ok]
        if todo.size:
            out[todo] = _contour(rho, mu, flat[todo])
    return float(out[0]) if zarr.ndim == 0 else out.reshape(zarr.shape)


def ml(params: MLParams, z: ArrayLike) -> float | NDArray[np.float64]:
    """Evaluate :func:`mittag_leffler` with a parameter record."""
    return mittag_leffler(z, params.rho, params.mu)


def ml_one(rho: float, z: ArrayLike) -> float | NDArray[np.float64]:
    """Classical one-parameter Mittag-Leffler function E_rho(z) = E_{rho,1}(z)."""
    return mittag_leffler(z, rho, 1.0)
