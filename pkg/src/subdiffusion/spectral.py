r"""
Dirichlet eigenbasis of the Laplacian on an interval or a rectangle.

The orthonormal eigenfunctions of :math:`-\Delta` on :math:`(0, L_1)\times\dots`
with zero boundary values are products of sines,

.. math::
    v_k(x) = \prod_i \sqrt{2/L_i}\,\sin(k_i \pi x_i / L_i), \qquad
    \lambda_k = \sum_i (k_i \pi / L_i)^2 .

Functions are sampled on uniform interior grids. Projection onto the basis is
a type-I discrete sine transform, which is exact for band-limited samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import fft

from subdiffusion.errors import DomainError, PreconditionError

__all__ = [
    "BoxDomain",
    "DecayReport",
    "GridFunction",
    "SpectralCoeffs",
    "analyze",
    "decay_diagnostic",
    "default_nodes",
    "eigenfunction_at",
    "eigenvalue",
    "mode_table",
    "synthesize",
]

DEFAULT_COUNT = 64
DEFAULT_NODES = {1: 255, 2: 127}


@dataclass(frozen=True)
class BoxDomain:
    """The box :math:`(0, L_1) \\times \\dots \\times (0, L_d)`, d in {1, 2}."""

    lengths: tuple[float, ...] = (math.pi,)

    def __post_init__(self) -> None:
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) not in (1, 2):
            raise ValueError("only 1-D intervals and 2-D rectangles are supported")
        if any(not (v > 0 and math.isfinite(v)) for v in lengths):
            raise ValueError("box lengths must be positive and finite")

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @classmethod
    def interval(cls, length: float = math.pi) -> BoxDomain:
        return cls((length,))

    @classmethod
    def rectangle(cls, lx: float = math.pi, ly: float = math.pi) -> BoxDomain:
        return cls((lx, ly))

    def normalize_mode(self, k: int | Sequence[int]) -> tuple[int, ...]:
        """Return ``k`` as a tuple of positive integers matching the dimension."""
        mode = tuple(int(v) for v in np.atleast_1d(k))
        if len(mode) != self.dim or any(v < 1 for v in mode):
            raise ValueError(f"invalid mode index {k!r} for a {self.dim}-D domain")
        return mode

    def normalize_counts(self, count: int | Sequence[int]) -> tuple[int, ...]:
        counts = tuple(int(v) for v in np.atleast_1d(count))
        if len(counts) == 1:
            counts = counts * self.dim
        if len(counts) != self.dim or any(v < 1 for v in counts):
            raise ValueError(f"invalid mode count {count!r}")
        return counts


def default_nodes(domain: BoxDomain) -> tuple[int, ...]:
    return (DEFAULT_NODES[domain.dim],) * domain.dim


def eigenvalue(domain: BoxDomain, k: int | Sequence[int]) -> float:
    """Dirichlet eigenvalue :math:`\\sum_i (k_i\\pi/L_i)^2` of mode ``k``."""
    mode = domain.normalize_mode(k)
    return float(sum((ki * math.pi / li) ** 2 for ki, li in zip(mode, domain.lengths)))


def eigenfunction_at(domain: BoxDomain, k: int | Sequence[int], x: float | Sequence[float]) -> float:
    """Value of the L2-normalised eigenfunction ``v_k`` at the point ``x``."""
    mode = domain.normalize_mode(k)
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.size != domain.dim:
        raise DomainError(f"point {x!r} has the wrong dimension")
    out = 1.0
    for ki, li, xi in zip(mode, domain.lengths, point):
        if not (0.0 <= xi <= li):
            raise DomainError(f"point {x!r} lies outside the domain")
        out *= math.sqrt(2.0 / li) * math.sin(ki * math.pi * xi / li)
    return out


def mode_table(domain: BoxDomain, count: int | Sequence[int]) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Modes kept for ``count`` per axis, sorted by eigenvalue then index.

    Returns
    -------
    modes : ndarray of int, shape (M, dim)
    eigenvalues : ndarray, shape (M,)
    """
    counts = domain.normalize_counts(count)
    axes = [np.arange(1, c + 1) for c in counts]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.dim)
    lams = np.zeros(grid.shape[0])
    for i, li in enumerate(domain.lengths):
        lams += (grid[:, i] * math.pi / li) ** 2
    # round so that exact ties like (1, 7) / (5, 5) are not split by round-off
    lam_key = np.round(lams / lams.min(), 9)
    keys = [grid[:, i] for i in reversed(range(domain.dim))] + [lam_key]
    order = np.lexsort(keys)
    return grid[order], lams[order]


@dataclass(eq=False)
class SpectralCoeffs:
    """Coefficients of a function in the Dirichlet eigenbasis.

    ``values[i]`` multiplies the eigenfunction with index ``modes[i]``; modes
    are ordered by ascending eigenvalue with lexicographic tie-break.
    """

    domain: BoxDomain
    count: tuple[int, ...]
    values: NDArray[np.float64]
    modes: NDArray[np.int64] = field(repr=False, default=None)
    eigenvalues: NDArray[np.float64] = field(repr=False, default=None)

    def __post_init__(self) -> None:
        self.count = self.domain.normalize_counts(self.count)
        if self.modes is None or self.eigenvalues is None:
            self.modes, self.eigenvalues = mode_table(self.domain, self.count)
        self.values = np.asarray(self.values, dtype=float).copy()
        if self.values.shape != (self.modes.shape[0],):
            raise ValueError(
                f"expected {self.modes.shape[0]} coefficients, got shape {self.values.shape}"
            )

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def zeros(cls, domain: BoxDomain, count: int | Sequence[int] = DEFAULT_COUNT) -> SpectralCoeffs:
        counts = domain.normalize_counts(count)
        modes, lams = mode_table(domain, counts)
        return cls(domain, counts, np.zeros(modes.shape[0]), modes, lams)

    @classmethod
    def from_modes(
        cls,
        domain: BoxDomain,
        entries: dict,
        count: int | Sequence[int] = DEFAULT_COUNT,
    ) -> SpectralCoeffs:
        """Build coefficients from a ``{mode: value}`` mapping."""
        out = cls.zeros(domain, count)
        for k, v in entries.items():
            out.values[out.index_of(k)] = float(v)
        return out

    @classmethod
    def unit(cls, domain: BoxDomain, k, count: int | Sequence[int] = DEFAULT_COUNT) -> SpectralCoeffs:
        return cls.from_modes(domain, {domain.normalize_mode(k): 1.0}, count)

    def with_values(self, values: ArrayLike) -> SpectralCoeffs:
        return SpectralCoeffs(self.domain, self.count, values, self.modes, self.eigenvalues)

    def index_of(self, k) -> int:
        mode = self.domain.normalize_mode(k)
        hits = np.flatnonzero((self.modes == np.asarray(mode)).all(axis=1))
        if hits.size == 0:
            raise KeyError(f"mode {mode} is not retained (count={self.count})")
        return int(hits[0])

    def mode_label(self, i: int) -> int | tuple[int, ...]:
        """Mode index of entry ``i``: an int in 1-D, a tuple in 2-D."""
        mode = tuple(int(v) for v in self.modes[i])
        return mode[0] if self.domain.dim == 1 else mode

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __add__(self, other: SpectralCoeffs) -> SpectralCoeffs:
        _check_compatible(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: SpectralCoeffs) -> SpectralCoeffs:
        _check_compatible(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: float) -> SpectralCoeffs:
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__


def _check_compatible(a: SpectralCoeffs, b: SpectralCoeffs) -> None:
    if a.domain != b.domain or a.count != b.count:
        raise ValueError("coefficient sets live on different bases")


@dataclass(eq=False)
class GridFunction:
    """Samples of a function on the uniform interior grid of a box.

    Node ``j`` on axis ``i`` sits at ``j * L_i / (n_i + 1)``, ``j = 1..n_i``;
    boundary values are implicitly zero.
    """

    domain: BoxDomain
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.domain.dim:
            raise ValueError("sample array dimension does not match the domain")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid samples must be finite")

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    def axes(self) -> list[NDArray[np.float64]]:
        return [
            np.arange(1, n + 1) * (li / (n + 1)) for n, li in zip(self.nodes, self.domain.lengths)
        ]

    def spacing(self) -> tuple[float, ...]:
        return tuple(li / (n + 1) for n, li in zip(self.nodes, self.domain.lengths))

    @classmethod
    def sample(
        cls,
        domain: BoxDomain,
        func: Callable[..., ArrayLike],
        nodes: int | Sequence[int] | None = None,
    ) -> GridFunction:
        """Sample ``func(x)`` (1-D) or ``func(x, y)`` (2-D) on the interior grid."""
        n = default_nodes(domain) if nodes is None else domain.normalize_counts(nodes)
        axes = [np.arange(1, ni + 1) * (li / (ni + 1)) for ni, li in zip(n, domain.lengths)]
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.broadcast_to(np.asarray(func(*mesh), dtype=float), tuple(n))
        return cls(domain, np.array(vals))

    def l2_norm(self) -> float:
        """Discrete L2 norm (trapezoid rule with zero boundary values)."""
        return float(np.sqrt(np.sum(self.values**2) * np.prod(self.spacing())))

    def to_csv(self, path: str | Path) -> None:
        """Write ``x[,y],value`` rows in row-major order over the tensor grid."""
        axes = self.axes()
        names = ["x", "y"][: self.domain.dim]
        mesh = np.meshgrid(*axes, indexing="ij")
        cols = [m.ravel() for m in mesh] + [self.values.ravel()]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names + ["value"])
            for row in zip(*cols):
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path, domain: BoxDomain) -> GridFunction:
        """Read a file written by :meth:`to_csv` (row-major tensor grid)."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != domain.dim + 1:
            raise ValueError(f"{path}: expected {domain.dim + 1} columns")
        shape = tuple(np.unique(data[:, i]).size for i in range(domain.dim))
        grid = cls(domain, data[:, -1].reshape(shape))
        for i, ax in enumerate(grid.axes()):
            if not np.allclose(np.unique(data[:, i]), ax, rtol=0, atol=1e-9 * domain.lengths[i]):
                raise ValueError(f"{path}: axis {i} is not the uniform interior grid")
        return grid


def _dst_scale(n: int, length: float) -> float:
    # (h, v_k) ~ sum_j h_j sqrt(2/L) sin(k pi j/(n+1)) L/(n+1); scipy's DST-I carries a factor 2
    return math.sqrt(length / 2.0) / (n + 1)


def analyze(h: GridFunction, count: int | Sequence[int] = DEFAULT_COUNT) -> SpectralCoeffs:
    """Project grid samples onto the first ``count`` eigenfunctions per axis.

    Raises
    ------
    PreconditionError
        If more modes are requested than the grid resolves.
    """
    domain = h.domain
    counts = domain.normalize_counts(count)
    if any(c > n for c, n in zip(counts, h.nodes)):
        raise PreconditionError(f"mode count {counts} exceeds the grid resolution {h.nodes}")
    coeffs = h.values
    for axis, (n, li) in enumerate(zip(h.nodes, domain.lengths)):
        coeffs = fft.dst(coeffs, type=1, axis=axis) * _dst_scale(n, li)
    modes, lams = mode_table(domain, counts)
    values = coeffs[tuple((modes - 1).T)]
    return SpectralCoeffs(domain, counts, values, modes, lams)


def synthesize(c: SpectralCoeffs, nodes: int | Sequence[int] | None = None) -> GridFunction:
    """Evaluate :math:`\\sum_k c_k v_k` at the interior grid nodes."""
    domain = c.domain
    n = default_nodes(domain) if nodes is None else domain.normalize_counts(nodes)
    if any(ci > ni for ci, ni in zip(c.count, n)):
        raise PreconditionError(f"grid {n} cannot represent {c.count} modes per axis")
    dense = np.zeros(n)
    dense[tuple((c.modes - 1).T)] = c.values
    for axis, (ni, li) in enumerate(zip(n, domain.lengths)):
        dense = fft.dst(dense, type=1, axis=axis) * (0.5 * math.sqrt(2.0 / li))
    return GridFunction(domain, dense)


@dataclass
class DecayReport:
    """Outcome of :func:`decay_diagnostic`.

    ``verdict`` is advisory only: ``"plausibly convergent"`` or
    ``"divergent-looking"``.
    """

    tau: float
    partial_sums: NDArray[np.float64]
    tail_slope: float
    verdict: str

    @property
    def convergent(self) -> bool:
        return self.verdict == "plausibly convergent"


def decay_diagnostic(c: SpectralCoeffs, tau: float, rate: float = 0.05) -> DecayReport:
    """Partial sums :math:`S_m = \\sum_{k \\le m} \\lambda_k^\\tau |c_k|^2` and a verdict.

    The verdict looks at the slope of :math:`\\log S_m` against :math:`\\log m`
    over the upper half of the retained modes; a slope below ``rate`` is read
    as a converging series. For a sum growing like :math:`m^p` the slope is p,
    for a converging one it tends to zero.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    sums = np.cumsum(c.eigenvalues**tau * c.values**2)
    m = np.arange(1, sums.size + 1)
    tail = slice(sums.size // 2, sums.size)
    if sums.size < 4 or sums[-1] == 0.0:
        slope = 0.0
    else:
        valid = sums[tail] > 0
        x = np.log(m[tail][valid])
        y = np.log(sums[tail][valid])
        slope = float(np.polyfit(x, y, 1)[0]) if x.size >= 2 else 0.0
    verdict = "plausibly convergent" if slope < rate else "divergent-looking"
    return DecayReport(float(tau), sums, slope, verdict)
