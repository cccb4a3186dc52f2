"""
Conformance checks run by ``subdiffusion verify``.

Each check compares a solver quantity with an independent oracle and
records the observed deviation next to its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from subdiffusion import oracles
from subdiffusion.forward import ForwardProblem, solve
from subdiffusion.kernel import Constant, Polynomial, classify, duhamel
from subdiffusion.special_functions import gamma, mittag_leffler
from subdiffusion.spectral import BoxDomain, GridFunction, SpectralCoeffs, analyze

__all__ = ["Check", "run_checks"]


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name: str, value: float, tolerance: float) -> Check:
    return Check(name, float(value), float(tolerance), bool(value <= tolerance))


def run_checks() -> list[Check]:
    """Run every oracle comparison; takes a few seconds."""
    checks = []

    # below t ~ 5e-6 the half-ulp of E_rho(-t) divided by t already exceeds 1e-11
    t = np.logspace(-5, 6, 2001)
    for rho in (0.3, 0.5, 0.7, 0.9):
        lhs = mittag_leffler(-t, rho, rho + 1.0)
        rhs = (1.0 - mittag_leffler(-t, rho, 1.0)) / t
        checks.append(_check(f"ml_reduction_rho{rho}", np.max(np.abs(lhs - rhs)), 1e-11))

    for rho in (0.3, 0.5, 0.9):
        for lam in (1.0, 100.0):
            ref = oracles.brute_duhamel(Polynomial((1.0, 1.0)), rho, lam, 1.0, 1e-11)
            val = duhamel(Polynomial((1.0, 1.0)), rho, lam, 1.0, method="product-integration")
            checks.append(_check(f"duhamel_vs_quadrature_rho{rho}_lam{lam:g}", abs(val.values[0] - ref), 1e-8))

    tt = np.linspace(0.0, 1.0, 1025)
    d = oracles.caputo_l1(tt, tt[1], 0.5)
    checks.append(_check("l1_linear_exact", np.max(np.abs(d[1:] - tt[1:] ** 0.5 / gamma(1.5))), 1e-12))
    errs = []
    for n in (64, 128, 256):
        s = np.linspace(0.0, 1.0, n + 1)
        errs.append(np.max(np.abs(oracles.caputo_l1(s**2, 1.0 / n, 0.5) - 2 * s**1.5 / gamma(2.5))))
    order = math.log2(errs[-2] / errs[-1])
    checks.append(_check("l1_order_t2_deviation_from_1.5", abs(order - 1.5), 0.2))

    dom = BoxDomain.interval()
    v1 = GridFunction.sample(dom, lambda x: np.sqrt(2 / np.pi) * np.sin(x))
    lap = oracles.laplacian_fd(v1)
    checks.append(_check("fd_laplacian_eigen_mode1", np.max(np.abs(lap.values + v1.values)), 1e-4))

    sc = oracles.example1_scenario(0.5, 0.1)
    checks.append(_check("example1_g0", abs(sc.g0 - math.sqrt(math.pi) / 2), 1e-12))
    checks.append(_check("example1_g1_negative", sc.g1, 0.0))
    cls = classify(sc.g, 0.5, [sc.lam], 1.0)
    checks.append(_check("example1_mode_null", 0.0 if cls.null[0] else 1.0, 0.0))
    s = np.linspace(0.0, 1.0, 4097)
    l1 = oracles.caputo_l1(sc.T(s), s[1], 0.5) + sc.lam * sc.T(s)
    mask = s >= 0.05
    checks.append(_check("example1_g_vs_l1", np.max(np.abs(l1[mask] - sc.g(s[mask]))), 5e-3))

    unit = SpectralCoeffs.unit(dom, 1)
    heat = solve(ForwardProblem(dom, 1.0, phi=unit, horizon=1.0))
    rep = oracles.residual_check(heat, n_steps=512)
    checks.append(_check("heat_residual", rep.max_residual, 5e-3))

    c = analyze(GridFunction.sample(dom, lambda x: x * (np.pi - x), 1023), 32)
    k = np.arange(1, 33)
    exact = np.where(k % 2 == 1, 8.0 / (np.pi * k**3) * np.sqrt(np.pi / 2), 0.0)
    checks.append(_check("dst_bubble_coefficients", np.max(np.abs(c.values - exact)), 1e-8))

    ref = oracles.brute_duhamel(Constant(1.0), 0.5, 100.0, 1.0, 1e-11)
    val = duhamel(Constant(1.0), 0.5, 100.0, 1.0).values[0]
    checks.append(_check("constant_closed_form_vs_quadrature", abs(val - ref), 1e-8))
    return checks
