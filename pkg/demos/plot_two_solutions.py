"""
When a snapshot does not pin the source down
============================================

A time profile that changes sign can make one Duhamel coefficient vanish
at the observation time. The corresponding mode becomes invisible in the
snapshot, and a whole line of sources reproduces the same data. Moving the
observation time restores uniqueness.
"""

import numpy as np

from subdiffusion import BoxDomain, SpectralCoeffs, classify, recover
from subdiffusion.inverse import InverseProblem
from subdiffusion.oracles import example1_scenario, residual_check

sc = example1_scenario(rho=0.5, b=0.1)
print(f"g(0) = {sc.g0:.6f}, g(1) = {sc.g1:.4f}; sign change: {sc.changes_sign}")

# Both (u, f) pairs solve the equation and vanish at t = 1.
for name, (u, f) in (("trivial", sc.trivial), ("nontrivial", sc.nontrivial)):
    res = residual_check(u, n_steps=1024).max_residual
    print(f"{name:10s} |f| = {f.norm():.1f}, |u(1)| = {u.coefficients(1.0).norm():.1e}, residual {res:.1e}")

# Classification flags mode 1 as null at t0 = 1 but not at t0 = 0.5.
domain = BoxDomain.interval()
lam = SpectralCoeffs.zeros(domain, 8).eigenvalues
for t0 in (1.0, 0.5):
    cls = classify(sc.g, 0.5, lam, t0)
    print(f"t0={t0}: null modes {[int(k) + 1 for k in cls.null_modes]}")

# The free value on the null mode selects a member of the family.
zero = SpectralCoeffs.zeros(domain, 8)
for free in (0.0, 2.5):
    out = recover(InverseProblem(domain, 0.5, None, zero, sc.g, 1.0, count=8, free={1: free}))
    print(f"free={free}: verdict {out.verdict}, f_1 = {out.f.values[0]}")
