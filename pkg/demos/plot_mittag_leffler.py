"""
Evaluating Mittag-Leffler functions
===================================

The two-parameter Mittag-Leffler function drives every mode of the solver.
This walk-through evaluates it on a logarithmic grid, checks two identities
and compares the decay with the exponential it generalizes.
"""

import numpy as np

from subdiffusion import gamma, mittag_leffler

# Arguments are real and non-positive; arrays of any shape are accepted.
t = np.logspace(-3, 4, 8)
for rho in (0.3, 0.6, 1.0):
    print(f"rho={rho}:", np.array2string(mittag_leffler(-t, rho, 1.0), precision=4))

# At rho = 1 the function is the exponential.
print("E_1(-2) - exp(-2) =", mittag_leffler(-2.0, 1.0, 1.0) - np.exp(-2.0))

# E_{1/2}(-x) = exp(x^2) erfc(x) has a classical closed form.
from scipy.special import erfcx  # noqa: E402

print("E_{1/2}(-1.5) vs erfcx(1.5):", mittag_leffler(-1.5, 0.5, 1.0), erfcx(1.5))

# Reduction between neighbouring second parameters.
rho, x = 0.7, 3.0
lhs = mittag_leffler(-x, rho, rho + 1.0)
rhs = (1.0 - mittag_leffler(-x, rho, 1.0)) / x
print(f"reduction identity residual at x={x}: {abs(lhs - rhs):.1e}")

# Subdiffusive decay is algebraic: x E_rho(-x) tends to 1 / Gamma(1 - rho).
big = 1e6
print("x E_0.7(-x) at 1e6:", big * mittag_leffler(-big, 0.7, 1.0), " limit:", 1 / gamma(0.3))
