"""
Forward solve on an interval
============================

Solve the subdiffusion equation on (0, pi) with a smooth initial bump and
a constant-in-time source, then watch the profile relax. The residual of
the computed solution is measured with an independent finite-difference
check.
"""

import numpy as np

from subdiffusion import BoxDomain, Constant, ForwardProblem, GridFunction, solve
from subdiffusion.oracles import residual_check

domain = BoxDomain.interval()

# Data are sampled on the interior grid and projected onto the sine basis.
phi = GridFunction.sample(domain, lambda x: x**2 * (np.pi - x))
f = GridFunction.sample(domain, lambda x: np.sin(2 * x))

problem = ForwardProblem(domain, 0.6, phi=phi, f=f, g=Constant(1.0), horizon=2.0, count=64)
solution = solve(problem)

# Grid values at a few times.
for t in (0.0, 0.1, 0.5, 2.0):
    u = solution.at(t)
    print(f"t={t:4.1f}  max u = {u.values.max():.5f}")

# The first mode alone, as a trajectory in time.
times = np.linspace(0.0, 2.0, 6)
print("mode 1:", np.array2string(solution.trajectory(times)[:, 0], precision=5))

# Residual of the L1 time discretization plus centred differences in space.
report = residual_check(solution, n_steps=512)
print(f"residual max {report.max_residual:.2e} on window {report.window}")
