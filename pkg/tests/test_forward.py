import math
import threading

import numpy as np
import pytest

from subdiffusion.errors import CoverageError, DomainError
from subdiffusion.forward import ForwardProblem, solve, solve_homogeneous, solve_inhomogeneous
from subdiffusion.kernel import Constant, Example1, Polynomial, Samples
from subdiffusion.oracles import residual_check
from subdiffusion.special_functions import mittag_leffler
from subdiffusion.spectral import BoxDomain, GridFunction, SpectralCoeffs, analyze, synthesize

# E_{1/2}(-1) = e erfc(1)
E_HALF_MINUS_ONE = math.e * math.erfc(1.0)


def unit(dom, k, count=64):
    return SpectralCoeffs.unit(dom, k, count)


class TestHomogeneous:
    def test_heat_mode(self, interval):
        for t in (0.0, 0.3, 1.0):
            u = solve_homogeneous(interval, 1.0, unit(interval, 1), t)
            v1 = synthesize(unit(interval, 1)).values
            assert np.max(np.abs(u.values - math.exp(-t) * v1)) <= 1e-14

    def test_half_order_mode(self, interval):
        u = solve_homogeneous(interval, 0.5, unit(interval, 1), 1.0)
        c = analyze(u, 64)
        assert c.values[0] == pytest.approx(E_HALF_MINUS_ONE, abs=1e-14)
        assert c.values[0] == pytest.approx(0.4275836, abs=1e-7)

    def test_initial_condition(self, interval):
        phi = GridFunction.sample(interval, lambda x: x * (math.pi - x) * np.cos(x))
        u = solve_homogeneous(interval, 0.4, phi, 0.0)
        # phi itself is not band-limited; compare with its 64-mode projection
        projected = synthesize(analyze(phi, 64), phi.nodes)
        assert np.max(np.abs(u.values - projected.values)) <= 1e-8

    def test_negative_time(self, interval):
        with pytest.raises(DomainError):
            solve_homogeneous(interval, 0.5, unit(interval, 1), -0.1)


class TestInhomogeneous:
    @pytest.mark.parametrize("rho", [0.3, 0.5, 0.9])
    def test_constant_profile_mode_one(self, interval, rho):
        t = 0.8
        u = solve_inhomogeneous(interval, rho, unit(interval, 1), Constant(1.0), t)
        expected = t**rho * mittag_leffler(-(t**rho), rho, rho + 1.0)
        assert analyze(u, 64).values[0] == pytest.approx(expected, abs=1e-14)

    def test_zero_source(self, interval):
        u = solve_inhomogeneous(interval, 0.5, SpectralCoeffs.zeros(interval, 64), Constant(1.0), 1.0)
        assert np.all(u.values == 0.0)

    def test_heat_mode_two(self, interval):
        u = solve_inhomogeneous(interval, 1.0, unit(interval, 2), Constant(1.0), 1.0)
        assert analyze(u, 64).values[1] == pytest.approx(0.25 * (1 - math.exp(-4)), abs=1e-15)

    def test_coverage_error(self, interval):
        g = Samples((0.0, 0.5), (1.0, 1.0))
        with pytest.raises(CoverageError):
            solve_inhomogeneous(interval, 0.5, unit(interval, 1), g, 1.0)


class TestSolve:
    @pytest.mark.parametrize("rho", [0.5, 1.0])
    def test_stationary(self, interval, rho):
        sol = solve(ForwardProblem(interval, rho, phi=unit(interval, 1), f=unit(interval, 1), g=Constant(1.0)))
        for t in (0.0, 0.1, 0.5, 1.0):
            assert sol.coefficients(t).values[0] == pytest.approx(1.0, abs=1e-14)

    def test_heat_degeneration(self, interval):
        rng = np.random.default_rng(11)
        phi = SpectralCoeffs.zeros(interval, 64).with_values(rng.normal(size=64))
        sol = solve(ForwardProblem(interval, 1.0, phi=phi))
        lam = phi.eigenvalues
        for t in (0.1, 0.5, 1.0):
            assert np.max(np.abs(sol.coefficients(t).values - phi.values * np.exp(-lam * t))) <= 1e-10

    def test_initial_condition_grid(self, interval):
        phi = GridFunction.sample(interval, lambda x: np.sin(x) + 0.3 * np.sin(5 * x))
        sol = solve(ForwardProblem(interval, 0.6, phi=phi, f=unit(interval, 2), g=Constant(2.0)))
        assert np.max(np.abs(sol.at(0.0).values - phi.values)) <= 1e-8

    def test_boundary_trace_zero(self, interval):
        sol = solve(ForwardProblem(interval, 0.6, phi=unit(interval, 3), f=unit(interval, 2), g=Constant(2.0)))
        c = sol.coefficients(0.7)
        x = np.array([0.0, math.pi])
        k = np.arange(1, 65)
        trace = np.sqrt(2 / math.pi) * np.sin(np.outer(x, k)) @ c.values
        assert np.max(np.abs(trace)) <= 1e-14

    def test_mode_decoupling(self, interval):
        for j in (1, 4, 9):
            sol = solve(ForwardProblem(interval, 0.5, phi=unit(interval, j), f=unit(interval, j), g=Polynomial((1.0, 3.0))))
            vals = sol.coefficients(0.6).values
            others = np.delete(vals, j - 1)
            assert np.all(others == 0.0) and vals[j - 1] != 0.0

    def test_horizon_check(self, interval):
        sol = solve(ForwardProblem(interval, 0.5, phi=unit(interval, 1), horizon=1.0))
        with pytest.raises(DomainError):
            sol.coefficients(1.5)
        with pytest.raises(DomainError):
            ForwardProblem(interval, 1.2)
        with pytest.raises(DomainError):
            ForwardProblem(interval, 0.5, horizon=0.0)

    def test_source_without_profile(self, interval):
        with pytest.raises(ValueError):
            solve(ForwardProblem(interval, 0.5, f=unit(interval, 1)))

    def test_eager_times_cached(self, interval):
        sol = solve(ForwardProblem(interval, 0.5, phi=unit(interval, 1)), times=[0.2, 0.4])
        assert sol.coefficients(0.2) is sol.coefficients(0.2)

    def test_concurrent_cache(self, interval):
        g = Samples(tuple(np.linspace(0, 1, 21)), tuple(1 + np.linspace(0, 1, 21) ** 2))
        sol = solve(ForwardProblem(interval, 0.5, f=unit(interval, 1), g=g, count=8))
        times = np.linspace(0.1, 1.0, 10)
        results = {}

        def work(i):
            results[i] = [sol.coefficients(t).values.copy() for t in times]

        threads = [threading.Thread(target=work, args=(i,)) for i in range(6)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        for i in range(1, 6):
            for a, b in zip(results[0], results[i]):
                assert np.array_equal(a, b)

    def test_trajectory_matches_coefficients(self, interval):
        g = Example1(0.5, 0.1, 1.0)
        sol = solve(ForwardProblem(interval, 0.5, phi=unit(interval, 2), f=unit(interval, 1), g=g))
        times = np.array([0.0, 0.25, 0.5, 1.0])
        traj = sol.trajectory(times)
        for i, t in enumerate(times):
            assert np.allclose(traj[i], sol.coefficients(t).values, atol=1e-14, rtol=0)
        assert np.allclose(traj[:, 0], g.T(times), atol=1e-14)

    def test_trajectory_product_integration(self, interval):
        g = Samples(tuple(np.linspace(0, 1, 41)), tuple(np.ones(41)))
        sol = solve(ForwardProblem(interval, 0.5, f=unit(interval, 1), g=g, count=4))
        traj = sol.trajectory([0.0, 0.5, 1.0])
        exact = np.array([t**0.5 * mittag_leffler(-(t**0.5), 0.5, 1.5) if t > 0 else 0.0 for t in (0.0, 0.5, 1.0)])
        assert np.max(np.abs(traj[:, 0] - exact)) <= 1e-9

    def test_error_estimate(self, interval):
        sol = solve(ForwardProblem(interval, 0.5, f=unit(interval, 1), g=Constant(1.0)))
        err = sol.error_estimate(0.5)
        assert err.shape == (64,) and err[0] <= 1e-12 * abs(sol.coefficients(0.5).values[0]) and np.all(err[1:] == 0)

    def test_tail_indicator(self, interval):
        phi = SpectralCoeffs.zeros(interval, 64).with_values(np.ones(64))
        sol = solve(ForwardProblem(interval, 0.5, phi=phi))
        assert sol.tail_indicator() == pytest.approx(1 / 64**2)

    def test_two_dimensional(self, square):
        phi = SpectralCoeffs.unit(square, (1, 2), 8)
        sol = solve(ForwardProblem(square, 1.0, phi=phi, count=8))
        c = sol.coefficients(0.2)
        assert c.values[c.index_of((1, 2))] == pytest.approx(math.exp(-5 * 0.2), abs=1e-15)
        grid = sol.at(0.2, 31)
        assert grid.values.shape == (31, 31)

    def test_residual_heat(self):
        dom = BoxDomain.interval(1.0)
        sol = solve(ForwardProblem(dom, 1.0, phi=SpectralCoeffs.unit(dom, 1, 16), count=16))
        rep = residual_check(sol, n_steps=512, nodes=255)
        assert rep.max_residual <= 5e-3
