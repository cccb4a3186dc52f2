import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdiffusion.errors import DomainError, PreconditionError
from subdiffusion.oracles import laplacian_fd
from subdiffusion.spectral import (
    BoxDomain,
    GridFunction,
    SpectralCoeffs,
    analyze,
    decay_diagnostic,
    eigenfunction_at,
    eigenvalue,
    mode_table,
    synthesize,
)


def bubble_coeffs(count: int) -> np.ndarray:
    # analytic sine coefficients of x(pi - x) in the orthonormal basis
    k = np.arange(1, count + 1)
    return np.where(k % 2 == 1, 8.0 / (np.pi * k**3) * np.sqrt(np.pi / 2), 0.0)


class TestDomain:
    def test_invalid(self):
        with pytest.raises(ValueError):
            BoxDomain((0.0,))
        with pytest.raises(ValueError):
            BoxDomain((1.0, 1.0, 1.0))

    def test_dims(self, interval, square):
        assert interval.dim == 1 and square.dim == 2
        assert square.volume == pytest.approx(math.pi**2)


class TestEigenpairs:
    def test_eigenvalue_examples(self, interval, square):
        assert eigenvalue(interval, 1) == pytest.approx(1.0)
        assert eigenvalue(interval, 3) == pytest.approx(9.0)
        assert eigenvalue(square, (1, 2)) == pytest.approx(5.0)

    def test_invalid_mode(self, interval):
        with pytest.raises(ValueError):
            eigenvalue(interval, 0)

    def test_eigenfunction_examples(self, interval, square):
        assert eigenfunction_at(interval, 1, math.pi / 2) == pytest.approx(math.sqrt(2 / math.pi))
        assert eigenfunction_at(interval, 2, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
        assert eigenfunction_at(square, (1, 1), (math.pi / 2, math.pi / 2)) == pytest.approx(2 / math.pi)

    def test_boundary_zero(self, interval, square):
        assert eigenfunction_at(interval, 5, 0.0) == 0.0
        assert abs(eigenfunction_at(square, (3, 2), (math.pi, 1.0))) < 1e-15

    def test_outside_raises(self, interval, square):
        with pytest.raises(DomainError):
            eigenfunction_at(interval, 1, 4.0)
        with pytest.raises(DomainError):
            eigenfunction_at(square, (1, 1), (1.0, -0.1))

    def test_ordering_2d(self, square):
        modes, lams = mode_table(square, 8)
        assert [tuple(m) for m in modes[:6]] == [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)]
        assert np.all(np.diff(lams) >= -1e-12)

    def test_ordering_ties_lexicographic(self, square):
        modes, lams = mode_table(square, 8)
        # 1 + 49 = 25 + 25 = 49 + 1
        tie = [tuple(m) for m, lam in zip(modes, lams) if abs(lam - 50.0) < 1e-9]
        assert tie == [(1, 7), (5, 5), (7, 1)]

    def test_unequal_lengths(self):
        dom = BoxDomain.rectangle(1.0, 2.0)
        c = SpectralCoeffs.zeros(dom, (4, 6))
        assert len(c) == 24
        assert c.eigenvalues[0] == pytest.approx(np.pi**2 * (1 + 0.25))


class TestTransforms:
    def test_unit_mode_127_nodes(self, interval):
        v1 = GridFunction.sample(interval, lambda x: np.sqrt(2 / np.pi) * np.sin(x), 127)
        c = analyze(v1, 64)
        expected = np.zeros(64)
        expected[0] = 1.0
        assert np.max(np.abs(c.values - expected)) <= 1e-12

    def test_bubble_analytic(self, interval):
        # 1023 nodes: at 255 the aliased tail of the k^-3 coefficients shows at 2e-8
        h = GridFunction.sample(interval, lambda x: x * (np.pi - x), 1023)
        c = analyze(h, 64)
        assert np.max(np.abs(c.values - bubble_coeffs(64))) <= 1e-8

    def test_zero(self, interval):
        c = analyze(GridFunction.sample(interval, lambda x: 0 * x), 64)
        assert np.all(c.values == 0)

    def test_orthonormality(self, interval, square):
        for j in range(1, 33):
            h = GridFunction.sample(interval, lambda x: np.sqrt(2 / np.pi) * np.sin(j * x))
            c = analyze(h, 64)
            e = np.zeros(64)
            e[j - 1] = 1.0
            assert np.max(np.abs(c.values - e)) <= 1e-12
        h = GridFunction.sample(square, lambda x, y: (2 / np.pi) * np.sin(2 * x) * np.sin(3 * y))
        c = analyze(h, 16)
        assert c.values[c.index_of((2, 3))] == pytest.approx(1.0, abs=1e-12)
        assert np.sum(np.abs(c.values)) == pytest.approx(1.0, abs=1e-11)

    def test_roundtrip_band_limited(self, interval, square):
        rng = np.random.default_rng(3)
        for dom, count in ((interval, 64), (square, 16)):
            c = SpectralCoeffs.zeros(dom, count).with_values(rng.normal(size=len(SpectralCoeffs.zeros(dom, count))))
            back = analyze(synthesize(c), count)
            assert np.max(np.abs(back.values - c.values)) <= 1e-12

    def test_high_mode_synthesis(self, interval):
        c = SpectralCoeffs.unit(interval, 64)
        g = synthesize(c)
        x = g.axes()[0]
        assert np.max(np.abs(g.values - np.sqrt(2 / np.pi) * np.sin(64 * x))) <= 1e-12

    def test_count_exceeds_nodes(self, interval):
        h = GridFunction.sample(interval, np.sin, 31)
        with pytest.raises(PreconditionError):
            analyze(h, 64)
        with pytest.raises(PreconditionError):
            synthesize(SpectralCoeffs.zeros(interval, 64), 31)

    def test_eigen_relation(self, interval):
        c = SpectralCoeffs.zeros(interval, 16).with_values(1.0 / np.arange(1, 17) ** 2)
        errs = []
        for n in (127, 255):
            h = synthesize(c, n)
            lhs = analyze(laplacian_fd(h), 16).values
            errs.append(np.max(np.abs(-lhs - c.eigenvalues * c.values)))
        assert errs[1] < errs[0] / 3.5

    def test_csv_roundtrip(self, tmp_path, interval, square):
        for dom in (interval, square):
            g = GridFunction.sample(dom, (lambda x: np.sin(x)) if dom.dim == 1 else (lambda x, y: np.sin(x) * y), 15)
            path = tmp_path / f"g{dom.dim}.csv"
            g.to_csv(path)
            back = GridFunction.from_csv(path, dom)
            assert np.array_equal(back.values, g.values)
            text = path.read_bytes()
            assert b"\r" not in text
            assert text.splitlines()[0] == (b"x,value" if dom.dim == 1 else b"x,y,value")

    def test_csv_rejects_other_grid(self, tmp_path, interval):
        path = tmp_path / "bad.csv"
        path.write_text("x,value\n0.5,1.0\n0.7,2.0\n0.9,3.0\n")
        with pytest.raises(ValueError):
            GridFunction.from_csv(path, interval)


@settings(max_examples=40, deadline=None)
@given(
    values=st.lists(st.floats(-10, 10), min_size=32, max_size=32),
)
def test_parseval(values):
    dom = BoxDomain.interval()
    c = SpectralCoeffs.zeros(dom, 32).with_values(values)
    g = synthesize(c, 255)
    assert g.l2_norm() ** 2 == pytest.approx(np.sum(np.square(values)), rel=1e-6, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(
    entries=st.dictionaries(
        st.tuples(st.integers(1, 8), st.integers(1, 8)), st.floats(-5, 5), min_size=1, max_size=6
    )
)
def test_roundtrip_2d_property(entries):
    dom = BoxDomain.rectangle(math.pi, 2.0)
    c = SpectralCoeffs.from_modes(dom, entries, 8)
    back = analyze(synthesize(c, 31), 8)
    assert np.allclose(back.values, c.values, atol=1e-12)


class TestDecayDiagnostic:
    def test_unit_mass(self, interval):
        rep = decay_diagnostic(SpectralCoeffs.unit(interval, 1), 3.0)
        assert np.allclose(rep.partial_sums, 1.0)
        assert rep.convergent

    def test_bubble_tau2_bounded(self, interval):
        c = SpectralCoeffs.zeros(interval, 64).with_values(bubble_coeffs(64))
        rep = decay_diagnostic(c, 2.0)
        # sum over odd k of k^4 (64 / (pi^2 k^6)) (pi / 2) = (32 / pi)(pi^2 / 8) = 4 pi
        assert rep.partial_sums[-1] <= 4 * np.pi
        assert rep.partial_sums[-1] == pytest.approx(4 * np.pi, rel=0.02)
        assert rep.verdict == "plausibly convergent"

    def test_bubble_tau3_divergent(self, interval):
        c = SpectralCoeffs.zeros(interval, 64).with_values(bubble_coeffs(64))
        rep = decay_diagnostic(c, 3.0)
        # every odd term contributes 32 / pi
        assert rep.partial_sums[-1] == pytest.approx(32 / np.pi * 32, rel=1e-10)
        assert rep.verdict == "divergent-looking"
        assert not rep.convergent

    def test_tau_must_be_positive(self, interval):
        with pytest.raises(ValueError):
            decay_diagnostic(SpectralCoeffs.unit(interval, 1), 0.0)
