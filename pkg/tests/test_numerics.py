import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chansim.numerics import (
    BRACKET_SERIES_CUTOFF,
    ContractViolation,
    DomainError,
    KERNEL_SERIES_CUTOFF,
    RandomStream,
    bessel_j0,
    cross_longitudinal_square_bracket,
    cross_transverse_square_bracket,
    hermitian_logdet2,
    longitudinal_mean_bracket,
    longitudinal_square_bracket,
    sphere_kernels,
    transverse_mean_bracket,
    transverse_square_bracket,
)

BRACKETS = [
    (transverse_mean_bracket, 2 / 3),
    (longitudinal_mean_bracket, 1 / 3),
    (transverse_square_bracket, 8 / 3),
    (longitudinal_square_bracket, 16 / 15),
    (cross_transverse_square_bracket, 128 / 15),
    (cross_longitudinal_square_bracket, 8 / 15),
]


class TestSphereKernels:
    def test_zero_argument(self):
        ks = sphere_kernels(0.0)
        assert ks["s1"] == 1.0
        for name in ("s2", "s3", "s4", "s5"):
            assert math.isinf(ks[name])

    def test_small_x_combination_limit(self):
        # cos x/x^2 - sin x/x^3 -> -1/3 + x^2/30 (Taylor)
        x = 5e-3
        ks = sphere_kernels(x)
        assert ks["s2"] - ks["s3"] == pytest.approx(-1 / 3 + x**2 / 30, abs=1e-9)

    def test_at_pi(self):
        ks = sphere_kernels(math.pi)
        assert abs(ks["s1"]) < 1e-15
        assert ks["s2"] == pytest.approx(-1 / math.pi**2, rel=1e-14)

    def test_bounded_tail(self):
        assert abs(sphere_kernels(100.0)["s1"]) <= 1 / 100

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            sphere_kernels(-0.5)
        with pytest.raises(DomainError):
            transverse_mean_bracket(-1.0)

    def test_continuity_at_switchover(self):
        # series and direct branches agree at the threshold (one ulp apart,
        # so genuine function variation cannot mask a branch mismatch)
        lo = sphere_kernels(np.nextafter(KERNEL_SERIES_CUTOFF, 0.0))
        hi = sphere_kernels(KERNEL_SERIES_CUTOFF)
        for name in ("s1", "s2", "s3", "s4", "s5"):
            assert abs(lo[name] - hi[name]) <= 1e-10 * max(1.0, abs(hi[name]))

    def test_vector_matches_scalar(self):
        xs = np.array([0.0, 1e-4, 0.5, 2.0, 30.0])
        vec = sphere_kernels(xs)
        for i, x in enumerate(xs):
            sc = sphere_kernels(float(x))
            for name, arr in vec.items():
                if math.isinf(sc[name]):
                    assert math.isinf(arr[i])
                else:
                    assert arr[i] == sc[name]


class TestBrackets:
    @pytest.mark.parametrize("fn,limit", BRACKETS)
    def test_zero_limit(self, fn, limit):
        assert fn(0.0) == pytest.approx(limit, rel=1e-14)

    @pytest.mark.parametrize("fn,_", BRACKETS)
    def test_continuity_at_switchover(self, fn, _):
        lo = fn(np.nextafter(BRACKET_SERIES_CUTOFF, 0.0))
        hi = fn(BRACKET_SERIES_CUTOFF)
        assert abs(lo - hi) <= 1e-10 * max(1.0, abs(hi))

    @pytest.mark.parametrize("x", [0.05, 0.3, 0.499, 0.52, 1.7, 6.0])
    def test_mean_brackets_against_quadrature(self, x):
        # independent oracle: the defining polar-angle integrals
        from scipy.integrate import simpson

        u = np.linspace(-1.0, 1.0, 8001)
        trans = 0.25 * simpson((1 + u**2) * np.cos(x * u), x=u)
        lon = 0.25 * simpson((1 - u**2) * np.cos(x * u), x=u)
        assert transverse_mean_bracket(x) == pytest.approx(trans, rel=1e-10)
        assert longitudinal_mean_bracket(x) == pytest.approx(lon, rel=1e-10)

    @pytest.mark.parametrize("kr", [0.05, 0.2, 0.3, 2.0, 7.0])
    def test_square_brackets_against_quadrature(self, kr):
        # the four second-moment brackets, as polar-angle integrals of
        # squared kernels (evaluated at argument y = 2 kr)
        from scipy.integrate import simpson

        u = np.linspace(-1.0, 1.0, 8001)
        c2 = np.cos(kr * u) ** 2
        y = 2 * kr
        assert transverse_square_bracket(y) == pytest.approx(
            simpson((1 + u**2) * c2, x=u), rel=1e-10)
        assert longitudinal_square_bracket(y) == pytest.approx(
            simpson((1 - u**2) ** 2 * c2, x=u), rel=1e-10)
        assert cross_transverse_square_bracket(y) == pytest.approx(
            simpson((3 + 2 * u**2 + 3 * u**4) * c2, x=u), rel=1e-10)
        assert cross_longitudinal_square_bracket(y) == pytest.approx(
            0.25 * simpson((1 - u**2) * (1 + 3 * u**2) * c2, x=u), rel=1e-10)


class TestLogDet:
    def test_identity(self):
        assert hermitian_logdet2(np.eye(4)) == 0.0

    def test_diag(self):
        assert hermitian_logdet2(np.diag([2.0, 2.0])) == pytest.approx(2.0, abs=1e-12)

    def test_gram_matrix_against_cholesky_pivots(self):
        rng = np.random.default_rng(42)
        A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        M = A.conj().T @ A + np.eye(8)
        # independent oracle: product of Cholesky pivots
        L = np.linalg.cholesky(M)
        expected = 2.0 * np.sum(np.log2(np.real(np.diag(L))))
        assert hermitian_logdet2(M) == pytest.approx(expected, rel=1e-9)

    def test_gram_factor_identity(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(6, 6))
        M = A @ A.T + 2 * np.eye(6)
        w, U = np.linalg.eigh(M)
        root = (U * np.sqrt(w)) @ U.T
        assert hermitian_logdet2(M) == pytest.approx(
            2 * hermitian_logdet2(root), rel=1e-8)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ContractViolation):
            hermitian_logdet2(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_non_positive_rejected(self):
        with pytest.raises(DomainError):
            hermitian_logdet2(np.diag([1.0, -2.0]))

    def test_non_square_rejected(self):
        with pytest.raises(ContractViolation):
            hermitian_logdet2(np.ones((2, 3)))


class TestBesselJ0:
    @staticmethod
    def quadrature_oracle(x: float, n: int = 20001) -> float:
        # defining integral (1/pi) \int_0^pi cos(x sin t) dt by Simpson rule
        t = np.linspace(0.0, math.pi, n)
        y = np.cos(x * np.sin(t))
        h = t[1] - t[0]
        s = y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum()
        return float(s * h / 3.0 / math.pi)

    def test_at_zero(self):
        assert bessel_j0(0.0) == 1.0

    def test_first_zero(self):
        assert abs(bessel_j0(2.404826)) < 1e-6

    def test_against_quadrature(self):
        for x in (0.5, 2.0, 5.0, 17.3):
            assert bessel_j0(x) == pytest.approx(self.quadrature_oracle(x), abs=1e-10)


class TestRandomStream:
    def test_bitwise_reproducible(self):
        a = RandomStream(987, 3)
        b = RandomStream(987, 3)
        assert np.array_equal(a.uniform(10_000), b.uniform(10_000))
        assert np.array_equal(a.normal(10_000), b.normal(10_000))

    def test_distinct_streams_differ(self):
        a = RandomStream(987, 3).uniform(1000)
        b = RandomStream(987, 4).uniform(1000)
        assert not np.array_equal(a, b)

    def test_cross_correlation_smoke(self):
        n = 20_000
        a = RandomStream(1, 0).normal(n)
        b = RandomStream(1, 1).normal(n)
        rho = float(np.corrcoef(a, b)[0, 1])
        assert abs(rho) < 4 / math.sqrt(n)

    def test_normal_moments(self):
        z = RandomStream(5, 0).normal(200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_signs(self):
        s = RandomStream(2, 0).signs(1000)
        assert set(np.unique(s)) == {-1.0, 1.0}

    def test_substream(self):
        s = RandomStream(10, 5)
        assert s.substream(3).stream_id == 8

    def test_odd_normal_size(self):
        z = RandomStream(1, 0).normal(7)
        assert z.shape == (7,)

    def test_shape_tuple(self):
        z = RandomStream(1, 0).normal((3, 4))
        assert z.shape == (3, 4)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-12.0, max_value=8.0))
def test_bracket_positivity_where_required(log_x):
    # second-moment brackets are integrals of squares, hence nonnegative
    x = 10.0**log_x
    assert transverse_square_bracket(x) > 0
    assert longitudinal_square_bracket(x) > 0
    assert cross_transverse_square_bracket(x) > 0
    assert cross_longitudinal_square_bracket(x) > 0
