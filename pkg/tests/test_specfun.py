import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from convexft.specfun import BesselOrder, bessel_j, bessel_jinc, seam, sinc

# J_nu(x) at 30 significant digits from an arbitrary-precision library, frozen.
REFERENCE = [
    (0.0, 0.5, 0.93846980724081290423),
    (0.5, 7.25, 0.24390099437078511569),
    (1.0, 1.0, 0.44005058574493351596),
    (1.0, 12.0, -0.22344710449062761237),
    (1.5, 12.5, -0.22637633819446598575),
    (2.0, 100.0, -0.021528757344505365585),
    (2.5, 1000.0, -0.020905772723406794331),
    (3.0, 12.0001, 0.1951235671991494234),
    (5.0, 3000.0, 0.012275714883338999545),
    (0.0, 9999.0, -0.00076458748603919629508),
    (6.5, 40.0, -0.039311739716008468126),
]
J1_FIRST_ZERO = 3.8317059702075123156


@pytest.mark.parametrize("nu,x,expected", REFERENCE)
def test_bessel_against_frozen_values(nu, x, expected):
    assert abs(bessel_j(nu, x) - expected) <= 1e-10


def test_bessel_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(BesselOrder(3), 0.0) == 0.0


def test_first_zero_of_j1():
    assert abs(bessel_j(1, J1_FIRST_ZERO)) <= 1e-8


def test_rejects_negative_argument():
    with pytest.raises(ValueError):
        bessel_j(1, -0.1)
    with pytest.raises(ValueError):
        bessel_j(0, np.array([1.0, -2.0]))


def test_order_validation():
    assert BesselOrder.of(1.5).nu2 == 3
    with pytest.raises(ValueError):
        BesselOrder(-1)
    with pytest.raises(ValueError):
        BesselOrder.of(0.3)


def test_seam_location():
    assert seam(0) == 12.0
    assert seam(BesselOrder(20)) == 20.0


@pytest.mark.parametrize("nu2", range(0, 14))
def test_dense_grid_against_scipy(nu2):
    x = np.concatenate([np.linspace(0, 30, 3001), np.geomspace(30, 1e4, 3000)])
    err = np.abs(bessel_j(nu2 / 2, x) - special.jv(nu2 / 2, x))
    assert err.max() <= 1e-10


@pytest.mark.parametrize("nu2", range(0, 10))
def test_branches_agree_at_seam(nu2):
    nu = nu2 / 2
    x0 = seam(nu)
    below, above = bessel_j(nu, x0 - 1e-9), bessel_j(nu, x0 + 1e-9)
    assert abs(below - above) <= 1e-9


def test_vector_and_scalar_forms_agree():
    x = np.array([0.3, 5.0, 40.0, 900.0])
    vec = bessel_j(2.5, x)
    assert vec.shape == x.shape
    assert np.allclose(vec, [bessel_j(2.5, v) for v in x], rtol=0, atol=0)
    assert isinstance(bessel_j(2.5, 3.0), float)


@pytest.mark.parametrize("nu2", [2, 3, 4, 6])
def test_jinc_normalisation(nu2):
    nu = nu2 / 2
    x = np.array([1e-8, 0.5, 3.0, 30.0, 400.0])
    expected = math.gamma(nu + 1) * (2 / x) ** nu * special.jv(nu, x)
    assert np.allclose(bessel_jinc(nu, x), expected, rtol=1e-9, atol=1e-13)
    assert bessel_jinc(nu, 0.0) == 1.0


@given(st.integers(2, 10), st.floats(0.5, 512.0))
@settings(max_examples=200, deadline=None)
def test_recurrence(nu2, x):
    nu = nu2 / 2
    a, b, c = bessel_j(nu - 1, x), bessel_j(nu + 1, x), 2 * nu / x * bessel_j(nu, x)
    assert abs(a + b - c) <= 1e-8 * max(abs(a), abs(b), abs(c), 1e-300)


@given(st.integers(0, 12), st.floats(0.0, 1e4))
@settings(max_examples=300, deadline=None)
def test_bounded_by_one(nu2, x):
    assert abs(bessel_j(nu2 / 2, x)) <= 1.0


@given(st.integers(2, 10), st.floats(0.5, 200.0))
@settings(max_examples=100, deadline=None)
def test_derivative_identity(nu2, x):
    nu = nu2 / 2
    h = 1e-5

    def f(t):
        return t**nu * bessel_j(nu, t)

    fd = (f(x + h) - f(x - h)) / (2 * h)
    assert abs(fd - x**nu * bessel_j(nu - 1, x)) <= 1e-6 * max(1.0, x**nu)


def test_sinc_values():
    assert sinc(0.0) == 1.0
    assert abs(sinc(math.pi)) <= 1e-15
    assert abs(sinc(1.0) - 0.8414709848078965) <= 1e-15
    x = np.array([-5e-5, 0.0, 5e-5])
    assert np.allclose(sinc(x), 1 - x**2 / 6 + x**4 / 120, rtol=0, atol=1e-18)


@given(st.floats(-1e3, 1e3))
def test_sinc_is_even_and_bounded(x):
    assert sinc(x) == sinc(-x)
    assert abs(sinc(x)) <= 1.0


@pytest.mark.parametrize("nu2", [0, 1, 2, 3])
def test_envelope_decays_like_inverse_sqrt(nu2):
    xs = np.geomspace(32, 4096, 64)
    peaks = [np.abs(bessel_j(nu2 / 2, np.linspace(x, 2 * x, 4000))).max() for x in xs]
    slope = np.polyfit(np.log(xs), np.log(peaks), 1)[0]
    assert abs(slope + 0.5) <= 0.05
