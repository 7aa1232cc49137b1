import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import h2_mckean, h3_exact
from hypkernel.model_kernels import (EvalPoint, dm_quantity, euclidean_heat_kernel, heat_kernel,
                                     heat_kernel_via_spectral_measure, log_sphere_volume,
                                     resolvent_kernel, spectral_measure_kernel, total_mass,
                                     volume_density)


def test_dm_example():
    assert dm_quantity(2, 1.0, 1.0).value == pytest.approx(2 * math.exp(-9 / 4), rel=1e-14)


def test_dm_vectorized_and_log_only_in_tails():
    lv = dm_quantity(4, np.array([1.0, 500.0]), np.array([1.0, 0.01]))
    assert lv.log_magnitude.shape == (2,)
    assert lv.log_magnitude[1] < -1e6 and np.isfinite(lv.log_magnitude[1])


def test_euclidean_kernel():
    assert euclidean_heat_kernel(3, 0.0, 1.0).value == pytest.approx((4 * math.pi) ** -1.5)
    assert euclidean_heat_kernel(1, 2.0, 1.0).value == pytest.approx(
        math.exp(-1) / math.sqrt(4 * math.pi), rel=1e-14)


def test_sphere_volume():
    assert math.exp(log_sphere_volume(1)) == pytest.approx(2 * math.pi)
    assert math.exp(log_sphere_volume(2)) == pytest.approx(4 * math.pi)
    assert volume_density(2, 1.0) == pytest.approx(4 * math.pi * math.sinh(1.0) ** 2)


@pytest.mark.parametrize("r,t", [(0.0, 1.0), (0.0, 0.1), (1e-3, 1e-3), (5.0, 0.5), (40.0, 10.0)])
def test_h3_kernel(r, t):
    assert heat_kernel(2, r, t).value == pytest.approx(h3_exact(r, t), rel=1e-12)


@pytest.mark.parametrize("r,t", [(0.0, 1.0), (0.5, 0.1), (3.0, 2.0), (10.0, 5.0), (0.2, 20.0)])
def test_h2_kernel_against_integral_oracle(r, t):
    assert heat_kernel(1, r, t).value == pytest.approx(h2_mckean(r, t), rel=1e-9)


def test_h4_from_h2_descent():
    # H^4 by descent from H^2, checked on the mass and positivity
    mass, err = total_mass(3, 1.0)
    assert mass == pytest.approx(1.0, abs=1e-4)
    assert heat_kernel(3, 1.0, 1.0).reduced_accuracy is False
    assert heat_kernel(5, 1.0, 1.0).reduced_accuracy is True


@pytest.mark.parametrize("point", [(-1.0, 1.0), (1.0, 0.0), (math.nan, 1.0), (1.0, math.inf)])
def test_eval_point_validation(point):
    with pytest.raises(ValueError):
        EvalPoint(*point)


@pytest.mark.parametrize("n", [0, -1, 2.5])
def test_dimension_validation(n):
    with pytest.raises(ValueError):
        heat_kernel(n, 1.0, 1.0)


def test_resolvent_examples():
    val = resolvent_kernel(2, -1j, 1.0)
    assert val.value == pytest.approx(math.exp(-1) / (4 * math.pi * math.sinh(1)), rel=1e-14)
    with pytest.raises(ValueError):
        resolvent_kernel(2, 1j, 1.0)
    with pytest.raises(ValueError):
        resolvent_kernel(2, -1j, 0.0)
    with pytest.raises(ValueError):
        resolvent_kernel(3, -1j, 1.0)


def test_resolvent_log_magnitude_survives_large_distance():
    r = 400.0
    val = resolvent_kernel(2, -5j, r)
    want = -5 * r - (r - math.log(2)) - math.log(4 * math.pi)
    assert val.log_abs.log_magnitude == pytest.approx(want, abs=1e-10)
    assert np.isfinite(resolvent_kernel(4, -5j, r).log_abs.log_magnitude)


@pytest.mark.parametrize("lam", [0.7 - 0.2j, -1j, 2.0 - 0.5j])
@pytest.mark.parametrize("r", [0.5, 1.3, 4.0])
def test_two_dimensional_resolvent_is_legendre_q(lam, r):
    want = complex(mp.legenq(-0.5 + 1j * lam, 0, mp.cosh(r), type=3) / (2 * mp.pi))
    assert resolvent_kernel(1, lam, r).value == pytest.approx(want, rel=1e-9)


@pytest.mark.parametrize("lam", [0.1, 0.7, 3.0])
@pytest.mark.parametrize("r", [0.0, 1.3, 6.0])
def test_two_dimensional_spectral_measure_is_conical(lam, r):
    want = float(lam * mp.tanh(mp.pi * lam) / (2 * mp.pi)
                 * mp.re(mp.legenp(-0.5 + 1j * lam, 0, mp.cosh(r), type=3)))
    assert spectral_measure_kernel(1, lam, r) == pytest.approx(want, rel=1e-8, abs=1e-14)


def test_three_dimensional_spectral_measure():
    lam = np.array([0.1, 0.7, 2.0, 9.0])
    r = 1.3
    want = lam * np.sin(lam * r) / (2 * math.pi ** 2 * math.sinh(r))
    np.testing.assert_allclose(spectral_measure_kernel(2, lam, r), want, rtol=1e-12)
    assert spectral_measure_kernel(2, 0.5, 0.0) == pytest.approx(0.25 / (2 * math.pi ** 2), rel=1e-12)


@pytest.mark.parametrize("n,r,t", [(2, 1.0, 1.0), (4, 0.5, 0.3), (6, 2.0, 2.0), (1, 1.5, 0.7)])
def test_two_evaluators_agree(n, r, t):
    a = float(heat_kernel(n, r, t).log_magnitude)
    b = float(heat_kernel_via_spectral_measure(n, r, t).log_magnitude)
    assert a == pytest.approx(b, abs=1e-7)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_euclidean_limit(n):
    r, t = 0.01, 1e-4
    ratio = heat_kernel(n, r, t).value / euclidean_heat_kernel(n + 1, r, t).value
    assert ratio == pytest.approx(1.0, abs=2e-3)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_mass_is_one(n):
    mass, err = total_mass(n, 1.0)
    assert mass == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n", [2, 4])
def test_decay_order_in_radius(n):
    # after the Gaussian and exponential factors, the kernel grows like r^{n/2}
    f = lambda r: float(heat_kernel(n, r, 1.0).log_magnitude) + r * r / 4 + n * r / 2
    slope = (f(40.5) - f(39.5)) / (math.log(40.5) - math.log(39.5))
    assert slope == pytest.approx(n / 2, abs=0.1)


def test_far_field_ratio_literal():
    r, t = 200.0, 1.0
    ratio = math.exp(
        float(heat_kernel(2, r, t).log_magnitude - dm_quantity(2, r, t).log_magnitude))
    want = 2 * r / ((1 + r) * (4 * math.pi) ** 1.5)
    assert ratio == pytest.approx(want, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.sampled_from([1, 2, 4]), r=st.floats(0.0, 20.0), dr=st.floats(0.05, 5.0),
       t=st.floats(0.05, 10.0))
def test_monotone_in_radius(n, r, dr, t):
    a = float(heat_kernel(n, r, t).log_magnitude)
    b = float(heat_kernel(n, r + dr, t).log_magnitude)
    assert b < a


def test_array_evaluation_matches_scalar():
    r = np.array([0.0, 0.5, 2.0])
    t = np.array([1.0, 0.3, 4.0])
    lv = heat_kernel(4, r, t)
    for i in range(3):
        assert lv.log_magnitude[i] == pytest.approx(float(heat_kernel(4, r[i], t[i]).log_magnitude),
                                                    abs=1e-13)
