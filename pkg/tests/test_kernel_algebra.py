import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import h3_exact
from hypkernel.kernel_algebra import (I, ONE, AlgebraError, QComplex, descend, differentiate_heat,
                                      gaussian_moment, heat_closed_form, plane_wave_seed,
                                      resolvent_odd_dim)
from hypkernel.acceptance import h5_reference


def test_single_descent_of_plane_wave():
    out = descend(plane_wave_seed())
    assert out.dim == 2 and out.pi_power == -1
    (term,) = out.terms
    assert (term.lam_pow, term.cosh_pow, term.sinh_pow) == (1, 0, 1)
    assert term.coeff == I * Fraction(1, 2)


def test_three_dimensional_resolvent_is_green_function():
    expr = resolvent_odd_dim(2)
    assert expr.sign_flipped
    for lam in (-1j, 0.3 - 0.1j, 2.0):
        for r in (0.1, 1.0, 5.0):
            want = np.exp(-1j * lam * r) / (4 * math.pi * math.sinh(r))
            assert expr.evaluate(lam, r) == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10])
def test_descent_degrees(n):
    k = n // 2
    expr = resolvent_odd_dim(n)
    assert expr.max_sinh_pow == 2 * k - 1
    assert expr.max_lam_pow == k - 1
    assert expr.evaluate(-1j, 1.0).real > 0


@pytest.mark.parametrize("n", [0, 3, -2, 18])
def test_resolvent_rejects_bad_dims(n):
    with pytest.raises(ValueError):
        resolvent_odd_dim(n)


def test_h3_closed_form_coefficients():
    form = heat_closed_form(2)
    assert form.gap == 1 and form.pi_power == Fraction(-3, 2)
    (m,) = form.terms
    assert (m.coeff, m.r_pow, m.t_half_pow, m.cosh_pow, m.sinh_pow) == (Fraction(1, 8), 1, 3, 0, 1)


def test_h5_closed_form_coefficients():
    form = heat_closed_form(4)
    assert form.gap == 4 and form.pi_power == Fraction(-5, 2)
    got = {(m.r_pow, m.t_half_pow, m.cosh_pow, m.sinh_pow): m.coeff for m in form.terms}
    assert got == {(0, 3, 0, 2): Fraction(-1, 16), (1, 3, 1, 3): Fraction(1, 16),
                   (2, 5, 0, 2): Fraction(1, 32)}


@pytest.mark.parametrize("r,t", [(0.01, 0.05), (1.0, 1.0), (7.5, 0.3), (30.0, 50.0)])
def test_closed_form_values(r, t):
    assert heat_closed_form(2).evaluate(r, t) == pytest.approx(h3_exact(r, t), rel=1e-13)
    assert heat_closed_form(4).evaluate(r, t) == pytest.approx(h5_reference(r, t), rel=1e-12)


def test_closed_form_at_origin_is_finite():
    assert heat_closed_form(2).evaluate(0.0, 1.0) == pytest.approx(h3_exact(0.0, 1.0), rel=1e-12)
    assert math.isfinite(heat_closed_form(6).evaluate(0.0, 1.0))


def test_gaussian_moments():
    assert gaussian_moment(0, 1.0) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gaussian_moment(2, 2.0) == pytest.approx(math.sqrt(math.pi / 2) / 4, rel=1e-15)
    assert gaussian_moment(3, 1.0) == 0.0


def test_zero_expression_differentiates_to_zero():
    zero = differentiate_heat(heat_closed_form(2), "radius")
    zero = zero.__class__(zero.dim, zero.gap, zero.pi_power, ())
    assert zero.is_zero()
    assert differentiate_heat(zero, "time").is_zero()


def test_differentiate_rejects_unknown_variable():
    with pytest.raises(ValueError):
        differentiate_heat(heat_closed_form(2), "space")


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("variable", ["time", "radius"])
def test_exact_derivative_matches_finite_difference(n, variable):
    form = heat_closed_form(n)
    deriv = differentiate_heat(form, variable)
    r, t, h = 1.7, 0.8, 1e-4
    if variable == "time":
        fd = (form.mp_evaluate(r, t + h) - form.mp_evaluate(r, t - h)) / (2 * h)
    else:
        fd = (form.mp_evaluate(r + h, t) - form.mp_evaluate(r - h, t)) / (2 * h)
    assert deriv.evaluate(r, t) == pytest.approx(float(fd), rel=1e-7)


def test_qcomplex_arithmetic():
    z = QComplex(Fraction(1, 2), Fraction(3))
    assert complex(z * I) == pytest.approx(complex(0.5, 3) * 1j)
    assert complex(z + (-z)) == 0 and not (z + (-z))
    assert complex(ONE * z) == complex(z)


def test_algebra_error_is_arithmetic_error():
    assert issubclass(AlgebraError, ArithmeticError)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(1e-2, 20.0), t=st.floats(5e-2, 20.0))
def test_h3_matches_exact_everywhere(r, t):
    assert heat_closed_form(2).evaluate(r, t) == pytest.approx(h3_exact(r, t), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.05, 10.0), t=st.floats(0.1, 5.0))
def test_log_evaluation_agrees_with_high_precision(r, t):
    form = heat_closed_form(6)
    lv = form.log_evaluate(r, t)
    ref = form.mp_evaluate(r, t, dps=80)
    assert lv.sign == 1
    assert float(lv.log_magnitude) == pytest.approx(float(np.log(float(ref))), abs=1e-11)
