import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import h3_exact
from hypkernel.bounds_verifier import GridSpec
from hypkernel.gradient_riesz import (GradientKind, conjugate_exponent, gradient_bound_scan,
                                      gradient_norm_bound, kunze_stein_q_range, li_yau_check,
                                      riesz_range, spatial_gradient_kernel,
                                      time_derivative_kernel)
from hypkernel.model_kernels import heat_kernel, log_sphere_volume

SMALL = GridSpec(1e-2, 30.0, 1e-2, 50.0, 15, 15)


@pytest.mark.parametrize("r,t", [(0.5, 0.3), (2.0, 1.0), (8.0, 4.0)])
def test_h3_derivatives_against_finite_differences(r, t):
    h = 1e-5
    dt = (h3_exact(r, t + h) - h3_exact(r, t - h)) / (2 * h)
    dr = (h3_exact(r + h, t) - h3_exact(r - h, t)) / (2 * h)
    assert time_derivative_kernel(2, r, t).value == pytest.approx(dt, rel=1e-6)
    assert spatial_gradient_kernel(2, r, t).value == pytest.approx(abs(dr), rel=1e-6)


def test_gradient_vanishes_at_origin():
    assert spatial_gradient_kernel(2, 0.0, 1.0).value == 0.0
    assert spatial_gradient_kernel(1, 0.0, 1.0).value == 0.0


def test_odd_dimension_derivatives_flag_reduced_accuracy():
    lv = time_derivative_kernel(1, 1.0, 1.0)
    assert lv.reduced_accuracy and lv.sign == -1


@pytest.mark.parametrize("n", [2, 4])
def test_time_derivative_has_zero_mass(n):
    # the heat flow conserves mass, so d/dt of the total mass is zero
    t = 0.7
    x, w = np.polynomial.legendre.leggauss(40)
    edges = np.linspace(0.0, 40.0, 161)
    r = (0.5 * (edges[1:] - edges[:-1])[:, None] * (x + 1) + edges[:-1, None]).ravel()
    wr = (0.5 * (edges[1:] - edges[:-1])[:, None] * w).ravel()
    lv = time_derivative_kernel(n, r, np.full(r.shape, t))
    dens = lv.sign * np.exp(lv.log_magnitude + log_sphere_volume(n) + n * np.log(np.sinh(r)))
    val, scale = float(wr @ dens), float(wr @ np.abs(dens))
    assert abs(val) < 1e-8 * scale


@pytest.mark.parametrize("n", [1, 2, 4])
def test_long_time_logarithmic_derivative(n):
    r, t = 1.0, 200.0
    d, h = time_derivative_kernel(n, r, t), heat_kernel(n, r, t)
    ratio = d.sign * math.exp(float(d.log_magnitude - h.log_magnitude))
    assert ratio == pytest.approx(-n * n / 4 - 1.5 / t, abs=2e-4)


@pytest.mark.parametrize("kind", list(GradientKind))
def test_gradient_scan_bounded(kind):
    rep = gradient_bound_scan(2, kind, SMALL)
    assert 0 < rep.minimal_constant < math.inf
    assert rep.to_dict()["kind"] is kind


def test_li_yau_constant_is_finite_and_stable():
    rep = li_yau_check(2, 1.5, SMALL)
    assert rep.finite and rep.refinement_change < 0.1
    assert rep.nodes_csv().startswith("# hypkernel csv v1")


def test_li_yau_rejects_alpha_at_most_one():
    with pytest.raises(ValueError):
        li_yau_check(2, 1.0, SMALL)


@pytest.mark.parametrize("n,lam,lo,hi", [
    (4, 1, Fraction(4, 3), Fraction(4)),
    (2, Fraction(1, 2), Fraction(4, 3), Fraction(4)),
    (3, 0.5, Fraction(3, 2), Fraction(3)),
    (4, 2, Fraction(1), math.inf),
])
def test_riesz_ranges(n, lam, lo, hi):
    rr = riesz_range(n, lam)
    assert rr.p_lo == lo and rr.p_hi == hi
    assert isinstance(rr.p_lo, Fraction)


@pytest.mark.parametrize("lam", [0, -1, 2.5])
def test_riesz_range_domain(lam):
    with pytest.raises(ValueError):
        riesz_range(4, lam)


def test_kunze_stein_range():
    r = kunze_stein_q_range(4)
    assert (r.q_lo, r.q_hi) == (1, Fraction(4, 3))
    assert kunze_stein_q_range(math.inf).q_hi == 1 and kunze_stein_q_range(math.inf).empty_interior
    with pytest.raises(ValueError):
        kunze_stein_q_range(2)


def test_conjugate_exponents():
    assert conjugate_exponent(4) == Fraction(4, 3)
    assert conjugate_exponent(Fraction(4, 3)) == 4
    assert conjugate_exponent(math.inf) == 1


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 12), num=st.integers(1, 50), den=st.integers(1, 50))
def test_riesz_range_is_self_dual(n, num, den):
    lam = Fraction(num, den)
    if lam > Fraction(n, 2):
        return
    rr = riesz_range(n, lam)
    if rr.p_hi == math.inf:
        assert rr.p_lo == 1
    else:
        assert 1 / rr.p_lo + 1 / rr.p_hi == 1
    assert rr.contains(2)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 8), a=st.integers(1, 40), b=st.integers(1, 40))
def test_riesz_range_monotone_in_lambda(n, a, b):
    la, lb = sorted((Fraction(a, 10), Fraction(b, 10)))
    if lb > Fraction(n, 2):
        return
    ra, rb = riesz_range(n, la), riesz_range(n, lb)
    assert rb.p_lo <= ra.p_lo and ra.p_hi <= rb.p_hi


@pytest.mark.parametrize("q", [1.2, 4 / 3])
def test_gradient_norm_rate(q):
    est = gradient_norm_bound(2, q)
    assert est.rate_ok
    assert est.rate == pytest.approx(4 * (q - 1) / q ** 2)


def test_gradient_norm_small_time_branch():
    est = gradient_norm_bound(2, 1.0)
    assert est.small_t_ok and est.rate_ok


def test_gradient_norm_input_checks():
    with pytest.raises(ValueError):
        gradient_norm_bound(2, 0.5)
    with pytest.raises(ValueError):
        gradient_norm_bound(2, 1.2, t_grid=np.geomspace(1.0, 10.0, 5))
