import math

import numpy as np
import pytest

from conftest import h3_exact
from hypkernel.contour_quadrature import (DEFAULT_QUAD, QuadratureConfig, QuadratureError,
                                          fexp_leading, fexp_second_order,
                                          gauss_weighted_integrate, gaussian_constant,
                                          graded_edges, integrate_log_half_line, panel_rule,
                                          shifted_contour_heat)
from hypkernel.kernel_algebra import heat_closed_form
from hypkernel.model_kernels import heat_kernel


@pytest.mark.parametrize("t", [0.01, 1.0, 100.0])
def test_gaussian_integral(t):
    val, err = gauss_weighted_integrate(lambda w: np.ones_like(w), t)
    assert val == pytest.approx(math.sqrt(math.pi / t), rel=1e-12)
    assert err <= 1e-9 * val


def test_gaussian_cosine_transform():
    val, _ = gauss_weighted_integrate(np.cos, 1.0)
    assert val == pytest.approx(math.sqrt(math.pi) * math.exp(-0.25), rel=1e-12)


def test_complex_integrand():
    val, _ = gauss_weighted_integrate(lambda w: np.exp(1j * w), 1.0)
    assert val.real == pytest.approx(math.sqrt(math.pi) * math.exp(-0.25), rel=1e-12)
    assert abs(val.imag) < 1e-14


def test_exhausted_node_budget_raises():
    quad = QuadratureConfig(max_nodes=16, rel_tol=1e-14)
    with pytest.raises(QuadratureError):
        gauss_weighted_integrate(lambda w: np.cos(40 * w), 1.0, quad)


@pytest.mark.parametrize("kwargs", [dict(rel_tol=0.0), dict(rel_tol=2.0), dict(max_nodes=4),
                                    dict(half_width_sigmas=-1.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        QuadratureConfig(**kwargs)


def test_panel_rule_integrates_polynomials():
    x, w = panel_rule(np.array([0.0, 0.5, 2.0]), order=8)
    assert np.sum(w * x ** 7) == pytest.approx(2.0 ** 8 / 8, rel=1e-13)


def test_graded_edges_are_increasing():
    e = graded_edges(1e-3, 50.0, max_len=2.0)
    assert e[0] == 0.0 and e[-1] == pytest.approx(50.0)
    assert np.all(np.diff(e) > 0) and np.max(np.diff(e)) <= 2.0 + 1e-12


def test_half_line_in_log_domain():
    # int_0^inf x^2 e^{-x} = 2, with an extra e^{-800} that would underflow
    log_v, err = integrate_log_half_line(lambda x: 2 * np.log(np.maximum(x, 1e-300)) - x - 800.0,
                                         0.5, 80.0)
    assert log_v == pytest.approx(math.log(2.0) - 800.0, abs=1e-12)
    assert err < 1e-10


def test_gaussian_constant_is_sqrt_pi():
    assert gaussian_constant() == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_fexp_constant_function():
    res = fexp_leading(lambda w: np.ones_like(w), 1.0)
    assert res.leading == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert res.error_bound == 0.0
    assert res.constant_mismatch


def test_fexp_cosine_bound_holds():
    for t in (1.0, 4.0, 16.0):
        res = fexp_leading(np.cos, t, k=0, d2u=lambda w: -np.cos(w))
        assert abs(res.value - res.leading) <= res.error_bound


def test_fexp_error_constant():
    res = fexp_leading(lambda w: w * w, 2.0, k=1, d2u=lambda w: 2 + 0 * w)
    assert res.error_constant == pytest.approx(0.5 * (math.gamma(1.5) + math.gamma(2.5)), rel=1e-12)
    assert abs(res.value - res.leading) <= res.error_bound


def test_fexp_rejects_wrong_growth():
    with pytest.raises(ValueError):
        fexp_leading(lambda w: w ** 4, 1.0, k=0, d2u=lambda w: 12 * w * w)


def test_fexp_second_order_requires_zero_at_origin():
    with pytest.raises(ValueError):
        fexp_second_order(np.cos, 1.0)
    res = fexp_second_order(lambda w: 1 - np.cos(w), 10.0, d2u=np.cos, d4u=lambda w: -np.cos(w))
    assert abs(res.value - res.leading) <= res.error_bound


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_fexp_rejects_nonpositive_time(t):
    with pytest.raises(ValueError):
        fexp_leading(np.cos, t)


@pytest.mark.parametrize("r,t", [(0.01, 0.01), (1.0, 1.0), (10.0, 0.1), (30.0, 50.0)])
def test_contour_reproduces_h3(r, t):
    lv = shifted_contour_heat(2, r, t)
    assert float(lv.log_magnitude) == pytest.approx(math.log(h3_exact(r, t)), abs=1e-9)


@pytest.mark.parametrize("n", [4, 6])
def test_contour_matches_closed_form(n):
    for r, t in [(0.5, 0.2), (3.0, 2.0), (20.0, 10.0)]:
        lv, err = shifted_contour_heat(n, r, t, return_error=True)
        ref = heat_closed_form(n).log_evaluate(r, t)
        assert float(lv.log_magnitude) == pytest.approx(float(ref.log_magnitude), abs=1e-8)


def test_contour_two_dimensional_case():
    lv = shifted_contour_heat(1, 2.0, 1.0)
    assert float(lv.log_magnitude) == pytest.approx(float(heat_kernel(1, 2.0, 1.0).log_magnitude),
                                                    abs=1e-7)


def test_contour_rejects_diagonal_and_unsupported():
    with pytest.raises(ValueError):
        shifted_contour_heat(2, 0.0, 1.0)
    with pytest.raises(ValueError):
        shifted_contour_heat(3, 1.0, 1.0)


def test_contour_is_deterministic():
    a = shifted_contour_heat(4, 2.5, 0.7)
    b = shifted_contour_heat(4, 2.5, 0.7)
    assert a.log_magnitude == b.log_magnitude and a.sign == b.sign
