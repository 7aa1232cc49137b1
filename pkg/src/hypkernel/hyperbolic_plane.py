"""Kernels on the hyperbolic plane H^2 (boundary dimension n = 1).

There is no finite closed form here.  Everything is built from the radial
integral

    R(lam)(r) = C * int_r^inf exp(-i lam w) (cosh w - cosh r)^(-1/2) dw,

with the substitution ``w = r + u**2`` near the lower endpoint to remove the
inverse square-root singularity.  Writing ``w = r + v`` and pulling out
``exp(-r/2)``, the weight

    W(v) = exp(r/2) / sqrt(cosh(r + v) - cosh r)
         = exp(-v/4) / sqrt(-expm1(-2r - v) * sinh(v/2))

is bounded by ``sqrt(2) exp(-v/2)`` for large ``v`` and overflows nowhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .contour_quadrature import (DEFAULT_QUAD, QuadratureConfig, QuadratureError,
                                 gauss_weighted_integrate, graded_edges,
                                 integrate_log_half_line, panel_rule)

LOG_2SQRT2 = 1.5 * math.log(2.0)
EXACT_PLANE_CONSTANT = 1.0 / (2.0 * math.sqrt(2.0) * math.pi)


def _log_x_over_sinh(x):
    """log(x / sinh x) for x > 0."""
    return np.log(2.0 * x) - x - np.log(-np.expm1(-2.0 * x))


def log_weight_u(u, r):
    """log of ``2u W(u^2)``, the radial weight after ``v = u^2``."""
    x = 0.5 * u * u
    return (LOG_2SQRT2 - 0.5 * x + 0.5 * _log_x_over_sinh(x)
            - 0.5 * np.log(-np.expm1(-2.0 * r - u * u)))


def log_weight_v(v, r):
    return -0.25 * v - 0.5 * np.log(-np.expm1(-2.0 * r - v)) - 0.5 * np.log(np.sinh(0.5 * v))


def radial_rule(r: float, decay: float = 0.0, freq: float = 0.0, tol_log: float = 42.0,
                max_nodes: int = DEFAULT_QUAD.inner_max_nodes, order: int = 24):
    """Nodes ``v`` and weights for ``int_0^inf f(v) W(v) dv``.

    Args:
        r: radial distance, ``r >= 0``.
        decay: extra exponential decay rate of ``f`` (``Im lam`` magnitude).
        freq: largest oscillation frequency of ``f`` in ``v``.
        tol_log: truncate where the envelope drops below ``exp(-tol_log)``.
        max_nodes: refuse rules larger than this.

    Returns:
        ``(v, weights)`` arrays.
    """
    V = tol_log / (decay + 0.5)
    u_top = min(1.0, math.sqrt(V))
    first = 0.5 * min(math.sqrt(r), 1.0) if r > 0 else 0.5
    span_u = 2.0 / freq if freq > 0 else math.inf
    ue = graded_edges(first, u_top, max_len=span_u)
    u, wu = panel_rule(ue, order)
    v = u * u
    wts = wu * np.exp(log_weight_u(u, r))
    if V > 1.0:
        span_v = min(1.0, 4.0 / freq) if freq > 0 else 1.0
        ve = np.linspace(1.0, V, max(1, math.ceil((V - 1.0) / span_v)) + 1)
        vb, wb = panel_rule(ve, order)
        v = np.concatenate([v, vb])
        wts = np.concatenate([wts, wb * np.exp(log_weight_v(vb, r))])
    if v.size > max_nodes:
        raise QuadratureError(f"radial rule needs {v.size} nodes > {max_nodes}", math.nan)
    return v, wts


@dataclass(frozen=True)
class PlaneCalibration:
    """Normalizing constant of the two-dimensional resolvent.

    Attributes:
        constant: ``C``, chosen so the kernel at ``lam = -i`` has the
            logarithmic singularity ``-(1/2pi) log r``.
        log_coefficient: fitted coefficient of ``-log r`` in the raw integral.
        residual: max abs residual of the least-squares fit.
    """

    constant: float
    log_coefficient: float
    residual: float


def raw_plane_integral(lam, r: float):
    """``int_r^inf exp(-i lam w) (cosh w - cosh r)^(-1/2) dw`` for ``Im lam <= 0``."""
    lam = complex(lam)
    v, w = radial_rule(r, decay=-lam.imag, freq=abs(lam.real))
    return np.exp(-1j * lam * r - 0.5 * r) * np.sum(w * np.exp(-1j * lam * v))


@lru_cache(maxsize=None)
def plane_calibration(r_lo: float = 1e-4, r_hi: float = 1e-2, points: int = 41) -> PlaneCalibration:
    """Fit the ``lam = -i`` integral to ``A(-log r) + B + r^2 (D(-log r) + E)``."""
    r = np.geomspace(r_lo, r_hi, points)
    y = np.array([raw_plane_integral(-1j, ri).real for ri in r])
    L = -np.log(r)
    X = np.column_stack([L, np.ones_like(r), r * r * L, r * r])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.max(np.abs(X @ coef - y)))
    A = float(coef[0])
    return PlaneCalibration(1.0 / (2.0 * math.pi * A), A, resid)


def plane_constant() -> float:
    return plane_calibration().constant


def plane_resolvent(lam, r: float) -> complex:
    """Resolvent kernel of ``Delta - 1/4 - lam^2`` on H^2 at distance ``r``."""
    if r < 1e-8:
        raise ValueError("resolvent is singular on the diagonal; need r >= 1e-8")
    if complex(lam).imag > 0:
        raise ValueError("need Im lam <= 0")
    return complex(plane_constant() * raw_plane_integral(lam, r))


def plane_spectral_measure(lam, r: float):
    """Spectral density ``(2 lam C / pi) int_r^inf sin(lam w) (cosh w - cosh r)^(-1/2) dw``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    v, w = radial_rule(r, freq=float(np.max(lam)))
    out = np.empty(lam.shape)
    for i in range(0, lam.size, 256):
        blk = lam[i:i + 256]
        out[i:i + 256] = np.sin(np.outer(blk, r + v)) @ w
    out *= 2.0 * lam * plane_constant() / math.pi * math.exp(-0.5 * r)
    return out


def _log_mckean_integrand(u, r, t):
    s = r + u * u
    return (np.log(s) - (2.0 * r * u * u + u ** 4) / (4.0 * t) + log_weight_u(u, r))


def plane_log_heat(r: float, t: float, return_error: bool = False):
    """log of the H^2 heat kernel from the radial integral with the Gaussian transform done exactly.

    ``H = exp(-t/4) C / (2 sqrt(pi) t^(3/2)) int_r^inf w exp(-w^2/4t) (cosh w - cosh r)^(-1/2) dw``.
    """
    if r < 0 or t <= 0:
        raise ValueError("need r >= 0 and t > 0")
    b = r / (2.0 * t) + 0.5
    y = 2.0 * t * (-b + math.sqrt(b * b + 80.0 / t))
    U = math.sqrt(y) * 1.05
    scales = [1.0, (4.0 * t) ** 0.25]
    if r > 0:
        scales += [math.sqrt(r), math.sqrt(2.0 * t / r)]
    sigma = 0.5 * min(scales)
    logI, err = integrate_log_half_line(lambda u: _log_mckean_integrand(u, r, t), sigma, U,
                                        max_len=2.0)
    out = (logI - t / 4.0 - r * r / (4.0 * t) - 0.5 * r
           + math.log(plane_constant() / (2.0 * math.sqrt(math.pi))) - 1.5 * math.log(t))
    return (out, err) if return_error else out


def plane_heat_via_spectral_measure(r: float, t: float, max_cond: float = 1e5):
    """H^2 heat kernel ``exp(-t/4) int_0^inf exp(-t lam^2) dE(lam)(r) dlam``.

    The lam integral is done by quadrature.  Where it would cancel by more
    than ``max_cond`` (large ``r^2/4t``), the Gaussian sine transform in lam
    is taken exactly instead, which leaves the radial integral of
    :func:`plane_log_heat`.

    Returns:
        ``(log_value, rel_error, used_quadrature)``.
    """
    if r < 0 or t <= 0:
        raise ValueError("need r >= 0 and t > 0")
    lam_max = math.sqrt(45.0 / t)
    edges = np.linspace(0.0, lam_max, max(2, math.ceil(lam_max * (1.0 + r))) + 1)
    ests = []
    for order in (16, 24):
        lam, wl = panel_rule(edges, order)
        dE = plane_spectral_measure(lam, r)
        g = wl * np.exp(-t * lam * lam)
        ests.append((float(g @ dE), float(g @ np.abs(dE))))
    (v0, _), (v1, mag) = ests
    cond = mag / abs(v1) if v1 != 0 else math.inf
    if v1 > 0 and cond <= max_cond:
        return math.log(v1) - t / 4.0, abs(v1 - v0) / v1 + cond * 1e-15, True
    logH, err = plane_log_heat(r, t, return_error=True)
    return logH, err, False


def nested_contour_bracket(r: float, t: float, quad: QuadratureConfig = DEFAULT_QUAD):
    """``(i/pi) int exp(-t w^2) lam R_od(lam) dw`` on ``lam = w - i r/2t`` with numeric ``R_od``.

    ``R_od(lam) = exp(i lam r) R(lam) = C exp(-r/2) int exp(-i lam v) W(v) dv``
    is itself a quadrature, so the double integral is a matrix product of
    plane waves between contour nodes and radial nodes.
    """
    a = r / (2.0 * t)
    L = quad.half_width_sigmas / math.sqrt(t)
    v, wv = radial_rule(r, decay=a, freq=L, max_nodes=quad.inner_max_nodes)
    damped = wv * np.exp(-a * v)
    C = plane_constant() * math.exp(-0.5 * r)

    def f(w):
        out = np.empty(w.shape, dtype=complex)
        for i in range(0, w.size, 256):
            blk = w[i:i + 256]
            out[i:i + 256] = (blk - 1j * a) * (np.exp(-1j * np.outer(blk, v)) @ damped)
        return C * out

    val, err = gauss_weighted_integrate(f, t, quad, h0=0.5 / math.sqrt(t))
    return (1j / math.pi * val).real, abs(err) / math.pi
