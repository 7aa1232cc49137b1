"""Heat kernels, resolvents and spectral measures on H^{n+1}.

All evaluators work in the log domain and return :class:`LogValue`.

Even n go through the exact closed forms of :mod:`hypkernel.kernel_algebra`.
n = 1 uses the radial integral of :mod:`hypkernel.hyperbolic_plane`.  Odd
n >= 3 apply the dimension-raising operator ``-(2 pi sinh r)^{-1} d/dr``
numerically to the n - 2 kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import mpmath
import numpy as np
from scipy.special import gammaln

from . import hyperbolic_plane as plane
from .contour_quadrature import DEFAULT_QUAD, QuadratureConfig, QuadratureError, panel_rule
from .kernel_algebra import heat_closed_form, resolvent_odd_dim
from .logdomain import LogValue, log_sinh


@dataclass(frozen=True)
class EvalPoint:
    """A point ``(r, t)``: geodesic distance and time."""

    r: float
    t: float

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise ValueError(f"r must be finite and >= 0, got {self.r}")
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ValueError(f"t must be finite and > 0, got {self.t}")


def _check_dim(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"dimension parameter n must be a positive integer, got {n!r}")


def _rt(r, t):
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    if np.any(~(r >= 0)) or np.any(~(t > 0)):
        raise ValueError("need r >= 0 and t > 0")
    return r, t


def log_sphere_volume(n: int) -> float:
    """log of the area of the unit sphere S^n in R^{n+1}."""
    return math.log(2.0) + 0.5 * (n + 1) * math.log(math.pi) - float(gammaln(0.5 * (n + 1)))


def volume_density(n: int, r):
    """``omega_n sinh^n r``: area of the geodesic sphere of radius r in H^{n+1}."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.exp(log_sphere_volume(n) + n * log_sinh(r))
    return out if np.ndim(out) else float(out)


def dm_quantity(n: int, r, t) -> LogValue:
    """``t^{-(n+1)/2} exp(-n^2 t/4 - r^2/4t - n r/2) (1+r+t)^{n/2-1} (1+r)``, in logs."""
    _check_dim(n)
    r, t = _rt(r, t)
    log = (-0.5 * (n + 1) * np.log(t) - n * n * t / 4.0 - r * r / (4.0 * t) - 0.5 * n * r
           + (0.5 * n - 1.0) * np.log1p(r + t) + np.log1p(r))
    return LogValue(log, np.ones(log.shape, dtype=int))._squeeze()


def euclidean_heat_kernel(d: int, r, t) -> LogValue:
    """``(4 pi t)^{-d/2} exp(-r^2/4t)`` on R^d."""
    r, t = _rt(r, t)
    log = -0.5 * d * np.log(4.0 * math.pi * t) - r * r / (4.0 * t)
    return LogValue(log, np.ones(log.shape, dtype=int))._squeeze()


# --- heat kernel --------------------------------------------------------------

def _fd_step(r):
    return max(1e-4, 1e-3 * r)


def _odd_log_heat(n: int, r: float, t: float) -> float:
    if n == 1:
        return float(plane.plane_log_heat(r, t))
    # H_n = -exp(-(n-1) t) / (2 pi sinh r) * d/dr H_{n-2}
    m = n - 2
    f0 = _odd_log_heat(m, r, t)
    if r == 0.0:
        h = 1e-2
        f1, f2 = _odd_log_heat(m, h, t), _odd_log_heat(m, 2 * h, t)
        d2 = (-2.0 * f2 + 32.0 * f1 - 30.0 * f0) / (12.0 * h * h)
        # d/dr H / sinh r -> H'' = H (log H)'' at the origin
        return f0 + math.log(-d2) - (n - 1) * t - math.log(2.0 * math.pi)
    h = _fd_step(r)
    fp1, fp2 = _odd_log_heat(m, r + h, t), _odd_log_heat(m, r + 2 * h, t)
    fm1, fm2 = _odd_log_heat(m, abs(r - h), t), _odd_log_heat(m, abs(r - 2 * h), t)
    dlog = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
    if dlog >= 0:
        raise ArithmeticError(f"radial derivative not negative at r={r}, t={t}")
    return f0 + math.log(-dlog) - (n - 1) * t - math.log(2.0 * math.pi) - float(log_sinh(r))


def heat_kernel(n: int, r, t) -> LogValue:
    """Heat kernel of H^{n+1} at geodesic distance ``r`` and time ``t``.

    Args:
        n: boundary dimension; the space is H^{n+1}.
        r: distance(s), ``r >= 0``.
        t: time(s), ``t > 0``.

    Returns:
        LogValue.  ``reduced_accuracy`` is set for odd n > 3, where nested
        numerical differentiation limits accuracy to roughly 1e-6.
    """
    _check_dim(n)
    r, t = _rt(r, t)
    if n % 2 == 0:
        return heat_closed_form(n).log_evaluate(r, t)
    flat = [_odd_log_heat(n, float(ri), float(ti)) for ri, ti in zip(r.ravel(), t.ravel())]
    log = np.array(flat).reshape(r.shape)
    return LogValue(log, np.ones(r.shape, dtype=int), reduced_accuracy=n > 3)._squeeze()


def heat_kernel_point(n: int, p: EvalPoint) -> LogValue:
    return heat_kernel(n, p.r, p.t)


# --- resolvent --------------------------------------------------------------------

class ResolventValue(NamedTuple):
    value: complex
    log_abs: LogValue


def resolvent_kernel(n: int, lam, r: float) -> ResolventValue:
    """Kernel of ``(Delta - n^2/4 - lam^2)^{-1}`` at distance ``r``, for ``Im lam <= 0``.

    Raises:
        ValueError: for ``r < 1e-8``, ``Im lam > 0``, or odd ``n >= 3``.
    """
    _check_dim(n)
    lam = complex(lam)
    if lam.imag > 0:
        raise ValueError("need Im lam <= 0")
    if not r >= 1e-8:
        raise ValueError("resolvent is singular on the diagonal; need r >= 1e-8")
    if n == 1:
        val = plane.plane_resolvent(lam, r)
        return ResolventValue(val, LogValue.from_value(abs(val)))
    if n % 2:
        raise ValueError("resolvent for odd n >= 3 needs a finite-part regularization; unsupported")
    expr = resolvent_odd_dim(n)
    A, _ = expr.r_coefficients(r)
    poly = 0j
    for c in A[::-1]:
        poly = poly * lam + complex(c)
    if poly == 0 or not np.isfinite(poly):
        # the 1/sinh^m factors underflow at large r
        with mpmath.workdps(30):
            mp_poly = mpmath.mpc(0)
            for c in expr.r_coefficients_mp(r, 30)[::-1]:
                mp_poly = mp_poly * lam + c
            if mp_poly != 0:
                log_abs = lam.imag * r + float(mpmath.log(abs(mp_poly)))
                phase = complex(mpmath.exp(-1j * lam.real * r) * mp_poly / abs(mp_poly))
                return ResolventValue(phase * math.exp(log_abs), LogValue(log_abs, 1))
    log_abs = lam.imag * r + math.log(abs(poly)) if poly != 0 else -math.inf
    phase = np.exp(-1j * lam.real * r) * poly / abs(poly) if poly != 0 else 0.0
    return ResolventValue(complex(phase * math.exp(log_abs)), LogValue(log_abs, 1 if poly != 0 else 0))


# --- spectral measure ------------------------------------------------------------

def _even_spectral_terms(expr, lam, r):
    A, _ = expr.r_coefficients(r)
    terms = []
    s, c = np.sin(lam * r), np.cos(lam * r)
    for p in range(A.shape[0]):
        lp = 2.0 / math.pi * lam ** (p + 1)
        if p % 2 == 0:
            terms.append(lp * (complex(A[p]) * s).real)
        else:
            terms.append(lp * (1j * complex(A[p]) * c).real)
    return np.array(terms)


def _even_spectral_mp(expr, lam, r):
    r_eff = r if r > 0 else 1e-40
    dps = 30 if r > 0 else 30 + 45 * expr.max_sinh_pow
    while True:
        A = expr.r_coefficients_mp(r_eff, dps)
        with mpmath.workdps(dps):
            lm = mpmath.mpf(lam)
            x = lm * mpmath.mpf(r_eff)
            s, c = mpmath.sin(x), mpmath.cos(x)
            vals = []
            for p, a in enumerate(A):
                lp = 2 * lm ** (p + 1) / mpmath.pi
                vals.append(lp * (a * s).real if p % 2 == 0 else lp * (1j * a * c).real)
            tot = mpmath.fsum(vals)
            size = mpmath.fsum(abs(v) for v in vals)
            if tot != 0 and mpmath.log10(size / abs(tot)) + 25 < dps:
                return float(tot)
        if dps > 4000:
            raise ArithmeticError("extended precision budget exhausted")
        dps *= 2


def spectral_measure_kernel(n: int, lam, r: float, cond_limit: float = 1e4):
    """Density of ``dE(lam)`` for ``sqrt(Delta - n^2/4)`` at distance ``r``.

    Computed as ``(i/2pi) 2 lam [R(lam) - R(-lam)]``; finite at ``r = 0``.
    Accepts an array of ``lam > 0``.
    """
    _check_dim(n)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0) or r < 0:
        raise ValueError("need lam > 0 and r >= 0")
    if n == 1:
        out = plane.plane_spectral_measure(lam_arr, r)
    elif n % 2:
        raise ValueError("spectral measure for odd n >= 3 is unsupported")
    else:
        expr = resolvent_odd_dim(n)
        if r > 0:
            with np.errstate(all="ignore"):
                terms = _even_spectral_terms(expr, lam_arr, r)
                out = terms.sum(axis=0)
                bad = np.abs(terms).sum(axis=0) > cond_limit * np.abs(out)
        else:
            out = np.zeros_like(lam_arr)
            bad = np.ones(lam_arr.shape, dtype=bool)
        for i in np.flatnonzero(bad):
            out[i] = _even_spectral_mp(expr, float(lam_arr[i]), r)
    return out if np.ndim(lam) else float(out[0])


def heat_kernel_via_spectral_measure(n: int, r: float, t: float,
                                     quad: QuadratureConfig = DEFAULT_QUAD,
                                     max_cond: float = 1e5) -> LogValue:
    """``exp(-n^2 t/4) int_0^inf exp(-t lam^2) dE(lam)(r) dlam`` by panel quadrature.

    Raises:
        QuadratureError: if the integral does not settle to ``quad.rel_tol``
            or cancels by more than ``max_cond`` (even n).
    """
    _check_dim(n)
    EvalPoint(r, t)
    if n == 1:
        log, err, _ = plane.plane_heat_via_spectral_measure(r, t, max_cond)
        if err > max(quad.rel_tol, 1e-12) * 1e3:
            raise QuadratureError("spectral-measure quadrature unsettled", err)
        return LogValue(log, 1)
    if n % 2:
        raise ValueError("spectral-measure path supports even n and n = 1")
    lam_max = math.sqrt((60.0 + n * 5.0) / t)
    edges = np.linspace(0.0, lam_max, max(2, math.ceil(lam_max * (1.0 + r))) + 1)
    ests = []
    for order in (16, 24):
        lam, wl = panel_rule(edges, order)
        lam = np.maximum(lam, 1e-300)
        dE = spectral_measure_kernel(n, lam, r)
        g = wl * np.exp(-t * lam * lam)
        ests.append((float(g @ dE), float(g @ np.abs(dE))))
    (v0, _), (v1, mag) = ests
    cond = mag / abs(v1) if v1 else math.inf
    err = abs(v1 - v0) / abs(v1) if v1 else math.inf
    if v1 <= 0 or cond > max_cond or err > max(quad.rel_tol, 1e-12) * 1e3:
        raise QuadratureError("spectral-measure quadrature failed", max(err, cond * 1e-16))
    return LogValue(math.log(v1) - n * n * t / 4.0, 1)


def total_mass(n: int, t: float, kernel=None):
    """``int_0^inf K(r, t) omega_n sinh^n r dr`` for ``K = heat_kernel`` by default.

    Returns ``(mass, rel_error)``; the mass of the heat kernel is 1.
    """
    from .contour_quadrature import integrate_log_half_line

    kernel = kernel or heat_kernel
    lv = log_sphere_volume(n)

    def log_f(r):
        h = kernel(n, r, np.full(r.shape, t))
        return np.asarray(h.log_magnitude) + lv + n * log_sinh(r)

    stop = n * t + 40.0 * math.sqrt(t) + 40.0
    scale = 0.25 * min(math.sqrt(t), 1.0)
    log_m, err = integrate_log_half_line(log_f, scale, stop, max_len=min(math.sqrt(t), 1.0))
    return math.exp(log_m), err
