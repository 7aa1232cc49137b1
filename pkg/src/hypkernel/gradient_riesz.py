"""Derivative bounds, the Li-Yau inequality and Riesz-transform exponent ranges."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bounds_verifier import STANDARD_GRID, UNDERFLOW_LOG, GridSpec
from .contour_quadrature import integrate_log_half_line
from .kernel_algebra import differentiate_heat, heat_closed_form
from .logdomain import LogValue, log_sinh
from .model_kernels import _check_dim, _rt, dm_quantity, heat_kernel
from .reports import csv_text


class GradientKind(enum.Enum):
    time_derivative = "time_derivative"
    spatial_gradient = "spatial_gradient"


@dataclass(frozen=True)
class GradientBoundSpec:
    """Shape of a derivative bound.

    ``time_derivative``: ``DM * (1 + 1/t + r^2/t^2)``.
    ``spatial_gradient``: ``t^{-(n+2)/2} exp(-n^2 t/4 - r^2/4t - n r/2)
    (1+r+t)^{n/2-1} (1+r) (1 + r/sqrt(t) + sqrt(t))``.
    """

    kind: GradientKind

    def log_envelope(self, n, r, t):
        r, t = np.asarray(r, dtype=float), np.asarray(t, dtype=float)
        if self.kind is GradientKind.time_derivative:
            return (np.asarray(dm_quantity(n, r, t).log_magnitude)
                    + np.log(1.0 + 1.0 / t + r * r / (t * t)))
        st = np.sqrt(t)
        return (-0.5 * (n + 2) * np.log(t) - n * n * t / 4.0 - r * r / (4.0 * t) - 0.5 * n * r
                + (0.5 * n - 1.0) * np.log1p(r + t) + np.log1p(r) + np.log(1.0 + r / st + st))


@lru_cache(maxsize=None)
def _derivative_form(n, variable):
    return differentiate_heat(heat_closed_form(n), variable)


def _fd_log(n, r, t, variable):
    """5-point derivative of ``log H`` for odd n."""
    if variable == "time":
        h = 1e-3 * t
        f = [float(heat_kernel(n, r, t + k * h).log_magnitude) for k in (-2, -1, 1, 2)]
    else:
        h = max(1e-4, 1e-3 * r)
        f = [float(heat_kernel(n, abs(r + k * h), t).log_magnitude) for k in (-2, -1, 1, 2)]
    return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)


def time_derivative_kernel(n: int, r, t) -> LogValue:
    """``dH/dt``, exact for even n; finite differences with a reduced-accuracy flag for odd n."""
    _check_dim(n)
    r, t = _rt(r, t)
    if n % 2 == 0:
        return _derivative_form(n, "time").log_evaluate(r, t)
    logs, signs = [], []
    for ri, ti in zip(r.ravel(), t.ravel()):
        d = _fd_log(n, float(ri), float(ti), "time")
        logs.append(float(heat_kernel(n, ri, ti).log_magnitude) + math.log(abs(d)) if d else -math.inf)
        signs.append(int(np.sign(d)))
    return LogValue(np.array(logs).reshape(r.shape), np.array(signs).reshape(r.shape),
                    reduced_accuracy=True)._squeeze()


def spatial_gradient_kernel(n: int, r, t) -> LogValue:
    """``|dH/dr|``, the gradient magnitude of the radial kernel; zero at ``r = 0``."""
    _check_dim(n)
    r, t = _rt(r, t)
    if n % 2 == 0:
        safe = np.where(r > 0, r, 1.0)
        lv = _derivative_form(n, "radius").log_evaluate(safe, t)
        logm = np.where(r > 0, lv.log_magnitude, -np.inf)
        sign = np.where(r > 0, np.abs(lv.sign), 0)
        return LogValue(logm, sign)._squeeze()
    logs, signs = [], []
    for ri, ti in zip(r.ravel(), t.ravel()):
        if ri == 0:
            logs.append(-math.inf)
            signs.append(0)
            continue
        d = _fd_log(n, float(ri), float(ti), "radius")
        logs.append(float(heat_kernel(n, ri, ti).log_magnitude) + math.log(abs(d)))
        signs.append(1)
    return LogValue(np.array(logs).reshape(r.shape), np.array(signs).reshape(r.shape),
                    reduced_accuracy=True)._squeeze()


def _signed_log_ratio(num: LogValue, den: LogValue):
    return np.asarray(num.sign) * np.exp(np.asarray(num.log_magnitude) - np.asarray(den.log_magnitude))


@dataclass
class GradientBoundReport:
    """Smallest constant with ``|derivative| <= C * envelope`` on the grid."""

    dim: int
    kind: GradientKind
    grid: GridSpec
    minimal_constant: float
    arg_max: tuple
    excluded: int

    def to_dict(self):
        return dict(self.__dict__)


def gradient_bound_scan(n: int, kind, grid: GridSpec = STANDARD_GRID) -> GradientBoundReport:
    kind = GradientKind(kind)
    R, T = grid.mesh()
    if kind is GradientKind.time_derivative:
        d = time_derivative_kernel(n, R, T)
    else:
        d = spatial_gradient_kernel(n, R, T)
    env = GradientBoundSpec(kind).log_envelope(n, R, T)
    logd = np.asarray(d.log_magnitude, dtype=float).reshape(R.shape)
    excluded = (logd < UNDERFLOW_LOG) & (env < UNDERFLOW_LOG)
    log_ratio = np.where(excluded, -np.inf, logd - env)
    order = np.lexsort((T.ravel(), R.ravel()))
    i = int(order[int(np.argmax(log_ratio.ravel()[order]))])
    return GradientBoundReport(n, kind, grid, math.exp(float(log_ratio.ravel()[i])),
                               (float(R.ravel()[i]), float(T.ravel()[i])), int(excluded.sum()))


# --- Li-Yau ------------------------------------------------------------------------

@dataclass
class LiYauReport:
    """Minimal ``C`` in ``|grad u|^2/u^2 - alpha u_t/u <= (n+1) alpha^2/(2t) + C n/(alpha-1)``.

    Attributes:
        minimal_constant: sup over the grid of ``(LHS - (n+1) alpha^2/2t) (alpha-1)/n``.
        refined_constant: the same on the 2x refined grid, when requested.
        excluded: nodes skipped because ``log H`` is below the underflow floor.
    """

    dim: int
    alpha: float
    grid: GridSpec
    minimal_constant: float
    arg_max: tuple
    excluded: int
    refined_constant: float = math.nan
    _nodes: dict = field(default=None, repr=False)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.minimal_constant)

    @property
    def refinement_change(self) -> float:
        return abs(self.refined_constant / self.minimal_constant - 1.0)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if not k.startswith("_")}
        d["refinement_change"] = self.refinement_change
        return d

    def nodes_csv(self) -> str:
        nd = self._nodes
        rows = zip(nd["r"], nd["t"], nd["lhs"], nd["rhs0"])
        return csv_text(["r", "t", "lhs", "rhs_without_C"], rows)


def _li_yau_once(n, alpha, grid):
    R, T = grid.mesh()
    H = heat_kernel(n, R, T)
    gr = _signed_log_ratio(spatial_gradient_kernel(n, R, T), H)
    gt = _signed_log_ratio(time_derivative_kernel(n, R, T), H)
    lhs = gr * gr - alpha * gt
    rhs0 = (n + 1) * alpha * alpha / (2.0 * T)
    excluded = np.asarray(H.log_magnitude) < UNDERFLOW_LOG
    c = np.where(excluded, -np.inf, (lhs - rhs0) * (alpha - 1.0) / n)
    order = np.lexsort((T.ravel(), R.ravel()))
    i = int(order[int(np.argmax(c.ravel()[order]))])
    nodes = {"r": R.ravel(), "t": T.ravel(), "lhs": lhs.ravel(), "rhs0": rhs0.ravel()}
    return float(c.ravel()[i]), (float(R.ravel()[i]), float(T.ravel()[i])), int(excluded.sum()), nodes


def li_yau_check(n: int, alpha: float = 1.5, grid: GridSpec = STANDARD_GRID,
                 refine: bool = True) -> LiYauReport:
    """Smallest Li-Yau constant supported by the grid, with curvature ``K = n`` and ``k = n + 1``."""
    if not 1 < alpha < 2:
        raise ValueError("alpha must lie in (1, 2)")
    C, arg, excl, nodes = _li_yau_once(n, alpha, grid)
    rep = LiYauReport(n, alpha, grid, C, arg, excl, _nodes=nodes)
    if refine:
        rep.refined_constant = _li_yau_once(n, alpha, grid.refined())[0]
    return rep


# --- Riesz and Kunze-Stein arithmetic ---------------------------------------------

def _exact(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return Fraction(x) if float(x).is_integer() or Fraction(x).denominator < 2 ** 20 else float(x)


@dataclass(frozen=True)
class RieszRange:
    """Open interval ``(p_lo, p_hi)`` of admissible exponents; ``p_hi`` may be ``inf``."""

    lam: object
    p_lo: object
    p_hi: object

    def as_floats(self):
        return float(self.p_lo), float(self.p_hi)

    def contains(self, p) -> bool:
        return self.p_lo < p < self.p_hi


def riesz_range(n: int, lam) -> RieszRange:
    """``(2n/(n+2 lam), 2n/(n-2 lam))``, the exponents with ``|1/p - 1/2| < lam/n``.

    Exact rational arithmetic is used whenever ``lam`` is rational with a
    modest denominator (ints, Fractions, binary floats like 0.5).
    """
    _check_dim(n)
    lam_x = _exact(lam)
    if not 0 < lam_x <= Fraction(n, 2):
        raise ValueError(f"lambda must lie in (0, n/2] = (0, {n / 2}]")
    lo = 2 * n / (n + 2 * lam_x)
    if lam_x == Fraction(n, 2):
        return RieszRange(lam_x, lo, math.inf)
    return RieszRange(lam_x, lo, 2 * n / (n - 2 * lam_x))


@dataclass(frozen=True)
class ExponentRange:
    """Half-open interval ``[q_lo, q_hi)``."""

    q_lo: object
    q_hi: object

    @property
    def empty_interior(self) -> bool:
        return not self.q_lo < self.q_hi


def conjugate_exponent(p):
    if p == math.inf:
        return Fraction(1)
    p = _exact(p)
    return p / (p - 1)


def kunze_stein_q_range(p0) -> ExponentRange:
    """``[1, p0')`` for ``p0 > 2``."""
    if not p0 > 2:
        raise ValueError("need p0 > 2")
    return ExponentRange(Fraction(1), conjugate_exponent(p0))


# --- L^q gradient-norm integral ---------------------------------------------------

@dataclass
class GradientNormEstimate:
    """Per-t values of the L^q gradient-norm expression and its exponential rate.

    Attributes:
        p: the exponent dual to ``q``.
        bound_values: expression values on ``t_grid``.
        alpha_fit: decay rate from OLS of ``log value + log(t)/2`` on ``t in [1, 100]``.
        rate: ``n^2 (q-1)/q^2``.
        small_t_constant: ``max value * sqrt(t)`` over ``t <= 1``.
        small_t_growth: ``value*sqrt(t)`` at the smallest t over its max on ``[10 t_min, 1]``.
    """

    n: int
    p: float
    q: float
    t_grid: list
    bound_values: list
    alpha_fit: float
    fit_residual: float
    rate: float
    small_t_constant: float
    small_t_growth: float
    slack: float = 0.05

    @property
    def rate_ok(self) -> bool:
        return self.alpha_fit >= self.rate - self.slack * self.n ** 2

    @property
    def small_t_ok(self) -> bool:
        return math.isfinite(self.small_t_constant) and self.small_t_growth <= 1.1

    def to_dict(self):
        d = dict(self.__dict__)
        d.update(rate_ok=self.rate_ok, small_t_ok=self.small_t_ok)
        return d


def log_q_expression(n: int, q: float, t: float):
    """log of ``t^{-(n+2)/2} e^{-n^2 t/4} (int_0^inf F(r)^q sinh^n r dr)^{1/q}``.

    ``F = exp(-r^2/4t - n r/2) (1+r+t)^{n/2-1} (1+r) (1 + r/sqrt(t) + sqrt(t))``.
    Integrated in ``u = r / sqrt(t)``.  Returns ``(log_value, rel_error)``.
    """
    st = math.sqrt(t)

    def log_f(u):
        r = st * u
        return (q * (-r * r / (4 * t) - 0.5 * n * r + (0.5 * n - 1) * np.log1p(r + t)
                     + np.log1p(r) + np.log(1 + u + st)) + n * log_sinh(r) + math.log(st))

    peak = max(n * t * (2 - q) / q, 0.0)
    width = math.sqrt(2 * t / q)
    stop = (peak + 40 * width + 20) / st
    log_i, err = integrate_log_half_line(log_f, 0.25, stop, max_len=1.0)
    return -0.5 * (n + 2) * math.log(t) - n * n * t / 4 + log_i / q, err


def gradient_norm_bound(n: int, q, t_grid=None, fit_window=(1.0, 100.0)) -> GradientNormEstimate:
    """Evaluate the L^q gradient-norm expression on ``t_grid`` and fit its decay rate."""
    if q < 1:
        raise ValueError("q must be >= 1")
    t_grid = np.asarray(t_grid if t_grid is not None else np.geomspace(1e-2, 1e2, 41), dtype=float)
    if t_grid.min() > 1e-2 * (1 + 1e-12) or t_grid.max() < 1e2 * (1 - 1e-12):
        raise ValueError("t_grid must span [1e-2, 1e2]")
    logs = np.array([log_q_expression(n, float(q), float(t))[0] for t in t_grid])
    sel = (t_grid >= fit_window[0]) & (t_grid <= fit_window[1])
    y = logs[sel] + 0.5 * np.log(t_grid[sel])
    coef = np.polyfit(t_grid[sel], y, 1)
    resid = float(np.max(np.abs(np.polyval(coef, t_grid[sel]) - y)))
    small = t_grid <= 1.0
    scaled = np.exp(logs[small] + 0.5 * np.log(t_grid[small]))
    later = scaled[t_grid[small] >= 10 * t_grid.min()]
    growth = float(scaled[0] / later.max()) if later.size else math.nan
    qf = float(q)
    p = math.inf if qf == 1 else qf / (qf - 1)
    return GradientNormEstimate(n, p, qf, t_grid.tolist(), np.exp(logs).tolist(), float(-coef[0]),
                                resid, n * n * (qf - 1) / qf ** 2,
                                float(scaled.max()) if scaled.size else math.nan, growth)
