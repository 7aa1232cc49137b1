"""Grid scans that compare heat kernels with their two-sided model bounds.

The reference quantity is

    DM(r, t) = t^{-(n+1)/2} exp(-n^2 t/4 - r^2/4t - n r/2) (1+r+t)^{n/2-1} (1+r),

and the scans report the range of ``H / DM`` over a grid, globally and per
region of the (r, t) quadrant.  All reductions are deterministic: ties in
min/max are broken by the lexicographically smallest ``(r, t)``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .contour_quadrature import gaussian_constant
from .kernel_algebra import resolvent_odd_dim
from .model_kernels import EvalPoint, dm_quantity, heat_kernel, spectral_measure_kernel
from .reports import csv_text, library_version

UNDERFLOW_LOG = -600.0


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid in ``(r, t)``.

    Attributes:
        r_min, r_max, t_min, t_max: ranges, all positive.
        r_points, t_points: node counts, at least 1 (2 for a proper range).
        spacing: ``"log"`` or ``"linear"``.
    """

    r_min: float
    r_max: float
    t_min: float
    t_max: float
    r_points: int
    t_points: int
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing not in ("log", "linear"):
            raise ValueError("spacing must be 'log' or 'linear'")
        if self.r_points < 1 or self.t_points < 1:
            raise ValueError("need at least one point per axis")
        for lo, hi, k, name in ((self.r_min, self.r_max, self.r_points, "r"),
                                (self.t_min, self.t_max, self.t_points, "t")):
            if not lo > 0:
                raise ValueError(f"{name}_min must be positive")
            if k == 1 and lo != hi:
                raise ValueError(f"a single {name} point needs {name}_min == {name}_max")
            if k > 1 and not lo < hi:
                raise ValueError(f"need {name}_min < {name}_max")

    def _axis(self, lo, hi, k):
        if k == 1:
            return np.array([lo])
        return np.geomspace(lo, hi, k) if self.spacing == "log" else np.linspace(lo, hi, k)

    @property
    def r_values(self):
        return self._axis(self.r_min, self.r_max, self.r_points)

    @property
    def t_values(self):
        return self._axis(self.t_min, self.t_max, self.t_points)

    def mesh(self):
        return np.meshgrid(self.r_values, self.t_values, indexing="ij")

    def refined(self, factor: int = 2) -> "GridSpec":
        """Nested refinement: ``factor (N - 1) + 1`` points per axis."""
        return replace(self, r_points=factor * (self.r_points - 1) + 1,
                       t_points=factor * (self.t_points - 1) + 1)


STANDARD_GRID = GridSpec(1e-2, 30.0, 1e-2, 50.0, 50, 50)


class Region(enum.Enum):
    I = "t >= C, r^2 <= C"
    II = "t >= C, sqrt(C) <= r <= C t"
    III = "t >= C, r >= C t"
    IV = "t <= C, r^2 >= C1 t"
    V = "t <= C2, r^2 <= C3 t"


@dataclass(frozen=True)
class RegionConstants:
    """Thresholds of the five regions.

    The quadrant is covered when ``C2 >= C`` and ``C3 >= C1``.
    """

    C: float = 4.0
    C1: float = 256.0
    C2: float = 4.0
    C3: float = 256.0

    def __post_init__(self):
        if min(self.C, self.C1, self.C2, self.C3) <= 0:
            raise ValueError("region constants must be positive")
        if self.C1 < self.C ** 3:
            raise ValueError(f"need C1 >= C^3 = {self.C ** 3}, got C1 = {self.C1}")

    @property
    def covering(self) -> bool:
        return self.C2 >= self.C and self.C3 >= self.C1


def region_masks(r, t, constants: RegionConstants = RegionConstants()):
    """Boolean masks per region for arrays ``r, t``."""
    C, C1, C2, C3 = constants.C, constants.C1, constants.C2, constants.C3
    r, t = np.asarray(r, dtype=float), np.asarray(t, dtype=float)
    r2 = r * r
    return {
        Region.I: (t >= C) & (r2 <= C),
        Region.II: (t >= C) & (r >= math.sqrt(C)) & (r <= C * t),
        Region.III: (t >= C) & (r >= C * t),
        Region.IV: (t <= C) & (r2 >= C1 * t),
        Region.V: (t <= C2) & (r2 <= C3 * t),
    }


def classify_region(p: EvalPoint, constants: RegionConstants = RegionConstants()) -> frozenset:
    """All regions containing ``p``."""
    masks = region_masks(p.r, p.t, constants)
    return frozenset(reg for reg, m in masks.items() if bool(m))


def uncovered_nodes(grid: GridSpec, constants: RegionConstants = RegionConstants()):
    """Grid nodes lying in no region, as a list of ``(r, t)``."""
    R, T = grid.mesh()
    masks = region_masks(R, T, constants)
    hit = np.zeros(R.shape, dtype=bool)
    for m in masks.values():
        hit |= m
    return [(float(r), float(t)) for r, t in zip(R[~hit], T[~hit])]


def log_heat_grid(n: int, R, T, threads: int = 1):
    """``log H`` at every node; odd n may be spread over worker threads."""
    if n % 2 == 0 or threads <= 1:
        return np.asarray(heat_kernel(n, R, T).log_magnitude, dtype=float).reshape(R.shape)
    flat_r, flat_t = R.ravel(), T.ravel()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        vals = list(pool.map(lambda rt: heat_kernel(n, rt[0], rt[1]).log_magnitude,
                             zip(flat_r.tolist(), flat_t.tolist())))
    return np.array(vals, dtype=float).reshape(R.shape)


def _lex_arg(values, R, T, pick):
    """Index of min/max with ties broken by smallest (r, t)."""
    order = np.lexsort((T.ravel(), R.ravel()))
    vals = values.ravel()[order]
    i = int(np.argmin(vals) if pick == "min" else np.argmax(vals))
    return int(order[i])


@dataclass
class RatioReport:
    """Range of ``H / DM`` over a grid.

    Attributes:
        dim: n.
        grid: the scanned grid.
        inf_ratio, sup_ratio: extreme ratios over included nodes.
        arg_inf, arg_sup: where they occur.
        per_region_stats: region name -> (inf, sup); regions without nodes are omitted.
        underflow_count: nodes excluded because both logs were below the floor.
    """

    dim: int
    grid: GridSpec
    inf_ratio: float
    sup_ratio: float
    arg_inf: EvalPoint
    arg_sup: EvalPoint
    per_region_stats: dict
    underflow_count: int
    library_version: str = field(default_factory=library_version)
    _nodes: dict = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return 0 < self.inf_ratio <= self.sup_ratio < math.inf

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "grid": self.grid,
            "inf": self.inf_ratio,
            "sup": self.sup_ratio,
            "arg_inf": self.arg_inf,
            "arg_sup": self.arg_sup,
            "per_region": [{"region": k, "inf": v[0], "sup": v[1]}
                           for k, v in sorted(self.per_region_stats.items())],
            "underflow_count": self.underflow_count,
            "library_version": self.library_version,
        }

    def nodes_csv(self) -> str:
        nd = self._nodes
        header = ["r", "t", "log_H", "log_DM", "ratio", "regions"]
        rows = [(r, t, lh, ld, math.exp(lh - ld), "|".join(reg))
                for r, t, lh, ld, reg in zip(nd["r"], nd["t"], nd["log_H"], nd["log_DM"],
                                             nd["regions"])]
        return csv_text(header, rows)


def _ratio_report(n, grid, R, T, log_num, log_den, constants, floor=UNDERFLOW_LOG):
    log_ratio = log_num - log_den
    if not np.all(np.isfinite(log_ratio)):
        i = int(np.flatnonzero(~np.isfinite(log_ratio.ravel()))[0])
        raise ArithmeticError(f"non-finite ratio at r={R.ravel()[i]}, t={T.ravel()[i]}")
    under = (log_num < floor) & (log_den < floor)
    keep = ~under
    if not np.any(keep):
        raise ArithmeticError("every node underflows; nothing to compare")
    masked_lo = np.where(keep, log_ratio, np.inf)
    masked_hi = np.where(keep, log_ratio, -np.inf)
    i_lo, i_hi = _lex_arg(masked_lo, R, T, "min"), _lex_arg(masked_hi, R, T, "max")
    masks = region_masks(R, T, constants)
    per = {}
    for reg, m in masks.items():
        sel = m & keep
        if np.any(sel):
            per[reg.name] = (math.exp(float(log_ratio[sel].min())), math.exp(float(log_ratio[sel].max())))
    fr, ft = R.ravel(), T.ravel()
    region_names = [[reg.name for reg, m in masks.items() if m.ravel()[i]] for i in range(fr.size)]
    nodes = {"r": fr, "t": ft, "log_H": log_num.ravel(), "log_DM": log_den.ravel(), "regions": region_names}
    return RatioReport(n, grid, math.exp(float(log_ratio.ravel()[i_lo])),
                       math.exp(float(log_ratio.ravel()[i_hi])),
                       EvalPoint(float(fr[i_lo]), float(ft[i_lo])),
                       EvalPoint(float(fr[i_hi]), float(ft[i_hi])),
                       per, int(np.count_nonzero(under)), _nodes=nodes)


def dm_ratio_scan(n: int, grid: GridSpec = STANDARD_GRID,
                  constants: RegionConstants = RegionConstants(), threads: int = 1) -> RatioReport:
    """``H / DM`` over ``grid``, in the log domain.

    Raises:
        ArithmeticError: on any non-finite ratio, naming the node.
    """
    R, T = grid.mesh()
    log_h = log_heat_grid(n, R, T, threads)
    log_dm = np.asarray(dm_quantity(n, R, T).log_magnitude, dtype=float).reshape(R.shape)
    return _ratio_report(n, grid, R, T, log_h, log_dm, constants)


@dataclass
class BoundReport:
    """Outcome of a one-sided bound check.

    Attributes:
        side: ``"upper"`` or ``"lower"``.
        constant: the constant that was tested.
        minimal_constant: the best constant the grid supports.
        passed: whether every node satisfies the bound with ``constant``.
        failing_nodes: ``(r, t, ratio)`` for violating nodes.
    """

    side: str
    dim: int
    constant: float
    minimal_constant: float
    passed: bool
    failing_nodes: list
    scan: RatioReport

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("side", "dim", "constant", "minimal_constant", "passed",
                                           "failing_nodes")}
        d["scan"] = self.scan.to_dict()
        return d


def _failing(scan, pred):
    nd = scan._nodes
    ratio = np.exp(nd["log_H"] - nd["log_DM"])
    under = (nd["log_H"] < UNDERFLOW_LOG) & (nd["log_DM"] < UNDERFLOW_LOG)
    bad = pred(ratio) & ~under
    return [(float(r), float(t), float(q)) for r, t, q in zip(nd["r"][bad], nd["t"][bad], ratio[bad])]


def upper_bound_check(n: int, grid: GridSpec, constant_C: float, threads: int = 1) -> BoundReport:
    """Check ``H <= constant_C * DM`` node-wise."""
    scan = dm_ratio_scan(n, grid, threads=threads)
    fails = _failing(scan, lambda q: q > constant_C)
    return BoundReport("upper", n, constant_C, scan.sup_ratio, not fails, fails, scan)


def lower_bound_check(n: int, grid: GridSpec, constant_c: float, threads: int = 1) -> BoundReport:
    """Check ``H >= constant_c * DM`` node-wise."""
    scan = dm_ratio_scan(n, grid, threads=threads)
    fails = _failing(scan, lambda q: q < constant_c)
    return BoundReport("lower", n, constant_c, scan.inf_ratio, not fails, fails, scan)


# --- resolvent positivity and long-time behaviour ------------------------------

def lambda_derivative_at_zero(n: int, r):
    """``i dR/dlam`` at ``lam = 0`` for even n (exact) or n = 1 (radial quadrature)."""
    if n % 2 == 0:
        return resolvent_odd_dim(n).lambda_derivative_at_zero(r)
    if n == 1:
        from . import hyperbolic_plane as plane
        vals = []
        for ri in np.atleast_1d(r):
            v, w = plane.radial_rule(float(ri))
            vals.append(plane.plane_constant() * math.exp(-0.5 * ri) * float(np.sum(w * (ri + v))))
        return np.array(vals) if np.ndim(r) else vals[0]
    raise ValueError("unsupported dimension")


@dataclass
class PositivityReport:
    """Positivity of the resolvent on the negative imaginary axis.

    Attributes:
        min_resolvent: smallest ``R(-i mu)(r)`` over the grid.
        failing_nodes: ``(mu, r, value)`` with value <= 0.
        min_derivative: smallest ``i dR/dlam(0)(r)``.
        growth_ratios: ``i dR/dlam(0)(r) / (r exp(-n r/2))`` on the decay window.
        growth_spread: ``(max - min) / max`` of the growth ratios.
    """

    dim: int
    min_resolvent: float
    failing_nodes: list
    min_derivative: float
    growth_window: tuple
    growth_ratios: list
    growth_spread: float
    tolerance: float = 0.05

    @property
    def passed(self) -> bool:
        return (not self.failing_nodes and self.min_derivative > 0
                and self.growth_spread <= self.tolerance)

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("dim", "min_resolvent", "failing_nodes", "min_derivative",
                                           "growth_window", "growth_ratios", "growth_spread",
                                           "tolerance")}
        d["passed"] = self.passed
        return d


def resolvent_positivity_suite(n: int, mu_grid=None, r_grid=None, window=(20.0, 40.0),
                               window_points: int = 21, tolerance: float = 0.05) -> PositivityReport:
    """Check ``R(-i mu)(r) > 0`` and the growth of ``i dR/dlam(0)``.

    Args:
        n: even boundary dimension.
        mu_grid: values of ``mu`` in ``(0, n/2]``.
        r_grid: distances, all ``>= 1e-8``.
        window: r-range on which ``i dR/dlam(0)(r) / (r exp(-n r/2))`` must settle.
    """
    if n % 2:
        raise ValueError("positivity suite needs the exact (even n) resolvent")
    expr = resolvent_odd_dim(n)
    mu_grid = np.asarray(mu_grid if mu_grid is not None else
                         np.unique(np.append(np.arange(0.01, n / 2, 0.1), n / 2)), dtype=float)
    r_grid = np.asarray(r_grid if r_grid is not None else np.geomspace(0.01, 30.0, 60), dtype=float)
    fails, lowest = [], math.inf
    for mu in mu_grid:
        vals = expr.evaluate(-1j * mu, r_grid)
        re = np.real(vals)
        lowest = min(lowest, float(np.min(re / np.exp(-mu * r_grid))))
        for r, v in zip(r_grid, re):
            if not v > 0:
                fails.append((float(mu), float(r), float(v)))
    deriv = expr.lambda_derivative_at_zero(r_grid)
    rw = np.linspace(window[0], window[1], window_points)
    ratios = expr.lambda_derivative_at_zero(rw) / (rw * np.exp(-0.5 * n * rw))
    spread = float((ratios.max() - ratios.min()) / ratios.max())
    return PositivityReport(n, lowest, fails, float(np.min(deriv)), tuple(window),
                            ratios.tolist(), spread, tolerance)


@dataclass
class LongTimeReport:
    """Convergence of ``H exp(n^2 t/4) t^{3/2}`` to a multiple of ``i dR/dlam(0)(r)``.

    Attributes:
        predicted: ``constant_used / (2 pi) * i dR/dlam(0)(r)``.
        literature_predicted: the same with the constant ``sqrt(2 pi)``.
        fitted_constant: ``2 pi * last value / i dR/dlam(0)(r)``.
        last_decade_spread: relative spread of values over the last decade of t.
    """

    dim: int
    r: float
    t_grid: list
    values: list
    derivative: float
    constant_used: float
    predicted: float
    literature_predicted: float
    fitted_constant: float
    last_decade_spread: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def long_time_asymptotic_check(n: int, r: float = 1.0, t_grid=None,
                               tolerance: float = 0.01) -> LongTimeReport:
    """Check that ``H(t, r) exp(n^2 t/4) t^{3/2}`` settles at the predicted limit."""
    if not 0.1 <= r <= 5:
        raise ValueError("r must lie in [0.1, 5]")
    t_grid = np.asarray(t_grid if t_grid is not None else np.geomspace(1.0, 1e4, 13), dtype=float)
    if t_grid[-1] < 1e3 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must increase to at least 1e3")
    logs = np.asarray(heat_kernel(n, np.full(t_grid.shape, r), t_grid).log_magnitude)
    vals = np.exp(logs + n * n * t_grid / 4.0 + 1.5 * np.log(t_grid))
    d = float(lambda_derivative_at_zero(n, r))
    c = gaussian_constant()
    last = vals[t_grid >= t_grid[-1] / 10.0]
    spread = float((last.max() - last.min()) / last.max())
    predicted = c / (2 * math.pi) * d
    passed = spread <= tolerance and abs(vals[-1] / predicted - 1.0) <= tolerance
    return LongTimeReport(n, r, t_grid.tolist(), vals.tolist(), d, c, predicted,
                          math.sqrt(2 * math.pi) / (2 * math.pi) * d,
                          2 * math.pi * float(vals[-1]) / d, spread, passed)


# --- Gaussian sharpness and spectral-measure bounds -----------------------------

@dataclass
class SharpnessReport:
    """Least-squares fits of ``g(r) = log H + r^2/4t + n r/2`` on a window.

    Attributes:
        linear_slope: slope of ``g`` against ``r`` in the joint fit ``a + b r + c log r``.
        log_slope: coefficient ``c`` of ``log r`` in the joint fit.
        plain_slope: slope of a straight-line fit of ``g`` against ``r`` alone.
    """

    dim: int
    t: float
    window: tuple
    linear_slope: float
    log_slope: float
    plain_slope: float
    residual: float

    def to_dict(self):
        return dict(self.__dict__)


def gaussian_sharpness_fit(n: int = 2, t: float = 1.0, window=(5.0, 40.0), points: int = 71):
    r = np.linspace(window[0], window[1], points)
    g = np.asarray(heat_kernel(n, r, np.full(r.shape, t)).log_magnitude) + r * r / (4 * t) + 0.5 * n * r
    X = np.column_stack([np.ones_like(r), r, np.log(r)])
    coef, *_ = np.linalg.lstsq(X, g, rcond=None)
    plain = np.polyfit(r, g, 1)[0]
    return SharpnessReport(n, t, tuple(window), float(coef[1]), float(coef[2]), float(plain),
                           float(np.max(np.abs(X @ coef - g))))


@dataclass
class SpectralBoundReport:
    """Grid constants in ``|dE(lam)(r)| <= C lam^2`` (lam <= 1) and ``<= C lam^n`` (lam >= 1)."""

    dim: int
    small_lambda_constant: float
    large_lambda_constant: float
    nodes: int

    def to_dict(self):
        return dict(self.__dict__)


def spectral_measure_bound_scan(n: int, lam_grid=None, r_grid=None) -> SpectralBoundReport:
    lam_grid = np.asarray(lam_grid if lam_grid is not None else np.geomspace(1e-2, 1e2, 121))
    r_grid = np.asarray(r_grid if r_grid is not None else np.linspace(0.0, 10.0, 101))
    small, large = 0.0, 0.0
    lo, hi = lam_grid <= 1, lam_grid >= 1
    for r in r_grid:
        dE = np.abs(spectral_measure_kernel(n, lam_grid, float(r)))
        if np.any(lo):
            small = max(small, float(np.max(dE[lo] / lam_grid[lo] ** 2)))
        if np.any(hi):
            large = max(large, float(np.max(dE[hi] / lam_grid[hi] ** n)))
    return SpectralBoundReport(n, small, large, int(lam_grid.size * r_grid.size))
