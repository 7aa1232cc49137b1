"""Exact term algebra for resolvent and heat kernels on odd-dimensional H^{n+1}.

For even n the resolvent of ``Delta - n**2/4 - lam**2`` on H^{n+1} is
obtained from the one-dimensional kernel by ``n/2`` applications of the
interdimensional descent operator ``-(2 pi sinh r)^{-1} d/dr``.  Every
intermediate result is a finite sum

    exp(-i lam r) * pi**p * sum_j c_j lam**a_j cosh(r)**b_j / sinh(r)**m_j

with Gaussian-rational ``c_j``, so the whole pipeline can be carried out
exactly.  Shifting the spectral contour to ``Im lam = -r/2t`` then turns
the heat-kernel integral into Gaussian moments, giving closed forms

    exp(-n**2 t/4 - r**2/4t) * pi**q * sum_j d_j r**p_j t**(-h_j/2) cosh**b_j / sinh**m_j

with rational ``d_j``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .logdomain import LogValue, log_coth, log_sinh, signed_logsumexp

MAX_EXACT_N = 16
_LOG_PI = math.log(math.pi)


class AlgebraError(ArithmeticError):
    """Raised when an exact manipulation produces an inconsistent result."""


@dataclass(frozen=True)
class QComplex:
    """Gaussian rational ``re + i*im``."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __add__(self, other):
        return QComplex(self.re + other.re, self.im + other.im)

    def __neg__(self):
        return QComplex(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, QComplex):
            return QComplex(self.re * other.re - self.im * other.im,
                            self.re * other.im + self.im * other.re)
        other = Fraction(other)
        return QComplex(self.re * other, self.im * other)

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def to_mp(self):
        return mpmath.mpc(mpmath.mpf(self.re.numerator) / self.re.denominator,
                          mpmath.mpf(self.im.numerator) / self.im.denominator)


ONE = QComplex(Fraction(1))
I = QComplex(Fraction(0), Fraction(1))
_MINUS_I_POWERS = (ONE, -I, -ONE, I)


@dataclass(frozen=True)
class TrigTerm:
    coeff: QComplex
    lam_pow: int
    cosh_pow: int
    sinh_pow: int


def _collect(pairs):
    acc = defaultdict(QComplex)
    for key, c in pairs:
        acc[key] = acc[key] + c
    return tuple(TrigTerm(c, *key) for key, c in sorted(acc.items()) if c)


@dataclass(frozen=True)
class ResolventExpression:
    """``exp(-i lam r) * pi**pi_power * sum(terms)`` on H^{dim+1}.

    ``normalized`` is False for raw descent iterates (before division by
    ``lam``) and True for actual resolvent kernels.  ``sign_flipped``
    records whether positivity normalization negated the raw recipe.
    """

    dim: int
    terms: tuple[TrigTerm, ...]
    pi_power: int = 0
    normalized: bool = False
    sign_flipped: bool = False

    @property
    def max_sinh_pow(self) -> int:
        return max((t.sinh_pow for t in self.terms), default=0)

    @property
    def max_lam_pow(self) -> int:
        return max((t.lam_pow for t in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    # -- numerics ---------------------------------------------------------

    def r_coefficients(self, r):
        """Coefficients ``A_p(r)`` of ``lam**p`` in ``exp(i lam r) R(lam)``.

        Returns ``(A, absA)`` with shape ``(max_lam_pow + 1,) + r.shape``;
        ``absA`` sums term magnitudes and feeds condition estimates.
        """
        r = np.asarray(r, dtype=float)
        P = self.max_lam_pow + 1
        A = np.zeros((P,) + r.shape, dtype=complex)
        absA = np.zeros((P,) + r.shape)
        lc, ls = log_coth(r), log_sinh(r)
        scale = self.pi_power * _LOG_PI
        for term in self.terms:
            mag = np.exp(term.cosh_pow * lc + (term.cosh_pow - term.sinh_pow) * ls + scale)
            c = complex(term.coeff)
            A[term.lam_pow] += c * mag
            absA[term.lam_pow] += abs(c) * mag
        return A, absA

    def r_coefficients_mp(self, r, dps: int):
        """Same as :meth:`r_coefficients` for one ``r``, in mpmath at ``dps`` digits."""
        with mpmath.workdps(dps):
            r = mpmath.mpf(r)
            ch, sh = mpmath.cosh(r), mpmath.sinh(r)
            scale = mpmath.pi ** self.pi_power
            A = [mpmath.mpc(0)] * (self.max_lam_pow + 1)
            for term in self.terms:
                A[term.lam_pow] += term.coeff.to_mp() * ch ** term.cosh_pow / sh ** term.sinh_pow * scale
        return A

    def evaluate(self, lam, r):
        """Complex kernel value at spectral parameter ``lam`` and distance ``r``."""
        lam = np.asarray(lam, dtype=complex)
        A, _ = self.r_coefficients(r)
        poly = np.zeros(np.broadcast(lam, np.asarray(r)).shape, dtype=complex)
        for p in range(A.shape[0] - 1, -1, -1):
            poly = poly * lam + A[p]
        out = np.exp(-1j * lam * r) * poly
        return out if np.ndim(out) else complex(out)

    def lambda_derivative_at_zero(self, r):
        """``i * dR/dlam`` at ``lam = 0``, which is real for these kernels."""
        if not self.normalized:
            raise ValueError("only defined for normalized resolvent expressions")
        A, _ = self.r_coefficients(r)
        val = np.asarray(r) * A[0]
        if A.shape[0] > 1:
            val = val + 1j * A[1]
        val = np.real(val)
        return val if np.ndim(val) else float(val)


def descend(expr: ResolventExpression) -> ResolventExpression:
    """Apply ``-(2 pi sinh r)^{-1} d/dr`` to ``exp(-i lam r) * f(r, lam)``.

    The result describes the kernel two dimensions higher, before the
    ``lam``-prefactor is applied.
    """
    half = Fraction(-1, 2)
    pairs = []
    for t in expr.terms:
        c, a, b, m = t.coeff, t.lam_pow, t.cosh_pow, t.sinh_pow
        # d/dr of cosh^b sinh^-m, then / sinh
        if b:
            pairs.append(((a, b - 1, m), c * b * half))
        if m:
            pairs.append(((a, b + 1, m + 2), c * (-m) * half))
        # -i lam f / sinh
        pairs.append(((a + 1, b, m + 1), c * (-I) * half))
    return ResolventExpression(expr.dim + 2, _collect(pairs), expr.pi_power - 1)


def plane_wave_seed() -> ResolventExpression:
    """``exp(-i lam r) * 1``, the seed of the descent recursion."""
    return ResolventExpression(0, (TrigTerm(ONE, 0, 0, 0),))


@lru_cache(maxsize=None)
def resolvent_odd_dim(n: int) -> ResolventExpression:
    """Resolvent kernel of ``Delta - n**2/4 - lam**2`` on H^{n+1}, n even.

    Built as ``-(2 i lam)^{-1} D^{n/2} exp(-i lam r)`` and then sign
    normalized so that the kernel is positive at ``lam = -i``.
    """
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise ValueError(f"exact resolvent needs even n >= 2, got {n!r} (odd n uses quadrature)")
    if n > MAX_EXACT_N:
        raise ValueError(f"exact path supports n <= {MAX_EXACT_N}")
    expr = plane_wave_seed()
    for _ in range(n // 2):
        expr = descend(expr)
    # multiply by -1/(2 i lam) = i/(2 lam)
    factor = I * Fraction(1, 2)
    terms = []
    for t in expr.terms:
        if t.lam_pow < 1:
            raise AlgebraError("descent iterate has a lam-free term")
        terms.append(TrigTerm(t.coeff * factor, t.lam_pow - 1, t.cosh_pow, t.sinh_pow))
    raw = ResolventExpression(n, tuple(terms), expr.pi_power, normalized=True)
    probe = raw.evaluate(-1j, 1.0)
    if abs(probe.imag) > 1e-12 * abs(probe):
        raise AlgebraError("resolvent is not real on the negative imaginary axis")
    if probe.real < 0:
        flipped = tuple(TrigTerm(-t.coeff, t.lam_pow, t.cosh_pow, t.sinh_pow) for t in terms)
        return ResolventExpression(n, flipped, expr.pi_power, normalized=True, sign_flipped=True)
    return raw


def gaussian_moment(k: int, t: float) -> float:
    """``integral of w**k exp(-t w**2)`` over the real line."""
    if t <= 0:
        raise ValueError("t must be positive")
    if k % 2:
        return 0.0
    return math.exp(math.lgamma((k + 1) / 2) - (k + 1) / 2 * math.log(t))


def _even_moment_sqrt_pi(j: int) -> Fraction:
    """Rational ``c`` with ``Gamma((j+1)/2) = c * sqrt(pi)`` for even ``j``."""
    c = Fraction(1)
    for i in range(1, j, 2):
        c *= Fraction(i, 2)
    return c


# --- heat closed forms ----------------------------------------------------

@dataclass(frozen=True)
class HeatMonomial:
    coeff: Fraction
    r_pow: int
    t_half_pow: int
    cosh_pow: int
    sinh_pow: int


@dataclass(frozen=True)
class HeatClosedForm:
    """``exp(-gap t - r**2/4t) * pi**pi_power * sum(coeff r^p t^{-h/2} cosh^b / sinh^m)``."""

    dim: int
    gap: Fraction
    pi_power: Fraction
    terms: tuple[HeatMonomial, ...]

    def is_zero(self) -> bool:
        return not self.terms

    def _log_prefactor(self, r, t):
        return -float(self.gap) * t - r * r / (4.0 * t) + float(self.pi_power) * _LOG_PI

    def _float_terms(self, r, t):
        lr = np.log(np.where(r > 0, r, 1.0))
        lt, lc, ls = np.log(t), log_coth(r), log_sinh(r)
        logs, signs = [], []
        for m in self.terms:
            logs.append(math.log(abs(m.coeff)) + m.r_pow * lr - 0.5 * m.t_half_pow * lt
                        + m.cosh_pow * lc + (m.cosh_pow - m.sinh_pow) * ls)
            signs.append(np.full(r.shape, 1 if m.coeff > 0 else -1))
        return np.array(logs), np.array(signs)

    def _mp_sum(self, r, t, dps):
        with mpmath.workdps(dps):
            r, t = mpmath.mpf(r), mpmath.mpf(t)
            ch, sh = mpmath.cosh(r), mpmath.sinh(r)
            vals = [mpmath.mpf(m.coeff.numerator) / m.coeff.denominator * r ** m.r_pow
                    * t ** (-mpmath.mpf(m.t_half_pow) / 2) * ch ** m.cosh_pow / sh ** m.sinh_pow
                    for m in self.terms]
            s = mpmath.fsum(vals)
            a = mpmath.fsum(abs(v) for v in vals)
            return s, a

    def _mp_log(self, r, t, max_dps=4000):
        """Log-magnitude and sign of the bracket sum at one point, precision-adaptive."""
        r_eff = r if r > 0 else 1e-40
        dps = 30 if r > 0 else 30 + 45 * max(m.sinh_pow for m in self.terms)
        while True:
            s, a = self._mp_sum(r_eff, t, dps)
            if s == 0:
                lost = dps
            else:
                lost = float(mpmath.log10(a / abs(s)))
            if lost + 25 <= dps or dps >= max_dps:
                break
            dps = int(lost) + 40
        if s == 0:
            return -math.inf, 0
        return float(mpmath.log(abs(s))), int(mpmath.sign(s))

    def log_evaluate(self, r, t, cond_limit: float = 1e2) -> LogValue:
        """Evaluate in the log domain.

        Nodes where the monomial sum loses more than ``log10(cond_limit)``
        digits (small r, where the sum cancels), and the diagonal r = 0,
        are re-evaluated in extended precision.
        """
        r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
        if np.any(r < 0) or np.any(t <= 0):
            raise ValueError("need r >= 0 and t > 0")
        if self.is_zero():
            return LogValue(np.full(r.shape, -np.inf), np.zeros(r.shape, int))._squeeze()
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logs, signs = self._float_terms(r, t)
            log_s, sign, log_a = signed_logsumexp(logs, signs, axis=0)
            bad = (r == 0) | ~np.isfinite(log_s) | (log_a - log_s > math.log(cond_limit))
        log_s = np.array(log_s, dtype=float, ndmin=1)
        sign = np.array(sign, dtype=int, ndmin=1)
        flat_r, flat_t, flat_bad = r.ravel(), t.ravel(), np.ravel(bad)
        log_s, sign = log_s.ravel(), sign.ravel()
        for idx in np.flatnonzero(flat_bad):
            log_s[idx], sign[idx] = self._mp_log(float(flat_r[idx]), float(flat_t[idx]))
        log_s = log_s.reshape(r.shape) + self._log_prefactor(r, t)
        return LogValue(log_s, sign.reshape(r.shape))._squeeze()

    def evaluate(self, r, t):
        return self.log_evaluate(r, t).value

    def mp_evaluate(self, r, t, dps: int = 60):
        """Reference evaluation entirely in mpmath (slow; for tests and audits)."""
        s, _ = self._mp_sum(r, t, dps)
        with mpmath.workdps(dps):
            r, t = mpmath.mpf(r), mpmath.mpf(t)
            pre = mpmath.exp(-mpmath.mpf(self.gap.numerator) / self.gap.denominator * t
                             - r * r / (4 * t)) * mpmath.pi ** (mpmath.mpf(self.pi_power.numerator) / self.pi_power.denominator)
            return pre * s


def _collect_heat(pairs):
    acc = defaultdict(Fraction)
    for key, c in pairs:
        acc[key] += c
    return tuple(HeatMonomial(c, *key) for key, c in sorted(acc.items()) if c)


def contour_to_heat(expr: ResolventExpression) -> HeatClosedForm:
    """Exact heat kernel from an exact resolvent by the shifted-contour Gaussian integral.

    Writes ``lam = w - i r/2t`` in ``(i/2pi) int exp(-t lam^2) R(lam) 2 lam dlam``,
    expands ``(w - i r/2t)**p`` binomially and integrates term by term.
    """
    if not expr.normalized:
        raise ValueError("contour_to_heat needs a normalized resolvent expression")
    n = expr.dim
    gap = Fraction(n * n, 4)
    pi_power = Fraction(expr.pi_power - 1) + Fraction(1, 2)
    acc = defaultdict(QComplex)
    for term in expr.terms:
        P = term.lam_pow + 1
        base = term.coeff * I  # (i/2pi) * 2
        for j in range(0, P + 1):
            if j % 2:
                continue  # odd Gaussian moments vanish
            q = P - j
            c = base * (math.comb(P, j) * Fraction(1, 2 ** q) * _even_moment_sqrt_pi(j))
            c = c * _MINUS_I_POWERS[q % 4]
            key = (q, 2 * q + j + 1, term.cosh_pow, term.sinh_pow)
            acc[key] = acc[key] + c
    pairs = []
    for key, c in acc.items():
        if c.im != 0:
            raise AlgebraError(f"non-real heat coefficient {c} for monomial {key}")
        pairs.append((key, c.re))
    return HeatClosedForm(n, gap, pi_power, _collect_heat(pairs))


def differentiate_heat(form: HeatClosedForm, variable: str) -> HeatClosedForm:
    """Exact ``d/dt`` or ``d/dr`` of a closed form, keeping the same prefactor."""
    pairs = []
    if variable in ("time", "t"):
        for m in form.terms:
            key = (m.r_pow, m.t_half_pow, m.cosh_pow, m.sinh_pow)
            pairs.append((key, -form.gap * m.coeff))
            pairs.append(((m.r_pow + 2, m.t_half_pow + 4, m.cosh_pow, m.sinh_pow), m.coeff / 4))
            if m.t_half_pow:
                pairs.append(((m.r_pow, m.t_half_pow + 2, m.cosh_pow, m.sinh_pow),
                              -Fraction(m.t_half_pow, 2) * m.coeff))
    elif variable in ("radius", "r"):
        for m in form.terms:
            p, h, b, s = m.r_pow, m.t_half_pow, m.cosh_pow, m.sinh_pow
            pairs.append(((p + 1, h + 2, b, s), -m.coeff / 2))
            if p:
                pairs.append(((p - 1, h, b, s), p * m.coeff))
            if b:
                if s:
                    pairs.append(((p, h, b - 1, s - 1), b * m.coeff))
                else:
                    # sinh = cosh^2/sinh - 1/sinh keeps sinh_pow nonnegative
                    pairs.append(((p, h, b + 1, 1), b * m.coeff))
                    pairs.append(((p, h, b - 1, 1), -b * m.coeff))
            if s:
                pairs.append(((p, h, b + 1, s + 1), -s * m.coeff))
    else:
        raise ValueError("variable must be 'time' or 'radius'")
    return HeatClosedForm(form.dim, form.gap, form.pi_power, _collect_heat(pairs))


@lru_cache(maxsize=None)
def heat_closed_form(n: int) -> HeatClosedForm:
    """Cached ``contour_to_heat(resolvent_odd_dim(n))``."""
    return contour_to_heat(resolvent_odd_dim(n))
