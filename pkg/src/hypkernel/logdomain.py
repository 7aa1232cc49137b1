"""Signed log-domain numbers.

Heat kernels on hyperbolic space carry factors like exp(-r**2/4t - n r/2)
that underflow double precision long before the interesting regime ends,
so every evaluator in the package hands back a :class:`LogValue`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class LogValue:
    """A real number (or array of them) stored as ``sign * exp(log_magnitude)``.

    ``sign`` is 0 exactly when the value is zero, in which case
    ``log_magnitude`` is ``-inf``.
    """

    log_magnitude: np.ndarray | float
    sign: np.ndarray | int
    reduced_accuracy: bool = field(default=False, compare=False)

    @classmethod
    def from_value(cls, x) -> "LogValue":
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            logm = np.log(np.abs(x))
        out = cls(logm, np.sign(x).astype(int))
        return out._squeeze()

    @property
    def value(self):
        v = self.sign * np.exp(self.log_magnitude)
        return v if np.ndim(v) else float(v)

    def _squeeze(self) -> "LogValue":
        if np.ndim(self.log_magnitude) == 0:
            return LogValue(float(self.log_magnitude), int(self.sign), self.reduced_accuracy)
        return self

    def __mul__(self, other: "LogValue") -> "LogValue":
        return LogValue(
            np.add(self.log_magnitude, other.log_magnitude),
            np.multiply(self.sign, other.sign),
            self.reduced_accuracy or other.reduced_accuracy,
        )._squeeze()

    def __truediv__(self, other: "LogValue") -> "LogValue":
        return LogValue(
            np.subtract(self.log_magnitude, other.log_magnitude),
            np.multiply(self.sign, other.sign),
            self.reduced_accuracy or other.reduced_accuracy,
        )._squeeze()

    def scale(self, log_factor) -> "LogValue":
        """Multiply by ``exp(log_factor)``."""
        return LogValue(np.add(self.log_magnitude, log_factor), self.sign,
                        self.reduced_accuracy)._squeeze()

    def __abs__(self) -> "LogValue":
        return LogValue(self.log_magnitude, np.abs(self.sign), self.reduced_accuracy)._squeeze()


def signed_logsumexp(logs, signs, axis=0):
    """Return ``(log|S|, sign(S), log sum|terms|)`` for ``S = sum(sign*exp(log))``.

    The third output is the log of the absolute sum, used as the
    denominator of a condition-number estimate.
    """
    logs = np.asarray(logs, dtype=float)
    signs = np.asarray(signs, dtype=float)
    with np.errstate(invalid="ignore"):
        peak = np.max(np.where(signs != 0, logs, -np.inf), axis=axis, keepdims=True)
    safe_peak = np.where(np.isfinite(peak), peak, 0.0)
    scaled = signs * np.exp(logs - safe_peak)
    s = np.sum(scaled, axis=axis)
    a = np.sum(np.abs(scaled), axis=axis)
    peak = np.squeeze(safe_peak, axis=axis)
    with np.errstate(divide="ignore"):
        log_s = np.log(np.abs(s)) + peak
        log_a = np.log(a) + peak
    return log_s, np.sign(s).astype(int), log_a


def log_sinh(r):
    """log(sinh r) for r > 0, written with expm1 so it is accurate at both ends."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return r + np.log(-np.expm1(-2.0 * r)) - LOG2


def log_coth(r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.log1p(2.0 / np.expm1(2.0 * r))


def log_cosh(r):
    r = np.abs(np.asarray(r, dtype=float))
    return r + np.log1p(np.exp(-2.0 * r)) - LOG2
