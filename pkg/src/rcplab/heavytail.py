"""Waiting-time distributions in the basin of attraction of an alpha-stable law.

Two concrete families share the polynomial tail decay P(T > t) = L(t) t^-alpha
with L slowly varying:

* ``plain``: P(T > t) = (1+t)^-alpha exactly (shifted Pareto, L -> 1),
  invertible in closed form.
* ``logcorrected``: P(T > t) = (1+t)^-alpha * (log(e+t))^-kappa, a genuinely
  non-constant slowly varying correction; inverted numerically.

Samples beyond TIME_CAP = 1e300 are returned as +inf, a sentinel meaning
"beyond any horizon"; the simulation only ever needs order relations there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

TIME_CAP = 1e300
_Z_CAP = math.log1p(TIME_CAP)

PLAIN = "plain"
LOGCORRECTED = "logcorrected"


def _check_time(t, name="t"):
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"{name} must be finite and >= 0, got {t!r}")
    return t


@dataclass(frozen=True)
class HeavyTailSpec:
    """Cure waiting-time law with tail index alpha in (0, 1)."""

    alpha: float
    family: str = PLAIN
    kappa: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.family not in (PLAIN, LOGCORRECTED):
            raise ValueError(f"unknown family {self.family!r}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")

    def tail(self, t: float) -> float:
        """P(T > t)."""
        t = _check_time(t)
        base = (1.0 + t) ** (-self.alpha)
        if self.family == PLAIN:
            return base
        return base * math.log(math.e + t) ** (-self.kappa)

    def tail_many(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        base = (1.0 + t) ** (-self.alpha)
        if self.family == PLAIN:
            return base
        return base * np.log(np.e + t) ** (-self.kappa)

    def truncated_mean(self, t: float) -> float:
        """m(t), the integral of the tail over [0, t]."""
        t = _check_time(t)
        if t == 0.0:
            return 0.0
        a = self.alpha
        if self.family == PLAIN:
            return ((1.0 + t) ** (1.0 - a) - 1.0) / (1.0 - a)
        # piecewise over decades keeps the adaptive rule happy out to t ~ 1e10+
        total = 0.0
        lo = 0.0
        hi = min(1.0, t)
        while lo < t:
            val, err = integrate.quad(self.tail, lo, hi, epsrel=1e-10, epsabs=0, limit=200)
            if err > 1e-8 * max(abs(val), 1e-300):
                raise RuntimeError(
                    f"truncated_mean quadrature failed on [{lo}, {hi}]: "
                    f"value {val}, error estimate {err}"
                )
            total += val
            lo, hi = hi, min(hi * 10.0, t)
        return total

    def sample(self, u: float) -> float:
        """The unique t with tail(t) = u (inverse-transform sampling)."""
        u = float(u)
        if not 0.0 < u < 1.0:
            raise ValueError(f"u must lie in (0,1), got {u!r}")
        return float(self.sample_many(np.array([u]))[0])

    def sample_many(self, u: np.ndarray) -> np.ndarray:
        """Vectorized inverse tail; u = 0 maps to the +inf sentinel."""
        u = np.asarray(u, dtype=float)
        if self.family == PLAIN:
            with np.errstate(divide="ignore", over="ignore"):
                t = u ** (-1.0 / self.alpha) - 1.0
            return np.where(t > TIME_CAP, np.inf, t)
        return self._invert_logcorrected(u)

    def _invert_logcorrected(self, u: np.ndarray) -> np.ndarray:
        # bisection on z = log1p(t); log tail is strictly decreasing in z
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        with np.errstate(divide="ignore"):
            target = np.log(u)

        def logtail(z):
            t = np.expm1(z)
            return -self.alpha * z - self.kappa * np.log(np.log(np.e + t))

        lo = np.zeros_like(u)
        hi = np.full_like(u, _Z_CAP)
        beyond = target < logtail(hi)  # sample would exceed TIME_CAP
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            go_right = logtail(mid) > target
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        out = np.expm1(0.5 * (lo + hi))
        out = np.where(beyond, np.inf, out)
        return out[0] if scalar else out

    def conditional_survival(self, s: float, t: float) -> float:
        """P(T > s + t | T > s)."""
        s = _check_time(s, "s")
        t = _check_time(t, "t")
        return self.tail(s + t) / self.tail(s)


@dataclass(frozen=True)
class ExponentialRate:
    """Memoryless waiting-time law, used by the per-edge transmission clocks."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be > 0, got {self.rate}")

    def tail(self, t: float) -> float:
        return math.exp(-self.rate * _check_time(t))

    def tail_many(self, t: np.ndarray) -> np.ndarray:
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def truncated_mean(self, t: float) -> float:
        return -math.expm1(-self.rate * _check_time(t)) / self.rate

    def sample(self, u: float) -> float:
        u = float(u)
        if not 0.0 < u < 1.0:
            raise ValueError(f"u must lie in (0,1), got {u!r}")
        return -math.log(u) / self.rate

    def sample_many(self, u: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            t = -np.log(np.asarray(u, dtype=float)) / self.rate
        return np.where(t > TIME_CAP, np.inf, t)

    def conditional_survival(self, s: float, t: float) -> float:
        return self.tail(t)


def spec_from_config(family: str, alpha: float, kappa: float = 0.0) -> HeavyTailSpec:
    """Build a spec from the config-file fields dist.family/dist.alpha/dist.kappa."""
    return HeavyTailSpec(alpha=float(alpha), family=family.strip().lower(), kappa=float(kappa))
