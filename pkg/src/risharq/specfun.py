"""Series numerics behind the outage formulas.

Provides the regularized lower incomplete gamma function, log-domain
Poisson weights, and certified truncation of Poisson-weighted gamma
series of the form

    S = sum_{i>=0} PoissonWeight(xi, i) * P(a0 + i, y),

which is the shape every channel-gain CDF in this package takes.  All
functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

from .errors import DomainError, TruncationError

__all__ = [
    "NumericsWarning",
    "TruncationPolicy",
    "DEFAULT_POLICY",
    "reg_lower_gamma",
    "log_poisson_weight",
    "poisson_gamma_tail_bound",
    "poisson_gamma_series",
    "adaptive_series_order",
]

_LN_SQRT_2PI = 0.9189385332046727417803297364056176398
# Stirling series coefficients for lgamma(a) - (a-1/2)ln(a) + a - ln(sqrt(2*pi)),
# in powers of 1/a^2 (leading factor 1/a applied separately).
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
)
_STIRLING_MIN_A = 30.0  # below this the naive exponent has no cancellation issue
_EPS = 2.220446049250313e-16
_FPMIN = 1e-300
_MAX_GAMMA_ITER = 10_000_000
_MAX_SERIES_ORDER = 100_000  # hard cap for adaptive truncation
_CLAMP_DIAGNOSTIC = 1e-9


class NumericsWarning(UserWarning):
    """Emitted when a probability sum overshoots [0, 1] beyond round-off."""


@dataclass(frozen=True)
class TruncationPolicy:
    """How to truncate the infinite Poisson-weighted gamma series.

    ``fixed`` sums exactly ``fixed_order + 1`` terms (i = 0 .. fixed_order).
    ``adaptive`` keeps adding terms until the certified remainder bound
    drops below ``tail_tolerance`` (absolute, in probability).
    """

    mode: Literal["fixed", "adaptive"] = "adaptive"
    fixed_order: int = 50
    tail_tolerance: float = 1e-12

    def __post_init__(self) -> None:
        if self.mode not in ("fixed", "adaptive"):
            raise DomainError(f"unknown truncation mode {self.mode!r}")
        if not isinstance(self.fixed_order, int) or self.fixed_order < 0:
            raise DomainError("fixed_order must be a nonnegative integer")
        if not (0.0 < self.tail_tolerance < 1.0):
            raise DomainError("tail_tolerance must lie in (0, 1)")

    @classmethod
    def fixed(cls, order: int = 50) -> "TruncationPolicy":
        return cls(mode="fixed", fixed_order=order)

    @classmethod
    def adaptive(cls, tail_tolerance: float = 1e-12) -> "TruncationPolicy":
        return cls(mode="adaptive", tail_tolerance=tail_tolerance)


DEFAULT_POLICY = TruncationPolicy()


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def _log1p_minus_x(delta: float, ratio: float) -> float:
    # log(1+delta) - delta without cancellation, where ratio == 1 + delta is
    # known exactly; the direct difference loses all significance for
    # |delta| << 1, while log1p(delta) loses it for delta near -1.
    if delta < -0.7:
        return math.log(ratio) - delta
    if abs(delta) > 0.5:
        return math.log1p(delta) - delta
    total = 0.0
    term = -delta * delta  # (-1)^(k+1) delta^k, starting at k = 2
    k = 2
    while True:
        contrib = term / k
        total += contrib
        if abs(contrib) < abs(total) * _EPS or contrib == 0.0:
            return total
        term = -term * delta
        k += 1


def _stirling_correction(a: float) -> float:
    # lgamma(a) - [(a - 1/2) ln a - a + ln sqrt(2 pi)] for a >= _STIRLING_MIN_A
    inv = 1.0 / a
    inv2 = inv * inv
    acc = 0.0
    power = inv
    for coeff in _STIRLING:
        acc += coeff * power
        power *= inv2
    return acc


def _log_prefactor(a: float, x: float) -> float:
    # log of x^a e^{-x} / Gamma(a).  For large a the naive form suffers
    # catastrophic cancellation between a*ln(x), x and lgamma(a); rewrite
    # around the mode x = a using Stirling's expansion.
    if a < _STIRLING_MIN_A:
        return a * math.log(x) - x - math.lgamma(a)
    delta = (x - a) / a
    return (
        a * _log1p_minus_x(delta, x / a)
        + 0.5 * math.log(a)
        - _LN_SQRT_2PI
        - _stirling_correction(a)
    )


def _lower_series(a: float, x: float, log_prefactor: float) -> float:
    # P(a, x) = prefactor / a * sum_{n>=0} prod_{m<=n} x/(a+m); valid x < a+1.
    term = 1.0
    total = 1.0
    denom = a
    for _ in range(_MAX_GAMMA_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if term < total * _EPS:
            return math.exp(log_prefactor + math.log(total) - math.log(a))
    raise TruncationError(f"incomplete gamma series failed to converge (a={a}, x={x})")


def _upper_continued_fraction(a: float, x: float, log_prefactor: float) -> float:
    # Q(a, x) via the modified Lentz continued fraction; valid x >= a+1.
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_GAMMA_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        ratio = d * c
        h *= ratio
        if abs(ratio - 1.0) < _EPS:
            return math.exp(log_prefactor + math.log(h))
    raise TruncationError(
        f"incomplete gamma continued fraction failed to converge (a={a}, x={x})"
    )


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a)."""
    a = _require_finite("a", a)
    x = _require_finite("x", x)
    if a <= 0.0:
        raise DomainError(f"shape a must be positive, got {a}")
    if x < 0.0:
        raise DomainError(f"argument x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    log_pref = _log_prefactor(a, x)
    if x < a + 1.0:
        if log_pref - math.log(a) < -745.0:  # result underflows double range
            return 0.0
        return min(_lower_series(a, x, log_pref), 1.0)
    if log_pref < -745.0:
        return 1.0
    return max(1.0 - _upper_continued_fraction(a, x, log_pref), 0.0)


def log_poisson_weight(xi: float, i: int) -> float:
    """Natural log of the Poisson(xi) mass at i, safe for xi and i in the hundreds."""
    xi = float(xi)
    if math.isnan(xi) or xi < 0.0:
        raise DomainError(f"Poisson mean xi must be >= 0, got {xi!r}")
    if not math.isfinite(xi):
        raise DomainError("Poisson mean xi must be finite")
    if not isinstance(i, (int,)) or isinstance(i, bool):
        raise DomainError(f"index i must be an integer, got {i!r}")
    if i < 0:
        raise DomainError(f"index i must be >= 0, got {i}")
    if xi == 0.0:
        return 0.0 if i == 0 else -math.inf
    return -xi + i * math.log(xi) - math.lgamma(i + 1.0)


def poisson_gamma_tail_bound(xi: float, a: float, x: float, m: int) -> float:
    """Upper bound on sum_{i>m} PoissonWeight(xi, i) * P(a + i, x).

    P(a + i, x) is nonincreasing in i, so every tail term is at most
    P(a + m + 1, x); the tail therefore cannot exceed the Poisson mass
    beyond m times that value.  The mass itself is exactly P(m + 1, xi).
    """
    xi = float(xi)
    if math.isnan(xi) or xi < 0.0:
        raise DomainError(f"Poisson mean xi must be >= 0, got {xi!r}")
    if not isinstance(m, int) or isinstance(m, bool) or m < 0:
        raise DomainError(f"truncation order m must be a nonnegative integer, got {m!r}")
    if xi == 0.0:
        return 0.0
    return reg_lower_gamma(m + 1.0, xi) * reg_lower_gamma(a + m + 1.0, x)


def _series_impl(
    xi: float, a0: float, y: float, policy: TruncationPolicy
) -> tuple[float, int]:
    if y == 0.0:
        return 0.0, 0
    terms: list[float] = []
    if policy.mode == "fixed":
        for i in range(policy.fixed_order + 1):
            weight = math.exp(log_poisson_weight(xi, i))
            terms.append(weight * reg_lower_gamma(a0 + i, y))
        return math.fsum(terms), policy.fixed_order

    tol = policy.tail_tolerance
    cum_weight = 0.0
    for i in range(_MAX_SERIES_ORDER + 1):
        p_i = reg_lower_gamma(a0 + i, y)
        if i > 0 and (1.0 - cum_weight) * p_i <= tol:
            # cheap trigger passed; certify with the exact Poisson tail mass
            if reg_lower_gamma(float(i), xi) * p_i <= tol:
                return math.fsum(terms), i - 1
        weight = math.exp(log_poisson_weight(xi, i))
        terms.append(weight * p_i)
        cum_weight += weight
    raise TruncationError(
        f"series tail bound not met within {_MAX_SERIES_ORDER} terms "
        f"(xi={xi}, a0={a0}, y={y}, tol={tol})"
    )


def poisson_gamma_series(
    xi: float, a0: float, y: float, policy: TruncationPolicy | None = None
) -> float:
    """Evaluate sum_i PoissonWeight(xi, i) * P(a0 + i, y), truncated per policy.

    The result is a probability and is clamped to [0, 1]; overshoot beyond
    round-off (1e-9) indicates a numerics problem and emits NumericsWarning.
    """
    xi = _require_finite("xi", xi)
    a0 = _require_finite("a0", a0)
    y = _require_finite("y", y)
    if xi < 0.0:
        raise DomainError(f"noncentrality xi must be >= 0, got {xi}")
    if a0 <= 0.0:
        raise DomainError(f"base shape a0 must be positive, got {a0}")
    if y < 0.0:
        raise DomainError(f"argument y must be >= 0, got {y}")
    value, _ = _series_impl(xi, a0, y, policy or DEFAULT_POLICY)
    if value > 1.0 + _CLAMP_DIAGNOSTIC or value < -_CLAMP_DIAGNOSTIC:
        warnings.warn(
            f"series value {value!r} clamped to [0, 1]; overshoot exceeds 1e-9",
            NumericsWarning,
            stacklevel=2,
        )
    return min(max(value, 0.0), 1.0)


def adaptive_series_order(
    xi: float, a0: float, y: float, tail_tolerance: float = 1e-12
) -> int:
    """Smallest truncation order m whose certified tail bound is <= tail_tolerance."""
    policy = TruncationPolicy.adaptive(tail_tolerance)
    xi = _require_finite("xi", xi)
    a0 = _require_finite("a0", a0)
    y = _require_finite("y", y)
    if xi < 0.0 or a0 <= 0.0 or y < 0.0:
        raise DomainError("invalid series parameters")
    _, order = _series_impl(xi, a0, y, policy)
    return order
