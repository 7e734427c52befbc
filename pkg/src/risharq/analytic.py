"""Closed-form outage results for Type-I and chase-combining HARQ.

Per-round and summed channel gains follow noncentral-chi-square-type laws
whose CDFs are Poisson-weighted sums of regularized incomplete gammas;
everything here reduces to ``specfun.poisson_gamma_series`` plus algebra.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelStats
from .errors import DomainError, FitError
from .specfun import TruncationPolicy, poisson_gamma_series

__all__ = [
    "HarqScheme",
    "HarqParams",
    "CurvePoint",
    "OutageCurve",
    "DiversityFit",
    "outage_threshold",
    "gain_cdf",
    "sum_gain_cdf",
    "outage_type1",
    "outage_cc",
    "outage_probability",
    "asymptotic_outage",
    "snr_offset_factor",
    "coding_gain",
    "fit_diversity",
    "exact_outage_curve",
    "asymptotic_outage_curve",
]

_CURVE_KINDS = ("exact", "asymptotic", "monte-carlo")
_FIT_FLOOR = 1e-14  # outage values below the double-precision noise floor are excluded


class HarqScheme(enum.Enum):
    """Retransmission combining discipline."""

    TYPE_I = "type1"
    CHASE_COMBINING = "cc"

    @classmethod
    def parse(cls, text: str) -> "HarqScheme":
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "type1": cls.TYPE_I,
            "typei": cls.TYPE_I,
            "cc": cls.CHASE_COMBINING,
            "chasecombining": cls.CHASE_COMBINING,
            "harqcc": cls.CHASE_COMBINING,
        }
        if key not in aliases:
            raise DomainError(f"unknown HARQ scheme {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class HarqParams:
    """Scheme, round budget, target rate and the SNR grid of interest."""

    scheme: HarqScheme
    max_rounds: int
    rate: float
    snr_grid: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.scheme, HarqScheme):
            raise DomainError(f"scheme must be a HarqScheme, got {self.scheme!r}")
        if not isinstance(self.max_rounds, int) or self.max_rounds < 1:
            raise DomainError(f"max_rounds must be a positive integer, got {self.max_rounds!r}")
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise DomainError(f"rate must be positive, got {self.rate!r}")
        grid = tuple(float(r) for r in self.snr_grid)
        for rho in grid:
            if not (rho > 0.0 and math.isfinite(rho)):
                raise DomainError(f"SNR grid entries must be positive, got {rho!r}")
        object.__setattr__(self, "snr_grid", grid)


@dataclass(frozen=True)
class CurvePoint:
    """One (SNR, outage) sample with provenance."""

    rho: float
    p_out: float
    kind: str
    stderr: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _CURVE_KINDS:
            raise DomainError(f"kind must be one of {_CURVE_KINDS}, got {self.kind!r}")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise DomainError(f"rho must be positive, got {self.rho!r}")
        if not (0.0 <= self.p_out <= 1.0):
            raise DomainError(f"p_out must lie in [0, 1], got {self.p_out!r}")
        if self.kind == "monte-carlo":
            if self.stderr is None or self.stderr < 0.0:
                raise DomainError("monte-carlo points require a nonnegative stderr")
        elif self.stderr is not None:
            raise DomainError("stderr is only meaningful for monte-carlo points")


@dataclass(frozen=True)
class OutageCurve:
    """Outage versus SNR, sorted by SNR."""

    entries: tuple[CurvePoint, ...]

    def __post_init__(self) -> None:
        pts = tuple(self.entries)
        for prev, cur in zip(pts, pts[1:]):
            if cur.rho <= prev.rho:
                raise DomainError("curve points must be strictly increasing in rho")
        object.__setattr__(self, "entries", pts)

    @property
    def rhos(self) -> np.ndarray:
        return np.array([p.rho for p in self.entries])

    @property
    def p_outs(self) -> np.ndarray:
        return np.array([p.p_out for p in self.entries])


@dataclass(frozen=True)
class DiversityFit:
    """Least-squares log-log slope of an outage curve.

    ``slope`` is the raw fitted slope of log10(p_out) against log10(rho)
    (negative for a decaying curve); ``d`` is the diversity-order estimate
    -slope.
    """

    slope: float
    intercept: float
    fit_window: tuple[float, float]
    residual: float
    n_points: int

    @property
    def d(self) -> float:
        return -self.slope


def outage_threshold(rate: float, rho: float) -> float:
    """Gain threshold (2^R - 1) / rho below which a single round is in outage."""
    if not (rate > 0.0 and math.isfinite(rate)):
        raise DomainError(f"rate must be positive, got {rate!r}")
    if not (rho > 0.0 and math.isfinite(rho)):
        raise DomainError(f"rho must be positive, got {rho!r}")
    return (2.0 ** rate - 1.0) / rho


def _check_stats(stats: ChannelStats) -> None:
    if stats.psi_gnlos <= 0.0:
        raise DomainError("channel gain CDF requires psi_gnlos > 0")


def gain_cdf(stats: ChannelStats, x: float, policy: TruncationPolicy | None = None) -> float:
    """CDF of the per-round channel gain |h|^2 at x."""
    _check_stats(stats)
    if not (x >= 0.0 and math.isfinite(x)):
        raise DomainError(f"x must be >= 0, got {x!r}")
    xi_1 = stats.psi_glos / stats.psi_gnlos
    return poisson_gamma_series(xi_1, 1.0, x / stats.psi_gnlos, policy)


def sum_gain_cdf(
    stats: ChannelStats, rounds: int, x: float, policy: TruncationPolicy | None = None
) -> float:
    """CDF of the summed gain over ``rounds`` independent HARQ rounds at x."""
    _check_stats(stats)
    if not isinstance(rounds, int) or rounds < 1:
        raise DomainError(f"rounds must be a positive integer, got {rounds!r}")
    if not (x >= 0.0 and math.isfinite(x)):
        raise DomainError(f"x must be >= 0, got {x!r}")
    xi = stats.xi(rounds)
    return poisson_gamma_series(xi, float(rounds), x / stats.psi_gnlos, policy)


def outage_type1(
    stats: ChannelStats,
    harq: HarqParams,
    rho: float,
    policy: TruncationPolicy | None = None,
) -> float:
    """Exact Type-I outage: every round fails independently."""
    if harq.scheme is not HarqScheme.TYPE_I:
        raise DomainError(f"outage_type1 requires a Type-I parameter set, got {harq.scheme}")
    psi = outage_threshold(harq.rate, rho)
    return gain_cdf(stats, psi, policy) ** harq.max_rounds


def outage_cc(
    stats: ChannelStats,
    harq: HarqParams,
    rho: float,
    policy: TruncationPolicy | None = None,
) -> float:
    """Exact chase-combining outage: the summed gain misses the threshold."""
    if harq.scheme is not HarqScheme.CHASE_COMBINING:
        raise DomainError(f"outage_cc requires a chase-combining parameter set, got {harq.scheme}")
    psi = outage_threshold(harq.rate, rho)
    return sum_gain_cdf(stats, harq.max_rounds, psi, policy)


def outage_probability(
    stats: ChannelStats,
    harq: HarqParams,
    rho: float,
    policy: TruncationPolicy | None = None,
) -> float:
    """Dispatch to the exact outage formula matching ``harq.scheme``."""
    if harq.scheme is HarqScheme.TYPE_I:
        return outage_type1(stats, harq, rho, policy)
    return outage_cc(stats, harq, rho, policy)


def asymptotic_outage(stats: ChannelStats, harq: HarqParams, rho: float) -> float:
    """High-SNR outage asymptote; not clamped, may exceed 1 at low SNR."""
    _check_stats(stats)
    if not (rho > 0.0 and math.isfinite(rho)):
        raise DomainError(f"rho must be positive, got {rho!r}")
    rounds = harq.max_rounds
    psi = outage_threshold(harq.rate, rho)
    value = math.exp(-rounds * stats.psi_glos / stats.psi_gnlos) * (
        psi / stats.psi_gnlos
    ) ** rounds
    if harq.scheme is HarqScheme.CHASE_COMBINING:
        value /= math.gamma(rounds + 1.0)
    return value


def snr_offset_factor(stats: ChannelStats, rounds: int) -> float:
    """Scheme-independent prefactor e^{-L psi_glos/psi_gnlos} psi_gnlos^{-L}.

    This is the only route through which the phase shifts touch the
    asymptote, and it is strictly decreasing in psi_glos.
    """
    _check_stats(stats)
    if not isinstance(rounds, int) or rounds < 1:
        raise DomainError(f"rounds must be a positive integer, got {rounds!r}")
    return math.exp(-rounds * stats.psi_glos / stats.psi_gnlos) * stats.psi_gnlos ** (
        -rounds
    )


def coding_gain(scheme: HarqScheme, rounds: int, rate: float) -> float:
    """Modulation-and-coding gain of the asymptote.

    Type-I: 1/(2^R - 1).  Chase combining gains an extra Gamma(L+1)^{1/L},
    which is >= 1 with equality only at L = 1.
    """
    if not isinstance(rounds, int) or rounds < 1:
        raise DomainError(f"rounds must be a positive integer, got {rounds!r}")
    if not (rate > 0.0 and math.isfinite(rate)):
        raise DomainError(f"rate must be positive, got {rate!r}")
    base = 1.0 / (2.0 ** rate - 1.0)
    if scheme is HarqScheme.CHASE_COMBINING:
        return math.gamma(rounds + 1.0) ** (1.0 / rounds) * base
    return base


def fit_diversity(curve: OutageCurve, window: tuple[float, float]) -> DiversityFit:
    """Least-squares log10(p_out) vs log10(rho) slope over an SNR window.

    Points with p_out below the 1e-14 numeric floor (or exactly zero) are
    excluded; at least three usable points are required.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (0.0 < lo < hi):
        raise FitError(f"invalid fit window {window!r}")
    xs, ys = [], []
    for point in curve.entries:
        if lo <= point.rho <= hi and point.p_out > _FIT_FLOOR:
            xs.append(math.log10(point.rho))
            ys.append(math.log10(point.p_out))
    if len(xs) < 3:
        raise FitError(
            f"need >= 3 usable points in window {window!r}, found {len(xs)}"
        )
    x = np.asarray(xs)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return DiversityFit(
        slope=float(slope),
        intercept=float(intercept),
        fit_window=(lo, hi),
        residual=residual,
        n_points=len(xs),
    )


def exact_outage_curve(
    stats: ChannelStats, harq: HarqParams, policy: TruncationPolicy | None = None
) -> OutageCurve:
    """Exact outage at every SNR in ``harq.snr_grid``."""
    points = tuple(
        CurvePoint(rho=rho, p_out=outage_probability(stats, harq, rho, policy), kind="exact")
        for rho in harq.snr_grid
    )
    return OutageCurve(points)


def asymptotic_outage_curve(stats: ChannelStats, harq: HarqParams) -> OutageCurve:
    """Asymptotic outage over the grid, clipped at 1 so the curve stays a probability."""
    points = tuple(
        CurvePoint(
            rho=rho,
            p_out=min(asymptotic_outage(stats, harq, rho), 1.0),
            kind="asymptotic",
        )
        for rho in harq.snr_grid
    )
    return OutageCurve(points)
