"""Stochastic oracle for the analytic outage formulas.

Samples the fading model directly (fixed LoS phasors, fresh complex
Gaussian diffuse terms per round), accumulates mutual information per
scheme and counts decoding outages.  The math here deliberately repeats
the channel algebra from the raw configuration instead of reusing
``channel.compute_stats``, so the two routes stay independent checks of
each other.

Reproducibility contract: trials are split into fixed-size chunks and
chunk ``c`` draws from a Philox counter-based stream keyed by
``(seed, c)``.  Results for a fixed (seed, trials, chunk_size) are
bit-identical no matter how many workers process the chunks, because
outage counts are integers merged by addition.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import CurvePoint, HarqScheme, OutageCurve
from .channel import NetworkConfig, PhaseConfig
from .errors import ConfigError, DomainError

__all__ = [
    "DEFAULT_TRIALS",
    "DEFAULT_CHUNK_SIZE",
    "SimulationPlan",
    "OutageEstimate",
    "sample_equivalent_channel",
    "accumulated_information",
    "estimate_outage",
    "simulate_outage_curves",
    "chunk_rng",
]

DEFAULT_TRIALS = 1_000_000
DEFAULT_CHUNK_SIZE = 65_536
_UINT64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SimulationPlan:
    """Everything a single outage estimate depends on."""

    trials: int = DEFAULT_TRIALS
    seed: int = 0
    max_rounds: int = 1
    scheme: HarqScheme = HarqScheme.TYPE_I
    rate: float = 1.0
    rho: float = 1.0
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self) -> None:
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed <= _UINT64_MASK):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not isinstance(self.max_rounds, int) or self.max_rounds < 1:
            raise ConfigError(f"max_rounds must be a positive integer, got {self.max_rounds!r}")
        if not isinstance(self.scheme, HarqScheme):
            raise ConfigError(f"scheme must be a HarqScheme, got {self.scheme!r}")
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ConfigError(f"rate must be positive, got {self.rate!r}")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise ConfigError(f"rho must be positive, got {self.rho!r}")
        if not isinstance(self.chunk_size, int) or self.chunk_size < 1:
            raise ConfigError(f"chunk_size must be a positive integer, got {self.chunk_size!r}")


@dataclass(frozen=True)
class OutageEstimate:
    """Empirical outage fraction with its binomial standard error."""

    p_hat: float
    stderr: float
    trials: int
    seed: int


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Counter-based generator for one chunk; streams never overlap."""
    key = np.array([seed & _UINT64_MASK, chunk_index & _UINT64_MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    # circularly symmetric, unit variance: each component N(0, 1/2)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def _sd_coefficients(net: NetworkConfig) -> tuple[complex, float]:
    # direct link: sqrt(beta)(sqrt(k/(k+1)) e^{j phi} + sqrt(1/(k+1)) w)
    d = net.direct
    kappa = d.kappa_sd
    if math.isinf(kappa):
        los_frac, nlos_frac = 1.0, 0.0
    else:
        los_frac = kappa / (kappa + 1.0)
        nlos_frac = 1.0 / (kappa + 1.0)
    los = math.sqrt(d.beta_sd * los_frac) * np.exp(1j * d.los_phase_sd)
    nlos_std = math.sqrt(d.beta_sd * nlos_frac)
    return complex(los), nlos_std


def _element_coefficients(
    net: NetworkConfig, phases: PhaseConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Per reflecting element: deterministic cascade term and diffuse scale.

    Element (k, n) contributes sqrt(beta_rd)(sqrt(k/(k+1)) e^{j phi_rd}
    + sqrt(1/(k+1)) w) * e^{j theta} * sqrt(beta_sr) e^{j phi_sr}; the
    reflection and feed phasors multiply both the LoS and diffuse parts.
    """
    phases.validate_against(net)
    los_terms: list[complex] = []
    nlos_terms: list[complex] = []
    for panel, thetas in zip(net.panels, phases.thetas):
        kappa = panel.kappa_rd
        if math.isinf(kappa):
            los_frac, nlos_frac = 1.0, 0.0
        else:
            los_frac = kappa / (kappa + 1.0)
            nlos_frac = 1.0 / (kappa + 1.0)
        rd_los_amp = math.sqrt(panel.beta_rd * los_frac)
        rd_nlos_std = math.sqrt(panel.beta_rd * nlos_frac)
        sr_amp = math.sqrt(panel.beta_sr)
        for phi_sr, phi_rd, theta in zip(panel.los_phases_sr, panel.los_phases_rd, thetas):
            cascade = sr_amp * np.exp(1j * (theta + phi_sr))
            los_terms.append(complex(rd_los_amp * np.exp(1j * phi_rd) * cascade))
            nlos_terms.append(complex(rd_nlos_std * cascade))
    return np.asarray(los_terms, dtype=complex), np.asarray(nlos_terms, dtype=complex)


def _draw_channels(
    sd_los: complex,
    sd_nlos_std: float,
    elem_los: np.ndarray,
    elem_nlos: np.ndarray,
    rng: np.random.Generator,
    n_trials: int,
    rounds: int,
) -> np.ndarray:
    """(rounds, n_trials) equivalent-channel draws with a fixed stream layout.

    Rounds-major layout: a run with a larger round budget consumes the
    same stream prefix for its earlier rounds, so estimates for nested L
    share draws round for round.
    """
    n_sources = 1 + elem_los.size
    noise = _complex_normal(rng, (rounds, n_trials, n_sources))
    h = sd_los + complex(np.sum(elem_los))
    h = h + sd_nlos_std * noise[:, :, 0]
    if elem_nlos.size:
        h = h + noise[:, :, 1:] @ elem_nlos
    return h


def sample_equivalent_channel(
    net: NetworkConfig,
    phases: PhaseConfig,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw the equivalent channel for one HARQ round.

    Returns a scalar complex for ``size=None`` or an array of ``size``
    independent draws.  The LoS phasors are fixed by the configuration;
    only the diffuse components are random.
    """
    sd_los, sd_nlos_std = _sd_coefficients(net)
    elem_los, elem_nlos = _element_coefficients(net, phases)
    n = 1 if size is None else int(size)
    if n < 1:
        raise DomainError(f"size must be >= 1, got {size!r}")
    draws = _draw_channels(sd_los, sd_nlos_std, elem_los, elem_nlos, rng, n, 1)[0]
    return complex(draws[0]) if size is None else draws


def accumulated_information(gains, scheme: HarqScheme) -> float:
    """Mutual information accumulated over the received rounds.

    ``gains`` holds the per-round received SNRs rho*|h_l|^2.  Type-I decodes
    the best single round; chase combining adds SNRs before decoding.
    """
    gains = [float(g) for g in gains]
    if not gains:
        raise DomainError("at least one HARQ round is required")
    if any(g < 0.0 or not math.isfinite(g) for g in gains):
        raise DomainError("per-round SNRs must be finite and nonnegative")
    if scheme is HarqScheme.TYPE_I:
        return math.log2(1.0 + max(gains))
    return math.log2(1.0 + math.fsum(gains))


def _chunk_ranges(trials: int, chunk_size: int):
    for chunk_index, start in enumerate(range(0, trials, chunk_size)):
        yield chunk_index, min(chunk_size, trials - start)


def _count_outages_chunk(
    coeffs,
    seed: int,
    chunk_index: int,
    n_trials: int,
    rounds: int,
    thresholds: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Outage counts (type1, cc) against each gain threshold, one chunk."""
    sd_los, sd_nlos_std, elem_los, elem_nlos = coeffs
    rng = chunk_rng(seed, chunk_index)
    h = _draw_channels(sd_los, sd_nlos_std, elem_los, elem_nlos, rng, n_trials, rounds)
    gains = np.abs(h) ** 2
    best = np.sort(gains.max(axis=0))
    total = np.sort(gains.sum(axis=0))
    # outage <=> accumulated information < R <=> decisive gain < (2^R - 1)/rho,
    # strictly, hence side="left"
    counts_type1 = np.searchsorted(best, thresholds, side="left")
    counts_cc = np.searchsorted(total, thresholds, side="left")
    return counts_type1.astype(np.int64), counts_cc.astype(np.int64)


def _run_chunks(
    net: NetworkConfig,
    phases: PhaseConfig,
    trials: int,
    seed: int,
    chunk_size: int,
    rounds: int,
    thresholds: np.ndarray,
    workers: int,
) -> tuple[np.ndarray, np.ndarray]:
    sd_los, sd_nlos_std = _sd_coefficients(net)
    elem_los, elem_nlos = _element_coefficients(net, phases)
    coeffs = (sd_los, sd_nlos_std, elem_los, elem_nlos)
    jobs = list(_chunk_ranges(trials, chunk_size))

    def work(job):
        chunk_index, n = job
        return _count_outages_chunk(coeffs, seed, chunk_index, n, rounds, thresholds)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]
    # integer merge: order of chunks cannot affect the totals
    counts_type1 = np.sum([r[0] for r in results], axis=0, dtype=np.int64)
    counts_cc = np.sum([r[1] for r in results], axis=0, dtype=np.int64)
    return counts_type1, counts_cc


def estimate_outage(
    net: NetworkConfig,
    phases: PhaseConfig,
    plan: SimulationPlan,
    workers: int = 1,
) -> OutageEstimate:
    """Empirical outage probability for one (scheme, rate, rho) operating point."""
    threshold = np.array([(2.0 ** plan.rate - 1.0) / plan.rho])
    counts_type1, counts_cc = _run_chunks(
        net,
        phases,
        plan.trials,
        plan.seed,
        plan.chunk_size,
        plan.max_rounds,
        threshold,
        workers,
    )
    count = counts_type1[0] if plan.scheme is HarqScheme.TYPE_I else counts_cc[0]
    p_hat = count / plan.trials
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / plan.trials)
    return OutageEstimate(p_hat=float(p_hat), stderr=stderr, trials=plan.trials, seed=plan.seed)


def simulate_outage_curves(
    net: NetworkConfig,
    phases: PhaseConfig,
    rho_grid,
    max_rounds: int,
    rate: float,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
) -> dict[HarqScheme, OutageCurve]:
    """Monte-Carlo outage curves for both schemes on shared channel draws.

    Sharing draws keeps the curves trial-wise consistent: chase combining
    can never show an outage that Type-I survives, and each curve is
    monotone in SNR by construction rather than only in expectation.
    """
    rho_grid = [float(r) for r in rho_grid]
    if not rho_grid or any(r <= 0.0 or not math.isfinite(r) for r in rho_grid):
        raise DomainError("rho_grid must be nonempty with positive entries")
    if sorted(rho_grid) != rho_grid:
        raise DomainError("rho_grid must be sorted ascending")
    # reuse the plan validation for the shared fields; rho varies per point
    plan = SimulationPlan(
        trials=trials,
        seed=seed,
        max_rounds=max_rounds,
        rate=rate,
        chunk_size=chunk_size,
    )
    thresholds = np.array([(2.0 ** rate - 1.0) / rho for rho in rho_grid])
    counts_type1, counts_cc = _run_chunks(
        net, phases, plan.trials, plan.seed, plan.chunk_size, plan.max_rounds,
        thresholds, workers,
    )
    curves: dict[HarqScheme, OutageCurve] = {}
    for scheme, counts in (
        (HarqScheme.TYPE_I, counts_type1),
        (HarqScheme.CHASE_COMBINING, counts_cc),
    ):
        points = []
        for rho, count in zip(rho_grid, counts):
            p_hat = count / trials
            stderr = math.sqrt(p_hat * (1.0 - p_hat) / trials)
            points.append(
                CurvePoint(rho=rho, p_out=float(p_hat), kind="monte-carlo", stderr=stderr)
            )
        curves[scheme] = OutageCurve(tuple(points))
    return curves
