"""Outage-minimizing phase shifts.

The LoS power is the squared modulus of a phasor sum whose per-element
amplitudes are fixed and nonnegative, so the maximizer simply rotates
every reflected phasor onto the direct LoS phasor.  The triangle
inequality makes that choice globally optimal; no search is involved,
and the achieved value can be certified against the amplitude-sum bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import HarqParams, OutageCurve, exact_outage_curve
from .channel import NetworkConfig, PhaseConfig, compute_stats, wrap_phase
from .errors import DegenerateNetworkError
from .specfun import TruncationPolicy

__all__ = [
    "DEFAULT_FIXED_PHASE",
    "PhaseSolution",
    "optimal_phases",
    "compare_strategies",
]

DEFAULT_FIXED_PHASE = math.pi / 3.0  # baseline constant setting used in comparisons
_CERTIFICATE_RTOL = 1e-10


@dataclass(frozen=True)
class PhaseSolution:
    """Closed-form optimum with its optimality certificate."""

    phases: PhaseConfig
    psi_glos_achieved: float
    upper_bound: float
    gap: float

    def __post_init__(self) -> None:
        if self.upper_bound > 0.0 and self.gap > _CERTIFICATE_RTOL * self.upper_bound:
            raise DegenerateNetworkError(
                f"alignment failed its certificate: gap {self.gap!r} vs bound {self.upper_bound!r}"
            )


def optimal_phases(net: NetworkConfig) -> PhaseSolution:
    """Align every reflected LoS phasor with the direct one.

    Each element's optimal shift cancels its own feed and drop LoS phases
    and adds the direct-link phase, making all terms of the LoS sum
    collinear.  When the direct LoS amplitude vanishes the alignment
    target is arbitrary; phase zero is used so the result stays
    deterministic.
    """
    if net.total_elements == 0:
        raise DegenerateNetworkError("no reflecting elements to optimize")
    direct = net.direct
    target = direct.los_phase_sd if direct.los_amplitude > 0.0 else 0.0
    thetas = tuple(
        tuple(
            wrap_phase(target - phi_sr - phi_rd)
            for phi_sr, phi_rd in zip(panel.los_phases_sr, panel.los_phases_rd)
        )
        for panel in net.panels
    )
    phases = PhaseConfig(thetas)
    achieved = compute_stats(net, phases).psi_glos
    amplitude_sum = direct.los_amplitude + sum(
        panel.n_elements * panel.element_los_amplitude for panel in net.panels
    )
    upper_bound = amplitude_sum ** 2
    return PhaseSolution(
        phases=phases,
        psi_glos_achieved=achieved,
        upper_bound=upper_bound,
        gap=upper_bound - achieved,
    )


def compare_strategies(
    net: NetworkConfig,
    rho_grid,
    harq: HarqParams,
    policy: TruncationPolicy | None = None,
    fixed_value: float = DEFAULT_FIXED_PHASE,
    random_seed: int = 0,
) -> dict[str, OutageCurve]:
    """Exact outage curves for the optimal, constant and random phase settings."""
    harq = HarqParams(
        scheme=harq.scheme,
        max_rounds=harq.max_rounds,
        rate=harq.rate,
        snr_grid=tuple(float(r) for r in rho_grid),
    )
    strategies = {
        "optimal": optimal_phases(net).phases,
        "fixed": PhaseConfig.constant(net, fixed_value),
        "random": PhaseConfig.uniform_random(net, random_seed),
    }
    return {
        name: exact_outage_curve(compute_stats(net, phases), harq, policy)
        for name, phases in strategies.items()
    }
