"""Link configuration and derived statistics of the equivalent channel.

The end-to-end channel seen by the destination is a fixed line-of-sight
phasor sum plus a zero-mean diffuse part.  ``compute_stats`` reduces a
network description and a phase-shift setting to the three numbers the
outage formulas need: the complex LoS sum ``mu``, its power ``psi_glos``
and the diffuse power ``psi_gnlos``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "TWO_PI",
    "db_to_linear",
    "linear_to_db",
    "wrap_phase",
    "PathLossSpec",
    "path_gain",
    "DirectLink",
    "RisPanel",
    "NetworkConfig",
    "PhaseConfig",
    "ChannelStats",
    "compute_stats",
    "generate_los_phases",
]

TWO_PI = 2.0 * math.pi


def db_to_linear(value_db: float) -> float:
    """Convert a dB power quantity to linear scale."""
    value_db = float(value_db)
    if not math.isfinite(value_db):
        raise DomainError(f"dB value must be finite, got {value_db!r}")
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear power quantity to dB."""
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise DomainError(f"linear value must be positive and finite, got {value!r}")
    return 10.0 * math.log10(value)


def wrap_phase(theta: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError(f"phase must be finite, got {theta!r}")
    wrapped = math.fmod(theta, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    return wrapped if wrapped < TWO_PI else 0.0


def _check_rician_factor(name: str, kappa: float) -> float:
    # kappa = +inf is the pure-LoS limit and is accepted.
    kappa = float(kappa)
    if math.isnan(kappa) or kappa < 0.0:
        raise ConfigError(f"{name} must be >= 0, got {kappa!r}")
    return kappa


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


def _los_fraction(kappa: float) -> float:
    # kappa / (kappa + 1), continuous at kappa = +inf
    return 1.0 if math.isinf(kappa) else kappa / (kappa + 1.0)


def _nlos_fraction(kappa: float) -> float:
    # 1 / (kappa + 1), continuous at kappa = +inf
    return 0.0 if math.isinf(kappa) else 1.0 / (kappa + 1.0)


@dataclass(frozen=True)
class PathLossSpec:
    """Distance-based path gain (d / d0)^(-alpha)."""

    distance: float
    reference_distance: float
    exponent: float

    def __post_init__(self) -> None:
        _check_positive("distance", self.distance)
        _check_positive("reference_distance", self.reference_distance)
        _check_positive("exponent", self.exponent)


def path_gain(spec: PathLossSpec) -> float:
    """Linear power gain (d / d0)^(-alpha)."""
    return (spec.distance / spec.reference_distance) ** (-spec.exponent)


@dataclass(frozen=True)
class DirectLink:
    """Rician source-to-destination link; the LoS component has unit modulus."""

    beta_sd: float
    kappa_sd: float
    los_phase_sd: float = 0.0

    def __post_init__(self) -> None:
        _check_positive("beta_sd", self.beta_sd)
        _check_rician_factor("kappa_sd", self.kappa_sd)
        object.__setattr__(self, "los_phase_sd", wrap_phase(self.los_phase_sd))

    @property
    def los_amplitude(self) -> float:
        """sqrt(beta * kappa / (kappa + 1)), the deterministic amplitude."""
        return math.sqrt(self.beta_sd * _los_fraction(self.kappa_sd))

    @property
    def nlos_variance(self) -> float:
        """beta / (kappa + 1), the diffuse power of the link."""
        return self.beta_sd * _nlos_fraction(self.kappa_sd)


@dataclass(frozen=True)
class RisPanel:
    """One reflecting surface: LoS-only feed link, Rician drop link.

    ``reflection_amplitude`` is fixed at 1 (lossless reflection); the model
    does not support attenuating elements.
    """

    n_elements: int
    beta_sr: float
    beta_rd: float
    kappa_rd: float
    los_phases_sr: tuple[float, ...]
    los_phases_rd: tuple[float, ...]
    reflection_amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.n_elements, int) or self.n_elements < 1:
            raise ConfigError(f"n_elements must be a positive integer, got {self.n_elements!r}")
        _check_positive("beta_sr", self.beta_sr)
        _check_positive("beta_rd", self.beta_rd)
        _check_rician_factor("kappa_rd", self.kappa_rd)
        if self.reflection_amplitude != 1.0:
            raise ConfigError("reflection_amplitude is fixed at 1")
        for name in ("los_phases_sr", "los_phases_rd"):
            phases = tuple(wrap_phase(p) for p in getattr(self, name))
            if len(phases) != self.n_elements:
                raise ConfigError(
                    f"{name} must have length n_elements={self.n_elements}, got {len(phases)}"
                )
            object.__setattr__(self, name, phases)

    @property
    def element_los_amplitude(self) -> float:
        """Per-element cascaded LoS amplitude sqrt(beta_rd beta_sr kappa/(kappa+1))."""
        return math.sqrt(self.beta_rd * self.beta_sr * _los_fraction(self.kappa_rd))

    @property
    def element_nlos_variance(self) -> float:
        """Per-element diffuse power beta_rd beta_sr / (kappa + 1)."""
        return self.beta_rd * self.beta_sr * _nlos_fraction(self.kappa_rd)


@dataclass(frozen=True)
class NetworkConfig:
    """Direct link plus any number of reflecting panels (zero is allowed)."""

    direct: DirectLink
    panels: tuple[RisPanel, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "panels", tuple(self.panels))
        for panel in self.panels:
            if not isinstance(panel, RisPanel):
                raise ConfigError(f"panels must contain RisPanel instances, got {panel!r}")

    @property
    def n_panels(self) -> int:
        return len(self.panels)

    @property
    def total_elements(self) -> int:
        return sum(panel.n_elements for panel in self.panels)


@dataclass(frozen=True)
class PhaseConfig:
    """Per-panel reflection phase vectors, wrapped into [0, 2*pi)."""

    thetas: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        wrapped = tuple(tuple(wrap_phase(t) for t in panel) for panel in self.thetas)
        object.__setattr__(self, "thetas", wrapped)

    @classmethod
    def zeros(cls, net: NetworkConfig) -> "PhaseConfig":
        return cls(tuple((0.0,) * p.n_elements for p in net.panels))

    @classmethod
    def constant(cls, net: NetworkConfig, value: float) -> "PhaseConfig":
        return cls(tuple((wrap_phase(value),) * p.n_elements for p in net.panels))

    @classmethod
    def uniform_random(cls, net: NetworkConfig, seed: int) -> "PhaseConfig":
        rng = np.random.default_rng(seed)
        return cls(
            tuple(tuple(rng.uniform(0.0, TWO_PI, p.n_elements).tolist()) for p in net.panels)
        )

    def validate_against(self, net: NetworkConfig) -> None:
        if len(self.thetas) != net.n_panels:
            raise ConfigError(
                f"phase config has {len(self.thetas)} panels, network has {net.n_panels}"
            )
        for k, (panel, thetas) in enumerate(zip(net.panels, self.thetas)):
            if len(thetas) != panel.n_elements:
                raise ConfigError(
                    f"panel {k}: {len(thetas)} phases for {panel.n_elements} elements"
                )


@dataclass(frozen=True)
class ChannelStats:
    """Equivalent-channel statistics: LoS mean, LoS power, diffuse power."""

    mu: complex
    psi_glos: float
    psi_gnlos: float

    def __post_init__(self) -> None:
        if self.psi_glos < 0.0 or not math.isfinite(self.psi_glos):
            raise DomainError(f"psi_glos must be >= 0, got {self.psi_glos!r}")
        if self.psi_gnlos < 0.0 or not math.isfinite(self.psi_gnlos):
            raise DomainError(f"psi_gnlos must be >= 0, got {self.psi_gnlos!r}")
        mu_power = abs(complex(self.mu)) ** 2
        scale = max(mu_power, self.psi_glos, 1.0)
        if abs(mu_power - self.psi_glos) > 1e-12 * scale:
            raise DomainError(
                f"psi_glos={self.psi_glos!r} inconsistent with |mu|^2={mu_power!r}"
            )

    @classmethod
    def from_powers(cls, psi_glos: float, psi_gnlos: float) -> "ChannelStats":
        """Stats with the LoS sum placed on the real axis (phase is immaterial)."""
        if psi_glos < 0.0:
            raise DomainError(f"psi_glos must be >= 0, got {psi_glos!r}")
        return cls(mu=complex(math.sqrt(psi_glos), 0.0), psi_glos=psi_glos, psi_gnlos=psi_gnlos)

    def xi(self, rounds: int) -> float:
        """Noncentrality L * psi_glos / psi_gnlos of the summed gain."""
        if not isinstance(rounds, int) or rounds < 1:
            raise DomainError(f"rounds must be a positive integer, got {rounds!r}")
        if self.psi_gnlos <= 0.0:
            raise DomainError("xi undefined for a channel with no diffuse power")
        return rounds * self.psi_glos / self.psi_gnlos


def compute_stats(net: NetworkConfig, phases: PhaseConfig) -> ChannelStats:
    """Reduce a network plus phase setting to (mu, psi_glos, psi_gnlos)."""
    phases.validate_against(net)
    direct = net.direct
    mu = direct.los_amplitude * complex(
        math.cos(direct.los_phase_sd), math.sin(direct.los_phase_sd)
    )
    psi_gnlos = direct.nlos_variance
    for panel, thetas in zip(net.panels, phases.thetas):
        amp = panel.element_los_amplitude
        for phi_sr, phi_rd, theta in zip(panel.los_phases_sr, panel.los_phases_rd, thetas):
            angle = phi_rd + theta + phi_sr
            mu += amp * complex(math.cos(angle), math.sin(angle))
        psi_gnlos += panel.n_elements * panel.element_nlos_variance
    return ChannelStats(mu=mu, psi_glos=abs(mu) ** 2, psi_gnlos=psi_gnlos)


def generate_los_phases(
    seed: int, n_elements_per_panel: tuple[int, ...] | list[int]
) -> tuple[float, tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]]:
    """Seeded uniform LoS phases for a network whose config omits them.

    Returns ``(phase_sd, ((phases_sr, phases_rd), ...))`` drawn uniformly on
    [0, 2*pi).  Draw order is fixed (direct first, then per panel the feed
    vector followed by the drop vector) so a seed pins the whole network.
    """
    rng = np.random.default_rng(seed)
    phase_sd = float(rng.uniform(0.0, TWO_PI))
    panels = []
    for n in n_elements_per_panel:
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"element counts must be positive integers, got {n!r}")
        phases_sr = tuple(rng.uniform(0.0, TWO_PI, n).tolist())
        phases_rd = tuple(rng.uniform(0.0, TWO_PI, n).tolist())
        panels.append((phases_sr, phases_rd))
    return phase_sd, tuple(panels)
