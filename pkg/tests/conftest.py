"""Shared fixtures: the reference multi-RIS configuration used across tests.

Geometry: direct link at 70 m (exponent 2.5, Rician -5 dB), three panels
of four elements each, feed links at 50 m (exponent 2.0, LoS only), drop
links at 40 m (exponent 2.2, Rician 0.4 dB), reference distance 20 m,
target rate 4 bps/Hz.  LoS phases come from a fixed seed.
"""

import math

import pytest

from risharq import (
    DirectLink,
    NetworkConfig,
    PathLossSpec,
    PhaseConfig,
    RisPanel,
    compute_stats,
    db_to_linear,
    generate_los_phases,
    path_gain,
)

REFERENCE_RATE = 4.0
REFERENCE_LOS_SEED = 7
THETA_VECTOR = (0.0, math.pi / 6.0, math.pi / 4.0, math.pi / 3.0)


def build_reference_network(los_seed: int = REFERENCE_LOS_SEED) -> NetworkConfig:
    beta_sd = path_gain(PathLossSpec(70.0, 20.0, 2.5))
    beta_sr = path_gain(PathLossSpec(50.0, 20.0, 2.0))
    beta_rd = path_gain(PathLossSpec(40.0, 20.0, 2.2))
    kappa_sd = db_to_linear(-5.0)
    kappa_rd = db_to_linear(0.4)
    phase_sd, panel_phases = generate_los_phases(los_seed, [4, 4, 4])
    panels = tuple(
        RisPanel(
            n_elements=4,
            beta_sr=beta_sr,
            beta_rd=beta_rd,
            kappa_rd=kappa_rd,
            los_phases_sr=sr,
            los_phases_rd=rd,
        )
        for sr, rd in panel_phases
    )
    return NetworkConfig(direct=DirectLink(beta_sd, kappa_sd, phase_sd), panels=panels)


@pytest.fixture(scope="session")
def reference_network() -> NetworkConfig:
    return build_reference_network()


@pytest.fixture(scope="session")
def reference_phases(reference_network) -> PhaseConfig:
    return PhaseConfig(tuple(THETA_VECTOR for _ in reference_network.panels))


@pytest.fixture(scope="session")
def reference_stats(reference_network, reference_phases):
    return compute_stats(reference_network, reference_phases)
