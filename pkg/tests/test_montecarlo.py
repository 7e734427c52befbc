"""Tests for the stochastic oracle: sampling, information accounting,
outage estimation and the reproducibility contract."""

import cmath
import math

import numpy as np
import pytest

from risharq.analytic import HarqScheme
from risharq.channel import (
    ChannelStats,
    DirectLink,
    NetworkConfig,
    PhaseConfig,
    compute_stats,
)
from risharq.errors import ConfigError, DomainError
from risharq.montecarlo import (
    OutageEstimate,
    SimulationPlan,
    accumulated_information,
    chunk_rng,
    estimate_outage,
    sample_equivalent_channel,
    simulate_outage_curves,
)

RAYLEIGH_TYPE1_L2 = 0.39957640089372805  # (1 - e^-1)^2


def rayleigh_network() -> NetworkConfig:
    return NetworkConfig(DirectLink(1.0, 0.0))


class TestAccumulatedInformation:
    def test_single_round_schemes_agree(self):
        for g in (0.2, 1.0, 9.0):
            a = accumulated_information([g], HarqScheme.TYPE_I)
            b = accumulated_information([g], HarqScheme.CHASE_COMBINING)
            assert a == b == pytest.approx(math.log2(1.0 + g))

    def test_type1_takes_best_round(self):
        assert accumulated_information([1.0, 3.0], HarqScheme.TYPE_I) == pytest.approx(2.0)

    def test_cc_adds_snrs(self):
        assert accumulated_information([1.0, 3.0], HarqScheme.CHASE_COMBINING) == pytest.approx(
            math.log2(5.0)
        )

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            accumulated_information([], HarqScheme.TYPE_I)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            accumulated_information([1.0, -0.1], HarqScheme.TYPE_I)


class TestSampleEquivalentChannel:
    def test_pure_los_is_deterministic(self):
        net = NetworkConfig(DirectLink(4.0, math.inf, 0.7))
        rng = np.random.default_rng(0)
        draws = sample_equivalent_channel(net, PhaseConfig(()), rng, size=64)
        expected = 2.0 * cmath.exp(0.7j)
        assert np.allclose(draws, expected, atol=1e-14)

    def test_scalar_draw(self, reference_network, reference_phases):
        rng = np.random.default_rng(1)
        h = sample_equivalent_channel(reference_network, reference_phases, rng)
        assert isinstance(h, complex)

    def test_mean_matches_stats(self, reference_network, reference_phases):
        # CLT bound: 4 sigma on each component with 10^6 draws
        stats = compute_stats(reference_network, reference_phases)
        rng = np.random.default_rng(42)
        n = 1_000_000
        draws = sample_equivalent_channel(reference_network, reference_phases, rng, size=n)
        bound = 4.0 * math.sqrt(stats.psi_gnlos / 2.0 / n)
        assert abs(float(np.mean(draws.real)) - stats.mu.real) <= bound
        assert abs(float(np.mean(draws.imag)) - stats.mu.imag) <= bound

    def test_variance_matches_stats(self, reference_network, reference_phases):
        stats = compute_stats(reference_network, reference_phases)
        rng = np.random.default_rng(43)
        draws = sample_equivalent_channel(
            reference_network, reference_phases, rng, size=1_000_000
        )
        var = float(np.mean(np.abs(draws - np.mean(draws)) ** 2))
        assert var == pytest.approx(stats.psi_gnlos, rel=0.02)

    def test_bad_size(self, reference_network, reference_phases):
        with pytest.raises(DomainError):
            sample_equivalent_channel(
                reference_network, reference_phases, np.random.default_rng(0), size=0
            )


class TestSimulationPlan:
    def test_defaults(self):
        plan = SimulationPlan(seed=3)
        assert plan.trials == 1_000_000
        assert plan.chunk_size == 65_536

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"trials": 0},
            {"trials": 2.5},
            {"seed": -1},
            {"seed": 1 << 70},
            {"max_rounds": 0},
            {"scheme": "type1"},
            {"rate": 0.0},
            {"rho": -1.0},
            {"chunk_size": 0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ConfigError):
            SimulationPlan(**kwargs)


class TestEstimateOutage:
    def test_vanishing_rate_never_outages(self):
        plan = SimulationPlan(
            trials=20_000, seed=1, max_rounds=1, scheme=HarqScheme.TYPE_I,
            rate=1e-12, rho=1.0, chunk_size=4096,
        )
        est = estimate_outage(rayleigh_network(), PhaseConfig(()), plan)
        assert est.p_hat == 0.0

    def test_rayleigh_type1_value(self):
        plan = SimulationPlan(
            trials=1_000_000, seed=11, max_rounds=2, scheme=HarqScheme.TYPE_I,
            rate=1.0, rho=1.0,
        )
        est = estimate_outage(rayleigh_network(), PhaseConfig(()), plan)
        assert est.stderr > 0.0
        assert abs(est.p_hat - RAYLEIGH_TYPE1_L2) <= 3.0 * est.stderr

    def test_deterministic_given_plan(self, reference_network, reference_phases):
        plan = SimulationPlan(
            trials=50_000, seed=5, max_rounds=2, scheme=HarqScheme.TYPE_I,
            rate=4.0, rho=30.0, chunk_size=8192,
        )
        a = estimate_outage(reference_network, reference_phases, plan)
        b = estimate_outage(reference_network, reference_phases, plan)
        assert a == b

    def test_worker_count_is_invisible(self, reference_network, reference_phases):
        plan = SimulationPlan(
            trials=60_000, seed=6, max_rounds=3, scheme=HarqScheme.CHASE_COMBINING,
            rate=4.0, rho=25.0, chunk_size=4096,
        )
        results = {
            workers: estimate_outage(reference_network, reference_phases, plan, workers=workers)
            for workers in (1, 2, 5)
        }
        assert results[1] == results[2] == results[5]

    def test_nested_rounds_share_draws(self, reference_network, reference_phases):
        # rounds-major layout: more rounds only extends each trial
        estimates = []
        for rounds in (1, 2, 3, 4):
            plan = SimulationPlan(
                trials=40_000, seed=9, max_rounds=rounds, scheme=HarqScheme.TYPE_I,
                rate=4.0, rho=25.0, chunk_size=8192,
            )
            estimates.append(
                estimate_outage(reference_network, reference_phases, plan).p_hat
            )
        assert all(b <= a for a, b in zip(estimates, estimates[1:]))


class TestSimulateOutageCurves:
    def test_cc_outage_implies_type1_outage(self, reference_network, reference_phases):
        grid = [10 ** (d / 10.0) for d in range(6, 30, 4)]
        curves = simulate_outage_curves(
            reference_network, reference_phases, grid,
            max_rounds=4, rate=4.0, trials=50_000, seed=2,
        )
        for c, t in zip(
            curves[HarqScheme.CHASE_COMBINING].entries, curves[HarqScheme.TYPE_I].entries
        ):
            assert c.p_out <= t.p_out

    def test_monotone_in_snr_by_construction(self, reference_network, reference_phases):
        grid = [10 ** (d / 10.0) for d in range(0, 40, 2)]
        curves = simulate_outage_curves(
            reference_network, reference_phases, grid,
            max_rounds=2, rate=4.0, trials=30_000, seed=3,
        )
        for curve in curves.values():
            ps = [p.p_out for p in curve.entries]
            assert all(b <= a for a, b in zip(ps, ps[1:]))

    def test_matches_single_point_estimates(self, reference_network, reference_phases):
        grid = [5.0, 50.0]
        curves = simulate_outage_curves(
            reference_network, reference_phases, grid,
            max_rounds=2, rate=4.0, trials=30_000, seed=4, chunk_size=8192,
        )
        for i, rho in enumerate(grid):
            plan = SimulationPlan(
                trials=30_000, seed=4, max_rounds=2, scheme=HarqScheme.TYPE_I,
                rate=4.0, rho=rho, chunk_size=8192,
            )
            est = estimate_outage(reference_network, reference_phases, plan)
            assert curves[HarqScheme.TYPE_I].entries[i].p_out == est.p_hat

    def test_grid_must_be_sorted(self, reference_network, reference_phases):
        with pytest.raises(DomainError):
            simulate_outage_curves(
                reference_network, reference_phases, [10.0, 5.0],
                max_rounds=1, rate=1.0, trials=1000,
            )


class TestChunkRng:
    def test_streams_differ_by_chunk(self):
        a = chunk_rng(1, 0).standard_normal(4)
        b = chunk_rng(1, 1).standard_normal(4)
        c = chunk_rng(2, 0).standard_normal(4)
        assert not np.allclose(a, b)
        assert not np.allclose(a, c)

    def test_streams_are_reproducible(self):
        assert np.array_equal(chunk_rng(9, 7).standard_normal(8),
                              chunk_rng(9, 7).standard_normal(8))
