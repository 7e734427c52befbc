"""Tests for the closed-form phase-shift optimum and strategy comparison."""

import math

import numpy as np
import pytest

from risharq.analytic import HarqParams, HarqScheme, asymptotic_outage
from risharq.channel import (
    DirectLink,
    NetworkConfig,
    PhaseConfig,
    RisPanel,
    compute_stats,
)
from risharq.errors import DegenerateNetworkError
from risharq.optimizer import DEFAULT_FIXED_PHASE, compare_strategies, optimal_phases

from conftest import build_reference_network

THETA_STAR_EXAMPLE = 5.497787143782138  # (pi/4 - pi/6 - pi/3) mod 2pi = 7pi/4


def single_element_network(phi_sd, phi_sr, phi_rd, kappa_sd=1.0):
    panel = RisPanel(1, 1.0, 1.0, 1.0, (phi_sr,), (phi_rd,))
    return NetworkConfig(DirectLink(1.0, kappa_sd, phi_sd), (panel,))


def batched_psi_glos(net: NetworkConfig, thetas: np.ndarray) -> np.ndarray:
    """Independent vectorized |LoS sum|^2 for a batch of flat phase vectors."""
    amps, base = [], []
    for panel in net.panels:
        for phi_sr, phi_rd in zip(panel.los_phases_sr, panel.los_phases_rd):
            amps.append(panel.element_los_amplitude)
            base.append(phi_sr + phi_rd)
    amps = np.asarray(amps)
    base = np.asarray(base)
    direct = net.direct.los_amplitude * np.exp(1j * net.direct.los_phase_sd)
    mu = direct + (amps * np.exp(1j * (base + thetas))).sum(axis=-1)
    return np.abs(mu) ** 2


class TestOptimalPhases:
    def test_aligned_network_needs_no_shift(self):
        net = single_element_network(0.0, 0.0, 0.0)
        solution = optimal_phases(net)
        assert solution.phases.thetas == ((0.0,),)
        assert solution.gap <= 1e-12 * solution.upper_bound

    def test_textbook_alignment_angle(self):
        net = single_element_network(math.pi / 4.0, math.pi / 6.0, math.pi / 3.0)
        solution = optimal_phases(net)
        assert solution.phases.thetas[0][0] == pytest.approx(THETA_STAR_EXAMPLE, rel=1e-12)

    def test_grid_search_oracle_single_element(self):
        net = single_element_network(math.pi / 4.0, math.pi / 6.0, math.pi / 3.0)
        solution = optimal_phases(net)
        thetas = np.linspace(0.0, 2.0 * math.pi, 20001)[:, None]
        values = batched_psi_glos(net, thetas)
        best = int(np.argmax(values))
        spacing = float(thetas[1, 0] - thetas[0, 0])
        assert abs(float(thetas[best, 0]) - THETA_STAR_EXAMPLE) <= spacing
        assert float(values.max()) <= solution.psi_glos_achieved + 1e-12

    def test_certificate_on_seeded_networks(self):
        for seed in range(10):
            net = build_reference_network(los_seed=seed)
            solution = optimal_phases(net)
            assert solution.gap <= 1e-12 * solution.upper_bound
            assert solution.psi_glos_achieved == pytest.approx(
                solution.upper_bound, rel=1e-12
            )

    def test_beats_random_baselines(self):
        net = build_reference_network(los_seed=123)
        solution = optimal_phases(net)
        rng = np.random.default_rng(0)
        thetas = rng.uniform(0.0, 2.0 * math.pi, size=(10_000, net.total_elements))
        values = batched_psi_glos(net, thetas)
        assert float(values.max()) < solution.psi_glos_achieved

    def test_zero_direct_los_aligns_to_phase_zero(self):
        net = single_element_network(0.9, math.pi / 6.0, math.pi / 3.0, kappa_sd=0.0)
        solution = optimal_phases(net)
        # alignment target defaults to phase 0: theta* = -(phi_sr + phi_rd) mod 2pi
        expected = (2.0 * math.pi - (math.pi / 6.0 + math.pi / 3.0)) % (2.0 * math.pi)
        assert solution.phases.thetas[0][0] == pytest.approx(expected, rel=1e-12)
        assert solution.psi_glos_achieved == pytest.approx(
            solution.upper_bound, rel=1e-12
        )

    def test_degenerate_network_rejected(self):
        with pytest.raises(DegenerateNetworkError):
            optimal_phases(NetworkConfig(DirectLink(1.0, 1.0)))

    def test_global_phase_shift_leaves_optimum_unchanged(self):
        base = build_reference_network(los_seed=3)
        shift = 0.77
        shifted = NetworkConfig(
            DirectLink(
                base.direct.beta_sd, base.direct.kappa_sd, base.direct.los_phase_sd + shift
            ),
            tuple(
                RisPanel(
                    p.n_elements, p.beta_sr, p.beta_rd, p.kappa_rd,
                    tuple(phi + shift for phi in p.los_phases_sr),
                    p.los_phases_rd,
                )
                for p in base.panels
            ),
        )
        a = optimal_phases(base)
        b = optimal_phases(shifted)
        assert b.psi_glos_achieved == pytest.approx(a.psi_glos_achieved, rel=1e-12)

    def test_minimizes_asymptotic_outage(self):
        net = build_reference_network(los_seed=17)
        solution = optimal_phases(net)
        harq = HarqParams(scheme=HarqScheme.TYPE_I, max_rounds=3, rate=4.0)
        best = asymptotic_outage(compute_stats(net, solution.phases), harq, 1e4)
        for seed in range(40):
            other = PhaseConfig.uniform_random(net, seed)
            assert best <= asymptotic_outage(compute_stats(net, other), harq, 1e4)


class TestCompareStrategies:
    def test_optimal_dominates_pointwise(self):
        net = build_reference_network(los_seed=5)
        harq = HarqParams(scheme=HarqScheme.CHASE_COMBINING, max_rounds=4, rate=4.0)
        grid = [10 ** (d / 10.0) for d in range(0, 44, 4)]
        tables = compare_strategies(net, grid, harq, random_seed=2)
        assert set(tables) == {"optimal", "fixed", "random"}
        for name in ("fixed", "random"):
            for opt, other in zip(tables["optimal"].entries, tables[name].entries):
                assert opt.p_out <= other.p_out + 2e-12

    def test_fixed_strategy_uses_pi_over_three(self):
        assert DEFAULT_FIXED_PHASE == pytest.approx(math.pi / 3.0)

    def test_degenerate_single_element_all_zero(self):
        # already aligned: every strategy evaluated at theta = 0 coincides
        net = single_element_network(0.0, 0.0, 0.0)
        harq = HarqParams(scheme=HarqScheme.TYPE_I, max_rounds=2, rate=1.0)
        tables = compare_strategies(net, [1.0, 10.0], harq, fixed_value=0.0, random_seed=0)
        stats_zero = compute_stats(net, PhaseConfig(((0.0,),)))
        from risharq.analytic import outage_type1

        for i, rho in enumerate((1.0, 10.0)):
            expected = outage_type1(stats_zero, harq, rho)
            assert tables["optimal"].entries[i].p_out == pytest.approx(expected, rel=1e-12)
            assert tables["fixed"].entries[i].p_out == pytest.approx(expected, rel=1e-12)

    def test_random_seeds_differ_but_stay_dominated(self):
        net = build_reference_network(los_seed=8)
        harq = HarqParams(scheme=HarqScheme.TYPE_I, max_rounds=2, rate=4.0)
        grid = [10 ** (d / 10.0) for d in range(6, 30, 6)]
        t1 = compare_strategies(net, grid, harq, random_seed=1)
        t2 = compare_strategies(net, grid, harq, random_seed=2)
        p1 = [p.p_out for p in t1["random"].entries]
        p2 = [p.p_out for p in t2["random"].entries]
        assert p1 != p2
        for table in (t1, t2):
            for opt, rnd in zip(table["optimal"].entries, table["random"].entries):
                assert opt.p_out <= rnd.p_out + 2e-12
