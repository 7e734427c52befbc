"""Experiment runner: declarative scenarios in, plot-ready CSV plus a
reproducibility manifest out.

Scenarios are TOML (primary) or JSON.  A manifest written by a previous
run is itself a loadable scenario (its ``resolved_scenario`` block is a
fully explicit scenario document), so any run can be reproduced from its
manifest alone.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .analytic import (
    HarqParams,
    HarqScheme,
    asymptotic_outage_curve,
    exact_outage_curve,
    fit_diversity,
)
from .channel import (
    ChannelStats,
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
from .errors import ConfigError, DomainError, FitError, RisHarqError, TruncationError
from .montecarlo import DEFAULT_CHUNK_SIZE, DEFAULT_TRIALS, simulate_outage_curves
from .optimizer import DEFAULT_FIXED_PHASE, compare_strategies, optimal_phases
from .specfun import TruncationPolicy, adaptive_series_order

__all__ = ["Scenario", "load_scenario", "resolve_phases", "run", "main"]

SUBCOMMANDS = ("op-curve", "asymptote", "mc", "optimize-phase", "diversity")
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

_PROB_FMT = "{:.11e}"  # 12 significant digits, scientific
_DB_FMT = "{:.4f}"
_DEFAULT_DIVERSITY_SPAN_DB = 15.0


# ---------------------------------------------------------------------------
# strict-mode section parsing
# ---------------------------------------------------------------------------

class _Section:
    """Dict wrapper that tracks consumed keys and names fields in errors."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must be a table, got {type(data).__name__}")
        self._data = data
        self._path = path
        self._seen: set[str] = set()

    def _name(self, key: str) -> str:
        return f"{self._path}.{key}" if self._path else key

    def has(self, key: str) -> bool:
        return key in self._data

    def take(self, key: str, required: bool = False, default: Any = None) -> Any:
        self._seen.add(key)
        if key not in self._data:
            if required:
                raise ConfigError(f"missing required field {self._name(key)}")
            return default
        return self._data[key]

    def subsection(self, key: str, required: bool = False) -> "_Section | None":
        raw = self.take(key, required=required)
        if raw is None:
            return None
        return _Section(raw, self._name(key))

    def finish(self) -> None:
        extras = sorted(set(self._data) - self._seen)
        if extras:
            names = ", ".join(self._name(k) for k in extras)
            raise ConfigError(f"unknown field(s): {names}")


def _as_number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return value


def _as_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _as_number_list(value: Any, name: str) -> list[float]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list of numbers, got {value!r}")
    return [_as_number(v, f"{name}[{i}]") for i, v in enumerate(value)]


# ---------------------------------------------------------------------------
# scenario model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """A fully resolved experiment description."""

    network: NetworkConfig
    phase_strategy: str  # optimal | fixed | random | explicit
    phase_fixed_value: float
    phase_seed: int
    explicit_phases: PhaseConfig | None
    schemes: tuple[HarqScheme, ...]
    rounds_list: tuple[int, ...]
    rate: float
    snr_grid_db: tuple[float, ...]
    policy: TruncationPolicy
    mc_trials: int
    mc_seed: int
    mc_chunk_size: int
    diversity_window_db: tuple[float, float] | None
    los_phase_seed: int | None

    @property
    def snr_grid_linear(self) -> tuple[float, ...]:
        return tuple(db_to_linear(v) for v in self.snr_grid_db)


def _parse_path_loss(section: _Section) -> float:
    spec = PathLossSpec(
        distance=_as_number(section.take("distance", required=True), section._name("distance")),
        reference_distance=_as_number(
            section.take("reference_distance", required=True),
            section._name("reference_distance"),
        ),
        exponent=_as_number(section.take("exponent", required=True), section._name("exponent")),
    )
    section.finish()
    return path_gain(spec)


def _parse_gain(section: _Section, beta_key: str, pl_key: str) -> float:
    has_beta = section.has(beta_key)
    pl = section.subsection(pl_key)
    if has_beta and pl is not None:
        raise ConfigError(
            f"give either {section._name(beta_key)} or {section._name(pl_key)}, not both"
        )
    if has_beta:
        beta = _as_number(section.take(beta_key), section._name(beta_key))
        if beta <= 0.0:
            raise ConfigError(f"{section._name(beta_key)} must be positive")
        return beta
    if pl is None:
        raise ConfigError(
            f"missing required field {section._name(beta_key)} or {section._name(pl_key)}"
        )
    return _parse_path_loss(pl)


def _parse_rician(section: _Section, db_key: str, linear_key: str) -> float:
    # dB is the primary external form; the linear alternative exists so that
    # manifests can round-trip exactly and kappa = 0 stays expressible
    has_db = section.has(db_key)
    has_linear = section.has(linear_key)
    if has_db and has_linear:
        raise ConfigError(
            f"give either {section._name(db_key)} or {section._name(linear_key)}, not both"
        )
    if has_db:
        return db_to_linear(_as_number(section.take(db_key), section._name(db_key)))
    if has_linear:
        kappa = _as_number(section.take(linear_key), section._name(linear_key))
        if kappa < 0.0:
            raise ConfigError(f"{section._name(linear_key)} must be >= 0")
        return kappa
    raise ConfigError(
        f"missing required field {section._name(db_key)} or {section._name(linear_key)}"
    )


def _parse_network(section: _Section) -> tuple[NetworkConfig, int | None]:
    los_seed = section.take("los_phase_seed")
    if los_seed is not None:
        los_seed = _as_int(los_seed, "network.los_phase_seed")

    direct_sec = section.subsection("direct", required=True)
    beta_sd = _parse_gain(direct_sec, "beta", "path_loss")
    kappa_sd = _parse_rician(direct_sec, "kappa_db", "kappa")
    explicit_sd_phase = direct_sec.take("los_phase")
    if explicit_sd_phase is not None:
        explicit_sd_phase = _as_number(explicit_sd_phase, "network.direct.los_phase")
    direct_sec.finish()

    ris_raw = section.take("ris", default=[])
    if not isinstance(ris_raw, list):
        raise ConfigError("network.ris must be an array of tables")
    panel_specs = []
    for idx, entry in enumerate(ris_raw):
        sec = _Section(entry, f"network.ris[{idx}]")
        copies = sec.take("copies", default=1)
        copies = _as_int(copies, f"network.ris[{idx}].copies")
        if copies < 1:
            raise ConfigError(f"network.ris[{idx}].copies must be >= 1")
        n_elements = _as_int(sec.take("n_elements", required=True), f"network.ris[{idx}].n_elements")
        beta_sr = _parse_gain(sec, "beta_sr", "path_loss_sr")
        beta_rd = _parse_gain(sec, "beta_rd", "path_loss_rd")
        kappa_rd = _parse_rician(sec, "kappa_rd_db", "kappa_rd")
        explicit_sr = sec.take("los_phases_sr")
        explicit_rd = sec.take("los_phases_rd")
        if explicit_sr is not None:
            explicit_sr = _as_number_list(explicit_sr, f"network.ris[{idx}].los_phases_sr")
        if explicit_rd is not None:
            explicit_rd = _as_number_list(explicit_rd, f"network.ris[{idx}].los_phases_rd")
        if copies > 1 and (explicit_sr is not None or explicit_rd is not None):
            raise ConfigError(
                f"network.ris[{idx}]: explicit LoS phases cannot be combined with copies > 1"
            )
        sec.finish()
        for _ in range(copies):
            panel_specs.append((n_elements, beta_sr, beta_rd, kappa_rd, explicit_sr, explicit_rd))
    section.finish()

    needs_seed = explicit_sd_phase is None or any(
        sr is None or rd is None for (_, _, _, _, sr, rd) in panel_specs
    )
    if needs_seed and los_seed is None:
        raise ConfigError(
            "network.los_phase_seed is required when any LoS phase is left implicit"
        )
    # the full seeded draw happens unconditionally so that explicit overrides
    # never shift the phases of the remaining links
    if los_seed is not None:
        seeded_sd, seeded_panels = generate_los_phases(
            los_seed, [n for (n, *_rest) in panel_specs]
        )
    else:
        seeded_sd, seeded_panels = 0.0, tuple(((), ()) for _ in panel_specs)

    phase_sd = explicit_sd_phase if explicit_sd_phase is not None else seeded_sd
    direct = DirectLink(beta_sd=beta_sd, kappa_sd=kappa_sd, los_phase_sd=phase_sd)
    panels = []
    for (n, beta_sr, beta_rd, kappa_rd, sr, rd), (seed_sr, seed_rd) in zip(
        panel_specs, seeded_panels
    ):
        phases_sr = tuple(sr) if sr is not None else seed_sr
        phases_rd = tuple(rd) if rd is not None else seed_rd
        panels.append(
            RisPanel(
                n_elements=n,
                beta_sr=beta_sr,
                beta_rd=beta_rd,
                kappa_rd=kappa_rd,
                los_phases_sr=phases_sr,
                los_phases_rd=phases_rd,
            )
        )
    return NetworkConfig(direct=direct, panels=tuple(panels)), los_seed


def _parse_harq(section: _Section) -> tuple[tuple[HarqScheme, ...], tuple[int, ...], float]:
    if section.has("scheme") and section.has("schemes"):
        raise ConfigError("give either harq.scheme or harq.schemes, not both")
    if section.has("schemes"):
        raw = section.take("schemes")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("harq.schemes must be a nonempty list")
        schemes = tuple(HarqScheme.parse(s) for s in raw)
    elif section.has("scheme"):
        schemes = (HarqScheme.parse(section.take("scheme")),)
    else:
        raise ConfigError("missing required field harq.scheme or harq.schemes")
    if len(set(schemes)) != len(schemes):
        raise ConfigError("harq.schemes contains duplicates")

    rounds_raw = section.take("max_rounds", required=True)
    if isinstance(rounds_raw, list):
        rounds = tuple(_as_int(v, f"harq.max_rounds[{i}]") for i, v in enumerate(rounds_raw))
    else:
        rounds = (_as_int(rounds_raw, "harq.max_rounds"),)
    if not rounds or any(r < 1 for r in rounds):
        raise ConfigError("harq.max_rounds entries must be positive integers")
    if len(set(rounds)) != len(rounds):
        raise ConfigError("harq.max_rounds contains duplicates")

    rate = _as_number(section.take("rate", required=True), "harq.rate")
    if rate <= 0.0:
        raise ConfigError("harq.rate must be positive")
    section.finish()
    return schemes, rounds, rate


def _parse_snr_grid(section_or_list: Any) -> tuple[float, ...]:
    if isinstance(section_or_list, list):
        grid = tuple(_as_number(v, f"snr_grid_db[{i}]") for i, v in enumerate(section_or_list))
        if len(grid) < 1:
            raise ConfigError("snr_grid_db must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("snr_grid_db values must be strictly increasing")
        return grid
    sec = _Section(section_or_list, "snr_grid_db")
    start = _as_number(sec.take("start", required=True), "snr_grid_db.start")
    stop = _as_number(sec.take("stop", required=True), "snr_grid_db.stop")
    step = _as_number(sec.take("step", required=True), "snr_grid_db.step")
    sec.finish()
    if step <= 0.0 or stop < start:
        raise ConfigError("snr_grid_db requires step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + i * step for i in range(n))


def _parse_truncation(section: _Section | None) -> TruncationPolicy:
    if section is None:
        return TruncationPolicy.adaptive()
    mode = section.take("mode", required=True)
    if mode == "fixed":
        order = _as_int(section.take("order", default=50), "truncation.order")
        section.finish()
        return TruncationPolicy.fixed(order)
    if mode == "adaptive":
        tol = _as_number(section.take("tolerance", default=1e-12), "truncation.tolerance")
        section.finish()
        return TruncationPolicy.adaptive(tol)
    raise ConfigError(f"truncation.mode must be 'fixed' or 'adaptive', got {mode!r}")


def _parse_phases(
    section: _Section | None, net: NetworkConfig
) -> tuple[str, float, int, PhaseConfig | None]:
    if section is None:
        return "optimal", DEFAULT_FIXED_PHASE, 0, None
    strategy = section.take("strategy", required=True)
    if not isinstance(strategy, str):
        raise ConfigError("phases.strategy must be a string")
    fixed_value = DEFAULT_FIXED_PHASE
    seed = 0
    # compact forms "fixed:<radians>" and "random:<seed>"
    if strategy.startswith("fixed:"):
        fixed_value = _parse_scalar(strategy[6:], "phases.strategy")
        strategy = "fixed"
    elif strategy.startswith("random:"):
        try:
            seed = int(strategy[7:])
        except ValueError as exc:
            raise ConfigError(f"phases.strategy: bad seed in {strategy!r}") from exc
        strategy = "random"
    if strategy not in ("optimal", "fixed", "random", "explicit"):
        raise ConfigError(f"unknown phases.strategy {strategy!r}")
    if section.has("fixed_value"):
        fixed_value = _as_number(section.take("fixed_value"), "phases.fixed_value")
    if section.has("seed"):
        seed = _as_int(section.take("seed"), "phases.seed")
    explicit: PhaseConfig | None = None
    values = section.take("values")
    if strategy == "explicit":
        if values is None:
            raise ConfigError("missing required field phases.values for explicit strategy")
        if not isinstance(values, list) or not values:
            raise ConfigError("phases.values must be a nonempty list")
        if isinstance(values[0], list):
            thetas = tuple(
                tuple(_as_number_list(panel, f"phases.values[{i}]"))
                for i, panel in enumerate(values)
            )
        else:
            flat = tuple(_as_number_list(values, "phases.values"))
            thetas = tuple(flat for _ in net.panels)
        explicit = PhaseConfig(thetas)
        explicit.validate_against(net)
    elif values is not None:
        raise ConfigError("phases.values is only meaningful for the explicit strategy")
    section.finish()
    return strategy, fixed_value, seed, explicit


def _parse_scalar(text: str, name: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r} as a number") from exc


def _parse_mc(section: _Section | None) -> tuple[int, int, int]:
    if section is None:
        return DEFAULT_TRIALS, 1, DEFAULT_CHUNK_SIZE
    trials = _as_int(section.take("trials", default=DEFAULT_TRIALS), "mc.trials")
    seed = _as_int(section.take("seed", default=1), "mc.seed")
    chunk_size = _as_int(section.take("chunk_size", default=DEFAULT_CHUNK_SIZE), "mc.chunk_size")
    section.finish()
    if trials < 1:
        raise ConfigError("mc.trials must be >= 1")
    if chunk_size < 1:
        raise ConfigError("mc.chunk_size must be >= 1")
    if seed < 0:
        raise ConfigError("mc.seed must be >= 0")
    return trials, seed, chunk_size


def _parse_diversity(section: _Section | None) -> tuple[float, float] | None:
    if section is None:
        return None
    window = section.take("window_db", required=True)
    values = _as_number_list(window, "diversity.window_db")
    section.finish()
    if len(values) != 2 or values[1] <= values[0]:
        raise ConfigError("diversity.window_db must be [lo, hi] with lo < hi")
    return (values[0], values[1])


def _scenario_from_dict(doc: dict) -> Scenario:
    root = _Section(doc, "")
    network, los_seed = _parse_network(root.subsection("network", required=True))
    schemes, rounds_list, rate = _parse_harq(root.subsection("harq", required=True))
    snr_raw = root.take("snr_grid_db", required=True)
    snr_grid_db = _parse_snr_grid(snr_raw)
    policy = _parse_truncation(root.subsection("truncation"))
    strategy, fixed_value, phase_seed, explicit = _parse_phases(
        root.subsection("phases"), network
    )
    mc_trials, mc_seed, mc_chunk = _parse_mc(root.subsection("mc"))
    diversity_window = _parse_diversity(root.subsection("diversity"))
    root.finish()
    return Scenario(
        network=network,
        phase_strategy=strategy,
        phase_fixed_value=fixed_value,
        phase_seed=phase_seed,
        explicit_phases=explicit,
        schemes=schemes,
        rounds_list=rounds_list,
        rate=rate,
        snr_grid_db=snr_grid_db,
        policy=policy,
        mc_trials=mc_trials,
        mc_seed=mc_seed,
        mc_chunk_size=mc_chunk,
        diversity_window_db=diversity_window,
        los_phase_seed=los_seed,
    )


def _bundled_scenario_path(name: str) -> Path | None:
    from importlib.resources import files

    base = files("risharq.scenarios")
    for candidate in (name, f"{name}.toml"):
        resource = base / candidate
        if resource.is_file():
            return Path(str(resource))
    return None


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario (TOML or JSON, or a run manifest)."""
    path = Path(path)
    if not path.exists():
        bundled = _bundled_scenario_path(path.name)
        if bundled is None:
            raise ConfigError(f"scenario file not found: {path}")
        path = bundled
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}") from exc
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: scenario document must be a table")
    if "resolved_scenario" in doc:  # manifest round-trip
        doc = doc["resolved_scenario"]
    return _scenario_from_dict(doc)


def resolve_phases(scenario: Scenario) -> PhaseConfig:
    """Materialize the scenario's phase strategy into concrete angles."""
    net = scenario.network
    if scenario.phase_strategy == "optimal":
        return optimal_phases(net).phases if net.total_elements else PhaseConfig(())
    if scenario.phase_strategy == "fixed":
        return PhaseConfig.constant(net, scenario.phase_fixed_value)
    if scenario.phase_strategy == "random":
        return PhaseConfig.uniform_random(net, scenario.phase_seed)
    assert scenario.explicit_phases is not None
    return scenario.explicit_phases


def scenario_to_dict(scenario: Scenario) -> dict:
    """Fully explicit scenario document (inverse of the loader, for manifests)."""
    net = scenario.network
    doc: dict[str, Any] = {
        "network": {
            "direct": {
                "beta": net.direct.beta_sd,
                "kappa": net.direct.kappa_sd,
                "los_phase": net.direct.los_phase_sd,
            },
            "ris": [
                {
                    "n_elements": p.n_elements,
                    "beta_sr": p.beta_sr,
                    "beta_rd": p.beta_rd,
                    "kappa_rd": p.kappa_rd,
                    "los_phases_sr": list(p.los_phases_sr),
                    "los_phases_rd": list(p.los_phases_rd),
                }
                for p in net.panels
            ],
        },
        "harq": {
            "schemes": [s.value for s in scenario.schemes],
            "max_rounds": list(scenario.rounds_list),
            "rate": scenario.rate,
        },
        "snr_grid_db": list(scenario.snr_grid_db),
        "truncation": (
            {"mode": "fixed", "order": scenario.policy.fixed_order}
            if scenario.policy.mode == "fixed"
            else {"mode": "adaptive", "tolerance": scenario.policy.tail_tolerance}
        ),
        "phases": _phases_to_dict(scenario),
        "mc": {
            "trials": scenario.mc_trials,
            "seed": scenario.mc_seed,
            "chunk_size": scenario.mc_chunk_size,
        },
    }
    if scenario.diversity_window_db is not None:
        doc["diversity"] = {"window_db": list(scenario.diversity_window_db)}
    return doc


def _phases_to_dict(scenario: Scenario) -> dict:
    # fixed_value and seed are kept for every strategy: optimize-phase uses
    # them for its baselines, so a manifest must preserve them to round-trip
    entry: dict[str, Any] = {
        "strategy": scenario.phase_strategy,
        "fixed_value": scenario.phase_fixed_value,
        "seed": scenario.phase_seed,
    }
    if scenario.phase_strategy == "explicit":
        assert scenario.explicit_phases is not None
        entry["values"] = [list(panel) for panel in scenario.explicit_phases.thetas]
    return entry


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _harq_for(scenario: Scenario, scheme: HarqScheme, rounds: int) -> HarqParams:
    return HarqParams(
        scheme=scheme,
        max_rounds=rounds,
        rate=scenario.rate,
        snr_grid=scenario.snr_grid_linear,
    )


def _max_order_used(scenario: Scenario, stats_list: list[ChannelStats]) -> int:
    """Largest truncation order any series evaluation in this run needed."""
    if scenario.policy.mode == "fixed":
        return scenario.policy.fixed_order
    psi_max = (2.0 ** scenario.rate - 1.0) / min(scenario.snr_grid_linear)
    worst = 0
    for stats in stats_list:
        y = psi_max / stats.psi_gnlos
        for rounds in scenario.rounds_list:
            worst = max(
                worst,
                adaptive_series_order(
                    stats.psi_glos / stats.psi_gnlos, 1.0, y, scenario.policy.tail_tolerance
                ),
                adaptive_series_order(
                    stats.xi(rounds), float(rounds), y, scenario.policy.tail_tolerance
                ),
            )
    return worst


def _run_op_curve(scenario: Scenario) -> tuple[list[str], list[list[str]], dict]:
    phases = resolve_phases(scenario)
    stats = compute_stats(scenario.network, phases)
    rows = []
    for scheme in scenario.schemes:
        for rounds in scenario.rounds_list:
            curve = exact_outage_curve(stats, _harq_for(scenario, scheme, rounds), scenario.policy)
            for db, point in zip(scenario.snr_grid_db, curve.entries):
                rows.append(
                    [_DB_FMT.format(db), scheme.value, str(rounds), _PROB_FMT.format(point.p_out)]
                )
    extra = {
        "channel_stats": _stats_dict(stats),
        "truncation_max_order_used": _max_order_used(scenario, [stats]),
    }
    return ["snr_db", "scheme", "rounds", "p_out_exact"], rows, extra


def _run_asymptote(scenario: Scenario) -> tuple[list[str], list[list[str]], dict]:
    phases = resolve_phases(scenario)
    stats = compute_stats(scenario.network, phases)
    rows = []
    for scheme in scenario.schemes:
        for rounds in scenario.rounds_list:
            curve = asymptotic_outage_curve(stats, _harq_for(scenario, scheme, rounds))
            for db, point in zip(scenario.snr_grid_db, curve.entries):
                rows.append(
                    [_DB_FMT.format(db), scheme.value, str(rounds), _PROB_FMT.format(point.p_out)]
                )
    return ["snr_db", "scheme", "rounds", "p_out_asymptotic"], rows, {
        "channel_stats": _stats_dict(stats)
    }


def _run_mc(scenario: Scenario, workers: int) -> tuple[list[str], list[list[str]], dict]:
    phases = resolve_phases(scenario)
    rows = []
    for rounds in scenario.rounds_list:
        curves = simulate_outage_curves(
            scenario.network,
            phases,
            scenario.snr_grid_linear,
            max_rounds=rounds,
            rate=scenario.rate,
            trials=scenario.mc_trials,
            seed=scenario.mc_seed,
            chunk_size=scenario.mc_chunk_size,
            workers=workers,
        )
        for scheme in scenario.schemes:
            for db, point in zip(scenario.snr_grid_db, curves[scheme].entries):
                rows.append(
                    [
                        _DB_FMT.format(db),
                        scheme.value,
                        str(rounds),
                        _PROB_FMT.format(point.p_out),
                        _PROB_FMT.format(point.stderr),
                        str(scenario.mc_trials),
                    ]
                )
    extra = {"mc": {"trials": scenario.mc_trials, "seed": scenario.mc_seed,
                    "chunk_size": scenario.mc_chunk_size, "workers": workers}}
    return ["snr_db", "scheme", "rounds", "p_out_mc", "stderr", "trials"], rows, extra


def _run_optimize_phase(scenario: Scenario) -> tuple[list[str], list[list[str]], dict]:
    solution = optimal_phases(scenario.network)
    rows = []
    stats_used = []
    for scheme in scenario.schemes:
        for rounds in scenario.rounds_list:
            harq = _harq_for(scenario, scheme, rounds)
            tables = compare_strategies(
                scenario.network,
                scenario.snr_grid_linear,
                harq,
                policy=scenario.policy,
                fixed_value=scenario.phase_fixed_value,
                random_seed=scenario.phase_seed,
            )
            for strategy in ("optimal", "fixed", "random"):
                for db, point in zip(scenario.snr_grid_db, tables[strategy].entries):
                    rows.append(
                        [
                            _DB_FMT.format(db),
                            scheme.value,
                            str(rounds),
                            strategy,
                            _PROB_FMT.format(point.p_out),
                        ]
                    )
    for strategy_phases in (
        solution.phases,
        PhaseConfig.constant(scenario.network, scenario.phase_fixed_value),
        PhaseConfig.uniform_random(scenario.network, scenario.phase_seed),
    ):
        stats_used.append(compute_stats(scenario.network, strategy_phases))
    extra = {
        "phase_solution": {
            "psi_glos_achieved": solution.psi_glos_achieved,
            "upper_bound": solution.upper_bound,
            "gap": solution.gap,
            "thetas": [list(panel) for panel in solution.phases.thetas],
        },
        "strategies": {
            "fixed_value": scenario.phase_fixed_value,
            "random_seed": scenario.phase_seed,
        },
        "truncation_max_order_used": _max_order_used(scenario, stats_used),
    }
    return ["snr_db", "scheme", "rounds", "strategy", "p_out_exact"], rows, extra


def _run_diversity(scenario: Scenario) -> tuple[list[str], list[list[str]], dict]:
    phases = resolve_phases(scenario)
    stats = compute_stats(scenario.network, phases)
    if scenario.diversity_window_db is not None:
        lo_db, hi_db = scenario.diversity_window_db
    else:
        hi_db = scenario.snr_grid_db[-1]
        lo_db = hi_db - _DEFAULT_DIVERSITY_SPAN_DB
    window = (db_to_linear(lo_db), db_to_linear(hi_db))
    rows = []
    for scheme in scenario.schemes:
        for rounds in scenario.rounds_list:
            curve = exact_outage_curve(stats, _harq_for(scenario, scheme, rounds), scenario.policy)
            try:
                fit = fit_diversity(curve, window)
            except FitError as exc:
                raise FitError(
                    f"{scheme.value} L={rounds}: {exc} "
                    f"(window {lo_db:g}..{hi_db:g} dB; outage may sit below the "
                    f"1e-14 fit floor there)"
                ) from exc
            rows.append(
                [
                    scheme.value,
                    str(rounds),
                    f"{fit.d:.6f}",
                    f"{fit.slope:.6f}",
                    f"{fit.intercept:.6f}",
                    _DB_FMT.format(lo_db),
                    _DB_FMT.format(hi_db),
                    f"{fit.residual:.6e}",
                    str(fit.n_points),
                ]
            )
    header = [
        "scheme", "rounds", "d_fit", "slope", "intercept",
        "window_lo_db", "window_hi_db", "residual", "n_points",
    ]
    return header, rows, {
        "channel_stats": _stats_dict(stats),
        "truncation_max_order_used": _max_order_used(scenario, [stats]),
    }


def _stats_dict(stats: ChannelStats) -> dict:
    return {
        "mu_re": stats.mu.real,
        "mu_im": stats.mu.imag,
        "psi_glos": stats.psi_glos,
        "psi_gnlos": stats.psi_gnlos,
    }


def run(
    subcommand: str,
    scenario: Scenario,
    out_dir: str | Path,
    workers: int = 1,
    scenario_path: str | None = None,
) -> tuple[Path, Path]:
    """Execute a subcommand; returns (csv_path, manifest_path)."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    if subcommand == "op-curve":
        header, rows, extra = _run_op_curve(scenario)
    elif subcommand == "asymptote":
        header, rows, extra = _run_asymptote(scenario)
    elif subcommand == "mc":
        header, rows, extra = _run_mc(scenario, workers)
    elif subcommand == "optimize-phase":
        header, rows, extra = _run_optimize_phase(scenario)
    else:
        header, rows, extra = _run_diversity(scenario)
    compute_s = time.perf_counter() - t0

    csv_path = out_dir / f"{subcommand}.csv"
    t1 = time.perf_counter()
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    write_s = time.perf_counter() - t1

    manifest = {
        "tool": "risharq",
        "version": __version__,
        "subcommand": subcommand,
        "scenario_path": scenario_path,
        "workers": workers,
        "outputs": {"csv": csv_path.name, "rows": len(rows)},
        "seeds": {
            "los_phase_seed": scenario.los_phase_seed,
            "phase_seed": scenario.phase_seed,
            "mc_seed": scenario.mc_seed,
        },
        "resolved_scenario": scenario_to_dict(scenario),
        "timings_s": {"compute": compute_s, "write": write_s},
    }
    manifest.update(extra)
    manifest_path = out_dir / f"{subcommand}_manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, manifest_path


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parse_trunc_flag(text: str) -> TruncationPolicy:
    if text.startswith("fixed:"):
        try:
            return TruncationPolicy.fixed(int(text[6:]))
        except ValueError as exc:
            raise ConfigError(f"--trunc: bad fixed order in {text!r}") from exc
    if text.startswith("adaptive:"):
        return TruncationPolicy.adaptive(_parse_scalar(text[9:], "--trunc"))
    if text == "adaptive":
        return TruncationPolicy.adaptive()
    raise ConfigError(f"--trunc must look like fixed:50 or adaptive:1e-12, got {text!r}")


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    from dataclasses import replace

    updates: dict[str, Any] = {}
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        updates["mc_trials"] = args.trials
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        updates["mc_seed"] = args.seed
    if args.trunc is not None:
        updates["policy"] = _parse_trunc_flag(args.trunc)
    return replace(scenario, **updates) if updates else scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risharq",
        description="Outage analysis for HARQ-aided multi-RIS links: exact and "
        "asymptotic curves, Monte-Carlo validation, phase-shift optimization.",
    )
    parser.add_argument("--version", action="version", version=f"risharq {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    descriptions = {
        "op-curve": "exact outage probability over the SNR grid",
        "asymptote": "high-SNR asymptotic outage over the SNR grid",
        "mc": "Monte-Carlo outage estimates with standard errors",
        "optimize-phase": "closed-form optimal phases and strategy comparison",
        "diversity": "log-log slope fits of the exact outage curves",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=descriptions[name])
        sp.add_argument("--scenario", required=True, help="scenario TOML/JSON (or run manifest)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--trials", type=int, default=None, help="override mc.trials")
        sp.add_argument("--seed", type=int, default=None, help="override mc.seed")
        sp.add_argument(
            "--trunc", default=None, metavar="fixed:50|adaptive:1e-12",
            help="override the truncation policy",
        )
        sp.add_argument("--workers", type=int, default=1, help="worker threads for MC chunks")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        scenario = _apply_overrides(scenario, args)
        csv_path, manifest_path = run(
            args.subcommand,
            scenario,
            args.out,
            workers=args.workers,
            scenario_path=str(args.scenario),
        )
    except (ConfigError, DomainError) as exc:
        print(f"risharq: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TruncationError, FitError, ArithmeticError) as exc:
        print(f"risharq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RisHarqError as exc:
        print(f"risharq: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"wrote {csv_path}")
    print(f"wrote {manifest_path}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
