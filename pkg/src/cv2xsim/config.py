"""Scenario configuration: defaults, validation, and serialization.

A `ScenarioConfig` fully parameterizes one simulated world. Defaults follow
the standard broadcast setup this simulator targets: 100 ms transmission
period, 100 resource blocks, SPS counter range (5, 15), keep probability 0.8
(reselection probability 0.2), and a 1000 ms sensing window.

Configs are read from JSON files whose keys are exactly the field names
below; CLI `--set key=value` overrides are applied to the raw mapping before
validation.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Union

Interval = tuple[int, int]

POLICIES = ("uniform", "sensing")


class ConfigError(ValueError):
    """Raised when a scenario configuration violates an invariant."""


@dataclass(frozen=True)
class ScenarioConfig:
    # population
    num_targets: int = 5          # target vehicles, >= 1
    num_attackers: int = 0        # jammers, >= 0
    # channel geometry
    num_resources: int = 100      # resource blocks per transmission period
    period_ms: int = 100          # transmission period length
    # target scheduling
    sps_range: Interval = (5, 15)           # closed interval for C_s draws
    oneshot_enabled: bool = False
    oneshot_range: Interval = (2, 6)        # closed interval for C_o draws
    keep_prob: float = 0.8                  # p_k; reselection prob is 1 - p_k
    selection_policy: str = "uniform"       # SPS grant reselection policy
    oneshot_policy: str = "sensing"         # one-shot resource selection policy
    candidate_min_fraction: float = 0.2     # minimum candidate-pool fraction
    # attacker behaviour
    attacker_interval: Union[int, Interval] = (5, 15)  # fixed hold or interval
    # sensing
    sensing_window_periods: int = None      # filled from 1000 ms / period_ms
    sense_any_energy: bool = True           # occupancy sensing; False = decodable-only
    extra_co_decrement_on_keep: bool = False  # alternate keep-branch C_o semantics
    # run control
    sim_periods: int = 1_000_000
    warmup_periods: int = None              # filled from the sensing window
    master_seed: int = 42
    replications: int = 4

    @property
    def reselect_prob(self) -> float:
        return 1.0 - self.keep_prob


_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)}

_INT_FIELDS = (
    "num_targets",
    "num_attackers",
    "num_resources",
    "period_ms",
    "sensing_window_periods",
    "sim_periods",
    "warmup_periods",
    "master_seed",
    "replications",
)
_BOOL_FIELDS = ("oneshot_enabled", "sense_any_energy", "extra_co_decrement_on_keep")
_FLOAT_FIELDS = ("keep_prob", "candidate_min_fraction")


def _as_int(name: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return value


def _as_interval(name: str, value: Any) -> Interval:
    if not isinstance(value, (tuple, list)) or len(value) != 2:
        raise ConfigError(f"{name}: expected a [lower, upper] pair, got {value!r}")
    lo = _as_int(name, value[0])
    hi = _as_int(name, value[1])
    if lo <= 0:
        raise ConfigError(f"{name}: bounds must be positive")
    if lo > hi:
        raise ConfigError(f"{name}: lower bound exceeds upper")
    return (lo, hi)


def validate_config(raw: Union[ScenarioConfig, Mapping[str, Any], None] = None,
                    **overrides: Any) -> ScenarioConfig:
    """Fill defaults, check every invariant, and return a frozen config.

    `raw` may be a mapping (e.g. parsed from JSON), an existing config, or
    None; keyword overrides are applied on top. Raises ConfigError with a
    message naming the offending field.
    """
    if raw is None:
        data: dict[str, Any] = {}
    elif isinstance(raw, ScenarioConfig):
        data = dataclasses.asdict(raw)
    else:
        data = dict(raw)
    data.update(overrides)

    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration field")

    for name in _INT_FIELDS:
        if data.get(name) is not None:
            data[name] = _as_int(name, data[name])
    for name in _BOOL_FIELDS:
        if name in data and not isinstance(data[name], bool):
            raise ConfigError(f"{name}: expected true or false, got {data[name]!r}")
    for name in _FLOAT_FIELDS:
        if name in data:
            if isinstance(data[name], bool) or not isinstance(data[name], (int, float)):
                raise ConfigError(f"{name}: expected a number, got {data[name]!r}")
            data[name] = float(data[name])

    cfg = ScenarioConfig(**{**dataclasses.asdict(ScenarioConfig()), **data})

    if cfg.num_targets < 1:
        raise ConfigError("num_targets: must be at least 1")
    if cfg.num_attackers < 0:
        raise ConfigError("num_attackers: must not be negative")
    if cfg.num_resources < 1:
        raise ConfigError("num_resources: must be at least 1")
    if cfg.period_ms < 1:
        raise ConfigError("period_ms: must be at least 1")

    sps = _as_interval("sps_range", cfg.sps_range)
    oneshot = _as_interval("oneshot_range", cfg.oneshot_range)

    if not 0.0 <= cfg.keep_prob <= 1.0:
        raise ConfigError("keep_prob: must lie in [0, 1]")
    if not 0.0 < cfg.candidate_min_fraction <= 1.0:
        raise ConfigError("candidate_min_fraction: must lie in (0, 1]")
    if cfg.selection_policy not in POLICIES:
        raise ConfigError(f"selection_policy: must be one of {POLICIES}")
    if cfg.oneshot_policy not in POLICIES:
        raise ConfigError(f"oneshot_policy: must be one of {POLICIES}")

    interval = cfg.attacker_interval
    if isinstance(interval, (tuple, list)):
        interval = _as_interval("attacker_interval", interval)
    else:
        interval = _as_int("attacker_interval", interval)
        if interval < 1:
            raise ConfigError("attacker_interval: must be at least 1")

    # derived defaults: 1000 ms sensing window, warm-up long enough to fill it
    window = cfg.sensing_window_periods
    if window is None:
        window = max(1, 1000 // cfg.period_ms)
    if window < 1:
        raise ConfigError("sensing_window_periods: must be at least 1")
    warmup = cfg.warmup_periods
    if warmup is None:
        warmup = window
    if warmup < window:
        raise ConfigError("warmup_periods: must cover the sensing window")

    if cfg.sim_periods < 1:
        raise ConfigError("sim_periods: must be at least 1")
    if not 0 <= cfg.master_seed < 2**64:
        raise ConfigError("master_seed: must be a 64-bit unsigned integer")
    if cfg.replications < 1:
        raise ConfigError("replications: must be at least 1")

    return dataclasses.replace(
        cfg,
        sps_range=sps,
        oneshot_range=oneshot,
        attacker_interval=interval,
        sensing_window_periods=window,
        warmup_periods=warmup,
    )


def attacker_bounds(interval: Union[int, Interval]) -> Interval:
    """Normalize the attacker hold interval to closed (lo, hi) bounds."""
    if isinstance(interval, (tuple, list)):
        return (interval[0], interval[1])
    return (interval, interval)


def to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """JSON-ready mapping with exactly the configuration field names."""
    data = dataclasses.asdict(cfg)
    data["sps_range"] = list(cfg.sps_range)
    data["oneshot_range"] = list(cfg.oneshot_range)
    if isinstance(cfg.attacker_interval, tuple):
        data["attacker_interval"] = list(cfg.attacker_interval)
    return data


def dumps_config(cfg: ScenarioConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2) + "\n"


def save_config(cfg: ScenarioConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_config(cfg))


def load_raw(path: Union[str, Path]) -> dict[str, Any]:
    """Read a JSON configuration file into a raw mapping (not yet validated)."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    return data


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    return validate_config(load_raw(path))


def parse_set_overrides(pairs: list[str]) -> dict[str, Any]:
    """Parse `--set key=value` pairs; values are JSON fragments when possible."""
    out: dict[str, Any] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out
