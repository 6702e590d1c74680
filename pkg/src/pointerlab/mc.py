"""Replicated Monte Carlo runs and report assembly.

A run is described by an :class:`ExperimentConfig`.  Replica ``i`` draws from
``derive_stream(seed, i)`` and gets ``total // replicas`` events, the first
``total % replicas`` replicas one extra.  Replica tallies are summed in index
order, and each estimate in the report sits beside its exact value.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import __version__, bulk
from .core import GridPoint, Track
from .envelope import DistributionError, EnvelopePair, exact_success_probability, parse_distribution
from .oracle import (
    exact_line_table,
    exact_policy_success,
    exact_postdiction_table,
    exact_prediction_table,
    rational_str,
)
from .rng import SEED_MAX, derive_stream
from .stats import Tally, UndefinedEstimate, wilson_interval
from .strategies import Policy
from .walks import ConfigError, LineTrack, stationary_distribution

EXPERIMENTS = ("envelope", "postdict", "predict", "demon", "line", "oracle")
ORACLE_KINDS = ("predict", "postdict", "line")
SIGMA_BAND = 4.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of every subcommand; fields irrelevant to an experiment are ignored by it.

    ``light`` defaults to ``antipodal`` for postdiction and ``grid:1`` elsewhere.
    """

    experiment: str = "predict"
    stations: int = 9
    trials: int = 1_000_000
    steps: int = 1_000_000
    seed: int = 42
    replicas: int = 1
    workers: int = 1
    light: str | None = None
    policy: str = "pointer"
    alpha: float = 0.001
    min_samples: int = 1000
    bin: str = "current"
    freeze_after: int | None = None
    start: str = "stationary"
    burn_in: int = 0
    small: float = 1.0
    large: float = 2.0
    threshold: str = "uniform:0,4"
    kind: str = "predict"
    override: str = ""
    level: float = 0.95
    format: str = "json"
    timing: bool = False

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}", unknown[0])
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def resolved(self) -> "ExperimentConfig":
        """Validated copy with the per-experiment light default filled in."""
        if self.light is None:
            light = "antipodal" if self._light_is_relative() else "grid:1"
            return dataclasses.replace(self, light=light).resolved()
        self.validate()
        return self

    def _light_is_relative(self) -> bool:
        return self.experiment == "postdict" or (self.experiment == "oracle" and self.kind == "postdict")

    def validate(self) -> None:
        def need(ok: bool, name: str, message: str):
            if not ok:
                raise ConfigError(f"{name}: {message}", name)

        need(self.experiment in EXPERIMENTS, "experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        need(isinstance(self.stations, int) and self.stations >= 3, "stations", "must be an integer >= 3")
        for name in ("trials", "steps", "burn_in"):
            value = getattr(self, name)
            need(isinstance(value, int) and value >= 0, name, "must be a non-negative integer")
        need(isinstance(self.seed, int) and 0 <= self.seed <= SEED_MAX, "seed", "must be a 64-bit unsigned integer")
        need(isinstance(self.replicas, int) and self.replicas >= 1, "replicas", "must be >= 1")
        need(isinstance(self.workers, int) and self.workers >= 1, "workers", "must be >= 1")
        need(0 < self.alpha < 1, "alpha", "must lie in (0, 1)")
        need(isinstance(self.min_samples, int) and self.min_samples >= 1, "min_samples", "must be >= 1")
        need(self.bin in ("current", "destination"), "bin", "must be 'current' or 'destination'")
        need(
            self.freeze_after is None or (isinstance(self.freeze_after, int) and self.freeze_after >= 0),
            "freeze_after",
            "must be a non-negative integer",
        )
        need(0 < self.level < 1, "level", "must lie in (0, 1)")
        need(self.format in ("json", "csv"), "format", "must be 'json' or 'csv'")
        need(self.kind in ORACLE_KINDS, "kind", f"must be one of {', '.join(ORACLE_KINDS)}")
        self.start_station()
        self.policy_obj()
        self.override_set()
        if self.experiment == "envelope":
            try:
                EnvelopePair(self.small, self.large)
                parse_distribution(self.threshold)
            except DistributionError as exc:
                raise ConfigError(f"threshold: {exc}", "threshold") from None
            except ValueError as exc:
                raise ConfigError(f"small/large: {exc}", "small") from None
        if self.experiment in ("postdict", "predict", "demon") or (
            self.experiment == "oracle" and self.kind != "line"
        ):
            self.light_obj()
            if self.light == "antipodal":
                need(self.stations >= 5, "stations", "the antipodal light needs at least 5 stations")

    def light_obj(self) -> GridPoint | str:
        text = self.light or ""
        if text in ("antipodal", "adjacent"):
            if not self._light_is_relative():
                raise ConfigError(f"light: {text!r} only applies to postdiction", "light")
            return text
        name, _, arg = text.partition(":")
        if name != "grid" or not arg.lstrip("-").isdigit():
            raise ConfigError(f"light: expected 'antipodal', 'adjacent' or 'grid:<g>', got {text!r}", "light")
        g = int(arg)
        if not 0 <= g < 2 * self.stations or g % 2 == 0:
            raise ConfigError(f"light: grid:{g} is not a light (odd index below {2 * self.stations})", "light")
        return GridPoint(g)

    def policy_obj(self) -> Policy:
        policy = Policy.parse(self.policy)
        bad = sorted(s for s in policy.override if not 0 <= s < self.stations)
        if bad:
            raise ConfigError(f"policy: stations {bad} out of range", "policy")
        return policy

    def override_set(self) -> frozenset[int]:
        try:
            stations = frozenset(int(s) for s in self.override.split(",") if s.strip())
        except ValueError:
            raise ConfigError(f"override: bad station list {self.override!r}", "override") from None
        if any(not 0 <= s < self.stations for s in stations):
            raise ConfigError("override: station out of range", "override")
        return stations

    def start_station(self) -> str | int:
        if self.start == "stationary":
            return self.start
        if not str(self.start).isdigit() or not int(self.start) < self.stations:
            raise ConfigError(f"start: expected 'stationary' or a station index, got {self.start!r}", "start")
        return int(self.start)


@dataclass
class Report:
    experiment: str
    parameters: dict[str, Any]
    seed: int
    results: dict[str, dict[str, dict[str, Any]]]
    extras: dict[str, Any] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def row(self, group: str, key: str = "all") -> dict[str, Any]:
        return self.results[group][key]


def _split(total: int, replicas: int) -> list[int]:
    base, extra = divmod(total, replicas)
    return [base + (i < extra) for i in range(replicas)]


def _run_one(config: ExperimentConfig, index: int, share: int) -> bulk.RunCounts:
    stream = derive_stream(config.seed, index)
    n = config.stations
    exp = config.experiment
    if exp == "envelope":
        pair = EnvelopePair(config.small, config.large)
        return bulk.envelope(pair, parse_distribution(config.threshold), share, stream)
    if exp == "postdict":
        return bulk.postdict(Track(n), share, stream, config.light_obj())
    if exp == "line":
        policy = config.policy_obj()
        override = range(n) if policy.kind == "heads" else policy.override
        return bulk.line(LineTrack(n), share, stream, override, config.start_station(), config.burn_in)
    policy = config.policy_obj() if exp == "predict" else Policy()
    demon = None
    if exp == "demon":
        demon = bulk.DemonSettings(config.bin, config.alpha, config.min_samples, config.freeze_after)
    return bulk.predict(
        Track(n),
        share,
        stream,
        config.light_obj(),
        override=policy.override,
        heads_everywhere=policy.kind == "heads",
        demon=demon,
        start=config.start_station(),
        burn_in=config.burn_in,
    )


def _merge(parts: list[bulk.RunCounts]) -> dict[str, dict[str, Tally]]:
    merged: dict[str, dict[str, Tally]] = {}
    for part in parts:
        for group, tallies in part.groups.items():
            slot = merged.setdefault(group, {})
            for key, t in tallies.items():
                slot[key] = slot.get(key, Tally()) + t
    return merged


def estimate_row(t: Tally, oracle: Fraction | float | None, level: float) -> dict[str, Any]:
    row: dict[str, Any] = {"successes": t.successes, "trials": t.trials}
    try:
        ci = wilson_interval(t, level)
        row.update(estimate=ci.point, wilson_lo=ci.lo, wilson_hi=ci.hi, undefined=False)
    except UndefinedEstimate:
        row.update(estimate=None, wilson_lo=None, wilson_hi=None, undefined=True)
    row.update(_oracle_fields(oracle))
    row["z"], row["within_4sigma"] = _agreement(t, oracle)
    return row


def _oracle_fields(oracle) -> dict[str, Any]:
    if oracle is None:
        return {"oracle": None, "oracle_decimal": None}
    if isinstance(oracle, Fraction):
        return {"oracle": rational_str(oracle), "oracle_decimal": float(oracle)}
    return {"oracle": None, "oracle_decimal": float(oracle)}


def _agreement(t: Tally, oracle) -> tuple[float | None, bool | None]:
    if oracle is None or t.trials == 0:
        return None, None
    p, o = t.successes / t.trials, float(oracle)
    sd = math.sqrt(o * (1 - o) / t.trials)
    if sd == 0:
        return None, p == o
    z = (p - o) / sd
    return z, abs(z) < SIGMA_BAND


def _station_oracles(values: dict[int, Fraction]) -> dict[str, Fraction]:
    return {str(k): v for k, v in values.items()}


def _oracles(config: ExperimentConfig, parts: list[bulk.RunCounts]) -> tuple[dict[str, dict], dict]:
    """Exact values for each result group, plus experiment-specific extras."""
    n = config.stations
    exp = config.experiment
    extras: dict[str, Any] = {}
    if exp == "envelope":
        pair, dist = EnvelopePair(config.small, config.large), parse_distribution(config.threshold)
        return {
            "overall": {"all": exact_success_probability(pair, dist)},
            "by_envelope": {"small": 1 - dist.cdf(pair.s), "large": dist.cdf(pair.l)},
        }, extras
    if exp == "postdict":
        table = exact_postdiction_table(n, config.light_obj())
        return {
            "overall": {"all": table.overall},
            "per_destination": _station_oracles(table.per_destination),
            "per_current": _station_oracles(table.per_current),
            "origin_ccw_side": {str(d): Fraction(1, 2) for d in range(n)},
        }, extras
    if exp == "line":
        policy = config.policy_obj()
        override = range(n) if policy.kind == "heads" else policy.override
        scored, coin = exact_line_table(n, True, override), exact_line_table(n, False, override)
        return {
            "overall": {"all": scored.overall},
            "per_current": _station_oracles(scored.per_current),
            "per_destination": _station_oracles(scored.per_destination),
            "occupancy": _station_oracles(dict(enumerate(stationary_distribution("line", n)))),
            "coin_overall": {"all": coin.overall},
            "coin_per_destination": _station_oracles(coin.per_destination),
            "coin_per_current": _station_oracles(coin.per_current),
        }, extras
    light = config.light_obj()
    occupancy = _station_oracles(dict(enumerate(stationary_distribution("circular", n))))
    if exp == "predict":
        policy = config.policy_obj()
        override = range(n) if policy.kind == "heads" else policy.override
        table = exact_prediction_table(n, light, override)
        return {
            "overall": {"all": table.overall},
            "per_current": _station_oracles(table.per_current),
            "per_destination": _station_oracles(table.per_destination),
            "occupancy": occupancy,
        }, extras
    return _demon_oracles(config, parts, light, occupancy)


def _demon_oracles(config, parts, light, occupancy):
    """Per-station values are given only where every policy phase agrees on them."""
    n = config.stations
    tables: dict[tuple[int, ...], Any] = {}
    replicas = []
    weighted, total = Fraction(0), 0
    for i, part in enumerate(parts):
        final = tuple(part.extras["override_set"])
        for phase in part.extras["phases"]:
            key = tuple(phase["override_set"])
            if key not in tables:
                tables[key] = exact_prediction_table(n, light, key)
            weighted += tables[key].overall * phase["tally"].trials
            total += phase["tally"].trials
        if final not in tables:
            tables[final] = exact_prediction_table(n, light, final)
        replicas.append(
            {
                "replica": i,
                "override_set": list(final),
                "triggered_at": part.extras["triggered_at"],
                "policy_oracle": rational_str(tables[final].overall),
                "phases": [
                    {"override_set": p["override_set"], "successes": p["tally"].successes, "trials": p["tally"].trials}
                    for p in part.extras["phases"]
                ],
            }
        )
    finals = {tuple(r["override_set"]) for r in replicas}
    realized = frozenset().union(*map(frozenset, finals))
    policy_value = exact_policy_success(n, light, realized) if len(finals) == 1 else None
    if policy_value is None:
        # distinct demons per replica: weight each final policy by its replica's step count
        shares = _split(config.steps, config.replicas)
        policy_value = sum(
            (tables[tuple(r["override_set"])].overall * s for r, s in zip(replicas, shares)), Fraction(0)
        ) / max(config.steps, 1)

    def agreed(attr: str) -> dict[str, Fraction]:
        out = {}
        for s in range(n):
            values = {getattr(t, attr).get(s) for t in tables.values()}
            if len(values) == 1 and None not in values:
                out[str(s)] = values.pop()
        return out

    per_current, per_destination = agreed("per_current"), agreed("per_destination")
    groups = {
        "overall": {"all": policy_value},
        "per_current": per_current,
        "per_destination": per_destination,
        "per_bin": per_current if config.bin == "current" else per_destination,
        "occupancy": occupancy,
    }
    extras = {
        "replicas": replicas,
        "policy_oracle": rational_str(policy_value),
        "phase_weighted_oracle": rational_str(weighted / total) if total else None,
        "modified_policy_beats_half": policy_value > Fraction(1, 2),
    }
    return groups, extras


def run_replicas(config: ExperimentConfig) -> Report:
    config = config.resolved()
    if config.experiment == "oracle":
        return oracle_report(config)
    started = time.perf_counter()
    total = config.trials if config.experiment in ("envelope", "postdict") else config.steps
    shares = _split(total, config.replicas)
    jobs = list(enumerate(shares))
    if config.workers > 1 and config.replicas > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(lambda job: _run_one(config, *job), jobs))
    else:
        parts = [_run_one(config, i, s) for i, s in jobs]

    merged = _merge(parts)
    oracles, extras = _oracles(config, parts)
    results = {
        group: {key: estimate_row(t, oracles.get(group, {}).get(key), config.level) for key, t in tallies.items()}
        for group, tallies in merged.items()
    }
    extras["replica_overall"] = [
        {"replica": i, "successes": p.groups["overall"]["all"].successes, "trials": p.groups["overall"]["all"].trials}
        for i, p in enumerate(parts)
    ]
    if config.experiment == "line":
        extras["forced_moves"] = sum(p.extras["forced_moves"] for p in parts)
    meta = {"package": __version__}
    if config.timing:
        meta["runtime_seconds"] = time.perf_counter() - started
    return Report(config.experiment, config.to_dict(), config.seed, results, extras, meta)


def oracle_report(config: ExperimentConfig) -> Report:
    config = config.resolved()
    n = config.stations
    if config.kind == "line":
        table = exact_line_table(n, True, config.override_set())
        coin = exact_line_table(n, False, config.override_set())
        results = _table_rows(table)
        results["coin_per_destination"] = _exact_rows(coin.per_destination)
        results["coin_per_current"] = _exact_rows(coin.per_current)
        results["coin_overall"] = _exact_rows({"all": coin.overall})
        interior = {table.per_destination[d] for d in range(1, n - 1)}
        classes = {"interior": interior.pop() if len(interior) == 1 else None}
    elif config.kind == "postdict":
        table = exact_postdiction_table(n, config.light_obj())
        results, classes = _table_rows(table), {}
    else:
        light = config.light_obj()
        table = exact_prediction_table(n, light, config.override_set())
        results = _table_rows(table)
        weak_stations = set(light.neighbours(Track(n)))
        weak = {v for d, v in table.per_destination.items() if d in weak_stations}
        strong = {v for d, v in table.per_destination.items() if d not in weak_stations}
        classes = {
            "weak": weak.pop() if len(weak) == 1 else None,
            "strong": strong.pop() if len(strong) == 1 else None,
        }
    results["classes"] = _exact_rows(classes)
    meta = {"package": __version__}
    return Report("oracle", config.to_dict(), config.seed, results, {}, meta)


def _exact_rows(values: dict) -> dict[str, dict[str, Any]]:
    return {str(k): _oracle_fields(v) for k, v in values.items()}


def _table_rows(table) -> dict[str, dict[str, dict[str, Any]]]:
    return {
        "overall": _exact_rows({"all": table.overall}),
        "per_destination": _exact_rows(table.per_destination),
        "per_current": _exact_rows(table.per_current),
        "stationary": _exact_rows(dict(enumerate(table.stationary))),
    }
