"""Fair-coin walks on the circular track and on a line with reflecting ends."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Direction, Track
from .rng import RngStream


class ConfigError(ValueError):
    """Invalid experiment or model parameter; ``field`` names the culprit."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class LineTrack:
    """``n_stations`` stations at ``i / (N - 1)`` on a unit segment."""

    n_stations: int

    def __post_init__(self):
        if self.n_stations < 3:
            raise ConfigError(f"a line needs at least 3 stations, got {self.n_stations}", "stations")

    def position(self, station: int) -> Fraction:
        return Fraction(station, self.n_stations - 1)

    def is_boundary(self, station: int) -> bool:
        return station == 0 or station == self.n_stations - 1


@dataclass(frozen=True)
class WalkState:
    station: int
    steps: int = 0
    forced: bool = False


def step_circular(track: Track, state: WalkState, coin: Direction) -> WalkState:
    return WalkState((state.station + coin.value) % track.n_stations, state.steps + 1)


def step_line(line: LineTrack, state: WalkState, coin: Direction) -> WalkState:
    """One move of the reflecting walk; boundary moves go inward whatever the coin says."""
    last = line.n_stations - 1
    if state.station == 0:
        return WalkState(1, state.steps + 1, forced=True)
    if state.station == last:
        return WalkState(last - 1, state.steps + 1, forced=True)
    return WalkState(state.station + coin.value, state.steps + 1)


def stationary_distribution(kind: str, n: int) -> tuple[Fraction, ...]:
    if n < 3:
        raise ConfigError(f"need at least 3 stations, got {n}", "stations")
    if kind == "circular":
        return (Fraction(1, n),) * n
    if kind == "line":
        end, inner = Fraction(1, 2 * (n - 1)), Fraction(1, n - 1)
        return (end,) + (inner,) * (n - 2) + (end,)
    raise ConfigError(f"unknown walk kind {kind!r}", "kind")


def check_distribution(dist: Sequence[Fraction]) -> None:
    if any(p < 0 for p in dist) or sum(dist) != 1:
        raise ValueError("station probabilities must be non-negative and sum to exactly 1")


def transition_apply(kind: str, dist: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """One step of the chain applied to a row vector, ``dist @ P``, exactly."""
    n = len(dist)
    out = [Fraction(0)] * n
    if kind == "circular":
        track = Track(n)
        step = lambda s, c: step_circular(track, WalkState(s), c).station  # noqa: E731
    else:
        line = LineTrack(n)
        step = lambda s, c: step_line(line, WalkState(s), c).station  # noqa: E731
    for s, p in enumerate(dist):
        for coin in Direction:
            out[step(s, coin)] += p / 2
    return tuple(out)


def sample_stationary(dist: Sequence[Fraction], stream: RngStream) -> int:
    """Draw a station by inverting the cumulative law with one uniform draw."""
    cumulative = []
    total = Fraction(0)
    for p in dist:
        total += p
        cumulative.append(float(total))
    u = stream.generator.random()
    return min(bisect.bisect_right(cumulative, u), len(dist) - 1)
