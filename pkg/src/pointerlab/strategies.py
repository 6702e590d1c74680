"""Pointer guesses, the prediction policies and the record-keeping demon.

These are the one-event-at-a-time reference semantics.  The vectorised runners
in :mod:`pointerlab.bulk` reproduce them draw for draw on the circular track.

Stream consumption per event is fixed: postdiction draws origin, coin, pointer;
prediction draws pointer, then coin, whatever the policy, so two policies fed
identical streams see identical coins and pointers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .core import (
    Direction,
    GeometryError,
    GridPoint,
    Track,
    antipodal_light,
    first_encounter_direction,
    light_on_major_arc,
    position_of,
)
from .rng import RngStream, flip_coin, uniform_position
from .stats import Tally, binomial_flag
from .walks import (
    ConfigError,
    LineTrack,
    WalkState,
    sample_stationary,
    stationary_distribution,
    step_circular,
    step_line,
)

AnyTrack = Union[Track, LineTrack]


class ForcedMoveError(ValueError):
    """A boundary move on the line carries no coin information and cannot be scored by the demon."""


@dataclass(frozen=True)
class PredictionEvent:
    current: int
    pointer: float
    guess: Direction
    coin: Direction
    destination: int
    correct: bool
    forced: bool = False


@dataclass(frozen=True)
class Policy:
    """``pointer``, ``heads`` or ``mixed`` (heads at ``override`` stations, pointer elsewhere)."""

    kind: str = "pointer"
    override: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.kind not in ("pointer", "heads", "mixed"):
            raise ConfigError(f"unknown policy {self.kind!r}", "policy")

    def guesses_heads_at(self, station: int) -> bool:
        if self.kind == "heads":
            return True
        return self.kind == "mixed" and station in self.override

    @classmethod
    def parse(cls, text: str) -> "Policy":
        name, _, args = text.partition(":")
        if name == "mixed":
            try:
                stations = frozenset(int(a) for a in args.split(",") if a.strip())
            except ValueError:
                raise ConfigError(f"bad station list in policy {text!r}", "policy") from None
            return cls("mixed", stations)
        if args:
            raise ConfigError(f"policy {name!r} takes no arguments", "policy")
        return cls(name)

    def spec(self) -> str:
        if self.kind == "mixed":
            return "mixed:" + ",".join(str(s) for s in sorted(self.override))
        return self.kind


POINTER = Policy("pointer")
ALWAYS_HEADS = Policy("heads")


def pointer_guess(track: Track, current: int, light: GridPoint, pointer: float) -> Direction:
    """Guess the direction in which the pointer is met before the light."""
    track.check_station(current)
    track.check_light(light)
    return first_encounter_direction(
        position_of(track, track.station_grid(current)), position_of(track, light), pointer
    )


def line_pointer_guess(line: LineTrack, current: int, pointer: float) -> Direction:
    """Guess a move toward the pointer; a pointer on the station itself counts as CW."""
    return Direction.CW if pointer >= line.position(current) else Direction.CCW


def postdiction_light(track: Track, destination: int, mode: Union[str, GridPoint]) -> GridPoint:
    """Resolve a postdiction light: ``antipodal`` or ``adjacent`` to the destination, or a fixed grid point."""
    if isinstance(mode, GridPoint):
        track.check_light(mode)
        return mode
    if mode == "antipodal":
        return antipodal_light(track, destination)
    if mode == "adjacent":
        return GridPoint((2 * destination - 1) % track.grid_size)
    raise ConfigError(f"unknown postdiction light {mode!r}", "light")


def run_postdiction_trial(
    track: Track, stream: RngStream, light: Union[str, GridPoint] = "antipodal"
) -> PredictionEvent:
    """Guess which way the train just came from, with the light placed after the coin fell."""
    n = track.n_stations
    if light == "antipodal" and n < 5:
        raise ConfigError(f"the antipodal light needs at least 5 stations, got {n}", "stations")
    origin = sample_stationary(stationary_distribution("circular", n), stream)
    coin = flip_coin(stream)
    destination = step_circular(track, WalkState(origin), coin).station
    lamp = postdiction_light(track, destination, light)
    if light == "antipodal" and not light_on_major_arc(track, destination, lamp):
        raise GeometryError(f"light {lamp.index} is not on the major arc around station {destination}")
    pointer = uniform_position(stream)
    guess = pointer_guess(track, origin, lamp, pointer)
    return PredictionEvent(origin, pointer, guess, coin, destination, guess is coin)


def run_prediction_step(
    track: AnyTrack,
    state: WalkState,
    light: GridPoint | None,
    policy: Policy,
    stream: RngStream,
) -> tuple[WalkState, PredictionEvent]:
    """Guess the next move before the coin is flipped, then flip and move.

    On the line the light is ignored and the pointer lies on the segment.
    Forced boundary moves are scored against the direction actually taken.
    """
    circular = isinstance(track, Track)
    if circular:
        if light is None:
            raise GeometryError("the circular track needs a light")
        track.check_light(light)
    pointer = uniform_position(stream)
    current = state.station
    if policy.guesses_heads_at(current):
        guess = Direction.CW
    elif circular:
        guess = pointer_guess(track, current, light, pointer)
    else:
        guess = line_pointer_guess(track, current, pointer)
    coin = flip_coin(stream)
    if circular:
        nxt = step_circular(track, state, coin)
        moved = coin
    else:
        nxt = step_line(track, state, coin)
        moved = Direction.CW if nxt.station > current else Direction.CCW
    event = PredictionEvent(current, pointer, guess, coin, nxt.station, guess is moved, nxt.forced)
    return nxt, event


@dataclass
class DemonLedger:
    """Per-station success records and the set of stations switched to always-heads.

    ``bin_mode`` selects whether events are filed under the station the train
    leaves (``current``) or reaches (``destination``).  A station joins
    ``override_set`` once its bin has ``min_samples`` trials and an exact
    one-sided binomial test rejects a rate of at least 1/2 at ``alpha``.
    """

    n_stations: int
    bin_mode: str = "current"
    alpha: float = 0.001
    min_samples: int = 1000
    frozen: bool = False
    tallies: list[Tally] = field(default_factory=list)
    override_set: set[int] = field(default_factory=set)
    triggered_at: dict[int, int] = field(default_factory=dict)
    events_seen: int = 0

    def __post_init__(self):
        if self.bin_mode not in ("current", "destination"):
            raise ConfigError(f"bin mode must be 'current' or 'destination', got {self.bin_mode!r}", "bin")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}", "alpha")
        if self.min_samples < 1:
            raise ConfigError(f"min_samples must be at least 1, got {self.min_samples}", "min_samples")
        if not self.tallies:
            self.tallies = [Tally() for _ in range(self.n_stations)]

    @property
    def policy(self) -> Policy:
        return Policy("mixed", frozenset(self.override_set))

    def record(self, event: PredictionEvent) -> None:
        if event.forced:
            raise ForcedMoveError(f"forced move from station {event.current} cannot be scored")
        b = event.current if self.bin_mode == "current" else event.destination
        t = self.tallies[b] + Tally(int(event.correct), 1)
        self.tallies[b] = t
        self.events_seen += 1
        if self.frozen or b in self.override_set or t.trials < self.min_samples:
            return
        if binomial_flag(t, 0.5, self.alpha, "below"):
            self.override_set.add(b)
            self.triggered_at[b] = self.events_seen


def adaptive_update(ledger: DemonLedger, event: PredictionEvent) -> DemonLedger:
    ledger.record(event)
    return ledger
