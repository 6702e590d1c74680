"""Exact success probabilities by enumeration in rational arithmetic.

Every guess the pointer strategies make is constant between consecutive
grid points, so integrating the uniform pointer reduces to a finite sum over
cells with the guess evaluated at each cell midpoint.  The enumerator walks
(station, coin, pointer cell) with exact weights and never uses a closed form;
closed forms are checked against it in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .core import Direction, GridPoint, Track
from .strategies import line_pointer_guess, pointer_guess, postdiction_light
from .walks import (
    ConfigError,
    LineTrack,
    WalkState,
    check_distribution,
    stationary_distribution,
    step_circular,
    step_line,
)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class SuccessTable:
    """Exact conditional success rates of one strategy.

    ``current_law`` and ``destination_law`` are the laws of the scored events'
    origin and destination, so ``overall`` equals both weighted sums of the
    conditionals.  Stations with no scored events are missing from the maps.
    """

    per_destination: dict[int, Fraction]
    per_current: dict[int, Fraction]
    overall: Fraction
    stationary: tuple[Fraction, ...]
    current_law: dict[int, Fraction]
    destination_law: dict[int, Fraction]

    def denominators(self) -> list[int]:
        values = [self.overall, *self.per_destination.values(), *self.per_current.values()]
        return [v.denominator for v in values]


# (current, destination, weight, correct)
Outcome = tuple[int, int, Fraction, bool]


def _tabulate(outcomes: Iterable[Outcome], n: int, stationary: tuple[Fraction, ...]) -> SuccessTable:
    cur_mass = [Fraction(0)] * n
    cur_hit = [Fraction(0)] * n
    dst_mass = [Fraction(0)] * n
    dst_hit = [Fraction(0)] * n
    for current, destination, weight, correct in outcomes:
        cur_mass[current] += weight
        dst_mass[destination] += weight
        if correct:
            cur_hit[current] += weight
            dst_hit[destination] += weight
    total = sum(cur_mass)
    if total == 0:
        raise ConfigError("no scored events to tabulate")
    return SuccessTable(
        per_destination={d: dst_hit[d] / dst_mass[d] for d in range(n) if dst_mass[d]},
        per_current={s: cur_hit[s] / cur_mass[s] for s in range(n) if cur_mass[s]},
        overall=sum(cur_hit) / total,
        stationary=stationary,
        current_law={s: cur_mass[s] / total for s in range(n) if cur_mass[s]},
        destination_law={d: dst_mass[d] / total for d in range(n) if dst_mass[d]},
    )


def _cells(count: int) -> Iterator[Fraction]:
    """Midpoints of ``count`` equal cells of the unit interval."""
    for j in range(count):
        yield Fraction(2 * j + 1, 2 * count)


def _resolve_stationary(kind: str, n: int, stationary: Sequence[Fraction] | None) -> tuple[Fraction, ...]:
    if stationary is None:
        return stationary_distribution(kind, n)
    stationary = tuple(Fraction(p) for p in stationary)
    if len(stationary) != n:
        raise ConfigError(f"station law has {len(stationary)} entries for {n} stations", "stationary")
    check_distribution(stationary)
    return stationary


def _check_override(n: int, override: Iterable[int]) -> frozenset[int]:
    override = frozenset(override)
    bad = sorted(s for s in override if not 0 <= s < n)
    if bad:
        raise ConfigError(f"override stations {bad} outside 0..{n - 1}", "override")
    return override


def _prediction_outcomes(
    track: Track, light: GridPoint, stationary: Sequence[Fraction], override: frozenset[int]
) -> Iterator[Outcome]:
    cell = Fraction(1, track.grid_size)
    for s, p in enumerate(stationary):
        if not p:
            continue
        for coin in Direction:
            destination = step_circular(track, WalkState(s), coin).station
            for r in _cells(track.grid_size):
                guess = Direction.CW if s in override else pointer_guess(track, s, light, r)
                yield s, destination, p * HALF * cell, guess is coin


def exact_prediction_table(
    n: int,
    light: GridPoint,
    override: Iterable[int] = (),
    stationary: Sequence[Fraction] | None = None,
) -> SuccessTable:
    """Success of the pre-flip pointer guess under the stationary law, stations in ``override`` guessing heads."""
    track = Track(n)
    track.check_light(light)
    law = _resolve_stationary("circular", n, stationary)
    outcomes = _prediction_outcomes(track, light, law, _check_override(n, override))
    return _tabulate(outcomes, n, law)


def exact_policy_success(n: int, light: GridPoint, override: Iterable[int] = ()) -> Fraction:
    return exact_prediction_table(n, light, override).overall


def exact_postdiction_success(n: int, w: int, light: GridPoint) -> Fraction:
    """Chance of naming the side the train came from, given it arrived at ``w``, with a fixed light."""
    track = Track(n)
    track.check_station(w)
    track.check_light(light)
    cell = Fraction(1, track.grid_size)
    total = Fraction(0)
    for coin in Direction:
        # the origin is the station one step against the coin
        origin = (w - coin.value) % n
        for r in _cells(track.grid_size):
            if pointer_guess(track, origin, light, r) is coin:
                total += HALF * cell
    return total


def exact_postdiction_table(n: int, light: str | GridPoint = "antipodal") -> SuccessTable:
    """Postdiction over the stationary origin law, the light resolved per destination."""
    track = Track(n)
    law = stationary_distribution("circular", n)
    cell = Fraction(1, track.grid_size)

    def outcomes() -> Iterator[Outcome]:
        for s, p in enumerate(law):
            for coin in Direction:
                destination = step_circular(track, WalkState(s), coin).station
                lamp = postdiction_light(track, destination, light)
                for r in _cells(track.grid_size):
                    yield s, destination, p * HALF * cell, pointer_guess(track, s, lamp, r) is coin

    return _tabulate(outcomes(), n, law)


def exact_line_table(
    n: int, score_forced: bool = True, override: Iterable[int] = ()
) -> SuccessTable:
    """Pointer prediction on the reflecting line.

    A boundary move is forced; with ``score_forced`` it is scored against the
    direction actually taken (the pointer always lies inward there, so these
    guesses always succeed), otherwise it is dropped from the tables.
    """
    if n < 3:
        raise ConfigError(f"a line needs at least 3 stations, got {n}", "stations")
    line = LineTrack(n)
    law = stationary_distribution("line", n)
    override = _check_override(n, override)
    cell = Fraction(1, n - 1)

    def outcomes() -> Iterator[Outcome]:
        for s, p in enumerate(law):
            for coin in Direction:
                nxt = step_line(line, WalkState(s), coin)
                if nxt.forced and not score_forced:
                    continue
                moved = Direction.CW if nxt.station > s else Direction.CCW
                for r in _cells(n - 1):
                    guess = Direction.CW if s in override else line_pointer_guess(line, s, r)
                    yield s, nxt.station, p * HALF * cell, guess is moved

    return _tabulate(outcomes(), n, law)


def rational_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"
