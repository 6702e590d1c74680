"""Circular track geometry.

Stations and the lights between them live on a half-station integer grid of
``2N`` points: grid index ``g`` sits at real position ``g / (2N)``, even
indices are stations and odd indices are lights.  Station indices increase
clockwise, and clockwise is the heads direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Real


class GeometryError(ValueError):
    """Invalid grid point, station, or degenerate arc query."""


class Direction(Enum):
    CW = 1
    CCW = -1

    @property
    def is_heads(self) -> bool:
        return self is Direction.CW

    @property
    def opposite(self) -> "Direction":
        return Direction.CCW if self is Direction.CW else Direction.CW

    @classmethod
    def from_heads(cls, heads: bool) -> "Direction":
        return cls.CW if heads else cls.CCW


@dataclass(frozen=True)
class Track:
    """Circular track of ``n_stations`` equally spaced stations on a unit circumference."""

    n_stations: int

    def __post_init__(self):
        if self.n_stations < 3:
            raise GeometryError(f"a track needs at least 3 stations, got {self.n_stations}")

    @property
    def grid_size(self) -> int:
        return 2 * self.n_stations

    def station_grid(self, station: int) -> GridPoint:
        self.check_station(station)
        return GridPoint(2 * station)

    def check_station(self, station: int) -> None:
        if not 0 <= station < self.n_stations:
            raise GeometryError(f"station {station} outside 0..{self.n_stations - 1}")

    def check_grid(self, g: GridPoint) -> None:
        if not 0 <= g.index < self.grid_size:
            raise GeometryError(f"grid index {g.index} outside 0..{self.grid_size - 1}")

    def check_light(self, g: GridPoint) -> None:
        self.check_grid(g)
        if not g.is_light:
            raise GeometryError(f"grid index {g.index} is a station, not a light")


@dataclass(frozen=True, order=True)
class GridPoint:
    index: int

    @property
    def is_station(self) -> bool:
        return self.index % 2 == 0

    @property
    def is_light(self) -> bool:
        return self.index % 2 == 1

    def station(self) -> int:
        if not self.is_station:
            raise GeometryError(f"grid index {self.index} is a light, not a station")
        return self.index // 2

    def neighbours(self, track: Track) -> tuple[int, int]:
        """The two stations either side of a light, counterclockwise one first."""
        track.check_light(self)
        n = track.n_stations
        return ((self.index - 1) // 2) % n, ((self.index + 1) // 2) % n


def position_of(track: Track, g: GridPoint) -> Fraction:
    """Exact real position of a grid point, measured clockwise from station 0."""
    track.check_grid(g)
    return Fraction(g.index, track.grid_size)


def antipodal_light(track: Track, w: int) -> GridPoint:
    """Light nearest the antipode of station ``w``.

    For odd N the antipode is itself a light.  For even N it is a station and
    the light one half-step clockwise of it is returned.
    """
    track.check_station(w)
    target = (2 * w + track.n_stations) % track.grid_size
    if target % 2 == 0:
        target = (target + 1) % track.grid_size
    return GridPoint(target)


def arc_length(start: Real, end: Real, direction: Direction) -> Real:
    """Length travelled from ``start`` to ``end`` going ``direction``; in [0, 1)."""
    if direction is Direction.CW:
        return (end - start) % 1
    return (start - end) % 1


def first_encounter_direction(start: Real, light: Real, r: Real) -> Direction:
    """Direction in which ``r`` is met before ``light`` when leaving ``start``.

    Points on the boundary (``r == start`` or ``r == light``) count as CW.
    """
    if start % 1 == light % 1:
        raise GeometryError("start and light coincide; no arc separates them")
    if arc_length(start, r, Direction.CW) <= arc_length(start, light, Direction.CW):
        return Direction.CW
    return Direction.CCW


def light_on_major_arc(track: Track, w: int, light: GridPoint) -> bool:
    """True when ``light`` avoids the short arc joining the neighbours of station ``w``."""
    track.check_station(w)
    track.check_light(light)
    size = track.grid_size
    ccw_neighbour = 2 * ((w - 1) % track.n_stations)
    # the minor arc runs clockwise from w-1 to w+1 and spans 4 grid units
    return (light.index - ccw_neighbour) % size > 4
