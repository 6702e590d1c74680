"""Vectorised runners for the postdiction, prediction, demon and line experiments.

On the circular track the runners consume their stream exactly like repeated
calls to the scalar functions in :mod:`pointerlab.strategies`, so event
sequences agree draw for draw.  Draws are taken in blocks of ``CHUNK`` events.

The reflecting line is simulated by folding a fair walk on a cycle of
``2(N - 1)`` points; the raw draw is the unfolded increment and the recorded
coin is that increment reoriented to the folded walk, which is again a fair
coin independent of the past.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import GridPoint, Track
from .rng import RngStream
from .stats import Tally, critical_counts
from .walks import LineTrack, stationary_distribution

CHUNK = 1 << 20


@dataclass
class Counter:
    """Successes and trials per station, plus a running total."""

    n: int
    hits: np.ndarray = None
    trials: np.ndarray = None

    def __post_init__(self):
        self.hits = np.zeros(self.n, dtype=np.int64)
        self.trials = np.zeros(self.n, dtype=np.int64)

    def add(self, keys: np.ndarray, correct: np.ndarray) -> None:
        self.trials += np.bincount(keys, minlength=self.n)
        self.hits += np.bincount(keys, weights=correct, minlength=self.n).astype(np.int64)

    def tallies(self) -> dict[str, Tally]:
        return {str(i): Tally(int(h), int(t)) for i, (h, t) in enumerate(zip(self.hits, self.trials))}

    def shares(self) -> dict[str, Tally]:
        """Visit counts as fractions of all visits (for occupancy counters)."""
        total = int(self.trials.sum())
        return {str(i): Tally(int(t), total) for i, t in enumerate(self.trials)}

    def total(self) -> Tally:
        return Tally(int(self.hits.sum()), int(self.trials.sum()))


@dataclass
class RunCounts:
    """Tallies of one run, grouped; ``groups[g][key]`` with key ``"all"`` for totals."""

    groups: dict[str, dict[str, Tally]] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


def _chunks(total: int):
    done = 0
    while done < total:
        m = min(CHUNK, total - done)
        yield done, m
        done += m


def _uniform_start(stream: RngStream, cumulative: np.ndarray) -> int:
    u = stream.generator.random()
    return min(int(np.searchsorted(cumulative, u, side="right")), len(cumulative) - 1)


def _cumulative(law) -> np.ndarray:
    acc, out = 0, []
    for p in law:
        acc += p
        out.append(float(acc))
    return np.array(out)


def pointer_cw(n: int, current: np.ndarray, light: np.ndarray | int, r: np.ndarray) -> np.ndarray:
    """Vectorised pointer guess on the circle, True for CW; grid-unit arithmetic."""
    size = 2 * n
    start = 2 * current
    to_pointer = np.mod(r * size - start, size)
    to_light = np.mod(light - start, size)
    return to_pointer <= to_light


def _light_for(n: int, destination: np.ndarray, mode) -> np.ndarray | int:
    size = 2 * n
    if isinstance(mode, GridPoint):
        return mode.index
    if mode == "antipodal":
        target = np.mod(2 * destination + n, size)
        return np.where(target % 2 == 0, np.mod(target + 1, size), target)
    if mode == "adjacent":
        return np.mod(2 * destination - 1, size)
    raise ValueError(f"unknown postdiction light {mode!r}")


def postdict(track: Track, trials: int, stream: RngStream, light="antipodal") -> RunCounts:
    n = track.n_stations
    cumulative = _cumulative(stationary_distribution("circular", n))
    overall, by_dest, by_origin = Counter(1), Counter(n), Counter(n)
    came_from_ccw = Counter(n)
    for _, m in _chunks(trials):
        u = stream.generator.random(3 * m).reshape(m, 3)
        origin = np.minimum(np.searchsorted(cumulative, u[:, 0], side="right"), n - 1)
        heads = u[:, 1] < 0.5
        destination = np.mod(origin + np.where(heads, 1, -1), n)
        guess_cw = pointer_cw(n, origin, _light_for(n, destination, light), u[:, 2])
        correct = guess_cw == heads
        overall.add(np.zeros(m, dtype=np.int64), correct)
        by_dest.add(destination, correct)
        by_origin.add(origin, correct)
        # heads means the train arrived from the counterclockwise neighbour
        came_from_ccw.add(destination, heads)
    return RunCounts(
        groups={
            "overall": {"all": overall.total()},
            "per_destination": by_dest.tallies(),
            "per_current": by_origin.tallies(),
            "origin_ccw_side": came_from_ccw.tallies(),
        }
    )


def envelope(pair, dist, trials: int, stream: RngStream) -> RunCounts:
    from .envelope import simulate_bets

    totals = {"overall": Tally(), "small_opened": Tally(), "large_opened": Tally()}
    for _, m in _chunks(trials):
        for key, t in simulate_bets(pair, dist, m, stream).items():
            totals[key] = totals[key] + t
    return RunCounts(
        groups={
            "overall": {"all": totals["overall"]},
            "by_envelope": {"small": totals["small_opened"], "large": totals["large_opened"]},
        }
    )


def _start_station(stream: RngStream, law, start, n: int, kind: str) -> int:
    if start == "stationary":
        return _uniform_start(stream, _cumulative(law))
    start = int(start)
    if not 0 <= start < n:
        raise ValueError(f"start station {start} outside 0..{n - 1}")
    periodic = "the chain is periodic, so marginals never settle from a point start" if (
        kind == "line" or n % 2 == 0
    ) else "marginals approach the stationary law only after burn-in"
    warnings.warn(f"point start at station {start}: {periodic}", RuntimeWarning, stacklevel=3)
    return start


@dataclass
class DemonSettings:
    bin_mode: str = "current"
    alpha: float = 0.001
    min_samples: int = 1000
    freeze_after: int | None = None


def predict(
    track: Track,
    steps: int,
    stream: RngStream,
    light: GridPoint,
    override=(),
    heads_everywhere: bool = False,
    demon: DemonSettings | None = None,
    start="stationary",
    burn_in: int = 0,
) -> RunCounts:
    """Pre-flip prediction along one walk.

    With ``demon`` set, each event is filed in its bin and a station joins the
    override set the moment its bin first rejects a rate of at least 1/2.
    """
    n = track.n_stations
    track.check_light(light)
    station = _start_station(stream, stationary_distribution("circular", n), start, n, "circular")
    for _, m in _chunks(burn_in):
        coins = stream.generator.random(2 * m)[1::2] < 0.5
        station = int((station + np.where(coins, 1, -1).sum()) % n)

    heads_at = np.zeros(n, dtype=bool)
    heads_at[list(override)] = True
    if heads_everywhere:
        heads_at[:] = True

    overall, by_cur, by_dest, occupancy = Counter(1), Counter(n), Counter(n), Counter(n)
    bins = Counter(n)
    triggered_at: dict[int, int] = {}
    phases: list[tuple[list[int], Tally]] = []
    table = critical_counts(demon.alpha) if demon else None
    seen = 0

    for _, m in _chunks(steps):
        u = stream.generator.random(2 * m).reshape(m, 2)
        r, heads = u[:, 0], u[:, 1] < 0.5
        delta = np.where(heads, 1, -1)
        walk = station + np.cumsum(delta)
        current = np.mod(np.concatenate(([station], walk[:-1])), n)
        destination = np.mod(walk, n)
        station = int(destination[-1])
        pointer_guess = pointer_cw(n, current, light.index, r)

        i0 = 0
        while i0 < m:
            cur, dest, hd = current[i0:], destination[i0:], heads[i0:]
            correct = np.where(heads_at[cur], True, pointer_guess[i0:]) == hd
            stop = m - i0
            if demon is not None:
                keys = cur if demon.bin_mode == "current" else dest
                stop, station_hit = _first_trigger(keys, correct, bins, heads_at, demon, table, seen)
            sl = slice(0, stop)
            overall.add(np.zeros(stop, dtype=np.int64), correct[sl])
            by_cur.add(cur[sl], correct[sl])
            by_dest.add(dest[sl], correct[sl])
            occupancy.add(cur[sl], np.ones(stop))
            if demon is not None:
                bins.add(keys[sl], correct[sl])
            _add_phase(phases, heads_at, Tally(int(correct[sl].sum()), stop))
            seen += stop
            i0 += stop
            if demon is not None and station_hit is not None:
                heads_at[station_hit] = True
                triggered_at[station_hit] = seen

    groups = {
        "overall": {"all": overall.total()},
        "per_current": by_cur.tallies(),
        "per_destination": by_dest.tallies(),
        "occupancy": occupancy.shares(),
    }
    extras = {}
    if demon is not None:
        groups["per_bin"] = bins.tallies()
        extras = {
            "override_set": sorted(int(s) for s in np.flatnonzero(heads_at)),
            "triggered_at": {str(k): v for k, v in sorted(triggered_at.items())},
            "phases": [{"override_set": s, "tally": t} for s, t in phases],
        }
    return RunCounts(groups, extras)


def _add_phase(phases, heads_at: np.ndarray, t: Tally) -> None:
    key = [int(s) for s in np.flatnonzero(heads_at)]
    if phases and phases[-1][0] == key:
        phases[-1] = (key, phases[-1][1] + t)
    elif t.trials:
        phases.append((key, t))


def _first_trigger(keys, correct, bins: Counter, heads_at, demon: DemonSettings, table, seen: int):
    """Events to accept before the policy changes, and the station that triggers (or None)."""
    m = len(keys)
    best, hit_station = m, None
    if demon.freeze_after is not None:
        limit = demon.freeze_after - seen
        if limit <= 0:
            return m, None
    else:
        limit = m
    for b in range(bins.n):
        if heads_at[b]:
            continue
        idx = np.flatnonzero(keys == b)
        if not len(idx):
            continue
        n_b = bins.trials[b] + np.arange(1, len(idx) + 1)
        k_b = bins.hits[b] + np.cumsum(correct[idx])
        ready = n_b >= demon.min_samples
        hit = np.zeros(len(idx), dtype=bool)
        hit[ready] = table.rejects(n_b[ready], k_b[ready])
        if hit.any():
            first = int(idx[np.argmax(hit)])
            if first < best and first < limit:
                best, hit_station = first, b
    if hit_station is None:
        return m, None
    return best + 1, hit_station


def line(
    track: LineTrack,
    steps: int,
    stream: RngStream,
    override=(),
    start="stationary",
    burn_in: int = 0,
) -> RunCounts:
    n = track.n_stations
    size = 2 * (n - 1)
    station = _start_station(stream, stationary_distribution("line", n), start, n, "line")
    unfolded = station
    for _, m in _chunks(burn_in):
        inc = np.where(stream.generator.random(2 * m)[1::2] < 0.5, 1, -1)
        unfolded = int((unfolded + inc.sum()) % size)

    heads_at = np.zeros(n, dtype=bool)
    heads_at[list(override)] = True
    overall, by_cur, by_dest, occupancy = Counter(1), Counter(n), Counter(n), Counter(n)
    coin_overall, coin_dest, coin_cur = Counter(1), Counter(n), Counter(n)
    forced_moves = 0

    for _, m in _chunks(steps):
        u = stream.generator.random(2 * m).reshape(m, 2)
        r, inc = u[:, 0], np.where(u[:, 1] < 0.5, 1, -1)
        x = unfolded + np.cumsum(inc)
        x_cur = np.mod(np.concatenate(([unfolded], x[:-1])), size)
        x_next = np.mod(x, size)
        unfolded = int(x_next[-1])
        current = np.where(x_cur <= n - 1, x_cur, size - x_cur)
        destination = np.where(x_next <= n - 1, x_next, size - x_next)
        moved_cw = destination > current
        forced = (current == 0) | (current == n - 1)
        guess_cw = np.where(heads_at[current], True, r * (n - 1) >= current)
        correct = guess_cw == moved_cw
        zeros = np.zeros(m, dtype=np.int64)
        overall.add(zeros, correct)
        by_cur.add(current, correct)
        by_dest.add(destination, correct)
        occupancy.add(current, np.ones(m))
        free = ~forced
        coin_overall.add(zeros[free], correct[free])
        coin_dest.add(destination[free], correct[free])
        coin_cur.add(current[free], correct[free])
        forced_moves += int(forced.sum())

    return RunCounts(
        groups={
            "overall": {"all": overall.total()},
            "per_current": by_cur.tallies(),
            "per_destination": by_dest.tallies(),
            "occupancy": occupancy.shares(),
            "coin_overall": {"all": coin_overall.total()},
            "coin_per_destination": coin_dest.tallies(),
            "coin_per_current": {k: v for k, v in coin_cur.tallies().items() if not track.is_boundary(int(k))},
        },
        extras={"forced_moves": forced_moves},
    )
