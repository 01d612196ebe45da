"""Candidate paths through replayed traffic and minimum-distance safety checks.

The safety checker is the authority: a path is safe when no check instant
puts the own ship closer than the threshold to any replayed obstacle.
Planners are pluggable behind a registry; the baseline searches a
time-expanded grid so moving obstacles are avoided in both space and time.
"""

from __future__ import annotations

import heapq
import math
from array import array
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import _kernels
from .ais import ObstacleTrack, sample_track_positions
from .geometry import METERS_PER_NMI


class NoPathFound(RuntimeError):
    pass


class InvalidEndpoints(ValueError):
    pass


@dataclass(frozen=True)
class Waypoint:
    time: float
    x: float
    y: float
    speed: float  # m/s along the outgoing segment


@dataclass
class PlannedPath:
    """Time-parameterized route; position is linear between waypoints."""

    waypoints: list[Waypoint]
    total_length: float = field(init=False)  # nautical miles
    _arrays: tuple[array, array, array] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("a path needs at least one waypoint")
        meters = 0.0
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if b.time <= a.time:
                raise ValueError("waypoint times must be strictly increasing")
            meters += math.dist((a.x, a.y), (b.x, b.y))
        self.total_length = meters / METERS_PER_NMI

    def arrays(self) -> tuple[array, array, array]:
        if self._arrays is None:
            ts = array("d", (w.time for w in self.waypoints))
            xs = array("d", (w.x for w in self.waypoints))
            ys = array("d", (w.y for w in self.waypoints))
            self._arrays = (ts, xs, ys)
        return self._arrays

    @property
    def start_time(self) -> float:
        return self.waypoints[0].time

    @property
    def end_time(self) -> float:
        return self.waypoints[-1].time

    def positions_at(self, times: Sequence[float]) -> tuple[array, array]:
        ts, xs, ys = self.arrays()
        return _kernels.interp_positions(ts, xs, ys, times)

    def position_at(self, t: float) -> tuple[float, float]:
        qx, qy = self.positions_at((t,))
        return qx[0], qy[0]

    def speed_at(self, t: float) -> float:
        """Scheduled speed of the segment containing t (end segments held)."""
        wps = self.waypoints
        if len(wps) == 1 or t >= wps[-1].time:
            return 0.0
        for a, b in zip(wps, wps[1:]):
            if t < b.time:
                return a.speed
        return 0.0


@dataclass(frozen=True)
class SafetyViolation:
    """One instant at which an obstacle came closer than the safe distance."""

    time: float
    obstacle_id: str
    distance: float
    threshold: float

    def __post_init__(self) -> None:
        if not self.distance < self.threshold:
            raise ValueError("a violation requires distance < threshold")


def check_instants(t0: float, t1: float, dt_check: float, extra: Sequence[float] = ()) -> array:
    """The instants a path is checked at: t0 + k*dt_check plus given extras."""
    count = int(math.floor((t1 - t0) / dt_check + 1e-9))
    instants = {t0 + k * dt_check for k in range(count + 1)}
    instants.update(t for t in extra if t0 <= t <= t1)
    return array("d", sorted(instants))


def check_path_safety(
    path: PlannedPath,
    tracks: Sequence[ObstacleTrack],
    threshold: float,
    dt_check: float,
) -> list[SafetyViolation]:
    """All (instant, obstacle) pairs closer than threshold along a path.

    Instants run from path start to end at dt_check spacing plus every
    waypoint time. An empty result means the path is safe at this
    resolution.
    """
    if dt_check <= 0:
        raise ValueError("dt_check must be > 0")
    if not tracks:
        return []
    instants = check_instants(
        path.start_time,
        path.end_time,
        dt_check,
        extra=[w.time for w in path.waypoints],
    )
    own_x, own_y = path.positions_at(instants)
    violations = []
    for track in tracks:
        obs_x, obs_y = sample_track_positions(track, instants)
        dist = _kernels.distances(own_x, own_y, obs_x, obs_y)
        for i, d in enumerate(dist):
            if d < threshold:
                violations.append(
                    SafetyViolation(
                        time=instants[i],
                        obstacle_id=track.track_id,
                        distance=d,
                        threshold=threshold,
                    )
                )
    violations.sort(key=lambda v: (v.time, v.obstacle_id))
    return violations


OwnMotion = PlannedPath | tuple[tuple[float, float], tuple[float, float]]


def closest_approach(
    own: OwnMotion,
    track: ObstacleTrack,
    t_start: float = 0.0,
    horizon: float | None = None,
) -> tuple[float, float]:
    """(t_cpa, d_cpa) between the own motion and a replayed obstacle.

    own is either a PlannedPath or a ((x, y), (vx, vy)) constant-velocity
    motion whose position is given at t_start. Per linear segment pair the
    minimum of |relative position + relative velocity * tau| has a closed
    form; the global minimum over the common interval is returned. Outside
    its recorded span the track is held stationary, matching replay.
    """
    if isinstance(own, PlannedPath):
        t0, t1 = own.start_time, own.end_time
        own_breaks = [w.time for w in own.waypoints]
    else:
        t0 = t_start
        if horizon is not None:
            t1 = t_start + horizon
        else:
            t1 = max(track.end_time, t_start + 3600.0)
        own_breaks = [t0, t1]

    cuts = sorted(
        {t0, t1}
        | {t for t in own_breaks if t0 < t < t1}
        | {s.time for s in track.samples if t0 < s.time < t1}
    )
    if t1 < t0:
        raise ValueError("empty time interval")

    best_t, best_d = t0, math.inf
    for a, b in zip(cuts, cuts[1:] or [t1]):
        oa = _own_pos(own, a, t_start)
        ob = _own_pos(own, b, t_start)
        pa = _track_pos(track, a)
        pb = _track_pos(track, b)
        seg = b - a
        if seg <= 0.0:
            continue
        rvx = ((ob[0] - oa[0]) - (pb[0] - pa[0])) / seg
        rvy = ((ob[1] - oa[1]) - (pb[1] - pa[1])) / seg
        # shift relative position to absolute time zero for the kernel form
        rx0 = (oa[0] - pa[0]) - rvx * a
        ry0 = (oa[1] - pa[1]) - rvy * a
        t, d = _kernels.segment_cpa(rx0, ry0, rvx, rvy, a, b)
        if d < best_d:
            best_t, best_d = t, d
    if not cuts or len(cuts) == 1:
        pa = _track_pos(track, t0)
        oa = _own_pos(own, t0, t_start)
        best_t, best_d = t0, math.dist(oa, pa)
    return best_t, best_d


def _own_pos(own: OwnMotion, t: float, t_start: float) -> tuple[float, float]:
    if isinstance(own, PlannedPath):
        return own.position_at(t)
    (x, y), (vx, vy) = own
    return x + vx * (t - t_start), y + vy * (t - t_start)


def _track_pos(track: ObstacleTrack, t: float) -> tuple[float, float]:
    qx, qy = sample_track_positions(track, (t,))
    return qx[0], qy[0]


# --- planners ---------------------------------------------------------------


@dataclass(frozen=True)
class PlannerConfig:
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    safe_distance: float = 50.0
    time_step: float = 0.1  # s, normally 1/min_update_rate
    cruise_speed: float = 8.0  # m/s
    max_time: float = 600.0  # planning horizon, s
    cell_size: float | None = None  # defaults to safe_distance / 2
    name: str = "grid_astar"

    @property
    def cell(self) -> float:
        return self.cell_size if self.cell_size is not None else self.safe_distance / 2.0


Planner = Callable[
    [tuple[float, float], tuple[float, float], Sequence[ObstacleTrack], PlannerConfig],
    PlannedPath,
]

PLANNERS: dict[str, Planner] = {}


def register_planner(name: str) -> Callable[[Planner], Planner]:
    def deco(fn: Planner) -> Planner:
        PLANNERS[name] = fn
        return fn

    return deco


def plan_path(
    start: tuple[float, float],
    goal: tuple[float, float],
    tracks: Sequence[ObstacleTrack],
    config: PlannerConfig,
) -> PlannedPath:
    """Plan a path whose own safety check comes back empty, or raise NoPathFound."""
    xmin, ymin, xmax, ymax = config.bounds
    for label, (px, py) in (("start", start), ("goal", goal)):
        if not (xmin <= px <= xmax and ymin <= py <= ymax):
            raise InvalidEndpoints(f"{label} {px, py} outside bounds {config.bounds}")
    if config.name not in PLANNERS:
        raise KeyError(
            f"unknown planner {config.name!r}; registered: {sorted(PLANNERS)}"
        )
    if start == goal:
        return PlannedPath([Waypoint(0.0, start[0], start[1], 0.0)])
    return PLANNERS[config.name](start, goal, tracks, config)


@register_planner("straight")
def straight_line_planner(start, goal, tracks, config) -> PlannedPath:
    """Direct segment at cruise speed; refuses rather than risk a violation."""
    dt = config.time_step
    dist = math.dist(start, goal)
    ticks = max(1, math.ceil(dist / config.cruise_speed / dt))
    duration = ticks * dt
    path = PlannedPath(
        [
            Waypoint(0.0, start[0], start[1], dist / duration),
            Waypoint(duration, goal[0], goal[1], 0.0),
        ]
    )
    if check_path_safety(path, tracks, config.safe_distance, dt):
        raise NoPathFound("straight segment violates the safe distance")
    return path


_NEIGHBORS = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, math.sqrt(2.0)),
    (1, -1, math.sqrt(2.0)),
    (-1, 1, math.sqrt(2.0)),
    (-1, -1, math.sqrt(2.0)),
)


@register_planner("grid_astar")
def grid_astar_planner(start, goal, tracks, config) -> PlannedPath:
    """Time-expanded A* over (x, y, tick) with move durations in whole ticks.

    Obstacle positions are precomputed per tick; an edge is usable only if
    every tick along it keeps at least the safe distance to every obstacle.
    Waiting in place is an edge like any other, so the planner can let
    traffic pass.
    """
    cell = config.cell
    dt = config.time_step
    cruise = config.cruise_speed
    safe = config.safe_distance
    xmin, ymin, xmax, ymax = config.bounds
    n_ticks = int(math.ceil(config.max_time / dt))

    tick_times = array("d", (k * dt for k in range(n_ticks + 1)))
    obs = [sample_track_positions(tr, tick_times) for tr in tracks]

    def pos_of(node: tuple[int, int]) -> tuple[float, float]:
        return start[0] + node[0] * cell, start[1] + node[1] * cell

    def in_bounds(x: float, y: float) -> bool:
        return xmin <= x <= xmax and ymin <= y <= ymax

    def point_safe(x: float, y: float, k: int) -> bool:
        for ox, oy in obs:
            dx = x - ox[k]
            dy = y - oy[k]
            if math.sqrt(dx * dx + dy * dy) < safe:
                return False
        return True

    gi = (goal[0] - start[0]) / cell
    gj = (goal[1] - start[1]) / cell
    candidates = sorted(
        {
            (i, j)
            for i in (math.floor(gi), round(gi), math.ceil(gi))
            for j in (math.floor(gj), round(gj), math.ceil(gj))
        },
        key=lambda n: math.dist(pos_of(n), goal),
    )
    goal_node = next((n for n in candidates if in_bounds(*pos_of(n))), None)
    if goal_node is None:
        raise InvalidEndpoints("no grid node near the goal lies inside bounds")
    gx, gy = pos_of(goal_node)
    if not point_safe(start[0], start[1], 0):
        raise NoPathFound("start position is inside an obstacle's safe ring")

    move_ticks = {
        scale: max(1, math.ceil(cell * scale / cruise / dt))
        for scale in (1.0, math.sqrt(2.0))
    }
    wait_ticks = move_ticks[1.0]

    def edge_clear(pa, pb, k_from: int, n: int) -> bool:
        # same interpolation arithmetic as the safety checker, so a path we
        # accept is exactly the path the checker will accept
        ta = k_from * dt
        tb = (k_from + n) * dt
        for j in range(1, n + 1):
            t = (k_from + j) * dt
            f = (t - ta) / (tb - ta)
            x = pa[0] + (pb[0] - pa[0]) * f
            y = pa[1] + (pb[1] - pa[1]) * f
            if not point_safe(x, y, k_from + j):
                return False
        return True

    def heuristic(node: tuple[int, int]) -> int:
        d = math.dist(pos_of(node), (gx, gy))
        return int(math.ceil(d / cruise / dt))

    start_node = (0, 0)
    open_heap: list[tuple[int, int, int, tuple[int, int], int]] = []
    counter = 0
    heapq.heappush(open_heap, (heuristic(start_node), 0, counter, start_node, 0))
    best_g: dict[tuple[tuple[int, int], int], int] = {(start_node, 0): 0}
    came: dict[tuple[tuple[int, int], int], tuple[tuple[int, int], int]] = {}

    goal_key = None
    while open_heap:
        f, g, _, node, k = heapq.heappop(open_heap)
        key = (node, k)
        if best_g.get(key, -1) != g:
            continue
        if node == goal_node:
            goal_key = key
            break
        p = pos_of(node)
        # movement edges
        for di, dj, scale in _NEIGHBORS:
            nxt = (node[0] + di, node[1] + dj)
            q = pos_of(nxt)
            if not in_bounds(q[0], q[1]):
                continue
            n = move_ticks[scale]
            nk = k + n
            if nk > n_ticks:
                continue
            nkey = (nxt, nk)
            if best_g.get(nkey, 1 << 30) <= nk:
                continue
            if not edge_clear(p, q, k, n):
                continue
            best_g[nkey] = nk
            came[nkey] = key
            counter += 1
            heapq.heappush(open_heap, (nk + heuristic(nxt), nk, counter, nxt, nk))
        # wait edge
        nk = k + wait_ticks
        if nk <= n_ticks:
            nkey = (node, nk)
            if best_g.get(nkey, 1 << 30) > nk and edge_clear(p, p, k, wait_ticks):
                best_g[nkey] = nk
                came[nkey] = key
                counter += 1
                heapq.heappush(open_heap, (nk + heuristic(node), nk, counter, node, nk))

    if goal_key is None:
        raise NoPathFound(
            f"no safe route to {goal} within {config.max_time:.0f}s horizon"
        )

    keys = [goal_key]
    while keys[-1] in came:
        keys.append(came[keys[-1]])
    keys.reverse()

    waypoints = []
    for idx, (node, k) in enumerate(keys):
        x, y = pos_of(node)
        if idx + 1 < len(keys):
            nnode, nk = keys[idx + 1]
            nx, ny = pos_of(nnode)
            seg_t = (nk - k) * dt
            speed = math.dist((x, y), (nx, ny)) / seg_t
        else:
            speed = 0.0
        waypoints.append(Waypoint(k * dt, x, y, speed))

    if (gx, gy) != goal:
        tail = math.dist((gx, gy), goal)
        if tail > 1e-9:
            n = max(1, math.ceil(tail / cruise / dt))
            k_end = keys[-1][1] + n
            prev = waypoints[-1]
            waypoints[-1] = Waypoint(prev.time, prev.x, prev.y, tail / (n * dt))
            waypoints.append(Waypoint(k_end * dt, goal[0], goal[1], 0.0))

    # collapse intermediate waypoints that continue at the same velocity
    return PlannedPath(_collapse(waypoints))


def _collapse(waypoints: list[Waypoint]) -> list[Waypoint]:
    if len(waypoints) < 3:
        return waypoints
    out = [waypoints[0]]
    for prev, cur, nxt in zip(waypoints, waypoints[1:], waypoints[2:]):
        v_in = _seg_velocity(prev, cur)
        v_out = _seg_velocity(cur, nxt)
        if (
            abs(v_in[0] - v_out[0]) > 1e-12
            or abs(v_in[1] - v_out[1]) > 1e-12
        ):
            out.append(cur)
    out.append(waypoints[-1])
    return out


def _seg_velocity(a: Waypoint, b: Waypoint) -> tuple[float, float]:
    seg = b.time - a.time
    return (b.x - a.x) / seg, (b.y - a.y) / seg
