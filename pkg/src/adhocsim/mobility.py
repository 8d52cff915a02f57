"""Node trajectory generation: static placements, random-waypoint roaming,
and road-grid driving as a deterministic stand-in for imported vehicle
traces.

Trajectories are plain waypoint sequences, pure functions of
(config, node_id): the same pair always yields the same bytes when
serialized, which is what makes whole simulation runs replayable.
"""

from __future__ import annotations

import enum
import random
from bisect import bisect_right
from dataclasses import dataclass
from math import hypot

SPEED_40_KPH = 40.0 / 3.6  # Table-speed default, in m/s


class MobilityModel(enum.Enum):
    STATIC = "static"
    RANDOM_WAYPOINT = "random_waypoint"
    ROAD_GRID = "road_grid"


class OutOfSpanError(ValueError):
    """Query time precedes the start of a trajectory."""


@dataclass(frozen=True)
class Waypoint:
    pos: tuple[float, float]
    arrive_t: float


@dataclass(frozen=True)
class MobilityConfig:
    model: MobilityModel = MobilityModel.RANDOM_WAYPOINT
    area: tuple[float, float] = (1000.0, 1000.0)
    speed: float = SPEED_40_KPH
    pause: float = 0.0
    grid_spacing: float = 200.0
    seed: int = 0

    def validate(self) -> None:
        w, h = self.area
        if w <= 0 or h <= 0:
            raise ValueError(f"area must be positive, got {self.area}")
        if self.model is not MobilityModel.STATIC and self.speed <= 0:
            raise ValueError(f"speed must be > 0 for mobile models, got {self.speed}")
        if self.pause < 0:
            raise ValueError(f"pause must be >= 0, got {self.pause}")
        if self.model is MobilityModel.ROAD_GRID:
            if self.grid_spacing <= 0:
                raise ValueError(f"grid spacing must be > 0, got {self.grid_spacing}")
            if self.grid_spacing > w or self.grid_spacing > h:
                raise ValueError(
                    f"grid spacing {self.grid_spacing} exceeds area {self.area}"
                )


def position_at(trajectory, t: float) -> tuple[float, float]:
    """Position along a waypoint sequence at time t (linear interpolation).

    A node that has reached its final waypoint stays parked there, so any
    t at or beyond the last arrival returns the last position.  Times
    before the first waypoint raise OutOfSpanError.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    if t < trajectory[0].arrive_t:
        raise OutOfSpanError(
            f"t={t} precedes trajectory start {trajectory[0].arrive_t}"
        )
    times = [w.arrive_t for w in trajectory]
    idx = bisect_right(times, t)
    if idx >= len(trajectory):
        return trajectory[-1].pos
    prev = trajectory[idx - 1]
    nxt = trajectory[idx]
    if nxt.arrive_t == prev.arrive_t:
        return nxt.pos
    frac = (t - prev.arrive_t) / (nxt.arrive_t - prev.arrive_t)
    return (
        prev.pos[0] + frac * (nxt.pos[0] - prev.pos[0]),
        prev.pos[1] + frac * (nxt.pos[1] - prev.pos[1]),
    )


def generate_trajectory(cfg: MobilityConfig, node_id: int, horizon: float):
    """Build node_id's waypoint sequence covering [0, horizon].

    Deterministic in (cfg.seed, node_id); the generator never draws from
    any global RNG state.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    cfg.validate()
    rng = random.Random(f"{cfg.seed}:{node_id}")
    if cfg.model is MobilityModel.STATIC:
        return [Waypoint(_uniform_point(rng, cfg.area), 0.0)]
    if cfg.model is MobilityModel.RANDOM_WAYPOINT:
        return _random_waypoint(rng, cfg, horizon)
    return _road_grid(rng, cfg, horizon)


def _uniform_point(rng, area):
    return (rng.uniform(0.0, area[0]), rng.uniform(0.0, area[1]))


def _random_waypoint(rng, cfg, horizon):
    pos = _uniform_point(rng, cfg.area)
    waypoints = [Waypoint(pos, 0.0)]
    t = 0.0
    while t < horizon:
        dest = _uniform_point(rng, cfg.area)
        leg = hypot(dest[0] - pos[0], dest[1] - pos[1])
        if leg == 0.0:
            continue
        t += leg / cfg.speed
        waypoints.append(Waypoint(dest, t))
        if cfg.pause > 0.0:
            t += cfg.pause
            waypoints.append(Waypoint(dest, t))
        pos = dest
    return waypoints


def _road_grid(rng, cfg, horizon):
    """Drive along a Manhattan grid: spawn on a random street segment, then
    turn uniformly at each intersection (no immediate U-turns unless at a
    dead end).
    """
    spacing = cfg.grid_spacing
    nx = int(cfg.area[0] // spacing)  # intersections at 0..nx, 0..ny
    ny = int(cfg.area[1] // spacing)

    def point(ix, iy):
        return (ix * spacing, iy * spacing)

    def neighbors(ix, iy):
        out = []
        if ix > 0:
            out.append((ix - 1, iy))
        if ix < nx:
            out.append((ix + 1, iy))
        if iy > 0:
            out.append((ix, iy - 1))
        if iy < ny:
            out.append((ix, iy + 1))
        return out

    # Spawn uniformly over street segments (all segments have equal length;
    # validate() guarantees at least one cell in each direction).
    horizontal = rng.random() < 0.5
    if horizontal:
        ix = rng.randrange(nx)
        iy = rng.randrange(ny + 1)
        frac = rng.random()
        pos = ((ix + frac) * spacing, iy * spacing)
        target = (ix + 1, iy) if rng.random() < 0.5 else (ix, iy)
    else:
        ix = rng.randrange(nx + 1)
        iy = rng.randrange(ny)
        frac = rng.random()
        pos = (ix * spacing, (iy + frac) * spacing)
        target = (ix, iy + 1) if rng.random() < 0.5 else (ix, iy)

    waypoints = [Waypoint(pos, 0.0)]
    t = 0.0
    came_from = None
    while t < horizon:
        tp = point(*target)
        leg = hypot(tp[0] - pos[0], tp[1] - pos[1])
        if leg > 0.0:
            t += leg / cfg.speed
            waypoints.append(Waypoint(tp, t))
        pos = tp
        options = neighbors(*target)
        forward = [o for o in options if o != came_from]
        came_from = target
        target = rng.choice(forward) if forward else options[0]
    return waypoints


def save_trajectories(trajectories, fileobj) -> None:
    """Write `node_id t x y` rows, one waypoint per line, full precision."""
    for node_id in sorted(trajectories):
        for wp in trajectories[node_id]:
            fileobj.write(f"{node_id} {wp.arrive_t!r} {wp.pos[0]!r} {wp.pos[1]!r}\n")


def load_trajectories(fileobj):
    """Parse rows written by save_trajectories (or any external trace in the
    same `node_id t x y` format) into per-node waypoint lists.
    """
    out: dict[int, list[Waypoint]] = {}
    for lineno, line in enumerate(fileobj, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected `node_id t x y`, got {line!r}")
        node_id = int(parts[0])
        t, x, y = float(parts[1]), float(parts[2]), float(parts[3])
        traj = out.setdefault(node_id, [])
        if traj and t <= traj[-1].arrive_t:
            raise ValueError(f"line {lineno}: arrive times must strictly increase")
        traj.append(Waypoint((x, y), t))
    return out
