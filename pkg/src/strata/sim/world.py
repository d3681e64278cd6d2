"""World state, robot kinematics, sensing and the deterministic stepper."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Any

from strata.sim.grid import FURNITURE, WALL, Grid
from strata.sim.types import CollisionEvent, Detection, SensorSpec
from strata.tactical.types import ActuatorRequest

DT = 0.1

IDLE_DRAIN = 2e-4        # battery fraction per second while powered on
MOTION_DRAIN = 1e-3      # extra drain per second at full speed
GRASP_RADIUS = 0.4
DOCK_RADIUS = 0.35
CHARGE_RATE = 0.02       # battery fraction per second while docked
DRONE_ALT_MIN = 0.3
DRONE_ALT_MAX = 2.5
OVERFLIGHT_ALT = 1.0     # above this a drone's vision clears furniture
CONF_LO, CONF_HI = 0.6, 1.0

UGV_DEFAULTS = dict(radius=0.15, v_max=1.0, omega_max=2.5, vz_max=0.0)
DRONE_DEFAULTS = dict(radius=0.12, v_max=2.0, omega_max=3.0, vz_max=1.0)
UGV_SENSOR = SensorSpec(fov=1.8, range=3.0, p_detect=0.7, proximity_radius=0.5)
DRONE_SENSOR = SensorSpec(fov=2.0 * math.pi, range=3.5, p_detect=0.6, proximity_radius=0.5)


class UnknownRobot(Exception):
    pass


@dataclass
class RobotBody:
    robot_id: str
    kind: str  # "UGV" | "Drone"
    x: float
    y: float
    heading: float
    altitude: float = 0.0
    radius: float = 0.15
    v_max: float = 1.0
    omega_max: float = 2.5
    vz_max: float = 0.0
    battery: float = 1.0
    sensor: SensorSpec = UGV_SENSOR
    holding: str | None = None  # object instance id (UGV gripper)
    dock: tuple[float, float] | None = None

    @property
    def pose(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.heading)

    @classmethod
    def make(cls, robot_id: str, kind: str, x: float, y: float, **over: Any) -> "RobotBody":
        if kind == "UGV":
            base: dict[str, Any] = dict(UGV_DEFAULTS, sensor=UGV_SENSOR, altitude=0.0)
        elif kind == "Drone":
            base = dict(DRONE_DEFAULTS, sensor=DRONE_SENSOR, altitude=1.5)
        else:
            raise ValueError(f"unknown robot kind {kind!r}")
        base.update(over)
        return cls(robot_id=robot_id, kind=kind, x=x, y=y, heading=base.pop("heading", 0.0), **base)


@dataclass
class WorldObject:
    instance_id: str
    concept: str
    class_label: str
    x: float
    y: float
    held_by: str | None = None


@dataclass
class HumanBody:
    agent_id: str
    x: float
    y: float


@dataclass
class WorldState:
    grid: Grid
    rooms: dict[str, tuple[float, float, float, float]]
    robots: dict[str, RobotBody]
    objects: dict[str, WorldObject]
    humans: dict[str, HumanBody]
    rng: random.Random
    tick: int = 0
    collisions_total: int = 0
    static_grid: Grid | None = None  # map as loaded, before any injection

    def room_of_point(self, x: float, y: float) -> str | None:
        for name, (x0, y0, x1, y1) in self.rooms.items():
            if x0 <= x < x1 and y0 <= y < y1:
                return name
        return None


def validate_world(world: WorldState) -> None:
    for body in world.robots.values():
        if not world.grid.is_free_point(body.x, body.y):
            raise ValueError(f"robot {body.robot_id} placed on non-free cell")
    for obj in world.objects.values():
        if obj.held_by is None and not world.grid.is_free_point(obj.x, obj.y):
            raise ValueError(f"object {obj.instance_id} placed on non-free cell")
    for human in world.humans.values():
        if not world.grid.is_free_point(human.x, human.y):
            raise ValueError(f"human {human.agent_id} placed on non-free cell")


# -- motion -----------------------------------------------------------------


def clip_motion(
    grid: Grid, x0: float, y0: float, x1: float, y1: float
) -> tuple[float, float, bool]:
    """Move from (x0, y0) toward (x1, y1), stopping at the first non-free
    cell boundary. Returns the final point and whether contact occurred."""
    dx, dy = x1 - x0, y1 - y0
    if dx == 0.0 and dy == 0.0:
        return x0, y0, False
    cs = grid.cell_size
    crossings: list[float] = []
    for p0, d in ((x0, dx), (y0, dy)):
        if d == 0.0:
            continue
        k = math.floor(p0 / cs) + (1 if d > 0 else 0)
        g = k * cs
        step = cs if d > 0 else -cs
        while True:
            t = (g - p0) / d
            if t > 1.0 + 1e-12:
                break
            if t > 1e-12:
                crossings.append(min(t, 1.0))
            g += step
    bounds = sorted(set(crossings))
    segment_edges = [0.0] + bounds + [1.0]
    for i in range(len(segment_edges) - 1):
        a, b = segment_edges[i], segment_edges[i + 1]
        if b - a <= 1e-15:
            continue
        mid = (a + b) / 2.0
        mx, my = x0 + dx * mid, y0 + dy * mid
        if not grid.is_free_point(mx, my):
            # clip just inside the last free cell
            norm = math.hypot(dx, dy)
            back = 1e-6 / norm
            t = max(0.0, a - back)
            return x0 + dx * t, y0 + dy * t, True
    return x1, y1, False


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


# -- sensing ------------------------------------------------------------------


def _nearest_obstacle(world: WorldState, body: RobotBody) -> tuple[float, float] | None:
    """Deterministic (range, bearing) of the closest blocked cell or
    ground obstacle within the proximity radius, else None."""
    radius = body.sensor.proximity_radius
    grid = world.grid
    cs = grid.cell_size
    cx0, cy0 = grid.cell_of_point(body.x, body.y)
    span = int(math.ceil(radius / cs)) + 1
    candidates: list[tuple[float, float, Any]] = []
    for cy in range(cy0 - span, cy0 + span + 1):
        for cx in range(cx0 - span, cx0 + span + 1):
            if grid.in_bounds(cx, cy) and grid.cell(cx, cy) == ".":
                continue
            # nearest point on the cell rectangle
            rx0, ry0 = cx * cs, cy * cs
            nx = min(max(body.x, rx0), rx0 + cs)
            ny = min(max(body.y, ry0), ry0 + cs)
            dist = math.hypot(nx - body.x, ny - body.y)
            if dist > radius:
                continue
            bearing = _wrap_angle(math.atan2(ny - body.y, nx - body.x) - body.heading)
            candidates.append((dist, bearing, ("cell", cx, cy)))
    for hid in sorted(world.humans):
        h = world.humans[hid]
        dist = math.hypot(h.x - body.x, h.y - body.y)
        if dist <= radius:
            bearing = _wrap_angle(math.atan2(h.y - body.y, h.x - body.x) - body.heading)
            candidates.append((dist, bearing, ("human", hid)))
    if body.kind == "UGV":
        for rid in sorted(world.robots):
            other = world.robots[rid]
            if rid == body.robot_id or other.kind != "UGV":
                continue
            dist = math.hypot(other.x - body.x, other.y - body.y)
            if dist <= radius:
                bearing = _wrap_angle(math.atan2(other.y - body.y, other.x - body.x) - body.heading)
                candidates.append((dist, bearing, ("robot", rid)))
    if not candidates:
        return None
    candidates.sort(key=lambda c: (c[0], str(c[2])))
    return candidates[0][0], candidates[0][1]


def _vision_blockers(body: RobotBody) -> frozenset[str]:
    if body.kind == "Drone" and body.altitude >= OVERFLIGHT_ALT:
        return frozenset({WALL})
    return frozenset({WALL, FURNITURE})


def sense(world: WorldState, body: RobotBody) -> list[Detection]:
    """Probabilistic vision over objects and humans plus a deterministic
    proximity detection; draws come from the world RNG in fixed order."""
    dets: list[Detection] = []
    spec = body.sensor
    blockers = _vision_blockers(body)

    def try_see(x: float, y: float, label: str) -> None:
        dist = math.hypot(x - body.x, y - body.y)
        if dist > spec.range or dist < 1e-9:
            return
        bearing = _wrap_angle(math.atan2(y - body.y, x - body.x) - body.heading)
        if abs(bearing) > spec.fov / 2.0 + 1e-12:
            return
        if not world.grid.line_of_sight((body.x, body.y), (x, y), blockers):
            return
        if world.rng.random() >= spec.p_detect:
            return
        conf = CONF_LO + (CONF_HI - CONF_LO) * world.rng.random()
        dets.append(Detection(label, conf, (dist, bearing), world.tick))

    for oid in sorted(world.objects):
        obj = world.objects[oid]
        if obj.held_by is not None:
            continue
        try_see(obj.x, obj.y, obj.class_label)
    for hid in sorted(world.humans):
        h = world.humans[hid]
        try_see(h.x, h.y, "person")

    prox = _nearest_obstacle(world, body)
    if prox is not None:
        dets.append(Detection("obstacle", 1.0, prox, world.tick))
    return dets


# -- stepping -----------------------------------------------------------------


def step(
    world: WorldState, requests: list[ActuatorRequest], dt: float = DT
) -> tuple[WorldState, dict[str, list[Detection]], list[CollisionEvent]]:
    """Advance one tick: integrate motion with contact clipping, drain
    batteries, resolve gripper transfers, then sense for every robot."""
    by_channel: dict[tuple[str, str], ActuatorRequest] = {}
    for req in requests:
        if req.robot_id not in world.robots:
            raise UnknownRobot(req.robot_id)
        key = (req.robot_id, req.channel)
        if key in by_channel:
            raise ValueError(f"duplicate request for {key}")
        by_channel[key] = req

    events: list[CollisionEvent] = []
    for rid in sorted(world.robots):
        body = world.robots[rid]
        drive = by_channel.get((rid, "drive"))
        vertical = by_channel.get((rid, "vertical"))
        gripper = by_channel.get((rid, "gripper"))

        speed_frac = 0.0
        if body.kind == "UGV":
            v = w = 0.0
            if drive is not None:
                v = max(-body.v_max, min(body.v_max, drive.setpoint[0]))
                w = max(-body.omega_max, min(body.omega_max, drive.setpoint[1]))
            nx = body.x + v * math.cos(body.heading) * dt
            ny = body.y + v * math.sin(body.heading) * dt
            fx, fy, hit = clip_motion(world.grid, body.x, body.y, nx, ny)
            if hit:
                events.append(CollisionEvent(rid, (fx, fy), world.tick))
            body.x, body.y = fx, fy
            body.heading = _wrap_angle(body.heading + w * dt)
            speed_frac = abs(v) / body.v_max if body.v_max else 0.0
        else:  # Drone: holonomic planar velocity plus altitude rate
            vx = vy = vz = 0.0
            if drive is not None:
                vx, vy = drive.setpoint[0], drive.setpoint[1]
                norm = math.hypot(vx, vy)
                if norm > body.v_max:
                    vx *= body.v_max / norm
                    vy *= body.v_max / norm
            if vertical is not None:
                vz = max(-body.vz_max, min(body.vz_max, vertical.setpoint[0]))
            fx, fy, hit = clip_motion(world.grid, body.x, body.y, body.x + vx * dt, body.y + vy * dt)
            if hit:
                events.append(CollisionEvent(rid, (fx, fy), world.tick))
            body.x, body.y = fx, fy
            body.altitude = max(DRONE_ALT_MIN, min(DRONE_ALT_MAX, body.altitude + vz * dt))
            speed_frac = math.hypot(vx, vy, vz) / body.v_max if body.v_max else 0.0

        drain = (IDLE_DRAIN + MOTION_DRAIN * min(1.0, speed_frac)) * dt
        body.battery = max(0.0, body.battery - drain)
        if body.dock is not None and math.hypot(body.x - body.dock[0], body.y - body.dock[1]) <= DOCK_RADIUS:
            body.battery = min(1.0, body.battery + CHARGE_RATE * dt)

        if gripper is not None and body.kind == "UGV":
            closing = gripper.setpoint[0] >= 0.5
            if closing and body.holding is None:
                nearest: tuple[float, str] | None = None
                for oid in sorted(world.objects):
                    obj = world.objects[oid]
                    if obj.held_by is not None:
                        continue
                    d = math.hypot(obj.x - body.x, obj.y - body.y)
                    if d <= GRASP_RADIUS and (nearest is None or d < nearest[0]):
                        nearest = (d, oid)
                if nearest is not None:
                    world.objects[nearest[1]].held_by = rid
                    body.holding = nearest[1]
            elif not closing and body.holding is not None:
                obj = world.objects[body.holding]
                obj.held_by = None
                obj.x, obj.y = body.x, body.y
                body.holding = None

        if body.holding is not None:
            held = world.objects[body.holding]
            held.x, held.y = body.x, body.y

    world.tick += 1
    world.collisions_total += len(events)
    detections = {rid: sense(world, world.robots[rid]) for rid in sorted(world.robots)}
    return world, detections, events


def inject_obstacle(world: WorldState, x: float, y: float) -> None:
    """Test/scenario hook: drop a furniture block into a free cell mid-run.
    The tactical layer only learns of it through proximity sensing."""
    cx, cy = world.grid.cell_of_point(x, y)
    if not world.grid.is_free_cell(cx, cy):
        raise ValueError(f"cell at ({x}, {y}) is not free")
    world.grid = world.grid.with_cell(cx, cy, FURNITURE)


# -- serialization -------------------------------------------------------------


def serialize_world(world: WorldState) -> str:
    """Canonical JSON of the full state, including RNG internals."""
    state: dict[str, Any] = {
        "tick": world.tick,
        "collisions_total": world.collisions_total,
        "grid": world.grid.to_text(),
        "rooms": {k: list(v) for k, v in sorted(world.rooms.items())},
        "robots": {
            rid: {
                "kind": b.kind,
                "x": b.x,
                "y": b.y,
                "heading": b.heading,
                "altitude": b.altitude,
                "battery": b.battery,
                "holding": b.holding,
                "dock": list(b.dock) if b.dock else None,
            }
            for rid, b in sorted(world.robots.items())
        },
        "objects": {
            oid: {
                "concept": o.concept,
                "label": o.class_label,
                "x": o.x,
                "y": o.y,
                "held_by": o.held_by,
            }
            for oid, o in sorted(world.objects.items())
        },
        "humans": {hid: {"x": h.x, "y": h.y} for hid, h in sorted(world.humans.items())},
        "rng": _plain_state(world.rng.getstate()),
    }
    return json.dumps(state, sort_keys=True, separators=(",", ":"))


def _plain_state(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain_state(v) for v in value]
    return value
