"""Leaf skill library: the predicates and actions trees can reference.

Leaves are pure functions of (context, blackboard, percepts, params);
all cross-tick state lives on the blackboard under ``internal/cmd/*``
so preemption and resumption stay deterministic. Each action touches at
most one actuator channel per tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from strata.sim.grid import Grid
from strata.sim.types import Detection
from strata.tactical import nav
from strata.tactical.blackboard import BtBlackboard
from strata.tactical.nodes import BtStatus
from strata.tactical.types import ActuatorRequest

ARRIVE_TOLERANCE = 0.15
GRASP_APPROACH = 0.35
GRIP_TICKS_NEEDED = 5
GRIP_TIMEOUT_TICKS = 40
STALL_SKIP_TICKS = 40
CRUISE_ALTITUDE = 1.5
UGV_SWEEP_SPACING = 1.75
DRONE_SWEEP_SPACING = 2.0

PredicateFn = Callable[["LeafContext", BtBlackboard, list[Detection], dict], bool]
ActionFn = Callable[
    ["LeafContext", BtBlackboard, list[Detection], dict],
    tuple[BtStatus, ActuatorRequest | None],
]
HaltFn = Callable[["LeafContext", BtBlackboard], None]


@dataclass
class LeafContext:
    """Static per-robot knowledge handed to every leaf."""

    robot_id: str
    kind: str  # "UGV" | "Drone"
    radius: float
    v_max: float
    omega_max: float
    vz_max: float
    grid: Grid        # clearance-inflated planning grid
    raw_grid: Grid    # map as loaded
    rooms: dict[str, tuple[float, float, float, float]] = field(default_factory=dict)
    dock: tuple[float, float] | None = None

    @classmethod
    def for_robot(
        cls,
        robot_id: str,
        kind: str,
        raw_grid: Grid,
        rooms: dict[str, tuple[float, float, float, float]] | None = None,
        dock: tuple[float, float] | None = None,
        radius: float = 0.15,
        v_max: float = 1.0,
        omega_max: float = 2.5,
        vz_max: float = 1.0,
    ) -> "LeafContext":
        return cls(
            robot_id=robot_id,
            kind=kind,
            radius=radius,
            v_max=v_max,
            omega_max=omega_max,
            vz_max=vz_max,
            grid=raw_grid.inflate(1),
            raw_grid=raw_grid,
            rooms=dict(rooms or {}),
            dock=dock,
        )


@dataclass
class ActionSpec:
    fn: ActionFn
    halt: HaltFn | None = None
    channel: str | None = None


class LeafRegistry:
    def __init__(self) -> None:
        self._predicates: dict[str, PredicateFn] = {}
        self._actions: dict[str, ActionSpec] = {}

    def register_predicate(self, predicate_id: str, fn: PredicateFn) -> None:
        self._predicates[predicate_id] = fn

    def register_action(
        self,
        action_id: str,
        fn: ActionFn,
        halt: HaltFn | None = None,
        channel: str | None = None,
    ) -> None:
        self._actions[action_id] = ActionSpec(fn=fn, halt=halt, channel=channel)

    def has_predicate(self, predicate_id: str) -> bool:
        return predicate_id in self._predicates

    def has_action(self, action_id: str) -> bool:
        return action_id in self._actions

    def predicate(self, predicate_id: str) -> PredicateFn:
        if predicate_id not in self._predicates:
            raise KeyError(f"unregistered predicate {predicate_id!r}")
        return self._predicates[predicate_id]

    def action_spec(self, action_id: str) -> ActionSpec:
        if action_id not in self._actions:
            raise KeyError(f"unregistered action {action_id!r}")
        return self._actions[action_id]


# -- request helpers ----------------------------------------------------------


def drive_request(ctx: LeafContext, a: float, b: float) -> ActuatorRequest:
    """(v, omega) for a UGV, (vx, vy) for a drone; clamped to body limits."""
    if ctx.kind == "UGV":
        v = max(-ctx.v_max, min(ctx.v_max, a))
        w = max(-ctx.omega_max, min(ctx.omega_max, b))
        return ActuatorRequest(ctx.robot_id, "drive", (v, w))
    norm = math.hypot(a, b)
    if norm > ctx.v_max:
        a, b = a * ctx.v_max / norm, b * ctx.v_max / norm
    return ActuatorRequest(ctx.robot_id, "drive", (a, b))


def vertical_request(ctx: LeafContext, vz: float) -> ActuatorRequest:
    vz = max(-ctx.vz_max, min(ctx.vz_max, vz))
    return ActuatorRequest(ctx.robot_id, "vertical", (vz,))


def gripper_request(ctx: LeafContext, closed: float) -> ActuatorRequest:
    return ActuatorRequest(ctx.robot_id, "gripper", (max(0.0, min(1.0, closed)),))


# -- percept helpers -----------------------------------------------------------


def nearest_obstacle(percepts: list[Detection]) -> tuple[float, float] | None:
    obstacles = [d for d in percepts if d.class_label == "obstacle"]
    if not obstacles:
        return None
    hit = min(obstacles, key=lambda d: d.relative_position[0])
    return hit.relative_position


def _pose(bb: BtBlackboard) -> tuple[float, float, float]:
    vec = bb.get_vec("percept/pose", (0.0, 0.0, 0.0))
    return (float(vec[0]), float(vec[1]), float(vec[2]))


# -- predicates ----------------------------------------------------------------


def pred_obstacle_within_radius(ctx, bb, percepts, params) -> bool:
    radius = float(params.get("radius", 0.18))
    hit = nearest_obstacle(percepts)
    return hit is not None and hit[0] <= radius


def pred_battery_below(ctx, bb, percepts, params) -> bool:
    threshold = float(params.get("threshold", 0.15))
    return bb.get_float("percept/battery", 1.0) < threshold


def pred_altitude_below(ctx, bb, percepts, params) -> bool:
    if ctx.kind != "Drone":
        return False
    min_z = float(params.get("min_z", 0.5))
    return bb.get_float("percept/altitude", CRUISE_ALTITUDE) < min_z


def pred_has_command(ctx, bb, percepts, params) -> bool:
    return bb.has("command/verb")


def pred_verb_is(ctx, bb, percepts, params) -> bool:
    return bb.get("command/verb") == params.get("verb")


def pred_holding_object(ctx, bb, percepts, params) -> bool:
    return bb.get_str("percept/holding", "") != ""


# -- shared path following ------------------------------------------------------


def _ensure_path(
    ctx: LeafContext, bb: BtBlackboard, target: tuple[float, float], key: str
) -> bool:
    """Plan once per (command, key, target); returns False when unreachable."""
    want = (round(target[0], 3), round(target[1], 3))
    if bb.get_vec(f"{key}/goal", ()) == want and bb.has(f"{key}/path"):
        return True
    pose = _pose(bb)
    path = nav.plan_path(ctx.grid, (pose[0], pose[1]), target)
    if path is None:
        return False
    flat = tuple(coord for point in path for coord in point)
    bb.set(f"{key}/path", flat)
    bb.set(f"{key}/goal", want)
    bb.set(f"{key}/idx", 0)
    bb.set(f"{key}/stall", 0)
    bb.set(f"{key}/last_pos", (pose[0], pose[1]))
    return True


def _follow_path(
    ctx: LeafContext,
    bb: BtBlackboard,
    percepts: list[Detection],
    key: str,
    allow_skip: bool = False,
) -> tuple[bool, ActuatorRequest | None]:
    """Advance along the stored path. Returns (arrived, request)."""
    flat = bb.get_vec(f"{key}/path")
    points = [(flat[i], flat[i + 1]) for i in range(0, len(flat), 2)]
    idx = bb.get_int(f"{key}/idx", 0)
    pose = _pose(bb)
    while idx < len(points):
        wp = points[idx]
        if math.hypot(wp[0] - pose[0], wp[1] - pose[1]) <= nav.WAYPOINT_TOLERANCE:
            idx += 1
            bb.set(f"{key}/idx", idx)
            continue
        break
    if idx >= len(points):
        return True, None

    last = bb.get_vec(f"{key}/last_pos", (pose[0], pose[1]))
    moved = math.hypot(pose[0] - last[0], pose[1] - last[1])
    stall = bb.get_int(f"{key}/stall", 0)
    stall = 0 if moved > 0.005 else stall + 1
    bb.set(f"{key}/stall", stall)
    bb.set(f"{key}/last_pos", (pose[0], pose[1]))
    if allow_skip and stall >= STALL_SKIP_TICKS:
        bb.set(f"{key}/idx", idx + 1)
        bb.set(f"{key}/stall", 0)
        return idx + 1 >= len(points), None

    obstacle = nearest_obstacle(percepts)
    wp = points[idx]
    if ctx.kind == "UGV":
        v, w = nav.steer_ugv(pose, wp, ctx.v_max, ctx.omega_max, obstacle)
        return False, drive_request(ctx, v, w)
    vx, vy = nav.steer_drone((pose[0], pose[1]), wp, ctx.v_max, obstacle, pose[2])
    return False, drive_request(ctx, vx, vy)


def _clear_nav(bb: BtBlackboard, key: str) -> None:
    bb.clear_prefix(key)


# -- command actions ------------------------------------------------------------


def act_move_to(ctx, bb, percepts, params):
    target = bb.get("command/param/target")
    if not isinstance(target, tuple) or len(target) < 2:
        bb.set("command/fail_reason", "missing-target")
        return BtStatus.FAILURE, None
    key = "internal/cmd/nav"
    if not _ensure_path(ctx, bb, (float(target[0]), float(target[1])), key):
        bb.set("command/fail_reason", "unreachable-target")
        return BtStatus.FAILURE, None
    if not bb.has("internal/cmd/d0"):
        pose = _pose(bb)
        bb.set("internal/cmd/d0", max(0.01, math.hypot(target[0] - pose[0], target[1] - pose[1])))
    arrived, request = _follow_path(ctx, bb, percepts, key)
    pose = _pose(bb)
    dist = math.hypot(target[0] - pose[0], target[1] - pose[1])
    progress = max(0.0, min(1.0, 1.0 - dist / bb.get_float("internal/cmd/d0")))
    bb.set("command/progress", max(progress, bb.get_float("command/progress", 0.0)))
    if arrived:
        bb.set("command/progress", 1.0)
        return BtStatus.SUCCESS, None
    return BtStatus.RUNNING, request


def act_search_area(ctx, bb, percepts, params):
    room = bb.get("command/param/room")
    if not isinstance(room, str) or room not in ctx.rooms:
        bb.set("command/fail_reason", "unknown-room")
        return BtStatus.FAILURE, None
    wps_key = "internal/cmd/sweep"
    if not bb.has(f"{wps_key}/points"):
        spacing = float(
            params.get(
                "spacing", UGV_SWEEP_SPACING if ctx.kind == "UGV" else DRONE_SWEEP_SPACING
            )
        )
        points = nav.room_sweep_waypoints(ctx.grid, ctx.rooms[room], spacing)
        if not points:
            bb.set("command/fail_reason", "room-has-no-reachable-cells")
            return BtStatus.FAILURE, None
        bb.set(f"{wps_key}/points", tuple(c for p in points for c in p))
        bb.set(f"{wps_key}/i", 0)
    flat = bb.get_vec(f"{wps_key}/points")
    points = [(flat[i], flat[i + 1]) for i in range(0, len(flat), 2)]
    i = bb.get_int(f"{wps_key}/i", 0)
    if i >= len(points):
        bb.set("command/progress", 1.0)
        return BtStatus.SUCCESS, None
    key = "internal/cmd/nav"
    if not _ensure_path(ctx, bb, points[i], key):
        bb.set(f"{wps_key}/i", i + 1)  # unreachable waypoint: skip it
        return BtStatus.RUNNING, None
    arrived, request = _follow_path(ctx, bb, percepts, key, allow_skip=True)
    if arrived:
        bb.set(f"{wps_key}/i", i + 1)
        bb.set("command/progress", min(1.0, (i + 1) / len(points)))
        if i + 1 >= len(points):
            return BtStatus.SUCCESS, None
        return BtStatus.RUNNING, None
    bb.set(
        "command/progress",
        max(bb.get_float("command/progress", 0.0), i / max(1, len(points))),
    )
    return BtStatus.RUNNING, request


def act_pick_up(ctx, bb, percepts, params):
    if ctx.kind != "UGV":
        bb.set("command/fail_reason", "no-gripper")
        return BtStatus.FAILURE, None
    if bb.get_str("percept/holding", "") != "":
        bb.set("command/progress", 1.0)
        return BtStatus.SUCCESS, None
    position = bb.get("command/param/position")
    if not isinstance(position, tuple) or len(position) < 2:
        bb.set("command/fail_reason", "missing-position")
        return BtStatus.FAILURE, None
    pose = _pose(bb)
    dist = math.hypot(position[0] - pose[0], position[1] - pose[1])
    if dist > GRASP_APPROACH:
        key = "internal/cmd/nav"
        if not _ensure_path(ctx, bb, (float(position[0]), float(position[1])), key):
            bb.set("command/fail_reason", "unreachable-object")
            return BtStatus.FAILURE, None
        arrived, request = _follow_path(ctx, bb, percepts, key)
        if not arrived:
            return BtStatus.RUNNING, request
        # path exhausted but object still beyond reach of the gripper
        if math.hypot(position[0] - pose[0], position[1] - pose[1]) > 0.55:
            bb.set("command/fail_reason", "object-out-of-reach")
            return BtStatus.FAILURE, None
    grip_ticks = bb.get_int("internal/cmd/grip_ticks", 0) + 1
    bb.set("internal/cmd/grip_ticks", grip_ticks)
    if grip_ticks > GRIP_TIMEOUT_TICKS:
        bb.set("command/fail_reason", "grasp-failed")
        return BtStatus.FAILURE, None
    bb.set("command/progress", max(bb.get_float("command/progress", 0.0), 0.9))
    return BtStatus.RUNNING, gripper_request(ctx, 1.0)


def act_scan(ctx, bb, percepts, params):
    if ctx.kind == "UGV":
        pose = _pose(bb)
        prev = bb.get_float("internal/cmd/scan_prev", pose[2])
        turned = bb.get_float("internal/cmd/scan_total", 0.0)
        delta = abs(math.atan2(math.sin(pose[2] - prev), math.cos(pose[2] - prev)))
        turned += delta
        bb.set("internal/cmd/scan_prev", pose[2])
        bb.set("internal/cmd/scan_total", turned)
        bb.set("command/progress", min(1.0, turned / (2.0 * math.pi)))
        if turned >= 2.0 * math.pi:
            return BtStatus.SUCCESS, None
        return BtStatus.RUNNING, drive_request(ctx, 0.0, 1.2)
    ticks = bb.get_int("internal/cmd/scan_ticks", 0) + 1
    bb.set("internal/cmd/scan_ticks", ticks)
    duration = int(params.get("duration", 20))
    bb.set("command/progress", min(1.0, ticks / duration))
    if ticks >= duration:
        return BtStatus.SUCCESS, None
    return BtStatus.RUNNING, None


def act_hover(ctx, bb, percepts, params):
    duration = int(bb.get("command/param/duration", params.get("duration", 20)))
    ticks = bb.get_int("internal/cmd/hover_ticks", 0) + 1
    bb.set("internal/cmd/hover_ticks", ticks)
    bb.set("command/progress", min(1.0, ticks / max(1, duration)))
    if ticks >= duration:
        return BtStatus.SUCCESS, None
    vz = 1.2 * (CRUISE_ALTITUDE - bb.get_float("percept/altitude", CRUISE_ALTITUDE))
    return BtStatus.RUNNING, vertical_request(ctx, vz)


def act_return_to_dock(ctx, bb, percepts, params):
    if ctx.dock is None:
        bb.set("command/fail_reason", "no-dock")
        return BtStatus.FAILURE, None
    key = "internal/cmd/nav"
    if not _ensure_path(ctx, bb, ctx.dock, key):
        bb.set("command/fail_reason", "dock-unreachable")
        return BtStatus.FAILURE, None
    arrived, request = _follow_path(ctx, bb, percepts, key)
    if arrived:
        bb.set("command/progress", 1.0)
        return BtStatus.SUCCESS, None
    return BtStatus.RUNNING, request


def act_stop_command(ctx, bb, percepts, params):
    bb.set("command/progress", 1.0)
    return BtStatus.SUCCESS, drive_request(ctx, 0.0, 0.0)


# -- safety / housekeeping actions ----------------------------------------------


def act_safety_stop(ctx, bb, percepts, params):
    return BtStatus.RUNNING, drive_request(ctx, 0.0, 0.0)


def act_safety_climb(ctx, bb, percepts, params):
    target = float(params.get("target", 0.9))
    vz = 1.5 * (target - bb.get_float("percept/altitude", target))
    return BtStatus.RUNNING, vertical_request(ctx, max(0.2, vz))


def act_safety_dock(ctx, bb, percepts, params):
    if ctx.dock is None:
        return BtStatus.RUNNING, drive_request(ctx, 0.0, 0.0)
    key = "internal/safety/nav"
    if not _ensure_path(ctx, bb, ctx.dock, key):
        return BtStatus.RUNNING, drive_request(ctx, 0.0, 0.0)
    arrived, request = _follow_path(ctx, bb, percepts, key)
    if arrived:
        _clear_nav(bb, key)
        return BtStatus.RUNNING, drive_request(ctx, 0.0, 0.0)
    return BtStatus.RUNNING, request


def act_altitude_hold(ctx, bb, percepts, params):
    cruise = float(params.get("cruise", CRUISE_ALTITUDE))
    vz = 1.2 * (cruise - bb.get_float("percept/altitude", cruise))
    return BtStatus.RUNNING, vertical_request(ctx, vz)


def act_idle(ctx, bb, percepts, params):
    return BtStatus.RUNNING, None


# -- registry -------------------------------------------------------------------


def default_registry() -> LeafRegistry:
    reg = LeafRegistry()
    reg.register_predicate("safety/obstacle_within_radius", pred_obstacle_within_radius)
    reg.register_predicate("safety/battery_below", pred_battery_below)
    reg.register_predicate("safety/altitude_below", pred_altitude_below)
    reg.register_predicate("has_command", pred_has_command)
    reg.register_predicate("verb_is", pred_verb_is)
    reg.register_predicate("holding_object", pred_holding_object)

    reg.register_action("safety_stop", act_safety_stop, channel="drive")
    reg.register_action("safety_climb", act_safety_climb, channel="vertical")
    reg.register_action("safety_dock", act_safety_dock, channel="drive")
    reg.register_action("altitude_hold", act_altitude_hold, channel="vertical")
    reg.register_action("idle", act_idle)
    reg.register_action("do_move_to", act_move_to, channel="drive")
    reg.register_action("do_search_area", act_search_area, channel="drive")
    reg.register_action("do_pick_up", act_pick_up, channel="gripper")
    reg.register_action("do_scan", act_scan, channel="drive")
    reg.register_action("do_hover", act_hover, channel="vertical")
    reg.register_action("do_return_to_dock", act_return_to_dock, channel="drive")
    reg.register_action("do_stop", act_stop_command, channel="drive")
    return reg
