"""Grid path planning and local steering for leaf skills.

Planning runs on a clearance-inflated copy of the static map; moving
obstacles that appear mid-run are only visible through the proximity
sensor and are handled by speed scaling plus the safety stop subtree.
"""
from __future__ import annotations

import heapq
import math

from strata.sim.grid import Grid

STOP_RANGE = 0.2       # frontal obstacle distance at which speed reaches zero
SLOW_RANGE = 0.45      # start scaling speed down below this distance
FRONTAL_CONE = 1.2     # rad; obstacles outside this bearing do not slow us
WAYPOINT_TOLERANCE = 0.15
TURN_IN_PLACE = 0.6    # rad heading error above which a UGV stops to turn


def nearest_free_cell(
    grid: Grid, x: float, y: float, max_radius_cells: int = 6
) -> tuple[int, int] | None:
    """Deterministically snap a point to the closest free cell."""
    cx0, cy0 = grid.cell_of_point(x, y)
    if grid.is_free_cell(cx0, cy0):
        return cx0, cy0
    best: tuple[float, int, int] | None = None
    for r in range(1, max_radius_cells + 1):
        for cy in range(cy0 - r, cy0 + r + 1):
            for cx in range(cx0 - r, cx0 + r + 1):
                if max(abs(cx - cx0), abs(cy - cy0)) != r:
                    continue
                if not grid.is_free_cell(cx, cy):
                    continue
                ccx, ccy = grid.cell_center(cx, cy)
                key = (math.hypot(ccx - x, ccy - y), cx, cy)
                if best is None or key < best:
                    best = key
        if best is not None:
            return best[1], best[2]
    return None


def plan_path(
    grid: Grid, start: tuple[float, float], goal: tuple[float, float]
) -> list[tuple[float, float]] | None:
    """4-connected A* between cell centers; deterministic tie-breaking.
    Returns waypoints ending at the free cell nearest the goal, or None."""
    start_cell = nearest_free_cell(grid, *start)
    goal_cell = nearest_free_cell(grid, *goal)
    if start_cell is None or goal_cell is None:
        return None

    def h(c: tuple[int, int]) -> float:
        return abs(c[0] - goal_cell[0]) + abs(c[1] - goal_cell[1])

    open_heap: list[tuple[float, int, tuple[int, int]]] = [(h(start_cell), 0, start_cell)]
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    g_cost: dict[tuple[int, int], float] = {start_cell: 0.0}
    counter = 0
    while open_heap:
        _, _, current = heapq.heappop(open_heap)
        if current == goal_cell:
            cells = [current]
            while current in came_from:
                current = came_from[current]
                cells.append(current)
            cells.reverse()
            return [grid.cell_center(cx, cy) for cx, cy in cells]
        base = g_cost[current]
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (current[0] + dx, current[1] + dy)
            if not grid.is_free_cell(*nxt):
                continue
            cost = base + 1.0
            if cost < g_cost.get(nxt, math.inf):
                g_cost[nxt] = cost
                came_from[nxt] = current
                counter += 1
                heapq.heappush(open_heap, (cost + h(nxt), counter, nxt))
    return None


def _wrap(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def proximity_scale(
    obstacle: tuple[float, float] | None, motion_bearing: float = 0.0
) -> float:
    """Speed multiplier in [0, 1] from the nearest obstacle (range, bearing
    relative to heading); only roughly-frontal obstacles brake us."""
    if obstacle is None:
        return 1.0
    rng, bearing = obstacle
    if abs(_wrap(bearing - motion_bearing)) > FRONTAL_CONE:
        return 1.0
    if rng <= STOP_RANGE:
        return 0.0
    if rng >= SLOW_RANGE:
        return 1.0
    return (rng - STOP_RANGE) / (SLOW_RANGE - STOP_RANGE)


def steer_ugv(
    pose: tuple[float, float, float],
    target: tuple[float, float],
    v_max: float,
    omega_max: float,
    obstacle: tuple[float, float] | None,
) -> tuple[float, float]:
    """Unicycle steering toward a waypoint with frontal-obstacle braking."""
    x, y, heading = pose
    err = _wrap(math.atan2(target[1] - y, target[0] - x) - heading)
    dist = math.hypot(target[0] - x, target[1] - y)
    omega = max(-omega_max, min(omega_max, 3.0 * err))
    if abs(err) > TURN_IN_PLACE:
        return 0.0, omega
    v = min(v_max, 2.0 * dist) * (1.0 - abs(err) / TURN_IN_PLACE)
    v *= proximity_scale(obstacle, motion_bearing=0.0)
    return v, omega


def steer_drone(
    position: tuple[float, float],
    target: tuple[float, float],
    v_max: float,
    obstacle: tuple[float, float] | None,
    heading: float = 0.0,
) -> tuple[float, float]:
    """Holonomic planar steering; braking considers obstacles near the
    direction of intended motion."""
    dx, dy = target[0] - position[0], target[1] - position[1]
    dist = math.hypot(dx, dy)
    if dist < 1e-9:
        return 0.0, 0.0
    motion_bearing = _wrap(math.atan2(dy, dx) - heading)
    speed = min(v_max, 2.0 * dist) * proximity_scale(obstacle, motion_bearing)
    return speed * dx / dist, speed * dy / dist


def room_sweep_waypoints(
    grid: Grid,
    rect: tuple[float, float, float, float],
    spacing_m: float,
) -> list[tuple[float, float]]:
    """Coverage waypoints over a room's reachable cells: serpentine scan
    of free (inflated) cell centers thinned to roughly ``spacing_m``."""
    x0, y0, x1, y1 = rect
    cs = grid.cell_size
    cy_lo = int(math.floor(y0 / cs))
    cy_hi = int(math.ceil(y1 / cs))
    cx_lo = int(math.floor(x0 / cs))
    cx_hi = int(math.ceil(x1 / cs))
    candidates: list[tuple[float, float]] = []
    flip = False
    for cy in range(cy_lo, cy_hi):
        row: list[tuple[float, float]] = []
        for cx in range(cx_lo, cx_hi):
            if not grid.is_free_cell(cx, cy):
                continue
            ccx, ccy = grid.cell_center(cx, cy)
            if x0 <= ccx < x1 and y0 <= ccy < y1:
                row.append((ccx, ccy))
        if flip:
            row.reverse()
        flip = not flip
        candidates.extend(row)
    waypoints: list[tuple[float, float]] = []
    for point in candidates:
        if all(math.hypot(point[0] - w[0], point[1] - w[1]) >= spacing_m for w in waypoints):
            waypoints.append(point)
    return waypoints
