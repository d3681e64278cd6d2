"""Occupancy grid backed by an ASCII map.

Map legend: ``#`` wall, ``F`` furniture, ``.`` or space free. The first
text line is the top of the map (largest y); cell (0, 0) sits at world
origin with ``CELL_SIZE`` metre squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

CELL_SIZE = 0.25

FREE = "."
WALL = "#"
FURNITURE = "F"
_LEGEND = {WALL, FURNITURE, FREE}


class MapParseError(Exception):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"map line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Grid:
    """Immutable cell raster; ``cells[cy][cx]`` with cy=0 at the bottom."""

    cells: tuple[str, ...]
    cell_size: float = CELL_SIZE

    @property
    def width(self) -> int:
        return len(self.cells[0])

    @property
    def height(self) -> int:
        return len(self.cells)

    @property
    def width_m(self) -> float:
        return self.width * self.cell_size

    @property
    def height_m(self) -> float:
        return self.height * self.cell_size

    @classmethod
    def from_text(cls, text: str) -> "Grid":
        rows = [line.rstrip("\n") for line in text.splitlines() if line.strip() != ""]
        if not rows:
            raise MapParseError(1, "map has no rows")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MapParseError(i + 1, f"row width {len(row)} != {width}")
            for ch in row:
                cell = FREE if ch == " " else ch
                if cell not in _LEGEND:
                    raise MapParseError(i + 1, f"unknown map character {ch!r}")
        # text top row is max y; flip so cy grows upward
        cells = tuple(row.replace(" ", FREE) for row in reversed(rows))
        return cls(cells=cells)

    def cell(self, cx: int, cy: int) -> str:
        return self.cells[cy][cx]

    def in_bounds(self, cx: int, cy: int) -> bool:
        return 0 <= cx < self.width and 0 <= cy < self.height

    def cell_of_point(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(x / self.cell_size)), int(math.floor(y / self.cell_size))

    def cell_center(self, cx: int, cy: int) -> tuple[float, float]:
        return (cx + 0.5) * self.cell_size, (cy + 0.5) * self.cell_size

    def is_free_cell(self, cx: int, cy: int) -> bool:
        return self.in_bounds(cx, cy) and self.cell(cx, cy) == FREE

    def is_free_point(self, x: float, y: float) -> bool:
        cx, cy = self.cell_of_point(x, y)
        return self.is_free_cell(cx, cy)

    def blocked_cells(self) -> list[tuple[int, int]]:
        return [
            (cx, cy)
            for cy in range(self.height)
            for cx in range(self.width)
            if self.cell(cx, cy) != FREE
        ]

    def with_cell(self, cx: int, cy: int, value: str) -> "Grid":
        if value not in _LEGEND:
            raise ValueError(f"unknown cell value {value!r}")
        if not self.in_bounds(cx, cy):
            raise ValueError(f"cell ({cx}, {cy}) out of bounds")
        rows = list(self.cells)
        row = list(rows[cy])
        row[cx] = value
        rows[cy] = "".join(row)
        return Grid(cells=tuple(rows), cell_size=self.cell_size)

    def inflate(self, cells: int = 1) -> "Grid":
        """Mark every cell within Chebyshev distance ``cells`` of an
        occupied cell as occupied; used for clearance-aware planning."""
        rows = [list(row) for row in self.cells]
        for cx, cy in self.blocked_cells():
            for dy in range(-cells, cells + 1):
                for dx in range(-cells, cells + 1):
                    nx, ny = cx + dx, cy + dy
                    if self.in_bounds(nx, ny) and rows[ny][nx] == FREE:
                        rows[ny][nx] = WALL
        return Grid(cells=tuple("".join(r) for r in rows), cell_size=self.cell_size)

    def line_of_sight(
        self,
        p0: tuple[float, float],
        p1: tuple[float, float],
        blockers: frozenset[str] = frozenset({WALL, FURNITURE}),
    ) -> bool:
        """True when the open segment p0->p1 crosses no blocking cell.

        Endpoints' own cells are exempt so an object inside a furniture
        cell is still visible from the outside edge.
        """
        c0 = self.cell_of_point(*p0)
        c1 = self.cell_of_point(*p1)
        for cx, cy in self._cells_on_segment(p0, p1):
            if (cx, cy) in (c0, c1):
                continue
            if not self.in_bounds(cx, cy) or self.cell(cx, cy) in blockers:
                return False
        return True

    def _cells_on_segment(
        self, p0: tuple[float, float], p1: tuple[float, float]
    ) -> list[tuple[int, int]]:
        """All cells the segment passes through (conservative supercover)."""
        x0, y0 = p0
        x1, y1 = p1
        length = math.hypot(x1 - x0, y1 - y0)
        steps = max(1, int(math.ceil(length / (self.cell_size * 0.25))))
        seen: list[tuple[int, int]] = []
        last: tuple[int, int] | None = None
        for i in range(steps + 1):
            t = i / steps
            cell = self.cell_of_point(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)
            if cell != last:
                seen.append(cell)
                last = cell
        return seen

    def to_text(self) -> str:
        return "\n".join(reversed(self.cells))
