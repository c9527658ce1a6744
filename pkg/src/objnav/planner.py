"""Fast-marching distance fields and greedy discrete-action selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import AtGoal, SourcesBlockedError, Stuck
from .geometry import Action

UNREACHABLE = math.inf
FORWARD_TOLERANCE = math.radians(15.0)

_NEIGHBORS8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Geodesic distance (meters) from ``sources`` over ``traversable``.

    ``offset`` is the (row, col) of this grid's cell (0, 0) inside the
    frame poses are expressed in, so windows cut from a larger map can be
    queried with poses in the full map frame. ``complete`` is False when the
    march stopped early; cells never accepted then read UNREACHABLE.
    """

    values: np.ndarray
    sources: np.ndarray
    traversable: np.ndarray
    cell_size: float
    offset: tuple[int, int] = (0, 0)
    complete: bool = True

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor(y / self.cell_size)) - self.offset[0],
            int(math.floor(x / self.cell_size)) - self.offset[1],
        )

    def value_at(self, cell) -> float:
        r, c = cell
        rows, cols = self.values.shape
        if 0 <= r < rows and 0 <= c < cols:
            return float(self.values[r, c])
        return UNREACHABLE

    def reachable(self) -> np.ndarray:
        return np.isfinite(self.values)


def dilate_obstacles(mask: np.ndarray, radius: int) -> np.ndarray:
    """Grow the obstacle set by a Chebyshev ``radius`` (square structuring element)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0 or not mask.any():
        return mask.copy()
    size = 2 * radius + 1
    return ndimage.maximum_filter(mask, size=size, mode="constant", cval=False)


def _as_cells(sources) -> np.ndarray:
    if isinstance(sources, np.ndarray) and sources.dtype == bool:
        return np.argwhere(sources)
    arr = np.asarray(sorted(sources) if isinstance(sources, (set, frozenset)) else sources, dtype=np.int64)
    return arr.reshape(-1, 2)


def distance_field(traversable, sources, cell_size: float, *, targets=None, first_target=False,
                   offset=(0, 0)) -> DistanceField:
    """Solve |grad T| = 1 with T = 0 on ``sources`` by first-order fast marching.

    ``sources`` is a boolean mask or an iterable of (row, col). Sources on
    blocked or out-of-grid cells are ignored; if none remain,
    SourcesBlockedError is raised. The grid border behaves as a wall.

    ``targets`` (boolean mask) enables early termination: by default the
    march stops once every reachable target is accepted; with
    ``first_target`` it stops once the front has passed the nearest target
    (exact ties included).
    """
    trav = np.ascontiguousarray(np.asarray(traversable, dtype=np.uint8))
    rows, cols = trav.shape
    cells = _as_cells(sources)
    if cells.size:
        inside = (cells[:, 0] >= 0) & (cells[:, 0] < rows) & (cells[:, 1] >= 0) & (cells[:, 1] < cols)
        cells = cells[inside]
    if cells.size == 0 or not trav[cells[:, 0], cells[:, 1]].any():
        raise SourcesBlockedError("no source lies on a traversable cell")
    if targets is None:
        tmask = np.zeros((rows, cols), np.uint8)
        mode = _kernels.FMM_FULL
    else:
        tmask = np.ascontiguousarray(np.asarray(targets, dtype=np.uint8))
        mode = _kernels.FMM_FIRST_TARGET if first_target else _kernels.FMM_ALL_TARGETS
    values = _kernels.fast_march(
        trav,
        np.ascontiguousarray(cells[:, 0]),
        np.ascontiguousarray(cells[:, 1]),
        float(cell_size),
        tmask,
        mode,
        1e-12 * cell_size,
    )
    return DistanceField(
        values=values,
        sources=cells,
        traversable=trav.astype(bool),
        cell_size=float(cell_size),
        offset=(int(offset[0]), int(offset[1])),
        complete=mode == _kernels.FMM_FULL,
    )


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def descent_waypoint(field: DistanceField, cell, lookahead: int = 1):
    """Follow steepest 8-neighbor descent from ``cell`` for ``lookahead`` steps.

    Raises Stuck if the first step finds no strictly smaller neighbor.
    """
    values = field.values
    rows, cols = values.shape
    r, c = cell
    current = values[r, c]
    for k in range(lookahead):
        best = current
        best_cell = None
        for dr, dc in _NEIGHBORS8:
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols and values[rr, cc] < best:
                best = values[rr, cc]
                best_cell = (rr, cc)
        if best_cell is None:
            if k == 0:
                raise Stuck(f"no descending neighbor at {cell}")
            break
        r, c = best_cell
        current = best
        if current == 0.0:
            break
    return r, c


def next_action(field: DistanceField, pose, lookahead: int = 1) -> Action:
    """Pick the discrete action that heads down the distance field.

    The waypoint is the steepest-descent 8-neighbor of the pose cell (or the
    cell ``lookahead`` descent steps away). Within 15 degrees of its bearing
    the agent moves forward, otherwise it turns toward it.
    """
    cell = field.cell_of(pose.x, pose.y)
    value = field.value_at(cell)
    if not math.isfinite(value):
        raise Stuck(f"pose cell {cell} is unreachable in the field")
    if value <= field.cell_size:
        raise AtGoal(f"pose cell {cell} is within one cell of the goal")
    wr, wc = descent_waypoint(field, cell, lookahead)
    h = field.cell_size
    wx = (wc + field.offset[1] + 0.5) * h
    wy = (wr + field.offset[0] + 0.5) * h
    bearing = math.atan2(wy - pose.y, wx - pose.x)
    diff = wrap_angle(bearing - pose.heading)
    if abs(diff) <= FORWARD_TOLERANCE + 1e-12:
        return Action.FORWARD
    return Action.TURN_LEFT if diff > 0 else Action.TURN_RIGHT
