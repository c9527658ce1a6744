"""Ground-truth homes as 2D semantic occupancy grids.

Cells are addressed as ``(row, col)``; row grows with world y and col with
world x, so cell ``(r, c)`` covers ``x in [c*s, (c+1)*s)``, ``y in [r*s, (r+1)*s)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import (
    GenerationError,
    NoInstanceError,
    SceneInvariantError,
    SceneParseError,
    UnreachableError,
)
from .geometry import Pose
from .planner import distance_field

CATEGORIES = ("chair", "couch", "potted plant", "toilet", "tv", "bed")
ROOM_TYPES = ("living_room", "bedroom", "bathroom", "kitchen", "dining_room")
REFLECT_MODES = ("mirror", "beyond-range")
SCENE_FORMAT = 1


@dataclass(frozen=True)
class ObjectInstance:
    instance_id: int
    category: str
    cells: frozenset


@dataclass(frozen=True)
class ReflectiveSurface:
    cells: frozenset
    mode: str
    axis: tuple | None = None


@dataclass(frozen=True)
class Room:
    """Axis-aligned room interior, bounds inclusive: (r0, c0, r1, c1)."""

    type: str
    bounds: tuple

    def contains(self, cell) -> bool:
        r0, c0, r1, c1 = self.bounds
        return r0 <= cell[0] <= r1 and c0 <= cell[1] <= c1


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Scene:
    """An immutable home. ``traversable`` has shape (height, width)."""

    id: str
    width: int
    height: int
    cell_size: float
    traversable: np.ndarray
    objects: tuple = ()
    reflective: tuple = ()
    rooms: tuple = ()
    categories: tuple = CATEGORIES

    def __post_init__(self):
        trav = np.array(self.traversable, dtype=bool)
        object.__setattr__(self, "traversable", _readonly(trav))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "reflective", tuple(self.reflective))
        object.__setattr__(self, "rooms", tuple(self.rooms))
        self._validate()

    def _validate(self):
        if not (self.cell_size > 0):
            raise SceneInvariantError("cell_size", f"must be > 0, got {self.cell_size}")
        if self.width <= 0 or self.height <= 0:
            raise SceneInvariantError("dimensions", f"width and height must be > 0, got {self.width}x{self.height}")
        if self.traversable.shape != (self.height, self.width):
            raise SceneInvariantError(
                "dimensions", f"traversable grid is {self.traversable.shape}, expected {(self.height, self.width)}"
            )
        seen: dict[str, dict] = {}
        ids = set()
        for obj in self.objects:
            if obj.instance_id in ids:
                raise SceneInvariantError("object ids", f"duplicate instance id {obj.instance_id}")
            ids.add(obj.instance_id)
            if obj.category not in self.categories:
                raise SceneInvariantError("category set", f"unknown category {obj.category!r}")
            if not obj.cells:
                raise SceneInvariantError("object cells", f"instance {obj.instance_id} has no cells")
            owner = seen.setdefault(obj.category, {})
            for cell in obj.cells:
                if not self.in_bounds(cell):
                    raise SceneInvariantError(
                        "object in bounds", f"instance {obj.instance_id} cell {tuple(cell)} outside {self.height}x{self.width}"
                    )
                if cell in owner:
                    raise SceneInvariantError(
                        "same-category overlap",
                        f"instances {owner[cell]} and {obj.instance_id} ({obj.category}) share cell {tuple(cell)}",
                    )
                owner[cell] = obj.instance_id
                if self.traversable[cell]:
                    raise SceneInvariantError(
                        "object blocks", f"instance {obj.instance_id} cell {tuple(cell)} is marked traversable"
                    )
        for surf in self.reflective:
            if surf.mode not in REFLECT_MODES:
                raise SceneInvariantError("reflective mode", f"unknown mode {surf.mode!r}")
            for cell in surf.cells:
                if not self.in_bounds(cell):
                    raise SceneInvariantError("reflective in bounds", f"cell {tuple(cell)} outside grid")
            if surf.mode == "mirror":
                if surf.axis is None:
                    raise SceneInvariantError("mirror axis", "mirror surface needs an axis")
                (r0, c0), (r1, c1) = surf.axis
                if r0 != r1 and c0 != c1:
                    raise SceneInvariantError("mirror axis", "axis must be horizontal or vertical")
                axis_cells = {
                    (r, c)
                    for r in range(min(r0, r1), max(r0, r1) + 1)
                    for c in range(min(c0, c1), max(c0, c1) + 1)
                }
                if not axis_cells <= set(surf.cells):
                    raise SceneInvariantError("mirror axis", "axis does not lie on the surface cells")

    def in_bounds(self, cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            self.id == other.id
            and self.width == other.width
            and self.height == other.height
            and self.cell_size == other.cell_size
            and np.array_equal(self.traversable, other.traversable)
            and self.objects == other.objects
            and self.reflective == other.reflective
            and self.rooms == other.rooms
        )

    __hash__ = None

    @cached_property
    def blocked(self) -> np.ndarray:
        return _readonly(np.ascontiguousarray(~self.traversable).astype(np.uint8))

    @cached_property
    def instance_grid(self) -> np.ndarray:
        """Index into ``objects`` per cell, -1 where no object."""
        grid = np.full((self.height, self.width), -1, np.int32)
        for k, obj in enumerate(self.objects):
            rc = np.array(sorted(obj.cells), dtype=np.int64)
            grid[rc[:, 0], rc[:, 1]] = k
        return _readonly(grid)

    @cached_property
    def reflect_grid(self) -> np.ndarray:
        grid = np.zeros((self.height, self.width), np.int8)
        for surf in self.reflective:
            code = _kernels.REFLECT_MIRROR if surf.mode == "mirror" else _kernels.REFLECT_BEYOND
            rc = np.array(sorted(surf.cells), dtype=np.int64)
            grid[rc[:, 0], rc[:, 1]] = code
        return _readonly(grid)

    def category_mask(self, category: str) -> np.ndarray:
        mask = np.zeros((self.height, self.width), bool)
        for obj in self.objects:
            if obj.category == category:
                rc = np.array(sorted(obj.cells), dtype=np.int64)
                mask[rc[:, 0], rc[:, 1]] = True
        return mask

    def instances_of(self, category: str) -> list:
        return [o for o in self.objects if o.category == category]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(y / self.cell_size)), int(math.floor(x / self.cell_size))

    def cell_center(self, cell) -> tuple[float, float]:
        r, c = cell
        return (c + 0.5) * self.cell_size, (r + 0.5) * self.cell_size

    def is_valid_pose(self, pose: Pose) -> bool:
        cell = self.cell_of(pose.x, pose.y)
        return self.in_bounds(cell) and bool(self.traversable[cell])

    @cached_property
    def main_component(self) -> np.ndarray:
        """Largest 4-connected component of free space."""
        labels, n = ndimage.label(self.traversable)
        if n == 0:
            return np.zeros_like(self.traversable)
        sizes = np.bincount(labels.ravel())[1:]
        return _readonly(labels == (int(np.argmax(sizes)) + 1))

    def distance_to_category(self, x: float, y: float, category: str) -> float:
        """Euclidean distance (m) from a point to the nearest point of any cell of ``category``."""
        best = math.inf
        s = self.cell_size
        for obj in self.instances_of(category):
            rc = np.array(sorted(obj.cells), dtype=np.float64)
            x0 = rc[:, 1] * s
            y0 = rc[:, 0] * s
            dx = np.maximum(np.maximum(x0 - x, x - (x0 + s)), 0.0)
            dy = np.maximum(np.maximum(y0 - y, y - (y0 + s)), 0.0)
            best = min(best, float(np.sqrt(dx * dx + dy * dy).min()))
        return best


# --------------------------------------------------------------------------
# scene files


def _rle_row(row: np.ndarray) -> list:
    """Run lengths alternating free/blocked, starting with free."""
    runs = []
    current = False
    count = 0
    for blocked in (~row).tolist():
        if blocked == current:
            count += 1
        else:
            runs.append(count)
            current = blocked
            count = 1
    runs.append(count)
    return runs


def _compact(value) -> str:
    return json.dumps(value, separators=(", ", ": "), ensure_ascii=False)


def dumps_scene(scene: Scene) -> str:
    lines = ["{"]
    head = [
        ("format", SCENE_FORMAT),
        ("id", scene.id),
        ("width", scene.width),
        ("height", scene.height),
        ("cell_size", scene.cell_size),
    ]
    for key, value in head:
        lines.append(f'  "{key}": {_compact(value)},')

    def block(key, items, last=False):
        if not items:
            lines.append(f'  "{key}": []' + ("" if last else ","))
            return
        lines.append(f'  "{key}": [')
        for k, item in enumerate(items):
            lines.append("    " + _compact(item) + ("," if k < len(items) - 1 else ""))
        lines.append("  ]" + ("" if last else ","))

    block("obstacles", [_rle_row(row) for row in scene.traversable])
    block(
        "objects",
        [
            {"id": o.instance_id, "category": o.category, "cells": [list(c) for c in sorted(o.cells)]}
            for o in scene.objects
        ],
    )
    block(
        "reflective",
        [
            {
                "cells": [list(c) for c in sorted(s.cells)],
                "mode": s.mode,
                "axis": None if s.axis is None else [list(s.axis[0]), list(s.axis[1])],
            }
            for s in scene.reflective
        ],
    )
    block("rooms", [{"type": r.type, "bounds": list(r.bounds)} for r in scene.rooms], last=True)
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_scene(scene))


def _require(data: Mapping, key: str, types, where: str):
    if key not in data:
        raise SceneParseError(f"missing required field", field=f"{where}{key}")
    value = data[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise SceneParseError(f"expected {types}, got bool", field=f"{where}{key}")
    if not isinstance(value, types):
        raise SceneParseError(f"expected {types}, got {type(value).__name__}", field=f"{where}{key}")
    return value


def _parse_cells(raw, where: str) -> frozenset:
    if not isinstance(raw, list):
        raise SceneParseError("expected a list of [row, col] pairs", field=where)
    cells = []
    for k, item in enumerate(raw):
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in item)
        ):
            raise SceneParseError("expected [row, col] integers", field=f"{where}[{k}]")
        cells.append((item[0], item[1]))
    return frozenset(cells)


def loads_scene(text: str, categories=CATEGORIES) -> Scene:
    """Parse scene-file text. Raises SceneParseError / SceneInvariantError."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(exc.msg, line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise SceneParseError("top level must be an object", line=1)
    fmt = _require(data, "format", int, "")
    if fmt != SCENE_FORMAT:
        raise SceneParseError(f"unsupported format {fmt}", field="format")
    scene_id = _require(data, "id", str, "")
    width = _require(data, "width", int, "")
    height = _require(data, "height", int, "")
    cell_size = float(_require(data, "cell_size", (int, float), ""))
    if width <= 0 or height <= 0:
        raise SceneInvariantError("dimensions", f"width and height must be > 0, got {width}x{height}")
    rows = _require(data, "obstacles", list, "")
    if len(rows) != height:
        raise SceneParseError(f"expected {height} rows, got {len(rows)}", field="obstacles")
    trav = np.ones((height, width), bool)
    for r, runs in enumerate(rows):
        where = f"obstacles[{r}]"
        if not isinstance(runs, list) or not all(isinstance(v, int) and v >= 0 for v in runs):
            raise SceneParseError("expected a list of non-negative run lengths", field=where)
        if sum(runs) != width:
            raise SceneParseError(f"runs sum to {sum(runs)}, expected {width}", field=where)
        c = 0
        for k, n in enumerate(runs):
            if k % 2 == 1:
                trav[r, c : c + n] = False
            c += n
    objects = []
    for k, raw in enumerate(_require(data, "objects", list, "")):
        where = f"objects[{k}]."
        if not isinstance(raw, dict):
            raise SceneParseError("expected an object", field=f"objects[{k}]")
        objects.append(
            ObjectInstance(
                instance_id=_require(raw, "id", int, where),
                category=_require(raw, "category", str, where),
                cells=_parse_cells(_require(raw, "cells", list, where), f"{where}cells"),
            )
        )
    reflective = []
    for k, raw in enumerate(data.get("reflective", [])):
        where = f"reflective[{k}]."
        if not isinstance(raw, dict):
            raise SceneParseError("expected an object", field=f"reflective[{k}]")
        axis_raw = raw.get("axis")
        axis = None
        if axis_raw is not None:
            pts = sorted(_parse_cells(axis_raw, f"{where}axis")) if len(axis_raw) == 2 else None
            if pts is None or len(axis_raw) != 2:
                raise SceneParseError("expected two [row, col] endpoints", field=f"{where}axis")
            axis = (tuple(axis_raw[0]), tuple(axis_raw[1]))
        reflective.append(
            ReflectiveSurface(
                cells=_parse_cells(_require(raw, "cells", list, where), f"{where}cells"),
                mode=_require(raw, "mode", str, where),
                axis=axis,
            )
        )
    rooms = []
    for k, raw in enumerate(data.get("rooms", [])):
        where = f"rooms[{k}]."
        bounds = _require(raw, "bounds", list, where)
        if len(bounds) != 4:
            raise SceneParseError("expected [r0, c0, r1, c1]", field=f"{where}bounds")
        rooms.append(Room(type=_require(raw, "type", str, where), bounds=tuple(bounds)))
    return Scene(
        id=scene_id,
        width=width,
        height=height,
        cell_size=cell_size,
        traversable=trav,
        objects=tuple(objects),
        reflective=tuple(reflective),
        rooms=tuple(rooms),
        categories=tuple(categories),
    )


def load_scene(text_or_path, categories=CATEGORIES) -> Scene:
    """Load a scene from file content, or from a path when given a ``Path``."""
    if hasattr(text_or_path, "read_text"):
        text_or_path = text_or_path.read_text(encoding="utf-8")
    return loads_scene(text_or_path, categories)


# --------------------------------------------------------------------------
# geodesic queries


def nearest_goal_instance(scene: Scene, start: Pose, category: str):
    """Closest instance of ``category`` from ``start`` over ground-truth free space.

    Returns ``(instance, geodesic_distance_m)``; the distance is the fast
    marching value at the first instance cell reached.
    """
    instances = scene.instances_of(category)
    if not instances:
        raise NoInstanceError(f"scene {scene.id!r} has no {category!r}")
    goal_mask = scene.category_mask(category)
    field = distance_field(scene.traversable | goal_mask, [scene.cell_of(start.x, start.y)], scene.cell_size)
    best = None
    best_d = math.inf
    for obj in sorted(instances, key=lambda o: o.instance_id):
        rc = np.array(sorted(obj.cells), dtype=np.int64)
        d = float(field.values[rc[:, 0], rc[:, 1]].min())
        if d < best_d:
            best, best_d = obj, d
    if best is None:
        raise UnreachableError(f"no {category!r} instance reachable from {start}")
    return best, best_d


def category_distance_grid(scene: Scene, category: str) -> np.ndarray:
    """Geodesic distance (m) from every free cell to the nearest ``category`` instance."""
    goal_mask = scene.category_mask(category)
    if not goal_mask.any():
        raise NoInstanceError(f"scene {scene.id!r} has no {category!r}")
    return distance_field(scene.traversable | goal_mask, goal_mask, scene.cell_size).values


# --------------------------------------------------------------------------
# procedural homes

# (long side, short side) in meters; True when the object backs onto a wall
OBJECT_FOOTPRINTS = {
    "bed": ((2.0, 1.5), True),
    "couch": ((1.8, 0.8), True),
    "toilet": ((0.7, 0.45), True),
    "tv": ((1.0, 0.15), True),
    "chair": ((0.5, 0.5), False),
    "potted plant": ((0.4, 0.4), False),
}

DEFAULT_PLACEMENT_AFFINITY = {
    "bed": {"bedroom": 1.0},
    "toilet": {"bathroom": 1.0},
    "couch": {"living_room": 1.0},
    "tv": {"living_room": 0.6, "bedroom": 0.4},
    "chair": {"kitchen": 0.4, "dining_room": 0.4, "living_room": 0.1, "bedroom": 0.1},
    "potted plant": {"living_room": 0.4, "bathroom": 0.2, "kitchen": 0.2, "dining_room": 0.2},
}

# Pairs of categories that share a room type and nothing else, so seeing one
# says where the other is.
CORRELATED_PLACEMENT_AFFINITY = {
    "bed": {"bedroom": 1.0},
    "tv": {"bedroom": 1.0},
    "couch": {"living_room": 1.0},
    "chair": {"living_room": 1.0},
    "toilet": {"bathroom": 1.0},
    "potted plant": {"bathroom": 1.0},
}

PLACEMENT_PRESETS = {"default": DEFAULT_PLACEMENT_AFFINITY, "correlated": CORRELATED_PLACEMENT_AFFINITY}

DEFAULT_INSTANCE_COUNTS = {
    "bed": (1, 2),
    "toilet": (1, 1),
    "couch": (1, 1),
    "tv": (1, 2),
    "chair": (1, 3),
    "potted plant": (1, 2),
}


@dataclass(frozen=True)
class HomeParams:
    width_m: tuple = (9.0, 12.0)
    height_m: tuple = (8.0, 11.0)
    room_count: tuple = (4, 6)
    min_room_m: float = 2.6
    door_width_m: tuple = (0.8, 1.0)
    door_keepout_m: float = 0.6
    clearance_m: float = 0.4
    cell_size: float = 0.05
    placement_affinity: Mapping = field(default_factory=lambda: DEFAULT_PLACEMENT_AFFINITY)
    instance_counts: Mapping = field(default_factory=lambda: DEFAULT_INSTANCE_COUNTS)
    tv_reflective_prob: float = 0.5
    mirror_prob: float = 0.3
    mirror_length_m: float = 0.8
    max_attempts: int = 25
    placement_tries: int = 60

    def validate(self):
        lo, hi = self.room_count
        if not (1 <= lo <= hi):
            raise ValueError(f"bad room_count {self.room_count}")
        for name in ("width_m", "height_m", "door_width_m"):
            a, b = getattr(self, name)
            if not (0 < a <= b):
                raise ValueError(f"bad {name} {(a, b)}")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        for cat, weights in self.placement_affinity.items():
            if cat not in CATEGORIES:
                raise ValueError(f"unknown category {cat!r} in placement_affinity")
            for room, w in weights.items():
                if room not in ROOM_TYPES or w < 0:
                    raise ValueError(f"bad affinity {cat}->{room}={w}")


def _cells(meters: float, s: float) -> int:
    return max(1, int(round(meters / s)))


class _HomeBuilder:
    def __init__(self, rng: np.random.Generator, params: HomeParams):
        self.rng = rng
        self.p = params
        s = params.cell_size
        self.W = _cells(rng.uniform(*params.width_m), s)
        self.H = _cells(rng.uniform(*params.height_m), s)
        self.trav = np.zeros((self.H, self.W), bool)
        self.trav[1:-1, 1:-1] = True
        self.walls = []  # (orientation, index, lo, hi)
        self.doors = []

    def split_rooms(self):
        p = self.p
        s = p.cell_size
        min_room = _cells(p.min_room_m, s)
        target = int(self.rng.integers(p.room_count[0], p.room_count[1] + 1))
        leaves = [(1, 1, self.H - 2, self.W - 2)]
        while len(leaves) < target:
            options = []
            for k, (r0, c0, r1, c1) in enumerate(leaves):
                h = r1 - r0 + 1
                w = c1 - c0 + 1
                if h >= 2 * min_room + 1 or w >= 2 * min_room + 1:
                    options.append((k, h * w))
            if not options:
                raise GenerationError(f"cannot fit {target} rooms in {self.W}x{self.H} cells")
            areas = np.array([a for _, a in options], dtype=float)
            k = options[int(self.rng.choice(len(options), p=areas / areas.sum()))][0]
            r0, c0, r1, c1 = leaves.pop(k)
            h = r1 - r0 + 1
            w = c1 - c0 + 1
            horizontal = h >= 2 * min_room + 1 and (h >= w or w < 2 * min_room + 1)
            if horizontal:
                wall = int(self.rng.integers(r0 + min_room, r1 - min_room + 1))
                self.trav[wall, c0 : c1 + 1] = False
                self.walls.append(("h", wall, c0, c1))
                leaves[k:k] = [(r0, c0, wall - 1, c1), (wall + 1, c0, r1, c1)]
            else:
                wall = int(self.rng.integers(c0 + min_room, c1 - min_room + 1))
                self.trav[r0 : r1 + 1, wall] = False
                self.walls.append(("v", wall, r0, r1))
                leaves[k:k] = [(r0, c0, r1, wall - 1), (r0, wall + 1, r1, c1)]
        self.leaves = leaves

    def carve_doors(self):
        s = self.p.cell_size
        for orient, idx, lo, hi in self.walls:
            dw = _cells(self.rng.uniform(*self.p.door_width_m), s)
            starts = []
            for start in range(lo + 1, hi - dw + 1):
                span = slice(start - 1, start + dw + 1)
                if orient == "h":
                    ok = (
                        not self.trav[idx, start : start + dw].any()
                        and self.trav[idx - 1, span].all()
                        and self.trav[idx + 1, span].all()
                    )
                else:
                    ok = (
                        not self.trav[start : start + dw, idx].any()
                        and self.trav[span, idx - 1].all()
                        and self.trav[span, idx + 1].all()
                    )
                if ok:
                    starts.append(start)
            if not starts:
                raise GenerationError("no room for a doorway")
            start = starts[int(self.rng.integers(len(starts)))]
            if orient == "h":
                self.trav[idx, start : start + dw] = True
                self.doors.append([(idx, c) for c in range(start, start + dw)])
            else:
                self.trav[start : start + dw, idx] = True
                self.doors.append([(r, idx) for r in range(start, start + dw)])

    def assign_rooms(self):
        n = len(self.leaves)
        order = sorted(range(n), key=lambda k: -self._area(self.leaves[k]))
        types = ["living_room", "bedroom", "kitchen", "bathroom"][:n]
        extra = ["bedroom", "dining_room", "bathroom"]
        while len(types) < n:
            types.append(extra[int(self.rng.integers(len(extra)))])
        # living room largest, a bathroom smallest, the rest shuffled
        middle = types[1:-1] if n > 2 else []
        self.rng.shuffle(middle)
        if n == 1:
            ordered = types
        else:
            ordered = [types[0]] + middle + [types[-1]]
        self.rooms = [None] * n
        for k, t in zip(order, ordered):
            self.rooms[k] = Room(type=t, bounds=self.leaves[k])

    @staticmethod
    def _area(b):
        return (b[2] - b[0] + 1) * (b[3] - b[1] + 1)

    def place_objects(self):
        p = self.p
        s = p.cell_size
        keep = np.zeros_like(self.trav)
        k_out = _cells(p.door_keepout_m, s)
        for door in self.doors:
            for r, c in door:
                keep[max(0, r - k_out) : r + k_out + 1, max(0, c - k_out) : c + k_out + 1] = True
        self.keepout = keep
        self.occupied = np.zeros_like(self.trav)
        objects = []
        next_id = 0
        for cat in CATEGORIES:
            weights = p.placement_affinity.get(cat, {})
            candidates = [k for k, room in enumerate(self.rooms) if weights.get(room.type, 0.0) > 0]
            if not candidates:
                continue
            lo, hi = p.instance_counts.get(cat, (1, 1))
            count = int(self.rng.integers(lo, hi + 1))
            w = np.array([weights[self.rooms[k].type] for k in candidates], dtype=float)
            for _ in range(count):
                order = list(self.rng.choice(len(candidates), size=len(candidates), replace=False, p=w / w.sum()))
                for j in order:
                    cells = self._try_place(cat, self.rooms[candidates[j]])
                    if cells is not None:
                        objects.append(ObjectInstance(next_id, cat, frozenset(cells)))
                        next_id += 1
                        break
        self.objects = objects

    def _try_place(self, cat, room):
        p = self.p
        s = p.cell_size
        (long_m, short_m), on_wall = OBJECT_FOOTPRINTS[cat]
        L = _cells(long_m, s)
        S = _cells(short_m, s)
        clr = _cells(p.clearance_m, s)
        r0, c0, r1, c1 = room.bounds
        for _ in range(p.placement_tries):
            if on_wall:
                side = int(self.rng.integers(4))
                if side in (0, 1):  # against the bottom/top wall, long side along x
                    h, w = S, L
                    if w > c1 - c0 + 1 or h > r1 - r0 + 1:
                        continue
                    top = r0 if side == 0 else r1 - h + 1
                    left = int(self.rng.integers(c0, c1 - w + 2))
                else:
                    h, w = L, S
                    if w > c1 - c0 + 1 or h > r1 - r0 + 1:
                        continue
                    left = c0 if side == 2 else c1 - w + 1
                    top = int(self.rng.integers(r0, r1 - h + 2))
            else:
                h, w = S, L
                if w > c1 - c0 + 1 or h > r1 - r0 + 1:
                    continue
                top = int(self.rng.integers(r0, r1 - h + 2))
                left = int(self.rng.integers(c0, c1 - w + 2))
            bottom, right = top + h - 1, left + w - 1
            # each gap to a room wall is either flush or at least the clearance
            gaps = (top - r0, r1 - bottom, left - c0, c1 - right)
            if any(0 < g < clr for g in gaps):
                continue
            er0, ec0 = max(r0, top - clr), max(c0, left - clr)
            er1, ec1 = min(r1, bottom + clr), min(c1, right + clr)
            if self.occupied[er0 : er1 + 1, ec0 : ec1 + 1].any():
                continue
            if self.keepout[top : bottom + 1, left : right + 1].any():
                continue
            if not self.trav[top : bottom + 1, left : right + 1].all():
                continue
            trial = self.trav.copy()
            trial[top : bottom + 1, left : right + 1] = False
            _, n = ndimage.label(trial)
            if n != 1:
                continue
            self.trav = trial
            self.occupied[top : bottom + 1, left : right + 1] = True
            return [(r, c) for r in range(top, bottom + 1) for c in range(left, right + 1)]
        return None

    def add_reflective(self):
        p = self.p
        s = p.cell_size
        surfaces = []
        for obj in self.objects:
            if obj.category == "tv" and self.rng.random() < p.tv_reflective_prob:
                surfaces.append(ReflectiveSurface(cells=obj.cells, mode="beyond-range"))
        length = _cells(p.mirror_length_m, s)
        for room in self.rooms:
            if room.type not in ("bathroom", "bedroom") or self.rng.random() >= p.mirror_prob:
                continue
            r0, c0, r1, c1 = room.bounds
            options = []
            for r, inner in ((r0 - 1, r0), (r1 + 1, r1)):
                for start in range(c0, c1 - length + 2):
                    seg = [(r, c) for c in range(start, start + length)]
                    if all(not self.trav[cell] for cell in seg) and self.trav[inner, start : start + length].all():
                        options.append(seg)
            for c, inner in ((c0 - 1, c0), (c1 + 1, c1)):
                for start in range(r0, r1 - length + 2):
                    seg = [(r, c) for r in range(start, start + length)]
                    if all(not self.trav[cell] for cell in seg) and self.trav[start : start + length, inner].all():
                        options.append(seg)
            if options:
                seg = options[int(self.rng.integers(len(options)))]
                surfaces.append(ReflectiveSurface(cells=frozenset(seg), mode="mirror", axis=(seg[0], seg[-1])))
        self.reflective = surfaces


def _home_rng(seed: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), attempt]))


def generate_home(seed: int, params: HomeParams | None = None, scene_id: str | None = None) -> Scene:
    """Procedural home; a pure function of ``(seed, params)``.

    Rooms come from a binary space partition with one doorway per partition
    wall, so free space is connected by construction; objects are dropped
    into rooms with probability proportional to their placement affinity and
    rejected if they would disconnect free space.
    """
    params = params or HomeParams()
    params.validate()
    last_error = None
    for attempt in range(params.max_attempts):
        rng = _home_rng(seed, attempt)
        try:
            b = _HomeBuilder(rng, params)
            b.split_rooms()
            b.carve_doors()
            b.assign_rooms()
            b.place_objects()
            b.add_reflective()
        except GenerationError as exc:
            last_error = exc
            continue
        return Scene(
            id=scene_id or f"home-{int(seed) & (2**64 - 1)}",
            width=b.W,
            height=b.H,
            cell_size=params.cell_size,
            traversable=b.trav,
            objects=tuple(b.objects),
            reflective=tuple(b.reflective),
            rooms=tuple(b.rooms),
        )
    raise GenerationError(f"gave up after {params.max_attempts} attempts: {last_error}")
