"""The agent's binary semantic map and its update from ray observations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import MapDimensionError, OutOfMapError
from .geometry import Pose
from .gridworld import CATEGORIES

OBSTACLE = 0
EXPLORED = 1
CURRENT = 2
PAST = 3
N_BASE_CHANNELS = 4

DEFAULT_MAP_SIZE = 481
DEFAULT_CELL_SIZE = 0.05

# pushes a ray endpoint off the cell boundary into the surface it hit
_HIT_EPS = 1e-6


def category_channel(index: int) -> int:
    return N_BASE_CHANNELS + index


@dataclass(frozen=True)
class DenoiseParams:
    obstacle_confirm: int = 2
    opening_radius: int = 1

    def __post_init__(self):
        if self.obstacle_confirm < 1:
            raise ValueError("obstacle_confirm must be >= 1")
        if self.opening_radius < 0:
            raise ValueError("opening_radius must be >= 0")


class SemanticMap:
    """Binary (C + 4) x M x M map in an egocentric frame fixed at episode start.

    The start pose maps to the center of the center cell with the start
    heading pointing along +col ("east"). Map rows grow with map y, columns
    with map x, as in the scene grid.
    """

    def __init__(self, n_categories: int = len(CATEGORIES), size: int = DEFAULT_MAP_SIZE,
                 cell_size: float = DEFAULT_CELL_SIZE, obstacle_confirm: int = 1,
                 origin: Pose | None = None):
        if n_categories < 1:
            raise MapDimensionError(f"need at least one category, got {n_categories}")
        if size < 3 or size % 2 == 0:
            raise MapDimensionError(f"map size must be odd and >= 3, got {size}")
        if cell_size <= 0:
            raise MapDimensionError("cell_size must be > 0")
        if obstacle_confirm < 1:
            raise ValueError("obstacle_confirm must be >= 1")
        self.C = int(n_categories)
        self.M = int(size)
        self.cell_size = float(cell_size)
        self.obstacle_confirm = int(obstacle_confirm)
        self.origin = origin if origin is not None else Pose(0.0, 0.0, 0.0)
        self.channels = np.zeros((self.C + N_BASE_CHANNELS, self.M, self.M), dtype=bool)
        self.obstacle_evidence = np.zeros((self.M, self.M), dtype=np.int32)
        self.center = (self.M // 2, self.M // 2)
        self.channels[CURRENT][self.center] = True
        self.current = self.center

    @property
    def K(self) -> int:
        return self.channels.shape[0]

    @property
    def obstacle(self) -> np.ndarray:
        return self.channels[OBSTACLE]

    @property
    def explored(self) -> np.ndarray:
        return self.channels[EXPLORED]

    def category(self, index: int) -> np.ndarray:
        return self.channels[category_channel(index)]

    def copy(self) -> "SemanticMap":
        other = SemanticMap.__new__(SemanticMap)
        other.__dict__.update(self.__dict__)
        other.channels = self.channels.copy()
        other.obstacle_evidence = self.obstacle_evidence.copy()
        return other

    def __eq__(self, other):
        if not isinstance(other, SemanticMap):
            return NotImplemented
        return (
            self.M == other.M
            and self.C == other.C
            and self.cell_size == other.cell_size
            and self.origin == other.origin
            and self.current == other.current
            and np.array_equal(self.channels, other.channels)
            and np.array_equal(self.obstacle_evidence, other.obstacle_evidence)
        )

    __hash__ = None

    # frame conversions -------------------------------------------------

    def world_to_map(self, x: float, y: float) -> tuple[float, float]:
        """World meters to continuous map coordinates (col, row) in cell units."""
        o = self.origin
        dx, dy = x - o.x, y - o.y
        c, s = math.cos(o.heading), math.sin(o.heading)
        mx = c * dx + s * dy
        my = -s * dx + c * dy
        half = self.M // 2 + 0.5
        return half + mx / self.cell_size, half + my / self.cell_size

    def map_pose(self, pose: Pose) -> Pose:
        """A world pose expressed in map meters (origin at the map's cell (0, 0) corner)."""
        mx, my = self.world_to_map(pose.x, pose.y)
        return Pose(mx * self.cell_size, my * self.cell_size, pose.heading - self.origin.heading)

    def cell_of(self, pose: Pose) -> tuple[int, int]:
        mx, my = self.world_to_map(pose.x, pose.y)
        return int(math.floor(my)), int(math.floor(mx))

    def in_bounds(self, cell) -> bool:
        r, c = cell
        return 0 <= r < self.M and 0 <= c < self.M


def new_map(C: int = len(CATEGORIES), M: int = DEFAULT_MAP_SIZE, cell_size: float = DEFAULT_CELL_SIZE,
            obstacle_confirm: int = 1, origin: Pose | None = None) -> SemanticMap:
    """All-zero map except the agent at the center cell."""
    return SemanticMap(C, M, cell_size, obstacle_confirm, origin)


def integrate(smap: SemanticMap, obs, max_range: float = 4.0, angles: np.ndarray | None = None,
              footprint_radius: int = 0) -> SemanticMap:
    """Fold one observation into ``smap`` in place and return it.

    ``angles`` are the world bearings of the rays; by default they are
    rebuilt from a 42 degree fan around the pose heading with as many rays
    as the observation holds. Rays with SENTINEL_FAR depth clear space up to
    ``max_range`` and register no surface. ``footprint_radius`` (cells) marks
    a disk around the agent explored, standing in for the body the robot
    occupies and has just swept through.
    """
    pose = obs.pose
    cell = smap.cell_of(pose)
    if not smap.in_bounds(cell):
        raise OutOfMapError(f"pose {pose} maps to {cell}, outside the {smap.M}x{smap.M} map")
    depth = np.asarray(obs.depth, dtype=float)
    category = np.asarray(obs.category)
    n = depth.shape[0]
    if angles is None:
        hfov = math.radians(42.0)
        angles = pose.heading - hfov / 2 + np.arange(n) * (hfov / (n - 1))
    rel = np.asarray(angles, dtype=float) - smap.origin.heading
    finite = np.isfinite(depth)
    reach = np.where(finite, depth + _HIT_EPS, max_range) / smap.cell_size
    x0, y0 = smap.world_to_map(pose.x, pose.y)
    x1 = x0 + reach * np.cos(rel)
    y1 = y0 + reach * np.sin(rel)
    explored = smap.channels[EXPLORED]
    hit_r, hit_c = _kernels.walk_rays(explored, x0, y0, x1, y1, finite.astype(np.uint8))
    valid = hit_r >= 0
    if valid.any():
        # evidence counts frames, so each cell gains at most one per call
        flat = np.unique(hit_r[valid] * smap.M + hit_c[valid])
        rr, cc = np.divmod(flat, smap.M)
        smap.obstacle_evidence[rr, cc] += 1
        confirmed = smap.obstacle_evidence[rr, cc] >= smap.obstacle_confirm
        smap.channels[OBSTACLE][rr[confirmed], cc[confirmed]] = True
        labelled = valid & (category >= 0)
        if labelled.any():
            ch = N_BASE_CHANNELS + category[labelled].astype(np.int64)
            smap.channels[ch, hit_r[labelled], hit_c[labelled]] = True
    if footprint_radius > 0:
        _mark_disk(smap.channels[EXPLORED], cell, footprint_radius)
    _move_agent(smap, cell)
    return smap


def _mark_disk(grid: np.ndarray, cell, radius: int) -> None:
    r, c = cell
    M = grid.shape[0]
    r0, r1 = max(0, r - radius), min(M, r + radius + 1)
    c0, c1 = max(0, c - radius), min(M, c + radius + 1)
    rr, cc = np.ogrid[r0:r1, c0:c1]
    grid[r0:r1, c0:c1] |= (rr - r) ** 2 + (cc - c) ** 2 <= radius * radius


def _move_agent(smap: SemanticMap, cell) -> None:
    old = smap.current
    smap.channels[CURRENT][old] = False
    smap.channels[PAST][old] = True
    smap.channels[EXPLORED][old] = True
    smap.channels[CURRENT][cell] = True
    smap.channels[EXPLORED][cell] = True
    smap.current = (int(cell[0]), int(cell[1]))


def line_opening(mask: np.ndarray, radius: int) -> np.ndarray:
    """Union of openings by horizontal, vertical and both diagonal lines of length 2r+1.

    Unlike a square opening this keeps one-cell-thick walls, while still
    removing blobs that are short in every direction.
    """
    mask = np.asarray(mask, dtype=bool)
    if radius == 0 or not mask.any():
        return mask.copy()
    k = 2 * radius + 1
    elements = (
        np.ones((1, k), bool),
        np.ones((k, 1), bool),
        np.eye(k, dtype=bool),
        np.fliplr(np.eye(k, dtype=bool)),
    )
    out = np.zeros_like(mask)
    for se in elements:
        out |= ndimage.binary_opening(mask, structure=se)
    return out


def denoised_obstacles(obstacle_evidence: np.ndarray, params: DenoiseParams) -> np.ndarray:
    confirmed = obstacle_evidence >= params.obstacle_confirm
    return line_opening(confirmed, params.opening_radius)


def denoise(smap: SemanticMap, params: DenoiseParams = DenoiseParams()) -> SemanticMap:
    """Return a copy whose obstacle channel keeps only confirmed, opened cells."""
    out = smap.copy()
    out.channels[OBSTACLE] = denoised_obstacles(smap.obstacle_evidence, params)
    return out


def goal_mask(smap: SemanticMap, category_index: int) -> np.ndarray:
    return smap.channels[category_channel(category_index)]


def goal_cells(smap: SemanticMap, category_index: int) -> set:
    rc = np.argwhere(goal_mask(smap, category_index))
    return {(int(r), int(c)) for r, c in rc}
