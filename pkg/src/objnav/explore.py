"""Exploration-goal selection: frontiers, a category-prior policy, and a random baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import NoFrontierError, SourcesBlockedError
from .gridworld import CATEGORIES, DEFAULT_PLACEMENT_AFFINITY, ROOM_TYPES
from .planner import distance_field
from .semmap import EXPLORED, OBSTACLE, SemanticMap, goal_mask

DEFAULT_LAMBDA_M = 2.0
DEFAULT_BETA_PER_M = 0.05
DEFAULT_PRIOR_WEIGHT = 0.1
WINDOW_MARGIN = 8


@dataclass(frozen=True)
class Window:
    """Rectangular map crop ``[r0:r1, c0:c1]``."""

    r0: int
    r1: int
    c0: int
    c1: int

    @property
    def slices(self):
        return slice(self.r0, self.r1), slice(self.c0, self.c1)

    @property
    def offset(self) -> tuple[int, int]:
        return self.r0, self.c0

    def crop(self, grid: np.ndarray) -> np.ndarray:
        return grid[..., self.r0:self.r1, self.c0:self.c1]

    def local(self, cell) -> tuple[int, int]:
        return cell[0] - self.r0, cell[1] - self.c0

    def full(self, cell) -> tuple[int, int]:
        return int(cell[0]) + self.r0, int(cell[1]) + self.c0

    @classmethod
    def whole(cls, shape) -> "Window":
        return cls(0, shape[0], 0, shape[1])


def map_window(smap: SemanticMap, extra_cells=(), margin: int = WINDOW_MARGIN) -> Window:
    """Bounding box of explored space and ``extra_cells``, grown by ``margin``.

    Unknown space counts as traversable, so a ring of unknown cells around the
    explored box carries every detour a path could take outside it.
    """
    rows = np.flatnonzero(smap.channels[EXPLORED].any(axis=1))
    cols = np.flatnonzero(smap.channels[EXPLORED].any(axis=0))
    rs = [int(r) for r, _ in extra_cells] + [smap.current[0]]
    cs = [int(c) for _, c in extra_cells] + [smap.current[1]]
    if rows.size:
        rs += [int(rows[0]), int(rows[-1])]
        cs += [int(cols[0]), int(cols[-1])]
    M = smap.M
    return Window(max(0, min(rs) - margin), min(M, max(rs) + margin + 1),
                  max(0, min(cs) - margin), min(M, max(cs) + margin + 1))


def frontier_mask(explored: np.ndarray, obstacle: np.ndarray) -> np.ndarray:
    """Explored, obstacle-free cells with at least one unexplored 4-neighbor.

    Cells past the grid edge do not count as unexplored.
    """
    explored = np.asarray(explored, bool)
    unexplored = ~explored
    near = np.zeros_like(explored)
    near[1:, :] |= unexplored[:-1, :]
    near[:-1, :] |= unexplored[1:, :]
    near[:, 1:] |= unexplored[:, :-1]
    near[:, :-1] |= unexplored[:, 1:]
    return explored & ~np.asarray(obstacle, bool) & near


def frontier_cells(smap: SemanticMap) -> set:
    rc = np.argwhere(frontier_mask(smap.channels[EXPLORED], smap.channels[OBSTACLE]))
    return {(int(r), int(c)) for r, c in rc}


def _setup(smap, agent_cell, traversable, exclude, window, obstacle):
    window = window or Window.whole((smap.M, smap.M))
    obst = smap.channels[OBSTACLE] if obstacle is None else obstacle
    frontier = frontier_mask(window.crop(smap.channels[EXPLORED]), window.crop(obst))
    trav = ~window.crop(obst) if traversable is None else window.crop(np.asarray(traversable, bool))
    frontier &= trav
    if exclude is not None:
        frontier &= ~window.crop(exclude)
    if not frontier.any():
        raise NoFrontierError("no frontier cell left to explore")
    return window, frontier, trav, window.local(agent_cell)


def _agent_field(trav, agent, cell_size, targets=None, first_target=False):
    try:
        return distance_field(trav, [agent], cell_size, targets=targets, first_target=first_target).values
    except SourcesBlockedError:
        # the agent cell itself may sit in a dilated margin; plan from it anyway
        trav = trav.copy()
        trav[agent] = True
        return distance_field(trav, [agent], cell_size, targets=targets, first_target=first_target).values


def _first_argmin(values: np.ndarray, candidates: np.ndarray):
    vals = np.where(candidates, values, np.inf)
    k = int(np.argmin(vals))  # first occurrence is row-major
    if not np.isfinite(vals.flat[k]):
        return None
    return np.unravel_index(k, vals.shape)


def frontier_goal(smap: SemanticMap, agent_cell, *, traversable=None, exclude=None, window: Window | None = None,
                  obstacle=None) -> tuple[int, int]:
    """Frontier cell geodesically nearest to ``agent_cell``; ties go to the first in row-major order.

    ``traversable`` defaults to every non-obstacle cell (unknown is free).
    Raises NoFrontierError when no frontier cell is reachable.
    """
    window, frontier, trav, agent = _setup(smap, agent_cell, traversable, exclude, window, obstacle)
    values = _agent_field(trav, agent, smap.cell_size, targets=frontier, first_target=True)
    best = _first_argmin(values, frontier)
    if best is None:
        raise NoFrontierError("no reachable frontier cell")
    return window.full(best)


@dataclass(frozen=True, eq=False)
class CategoryPriors:
    """affinity[goal, observed] weights how strongly seeing ``observed`` hints at ``goal``."""

    affinity: np.ndarray
    lam: float = DEFAULT_LAMBDA_M
    beta: float = DEFAULT_BETA_PER_M
    categories: tuple = CATEGORIES

    def __post_init__(self):
        a = np.asarray(self.affinity, dtype=float)
        object.__setattr__(self, "affinity", a)
        n = len(self.categories)
        if a.shape != (n, n):
            raise ValueError(f"affinity must be {n}x{n}, got {a.shape}")
        if not np.isfinite(a).all() or (a < 0).any():
            raise ValueError("affinity entries must be finite and nonnegative")
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    @classmethod
    def from_config(cls, data: dict) -> "CategoryPriors":
        base = default_priors()
        aff = base.affinity.copy()
        table = data.get("affinity")
        if table is not None:
            aff = np.zeros_like(aff)
            for goal, row in table.items():
                for obs, w in (row or {}).items():
                    aff[CATEGORIES.index(goal), CATEGORIES.index(obs)] = float(w)
        return cls(aff, lam=float(data.get("lambda", base.lam)), beta=float(data.get("beta", base.beta)))

    def to_dict(self) -> dict:
        return {
            "affinity": {g: {o: float(self.affinity[i, j]) for j, o in enumerate(self.categories)}
                         for i, g in enumerate(self.categories)},
            "lambda": self.lam,
            "beta": self.beta,
        }


def default_priors(placement=DEFAULT_PLACEMENT_AFFINITY, weight: float = DEFAULT_PRIOR_WEIGHT) -> CategoryPriors:
    """Priors from room co-occurrence: cosine similarity of room-placement profiles.

    The diagonal is 1 before scaling by ``weight``. At weight 1 a single
    nearby cue outweighs 20 m of extra travel (beta = 0.05 per m), which sends
    the agent after weak cues; 0.1 keeps the cue worth about 2 m.
    """
    P = np.array([[placement.get(c, {}).get(room, 0.0) for room in ROOM_TYPES] for c in CATEGORIES])
    norms = np.linalg.norm(P, axis=1)
    norms[norms == 0] = 1.0
    Q = P / norms[:, None]
    aff = Q @ Q.T
    np.fill_diagonal(aff, 1.0)
    return CategoryPriors(np.round(aff * weight, 7))


def prior_goal(smap: SemanticMap, agent_cell, goal_index: int, priors: CategoryPriors, *, traversable=None,
               exclude=None, window: Window | None = None, obstacle=None) -> tuple[int, int]:
    """Frontier cell maximizing the category-prior score minus a geodesic cost.

    score(f) = sum_c affinity[goal, c] * exp(-d_c(f) / lambda) - beta * d_geo(agent, f),
    with d_c the Euclidean map distance to the nearest mapped cell of c.
    """
    window, frontier, trav, agent = _setup(smap, agent_cell, traversable, exclude, window, obstacle)
    h = smap.cell_size
    bonus = np.zeros(frontier.shape)
    for c in range(smap.C):
        w = priors.affinity[goal_index, c]
        if w == 0:
            continue
        mask = window.crop(goal_mask(smap, c))
        if not mask.any():
            continue
        d = ndimage.distance_transform_edt(~mask, sampling=h)
        bonus += w * np.exp(-d / priors.lam)
    if not bonus[frontier].any():
        # no informative evidence: the score reduces to -beta * d_geo
        values = _agent_field(trav, agent, h, targets=frontier, first_target=True)
        best = _first_argmin(values, frontier)
    else:
        values = _agent_field(trav, agent, h, targets=frontier)
        score = np.where(frontier & np.isfinite(values), bonus - priors.beta * values, -np.inf)
        k = int(np.argmax(score))
        best = np.unravel_index(k, score.shape) if np.isfinite(score.flat[k]) else None
    if best is None:
        raise NoFrontierError("no reachable frontier cell")
    return window.full(best)


class ExplorationPolicy:
    """Chooses a long-term goal cell while the target category is unmapped."""

    name = "base"
    resample_period = 1

    def select_goal(self, smap: SemanticMap, agent_cell, goal_index: int, **kw) -> tuple[int, int]:
        raise NotImplementedError

    def evidence(self, smap: SemanticMap, goal_index: int) -> int:
        """Summary of the map content the policy's choice depends on beyond geometry.

        A cached goal is re-selected early when this changes.
        """
        return 0


@dataclass
class FrontierPolicy(ExplorationPolicy):
    resample_period: int = 1
    name: str = "frontier"

    def select_goal(self, smap, agent_cell, goal_index, **kw):
        return frontier_goal(smap, agent_cell, **kw)


@dataclass
class PriorPolicy(ExplorationPolicy):
    priors: CategoryPriors = field(default_factory=default_priors)
    resample_period: int = 25
    name: str = "prior"

    def select_goal(self, smap, agent_cell, goal_index, **kw):
        return prior_goal(smap, agent_cell, goal_index, self.priors, **kw)

    def evidence(self, smap, goal_index):
        cues = [c for c in range(smap.C) if self.priors.affinity[goal_index, c] > 0]
        return int(sum(int(np.count_nonzero(goal_mask(smap, c))) for c in cues))


@dataclass
class RandomPolicy(ExplorationPolicy):
    """Uniformly random reachable frontier cell."""

    seed: int = 0
    resample_period: int = 25
    name: str = "random"

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def select_goal(self, smap, agent_cell, goal_index, *, traversable=None, exclude=None, window=None,
                    obstacle=None):
        window, frontier, trav, agent = _setup(smap, agent_cell, traversable, exclude, window, obstacle)
        values = _agent_field(trav, agent, smap.cell_size)
        cand = np.argwhere(frontier & np.isfinite(values))
        if cand.size == 0:
            raise NoFrontierError("no reachable frontier cell")
        return window.full(cand[int(self._rng.integers(len(cand)))])


def make_policy(name: str, priors: CategoryPriors | None = None, seed: int = 0) -> ExplorationPolicy:
    if name == "frontier":
        return FrontierPolicy()
    if name == "prior":
        return PriorPolicy(priors or default_priors())
    if name == "random":
        return RandomPolicy(seed=seed)
    raise ValueError(f"unknown policy {name!r}")


def goal_or_explore(smap: SemanticMap, agent_cell, goal_index: int, policy: ExplorationPolicy, **kw):
    """Mapped goal cells in exploit mode, else a single policy goal in explore mode."""
    mask = goal_mask(smap, goal_index)
    if mask.any():
        return {(int(r), int(c)) for r, c in np.argwhere(mask)}, "exploit"
    return {policy.select_goal(smap, agent_cell, goal_index, **kw)}, "explore"
