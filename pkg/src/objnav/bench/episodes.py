"""Episode sampling with distance-bin and category balancing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..agent import EpisodeSpec
from ..errors import EpisodeSpecError, InfeasibleBinsError
from ..geometry import Pose
from ..gridworld import CATEGORIES, Scene, category_distance_grid, nearest_goal_instance

DEFAULT_BINS = ((1.0, 5.0), (5.0, 10.0), (10.0, 15.0))
START_HEADINGS = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)


@dataclass
class EpisodeSet:
    episodes: list
    bins: tuple = DEFAULT_BINS
    category_balance: dict = field(default_factory=dict)

    def histogram(self) -> list:
        counts = [0] * len(self.bins)
        for ep in self.episodes:
            for k, (lo, hi) in enumerate(self.bins):
                if lo <= ep.shortest_path_length < hi:
                    counts[k] += 1
        return counts

    def dumps(self) -> str:
        head = {"bins": [list(b) for b in self.bins], "category_balance": self.category_balance}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(ep.to_dict(), sort_keys=True) for ep in self.episodes]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "EpisodeSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise EpisodeSpecError("empty episode file")
        try:
            head = json.loads(lines[0])
            episodes = [EpisodeSpec.from_dict(json.loads(ln)) for ln in lines[1:]]
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            raise EpisodeSpecError(f"malformed episode file: {exc}") from exc
        bins = tuple(tuple(float(v) for v in b) for b in head.get("bins", DEFAULT_BINS))
        return cls(episodes, bins, head.get("category_balance", {}))

    @classmethod
    def load(cls, path) -> "EpisodeSet":
        return cls.loads(Path(path).read_text())


def _split(n: int, k: int) -> list:
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


class _Sampler:
    def __init__(self, scene: Scene, clearance_cells: int, success_radius: float):
        self.scene = scene
        edt = ndimage.distance_transform_edt(scene.traversable)
        self.ok = scene.main_component & (edt > clearance_cells)
        self.success_radius = success_radius
        self._fields = {}

    def field(self, cat):
        if cat not in self._fields:
            self._fields[cat] = category_distance_grid(self.scene, cat)
        return self._fields[cat]

    def candidates(self, cat, lo, hi):
        f = self.field(cat)
        lo = max(lo, self.success_radius + 1e-9)
        return np.argwhere(self.ok & (f >= lo) & (f < hi))


def generate_episodes(scenes, n: int, bins=DEFAULT_BINS, seed: int = 0, *, categories=None,
                      max_steps: int = 500, max_collisions: int = 20, success_radius: float = 1.0,
                      clearance_cells: int = 3, max_tries: int = 50) -> EpisodeSet:
    """Sample ``n`` episodes whose shortest paths fill ``bins`` in equal shares.

    Scenes are used round-robin and categories rotate over those present in
    each scene, so both stay balanced. Starts are free cells at least
    ``clearance_cells`` from any obstacle, facing a multiple of 90 degrees.
    The recorded shortest path comes from nearest_goal_instance and must
    itself fall in the episode's bin.
    """
    scenes = list(scenes)
    if not scenes:
        raise ValueError("need at least one scene")
    if n < 0:
        raise ValueError("n must be >= 0")
    bins = tuple((float(lo), float(hi)) for lo, hi in bins)
    if not bins or any(not lo < hi for lo, hi in bins):
        raise ValueError(f"bad bins {bins}")
    cats = tuple(categories or CATEGORIES)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    samplers = {}
    targets = _split(n, len(bins))
    slots = [k for k, t in enumerate(targets) for _ in range(t)]
    cat_counts = {c: 0 for c in cats}
    episodes = []
    for idx, b in enumerate(slots):
        lo, hi = bins[b]
        spec = None
        for attempt in range(max_tries):
            scene = scenes[(idx + attempt) % len(scenes)]
            sampler = samplers.setdefault(scene.id, _Sampler(scene, clearance_cells, success_radius))
            present = [c for c in cats if scene.instances_of(c)]
            if not present:
                continue
            # least-used category first, catalogue order on ties
            order = sorted(present, key=lambda c: (cat_counts[c], cats.index(c)))
            for cat in order:
                cand = sampler.candidates(cat, lo, hi)
                if len(cand) == 0:
                    continue
                r, c = cand[int(rng.integers(len(cand)))]
                heading = START_HEADINGS[int(rng.integers(4))]
                x, y = scene.cell_center((int(r), int(c)))
                start = Pose(x, y, heading)
                _, dist = nearest_goal_instance(scene, start, cat)
                if not (lo <= dist < hi and dist > success_radius):
                    continue
                spec = EpisodeSpec(
                    episode_id=f"{scene.id}-ep{idx:05d}",
                    scene_id=scene.id,
                    start=start,
                    goal_category=cat,
                    seed=int(rng.integers(2**31)),
                    max_steps=max_steps,
                    max_collisions=max_collisions,
                    success_radius=success_radius,
                    shortest_path_length=round(float(dist), 9),
                )
                cat_counts[cat] += 1
                break
            if spec is not None:
                break
        if spec is None:
            raise InfeasibleBinsError(f"could not place an episode in bin [{lo}, {hi}) m after {max_tries} tries")
        episodes.append(spec)
    return EpisodeSet(episodes, bins, dict(cat_counts))
