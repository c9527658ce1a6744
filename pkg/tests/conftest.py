import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from objnav.agent import EpisodeResult  # noqa: E402
from objnav.bench.io import bundled_path  # noqa: E402
from objnav.gridworld import ObjectInstance, Scene, load_scene  # noqa: E402


def make_result(episode_id="ep", success=True, shortest=2.0, path=2.5, scene_id="s", goal="bed", **kw):
    fields = dict(
        episode_id=episode_id,
        scene_id=scene_id,
        goal_category=goal,
        seed=0,
        success=success,
        agent_path_length=path,
        shortest_path_length=shortest,
        steps=10,
        collisions=0,
        stop_called=success,
        terminal_distance_to_goal=0.5 if success else 3.0,
        failure_class="none" if success else "timeout",
    )
    fields.update(kw)
    return EpisodeResult(**fields)


def open_room(h=40, w=40, objects=(), cell_size=0.05, scene_id="room"):
    """Walled empty room; ``objects`` are (category, cells) pairs carved out of free space."""
    trav = np.zeros((h, w), bool)
    trav[1:-1, 1:-1] = True
    objs = []
    for k, (cat, cells) in enumerate(objects):
        cells = frozenset(cells)
        for cell in cells:
            trav[cell] = False
        objs.append(ObjectInstance(k, cat, cells))
    return Scene(scene_id, w, h, cell_size, trav, tuple(objs))


@pytest.fixture(scope="session")
def home1():
    return load_scene(bundled_path("home1.scene"))


@pytest.fixture(scope="session")
def corridor_scene():
    return load_scene(bundled_path("corridor.scene"))


def approx_equal(a, b, tol):
    return math.isclose(a, b, abs_tol=tol)


# curated door-blocking episode: denoise off fails, denoise on succeeds
DOOR_SEED = 32
DOOR_START = (10.5, 45.5)


@pytest.fixture(scope="session")
def doorblock_scene():
    return load_scene(bundled_path("doorblock.scene"))


def door_spec(seed=DOOR_SEED, max_steps=200):
    from objnav.agent import EpisodeSpec
    from objnav.geometry import Pose

    c, r = DOOR_START
    return EpisodeSpec(f"door-{seed:03d}", "doorblock", Pose(c * 0.05, r * 0.05, 0.0), "bed", seed,
                       max_steps=max_steps)
