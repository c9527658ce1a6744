import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import open_room
from oracles import march_ray
from objnav.geometry import Action, Pose
from objnav.gridworld import CATEGORIES, ReflectiveSurface, Scene
from objnav.sensors import (
    NO_CATEGORY,
    REALLIKE,
    SENTINEL_FAR,
    SIMLIKE,
    ZERO_NOISE,
    CameraModel,
    NoiseProfile,
    SensorStreams,
    apply_action,
    confusion_matrix,
    observe,
    segmentation_quality,
)

H = 0.05
CENTER = slice(28, 36)


def _with_reflections(scene, surfaces):
    return Scene(scene.id, scene.width, scene.height, scene.cell_size, scene.traversable,
                 scene.objects, tuple(surfaces))


def test_camera_validation_and_bearings():
    for bad in (dict(hfov_deg=0), dict(hfov_deg=180), dict(n_rays=1), dict(max_range=0)):
        with pytest.raises(ValueError):
            CameraModel(**bad)
    cam = CameraModel()
    b = cam.bearing_offsets()
    assert len(b) == 64
    hfov = math.radians(42)
    assert b[0] == pytest.approx(-hfov / 2)
    assert b[-1] == pytest.approx(hfov / 2)
    assert b[10] == pytest.approx(-hfov / 2 + 10 * hfov / 63)


def test_wall_two_meters_ahead():
    scene = open_room(h=40, w=100)
    # the east wall's inner face is at x = 99 * 0.05
    obs = observe(scene, Pose(99 * H - 2.0, 20 * H, 0.0))
    assert np.all(np.abs(obs.depth[CENTER] - 2.0) <= H / 2)
    assert np.all(obs.category == NO_CATEGORY)


def test_wall_beyond_range_is_sentinel():
    scene = open_room(h=200, w=140)
    obs = observe(scene, Pose(139 * H - 5.0, 100 * H, 0.0))
    assert np.all(obs.depth == SENTINEL_FAR)


def test_beyond_range_tv_never_reported():
    tv = [(r, 98) for r in range(10, 30)]
    scene = open_room(h=40, w=100, objects=[("tv", tv)])
    scene = _with_reflections(scene, [ReflectiveSurface(frozenset(tv), "beyond-range")])
    pose = Pose(98 * H - 2.0, 20 * H, 0.0)
    plain = observe(scene, pose)
    assert (plain.category[CENTER] == CATEGORIES.index("tv")).all()
    assert np.all(np.abs(plain.depth[CENTER] - 2.0) <= H / 2)
    shiny = observe(scene, pose, noise=NoiseProfile(reflections_enabled=True))
    assert np.all(shiny.depth[CENTER] == SENTINEL_FAR)
    assert np.all(shiny.category[CENTER] == NO_CATEGORY)


def test_mirror_continues_the_reflected_ray():
    cells = frozenset((r, 59) for r in range(5, 35))
    scene = _with_reflections(open_room(h=40, w=60), [ReflectiveSurface(cells, "mirror", ((5, 59), (34, 59)))])
    pose = Pose(2.0, 20 * H, 0.0)
    direct = observe(scene, pose)
    assert np.all(np.abs(direct.depth[CENTER] - 0.95) <= H / 2)
    mirrored = observe(scene, pose, noise=NoiseProfile(reflections_enabled=True))
    # out to the mirror at x = 2.95, back to the west wall face at x = 0.05
    assert np.all(np.abs(mirrored.depth[CENTER] - (0.95 + 2.90)) <= H)


def test_observe_deterministic():
    scene = open_room(h=60, w=60, objects=[("bed", [(30, c) for c in range(40, 45)])])
    pose = Pose(1.0, 1.5, 0.1)
    a, b = observe(scene, pose), observe(scene, pose)
    assert a.depth.tobytes() == b.depth.tobytes()
    assert a.category.tobytes() == b.category.tobytes()
    n1 = observe(scene, pose, noise=REALLIKE, rng=SensorStreams.from_seed(4))
    n2 = observe(scene, pose, noise=REALLIKE, rng=SensorStreams.from_seed(4))
    assert n1.depth.tobytes() == n2.depth.tobytes()


def test_zero_noise_depth_matches_ray_march(home1):
    rng = np.random.default_rng(2)
    free = np.argwhere(home1.traversable)
    cam = CameraModel(n_rays=9)
    for r, c in free[rng.choice(len(free), 25, replace=False)]:
        pose = Pose((c + rng.random()) * H, (r + rng.random()) * H, rng.uniform(0, 2 * math.pi))
        obs = observe(home1, pose, cam)
        for off, d in zip(cam.bearing_offsets(), obs.depth):
            ref = march_ray(~home1.traversable, pose.x, pose.y, pose.heading + off, H, cam.max_range)
            if math.isinf(ref) or ref > cam.max_range:
                assert d == SENTINEL_FAR
            else:
                assert d == pytest.approx(ref, abs=2e-3 * H)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_observation_invariants(home1, seed):
    rng = np.random.default_rng(seed)
    free = np.argwhere(home1.traversable)
    r, c = free[rng.integers(len(free))]
    pose = Pose((c + 0.5) * H, (r + 0.5) * H, rng.uniform(0, 2 * math.pi))
    noise = (ZERO_NOISE, SIMLIKE, REALLIKE)[seed % 3]
    obs = observe(home1, pose, noise=noise, rng=seed)
    finite = np.isfinite(obs.depth)
    assert (obs.depth[finite] > 0).all() and (obs.depth[finite] <= 4.0).all()
    assert ((obs.depth == SENTINEL_FAR) | finite).all()
    assert np.isfinite(obs.depth[obs.category != NO_CATEGORY]).all()


def test_speckle_and_dropout_rates():
    scene = open_room(h=40, w=100)
    pose = Pose(99 * H - 2.0, 20 * H, 0.0)
    speckle = NoiseProfile(depth_sigma=0.02)
    streams = SensorStreams.from_seed(0)
    d = np.concatenate([observe(scene, pose, noise=speckle, rng=streams).depth[CENTER] for _ in range(500)])
    assert np.std(d / 2.0) == pytest.approx(0.02, rel=0.1)
    drop = NoiseProfile(depth_dropout=0.1)
    d = np.concatenate([observe(scene, pose, noise=drop, rng=streams).depth for _ in range(300)])
    assert np.mean(d == SENTINEL_FAR) == pytest.approx(0.1, abs=0.015)


def test_segmentation_miss_is_per_instance():
    scene = open_room(h=40, w=100, objects=[("bed", [(r, 98) for r in range(5, 35)])])
    pose = Pose(98 * H - 2.0, 20 * H, 0.0)
    noise = NoiseProfile(seg_miss=0.3)
    streams = SensorStreams.from_seed(1)
    seen = []
    for _ in range(2000):
        cats = observe(scene, pose, noise=noise, rng=streams).category[CENTER]
        assert len(set(cats.tolist())) == 1  # one draw per visible instance
        seen.append(cats[0])
    assert np.mean(np.array(seen) == NO_CATEGORY) == pytest.approx(0.3, abs=0.03)


def test_segmentation_noise_leaves_depth_stream_alone():
    scene = open_room(h=60, w=60, objects=[("tv", [(30, c) for c in range(40, 45)])])
    pose = Pose(1.0, 1.5, 0.2)
    base = NoiseProfile(depth_sigma=0.02, seg_miss=0.0)
    replace_seg = NoiseProfile(depth_sigma=0.02, seg_miss=0.5)
    a = observe(scene, pose, noise=base, rng=SensorStreams.from_seed(9))
    b = observe(scene, pose, noise=replace_seg, rng=SensorStreams.from_seed(9))
    assert a.depth.tobytes() == b.depth.tobytes()


def test_noise_profile_validation():
    with pytest.raises(ValueError):
        NoiseProfile(depth_dropout=1.5)
    with pytest.raises(ValueError):
        NoiseProfile(seg_miss=-0.1)
    with pytest.raises(ValueError):
        NoiseProfile(depth_sigma=-1)
    bad = np.eye(6)
    bad[0, 1] = 1e-6
    with pytest.raises(ValueError):
        NoiseProfile(seg_confusion=bad)
    assert np.allclose(confusion_matrix(6, 0.9).sum(axis=1), 1.0)
    assert REALLIKE.with_oracle_segmentation().oracle_segmentation
    assert not SIMLIKE.oracle_segmentation


def test_profile_round_trip():
    again = NoiseProfile.from_dict(REALLIKE.to_dict(), name="reallike")
    assert again.to_dict() == REALLIKE.to_dict()
    partial = NoiseProfile.from_dict({"depth_dropout": 0.2}, base=REALLIKE)
    assert partial.depth_dropout == 0.2 and partial.depth_sigma == REALLIKE.depth_sigma


def test_forward_in_free_space():
    scene = open_room()
    pose, hit = apply_action(scene, Pose(0.5, 1.0, 0.0), Action.FORWARD)
    assert not hit
    assert pose.x == pytest.approx(0.75, abs=1e-12) and pose.y == 1.0


def test_forward_stops_before_obstacle():
    scene = open_room(objects=[("chair", [(20, c) for c in range(1, 39)])])
    # the chair row starts 0.10 m north of the agent
    start = Pose(1.0, 20 * H - 0.10, math.pi / 2)
    pose, hit = apply_action(scene, start, Action.FORWARD)
    assert hit
    assert 0.0 <= pose.y - start.y <= 0.10
    assert scene.traversable[scene.cell_of(pose.x, pose.y)]


def test_turns():
    scene = open_room()
    pose, hit = apply_action(scene, Pose(1.0, 1.0, 0.0), Action.TURN_LEFT)
    assert not hit and pose.heading == pytest.approx(math.pi / 6) and (pose.x, pose.y) == (1.0, 1.0)
    pose, _ = apply_action(scene, Pose(1.0, 1.0, 0.0), Action.TURN_RIGHT)
    assert pose.heading == pytest.approx(2 * math.pi - math.pi / 6)
    with pytest.raises(ValueError):
        apply_action(scene, Pose(1.0, 1.0), Action.STOP)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_motion_never_enters_obstacles(home1, seed):
    rng = np.random.default_rng(seed)
    free = np.argwhere(home1.traversable)
    r, c = free[rng.integers(len(free))]
    pose = Pose((c + rng.random()) * H, (r + rng.random()) * H, rng.uniform(0, 2 * math.pi))
    noise = NoiseProfile(actuation_trans_sigma=0.05, actuation_rot_sigma=0.1)
    streams = SensorStreams.from_seed(seed)
    for _ in range(30):
        a = (Action.FORWARD, Action.FORWARD, Action.TURN_LEFT, Action.TURN_RIGHT)[rng.integers(4)]
        pose, _ = apply_action(home1, pose, a, noise, streams)
        assert home1.traversable[home1.cell_of(pose.x, pose.y)]


def test_segmentation_quality_examples():
    assert all(v == 1.0 for v in segmentation_quality(ZERO_NOISE, n_frames=100, rng=0).values())
    half = segmentation_quality(NoiseProfile(seg_miss=0.5), n_frames=10_000, rng=1)
    assert all(abs(v - 0.5) <= 0.05 for v in half.values())
    uniform = NoiseProfile(seg_confusion=np.full((6, 6), 1 / 6))
    rates = segmentation_quality(uniform, n_frames=10_000, rng=2)
    assert all(abs(v - 1 / 6) <= 0.02 for v in rates.values())
    with pytest.raises(ValueError):
        segmentation_quality(ZERO_NOISE, n_frames=0)


def test_segmentation_quality_matches_observe(home1):
    # the Monte-Carlo helper and observe share the per-instance draw
    rates = segmentation_quality(SIMLIKE, home1, n_frames=20_000, rng=3)
    assert set(rates) == {o.category for o in home1.objects}
    for v in rates.values():
        assert v == pytest.approx(0.9 * 0.97, abs=0.01)
