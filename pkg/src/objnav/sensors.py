"""Egocentric ray-fan observations, sensor noise, and discrete actuation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .geometry import FORWARD_STEP_M, TURN_ANGLE, Action, Pose, normalize_heading
from .gridworld import CATEGORIES, Scene

SENTINEL_FAR = math.inf
NO_CATEGORY = -1


@dataclass(frozen=True)
class CameraModel:
    hfov_deg: float = 42.0
    n_rays: int = 64
    max_range: float = 4.0

    def __post_init__(self):
        if not (0 < self.hfov_deg < 180):
            raise ValueError(f"hfov must be in (0, 180), got {self.hfov_deg}")
        if self.n_rays < 2:
            raise ValueError("need at least 2 rays")
        if not (self.max_range > 0):
            raise ValueError("max_range must be > 0")

    def bearing_offsets(self) -> np.ndarray:
        """Ray bearings relative to the heading, from right edge to left edge."""
        hfov = math.radians(self.hfov_deg)
        return -hfov / 2 + np.arange(self.n_rays) * (hfov / (self.n_rays - 1))


@dataclass(frozen=True, eq=False)
class Observation:
    depth: np.ndarray
    category: np.ndarray
    pose: Pose
    step_index: int = 0


def _uniform_confusion(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def confusion_matrix(n: int, correct: float) -> np.ndarray:
    """Row-stochastic matrix with ``correct`` on the diagonal, the rest spread evenly."""
    if n == 1:
        return np.ones((1, 1))
    off = (1.0 - correct) / (n - 1)
    m = np.full((n, n), off)
    np.fill_diagonal(m, correct)
    return m


@dataclass(frozen=True, eq=False)
class NoiseProfile:
    """Sensor and actuation noise.

    ``depth_sigma`` is the relative std of multiplicative speckle, so a ray at
    depth d is perturbed with std ``depth_sigma * d``. Segmentation noise is
    drawn once per visible instance per frame.
    """

    depth_sigma: float = 0.0
    depth_dropout: float = 0.0
    reflections_enabled: bool = False
    seg_miss: np.ndarray = field(default_factory=lambda: np.zeros(len(CATEGORIES)))
    seg_confusion: np.ndarray = field(default_factory=lambda: np.eye(len(CATEGORIES)))
    actuation_trans_sigma: float = 0.0
    actuation_rot_sigma: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        miss = np.asarray(self.seg_miss, dtype=float)
        if miss.ndim == 0:
            miss = np.full(len(CATEGORIES), float(miss))
        conf = np.asarray(self.seg_confusion, dtype=float)
        object.__setattr__(self, "seg_miss", miss)
        object.__setattr__(self, "seg_confusion", conf)
        n = miss.shape[0]
        if conf.shape != (n, n):
            raise ValueError(f"seg_confusion must be {n}x{n}, got {conf.shape}")
        for name in ("depth_dropout",):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be a probability, got {v}")
        if ((miss < 0) | (miss > 1)).any():
            raise ValueError("seg_miss entries must be probabilities")
        if (conf < 0).any() or np.abs(conf.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("seg_confusion rows must be stochastic")
        for name in ("depth_sigma", "actuation_trans_sigma", "actuation_rot_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def oracle_segmentation(self) -> bool:
        return not self.seg_miss.any() and np.array_equal(self.seg_confusion, np.eye(self.seg_miss.shape[0]))

    def with_oracle_segmentation(self) -> "NoiseProfile":
        n = self.seg_miss.shape[0]
        return replace(self, seg_miss=np.zeros(n), seg_confusion=np.eye(n))

    def to_dict(self) -> dict:
        return {
            "depth_sigma": self.depth_sigma,
            "depth_dropout": self.depth_dropout,
            "reflections_enabled": self.reflections_enabled,
            "seg_miss": self.seg_miss.tolist(),
            "seg_confusion": self.seg_confusion.tolist(),
            "actuation_trans_sigma": self.actuation_trans_sigma,
            "actuation_rot_sigma": self.actuation_rot_sigma,
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "custom", base: "NoiseProfile | None" = None) -> "NoiseProfile":
        """Build a profile from a config section; missing fields fall back to ``base``."""
        base = base or ZERO_NOISE
        kwargs = {}
        for key in ("depth_sigma", "depth_dropout", "actuation_trans_sigma", "actuation_rot_sigma"):
            kwargs[key] = float(data.get(key, getattr(base, key)))
        kwargs["reflections_enabled"] = bool(data.get("reflections_enabled", base.reflections_enabled))
        miss = data.get("seg_miss", base.seg_miss)
        if isinstance(miss, dict):
            miss = [float(miss.get(c, 0.0)) for c in CATEGORIES]
        kwargs["seg_miss"] = miss
        conf = data.get("seg_confusion", base.seg_confusion)
        if isinstance(conf, (int, float)):
            conf = confusion_matrix(len(CATEGORIES), float(conf))
        elif isinstance(conf, dict):
            conf = [[float(conf[r].get(c, 0.0)) for c in CATEGORIES] for r in CATEGORIES]
        kwargs["seg_confusion"] = conf
        return cls(name=name, **kwargs)


ZERO_NOISE = NoiseProfile(name="zero")

# Benchmark-style: perfect depth, imperfect segmentation.
SIMLIKE = NoiseProfile(
    seg_miss=np.full(len(CATEGORIES), 0.10),
    seg_confusion=confusion_matrix(len(CATEGORIES), 0.97),
    name="simlike",
)

# Robot-style: speckled depth with dropouts and reflections, good segmentation.
REALLIKE = NoiseProfile(
    depth_sigma=0.02,
    depth_dropout=0.01,
    reflections_enabled=True,
    seg_miss=np.full(len(CATEGORIES), 0.05),
    seg_confusion=confusion_matrix(len(CATEGORIES), 0.995),
    name="reallike",
)

PROFILES = {"zero": ZERO_NOISE, "simlike": SIMLIKE, "reallike": REALLIKE}


def load_profiles(section: dict | None) -> dict:
    """Merge a ``noise_profiles`` config section over the shipped profiles."""
    profiles = dict(PROFILES)
    for name, data in (section or {}).items():
        profiles[name] = NoiseProfile.from_dict(data or {}, name=name, base=PROFILES.get(name, ZERO_NOISE))
    return profiles


@dataclass
class SensorStreams:
    """Independent random streams, one per noise source.

    Keeping them apart means switching segmentation noise off leaves the
    depth and actuation draws unchanged.
    """

    depth: np.random.Generator
    segmentation: np.random.Generator
    actuation: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "SensorStreams":
        ss = np.random.SeedSequence(int(seed) & (2**64 - 1))
        d, s, a = ss.spawn(3)
        return cls(np.random.default_rng(d), np.random.default_rng(s), np.random.default_rng(a))


def _streams(rng) -> SensorStreams:
    if isinstance(rng, SensorStreams):
        return rng
    if isinstance(rng, np.random.Generator):
        return SensorStreams(rng, rng, rng)
    return SensorStreams.from_seed(0 if rng is None else rng)


def observe(scene: Scene, pose: Pose, camera: CameraModel = CameraModel(), noise: NoiseProfile = ZERO_NOISE,
            rng=None, step_index: int = 0) -> Observation:
    """Render one frame: per-ray depth (m, or SENTINEL_FAR) and category index.

    Noise is applied in a fixed order: reflections, speckle, dropout,
    segmentation miss, confusion.
    """
    streams = _streams(rng)
    s = scene.cell_size
    angles = pose.heading + camera.bearing_offsets()
    dist, inst, kind = _kernels.cast_rays(
        scene.blocked,
        scene.instance_grid,
        scene.reflect_grid,
        pose.x / s,
        pose.y / s,
        angles,
        camera.max_range / s,
        bool(noise.reflections_enabled),
    )
    depth = dist * s
    inst = inst.astype(np.int64)

    if noise.depth_sigma > 0:
        z = streams.depth.standard_normal(camera.n_rays)
        finite = np.isfinite(depth)
        depth[finite] = np.maximum(depth[finite] * (1.0 + noise.depth_sigma * z[finite]), 1e-3)
    if noise.depth_dropout > 0:
        u = streams.depth.random(camera.n_rays)
        depth[u < noise.depth_dropout] = SENTINEL_FAR
    depth[depth > camera.max_range] = SENTINEL_FAR
    inst[~np.isfinite(depth)] = -1

    category = np.full(camera.n_rays, NO_CATEGORY, np.int64)
    visible = [int(k) for k in np.unique(inst) if k >= 0]
    cat_index = {c: k for k, c in enumerate(CATEGORIES)}
    if visible:
        true_cat = np.array([cat_index[scene.objects[k].category] for k in visible])
        if noise.oracle_segmentation:
            labels = true_cat
        else:
            seg = streams.segmentation
            u_miss = seg.random(len(visible))
            u_conf = seg.random(len(visible))
            cdf = np.cumsum(noise.seg_confusion[true_cat], axis=1)
            labels = np.array([min(int(np.searchsorted(cdf[j], u_conf[j], side="right")), cdf.shape[1] - 1)
                               for j in range(len(visible))])
            labels[u_miss < noise.seg_miss[true_cat]] = NO_CATEGORY
        for k, lab in zip(visible, labels):
            category[inst == k] = lab
    return Observation(depth=depth, category=category, pose=pose, step_index=step_index)


def apply_action(scene: Scene, pose: Pose, cmd: Action, noise: NoiseProfile = ZERO_NOISE, rng=None):
    """Execute a motion command; returns ``(new_pose, collided)``.

    Forward motion is swept in cell-size sub-steps and halts at the last free
    sub-step when an obstacle cell is entered. Turns never collide.
    """
    cmd = Action(cmd)
    if cmd is Action.STOP:
        raise ValueError("stop is not a motion command")
    streams = _streams(rng)
    if cmd in (Action.TURN_LEFT, Action.TURN_RIGHT):
        delta = TURN_ANGLE if cmd is Action.TURN_LEFT else -TURN_ANGLE
        if noise.actuation_rot_sigma > 0:
            delta += noise.actuation_rot_sigma * streams.actuation.standard_normal()
        return Pose(pose.x, pose.y, normalize_heading(pose.heading + delta)), False
    dist = FORWARD_STEP_M
    heading = pose.heading
    if noise.actuation_trans_sigma > 0:
        dist = max(0.0, dist + noise.actuation_trans_sigma * streams.actuation.standard_normal())
    if noise.actuation_rot_sigma > 0:
        heading = heading + noise.actuation_rot_sigma * streams.actuation.standard_normal()
    s = scene.cell_size
    n = max(1, int(math.ceil(dist / s - 1e-9)))
    dx = math.cos(heading) * dist / n
    dy = math.sin(heading) * dist / n
    x, y = pose.x, pose.y
    for k in range(1, n + 1):
        nx, ny = pose.x + k * dx, pose.y + k * dy
        cell = scene.cell_of(nx, ny)
        if not scene.in_bounds(cell) or not scene.traversable[cell]:
            return Pose(x, y, pose.heading), True
        x, y = nx, ny
    return Pose(x, y, pose.heading), False


def segmentation_quality(noise: NoiseProfile, scene: Scene | None = None, n_frames: int = 1000, rng=None) -> dict:
    """Monte-Carlo P(reported category == true category | instance visible), per category.

    Each frame draws one detection per category present in ``scene`` (all
    categories when no scene is given), with the same per-instance draw
    ``observe`` uses.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    present = CATEGORIES if scene is None else tuple(c for c in CATEGORIES if scene.instances_of(c))
    rates = {}
    for cat in present:
        k = CATEGORIES.index(cat)
        u_miss = rng.random(n_frames)
        u_conf = rng.random(n_frames)
        cdf = np.cumsum(noise.seg_confusion[k])
        labels = np.minimum(np.searchsorted(cdf, u_conf, side="right"), len(cdf) - 1)
        correct = (labels == k) & (u_miss >= noise.seg_miss[k])
        rates[cat] = float(correct.mean())
    return rates
