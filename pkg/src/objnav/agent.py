"""The modular navigation loop: sense, map, select a goal, plan, act."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import AtGoal, EpisodeSpecError, NoFrontierError, NoInstanceError, Stuck, UnreachableError
from .explore import CategoryPriors, ExplorationPolicy, Window, map_window, make_policy
from .geometry import FORWARD_STEP_M, TURN_ANGLE, Action, Pose
from .gridworld import CATEGORIES, Scene, nearest_goal_instance
from .planner import DistanceField, descent_waypoint, dilate_obstacles, distance_field, next_action, wrap_angle
from .semmap import EXPLORED, OBSTACLE, DenoiseParams, SemanticMap, denoised_obstacles, goal_mask, integrate, new_map
from .sensors import ZERO_NOISE, CameraModel, NoiseProfile, SensorStreams, apply_action, observe

FAILURE_CLASSES = ("none", "timeout", "collision_budget", "false_stop", "other")


@dataclass(frozen=True)
class EpisodeSpec:
    episode_id: str
    scene_id: str
    start: Pose
    goal_category: str
    seed: int = 0
    max_steps: int = 500
    max_collisions: int = 20
    success_radius: float = 1.0
    shortest_path_length: float | None = None

    def __post_init__(self):
        if self.max_steps <= 0 or self.max_collisions <= 0:
            raise EpisodeSpecError("budgets must be > 0")
        if self.success_radius <= 0:
            raise EpisodeSpecError("success_radius must be > 0")
        if self.goal_category not in CATEGORIES:
            raise EpisodeSpecError(f"unknown goal category {self.goal_category!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.to_list()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeSpec":
        d = dict(d)
        d["start"] = Pose.from_list(d["start"])
        return cls(**d)


@dataclass
class EpisodeResult:
    episode_id: str
    scene_id: str
    goal_category: str
    seed: int
    success: bool
    agent_path_length: float
    shortest_path_length: float
    steps: int
    collisions: int
    stop_called: bool
    terminal_distance_to_goal: float
    failure_class: str = "none"
    stuck_incidents: int = 0
    false_obstacle_on_path: bool = False
    error: str | None = None
    annotated_cause: str | None = None
    trace: list | None = None

    def to_dict(self, with_trace: bool = False) -> dict:
        d = asdict(self)
        if not with_trace:
            d.pop("trace")
        for key in ("agent_path_length", "shortest_path_length", "terminal_distance_to_goal"):
            v = d[key]
            d[key] = None if v is None or not math.isfinite(v) else round(float(v), 9)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeResult":
        d = dict(d)
        for key in ("agent_path_length", "shortest_path_length", "terminal_distance_to_goal"):
            if d.get(key) is None:
                d[key] = math.inf
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass(frozen=True, eq=False)
class AgentConfig:
    """Everything about the agent that is not the episode or the noise."""

    policy: str = "frontier"
    priors: CategoryPriors | None = None
    resample_period: int | None = None
    map_size: int = 481
    obstacle_confirm: int = 1
    denoise: bool = False
    denoise_params: DenoiseParams = DenoiseParams()
    dilation_radius: int = 2
    camera: CameraModel = CameraModel()
    stop_margin: float = 0.1
    footprint_radius_m: float = 0.3
    explore_reach_m: float = 0.25
    blacklist_radius: int = 2
    lookahead: int = 3
    window_margin: int = 8
    trace: bool = False

    def __post_init__(self):
        if self.policy not in ("frontier", "prior", "random"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")
        if self.resample_period is not None and self.resample_period < 1:
            raise ValueError("resample_period must be >= 1")
        if self.lookahead < 1:
            raise ValueError("lookahead must be >= 1")

    def with_(self, **kw) -> "AgentConfig":
        return replace(self, **kw)


@dataclass
class PipelineState:
    map: SemanticMap
    policy: ExplorationPolicy
    goal_index: int
    config: AgentConfig
    success_radius: float = 1.0
    cached_goal: tuple | None = None
    goal_age: int = 0
    step: int = 0
    collisions: int = 0
    path_length: float = 0.0
    stuck_incidents: int = 0
    collision_map: np.ndarray | None = None
    blacklist: np.ndarray | None = None
    last_mode: str | None = None
    last_goal: tuple | None = None
    escape_heading: float | None = None
    goal_evidence: int = 0
    incidents: list = field(default_factory=list)

    def __post_init__(self):
        M = self.map.M
        if self.collision_map is None:
            self.collision_map = np.zeros((M, M), bool)
        if self.blacklist is None:
            self.blacklist = np.zeros((M, M), bool)

    def obstacles(self) -> np.ndarray:
        """Obstacle belief used for planning: map channel (optionally denoised) plus bumps."""
        if self.config.denoise:
            obst = denoised_obstacles(self.map.obstacle_evidence, self.config.denoise_params)
        else:
            obst = self.map.channels[OBSTACLE].copy()
        return obst | self.collision_map

    def obstacles_in(self, window: Window) -> np.ndarray:
        if self.config.denoise:
            obst = denoised_obstacles(window.crop(self.map.obstacle_evidence), self.config.denoise_params)
        else:
            obst = window.crop(self.map.channels[OBSTACLE]).copy()
        return obst | window.crop(self.collision_map)

    def record_motion(self, before: Pose, after: Pose, collided: bool) -> None:
        self.path_length += math.hypot(after.x - before.x, after.y - before.y)
        if collided:
            self.collisions += 1
            h = self.map.cell_size
            ahead = Pose(after.x + h * math.cos(after.heading), after.y + h * math.sin(after.heading), after.heading)
            cell = self.map.cell_of(ahead)
            if self.map.in_bounds(cell) and cell != self.map.cell_of(after):
                self.collision_map[cell] = True


def new_state(spec: EpisodeSpec, config: AgentConfig, cell_size: float, categories=CATEGORIES) -> PipelineState:
    smap = new_map(len(categories), config.map_size, cell_size, config.obstacle_confirm, origin=spec.start)
    policy = make_policy(config.policy, config.priors, seed=spec.seed)
    if config.resample_period is not None:
        policy.resample_period = config.resample_period
    return PipelineState(smap, policy, categories.index(spec.goal_category), config, spec.success_radius)


def _planning_mask(obst: np.ndarray, goal: np.ndarray, agent, radius: int) -> np.ndarray:
    """Traversable cells: obstacles dilated except near the goal and the agent, where only raw ones block."""
    blocked = dilate_obstacles(obst & ~goal, radius)
    if radius > 0:
        near = dilate_obstacles(goal, radius)
        r, c = agent
        near[max(0, r - radius):r + radius + 1, max(0, c - radius):c + radius + 1] = True
        blocked[near] = obst[near]
    return ~blocked | goal


def _plan_field(obst, goal, agent, radius, h, window) -> DistanceField:
    trav = _planning_mask(obst, goal, agent, radius)
    rows, cols = trav.shape
    targets = np.zeros_like(trav)
    targets[max(0, agent[0] - 1):agent[0] + 2, max(0, agent[1] - 1):agent[1] + 2] = True
    return distance_field(trav, goal, h, targets=targets, offset=window.offset)


def _still_frontier(state: PipelineState, cell, obst_full_cell: bool) -> bool:
    r, c = cell
    m = state.map
    explored = m.channels[EXPLORED]
    if not explored[r, c] or obst_full_cell or state.blacklist[r, c]:
        return False
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        rr, cc = r + dr, c + dc
        if 0 <= rr < m.M and 0 <= cc < m.M and not explored[rr, cc]:
            return True
    return False


def _blacklist_around(state: PipelineState, cell) -> None:
    k = state.config.blacklist_radius
    r, c = cell
    M = state.map.M
    state.blacklist[max(0, r - k):min(M, r + k + 1), max(0, c - k):min(M, c + k + 1)] = True


def _explore_goal(state: PipelineState, agent, window, obst_w, trav_w):
    """Cached or fresh exploration goal in full-map coordinates."""
    goal = state.cached_goal
    if goal is not None:
        w_goal = window.local(goal)
        inside = 0 <= w_goal[0] < obst_w.shape[0] and 0 <= w_goal[1] < obst_w.shape[1]
        valid = (
            state.goal_age < state.policy.resample_period
            and state.policy.evidence(state.map, state.goal_index) == state.goal_evidence
            and inside
            and _still_frontier(state, goal, bool(obst_w[w_goal]))
        )
        if valid:
            return goal
    kw = dict(window=window, exclude=state.blacklist)
    obstacle_full = np.zeros((state.map.M, state.map.M), bool)
    obstacle_full[window.slices] = obst_w
    trav_full = np.ones((state.map.M, state.map.M), bool)
    trav_full[window.slices] = trav_w
    try:
        goal = state.policy.select_goal(state.map, agent, state.goal_index, traversable=trav_full,
                                        obstacle=obstacle_full, **kw)
    except NoFrontierError:
        # retry on the undilated map, then with the blacklist cleared
        try:
            goal = state.policy.select_goal(state.map, agent, state.goal_index, obstacle=obstacle_full, **kw)
        except NoFrontierError:
            if not state.blacklist.any():
                raise
            state.blacklist[:] = False
            goal = state.policy.select_goal(state.map, agent, state.goal_index, obstacle=obstacle_full, **kw)
    state.cached_goal = goal
    state.goal_age = 0
    state.goal_evidence = state.policy.evidence(state.map, state.goal_index)
    return goal


def _sweep_blocked(obst: np.ndarray, window: Window, mpose: Pose, heading: float, h: float) -> bool:
    """Would a forward step along ``heading`` enter a believed obstacle cell?"""
    n = int(round(FORWARD_STEP_M / h))
    dx, dy = math.cos(heading) * h, math.sin(heading) * h
    rows, cols = obst.shape
    for k in range(1, n + 1):
        r = int(math.floor((mpose.y + k * dy) / h)) - window.r0
        c = int(math.floor((mpose.x + k * dx) / h)) - window.c0
        if not (0 <= r < rows and 0 <= c < cols) or obst[r, c]:
            return True
    return False


def _turn_toward(heading: float, target: float) -> Action:
    return Action.TURN_LEFT if wrap_angle(target - heading) > 0 else Action.TURN_RIGHT


def _guarded_action(state: PipelineState, field: DistanceField, mpose: Pose, obst: np.ndarray,
                    window: Window) -> Action:
    """next_action, except a forward step into a known obstacle becomes a detour heading.

    The detour is the free heading (in turn quanta) closest to the waypoint
    bearing; the agent commits to it until it has moved, so it does not
    swing back toward the blocked direction.
    """
    h = state.map.cell_size
    if state.escape_heading is not None:
        target = state.escape_heading
        if abs(wrap_angle(target - mpose.heading)) < 1e-6:
            state.escape_heading = None
            if not _sweep_blocked(obst, window, mpose, mpose.heading, h):
                return Action.FORWARD
        else:
            return _turn_toward(mpose.heading, target)
    action = next_action(field, mpose, state.config.lookahead)
    if action is not Action.FORWARD or not _sweep_blocked(obst, window, mpose, mpose.heading, h):
        return action
    wr, wc = descent_waypoint(field, field.cell_of(mpose.x, mpose.y), state.config.lookahead)
    bearing = math.atan2((wr + window.r0 + 0.5) * h - mpose.y, (wc + window.c0 + 0.5) * h - mpose.x)
    best = None
    for k in range(1, 7):
        for sign in (1, -1):
            cand = mpose.heading + sign * k * TURN_ANGLE
            if not _sweep_blocked(obst, window, mpose, cand, h):
                cost = abs(wrap_angle(cand - bearing))
                if best is None or cost < best[0] - 1e-9:
                    best = (cost, cand)
    if best is None:
        return _incident(state, "boxed_in")
    state.escape_heading = mpose.heading + wrap_angle(best[1] - mpose.heading)
    return _turn_toward(mpose.heading, state.escape_heading)


def _incident(state: PipelineState, kind: str) -> Action:
    state.stuck_incidents += 1
    state.incidents.append((state.step, kind))
    return Action.TURN_LEFT


def step_pipeline(state: PipelineState, obs) -> Action:
    """Integrate one observation and return the next action."""
    cfg = state.config
    smap = state.map
    h = smap.cell_size
    integrate(smap, obs, cfg.camera.max_range, obs.pose.heading + cfg.camera.bearing_offsets(),
              footprint_radius=int(round(cfg.footprint_radius_m / h)))
    agent = smap.current
    mpose = smap.map_pose(obs.pose)
    gmask_full = goal_mask(smap, state.goal_index)
    extra = [state.cached_goal] if state.cached_goal is not None else []
    window = map_window(smap, extra, margin=cfg.window_margin)
    obst = state.obstacles_in(window)
    agent_w = window.local(agent)
    state.step += 1

    if gmask_full.any():
        state.last_mode = "exploit"
        goal_w = window.crop(gmask_full).copy()
        state.last_goal = tuple(int(v) for v in np.argwhere(gmask_full)[0])
        stop_at = state.success_radius - cfg.stop_margin
        for radius in (cfg.dilation_radius, 0):
            try:
                field = _plan_field(obst, goal_w, agent_w, radius, h, window)
            except Exception:
                continue
            value = field.value_at(agent_w)
            if value <= stop_at:
                return Action.STOP
            try:
                return _guarded_action(state, field, mpose, obst, window)
            except AtGoal:
                return Action.STOP
            except Stuck:
                continue
        return _incident(state, "stuck")

    state.last_mode = "explore"
    for attempt in range(2):
        trav_w = _planning_mask(obst, np.zeros_like(obst), agent_w, cfg.dilation_radius)
        try:
            goal = _explore_goal(state, agent, window, obst, trav_w)
        except NoFrontierError:
            state.last_goal = None
            return _incident(state, "no_frontier")
        state.last_goal = goal
        if not (window.r0 <= goal[0] < window.r1 and window.c0 <= goal[1] < window.c1):
            window = map_window(smap, [goal], margin=cfg.window_margin)
            obst = state.obstacles_in(window)
            agent_w = window.local(agent)
        goal_w = np.zeros(obst.shape, bool)
        goal_w[window.local(goal)] = True
        for radius in (cfg.dilation_radius, 0):
            try:
                field = _plan_field(obst, goal_w, agent_w, radius, h, window)
            except Exception:
                continue
            value = field.value_at(agent_w)
            if value <= cfg.explore_reach_m:
                break
            try:
                action = _guarded_action(state, field, mpose, obst, window)
            except (AtGoal, Stuck):
                continue
            state.goal_age += 1
            return action
        # goal reached or unplannable: drop it and pick another
        _blacklist_around(state, goal)
        state.cached_goal = None
    return _incident(state, "stuck")


def _terminal_distance(scene: Scene, pose: Pose, category: str) -> float:
    return scene.distance_to_category(pose.x, pose.y, category)


def _false_obstacle_on_path(scene: Scene, state: PipelineState, pose: Pose, category: str) -> bool:
    """Does the agent's obstacle belief block a ground-truth route from ``pose`` to the goal?

    The route follows the geodesic descent over true free space (kept off
    walls by the planner's dilation where possible). A map obstacle counts as
    false when it covers a world cell that is free together with all its
    8 neighbors.
    """
    h = scene.cell_size
    goal = scene.category_mask(category)
    r = state.config.dilation_radius
    trav = scene.traversable & ~dilate_obstacles(~scene.traversable & ~goal, r)
    trav |= goal
    start = scene.cell_of(pose.x, pose.y)
    if not trav[start]:
        trav = scene.traversable | goal
    try:
        field = distance_field(trav, goal, h)
    except Exception:
        return False
    if not np.isfinite(field.values[start]):
        return False
    free_core = ~dilate_obstacles(~scene.traversable, 1)
    obst = state.obstacles()
    cell = start
    smap = state.map
    for _ in range(scene.width * scene.height):
        if field.values[cell] == 0.0:
            break
        x, y = scene.cell_center(cell)
        mr, mc = smap.cell_of(Pose(x, y))
        for dr in range(-r, r + 1):
            for dc in range(-r, r + 1):
                rr, cc = mr + dr, mc + dc
                if not smap.in_bounds((rr, cc)) or not obst[rr, cc]:
                    continue
                wx, wy = _map_cell_to_world(smap, (rr, cc))
                wcell = scene.cell_of(wx, wy)
                if scene.in_bounds(wcell) and free_core[wcell]:
                    return True
        try:
            cell = descent_waypoint(field, cell, 1)
        except Stuck:
            break
    return False


def _map_cell_to_world(smap: SemanticMap, cell) -> tuple[float, float]:
    half = smap.M // 2 + 0.5
    mx = (cell[1] + 0.5 - half) * smap.cell_size
    my = (cell[0] + 0.5 - half) * smap.cell_size
    o = smap.origin
    c, s = math.cos(o.heading), math.sin(o.heading)
    return o.x + c * mx - s * my, o.y + s * mx + c * my


def validate_spec(scene: Scene, spec: EpisodeSpec) -> float:
    """Check ``spec`` against ``scene``; returns the shortest path length."""
    if spec.scene_id != scene.id:
        raise EpisodeSpecError(f"spec is for scene {spec.scene_id!r}, got {scene.id!r}")
    if not scene.is_valid_pose(spec.start):
        raise EpisodeSpecError(f"start {spec.start} is not a free cell of {scene.id}")
    if spec.shortest_path_length is not None:
        return float(spec.shortest_path_length)
    try:
        _, dist = nearest_goal_instance(scene, spec.start, spec.goal_category)
    except (NoInstanceError, UnreachableError) as exc:
        raise EpisodeSpecError(str(exc)) from exc
    return dist


def run_episode(scene: Scene, spec: EpisodeSpec, config: AgentConfig = AgentConfig(),
                noise: NoiseProfile = ZERO_NOISE, on_step=None) -> EpisodeResult:
    """Simulate one episode until stop, step budget, or collision budget.

    ``on_step(state, step, action)`` is called after each decision, before
    the action is executed.
    """
    shortest = validate_spec(scene, spec)
    state = new_state(spec, config, scene.cell_size, scene.categories)
    streams = SensorStreams.from_seed(spec.seed)
    pose = spec.start
    trace = [] if config.trace else None
    stop_called = False
    failure = "timeout"
    steps = 0
    while steps < spec.max_steps:
        obs = observe(scene, pose, config.camera, noise, streams, step_index=steps)
        action = step_pipeline(state, obs)
        steps += 1
        if on_step is not None:
            on_step(state, steps, action)
        if trace is not None:
            trace.append({
                "step": steps,
                "pose": [round(pose.x, 9), round(pose.y, 9), round(pose.heading, 9)],
                "action": action.value,
                "mode": state.last_mode,
                "goal": list(state.last_goal) if state.last_goal is not None else None,
                "collisions": state.collisions,
            })
        if action is Action.STOP:
            stop_called = True
            break
        new_pose, collided = apply_action(scene, pose, action, noise, streams)
        state.record_motion(pose, new_pose, collided)
        pose = new_pose
        if state.collisions > spec.max_collisions:
            failure = "collision_budget"
            break
    terminal = _terminal_distance(scene, pose, spec.goal_category)
    success = stop_called and terminal <= spec.success_radius
    if success:
        failure = "none"
    elif stop_called:
        failure = "false_stop"
    false_obstacle = False if success else _false_obstacle_on_path(scene, state, pose, spec.goal_category)
    return EpisodeResult(
        episode_id=spec.episode_id,
        scene_id=spec.scene_id,
        goal_category=spec.goal_category,
        seed=spec.seed,
        success=bool(success),
        agent_path_length=state.path_length,
        shortest_path_length=shortest,
        steps=steps,
        collisions=state.collisions,
        stop_called=stop_called,
        terminal_distance_to_goal=terminal,
        failure_class=failure,
        stuck_incidents=state.stuck_incidents,
        false_obstacle_on_path=bool(false_obstacle),
        trace=trace,
    )
