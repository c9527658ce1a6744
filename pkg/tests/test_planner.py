import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_dilate, dijkstra
from objnav.errors import AtGoal, SourcesBlockedError, Stuck
from objnav.geometry import Action, Pose
from objnav.planner import DistanceField, descent_waypoint, dilate_obstacles, distance_field, next_action, wrap_angle

H = 0.05


def random_map(rng, n=50, density=0.25):
    trav = rng.random((n, n)) > density
    src = (n // 2, n // 2)
    trav[src] = True
    return trav, src


def test_dilate_identity_and_block():
    m = np.zeros((7, 7), bool)
    m[3, 3] = True
    assert np.array_equal(dilate_obstacles(m, 0), m)
    d = dilate_obstacles(m, 1)
    assert d.sum() == 9 and d[2:5, 2:5].all()
    with pytest.raises(ValueError):
        dilate_obstacles(m, -1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), radius=st.integers(0, 3))
def test_dilate_matches_brute_force(seed, radius):
    m = np.random.default_rng(seed).random((17, 13)) < 0.1
    assert np.array_equal(dilate_obstacles(m, radius), brute_dilate(m, radius))


def test_axis_aligned_value_exact():
    trav = np.ones((21, 21), bool)
    f = distance_field(trav, [(10, 10)], H)
    assert f.values[20, 10] == pytest.approx(0.50, abs=1e-9)
    assert f.values[10, 10] == 0.0


def test_corner_between_euclid_and_first_order_bound():
    trav = np.ones((21, 21), bool)
    f = distance_field(trav, [(10, 10)], H)
    euclid = H * 10 * math.sqrt(2)
    assert euclid <= f.values[0, 0] <= euclid + 2 * H


def test_wall_makes_unreachable():
    trav = np.ones((10, 10), bool)
    trav[:, 5] = False
    f = distance_field(trav, [(0, 0)], H)
    assert math.isinf(f.values[0, 9])
    assert not f.reachable()[:, 6:].any()


def test_blocked_sources_raise():
    trav = np.ones((5, 5), bool)
    trav[2, 2] = False
    with pytest.raises(SourcesBlockedError):
        distance_field(trav, [(2, 2)], H)
    with pytest.raises(SourcesBlockedError):
        distance_field(trav, [(9, 9)], H)


def test_random_maps_bounded_by_dijkstra():
    rng = np.random.default_rng(0)
    for _ in range(20):
        trav, src = random_map(rng)
        f = distance_field(trav, [src], H).values
        d4 = dijkstra(trav, [src], H, 4)
        d8 = dijkstra(trav, [src], H, 8)
        reach = np.isfinite(d4)
        assert np.array_equal(np.isfinite(f), reach)
        assert (f[reach] <= d4[reach] + 1e-9).all()
        assert (d8[reach] <= f[reach] * 1.45 + 1e-9).all()


def _eikonal_residual(values, trav, h):
    """Max |upwind update - value| over accepted non-source cells."""
    rows, cols = values.shape
    worst = 0.0
    for r in range(rows):
        for c in range(cols):
            v = values[r, c]
            if not trav[r, c] or not np.isfinite(v) or v == 0.0:
                continue
            a = min(values[r - 1, c] if r > 0 else math.inf, values[r + 1, c] if r < rows - 1 else math.inf)
            b = min(values[r, c - 1] if c > 0 else math.inf, values[r, c + 1] if c < cols - 1 else math.inf)
            a, b = min(a, b), max(a, b)
            if math.isinf(b) or b - a >= h:
                u = a + h
            else:
                u = 0.5 * (a + b + math.sqrt(2 * h * h - (a - b) ** 2))
            worst = max(worst, abs(u - v))
    return worst


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_eikonal_residual_and_lipschitz(seed):
    rng = np.random.default_rng(seed)
    trav, src = random_map(rng, n=30)
    f = distance_field(trav, [src], H)
    v = f.values
    assert (v[np.isfinite(v)] >= 0).all()
    assert v[src] == 0.0
    assert _eikonal_residual(v, trav, H) <= 1e-6 * H
    # 1-Lipschitz between 4-adjacent reachable cells
    for a, b in ((v[1:, :], v[:-1, :]), (v[:, 1:], v[:, :-1])):
        both = np.isfinite(a) & np.isfinite(b)
        assert (np.abs(a[both] - b[both]) <= H + 1e-12).all()


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_adding_obstacles_never_decreases_values(seed):
    rng = np.random.default_rng(seed)
    trav, src = random_map(rng, n=30, density=0.15)
    base = distance_field(trav, [src], H).values
    more = trav & ~(rng.random(trav.shape) < 0.05)
    more[src] = True
    after = distance_field(more, [src], H).values
    reach = np.isfinite(after)
    assert (after[reach] >= base[reach] - 1e-9).all()


def test_early_termination_agrees_on_targets():
    rng = np.random.default_rng(3)
    trav, src = random_map(rng, n=40, density=0.2)
    full = distance_field(trav, [src], H).values
    targets = np.zeros_like(trav)
    cells = np.argwhere(np.isfinite(full))
    pick = cells[rng.choice(len(cells), 5, replace=False)]
    targets[pick[:, 0], pick[:, 1]] = True
    part = distance_field(trav, [src], H, targets=targets)
    assert not part.complete
    assert np.allclose(part.values[targets], full[targets])
    first = distance_field(trav, [src], H, targets=targets, first_target=True)
    assert np.nanmin(np.where(targets, first.values, np.inf)) == pytest.approx(full[targets].min())


def _field_to_goal(trav, goal):
    return distance_field(trav, [goal], H)


def test_next_action_forward_when_aligned():
    trav = np.ones((21, 41), bool)
    f = _field_to_goal(trav, (10, 35))
    assert next_action(f, Pose(5.5 * H, 10.5 * H, 0.0)) is Action.FORWARD


def test_next_action_turns_left_when_goal_behind():
    trav = np.ones((21, 41), bool)
    f = _field_to_goal(trav, (10, 2))
    assert next_action(f, Pose(30.5 * H, 10.5 * H, 0.0)) is Action.TURN_LEFT


def test_next_action_signals():
    trav = np.ones((9, 9), bool)
    f = _field_to_goal(trav, (4, 4))
    with pytest.raises(AtGoal):
        next_action(f, Pose(4.5 * H, 4.5 * H))
    trav2 = np.ones((9, 9), bool)
    trav2[:, 6] = False
    f2 = _field_to_goal(trav2, (4, 2))
    with pytest.raises(Stuck):
        next_action(f2, Pose(8.5 * H, 4.5 * H))
    # a local minimum that is not a source
    values = np.full((3, 3), 1.0)
    values[1, 1] = 0.5
    flat = DistanceField(values, np.array([[0, 0]]), np.ones((3, 3), bool), H)
    with pytest.raises(Stuck):
        descent_waypoint(flat, (1, 1))


def _object_field(free, goal_mask):
    return distance_field(free | goal_mask, goal_mask, H)


def _random_world(rng, n=40, blocks=6):
    trav = np.zeros((n, n), bool)
    trav[1:-1, 1:-1] = True
    for _ in range(blocks):
        r, c = rng.integers(1, n - 4, 2)
        trav[r:r + rng.integers(2, 6), c:c + rng.integers(2, 6)] = False
    r, c = rng.integers(3, n - 5, 2)
    goal = np.zeros_like(trav)
    goal[r:r + 3, c:c + 3] = True
    return trav & ~goal, goal


def _replanned_field(trav, goal, cell, bumped=None):
    """Field on the 2-cell dilated grid, with raw free space around the agent (the agent's own rule)."""
    if bumped is not None and bumped.any():
        trav = trav & ~dilate_obstacles(bumped, 1)
        trav[cell] = True
    free = ~dilate_obstacles(~trav & ~goal, 2) & trav
    r, c = cell
    free[max(0, r - 3):r + 4, max(0, c - 3):c + 4] |= trav[max(0, r - 3):r + 4, max(0, c - 3):c + 4]
    f = _object_field(free, goal)
    return f if np.isfinite(f.value_at(cell)) else _object_field(trav, goal)


def _sweep_blocks(blocked, pose, heading, n=5):
    for k in range(1, n + 1):
        r = int(math.floor((pose.y + k * H * math.sin(heading)) / H))
        c = int(math.floor((pose.x + k * H * math.cos(heading)) / H))
        if not (0 <= r < blocked.shape[0] and 0 <= c < blocked.shape[1]) or blocked[r, c]:
            return True
    return False


def _rollout(trav, goal, start_cell, heading, limit, replan=True, lookahead=3):
    """Drive next_action toward an object; returns (actions, reached, forward values on the raw field)."""
    from objnav.gridworld import Scene
    from objnav.sensors import apply_action

    scene = Scene("rollout", trav.shape[1], trav.shape[0], H, trav)
    ref = _object_field(trav, goal)
    pose = Pose((start_cell[1] + 0.5) * H, (start_cell[0] + 0.5) * H, heading)
    values = []
    bumped = np.zeros_like(trav)
    escape = None
    for k in range(limit):
        blocked = ~trav & ~goal | bumped
        cell = ref.cell_of(pose.x, pose.y)
        if ref.value_at(cell) <= 2 * H:
            return k, True, values
        f = _replanned_field(trav, goal, cell, bumped) if replan else ref
        if escape is not None and abs(wrap_angle(escape - pose.heading)) > 1e-6:
            a = Action.TURN_LEFT if wrap_angle(escape - pose.heading) > 0 else Action.TURN_RIGHT
        elif escape is not None and not _sweep_blocks(blocked, pose, pose.heading):
            escape, a = None, Action.FORWARD  # commit to the detour once facing it
        else:
            escape = None
            try:
                a = next_action(f, pose, lookahead)
            except AtGoal:
                return k, True, values
            if a is Action.FORWARD and _sweep_blocks(blocked, pose, pose.heading):
                # same detour rule as the agent: nearest free heading to the waypoint bearing
                wr, wc = descent_waypoint(f, cell, lookahead)
                bearing = math.atan2((wr + 0.5) * H - pose.y, (wc + 0.5) * H - pose.x)
                cands = [pose.heading + s * k2 * math.radians(30) for k2 in range(1, 7) for s in (1, -1)]
                cands = [c for c in cands if not _sweep_blocks(blocked, pose, c)]
                escape = min(cands, key=lambda c: abs(wrap_angle(c - bearing)))
                a = Action.TURN_LEFT if wrap_angle(escape - pose.heading) > 0 else Action.TURN_RIGHT
        before = ref.value_at(cell)
        old = pose
        pose, collided = apply_action(scene, pose, a)
        if collided:
            # remember the cell that stopped us, as the agent's collision map does
            ahead = ref.cell_of(pose.x + math.cos(old.heading) * H, pose.y + math.sin(old.heading) * H)
            if scene.in_bounds(ahead) and not goal[ahead]:
                bumped[ahead] = True
        if a is Action.FORWARD:
            values.append((before, ref.value_at(ref.cell_of(pose.x, pose.y))))
    return limit, False, values


def test_forward_actions_descend_the_field():
    rng = np.random.default_rng(5)
    for _ in range(50):
        trav = np.zeros((40, 40), bool)
        trav[1:-1, 1:-1] = True
        r, c = rng.integers(3, 35, 2)
        goal = np.zeros_like(trav)
        goal[r:r + 3, c:c + 3] = True
        trav &= ~goal
        free = np.argwhere(trav)
        start = tuple(free[rng.integers(len(free))])
        steps, ok, values = _rollout(trav, goal, start, float(rng.uniform(0, 2 * math.pi)), 400, replan=False)
        assert ok
        for before, after in values:
            assert after <= before + 1e-9


def test_rollout_reaches_goal_within_bound():
    rng = np.random.default_rng(11)
    done = 0
    while done < 100:
        trav, goal = _random_world(rng)
        ref = _object_field(trav, goal)
        clear = ~dilate_obstacles(~trav & ~goal, 2) & trav
        free = np.argwhere(np.isfinite(_object_field(clear, goal).values) & clear)
        if not len(free):
            continue
        start = tuple(free[rng.integers(len(free))])
        d = ref.value_at(start)
        if d <= 2 * H:
            continue
        bound = int(4 * (d / 0.25) + 24)
        steps, ok, _ = _rollout(trav, goal, start, float(rng.uniform(0, 2 * math.pi)), 10 * bound + 100)
        assert ok and steps <= bound, (start, steps, bound)
        done += 1
