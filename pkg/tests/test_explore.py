import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_frontier, dijkstra
from objnav.errors import NoFrontierError
from objnav.explore import (
    CategoryPriors,
    FrontierPolicy,
    PriorPolicy,
    RandomPolicy,
    default_priors,
    frontier_cells,
    frontier_goal,
    frontier_mask,
    goal_or_explore,
    make_policy,
    prior_goal,
)
from objnav.gridworld import CATEGORIES
from objnav.semmap import EXPLORED, OBSTACLE, new_map

H = 0.05
TOILET = CATEGORIES.index("toilet")
BED = CATEGORIES.index("bed")


def random_map(seed, M=41, radius=12):
    """Map with an explored blob around the agent, scattered obstacles and category cells."""
    rng = np.random.default_rng(seed)
    m = new_map(6, M)
    rr, cc = np.mgrid[:M, :M]
    c = M // 2
    r = radius + rng.integers(-4, 5)
    blob = (rr - c) ** 2 + (cc - c) ** 2 <= r * r
    blob |= rng.random((M, M)) < 0.05
    m.channels[EXPLORED] |= blob
    m.channels[OBSTACLE] = blob & (rng.random((M, M)) < 0.12)
    m.channels[OBSTACLE][c - 1:c + 2, c - 1:c + 2] = False
    for k in range(6):
        pick = blob & (rng.random((M, M)) < 0.004)
        m.channels[4 + k] |= pick
    return m, (c, c)


def test_fully_unexplored_has_no_frontier():
    m = new_map(6, 21)
    m.channels[EXPLORED][:] = False
    assert frontier_cells(m) == set()


def test_three_by_three_block():
    m = new_map(6, 21)
    m.channels[EXPLORED][:] = False
    m.channels[EXPLORED][9:12, 9:12] = True
    cells = frontier_cells(m)
    assert len(cells) == 8 and (10, 10) not in cells


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_frontier_matches_definition_scan(seed):
    rng = np.random.default_rng(seed)
    explored = rng.random((25, 19)) < 0.6
    obstacle = rng.random((25, 19)) < 0.2
    got = {tuple(map(int, rc)) for rc in np.argwhere(frontier_mask(explored, obstacle))}
    assert got == brute_frontier(explored, obstacle)


def test_single_frontier_cell_is_chosen():
    m = new_map(6, 21)
    m.channels[EXPLORED][:] = True
    m.channels[EXPLORED][10, 20] = False
    assert frontier_goal(m, (10, 10)) == (10, 19)


def test_nearer_frontier_wins():
    m = new_map(6, 101)
    m.channels[EXPLORED][:] = True
    m.channels[EXPLORED][50, 61] = False  # frontier (50, 60) is 0.5 m away
    m.channels[EXPLORED][50, 9] = False  # frontier (50, 10) is 2.0 m away
    assert frontier_goal(m, (50, 50)) == (50, 60)


def test_no_frontier_raises():
    m = new_map(6, 11)
    m.channels[EXPLORED][:] = True
    with pytest.raises(NoFrontierError):
        frontier_goal(m, (5, 5))
    with pytest.raises(NoFrontierError):
        prior_goal(m, (5, 5), BED, default_priors())


def test_axis_frontiers_match_dijkstra_exactly():
    # frontier cells on the agent's row and column only: the eikonal value is exact there
    for seed in range(20):
        rng = np.random.default_rng(seed)
        m = new_map(6, 41)
        m.channels[EXPLORED][:] = True
        picks = [(20, int(c)) for c in rng.choice([c for c in range(41) if c != 20], 3, replace=False)]
        for cell in picks:
            m.channels[EXPLORED][cell[0] - 1, cell[1]] = False
        got = frontier_goal(m, (20, 20))
        ref = dijkstra(~m.channels[OBSTACLE], [(20, 20)], H, 4)
        cand = frontier_cells(m)
        best = min(ref[c] for c in cand)
        assert ref[got] == pytest.approx(best)
        assert got == min(c for c in cand if ref[c] == pytest.approx(best))


def test_frontier_goal_near_dijkstra_argmin_on_random_maps():
    for seed in range(20):
        m, agent = random_map(seed)
        got = frontier_goal(m, agent)
        assert got in frontier_cells(m)
        d8 = dijkstra(~m.channels[OBSTACLE], [agent], H, 8)
        reach = [c for c in frontier_cells(m) if np.isfinite(d8[c])]
        best = min(d8[c] for c in reach)
        # octile distance overestimates the Euclidean geodesic by at most 8.3%
        assert d8[got] <= 1.0824 * best * 1.05 + 2 * H


@pytest.mark.parametrize("seed", range(20))
def test_zero_affinity_prior_equals_frontier(seed):
    m, agent = random_map(seed)
    zero = CategoryPriors(np.zeros((6, 6)))
    assert prior_goal(m, agent, BED, zero) == frontier_goal(m, agent)


def test_dominant_affinity_pulls_toward_cue():
    m = new_map(6, 61)
    m.channels[EXPLORED][:] = True
    m.channels[EXPLORED][30, 36] = False  # empty frontier near the agent
    m.channels[EXPLORED][5, 30] = False  # frontier beside a mapped toilet, farther away
    m.channels[4 + TOILET][4, 31] = True
    aff = np.zeros((6, 6))
    aff[TOILET, TOILET] = 10.0
    got = prior_goal(m, (30, 30), TOILET, CategoryPriors(aff))
    assert abs(got[0] - 5) + abs(got[1] - 30) <= 2
    assert frontier_goal(m, (30, 30))[0] == 30


@pytest.mark.parametrize("k", [0.5, 3.0, 7.0])
def test_prior_argmax_scale_invariant(k):
    base = default_priors()
    scaled = CategoryPriors(base.affinity * k, lam=base.lam, beta=base.beta * k)
    for seed in range(50):
        m, agent = random_map(seed)
        assert prior_goal(m, agent, seed % 6, base) == prior_goal(m, agent, seed % 6, scaled)


def test_priors_validation_and_config():
    with pytest.raises(ValueError):
        CategoryPriors(-np.ones((6, 6)))
    with pytest.raises(ValueError):
        CategoryPriors(np.full((6, 6), np.inf))
    with pytest.raises(ValueError):
        CategoryPriors(np.ones((5, 5)))
    d = default_priors()
    assert np.allclose(np.diag(d.affinity), 0.1) and (d.affinity >= 0).all()
    assert np.allclose(default_priors(weight=1.0).affinity, d.affinity * 10)
    again = CategoryPriors.from_config(d.to_dict())
    assert np.array_equal(again.affinity, d.affinity) and again.lam == d.lam and again.beta == d.beta


def test_goal_or_explore():
    m, agent = random_map(4)
    m.channels[4 + BED][:] = False
    cells, mode = goal_or_explore(m, agent, BED, FrontierPolicy())
    assert mode == "explore" and cells == {frontier_goal(m, agent)}
    m.channels[4 + BED][10, 12] = True
    m.channels[4 + BED][25, 30] = True
    cells, mode = goal_or_explore(m, agent, BED, FrontierPolicy())
    assert mode == "exploit"
    assert cells == {(r, c) for r in range(m.M) for c in range(m.M) if m.channels[4 + BED, r, c]}


def test_policies():
    m, agent = random_map(5)
    assert make_policy("frontier").resample_period == 1
    assert make_policy("prior").resample_period == 25
    rnd = RandomPolicy(seed=3)
    picks = {rnd.select_goal(m, agent, BED) for _ in range(10)}
    assert picks <= frontier_cells(m) and len(picks) > 1
    assert RandomPolicy(seed=3).select_goal(m, agent, BED) == RandomPolicy(seed=3).select_goal(m, agent, BED)
    p = PriorPolicy()
    assert p.select_goal(m, agent, BED) in frontier_cells(m)
    with pytest.raises(ValueError):
        make_policy("learned")
