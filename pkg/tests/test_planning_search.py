"""Path search checks against a reference Dijkstra with the same integer
edge costs (1000 / 1415 / 1733). Cost equality must be exact."""

import heapq

import numpy as np
import pytest

from _support import box_room
from quadtwin.mapping import CLASS_FREE, CLASS_OCCUPIED, CLASS_UNKNOWN, OccupancyGrid
from quadtwin.planning import find_path, traversable_mask


def dijkstra_oracle(trav, start, goal):
    """Plain heapq Dijkstra over the same traversable mask, written
    independently of the production search."""
    nx, ny, nz = trav.shape
    dist = {start: 0}
    heap = [(0, start)]
    while heap:
        d, cell = heapq.heappop(heap)
        if cell == goal:
            return d
        if d > dist.get(cell, 1 << 62):
            continue
        i, j, k = cell
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    if di == dj == dk == 0:
                        continue
                    a, b, c = i + di, j + dj, k + dk
                    if not (0 <= a < nx and 0 <= b < ny and 0 <= c < nz):
                        continue
                    if not trav[a, b, c]:
                        continue
                    # same corner-cut rule as the production search: cells the
                    # center line can brush must all be free
                    guards = []
                    if di and dj:
                        guards += [(a, j, k), (i, b, k)]
                    if di and dk:
                        guards += [(a, j, k), (i, j, c)]
                    if dj and dk:
                        guards += [(i, b, k), (i, j, c)]
                    if di and dj and dk:
                        guards += [(a, b, k), (a, j, c), (i, b, c)]
                    if any(not trav[gc] for gc in guards):
                        continue
                    w = {1: 1000, 2: 1415, 3: 1733}[abs(di) + abs(dj) + abs(dk)]
                    nd = d + w
                    if nd < dist.get((a, b, c), 1 << 62):
                        dist[(a, b, c)] = nd
                        heapq.heappush(heap, (nd, (a, b, c)))
    return None


def observed_grid(world, voxel=0.15):
    """Grid with classification set directly from world truth (free inside,
    occupied at obstacles/walls): isolates search behavior from mapping."""
    g = OccupancyGrid.for_world(world)
    _, _, occ = world.ground_truth_grid(g.params.voxel_size)
    g.classes[:] = np.where(occ, CLASS_OCCUPIED, CLASS_FREE)
    return g


def reference_world():
    return box_room(
        size=(10.0, 8.0, 3.0),
        obstacles=[
            ((3.0, 0.0, 0.0), (3.4, 5.0, 3.0)),
            ((6.0, 3.0, 0.0), (6.4, 8.0, 3.0)),
            ((4.5, 6.0, 0.0), (5.5, 6.6, 1.6)),
        ],
    )


def test_straight_corridor_path_length():
    world = box_room(size=(12.0, 2.0, 2.0))
    g = observed_grid(world)
    start = np.array([1.0, 1.0, 1.0])
    goal = np.array([11.0, 1.0, 1.0])
    plan = find_path(g, start, goal, clearance_m=0.35)
    assert plan is not None
    euclid = np.linalg.norm(goal - start)
    diag = np.sqrt(3) * g.params.voxel_size
    assert abs(plan.cost_m - euclid) <= diag + 1e-9
    # consecutive waypoints grid-adjacent
    steps = np.abs(np.diff(plan.voxel_path, axis=0))
    assert steps.max() <= 1


def test_goal_inside_obstacle_unreachable():
    world = reference_world()
    g = observed_grid(world)
    plan = find_path(g, np.array([1.0, 1.0, 1.5]), np.array([3.2, 2.0, 1.5]))
    assert plan is None


def test_unknown_blocks_traversal():
    world = box_room(size=(6.0, 2.0, 2.0))
    g = observed_grid(world)
    # curtain of unknown across the corridor
    idx = g.world_to_index(np.array([3.0, 1.0, 1.0]))[0]
    g.classes[idx[0], :, :] = CLASS_UNKNOWN
    plan = find_path(g, np.array([1.0, 1.0, 1.0]), np.array([5.0, 1.0, 1.0]))
    assert plan is None


def test_start_in_inflated_space_rejected():
    world = reference_world()
    g = observed_grid(world)
    with pytest.raises(ValueError):
        find_path(g, np.array([0.2, 0.2, 0.2]), np.array([1.5, 1.5, 1.5]))


def test_astar_cost_equals_dijkstra_on_random_pairs():
    world = reference_world()
    g = observed_grid(world)
    trav = traversable_mask(g, 0.35)
    free_cells = np.argwhere(trav)
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 50:
        s, t = free_cells[rng.integers(0, len(free_cells), 2)]
        start_m = g.index_to_center(s[None, :])[0]
        goal_m = g.index_to_center(t[None, :])[0]
        plan = find_path(g, start_m, goal_m, 0.35, trav=trav)
        oracle = dijkstra_oracle(trav, tuple(s), tuple(t))
        if plan is None:
            assert oracle is None
        else:
            assert plan.cost_units == oracle
        checked += 1


def test_waypoints_stay_in_free_inflated_space():
    world = reference_world()
    g = observed_grid(world)
    trav = traversable_mask(g, 0.35)
    plan = find_path(g, np.array([1.0, 1.0, 1.5]), np.array([9.0, 7.0, 1.5]), trav=trav)
    assert plan is not None
    for vox in plan.voxel_path:
        assert trav[tuple(vox)]
    # smoothed polyline is a subsequence that starts and ends identically
    assert np.allclose(plan.smoothed[0], plan.waypoints[0])
    assert np.allclose(plan.smoothed[-1], plan.waypoints[-1])
    assert len(plan.smoothed) <= len(plan.waypoints)


def test_smoothed_segments_have_line_of_sight():
    from quadtwin.planning.search import _line_is_free

    world = reference_world()
    g = observed_grid(world)
    trav = traversable_mask(g, 0.35)
    plan = find_path(g, np.array([1.0, 1.0, 1.5]), np.array([9.0, 7.0, 1.5]), trav=trav)
    for a, b in zip(plan.smoothed[:-1], plan.smoothed[1:]):
        assert _line_is_free(trav, g, a, b)


def test_doorway_width_passable_with_default_clearance():
    # 0.8 m door in a wall must remain passable at 0.35 m clearance
    world = box_room(
        size=(6.0, 4.0, 2.5),
        obstacles=[
            ((2.8, 0.0, 0.0), (3.2, 1.6, 2.5)),
            ((2.8, 2.4, 0.0), (3.2, 4.0, 2.5)),
        ],
    )
    g = observed_grid(world)
    plan = find_path(g, np.array([1.0, 2.0, 1.2]), np.array([5.0, 2.0, 1.2]))
    assert plan is not None
