import numpy as np
import pytest

from quadtwin.sim import Box, WorldModel, load_world, save_world
from quadtwin.sim.world import ray_box_intersect


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        Box((0, 0, 0), (1, 0, 1))


def test_obstacle_must_fit_in_bounds():
    with pytest.raises(ValueError):
        WorldModel(bounds=Box((0, 0, 0), (5, 5, 5)), obstacles=[Box((4, 4, 4), (6, 6, 6))])


def test_occupied_at_truth_predicate():
    w = WorldModel(
        bounds=Box((0, 0, 0), (10, 10, 4)), obstacles=[Box((2, 2, 0), (3, 3, 4))]
    )
    pts = np.array(
        [
            [2.5, 2.5, 1.0],   # inside obstacle
            [5.0, 5.0, 1.0],   # free interior
            [-1.0, 5.0, 1.0],  # outside bounds
            [11.0, 5.0, 1.0],
        ]
    )
    assert list(w.occupied_at(pts)) == [True, False, True, True]


def test_ground_truth_grid_matches_center_predicate():
    w = WorldModel(
        bounds=Box((0, 0, 0), (3.0, 2.1, 1.5)), obstacles=[Box((1.0, 0.5, 0.0), (1.6, 1.2, 1.5))]
    )
    voxel = 0.3
    origin, dims, occ = w.ground_truth_grid(voxel)
    assert np.allclose(origin, np.array([0, 0, 0]) - voxel)
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                c = origin + (np.array([i, j, k]) + 0.5) * voxel
                assert occ[i, j, k] == w.occupied_at(c)[0]
    # padding voxels outside bounds are all occupied
    assert occ[0, :, :].all() and occ[-1, :, :].all()
    assert occ[:, 0, :].all() and occ[:, :, 0].all()


def test_contains_sphere():
    w = WorldModel(
        bounds=Box((0, 0, 0), (10, 10, 4)), obstacles=[Box((4, 4, 0), (5, 5, 4))]
    )
    assert w.contains_sphere(np.array([2.0, 2.0, 2.0]), 0.25)
    assert not w.contains_sphere(np.array([0.1, 2.0, 2.0]), 0.25)   # wall
    assert not w.contains_sphere(np.array([3.9, 4.5, 2.0]), 0.25)   # obstacle face
    assert not w.contains_sphere(np.array([3.9, 3.9, 2.0]), 0.25)   # obstacle corner
    assert w.contains_sphere(np.array([3.6, 3.6, 2.0]), 0.25)


def test_world_file_round_trip(tmp_path):
    w = WorldModel(
        bounds=Box((0, 0, 0), (20, 12, 4)),
        obstacles=[Box((5, 0, 0), (5.3, 7, 4)), Box((10, 5, 0), (15, 5.3, 4))],
        spawn_position=(1.0, 1.0, 1.5),
        spawn_yaw_rad=0.5,
        name="round-trip",
    )
    path = tmp_path / "w.yaml"
    save_world(w, path, sensor_config={"lidar_rate_hz": 10.0})
    w2, sensors = load_world(path)
    assert w2.name == "round-trip"
    assert np.allclose(w2.bounds.lo, w.bounds.lo)
    assert len(w2.obstacles) == 2
    assert w2.spawn_position == (1.0, 1.0, 1.5)
    assert w2.spawn_yaw_rad == 0.5
    assert sensors == {"lidar_rate_hz": 10.0}


def test_world_file_rejects_unknown_schema(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("schema_version: 99\nbounds: [[0,0,0],[1,1,1]]\n")
    with pytest.raises(ValueError):
        load_world(path)


def test_ray_box_slab_cases():
    lo, hi = np.zeros(3), np.ones(3)
    # straight through
    t0, t1 = ray_box_intersect(np.array([-1.0, 0.5, 0.5]), np.array([1.0, 0.0, 0.0]), lo, hi)
    assert (t0, t1) == (1.0, 2.0)
    # miss
    t0, t1 = ray_box_intersect(np.array([-1.0, 2.0, 0.5]), np.array([1.0, 0.0, 0.0]), lo, hi)
    assert t0 > t1
    # from inside
    t0, t1 = ray_box_intersect(np.array([0.5, 0.5, 0.5]), np.array([0.0, 0.0, 1.0]), lo, hi)
    assert t0 < 0 < t1 and abs(t1 - 0.5) < 1e-12
    # parallel outside slab
    t0, t1 = ray_box_intersect(np.array([0.5, 2.0, 0.5]), np.array([0.0, 0.0, 1.0]), lo, hi)
    assert t0 > t1
