"""Trajectory generation checks: boundary conditions, continuity, the
finite-difference derivative oracle, translation invariance, time dilation."""

import numpy as np
import pytest

from quadtwin.planning import (
    BoundaryState,
    MotionLimits,
    TrajectorySolveError,
    generate_trajectory,
    load_trajectory,
    save_trajectory,
)


def straight_line():
    wps = np.array([[0.0, 0.0, 1.0], [4.0, 0.0, 1.0]])
    return generate_trajectory(wps, MotionLimits(v_max=3.0, a_max=2.0))


def zigzag():
    wps = np.array(
        [
            [0.0, 0.0, 1.0],
            [2.0, 1.0, 1.2],
            [3.5, -0.5, 1.8],
            [5.0, 1.5, 1.0],
            [6.0, 0.0, 1.5],
        ]
    )
    return generate_trajectory(wps, MotionLimits(v_max=4.0, a_max=3.0))


def test_rest_to_rest_symmetry_midpoint():
    traj = straight_line()
    mid = traj.sample(traj.total_time / 2.0)
    assert np.allclose(mid.position, [2.0, 0.0, 1.0], atol=1e-8)


def test_boundary_conditions_exact():
    for traj in (straight_line(), zigzag()):
        s0 = traj.sample(0.0)
        s1 = traj.sample(traj.total_time)
        for s, endpoint in ((s0, "start"), (s1, "end")):
            assert np.all(np.abs(s.velocity) < 1e-9), endpoint
            assert np.all(np.abs(s.acceleration) < 1e-9), endpoint
            assert np.all(np.abs(s.jerk) < 1e-9), endpoint


def test_waypoints_interpolated():
    wps = np.array(
        [[0.0, 0.0, 1.0], [2.0, 1.0, 1.2], [3.5, -0.5, 1.8], [5.0, 1.5, 1.0]]
    )
    traj = generate_trajectory(wps, MotionLimits(v_max=4.0, a_max=3.0))
    knots = np.concatenate([[0.0], np.cumsum(traj.durations)])
    for t, w in zip(knots, wps):
        assert np.allclose(traj.sample(t).position, w, atol=1e-7)


def test_c3_continuity_at_knots():
    traj = zigzag()
    knots = np.cumsum(traj.durations)[:-1]
    eps = 1e-9
    for t in knots:
        a = traj.sample(t - eps)
        b = traj.sample(t + eps)
        assert np.allclose(a.position, b.position, atol=1e-6)
        assert np.allclose(a.velocity, b.velocity, atol=1e-6)
        assert np.allclose(a.acceleration, b.acceleration, atol=1e-6)
        assert np.allclose(a.jerk, b.jerk, atol=1e-5)


def test_derivatives_match_finite_differences():
    traj = zigzag()
    h = 1e-4
    rng = np.random.default_rng(3)
    for t in rng.uniform(2 * h, traj.total_time - 2 * h, 40):
        p = lambda tt: traj.sample(tt).position
        s = traj.sample(t)
        v_fd = (p(t + h) - p(t - h)) / (2 * h)
        a_fd = (p(t + h) - 2 * p(t) + p(t - h)) / (h * h)
        v_scale = max(1.0, np.linalg.norm(s.velocity))
        a_scale = max(1.0, np.linalg.norm(s.acceleration))
        assert np.linalg.norm(s.velocity - v_fd) / v_scale < 1e-4
        assert np.linalg.norm(s.acceleration - a_fd) / a_scale < 1e-3


def test_limits_respected_on_comb():
    limits = MotionLimits(v_max=2.0, a_max=1.5)
    wps = np.array([[0.0, 0.0, 1.0], [8.0, 4.0, 1.0], [16.0, 0.0, 2.0]])
    traj = generate_trajectory(wps, limits)
    vmax, amax = traj.comb_extremes()
    assert vmax <= limits.v_max * 1.001
    assert amax <= limits.a_max * 1.001


def test_translation_invariance():
    wps = np.array(
        [[0.0, 0.0, 1.0], [2.0, 1.0, 1.2], [3.5, -0.5, 1.8], [5.0, 1.5, 1.0]]
    )
    limits = MotionLimits(v_max=4.0, a_max=3.0)
    base = generate_trajectory(wps, limits)
    shift = np.array([10.0, -20.0, 5.0])
    moved = generate_trajectory(wps + shift, limits)
    assert np.allclose(base.durations, moved.durations, atol=1e-12)
    for t in np.linspace(0, base.total_time, 50):
        pa = base.sample(t).position + shift
        pb = moved.sample(t).position
        assert np.allclose(pa, pb, atol=1e-9)


def test_time_dilation_scaling():
    traj = zigzag()
    for k in (1.5, 2.0, 4.0):
        slow = traj.scaled_in_time(k)
        for frac in np.linspace(0.05, 0.95, 12):
            t = frac * traj.total_time
            a = traj.sample(t)
            b = slow.sample(t * k)
            assert np.allclose(a.position, b.position, atol=1e-9)
            rel_v = np.linalg.norm(b.velocity - a.velocity / k) / max(
                1e-12, np.linalg.norm(a.velocity) / k
            )
            rel_a = np.linalg.norm(b.acceleration - a.acceleration / (k * k)) / max(
                1e-12, np.linalg.norm(a.acceleration) / (k * k)
            )
            assert rel_v < 1e-6
            assert rel_a < 1e-6


def test_duplicate_waypoints_collapsed():
    wps = np.array(
        [[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [3.0, 0.0, 1.0], [3.0, 0.0, 1.0]]
    )
    traj = generate_trajectory(wps, MotionLimits(v_max=3.0, a_max=2.0))
    assert len(traj.durations) == 1


def test_single_waypoint_rejected():
    with pytest.raises(ValueError):
        generate_trajectory(np.array([[1.0, 1.0, 1.0]]), MotionLimits())


def test_boundary_velocity_over_limit_rejected():
    wps = np.array([[0.0, 0.0, 1.0], [4.0, 0.0, 1.0]])
    start = BoundaryState(velocity=np.array([10.0, 0.0, 0.0]))
    with pytest.raises(TrajectorySolveError):
        generate_trajectory(wps, MotionLimits(v_max=3.0, a_max=2.0), start=start)


def test_moving_boundary_conditions_honored():
    wps = np.array([[0.0, 0.0, 1.0], [4.0, 1.0, 1.5], [8.0, 0.0, 1.0]])
    start = BoundaryState(velocity=np.array([1.0, 0.5, 0.0]))
    end = BoundaryState(velocity=np.array([0.0, -1.0, 0.0]))
    traj = generate_trajectory(wps, MotionLimits(v_max=4.0, a_max=3.0), start=start, end=end)
    assert np.allclose(traj.sample(0.0).velocity, start.velocity, atol=1e-8)
    assert np.allclose(traj.sample(traj.total_time).velocity, end.velocity, atol=1e-8)
    vmax, amax = traj.comb_extremes()
    assert vmax <= 4.0 * 1.001 and amax <= 3.0 * 1.001


def test_yaw_velocity_aligned():
    wps = np.array([[0.0, 0.0, 1.0], [4.0, 4.0, 1.0]])
    traj = generate_trajectory(wps, MotionLimits(v_max=3.0, a_max=2.0))
    mid = traj.sample(traj.total_time / 2)
    assert abs(mid.yaw - np.pi / 4) < 1e-6
    assert abs(mid.yaw_rate) < 1e-6


def test_trajectory_file_round_trip(tmp_path):
    traj = zigzag()
    path = tmp_path / "traj.json"
    save_trajectory(traj, path)
    back = load_trajectory(path)
    assert np.allclose(back.durations, traj.durations)
    for t in np.linspace(0, traj.total_time, 20):
        assert np.allclose(back.sample(t).position, traj.sample(t).position, atol=1e-12)
    # schema guard
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 999}')
    with pytest.raises(ValueError):
        load_trajectory(bad)
