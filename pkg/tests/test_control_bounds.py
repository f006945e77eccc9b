"""Motion envelope clamps and geofence containment."""

import numpy as np
import pytest

from quadtwin.control import (
    MotionBounds,
    TwistCommand,
    bound_reference,
    clamp_twist,
    hold_reference,
    project_goal,
)
from quadtwin.planning.minsnap import ReferenceSample
from quadtwin.sim import Box

FENCE = Box((0.0, 0.0, 0.0), (10.0, 10.0, 3.0))
BOUNDS = MotionBounds(v_max=6.0, a_max=5.0, geofence=FENCE, yaw_rate_max=1.5)


def test_fast_twist_clamped_radially():
    v = np.array([8.0, 0.0, 0.0])
    out = clamp_twist(TwistCommand(0.0, v, 0.0), BOUNDS)
    assert np.allclose(out.velocity, [6.0, 0.0, 0.0])
    # direction preserved on a diagonal command too
    v = np.array([6.0, 8.0, 0.0])
    out = clamp_twist(TwistCommand(0.0, v, 0.0), BOUNDS)
    assert np.linalg.norm(out.velocity) == pytest.approx(6.0)
    assert np.allclose(out.velocity / np.linalg.norm(out.velocity), v / 10.0)


def test_twist_inside_bounds_unchanged():
    cmd = TwistCommand(0.0, np.array([1.0, -2.0, 0.5]), 0.4)
    out = clamp_twist(cmd, BOUNDS)
    assert np.allclose(out.velocity, cmd.velocity)
    assert out.yaw_rate == cmd.yaw_rate


def test_yaw_rate_clamped_both_signs():
    assert clamp_twist(TwistCommand(0.0, np.zeros(3), 3.0), BOUNDS).yaw_rate == 1.5
    assert clamp_twist(TwistCommand(0.0, np.zeros(3), -3.0), BOUNDS).yaw_rate == -1.5


def test_goal_projection_matches_nearest_in_fence_point():
    rng = np.random.default_rng(17)
    clearance = 0.35
    lo = FENCE.lo + clearance
    hi = FENCE.hi - clearance
    for _ in range(50):
        goal = rng.uniform(-5.0, 15.0, size=3)
        proj = project_goal(goal, BOUNDS, clearance)
        assert np.all(proj >= lo - 1e-12) and np.all(proj <= hi + 1e-12)
        # no sampled admissible point beats the projection
        d_proj = np.linalg.norm(proj - goal)
        samples = rng.uniform(lo, hi, size=(200, 3))
        d_samples = np.linalg.norm(samples - goal, axis=1)
        assert np.all(d_samples >= d_proj - 1e-12)


def test_goal_inside_shrunk_fence_unchanged():
    goal = np.array([5.0, 5.0, 1.5])
    assert np.allclose(project_goal(goal, BOUNDS), goal)


def test_degenerate_clearance_rejected():
    with pytest.raises(ValueError):
        project_goal(np.zeros(3), BOUNDS, clearance_m=2.0)


def test_reference_inside_envelope_passes_through():
    ref = ReferenceSample(
        0.0, np.array([5.0, 5.0, 1.5]), np.array([2.0, 0.0, 0.0]),
        np.array([1.0, 0.0, 0.0]), np.zeros(3), 0.3, 0.2,
    )
    out = bound_reference(ref, BOUNDS)
    assert np.allclose(out.position, ref.position)
    assert np.allclose(out.velocity, ref.velocity)
    assert np.allclose(out.acceleration, ref.acceleration)
    assert out.yaw_rate == ref.yaw_rate


def test_reference_speed_and_accel_clamped():
    ref = ReferenceSample(
        0.0, np.array([5.0, 5.0, 1.5]), np.array([0.0, 9.0, 0.0]),
        np.array([0.0, 0.0, -12.0]), np.zeros(3), 0.0, 2.4,
    )
    out = bound_reference(ref, BOUNDS)
    assert np.linalg.norm(out.velocity) == pytest.approx(6.0)
    assert out.velocity[1] > 0
    assert np.linalg.norm(out.acceleration) == pytest.approx(5.0)
    assert out.yaw_rate == 1.5


def test_reference_outside_fence_becomes_boundary_hold():
    ref = hold_reference([12.0, 5.0, 1.5], 0.7, 0.0)
    out = bound_reference(ref, BOUNDS)
    assert np.allclose(out.position, [10.0, 5.0, 1.5])
    assert np.all(out.velocity == 0.0) and np.all(out.acceleration == 0.0)
    assert out.yaw == 0.7 and out.yaw_rate == 0.0


def test_heading_out_near_fence_stops_at_boundary():
    # 6 m/s toward the wall from 1 m away: braking at a_max needs 3.6 m
    ref = ReferenceSample(
        0.0, np.array([9.0, 5.0, 1.5]), np.array([6.0, 0.0, 0.0]),
        np.zeros(3), np.zeros(3), 0.0, 0.0,
    )
    out = bound_reference(ref, BOUNDS)
    assert np.all(out.velocity == 0.0)
    assert out.position[0] == pytest.approx(10.0)
    assert out.position[1:] == pytest.approx([5.0, 1.5])


def test_fence_parallel_flight_not_held():
    ref = ReferenceSample(
        0.0, np.array([9.5, 5.0, 1.5]), np.array([0.0, 5.0, 0.0]),
        np.zeros(3), np.zeros(3), 0.0, 0.0,
    )
    out = bound_reference(ref, BOUNDS)
    assert np.allclose(out.velocity, ref.velocity)
    assert np.allclose(out.position, ref.position)


def test_bounds_validation():
    with pytest.raises(ValueError):
        MotionBounds(v_max=-1.0)
    world = Box((0.0, 0.0, 0.0), (10.0, 10.0, 3.0))
    BOUNDS.validate_within(world)
    small_world = Box((0.0, 0.0, 0.0), (8.0, 10.0, 3.0))
    with pytest.raises(ValueError):
        BOUNDS.validate_within(small_world)
