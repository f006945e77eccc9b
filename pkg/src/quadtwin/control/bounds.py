"""Motion bounds: velocity and yaw-rate clamps plus geofence containment.

Everything the operator or autonomy asks for passes through here before
the tracker sees it, so the vehicle never receives a reference that
leaves the fence or exceeds the configured envelope.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..sim.world import Box


@dataclass(frozen=True)
class MotionBounds:
    """Operator-configurable motion envelope."""

    v_max: float = 6.0
    a_max: float = 5.0
    geofence: Box = Box((0.0, 0.0, 0.0), (10.0, 10.0, 3.0))
    yaw_rate_max: float = 1.5

    def __post_init__(self):
        if min(self.v_max, self.a_max, self.yaw_rate_max) <= 0.0:
            raise ValueError("motion bounds must be positive")

    def validate_within(self, world_bounds: Box) -> None:
        """The fence must sit inside the simulated world."""
        if np.any(self.geofence.lo < world_bounds.lo) or np.any(
            self.geofence.hi > world_bounds.hi
        ):
            raise ValueError("geofence extends outside world bounds")


@dataclass(frozen=True)
class TwistCommand:
    """Operator velocity command: world-frame velocity plus yaw rate."""

    stamp: float
    velocity: np.ndarray
    yaw_rate: float


def _scale_to(vec: np.ndarray, limit: float) -> np.ndarray:
    """Clamp a vector's norm, preserving direction."""
    n = np.linalg.norm(vec)
    if n <= limit or n == 0.0:
        return np.asarray(vec, dtype=float)
    return vec * (limit / n)


def clamp_twist(cmd: TwistCommand, bounds: MotionBounds) -> TwistCommand:
    return replace(
        cmd,
        velocity=_scale_to(np.asarray(cmd.velocity, dtype=float), bounds.v_max),
        yaw_rate=float(np.clip(cmd.yaw_rate, -bounds.yaw_rate_max, bounds.yaw_rate_max)),
    )


def project_goal(goal: np.ndarray, bounds: MotionBounds, clearance_m: float = 0.35) -> np.ndarray:
    """Nearest point to the goal inside the fence shrunk by clearance.

    For an axis-aligned fence that nearest point is the per-axis clip.
    Raises if the clearance swallows the fence entirely.
    """
    lo = bounds.geofence.lo + clearance_m
    hi = bounds.geofence.hi - clearance_m
    if np.any(lo > hi):
        raise ValueError("clearance larger than geofence")
    return np.clip(np.asarray(goal, dtype=float), lo, hi)


def bound_reference(ref, bounds: MotionBounds):
    """Clamp a reference sample to the motion envelope and the fence.

    Velocity and acceleration are radially clamped. If the sample sits
    outside the fence, or braking at a_max from its velocity would end
    outside, the sample is replaced by a zero-velocity hold at the fence
    boundary along the offending direction.
    """
    velocity = _scale_to(np.asarray(ref.velocity, dtype=float), bounds.v_max)
    acceleration = _scale_to(np.asarray(ref.acceleration, dtype=float), bounds.a_max)
    yaw_rate = float(np.clip(ref.yaw_rate, -bounds.yaw_rate_max, bounds.yaw_rate_max))

    position = np.asarray(ref.position, dtype=float)
    speed = np.linalg.norm(velocity)
    stop_point = position
    if speed > 0.0:
        stop_point = position + velocity * (speed / (2.0 * bounds.a_max))

    lo, hi = bounds.geofence.lo, bounds.geofence.hi
    inside_now = bool(np.all(position >= lo) and np.all(position <= hi))
    stops_inside = bool(np.all(stop_point >= lo) and np.all(stop_point <= hi))
    if inside_now and stops_inside:
        return replace(
            ref, velocity=velocity, acceleration=acceleration, yaw_rate=yaw_rate
        )

    hold_at = np.clip(stop_point if inside_now else position, lo, hi)
    return replace(
        ref,
        position=hold_at,
        velocity=np.zeros(3),
        acceleration=np.zeros(3),
        jerk=np.zeros(3),
        yaw_rate=0.0,
    )


def twist_reference(position: np.ndarray, yaw: float, cmd: TwistCommand, t: float):
    """Reference sample tracking a twist command.

    Position is pinned to the vehicle's own position so only the velocity
    error drives the tracker; yaw integration is the caller's job.
    """
    from ..planning.minsnap import ReferenceSample

    return ReferenceSample(
        t=t,
        position=np.asarray(position, dtype=float).copy(),
        velocity=np.asarray(cmd.velocity, dtype=float).copy(),
        acceleration=np.zeros(3),
        jerk=np.zeros(3),
        yaw=float(yaw),
        yaw_rate=float(cmd.yaw_rate),
    )
