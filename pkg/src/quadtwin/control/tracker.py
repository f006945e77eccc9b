"""Trajectory-tracking controller.

Geometric tracking on the rotation manifold with differential-flatness
feedforward: a PD law on position and velocity error produces a desired
acceleration, the desired attitude tilts the collective thrust along it,
and the body-rate setpoint combines a log-map attitude error with the
angular velocity the reference trajectory implies. The inner rate loop
lives in the vehicle simulation; this layer only emits thrust and rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import (
    GRAVITY,
    quat_conjugate,
    quat_from_matrix,
    quat_log,
    quat_multiply,
    quat_rotate,
)

_EZ = np.array([0.0, 0.0, 1.0])


class ControlFault(RuntimeError):
    """Raised when the tracker receives non-finite state or reference.

    Callers treat this as a safety trigger and demote to position hold.
    """


@dataclass(frozen=True)
class ControlGains:
    """Tracking gains. Defaults are tuned for the stock 1 kg vehicle."""

    kp: tuple[float, float, float] = (6.0, 6.0, 8.0)
    kv: tuple[float, float, float] = (4.0, 4.0, 5.0)
    kr: float = 8.0


@dataclass(frozen=True)
class VehicleParams:
    """The vehicle constants the control laws need."""

    mass_kg: float = 1.0
    gravity_mps2: float = GRAVITY
    max_thrust_n: float = 3.5 * GRAVITY

    @classmethod
    def from_config(cls, cfg) -> "VehicleParams":
        return cls(cfg.mass_kg, cfg.gravity_mps2, cfg.max_thrust_n)


@dataclass
class Setpoint:
    """Thrust and body-rate command for the vehicle's inner loops.

    ``attitude`` is the desired orientation the rates steer toward; it is
    reported for telemetry and never consumed by the vehicle.
    """

    stamp: float
    collective_thrust: float
    body_rate: np.ndarray
    attitude: np.ndarray


def _heading_frame(z_dir: np.ndarray, yaw: float) -> np.ndarray:
    """Rotation matrix with body z along z_dir and x facing yaw.

    Columns are the body axes in world coordinates. Falls back to the
    yaw-frame y axis when z_dir is parallel to the heading vector (a
    90 degree pitch), where the usual construction degenerates.
    """
    x_head = np.array([np.cos(yaw), np.sin(yaw), 0.0])
    y_raw = np.cross(z_dir, x_head)
    n = np.linalg.norm(y_raw)
    if n < 1e-6:
        y_head = np.array([-np.sin(yaw), np.cos(yaw), 0.0])
        x_raw = np.cross(y_head, z_dir)
        x_axis = x_raw / np.linalg.norm(x_raw)
        y_axis = np.cross(z_dir, x_axis)
    else:
        y_axis = y_raw / n
        x_axis = np.cross(y_axis, z_dir)
    return np.column_stack([x_axis, y_axis, z_dir])


def reference_body_rates(reference, gravity_mps2: float = GRAVITY) -> np.ndarray:
    """Body rates implied by the reference's jerk and yaw rate.

    From flatness: the thrust axis follows acceleration plus gravity, so
    its rate of change is the jerk component orthogonal to it, scaled by
    the specific thrust. Writing the frame's angular velocity as
    z x z_dot + lambda z, the heading constraint (body y stays orthogonal
    to the yaw direction) pins lambda; the result is exact for the frame
    ``_heading_frame`` builds, not a small-tilt approximation.
    """
    thrust_vec = reference.acceleration + gravity_mps2 * _EZ
    f = np.linalg.norm(thrust_vec)
    if f < 1e-9:
        # free-fall: thrust direction undefined, no feedforward
        return np.zeros(3)
    z_b = thrust_vec / f
    frame = _heading_frame(z_b, reference.yaw)
    x_b, y_b = frame[:, 0], frame[:, 1]
    z_dot = (reference.jerk - np.dot(reference.jerk, z_b) * z_b) / f

    x_head = np.array([np.cos(reference.yaw), np.sin(reference.yaw), 0.0])
    y_head = np.array([-np.sin(reference.yaw), np.cos(reference.yaw), 0.0])
    denom = np.dot(x_b, x_head)
    if abs(denom) < 1e-6:
        # heading nearly parallel to the thrust axis; twist is ill-defined
        twist = reference.yaw_rate * z_b[2]
    else:
        twist = (
            reference.yaw_rate * np.dot(y_b, y_head)
            + np.dot(np.cross(z_b, z_dot), np.cross(y_b, x_head))
        ) / denom
    return np.array([-np.dot(z_dot, y_b), np.dot(z_dot, x_b), twist])


def track(reference, state, gains: ControlGains | None = None,
          vehicle: VehicleParams | None = None) -> Setpoint:
    """One tick of the tracking law.

    ``state`` needs position, velocity, and attitude attributes; both the
    simulator's ground-truth state and the estimator's navigation state
    satisfy that. Thrust is clamped to the actuator range after the law
    runs, so the returned setpoint is always feasible.
    """
    gains = gains or ControlGains()
    vehicle = vehicle or VehicleParams()

    fields = (
        reference.position, reference.velocity, reference.acceleration,
        reference.jerk, (reference.yaw, reference.yaw_rate),
        state.position, state.velocity, state.attitude,
    )
    if not all(np.all(np.isfinite(f)) for f in fields):
        raise ControlFault("non-finite tracking input")

    kp = np.asarray(gains.kp)
    kv = np.asarray(gains.kv)
    accel_des = (
        reference.acceleration
        + kp * (reference.position - state.position)
        + kv * (reference.velocity - state.velocity)
        + vehicle.gravity_mps2 * _EZ
    )

    z_body = quat_rotate(state.attitude, _EZ)
    thrust = vehicle.mass_kg * float(np.dot(accel_des, z_body))
    thrust = float(np.clip(thrust, 0.0, vehicle.max_thrust_n))

    norm = np.linalg.norm(accel_des)
    z_des = accel_des / norm if norm > 1e-9 else _EZ
    q_des = quat_from_matrix(_heading_frame(z_des, reference.yaw))

    q_err = quat_multiply(quat_conjugate(state.attitude), q_des)
    if q_err[0] < 0.0:
        q_err = -q_err  # shortest rotation
    rate_sp = gains.kr * quat_log(q_err)
    rate_sp += reference_body_rates(reference, vehicle.gravity_mps2)

    return Setpoint(
        stamp=reference.t,
        collective_thrust=thrust,
        body_rate=rate_sp,
        attitude=q_des,
    )


def hold_reference(position: np.ndarray, yaw: float, t: float):
    """Reference sample for holding still at a point."""
    from ..planning.minsnap import ReferenceSample

    return ReferenceSample(
        t=t,
        position=np.asarray(position, dtype=float).copy(),
        velocity=np.zeros(3),
        acceleration=np.zeros(3),
        jerk=np.zeros(3),
        yaw=float(yaw),
        yaw_rate=0.0,
    )
