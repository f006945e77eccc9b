"""Rigid-body vehicle dynamics: point mass plus attitude with a first-order
body-rate tracking loop standing in for the flight controller's inner loop.

The continuous model is

    d(rate)/dt     = (rate_setpoint - rate) / tau
    d(attitude)/dt = 0.5 * attitude * (0, rate)
    d(velocity)/dt = (thrust/m) * R(attitude) e_z - g e_z - (c/m) velocity
    d(position)/dt = velocity

One fixed step advances the rate loop with its exact exponential solution,
rotates the attitude by the exact integral of the rate over the step, and
integrates velocity/position with a trapezoidal update (second order, exact
for constant acceleration, so free fall conserves energy to rounding). The
quaternion is renormalized every step. Collision of the vehicle sphere with
any obstacle or the world bounds latches a crash flag and freezes the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import quat_exp, quat_multiply, quat_normalize, quat_rotate
from .config import SimConfig
from .world import WorldModel


@dataclass
class VehicleState:
    t: float = 0.0
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    body_rate: np.ndarray = field(default_factory=lambda: np.zeros(3))
    crashed: bool = False

    def copy(self) -> "VehicleState":
        return VehicleState(
            t=self.t,
            position=self.position.copy(),
            velocity=self.velocity.copy(),
            attitude=self.attitude.copy(),
            body_rate=self.body_rate.copy(),
            crashed=self.crashed,
        )

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.t)
            and np.all(np.isfinite(self.position))
            and np.all(np.isfinite(self.velocity))
            and np.all(np.isfinite(self.attitude))
            and np.all(np.isfinite(self.body_rate))
        )


@dataclass
class ActuatorCommand:
    stamp: float
    collective_thrust: float          # newtons along body +z
    body_rate_setpoint: np.ndarray    # rad/s, body frame

    def clamped(self, cfg: SimConfig) -> "ActuatorCommand":
        return replace(
            self, collective_thrust=float(np.clip(self.collective_thrust, 0.0, cfg.max_thrust_n))
        )


def hover_command(cfg: SimConfig, stamp: float = 0.0) -> ActuatorCommand:
    return ActuatorCommand(stamp, cfg.hover_thrust_n, np.zeros(3))


class SimulationFault(RuntimeError):
    """Hard fault: the simulation state became non-finite."""


def acceleration_world(
    attitude: np.ndarray, velocity: np.ndarray, thrust_n: float, cfg: SimConfig
) -> np.ndarray:
    """Translational acceleration: body-z thrust, gravity, optional linear drag."""
    thrust_dir = quat_rotate(attitude, np.array([0.0, 0.0, 1.0]))
    acc = (thrust_n / cfg.mass_kg) * thrust_dir
    acc[2] -= cfg.gravity_mps2
    if cfg.drag_coeff != 0.0:
        acc = acc - (cfg.drag_coeff / cfg.mass_kg) * velocity
    return acc


def step(
    world: WorldModel, state: VehicleState, cmd: ActuatorCommand, cfg: SimConfig
) -> VehicleState:
    """Advance one fixed physics step of cfg.timestep_s."""
    if not state.is_finite():
        raise SimulationFault(f"non-finite vehicle state at t={state.t}")
    if state.crashed:
        out = state.copy()
        out.t = state.t + cfg.timestep_s
        return out

    cmd = cmd.clamped(cfg)
    dt = cfg.timestep_s
    tau = cfg.rate_loop_tau_s

    # rate loop: exact solution of the first-order lag over the step
    decay = np.exp(-dt / tau)
    rate = cmd.body_rate_setpoint + (state.body_rate - cmd.body_rate_setpoint) * decay
    # exact integral of the rate over the step rotates the attitude
    dtheta = cmd.body_rate_setpoint * dt + (
        state.body_rate - cmd.body_rate_setpoint
    ) * tau * (1.0 - decay)
    attitude = quat_normalize(quat_multiply(state.attitude, quat_exp(dtheta)))

    a0 = acceleration_world(state.attitude, state.velocity, cmd.collective_thrust, cfg)
    v_pred = state.velocity + a0 * dt
    a1 = acceleration_world(attitude, v_pred, cmd.collective_thrust, cfg)
    velocity = state.velocity + 0.5 * (a0 + a1) * dt
    position = state.position + 0.5 * (state.velocity + velocity) * dt

    out = VehicleState(
        t=state.t + dt,
        position=position,
        velocity=velocity,
        attitude=attitude,
        body_rate=rate,
        crashed=False,
    )
    if not world.contains_sphere(position, cfg.collision_radius_m):
        out.crashed = True
        out.position = state.position.copy()
        out.velocity = np.zeros(3)
        out.body_rate = np.zeros(3)
        out.attitude = state.attitude.copy()
    return out
