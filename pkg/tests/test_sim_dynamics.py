"""Vehicle integrator checks against an independent RK4 oracle.

The oracle integrates the same continuous model (first-order rate loop,
quaternion kinematics, thrust/gravity/drag point mass) with classical RK4 and
was written before the production stepper, from the model equations alone.
"""

import numpy as np
import pytest

from _support import box_room, quiet_config
from quadtwin.geometry import GRAVITY, quat_multiply, quat_normalize, quat_rotate
from quadtwin.sim import (
    ActuatorCommand,
    SimConfig,
    SimulationFault,
    VehicleState,
    hover_command,
    step,
)


def rk4_oracle(state: VehicleState, cmd: ActuatorCommand, cfg: SimConfig, h: float):
    """One classical RK4 step of the continuous vehicle ODE."""

    def deriv(y):
        p, v, q, w = y[:3], y[3:6], y[6:10], y[10:13]
        qn = q / np.linalg.norm(q)
        thrust_dir = quat_rotate(qn, np.array([0.0, 0.0, 1.0]))
        acc = (cmd.collective_thrust / cfg.mass_kg) * thrust_dir
        acc = acc - np.array([0.0, 0.0, cfg.gravity_mps2])
        acc = acc - (cfg.drag_coeff / cfg.mass_kg) * v
        dq = 0.5 * quat_multiply(q, np.array([0.0, *w]), normalize=False)
        dw = (cmd.body_rate_setpoint - w) / cfg.rate_loop_tau_s
        return np.concatenate([v, acc, dq, dw])

    y0 = np.concatenate([state.position, state.velocity, state.attitude, state.body_rate])
    k1 = deriv(y0)
    k2 = deriv(y0 + 0.5 * h * k1)
    k3 = deriv(y0 + 0.5 * h * k2)
    k4 = deriv(y0 + h * k3)
    y = y0 + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return VehicleState(
        t=state.t + h,
        position=y[:3],
        velocity=y[3:6],
        attitude=quat_normalize(y[6:10]),
        body_rate=y[10:13],
    )


def big_room():
    return box_room(size=(200.0, 200.0, 200.0))


def centered_state():
    return VehicleState(position=np.array([100.0, 100.0, 100.0]))


def test_hover_position_fixed():
    cfg = quiet_config()
    world = big_room()
    s = centered_state()
    cmd = hover_command(cfg)
    s1 = step(world, s, cmd, cfg)
    assert np.all(np.abs(s1.position - s.position) < 1e-9)
    assert np.all(np.abs(s1.velocity) < 1e-9)


def test_free_fall_first_step_velocity():
    cfg = quiet_config()
    world = big_room()
    s = centered_state()
    cmd = ActuatorCommand(0.0, 0.0, np.zeros(3))
    s1 = step(world, s, cmd, cfg)
    assert abs(s1.velocity[2] + cfg.gravity_mps2 * cfg.timestep_s) < 1e-12


def test_against_rk4_oracle_single_step():
    # smooth input: steady coordinated rotation (rate loop at equilibrium),
    # slight excess thrust, linear drag -> all derivatives mild and smooth
    cfg = quiet_config(timestep_s=0.001, drag_coeff=0.1)
    world = big_room()
    rates = np.array([0.2, 0.1, 0.3])
    cmd = ActuatorCommand(0.0, 1.05 * cfg.hover_thrust_n, rates)
    s = centered_state()
    s.velocity = np.array([0.5, -0.3, 0.2])
    s.body_rate = rates.copy()

    fine = s.copy()
    for _ in range(100):
        fine = step(world, fine, cmd, cfg)
    coarse = rk4_oracle(s, cmd, cfg, 0.1)
    assert np.all(np.abs(fine.position - coarse.position) < 1e-5)


def test_against_rk4_oracle_with_rate_transient():
    # harder case: rate loop far from equilibrium; match against many small
    # oracle steps since one 0.1 s RK4 step cannot follow a 0.05 s lag
    cfg = quiet_config(timestep_s=0.001, drag_coeff=0.05)
    world = big_room()
    cmd = ActuatorCommand(0.0, 1.1 * cfg.hover_thrust_n, np.array([0.8, -0.5, 0.4]))
    s = centered_state()
    s.velocity = np.array([1.0, 0.5, -0.2])

    fine = s.copy()
    oracle = s.copy()
    for _ in range(100):
        fine = step(world, fine, cmd, cfg)
        oracle = rk4_oracle(oracle, cmd, cfg, 0.001)
    assert np.all(np.abs(fine.position - oracle.position) < 1e-5)
    assert np.all(np.abs(fine.velocity - oracle.velocity) < 1e-5)
    assert np.all(np.abs(fine.body_rate - oracle.body_rate) < 1e-6)


def test_energy_conserved_in_free_fall():
    cfg = quiet_config(timestep_s=0.001, drag_coeff=0.0)
    world = big_room()
    s = centered_state()
    s.velocity = np.array([2.0, -1.0, 1.5])
    cmd = ActuatorCommand(0.0, 0.0, np.zeros(3))

    def energy(st):
        ke = 0.5 * cfg.mass_kg * float(st.velocity @ st.velocity)
        pe = cfg.mass_kg * cfg.gravity_mps2 * st.position[2]
        return ke + pe

    e0 = energy(s)
    for _ in range(1000):
        s = step(world, s, cmd, cfg)
    assert abs(energy(s) - e0) / abs(e0) < 1e-6


def test_quaternion_norm_preserved():
    cfg = quiet_config()
    world = big_room()
    s = centered_state()
    rng = np.random.default_rng(11)
    for _ in range(1000):
        cmd = ActuatorCommand(
            s.t, rng.uniform(0, cfg.max_thrust_n), rng.uniform(-3, 3, 3)
        )
        s = step(world, s, cmd, cfg)
        assert abs(np.linalg.norm(s.attitude) - 1.0) < 1e-9
        if s.crashed:
            break


def test_thrust_clamped_to_actuator_limits():
    cfg = quiet_config()
    world = big_room()
    s = centered_state()
    cmd = ActuatorCommand(0.0, 10.0 * cfg.max_thrust_n, np.zeros(3))
    s1 = step(world, s, cmd, cfg)
    max_acc = cfg.max_thrust_n / cfg.mass_kg - cfg.gravity_mps2
    assert s1.velocity[2] <= max_acc * cfg.timestep_s + 1e-12


def test_crash_latches_and_freezes():
    cfg = quiet_config()
    world = box_room(size=(10.0, 10.0, 4.0))
    s = VehicleState(position=np.array([5.0, 5.0, 2.0]))
    s.velocity = np.array([50.0, 0.0, 0.0])  # straight at the wall
    cmd = hover_command(cfg)
    crashed_at = None
    for _ in range(400):
        s = step(world, s, cmd, cfg)
        if s.crashed:
            crashed_at = s.copy()
            break
    assert crashed_at is not None
    later = step(world, crashed_at, hover_command(cfg, crashed_at.t), cfg)
    assert later.crashed
    assert np.array_equal(later.position, crashed_at.position)
    assert np.all(later.velocity == 0.0)
    assert later.t > crashed_at.t


def test_nonfinite_state_faults():
    cfg = quiet_config()
    world = big_room()
    s = centered_state()
    s.velocity = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(SimulationFault):
        step(world, s, hover_command(cfg), cfg)


def test_deterministic_state_trace():
    cfg = quiet_config()
    world = box_room()
    rng_cmds = np.random.default_rng(99)
    cmds = [
        ActuatorCommand(i * cfg.timestep_s, rng_cmds.uniform(5, 15), rng_cmds.uniform(-1, 1, 3))
        for i in range(500)
    ]

    def run():
        s = VehicleState(position=np.array([5.0, 5.0, 2.0]))
        out = []
        for cmd in cmds:
            s = step(world, s, cmd, cfg)
            out.append(np.concatenate([s.position, s.velocity, s.attitude, s.body_rate]))
        return np.asarray(out)

    a, b = run(), run()
    assert a.tobytes() == b.tobytes()


def test_twr_default_matches_design():
    cfg = SimConfig()
    assert abs(cfg.max_thrust_n / (cfg.mass_kg * GRAVITY) - 3.5) < 1e-12
