"""Payload encodings for the telemetry topics.

Everything is little-endian fixed layout via struct; the state payload is
padded to exactly 64 bytes so its cost on the wire never varies. Commands
and acks carry a command id so delivery can be made exactly-once on top of
a lossy link.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..control import FlightMode

# wire ids for flight modes (enum values are strings internally)
MODE_WIRE_IDS: dict[FlightMode, int] = {
    FlightMode.IDLE: 0,
    FlightMode.TWIST: 1,
    FlightMode.GOAL: 2,
    FlightMode.NAVIGATION: 3,
    FlightMode.EXPLORATION: 4,
    FlightMode.HOLD: 5,
    FlightMode.LAND: 6,
}
MODE_FROM_WIRE = {v: k for k, v in MODE_WIRE_IDS.items()}

# health bit assignments inside the state payload
HEALTH_ESTIMATOR_OK = 0x01
HEALTH_BATTERY_LOW = 0x02
HEALTH_CRASHED = 0x04
HEALTH_FENCE_BREACH = 0x08
HEALTH_TWIST_STALE = 0x10

_STATE = struct.Struct("<d3f3f4fBBff6x")  # 64 bytes, 6 reserved
_COVERAGE = struct.Struct("<dddd")
_CMD_HEAD = struct.Struct("<IB")
_ACK_HEAD = struct.Struct("<IBB")

CMD_MODE = 1
CMD_GOAL = 2
CMD_TWIST = 3
CMD_BOUNDS = 4

STATE_PAYLOAD_SIZE = _STATE.size


@dataclass
class StateSample:
    stamp: float
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    mode: FlightMode = FlightMode.IDLE
    health_bits: int = HEALTH_ESTIMATOR_OK
    battery_fraction: float = 1.0
    position_sigma_m: float = 0.0


def encode_state(s: StateSample) -> bytes:
    return _STATE.pack(
        s.stamp,
        *np.asarray(s.position, dtype=np.float32),
        *np.asarray(s.velocity, dtype=np.float32),
        *np.asarray(s.attitude, dtype=np.float32),
        MODE_WIRE_IDS[s.mode],
        s.health_bits & 0xFF,
        float(s.battery_fraction),
        float(s.position_sigma_m),
    )


def decode_state(payload: bytes) -> StateSample:
    v = _STATE.unpack(payload)
    return StateSample(
        stamp=v[0],
        position=np.array(v[1:4], dtype=float),
        velocity=np.array(v[4:7], dtype=float),
        attitude=np.array(v[7:11], dtype=float),
        mode=MODE_FROM_WIRE[v[11]],
        health_bits=v[12],
        battery_fraction=v[13],
        position_sigma_m=v[14],
    )


@dataclass
class CoverageSample:
    stamp: float
    unknown: float
    free: float
    occupied: float


def encode_coverage(c: CoverageSample) -> bytes:
    return _COVERAGE.pack(c.stamp, c.unknown, c.free, c.occupied)


def decode_coverage(payload: bytes) -> CoverageSample:
    return CoverageSample(*_COVERAGE.unpack(payload))


# ---------------------------------------------------------------------------
# commands


@dataclass
class ModeCommand:
    command_id: int
    mode: FlightMode


@dataclass
class GoalCommand:
    command_id: int
    position: np.ndarray
    yaw: float = 0.0


@dataclass
class TwistWireCommand:
    command_id: int
    stamp: float
    velocity: np.ndarray
    yaw_rate: float


@dataclass
class BoundsCommand:
    command_id: int
    v_max: float
    a_max: float
    yaw_rate_max: float
    fence_lo: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fence_hi: np.ndarray = field(default_factory=lambda: np.ones(3))


Command = ModeCommand | GoalCommand | TwistWireCommand | BoundsCommand


def encode_command(cmd: Command) -> bytes:
    if isinstance(cmd, ModeCommand):
        return _CMD_HEAD.pack(cmd.command_id, CMD_MODE) + struct.pack(
            "<B", MODE_WIRE_IDS[cmd.mode]
        )
    if isinstance(cmd, GoalCommand):
        return _CMD_HEAD.pack(cmd.command_id, CMD_GOAL) + struct.pack(
            "<4d", *np.asarray(cmd.position, dtype=float), cmd.yaw
        )
    if isinstance(cmd, TwistWireCommand):
        return _CMD_HEAD.pack(cmd.command_id, CMD_TWIST) + struct.pack(
            "<5d", cmd.stamp, *np.asarray(cmd.velocity, dtype=float), cmd.yaw_rate
        )
    if isinstance(cmd, BoundsCommand):
        return _CMD_HEAD.pack(cmd.command_id, CMD_BOUNDS) + struct.pack(
            "<9d",
            cmd.v_max,
            cmd.a_max,
            cmd.yaw_rate_max,
            *np.asarray(cmd.fence_lo, dtype=float),
            *np.asarray(cmd.fence_hi, dtype=float),
        )
    raise TypeError(f"unknown command type {type(cmd).__name__}")


def decode_command(payload: bytes) -> Command:
    command_id, kind = _CMD_HEAD.unpack_from(payload)
    body = payload[_CMD_HEAD.size :]
    if kind == CMD_MODE:
        (mode_id,) = struct.unpack("<B", body)
        return ModeCommand(command_id, MODE_FROM_WIRE[mode_id])
    if kind == CMD_GOAL:
        x, y, z, yaw = struct.unpack("<4d", body)
        return GoalCommand(command_id, np.array([x, y, z]), yaw)
    if kind == CMD_TWIST:
        stamp, vx, vy, vz, yr = struct.unpack("<5d", body)
        return TwistWireCommand(command_id, stamp, np.array([vx, vy, vz]), yr)
    if kind == CMD_BOUNDS:
        v = struct.unpack("<9d", body)
        return BoundsCommand(
            command_id, v[0], v[1], v[2], np.array(v[3:6]), np.array(v[6:9])
        )
    raise ValueError(f"unknown command kind {kind}")


@dataclass
class AckMessage:
    command_id: int
    accepted: bool
    reason: str = ""


def encode_ack(a: AckMessage) -> bytes:
    reason = a.reason.encode("utf-8")[:255]
    return _ACK_HEAD.pack(a.command_id, int(a.accepted), len(reason)) + reason


def decode_ack(payload: bytes) -> AckMessage:
    command_id, accepted, n = _ACK_HEAD.unpack_from(payload)
    reason = payload[_ACK_HEAD.size : _ACK_HEAD.size + n].decode("utf-8")
    return AckMessage(command_id, bool(accepted), reason)
