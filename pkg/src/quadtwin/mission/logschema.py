"""Log topic layout for mission recordings.

Wire topics (ids 1..8) are logged as complete encoded frames so a replay
can feed them straight back through a telemetry receiver. Topics 16+ are
log-only series the analysis needs at full rate and full precision.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

TOPIC_TRUE_STATE = 16
TOPIC_ESTIMATE = 17
TOPIC_REFERENCE = 18

_POSE = struct.Struct("<d3d3dd")


@dataclass(frozen=True)
class PoseRecord:
    stamp: float
    position: tuple[float, float, float]
    velocity: tuple[float, float, float]
    yaw: float

    def encode(self) -> bytes:
        return _POSE.pack(self.stamp, *self.position, *self.velocity, self.yaw)

    @classmethod
    def decode(cls, raw: bytes) -> "PoseRecord":
        vals = _POSE.unpack(raw)
        return cls(vals[0], vals[1:4], vals[4:7], vals[7])


def pose_series(records: list[PoseRecord]) -> tuple[np.ndarray, np.ndarray]:
    """(stamps, positions) arrays from decoded pose records."""
    stamps = np.array([r.stamp for r in records], dtype=float)
    pos = np.array([r.position for r in records], dtype=float)
    return stamps, pos
