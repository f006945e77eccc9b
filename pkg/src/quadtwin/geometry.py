"""Quaternion and SO(3)/SE(3) helpers shared across the stack.

Quaternions are stored as (w, x, y, z) numpy arrays and always map body to
world. Rotation increments use the tangent-space exponential/logarithm so
attitude math stays on the manifold.
"""

from __future__ import annotations

import numpy as np

GRAVITY = 9.80665  # m/s^2, standard gravity


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero-norm quaternion")
    q = q / n
    # fix the double-cover sign so traces are reproducible
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a: np.ndarray, b: np.ndarray, normalize: bool = False) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    out = np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )
    return quat_normalize(out) if normalize else out


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Rotate vector v by quaternion q (body -> world for attitude quats).

    With inverse=True the conjugate rotation is applied (world -> body).
    """
    qv = -q[1:] if inverse else q[1:]
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Shepperd's method; numerically stable for all rotation matrices."""
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def quat_exp(rotvec: np.ndarray) -> np.ndarray:
    """Quaternion exponential of a rotation vector (axis * angle)."""
    angle = np.linalg.norm(rotvec)
    if angle < 1e-12:
        # second-order series keeps unit norm to machine precision
        half = 0.5 * rotvec
        return quat_normalize(np.array([1.0, half[0], half[1], half[2]]))
    axis = rotvec / angle
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_log(q: np.ndarray) -> np.ndarray:
    """Rotation vector of a unit quaternion (inverse of quat_exp)."""
    q = quat_normalize(q)
    vn = np.linalg.norm(q[1:])
    if vn < 1e-12:
        return 2.0 * q[1:]
    angle = 2.0 * np.arctan2(vn, q[0])
    return q[1:] * (angle / vn)


def hat(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def so3_exp(rotvec: np.ndarray) -> np.ndarray:
    """Rodrigues formula: rotation matrix of a rotation vector."""
    angle = np.linalg.norm(rotvec)
    if angle < 1e-12:
        return np.eye(3) + hat(rotvec)
    axis = rotvec / angle
    k = hat(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def so3_log(m: np.ndarray) -> np.ndarray:
    """Rotation vector of a rotation matrix (inverse of so3_exp)."""
    return quat_log(quat_from_matrix(m))


def yaw_of(q: np.ndarray) -> float:
    """Heading angle of the body x axis projected on the world x-y plane."""
    xb = quat_rotate(q, np.array([1.0, 0.0, 0.0]))
    return float(np.arctan2(xb[1], xb[0]))


def quat_from_yaw(yaw: float) -> np.ndarray:
    return np.array([np.cos(0.5 * yaw), 0.0, 0.0, np.sin(0.5 * yaw)])


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = (a + np.pi) % (2.0 * np.pi) - np.pi
    return float(np.pi if a == -np.pi else a)


class SE3:
    """Rigid transform (rotation matrix + translation), world-frame algebra."""

    __slots__ = ("rot", "trans")

    def __init__(self, rot: np.ndarray | None = None, trans: np.ndarray | None = None):
        self.rot = np.eye(3) if rot is None else np.asarray(rot, dtype=float)
        self.trans = np.zeros(3) if trans is None else np.asarray(trans, dtype=float)

    @classmethod
    def from_quat_pos(cls, q: np.ndarray, p: np.ndarray) -> "SE3":
        return cls(quat_to_matrix(q), np.asarray(p, dtype=float))

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.rot.T + self.trans

    def compose(self, other: "SE3") -> "SE3":
        return SE3(self.rot @ other.rot, self.rot @ other.trans + self.trans)

    def inverse(self) -> "SE3":
        rt = self.rot.T
        return SE3(rt, -rt @ self.trans)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rot
        m[:3, 3] = self.trans
        return m
