"""Binary grid dump: header, classification bytes, trailing CRC32."""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .grid import MapParams, OccupancyGrid

_MAGIC = b"QTGD"
_VERSION = 1
_HEADER = struct.Struct("<4sB3dd3I")


def save_grid_dump(grid: OccupancyGrid, path: str | Path) -> None:
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        *grid.origin,
        grid.params.voxel_size,
        *(int(d) for d in grid.dims),
    )
    payload = grid.classes.tobytes(order="C")
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    Path(path).write_bytes(header + payload + struct.pack("<I", crc))


def load_grid_dump(path: str | Path, params: MapParams | None = None) -> OccupancyGrid:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size + 4:
        raise ValueError("grid dump truncated")
    body, crc_bytes = blob[:-4], blob[-4:]
    if zlib.crc32(body) & 0xFFFFFFFF != struct.unpack("<I", crc_bytes)[0]:
        raise ValueError("grid dump CRC mismatch")
    magic, version, ox, oy, oz, voxel, nx, ny, nz = _HEADER.unpack(body[: _HEADER.size])
    if magic != _MAGIC or version != _VERSION:
        raise ValueError(f"unsupported grid dump header: {magic!r} v{version}")
    cls = np.frombuffer(body[_HEADER.size :], dtype=np.uint8)
    if len(cls) != nx * ny * nz:
        raise ValueError("grid dump payload size mismatch")
    from dataclasses import replace

    p = replace(params or MapParams(), voxel_size=voxel)
    grid = OccupancyGrid(np.array([ox, oy, oz]), np.array([nx, ny, nz]), p)
    grid.classes = cls.reshape(nx, ny, nz).copy()
    return grid
