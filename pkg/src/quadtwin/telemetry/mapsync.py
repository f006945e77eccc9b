"""Occupancy-map synchronization over the telemetry channel.

The sender ships run-length classification deltas, coalesced so the last
value per voxel wins while the channel is saturated. A periodic keyframe
(a full run-length snapshot of the classification grid, split into chunks
that fit the frame payload limit) bounds how long a receiver that lost
deltas stays divergent: once any keyframe arrives complete, applying the
deltas that follow it reproduces the sender grid byte for byte.

Epoch numbering ties the two together: every keyframe starts a new epoch
and deltas carry the epoch they belong to. A mirror buffers deltas for an
epoch whose keyframe is still incomplete and applies them the moment it
completes, so chunk and delta arrival may interleave.
"""

from __future__ import annotations

import struct

import numpy as np

from .framing import FRAME_OVERHEAD, MAX_PAYLOAD

_DELTA_HEAD = struct.Struct("<IH")      # epoch, run count
_DELTA_RUN = struct.Struct("<IHB")      # start voxel, length, class
_KEY_HEAD = struct.Struct("<IHH3Hd3d")  # epoch, chunk, chunks, dims, voxel, origin
_KEY_RUN = struct.Struct("<BI")         # class, run length

MAX_DELTA_RUNS = (MAX_PAYLOAD - _DELTA_HEAD.size) // _DELTA_RUN.size

# keyframe chunks stay well under the per-second map byte budget so a chunk
# is always affordable; smaller chunks also survive frame loss better
KEY_CHUNK_PAYLOAD = 16 * 1024


def rle_encode(flat: np.ndarray) -> list[tuple[int, int]]:
    """(value, run length) pairs covering the array in order."""
    n = len(flat)
    if n == 0:
        return []
    breaks = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [n]))
    return [(int(flat[s]), int(e - s)) for s, e in zip(starts, ends)]


def encode_delta_payload(epoch: int, runs: list[tuple[int, int, int]]) -> bytes:
    out = bytearray(_DELTA_HEAD.pack(epoch, len(runs)))
    for start, length, cls in runs:
        out += _DELTA_RUN.pack(start, length, cls)
    return bytes(out)


def decode_delta_payload(payload: bytes) -> tuple[int, list[tuple[int, int, int]]]:
    epoch, count = _DELTA_HEAD.unpack_from(payload)
    runs = []
    off = _DELTA_HEAD.size
    for _ in range(count):
        runs.append(_DELTA_RUN.unpack_from(payload, off))
        off += _DELTA_RUN.size
    return epoch, runs


class MapPublisher:
    """Sender side: coalesces voxel changes and paces keyframes.

    Feed `note_changes` with the (i, j, k, class) rows the grid reports per
    scan; call `next_payload` whenever the channel has budget. Keyframe
    chunks are produced before any deltas of their epoch so an in-order
    receiver always has the base state first.
    """

    def __init__(self, grid, keyframe_interval_s: float = 30.0):
        self.grid = grid
        self.keyframe_interval_s = keyframe_interval_s
        self.epoch = 0
        self._pending: dict[int, int] = {}
        self._key_chunks: list[bytes] = []
        self._last_keyframe_t: float | None = None
        self._nynz = int(grid.dims[1]) * int(grid.dims[2])
        self._nz = int(grid.dims[2])
        self.coalesced_changes = 0

    def note_changes(self, changed: np.ndarray) -> None:
        for i, j, k, cls in np.asarray(changed, dtype=np.int64):
            flat = int(i) * self._nynz + int(j) * self._nz + int(k)
            if flat in self._pending:
                self.coalesced_changes += 1
            self._pending[flat] = int(cls)

    def request_keyframe(self) -> None:
        self._last_keyframe_t = None

    def _keyframe_due(self, now: float) -> bool:
        return (
            self._last_keyframe_t is None
            or now - self._last_keyframe_t >= self.keyframe_interval_s
        )

    def _start_keyframe(self, now: float) -> None:
        self.epoch += 1
        self._last_keyframe_t = now
        # the snapshot subsumes anything still pending
        self._pending.clear()
        flat = np.asarray(self.grid.classes, dtype=np.uint8).reshape(-1)
        runs = rle_encode(flat)
        per_chunk = (KEY_CHUNK_PAYLOAD - _KEY_HEAD.size) // _KEY_RUN.size
        groups = [runs[i : i + per_chunk] for i in range(0, len(runs), per_chunk)] or [[]]
        dims = [int(d) for d in self.grid.dims]
        self._key_chunks = []
        for ci, group in enumerate(groups):
            head = _KEY_HEAD.pack(
                self.epoch,
                ci,
                len(groups),
                *dims,
                float(self.grid.params.voxel_size),
                *np.asarray(self.grid.origin, dtype=float),
            )
            body = b"".join(_KEY_RUN.pack(cls, n) for cls, n in group)
            self._key_chunks.append(head + body)

    def _delta_runs(self, limit: int) -> list[tuple[int, int, int]]:
        items = sorted(self._pending.items())
        runs: list[list[int]] = []
        for flat, cls in items:
            if (
                runs
                and flat == runs[-1][0] + runs[-1][1]
                and cls == runs[-1][2]
                and runs[-1][1] < 0xFFFF
            ):
                runs[-1][1] += 1
            else:
                if len(runs) == limit:
                    break
                runs.append([flat, 1, cls])
        emitted = [(r[0], r[1], r[2]) for r in runs]
        for start, length, _ in emitted:
            for f in range(start, start + length):
                self._pending.pop(f, None)
        return emitted

    def next_payload(self, now: float, max_bytes: int = MAX_PAYLOAD) -> tuple[bytes, bool] | None:
        """Next map frame payload within the byte allowance, if any.

        Returns (payload, is_keyframe_chunk) or None when nothing is due.
        """
        if not self._key_chunks and self._keyframe_due(now):
            self._start_keyframe(now)
        if self._key_chunks:
            if len(self._key_chunks[0]) > max_bytes:
                return None  # budget too small right now, keep ordering
            return self._key_chunks.pop(0), True
        if not self._pending:
            return None
        limit = min(MAX_DELTA_RUNS, (max_bytes - _DELTA_HEAD.size) // _DELTA_RUN.size)
        if limit <= 0:
            return None
        runs = self._delta_runs(limit)
        if not runs:
            return None
        return encode_delta_payload(self.epoch, runs), False

    @property
    def idle(self) -> bool:
        return not self._pending and not self._key_chunks


class MapMirror:
    """Receiver side: reconstructs the classification grid."""

    def __init__(self):
        self.epoch = 0
        self.classes: np.ndarray | None = None
        self.dims: tuple[int, int, int] | None = None
        self.voxel_size: float | None = None
        self.origin: np.ndarray | None = None
        self._partial: dict[int, dict[int, bytes]] = {}
        self._chunk_counts: dict[int, int] = {}
        self._held_deltas: dict[int, dict[int, int]] = {}
        self.deltas_applied = 0
        self.deltas_dropped = 0

    def feed_keyframe_chunk(self, payload: bytes) -> None:
        head = _KEY_HEAD.unpack_from(payload)
        epoch, chunk, chunks = head[0], head[1], head[2]
        if epoch <= self.epoch:
            return  # stale snapshot traffic
        self._chunk_counts[epoch] = chunks
        self._partial.setdefault(epoch, {})[chunk] = payload
        if len(self._partial[epoch]) == chunks:
            self._assemble(epoch)

    def _assemble(self, epoch: int) -> None:
        chunks = self._partial.pop(epoch)
        self._chunk_counts.pop(epoch, None)
        parts = [chunks[i] for i in range(len(chunks))]
        head = _KEY_HEAD.unpack_from(parts[0])
        dims = (head[3], head[4], head[5])
        total = dims[0] * dims[1] * dims[2]
        flat = np.empty(total, dtype=np.uint8)
        pos = 0
        for part in parts:
            off = _KEY_HEAD.size
            while off < len(part):
                cls, n = _KEY_RUN.unpack_from(part, off)
                flat[pos : pos + n] = cls
                pos += n
                off += _KEY_RUN.size
        if pos != total:
            return  # malformed snapshot, wait for the next one
        self.classes = flat
        self.dims = dims
        self.voxel_size = head[6]
        self.origin = np.array(head[7:10])
        self.epoch = epoch
        # everything older can never apply now
        for stale in [e for e in self._partial if e <= epoch]:
            self._partial.pop(stale)
            self._chunk_counts.pop(stale, None)
        for stale in [e for e in self._held_deltas if e < epoch]:
            self.deltas_dropped += len(self._held_deltas.pop(stale))
        held = self._held_deltas.pop(epoch, None)
        if held:
            for flat_idx, cls in held.items():
                self.classes[flat_idx] = cls
                self.deltas_applied += 1

    def feed_delta(self, payload: bytes) -> None:
        epoch, runs = decode_delta_payload(payload)
        if epoch < self.epoch or epoch == 0:
            self.deltas_dropped += sum(r[1] for r in runs)
            return
        if epoch > self.epoch:
            held = self._held_deltas.setdefault(epoch, {})
            for start, length, cls in runs:
                for f in range(start, start + length):
                    held[f] = cls
            return
        assert self.classes is not None
        for start, length, cls in runs:
            self.classes[start : start + length] = cls
            self.deltas_applied += length

    def classes_grid(self) -> np.ndarray | None:
        if self.classes is None or self.dims is None:
            return None
        return self.classes.reshape(self.dims)
