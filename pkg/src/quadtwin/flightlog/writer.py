"""Crash-tolerant segmented log writer.

Messages stage in per-topic buffers and flush to a chunk once the buffer
holds 64 KiB or spans one second of stamps, whichever comes first, so an
abrupt death loses at most one flush interval per topic. Segments roll
at a byte or time-span cap. The in-progress file carries a .part suffix
and every chunk is written straight through to the OS; a segment only
takes its final name after its index chunk is down and fsynced, so a
rename is the commit point and readers never see a half-built index.
"""

from __future__ import annotations

import os
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .format import (
    CHUNK_DATA,
    CHUNK_HEADER,
    CHUNK_INDEX,
    CRC,
    FILE_HEADER,
    SegmentHeader,
    TopicIndex,
    encode_chunk,
    encode_index,
    encode_message,
)

FLUSH_BYTES = 64 * 1024
FLUSH_INTERVAL_S = 1.0
SEGMENT_MAX_BYTES = 256 * 1024 * 1024
SEGMENT_MAX_SPAN_S = 300.0


@dataclass
class LogWriterConfig:
    directory: Path
    flush_bytes: int = FLUSH_BYTES
    flush_interval_s: float = FLUSH_INTERVAL_S
    segment_max_bytes: int = SEGMENT_MAX_BYTES
    segment_max_span_s: float = SEGMENT_MAX_SPAN_S


@dataclass
class _Staging:
    buf: bytearray = field(default_factory=bytearray)
    count: int = 0
    t_min: float = 0.0
    t_max: float = 0.0


class SegmentedLogWriter:
    """Appends timestamped messages to a directory of rolling segments."""

    def __init__(self, config: LogWriterConfig, session_id: bytes | None = None):
        self.config = config
        self.session_id = session_id if session_id is not None else uuid.uuid4().bytes
        self.directory = Path(config.directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._segment_index = 0
        self._file = None
        self._part_path: Path | None = None
        self._final_path: Path | None = None
        self._segment_bytes = 0
        self._segment_start_stamp: float | None = None
        self._index: dict[int, TopicIndex] = {}
        self._staging: dict[int, _Staging] = {}
        self._last_stamp: dict[int, float] = {}
        self.closed_segments: list[Path] = []
        self.messages_written = 0
        self.fault: str | None = None

    def _segment_name(self) -> str:
        return f"{self.session_id.hex()}_{self._segment_index:05d}.aglg"

    def _open_segment(self, start_stamp: float) -> None:
        self._final_path = self.directory / self._segment_name()
        self._part_path = self.directory / (self._segment_name() + ".part")
        # Unbuffered so flushed chunks reach the OS before any crash.
        self._file = open(self._part_path, "wb", buffering=0)
        header = SegmentHeader(self.session_id, self._segment_index, start_stamp)
        self._file.write(header.encode())
        self._segment_bytes = FILE_HEADER.size
        self._segment_start_stamp = start_stamp
        self._index = {}

    def _chunk_size(self, payload_len: int) -> int:
        return CHUNK_HEADER.size + payload_len + CRC.size

    def _index_size_estimate(self) -> int:
        # Counts staged topics too: they become chunks and index entries
        # when the segment closes, and the cap must hold after that.
        staged_live = [tid for tid, s in self._staging.items() if s.count]
        topics = set(self._index) | set(staged_live)
        chunks = sum(len(e.chunk_offsets) for e in self._index.values()) + len(staged_live)
        return self._chunk_size(1 + 29 * (len(topics) + 1) + 8 * (chunks + 2))

    def _write_chunk(self, topic_id: int, staged: _Staging) -> None:
        assert self._file is not None
        raw = encode_chunk(
            CHUNK_DATA, topic_id, staged.count, staged.t_min, staged.t_max, bytes(staged.buf)
        )
        offset = self._segment_bytes
        try:
            self._file.write(raw)
        except OSError as exc:
            # Disk full or device error: stop recording and seal what we
            # have so the segment on disk stays parseable.
            self.fault = f"write failed: {exc}"
            staged.count = 0
            try:
                self._finalize_segment()
            except OSError:
                pass
            raise
        self._segment_bytes += len(raw)
        entry = self._index.get(topic_id)
        if entry is None:
            entry = TopicIndex(topic_id, 0, staged.t_min, staged.t_max)
            self._index[topic_id] = entry
        entry.message_count += staged.count
        entry.t_min = min(entry.t_min, staged.t_min)
        entry.t_max = max(entry.t_max, staged.t_max)
        entry.chunk_offsets.append(offset)

    def _flush_topic(self, topic_id: int) -> None:
        staged = self._staging.get(topic_id)
        if staged is None or staged.count == 0:
            return
        self._write_chunk(topic_id, staged)
        self._staging[topic_id] = _Staging()

    def _flush_all(self) -> None:
        for tid in sorted(self._staging):
            self._flush_topic(tid)

    def _finalize_segment(self) -> None:
        if self._file is None:
            return
        self._flush_all()
        if self._index:
            t_min = min(e.t_min for e in self._index.values())
            t_max = max(e.t_max for e in self._index.values())
        else:
            t_min = t_max = self._segment_start_stamp or 0.0
        raw = encode_chunk(CHUNK_INDEX, 0, 0, t_min, t_max, encode_index(self._index))
        self._file.write(raw)
        self._file.flush()
        os.fsync(self._file.fileno())
        self._file.close()
        self._file = None
        assert self._part_path is not None and self._final_path is not None
        os.replace(self._part_path, self._final_path)
        self.closed_segments.append(self._final_path)
        self._segment_index += 1
        self._part_path = None
        self._final_path = None

    def _roll_if_needed(self, stamp: float, incoming_len: int) -> None:
        assert self._segment_start_stamp is not None
        span = stamp - self._segment_start_stamp
        staged = sum(self._chunk_size(len(s.buf)) for s in self._staging.values() if s.count)
        projected = self._segment_bytes + staged + incoming_len + self._index_size_estimate()
        if span >= self.config.segment_max_span_s or projected > self.config.segment_max_bytes:
            self._finalize_segment()
            self._open_segment(stamp)

    def append(self, topic_id: int, stamp: float, payload: bytes) -> None:
        if self.fault is not None:
            raise RuntimeError(f"log writer faulted: {self.fault}")
        last = self._last_stamp.get(topic_id)
        if last is not None and stamp < last:
            raise ValueError(f"stamps must be non-decreasing per topic, got {stamp} after {last}")
        self._last_stamp[topic_id] = stamp
        if self._file is None:
            self._open_segment(stamp)
        else:
            self._roll_if_needed(stamp, len(payload) + 16)
        staged = self._staging.get(topic_id)
        if staged is None:
            staged = _Staging()
            self._staging[topic_id] = staged
        if staged.count == 0:
            staged.t_min = stamp
        staged.t_max = stamp
        staged.buf += encode_message(stamp, payload)
        staged.count += 1
        self.messages_written += 1
        if len(staged.buf) >= self.config.flush_bytes or (stamp - staged.t_min) >= self.config.flush_interval_s:
            self._flush_topic(topic_id)

    def close(self) -> list[Path]:
        """Finalizes the open segment; a never-written session still closes
        one segment holding just a header and an empty index."""
        if self._file is None and not self.closed_segments and self.fault is None:
            self._open_segment(0.0)
        self._finalize_segment()
        return list(self.closed_segments)
