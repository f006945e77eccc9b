"""On-disk layout of the segmented flight log container.

A segment file is a 34-byte header followed by chunks laid end to end:

    header   magic "AGLG", version u16, session id 16 bytes,
             segment index u32, start time f64
    chunk    kind u8 (0 data, 1 index), topic u8, message count u32,
             payload length u32, min stamp f64, max stamp f64,
             payload, crc32 u32 over chunk header + payload

Data chunk payloads are concatenated messages, each `stamp f64, length
u32, bytes`. The index chunk is always last in a closed segment and maps
every topic to its chunk offsets, counts, and time range, so readers can
seek without scanning; a file that lost its index is still fully readable
by walking chunks sequentially. All integers little-endian.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

MAGIC = b"AGLG"
FORMAT_VERSION = 1

FILE_HEADER = struct.Struct("<4sH16sId")
CHUNK_HEADER = struct.Struct("<BBIIdd")
MESSAGE_HEADER = struct.Struct("<dI")
CRC = struct.Struct("<I")

CHUNK_DATA = 0
CHUNK_INDEX = 1

_INDEX_TOPIC = struct.Struct("<BIQdd")


@dataclass
class SegmentHeader:
    session_id: bytes
    segment_index: int
    start_time: float

    def encode(self) -> bytes:
        return FILE_HEADER.pack(
            MAGIC, FORMAT_VERSION, self.session_id, self.segment_index, self.start_time
        )

    @classmethod
    def decode(cls, raw: bytes) -> "SegmentHeader":
        magic, version, session, index, start = FILE_HEADER.unpack(raw)
        if magic != MAGIC:
            raise ValueError("not a flight log segment (bad magic)")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported segment format version {version}")
        return cls(session, index, start)


@dataclass
class ChunkInfo:
    offset: int
    kind: int
    topic_id: int
    message_count: int
    payload_len: int
    t_min: float
    t_max: float


@dataclass
class TopicIndex:
    topic_id: int
    message_count: int
    t_min: float
    t_max: float
    chunk_offsets: list[int] = field(default_factory=list)


def encode_chunk(kind: int, topic_id: int, count: int, t_min: float, t_max: float, payload: bytes) -> bytes:
    head = CHUNK_HEADER.pack(kind, topic_id, count, len(payload), t_min, t_max)
    body = head + payload
    return body + CRC.pack(zlib.crc32(body))


def encode_message(stamp: float, payload: bytes) -> bytes:
    return MESSAGE_HEADER.pack(stamp, len(payload)) + payload


def decode_messages(payload: bytes) -> list[tuple[float, bytes]]:
    out = []
    off = 0
    n = len(payload)
    while off < n:
        stamp, length = MESSAGE_HEADER.unpack_from(payload, off)
        off += MESSAGE_HEADER.size
        out.append((stamp, payload[off : off + length]))
        off += length
    return out


def encode_index(topics: dict[int, TopicIndex]) -> bytes:
    out = bytearray(struct.pack("<B", len(topics)))
    for tid in sorted(topics):
        entry = topics[tid]
        out += _INDEX_TOPIC.pack(
            entry.topic_id,
            len(entry.chunk_offsets),
            entry.message_count,
            entry.t_min,
            entry.t_max,
        )
        out += struct.pack(f"<{len(entry.chunk_offsets)}Q", *entry.chunk_offsets)
    return bytes(out)


def decode_index(payload: bytes) -> dict[int, TopicIndex]:
    (n_topics,) = struct.unpack_from("<B", payload)
    off = 1
    out: dict[int, TopicIndex] = {}
    for _ in range(n_topics):
        tid, n_chunks, count, t_min, t_max = _INDEX_TOPIC.unpack_from(payload, off)
        off += _INDEX_TOPIC.size
        offsets = list(struct.unpack_from(f"<{n_chunks}Q", payload, off))
        off += 8 * n_chunks
        out[tid] = TopicIndex(tid, count, t_min, t_max, offsets)
    return out
