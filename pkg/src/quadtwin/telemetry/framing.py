"""Wire framing for the telemetry channel.

Every frame is laid out little-endian as

    magic   2 bytes  0xA6 0x1B
    version 1 byte
    topic   1 byte
    flags   1 byte
    seq     4 bytes  unsigned, per-topic monotonic
    length  4 bytes  unsigned payload byte count
    payload length bytes
    crc32   4 bytes  over everything before it (reflected 0xEDB88320)

so an empty-payload frame is exactly 17 bytes. The deframer is total: any
byte sequence either yields frames or is discarded by resync, never an
exception, and buffered state stays bounded by one maximum-size frame.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

MAGIC = b"\xa6\x1b"
VERSION = 1
HEADER = struct.Struct("<2sBBBII")   # magic, version, topic, flags, seq, length
HEADER_LEN = HEADER.size             # 13
CRC_LEN = 4
FRAME_OVERHEAD = HEADER_LEN + CRC_LEN
MAX_PAYLOAD = 64 * 1024

TOPIC_STATE = 1
TOPIC_MAP_DELTA = 2
TOPIC_COVERAGE = 3
TOPIC_COMMAND = 4
TOPIC_COMMAND_ACK = 5
TOPIC_LOG_EVENT = 6
TOPIC_HEARTBEAT = 7
TOPIC_CAMERA_POSE = 8  # reserved for the synthetic third-person view

# flags bit 0 marks a map keyframe chunk (full-grid snapshot traffic)
FLAG_KEYFRAME = 0x01


@dataclass(frozen=True)
class Frame:
    topic_id: int
    flags: int
    seq: int
    payload: bytes


def encode_frame(topic_id: int, seq: int, payload: bytes, flags: int = 0) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise ValueError(f"payload {len(payload)} exceeds {MAX_PAYLOAD} byte limit")
    if not 0 <= topic_id <= 255:
        raise ValueError("topic_id must fit one byte")
    body = HEADER.pack(MAGIC, VERSION, topic_id, flags, seq & 0xFFFFFFFF, len(payload))
    body += payload
    return body + struct.pack("<I", zlib.crc32(body))


class Deframer:
    """Incremental frame extractor with resync on garbage.

    Corrupt input advances one byte at a time until the next magic, so a
    flipped bit costs at most one frame; nothing a peer sends can raise.
    """

    def __init__(self):
        self._buf = bytearray()
        self.frames_decoded = 0
        self.crc_failures = 0
        self.resyncs = 0
        self.discarded_bytes = 0

    def feed(self, data: bytes) -> list[Frame]:
        self._buf += data
        out: list[Frame] = []
        while True:
            start = self._buf.find(MAGIC)
            if start < 0:
                # keep a trailing half-magic, drop everything else
                keep = 1 if self._buf and self._buf[-1] == MAGIC[0] else 0
                drop = len(self._buf) - keep
                if drop > 0:
                    self.discarded_bytes += drop
                    del self._buf[:drop]
                return out
            if start > 0:
                self.discarded_bytes += start
                self.resyncs += 1
                del self._buf[:start]
            if len(self._buf) < HEADER_LEN:
                return out  # truncated header: wait for more bytes
            _, version, topic_id, flags, seq, length = HEADER.unpack_from(self._buf)
            if version != VERSION or length > MAX_PAYLOAD:
                # false magic or mangled header: slide past the first byte
                self.resyncs += 1
                self.discarded_bytes += 1
                del self._buf[:1]
                continue
            total = HEADER_LEN + length + CRC_LEN
            if len(self._buf) < total:
                return out  # truncated body: wait for more bytes
            want = struct.unpack_from("<I", self._buf, HEADER_LEN + length)[0]
            if zlib.crc32(bytes(self._buf[: HEADER_LEN + length])) != want:
                self.crc_failures += 1
                self.discarded_bytes += 1
                del self._buf[:1]
                continue
            payload = bytes(self._buf[HEADER_LEN : HEADER_LEN + length])
            del self._buf[:total]
            self.frames_decoded += 1
            out.append(Frame(topic_id, flags, seq, payload))

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)
