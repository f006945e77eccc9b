"""Reading, salvaging, and replaying segmented flight logs.

Every read path verifies chunk CRCs; a failed chunk is skipped and
counted, never fatal. Closed segments end in an index chunk, but the
reader only needs it for seeking: a truncated in-progress file or an
index-stripped copy yields exactly the messages of its complete chunks
via the sequential walk. Replay merges any number of segments into one
globally stamp-ordered stream, breaking ties by topic id and then by
write order, with payloads byte-identical to what was appended.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .format import (
    CHUNK_DATA,
    CHUNK_HEADER,
    CHUNK_INDEX,
    CRC,
    FILE_HEADER,
    ChunkInfo,
    SegmentHeader,
    TopicIndex,
    decode_index,
    decode_messages,
)


@dataclass
class SegmentScan:
    path: Path
    header: SegmentHeader
    chunks: list[ChunkInfo] = field(default_factory=list)
    index: dict[int, TopicIndex] | None = None
    complete: bool = False
    corrupt_chunks: int = 0
    truncated_at: int | None = None

    @property
    def message_count(self) -> int:
        return sum(c.message_count for c in self.chunks if c.kind == CHUNK_DATA)

    @property
    def topics(self) -> list[int]:
        return sorted({c.topic_id for c in self.chunks if c.kind == CHUNK_DATA})


def _read_chunk_at(raw: bytes, offset: int) -> tuple[ChunkInfo, bytes] | None:
    """Returns the chunk at offset and its payload, or None if the bytes
    there do not form a complete chunk with a valid CRC."""
    head_end = offset + CHUNK_HEADER.size
    if head_end > len(raw):
        return None
    try:
        kind, topic, count, payload_len, t_min, t_max = CHUNK_HEADER.unpack(raw[offset:head_end])
    except struct.error:
        return None
    if kind not in (CHUNK_DATA, CHUNK_INDEX):
        return None
    end = head_end + payload_len + CRC.size
    if end > len(raw):
        return None
    (stored_crc,) = CRC.unpack(raw[end - CRC.size : end])
    if zlib.crc32(raw[offset : end - CRC.size]) != stored_crc:
        return None
    info = ChunkInfo(offset, kind, topic, count, payload_len, t_min, t_max)
    return info, raw[head_end : head_end + payload_len]


def scan_segment(path: Path) -> SegmentScan:
    """Walks a segment sequentially, stopping at the first incomplete or
    corrupt chunk. Works on closed, in-progress, and truncated files."""
    raw = Path(path).read_bytes()
    if len(raw) < FILE_HEADER.size:
        raise ValueError(f"{path}: shorter than a segment header")
    header = SegmentHeader.decode(raw[: FILE_HEADER.size])
    scan = SegmentScan(Path(path), header)
    offset = FILE_HEADER.size
    while offset < len(raw):
        got = _read_chunk_at(raw, offset)
        if got is None:
            # A sizeable chunk with a bad CRC is stepped over and counted;
            # a torn or unparseable header ends the scan at the tear.
            head_end = offset + CHUNK_HEADER.size
            if head_end <= len(raw):
                try:
                    kind, _, _, payload_len, _, _ = CHUNK_HEADER.unpack(raw[offset:head_end])
                except struct.error:
                    kind = None
                if kind in (CHUNK_DATA, CHUNK_INDEX):
                    end = head_end + payload_len + CRC.size
                    if end <= len(raw):
                        scan.corrupt_chunks += 1
                        offset = end
                        continue
            scan.truncated_at = offset
            break
        info, payload = got
        scan.chunks.append(info)
        if info.kind == CHUNK_INDEX:
            scan.index = decode_index(payload)
            scan.complete = True
        offset = info.offset + CHUNK_HEADER.size + info.payload_len + CRC.size
    return scan


@dataclass
class ReplayReport:
    messages: int = 0
    skipped_chunks: int = 0
    segments: int = 0


def iter_segment(path: Path, topics: set[int] | None = None, report: ReplayReport | None = None):
    """Yields (stamp, topic_id, chunk_ordinal, message_ordinal, payload)
    from one segment in write order, skipping chunks whose CRC fails."""
    raw = Path(path).read_bytes()
    SegmentHeader.decode(raw[: FILE_HEADER.size])
    offset = FILE_HEADER.size
    ordinal = 0
    while offset < len(raw):
        got = _read_chunk_at(raw, offset)
        if got is None:
            # Corrupt payload bytes still leave a sizeable header, so step
            # over the declared length and pick up the next chunk; a torn
            # or unparseable header ends the walk at the tear.
            head_end = offset + CHUNK_HEADER.size
            if head_end <= len(raw):
                try:
                    kind, _, _, payload_len, _, _ = CHUNK_HEADER.unpack(raw[offset:head_end])
                except struct.error:
                    break
                end = head_end + payload_len + CRC.size
                if kind in (CHUNK_DATA, CHUNK_INDEX) and end <= len(raw):
                    if report is not None:
                        report.skipped_chunks += 1
                    offset = end
                    ordinal += 1
                    continue
            break
        info, payload = got
        offset = info.offset + CHUNK_HEADER.size + info.payload_len + CRC.size
        if info.kind != CHUNK_DATA:
            continue
        if topics is not None and info.topic_id not in topics:
            ordinal += 1
            continue
        for msg_i, (stamp, body) in enumerate(decode_messages(payload)):
            yield stamp, info.topic_id, ordinal, msg_i, body
        ordinal += 1


def replay(
    paths: list[Path],
    topics: set[int] | None = None,
    time_range: tuple[float, float] | None = None,
) -> tuple[list[tuple[float, int, bytes]], ReplayReport]:
    """Merges segments into one stamp-ordered message list. Ties order by
    topic id, then original write order. Equal inputs always produce the
    same output; payload bytes pass through untouched."""
    report = ReplayReport(segments=len(paths))
    ordered_paths = sorted(paths, key=lambda p: scan_segment(p).header.segment_index)
    items: list[tuple[tuple[float, int, int, int, int], bytes]] = []
    for seg_i, path in enumerate(ordered_paths):
        for stamp, tid, chunk_i, msg_i, body in iter_segment(path, topics, report):
            if time_range is not None and not (time_range[0] <= stamp <= time_range[1]):
                continue
            items.append(((stamp, tid, seg_i, chunk_i, msg_i), body))
    items.sort(key=lambda it: it[0])
    out = [(key[0], key[1], body) for key, body in items]
    report.messages = len(out)
    return out, report


def session_segments(directory: Path, session_id: bytes | None = None) -> list[Path]:
    """Closed segments in a directory, oldest first. In-progress .part
    files are excluded; pass them to scan_segment or replay explicitly."""
    out = []
    for p in sorted(Path(directory).glob("*.aglg")):
        if session_id is not None and not p.name.startswith(session_id.hex()):
            continue
        out.append(p)
    return out
