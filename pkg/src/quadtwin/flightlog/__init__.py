"""Segmented on-disk flight log: crash-tolerant recording, ordered
replay, salvage of torn files, and resumable transfer."""

from .format import (
    CHUNK_DATA,
    CHUNK_HEADER,
    CHUNK_INDEX,
    FILE_HEADER,
    FORMAT_VERSION,
    MAGIC,
    ChunkInfo,
    SegmentHeader,
    TopicIndex,
    decode_index,
    decode_messages,
    encode_chunk,
    encode_index,
    encode_message,
)
from .reader import (
    ReplayReport,
    SegmentScan,
    iter_segment,
    replay,
    scan_segment,
    session_segments,
)
from .transfer import (
    ResumeToken,
    TransferClient,
    TransferError,
    TransferInterrupted,
    TransferServer,
)
from .writer import (
    FLUSH_BYTES,
    FLUSH_INTERVAL_S,
    SEGMENT_MAX_BYTES,
    SEGMENT_MAX_SPAN_S,
    LogWriterConfig,
    SegmentedLogWriter,
)

__all__ = [
    "CHUNK_DATA",
    "CHUNK_HEADER",
    "CHUNK_INDEX",
    "FILE_HEADER",
    "FLUSH_BYTES",
    "FLUSH_INTERVAL_S",
    "FORMAT_VERSION",
    "MAGIC",
    "SEGMENT_MAX_BYTES",
    "SEGMENT_MAX_SPAN_S",
    "ChunkInfo",
    "LogWriterConfig",
    "ReplayReport",
    "ResumeToken",
    "SegmentHeader",
    "SegmentScan",
    "SegmentedLogWriter",
    "TopicIndex",
    "TransferClient",
    "TransferError",
    "TransferInterrupted",
    "TransferServer",
    "decode_index",
    "decode_messages",
    "encode_chunk",
    "encode_index",
    "encode_message",
    "iter_segment",
    "replay",
    "scan_segment",
    "session_segments",
]
