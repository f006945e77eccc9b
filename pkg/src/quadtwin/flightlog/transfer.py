"""Offset-resumable log file transfer with end-to-end verification.

The client pulls a file in fixed-size reads and writes each piece to a
.part file before advancing, so a dropped link costs nothing already on
disk: the resume token is the file name, the verified byte offset, and
the running CRC of that prefix. On completion the running CRC must match
the server's whole-file CRC; a mismatch discards the local copy and
triggers a full resend from offset zero. A verified prefix is never
re-sent on resume.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass
from pathlib import Path


class TransferError(Exception):
    pass


class TransferInterrupted(TransferError):
    """Link failure mid-transfer; carries the token to resume from."""

    def __init__(self, token: "ResumeToken"):
        super().__init__(f"transfer interrupted at offset {token.offset}")
        self.token = token


@dataclass(frozen=True)
class ResumeToken:
    file_name: str
    offset: int
    crc: int


class TransferServer:
    """Serves byte ranges of log files from a directory."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.bytes_served = 0
        self.read_calls = 0

    def file_info(self, name: str) -> tuple[int, int]:
        raw = (self.directory / name).read_bytes()
        return len(raw), zlib.crc32(raw)

    def read(self, name: str, offset: int, length: int) -> bytes:
        with open(self.directory / name, "rb") as f:
            f.seek(offset)
            data = f.read(length)
        self.bytes_served += len(data)
        self.read_calls += 1
        return data


class TransferClient:
    """Pulls files from a TransferServer into a local directory."""

    def __init__(self, server: TransferServer, out_dir: Path, chunk_bytes: int = 64 * 1024):
        self.server = server
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.chunk_bytes = chunk_bytes
        self.full_resends = 0

    def _pull(self, name: str, token: ResumeToken | None) -> Path:
        size, want_crc = self.server.file_info(name)
        part = self.out_dir / (name + ".part")
        final = self.out_dir / name
        if token is not None:
            if token.file_name != name or token.offset > size or not part.exists():
                raise TransferError("resume token does not match server file")
            offset, crc = token.offset, token.crc
            with open(part, "r+b") as f:
                f.truncate(offset)
        else:
            offset, crc = 0, 0
            part.write_bytes(b"")
        with open(part, "r+b") as f:
            f.seek(offset)
            while offset < size:
                try:
                    piece = self.server.read(name, offset, min(self.chunk_bytes, size - offset))
                except OSError:
                    f.flush()
                    os.fsync(f.fileno())
                    raise TransferInterrupted(ResumeToken(name, offset, crc))
                if not piece:
                    raise TransferInterrupted(ResumeToken(name, offset, crc))
                f.write(piece)
                crc = zlib.crc32(piece, crc)
                offset += len(piece)
            f.flush()
            os.fsync(f.fileno())
        if crc != want_crc:
            part.unlink()
            raise TransferError("whole-file CRC mismatch")
        os.replace(part, final)
        return final

    def fetch(self, name: str, token: ResumeToken | None = None, max_attempts: int = 3) -> Path:
        """Transfers one file, resuming from token if given. A CRC
        mismatch at completion falls back to a full resend."""
        for attempt in range(max_attempts):
            try:
                return self._pull(name, token)
            except TransferInterrupted:
                raise
            except TransferError:
                if attempt + 1 >= max_attempts:
                    raise
                token = None
                self.full_resends += 1
        raise TransferError("unreachable")
