"""Strict binary codec primitives shared by every serialized structure.

Conventions (see docs/FORMATS.md for the full table): fields are written in
a fixed order, round numbers are big-endian 64-bit, digests are raw 32-byte
values, and variable-length runs carry a big-endian 32-bit length or count
prefix.  Decoding is strict -- every tag, length, and trailing byte is
checked -- so any single-bit mutation of an encoded object is caught either
as a decode error or as a failed content check downstream.
"""

from __future__ import annotations

import struct

from .hashtree import DIGEST_SIZE, Digest, InclusionProof, Side

__all__ = ["Reader", "Writer", "WireError", "encode_inclusion_proof", "read_inclusion_proof"]

_U32_MAX = 2**32 - 1
_U64_MAX = 2**64 - 1


class WireError(ValueError):
    """Malformed or truncated wire bytes."""


class Writer:
    __slots__ = ("_buf",)

    def __init__(self) -> None:
        self._buf = bytearray()

    def u8(self, v: int) -> "Writer":
        if not 0 <= v <= 0xFF:
            raise WireError(f"u8 out of range: {v}")
        self._buf.append(v)
        return self

    def u32(self, v: int) -> "Writer":
        if not 0 <= v <= _U32_MAX:
            raise WireError(f"u32 out of range: {v}")
        self._buf += struct.pack(">I", v)
        return self

    def u64(self, v: int) -> "Writer":
        if not 0 <= v <= _U64_MAX:
            raise WireError(f"u64 out of range: {v}")
        self._buf += struct.pack(">Q", v)
        return self

    def digest(self, d: bytes) -> "Writer":
        if len(d) != DIGEST_SIZE:
            raise WireError(f"digest must be {DIGEST_SIZE} bytes")
        self._buf += d
        return self

    def raw(self, b: bytes) -> "Writer":
        self._buf += b
        return self

    def blob(self, b: bytes) -> "Writer":
        # Length-prefixed variable bytes.
        self.u32(len(b))
        self._buf += b
        return self

    def getvalue(self) -> bytes:
        return bytes(self._buf)


class Reader:
    __slots__ = ("_data", "_pos")

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise WireError("truncated input")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def digest(self) -> Digest:
        return Digest(self._take(DIGEST_SIZE))

    def blob(self, max_len: int = 1 << 24) -> bytes:
        n = self.u32()
        if n > max_len:
            raise WireError(f"blob length {n} exceeds limit")
        return self._take(n)

    def remaining(self) -> int:
        return len(self._data) - self._pos

    def expect_eof(self) -> None:
        if self._pos != len(self._data):
            raise WireError(f"{self.remaining()} trailing bytes")


def encode_inclusion_proof(proof: InclusionProof) -> bytes:
    w = Writer()
    w.u64(proof.leaf_index).u64(proof.tree_size).u32(len(proof.audit_path))
    for side, digest in proof.audit_path:
        w.u8(int(side)).digest(digest)
    return w.getvalue()


def read_inclusion_proof(r: Reader) -> InclusionProof:
    leaf_index = r.u64()
    tree_size = r.u64()
    count = r.u32()
    if count > 64:
        raise WireError(f"audit path too long: {count}")
    path = []
    for _ in range(count):
        side = r.u8()
        if side not in (0, 1):
            raise WireError(f"bad side byte {side}")
        path.append((Side(side), r.digest()))
    return InclusionProof(leaf_index=leaf_index, audit_path=tuple(path), tree_size=tree_size)
