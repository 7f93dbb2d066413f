"""Code extraction and degree counting.

After training, every local sample maps to a code; duplicate codes collapse
to one codebook entry carrying a degree (how many samples it represents).
Sites ship (code, degree) pairs to the coordinator, which merges them by
summing degrees. Only this small codebook crosses the wire, never the data.

Transmission accounting charges 32 bits per degree (sent as float32) plus L
bits per code. The wire payload additionally pads codes to byte boundaries
and carries an entry count; those overhead bits are reported separately as
"physical" bits and never enter the formula-level ledger.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmptyShardError, IncompatibleCodebooksError, ShapeError
from .network import HashCode, NetworkParams, binarize_batch, forward, pack_bits_batch


@dataclass(frozen=True)
class CodebookEntry:
    code: HashCode
    degree: int


@dataclass(frozen=True)
class Codebook:
    """Deduplicated codes with degrees; entries sorted by packed code bytes."""

    entries: tuple
    origin: str = "global"

    @property
    def code_length(self) -> int:
        return self.entries[0].code.length

    @property
    def total_degree(self) -> int:
        return sum(e.degree for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def encode_shard(params: NetworkParams, x, origin: str = "site"):
    """Map every sample to its code; returns (Codebook, per-sample entry index)."""
    x = np.atleast_2d(np.asarray(getattr(x, "normalized", x), dtype=np.float64))
    if x.shape[0] == 0:
        raise EmptyShardError("cannot encode an empty shard")
    h, _ = forward(params, x)
    bits = binarize_batch(h)
    packed = pack_bits_batch(bits)
    length = params.code_length
    keys = sorted(set(packed))
    position = {k: i for i, k in enumerate(keys)}
    sample_to_entry = np.array([position[k] for k in packed])
    degrees = np.bincount(sample_to_entry, minlength=len(keys))
    entries = tuple(
        CodebookEntry(HashCode(packed=k, length=length), int(d))
        for k, d in zip(keys, degrees)
    )
    return Codebook(entries=entries, origin=origin), sample_to_entry


def merge_codebooks(books) -> Codebook:
    """Union of site codebooks; degrees add where codes coincide."""
    books = list(books)
    if not books:
        raise IncompatibleCodebooksError("no codebooks to merge")
    length = books[0].code_length
    if any(b.code_length != length for b in books):
        raise IncompatibleCodebooksError("codebooks have mixed code lengths")
    totals: dict[bytes, int] = {}
    for book in books:
        for e in book.entries:
            totals[e.code.packed] = totals.get(e.code.packed, 0) + e.degree
    entries = tuple(
        CodebookEntry(HashCode(packed=k, length=length), d)
        for k, d in sorted(totals.items())
    )
    return Codebook(entries=entries, origin="global")


def code_transmission_bits(books, code_length: int) -> int:
    """Formula-level bits for shipping all site codebooks: sum of n_codes * (32 + L)."""
    return sum(len(b) * (32 + code_length) for b in books)


# CODES_PUSH payload: 4-byte big-endian entry count, then per entry a 32-bit
# IEEE-754 big-endian degree followed by ceil(L/8) packed code bytes.

def encode_codes_payload(book: Codebook) -> bytes:
    parts = [struct.pack(">I", len(book))]
    for e in book.entries:
        parts.append(struct.pack(">f", float(e.degree)))
        parts.append(e.code.packed)
    return b"".join(parts)


def decode_codes_payload(data: bytes, code_length: int, origin: str = "global") -> Codebook:
    n_bytes = (code_length + 7) // 8
    if len(data) < 4:
        raise ShapeError("truncated codebook payload")
    (count,) = struct.unpack(">I", data[:4])
    if len(data) != 4 + count * (4 + n_bytes):
        raise ShapeError(
            f"codebook payload has {len(data)} bytes, expected {4 + count * (4 + n_bytes)}"
        )
    off = 4
    entries = []
    for _ in range(count):
        (deg,) = struct.unpack(">f", data[off : off + 4])
        off += 4
        code = HashCode(packed=data[off : off + n_bytes], length=code_length)
        off += n_bytes
        entries.append(CodebookEntry(code, int(round(deg))))
    return Codebook(entries=tuple(entries), origin=origin)


def codes_payload_paper_bits(book: Codebook) -> int:
    """What the formula ledger charges for this book: n_codes * (32 + L)."""
    return len(book) * (32 + book.code_length)
