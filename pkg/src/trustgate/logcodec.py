"""Minimum-redundancy archival coding for repetitive attribute records.

Long-term storage keeps attribute records, not raw event rows: each
record is the attribute-to-value mapping an event carried. Distinct
records become patterns, patterns get minimum-redundancy prefix-free
codewords, and an archive is codebook + packed codeword stream. Average codeword length is kept
as an exact rational so stated compression numbers are reproducible
bit for bit.

Archive layout (all integers big-endian):

    magic 5A 54 4C 43 | version 01 | u32 pattern count
    per pattern: u16 key byte length | UTF-8 key | u8 code bit length
                 | code bits, MSB first, zero padded to a byte
    u64 record count | payload bits, MSB first, zero padded
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import AttributeKind, EdrEvent, ModelError

MAGIC = b"\x5a\x54\x4c\x43"
VERSION = 1


class CodecError(ValueError):
    """Raised for malformed tables, unknown patterns, corrupt archives."""


@dataclass(frozen=True)
class AttributeRecord:
    """An immutable attribute-to-value mapping with a canonical key.

    Items are held sorted by attribute name, so equal mappings always
    produce the same key string.
    """

    items: tuple[tuple[str, int | str], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.items]
        if names != sorted(names):
            object.__setattr__(self, "items", tuple(sorted(self.items)))
            names = sorted(names)
        if len(set(names)) != len(names):
            raise CodecError("duplicate attribute names in record")
        if not self.items:
            raise CodecError("attribute record must not be empty")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, int | str]) -> AttributeRecord:
        return cls(tuple(sorted(mapping.items())))

    @classmethod
    def from_event(cls, event: EdrEvent) -> AttributeRecord:
        return cls(((event.attribute.value, event.value),))

    @property
    def key(self) -> str:
        return json.dumps(
            dict(self.items), sort_keys=True, separators=(",", ":"),
            ensure_ascii=False,
        )

    @classmethod
    def from_key(cls, key: str) -> AttributeRecord:
        try:
            obj = json.loads(key)
        except json.JSONDecodeError:
            raise CodecError(f"malformed pattern key: {key!r}") from None
        if not isinstance(obj, dict):
            raise CodecError(f"pattern key must encode an object: {key!r}")
        return cls.from_mapping(obj)


def records_from_events(events: Iterable[EdrEvent]) -> list[AttributeRecord]:
    return [AttributeRecord.from_event(e) for e in events]


@dataclass(frozen=True)
class Pattern:
    key: str
    probability: Fraction
    count: int


@dataclass(frozen=True)
class PatternTable:
    """Distinct patterns with exact empirical probabilities, plus the
    codebook once one has been built."""

    patterns: tuple[Pattern, ...]
    total: int
    codebook: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.patterns:
            raise CodecError("pattern table must not be empty")
        if sum(p.probability for p in self.patterns) != 1:
            raise CodecError("pattern probabilities must sum to 1 exactly")


def collect_patterns(records: Sequence[AttributeRecord]) -> PatternTable:
    """Tally distinct records into a pattern table (no codebook yet)."""

    if not records:
        raise CodecError("cannot collect patterns from an empty record set")
    counts: dict[str, int] = {}
    for record in records:
        counts[record.key] = counts.get(record.key, 0) + 1
    total = len(records)
    patterns = tuple(
        Pattern(key=key, probability=Fraction(count, total), count=count)
        for key, count in sorted(counts.items())
    )
    return PatternTable(patterns=patterns, total=total)


def build_codebook(table: PatternTable) -> PatternTable:
    """Assign minimum-redundancy codewords.

    Queue ties break on the lexicographically smallest pattern key in a
    subtree, so the same table always yields the same codebook. A
    single-pattern table gets the one-bit codeword "0".
    """

    if len(table.patterns) == 1:
        return PatternTable(
            patterns=table.patterns,
            total=table.total,
            codebook={table.patterns[0].key: "0"},
        )
    # heap entries: (probability, tie key, node); node is a key or a pair
    heap: list[tuple[Fraction, str, object]] = [
        (p.probability, p.key, p.key) for p in table.patterns
    ]
    heapq.heapify(heap)
    while len(heap) > 1:
        p0, k0, n0 = heapq.heappop(heap)
        p1, k1, n1 = heapq.heappop(heap)
        heapq.heappush(heap, (p0 + p1, min(k0, k1), (n0, n1)))
    _, _, root = heap[0]
    codebook: dict[str, str] = {}

    def assign(node: object, prefix: str) -> None:
        if isinstance(node, str):
            codebook[node] = prefix
        else:
            left, right = node
            assign(left, prefix + "0")
            assign(right, prefix + "1")

    assign(root, "")
    return PatternTable(
        patterns=table.patterns, total=table.total, codebook=codebook
    )


def average_length(table: PatternTable) -> Fraction:
    """Expected codeword length, exactly."""

    if table.codebook is None:
        raise CodecError("pattern table has no codebook")
    return sum(
        (p.probability * len(table.codebook[p.key]) for p in table.patterns),
        start=Fraction(0),
    )


@dataclass(frozen=True)
class CompressedArchive:
    """A self-contained archive: its codebook travels with the payload."""

    codebook: Mapping[str, str]
    record_count: int
    payload: bytes


def _pack_bits(bits: str) -> bytes:
    out = bytearray()
    for i in range(0, len(bits), 8):
        chunk = bits[i:i + 8].ljust(8, "0")
        out.append(int(chunk, 2))
    return bytes(out)


def encode(
    records: Sequence[AttributeRecord], table: PatternTable
) -> CompressedArchive:
    """Encode records in order against a built codebook."""

    if table.codebook is None:
        raise CodecError("pattern table has no codebook")
    pieces = []
    for record in records:
        code = table.codebook.get(record.key)
        if code is None:
            raise CodecError(f"pattern not in codebook: {record.key!r}")
        pieces.append(code)
    bits = "".join(pieces)
    return CompressedArchive(
        codebook=dict(table.codebook),
        record_count=len(records),
        payload=_pack_bits(bits),
    )


def _check_prefix_free(codebook: Mapping[str, str]) -> None:
    codes = sorted(codebook.values())
    for a, b in zip(codes, codes[1:]):
        if b.startswith(a):
            raise CodecError("corrupt archive: codebook is not prefix-free")


def decode(archive: CompressedArchive) -> list[AttributeRecord]:
    """Walk the payload back into the original record sequence."""

    if archive.record_count and not archive.codebook:
        raise CodecError("corrupt archive: records but no codebook")
    _check_prefix_free(archive.codebook)
    by_code = {code: key for key, code in archive.codebook.items()}
    if len(by_code) != len(archive.codebook):
        raise CodecError("corrupt archive: duplicate codewords")
    max_len = max((len(c) for c in by_code), default=0)
    total_bits = len(archive.payload) * 8
    records: list[AttributeRecord] = []
    pos = 0
    current = ""
    while len(records) < archive.record_count:
        if len(current) >= max_len:
            raise CodecError("corrupt archive: prefix walk fell off the tree")
        if pos >= total_bits:
            raise CodecError("corrupt archive: bit stream exhausted early")
        byte = archive.payload[pos // 8]
        bit = (byte >> (7 - pos % 8)) & 1
        pos += 1
        current += "1" if bit else "0"
        key = by_code.get(current)
        if key is not None:
            records.append(AttributeRecord.from_key(key))
            current = ""
    remaining = total_bits - pos
    if remaining >= 8:
        raise CodecError("corrupt archive: trailing payload beyond padding")
    while pos < total_bits:
        byte = archive.payload[pos // 8]
        if (byte >> (7 - pos % 8)) & 1:
            raise CodecError("corrupt archive: nonzero padding bits")
        pos += 1
    return records


# --- binary wire format -----------------------------------------------------

def archive_to_bytes(archive: CompressedArchive) -> bytes:
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out += len(archive.codebook).to_bytes(4, "big")
    for key in sorted(archive.codebook):
        code = archive.codebook[key]
        raw = key.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise CodecError("pattern key too long for archive format")
        if not 0 < len(code) <= 0xFF:
            raise CodecError("codeword length out of archive format range")
        out += len(raw).to_bytes(2, "big")
        out += raw
        out.append(len(code))
        out += _pack_bits(code)
    out += archive.record_count.to_bytes(8, "big")
    out += archive.payload
    return bytes(out)


def archive_from_bytes(data: bytes) -> CompressedArchive:
    view = memoryview(data)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise CodecError("corrupt archive: truncated")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise CodecError("corrupt archive: bad magic")
    version = take(1)[0]
    if version != VERSION:
        raise CodecError(f"unsupported archive version {version}")
    pattern_count = int.from_bytes(take(4), "big")
    codebook: dict[str, str] = {}
    for _ in range(pattern_count):
        key_len = int.from_bytes(take(2), "big")
        key = bytes(take(key_len)).decode("utf-8")
        code_len = take(1)[0]
        if code_len == 0:
            raise CodecError("corrupt archive: zero-length codeword")
        code_bytes = bytes(take((code_len + 7) // 8))
        bits = "".join(f"{b:08b}" for b in code_bytes)
        if any(c == "1" for c in bits[code_len:]):
            raise CodecError("corrupt archive: nonzero codeword padding")
        if key in codebook:
            raise CodecError("corrupt archive: duplicate pattern key")
        codebook[key] = bits[:code_len]
    record_count = int.from_bytes(take(8), "big")
    payload = bytes(view[pos:])
    archive = CompressedArchive(
        codebook=codebook, record_count=record_count, payload=payload
    )
    # Parsing is verification: a container that cannot decode cleanly
    # (truncated payload, trailing bytes, dirty padding, inconsistent
    # record count) is rejected at the border, not at first use.
    decode(archive)
    return archive


def write_archive(path: str | Path, archive: CompressedArchive) -> None:
    Path(path).write_bytes(archive_to_bytes(archive))


def read_archive(path: str | Path) -> CompressedArchive:
    return archive_from_bytes(Path(path).read_bytes())
