"""Embedding records, the NSEB container format, and manifest CSVs.

NSEB files carry labeled visual embeddings (optionally paired with a text
embedding per record) between the extraction side and the numerical core.
Vectors are stored as little-endian float32; see ``read_embeddings`` for the
layout. Parse failures raise the typed errors from :mod:`semnull.errors`.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    DuplicateIdError,
    FormatError,
    NonFiniteError,
    TruncatedError,
    UnsupportedVersionError,
)

NSEB_MAGIC = b"NSEB"
NSEB_VERSION = 1


def _as_vector(v, dim: int | None, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=np.float32)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"{what} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{what} contains non-finite values")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"{what} has dimension {a.shape[0]}, expected {dim}")
    return np.ascontiguousarray(a)


@dataclass(frozen=True)
class EmbeddingRecord:
    """One image's embeddings: id, binary label (1 = generated), source tag,
    visual vector, and an optional text vector of the same dimension."""

    id: str
    label: int
    source: str
    visual: np.ndarray
    text: np.ndarray | None = None

    def __post_init__(self):
        if int(self.label) not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        object.__setattr__(self, "label", int(self.label))
        visual = _as_vector(self.visual, None, f"record {self.id!r} visual")
        object.__setattr__(self, "visual", visual)
        if self.text is not None:
            text = _as_vector(
                self.text, visual.shape[0], f"record {self.id!r} text"
            )
            object.__setattr__(self, "text", text)

    @property
    def dim(self) -> int:
        return int(self.visual.shape[0])


@dataclass(frozen=True)
class EmbeddingSet:
    """An ordered, immutable collection of records sharing one dimension."""

    dim: int
    records: tuple[EmbeddingRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        seen = set()
        for r in self.records:
            if r.dim != self.dim:
                raise ValueError(
                    f"record {r.id!r} has dimension {r.dim}, set is {self.dim}"
                )
            if r.id in seen:
                raise DuplicateIdError(f"duplicate record id {r.id!r}")
            seen.add(r.id)

    def __len__(self) -> int:
        return len(self.records)

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)

    def sources(self) -> list[str]:
        return [r.source for r in self.records]


def visual_matrix(eset: EmbeddingSet) -> np.ndarray:
    """All visual vectors stacked as an (n, d) float32 matrix, record order."""
    if not eset.records:
        return np.empty((0, eset.dim), dtype=np.float32)
    return np.stack([r.visual for r in eset.records])


def text_matrix(eset: EmbeddingSet) -> np.ndarray:
    """Text vectors of the records that have one, stacked in record order."""
    rows = [r.text for r in eset.records if r.text is not None]
    if not rows:
        raise ValueError("no records carry a text vector")
    return np.stack(rows)


def _encode_str(s: str, what: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError(f"{what} exceeds 65535 encoded bytes")
    return struct.pack("<H", len(raw)) + raw


def write_embeddings(eset: EmbeddingSet, sink) -> int:
    """Serialize the set to ``sink`` (a binary file object); returns bytes
    written. Output is byte-deterministic for a given set."""
    parts = [
        NSEB_MAGIC,
        struct.pack("<HIQ", NSEB_VERSION, eset.dim, len(eset.records)),
    ]
    for r in eset.records:
        flags = 1 if r.text is not None else 0
        parts.append(_encode_str(r.id, f"record id {r.id!r}"))
        parts.append(struct.pack("<B", r.label))
        parts.append(_encode_str(r.source, f"record {r.id!r} source"))
        parts.append(struct.pack("<B", flags))
        parts.append(np.ascontiguousarray(r.visual, dtype="<f4").tobytes())
        if r.text is not None:
            parts.append(np.ascontiguousarray(r.text, dtype="<f4").tobytes())
    blob = b"".join(parts)
    sink.write(blob)
    return len(blob)


class _Cursor:
    """Bounds-checked reader over a byte buffer."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.context = "header"

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.data):
            raise TruncatedError(
                f"truncated stream: needed {n} more bytes for {self.context}, "
                f"found {len(self.data) - self.pos}"
            )
        view = memoryview(self.data)[self.pos : self.pos + n]
        self.pos += n
        return view

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def utf8(self, what: str) -> str:
        n = self.u16()
        try:
            return bytes(self.take(n)).decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"{self.context}: {what} is not valid UTF-8") from e

    def f32_vector(self, dim: int) -> np.ndarray:
        raw = self.take(4 * dim)
        return np.frombuffer(raw, dtype="<f4").astype(np.float32)


def read_embeddings(source) -> EmbeddingSet:
    """Parse an NSEB stream back into an :class:`EmbeddingSet`.

    Layout (all little-endian): magic ``NSEB``, version u16, dim u32, count
    u64; then per record: id_len u16 + UTF-8 id, label u8, source_len u16 +
    UTF-8 source, flags u8 (bit0 = text present), dim float32 visual values,
    and, when flagged, dim float32 text values.
    """
    data = source.read()
    cur = _Cursor(data)
    magic = bytes(cur.take(4))
    if magic != NSEB_MAGIC:
        raise BadMagicError(f"expected magic {NSEB_MAGIC!r}, got {magic!r}")
    version = cur.u16()
    if version != NSEB_VERSION:
        raise UnsupportedVersionError(f"unsupported NSEB version {version}")
    dim = cur.u32()
    if dim < 1:
        raise FormatError(f"dimension must be >= 1, got {dim}")
    count = cur.u64()
    records = []
    ids = set()
    for i in range(count):
        cur.context = f"record {i + 1} of {count}"
        rid = cur.utf8("id")
        if rid in ids:
            raise DuplicateIdError(f"duplicate record id {rid!r}")
        ids.add(rid)
        label = cur.u8()
        if label not in (0, 1):
            raise FormatError(f"{cur.context}: label byte {label} not in {{0,1}}")
        source_tag = cur.utf8("source")
        flags = cur.u8()
        if flags & ~1:
            raise FormatError(f"{cur.context}: unknown flag bits 0x{flags:02x}")
        visual = cur.f32_vector(dim)
        text = cur.f32_vector(dim) if flags & 1 else None
        if not np.all(np.isfinite(visual)) or (
            text is not None and not np.all(np.isfinite(text))
        ):
            raise NonFiniteError(f"{cur.context}: non-finite vector values")
        records.append(
            EmbeddingRecord(id=rid, label=label, source=source_tag,
                            visual=visual, text=text)
        )
    if cur.pos != len(data):
        raise FormatError(f"{len(data) - cur.pos} trailing bytes after last record")
    return EmbeddingSet(dim=dim, records=tuple(records))


@dataclass(frozen=True)
class ManifestEntry:
    """One image listed for extraction: file path, label, source tag."""

    path: str
    label: int
    source: str

    def __post_init__(self):
        if int(self.label) not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        object.__setattr__(self, "label", int(self.label))


MANIFEST_HEADER = ["path", "label", "source"]


def read_manifest(fp) -> list[ManifestEntry]:
    """Parse a `path,label,source` manifest CSV (header row required)."""
    rows = list(csv.reader(fp))
    if not rows or rows[0] != MANIFEST_HEADER:
        raise FormatError(
            f"manifest must start with header {','.join(MANIFEST_HEADER)!r}"
        )
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"manifest line {lineno}: expected 3 fields, got {len(row)}")
        path, label, source = row
        if label not in ("0", "1"):
            raise FormatError(f"manifest line {lineno}: label {label!r} not in {{0,1}}")
        entries.append(ManifestEntry(path=path, label=int(label), source=source))
    return entries


def write_manifest(entries, fp) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in entries:
        writer.writerow([e.path, e.label, e.source])
