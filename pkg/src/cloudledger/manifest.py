"""Block and manifest data model.

A DataBlock is the payload-bearing unit stored on a server; a BlockRecord
is its metadata projection (no payload); a Manifest is the ordered list of
records for one side of the reading protocol (user level before upload,
cloud level after), plus recomputed totals. Manifests are the values the
verification protocol compares, so everything here is immutable and the
serialization is canonical: same records in, same bytes out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .checksum import checksum_hex, fnv1a64
from .errors import DuplicateBlock, ManifestFormatError


class Level(enum.Enum):
    """Which side of the reading protocol produced a manifest."""

    USER = "USER"
    CLOUD = "CLOUD"


class DataBlock(NamedTuple):
    """One stored unit of payload.

    weight is always the exact byte length of payload and checksum its
    FNV-1a 64 digest; construct through make_block to keep that true.
    block_id is the block's ordinal within its owning server. A NamedTuple
    because simulations create these by the hundred thousand.
    """

    block_id: int
    payload: bytes
    weight: int
    checksum: int


class BlockRecord(NamedTuple):
    """Pure metadata for one block: its address plus (weight, checksum).

    Field order doubles as the manifest sort order.
    """

    server_index: int
    block_id: int
    weight: int
    checksum: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.server_index, self.block_id)


@dataclass(frozen=True)
class Manifest:
    """Ordered per-server, per-block record list with recomputed totals.

    unavailable_servers is read-side state only: servers that could not be
    read when the manifest was rebuilt. It never appears in the canonical
    serialization (committed manifests come from verified clusters, which
    have no unavailable servers); the verdict layer uses it to distinguish
    a crashed server from silently missing blocks.
    """

    level: Level
    epoch: int
    records: tuple[BlockRecord, ...]
    total_weight: int
    server_count: int
    unavailable_servers: frozenset[int] = field(default=frozenset())

    def record_map(self) -> dict[tuple[int, int], BlockRecord]:
        return {r.key: r for r in self.records}


@dataclass(frozen=True)
class WeightSummary:
    """Per-server (cloud_total, user_total) pair at one epoch.

    Genuine summaries are non-negative; the same type also carries the
    signed per-server deltas of an in-flight operation when computing the
    pre-crash aggregate, so no sign check is enforced here.
    """

    cloud_total: int
    user_total: int
    epoch: int


def make_block(server_index: int, block_id: int, payload: bytes) -> DataBlock:
    """Build a DataBlock destined for ``server_index``.

    The server index is validated for the caller's bookkeeping but not
    stored; ownership lives in the cluster structure and in BlockRecord.
    """
    if server_index < 0:
        raise ValueError(f"server_index must be >= 0, got {server_index}")
    if block_id < 0:
        raise ValueError(f"block_id must be >= 0, got {block_id}")
    payload = bytes(payload)
    return DataBlock(
        block_id=block_id,
        payload=payload,
        weight=len(payload),
        checksum=fnv1a64(payload),
    )


def manifest_from_records(
    level: Level,
    epoch: int,
    records: Iterable[BlockRecord],
    server_count: int,
    unavailable_servers: Iterable[int] = (),
) -> Manifest:
    """Sort, deduplicate-check, and total an iterable of records."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    ordered = sorted(records)
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.key == cur.key:
            raise DuplicateBlock(f"duplicate block at server={cur.server_index} block={cur.block_id}")
    return Manifest(
        level=level,
        epoch=epoch,
        records=tuple(ordered),
        total_weight=sum(r.weight for r in ordered),
        server_count=server_count,
        unavailable_servers=frozenset(unavailable_servers),
    )


def build_manifest(
    level: Level,
    epoch: int,
    blocks: Sequence[Sequence[DataBlock]],
    unavailable_servers: Iterable[int] = (),
) -> Manifest:
    """Build a manifest from per-server block lists.

    Records are sorted by (server_index, block_id) and totals are summed
    from scratch, so the result depends only on the block set, not on
    insertion order. Raises DuplicateBlock if an address repeats.
    """
    records = (
        BlockRecord(server_index, block.block_id, block.weight, block.checksum)
        for server_index, server_blocks in enumerate(blocks)
        for block in server_blocks
    )
    return manifest_from_records(level, epoch, records, len(blocks), unavailable_servers)


def per_server_totals(manifest: Manifest) -> list[int]:
    """Sum of record weights per server index 0..server_count-1."""
    totals = [0] * manifest.server_count
    for record in manifest.records:
        totals[record.server_index] += record.weight
    return totals


def serialize_manifest(manifest: Manifest) -> str:
    """Canonical line-oriented form: header, one line per record, END.

    LF endings, no trailing whitespace, checksums as 16 lowercase hex
    digits. Byte-identical for equal manifests; any differing record
    tuple changes the output.
    """
    lines = [
        f"MANIFEST v1 level={manifest.level.value} epoch={manifest.epoch}"
        f" servers={manifest.server_count} total={manifest.total_weight}"
    ]
    for r in manifest.records:
        lines.append(f"{r.server_index} {r.block_id} {r.weight} {checksum_hex(r.checksum)}")
    lines.append("END")
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> dict[str, str]:
    parts = line.split(" ")
    if parts[:2] != ["MANIFEST", "v1"]:
        raise ManifestFormatError(f"bad manifest header: {line!r}")
    fields = {}
    for part in parts[2:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise ManifestFormatError(f"bad manifest header field: {part!r}")
        fields[key] = value
    return fields


def parse_manifest(text: str) -> Manifest:
    """Parse serialize_manifest output, revalidating every invariant."""
    lines = text.splitlines()
    if not lines:
        raise ManifestFormatError("empty manifest text")
    header = _parse_header(lines[0])
    try:
        level = Level(header["level"])
        epoch = int(header["epoch"])
        server_count = int(header["servers"])
        total = int(header["total"])
    except (KeyError, ValueError) as exc:
        raise ManifestFormatError(f"bad manifest header: {lines[0]!r}") from exc

    if not lines[-1] == "END":
        raise ManifestFormatError("manifest not terminated by END")
    records = []
    for line in lines[1:-1]:
        parts = line.split(" ")
        if len(parts) != 4:
            raise ManifestFormatError(f"bad record line: {line!r}")
        try:
            record = BlockRecord(
                server_index=int(parts[0]),
                block_id=int(parts[1]),
                weight=int(parts[2]),
                checksum=int(parts[3], 16),
            )
        except ValueError as exc:
            raise ManifestFormatError(f"bad record line: {line!r}") from exc
        if len(parts[3]) != 16 or parts[3] != checksum_hex(record.checksum):
            raise ManifestFormatError(f"bad checksum field: {parts[3]!r}")
        records.append(record)

    for prev, cur in zip(records, records[1:]):
        if prev.key >= cur.key:
            raise ManifestFormatError("records out of order")
    if sum(r.weight for r in records) != total:
        raise ManifestFormatError("header total does not match record weights")
    if records and server_count < 1:
        raise ManifestFormatError("server count must be >= 1 for non-empty manifest")
    return Manifest(
        level=level,
        epoch=epoch,
        records=tuple(records),
        total_weight=total,
        server_count=server_count,
    )
