"""Simulated multi-server storage cluster.

Uploads are split into fixed-size blocks placed round-robin across R
servers. Cloud-level manifests are always rebuilt from the stored
payloads, never echoed from client metadata, so any corruption of stored
bytes is visible to the reading protocol. Fault injection covers byte
corruption, truncation, same-weight substitution, block drops, server
crashes (which erase that server's data), and a lying read path that
keeps serving the previous epoch's manifest.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .checksum import fnv1a64
from .errors import (
    ManifestFormatError,
    NoSuchTarget,
    PreexistingData,
    ServerDown,
    SnapshotCorrupt,
)
from .manifest import (
    BlockRecord,
    DataBlock,
    Level,
    Manifest,
    build_manifest,
    make_block,
    manifest_from_records,
    parse_manifest,
    serialize_manifest,
)
from .rng import XorShift64Star


class FaultKind(enum.Enum):
    FLIP_BYTE = "flip-byte"
    TRUNCATE = "truncate"
    SAME_WEIGHT_SUBSTITUTE = "same-weight"
    DROP_BLOCK = "drop-block"
    SERVER_CRASH = "crash"
    CSP_STALE_MANIFEST = "stale-manifest"


@dataclass(frozen=True)
class FaultSpec:
    """One deterministic fault: what to do, where, and the byte-stream seed."""

    kind: FaultKind
    target_server: int
    target_block: Optional[int] = None
    seed: int = 0


@dataclass(frozen=True)
class FaultReport:
    """What a fault actually did, as metadata (before/after records)."""

    kind: FaultKind
    target_server: int
    target_block: Optional[int]
    before: Optional[BlockRecord]
    after: Optional[BlockRecord]
    note: str


@dataclass
class ServerState:
    """One server partition: ordered blocks plus a liveness flag."""

    server_index: int
    blocks: list[DataBlock] = field(default_factory=list)
    alive: bool = True

    def find_block(self, block_id: int) -> Optional[DataBlock]:
        for block in self.blocks:
            if block.block_id == block_id:
                return block
        return None


@dataclass
class ClusterState:
    """The simulated CSP: R servers, the current epoch, and read-path state.

    manifest_history holds the cloud manifest committed at each epoch; the
    stale-manifest fault replays history[epoch - 1] through read_manifest
    (stamped with the current epoch, as a hiding CSP would) until a restore
    clears it. Mutation is serialized through a single driver; reads are
    side-effect free.
    """

    servers: list[ServerState]
    epoch: int = 0
    rng_seed: int = 0
    stale_armed: bool = False
    manifest_history: dict[int, Manifest] = field(default_factory=dict)

    @property
    def server_count(self) -> int:
        return len(self.servers)

    def total_stored_bytes(self) -> int:
        return sum(b.weight for s in self.servers for b in s.blocks)

    def has_data(self) -> bool:
        return any(s.blocks for s in self.servers)


def new_cluster(server_count: int, rng_seed: int = 0) -> ClusterState:
    if server_count < 1:
        raise ValueError(f"server_count must be >= 1, got {server_count}")
    return ClusterState(
        servers=[ServerState(server_index=i) for i in range(server_count)],
        rng_seed=rng_seed,
    )


def partition_upload(payload: bytes, server_count: int, block_size: int) -> list[list[DataBlock]]:
    """Split a payload into blocks and place them round-robin.

    Global block k (payload[k*B : (k+1)*B], last one ragged) goes to
    server k mod n with within-server block ids 0, 1, 2, ...; reading the
    blocks back in global order reconstructs the payload exactly.
    """
    if server_count < 1:
        raise ValueError(f"server_count must be >= 1, got {server_count}")
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")
    per_server: list[list[DataBlock]] = [[] for _ in range(server_count)]
    for k in range(0, len(payload), block_size):
        server_index = (k // block_size) % server_count
        per_server[server_index].append(
            make_block(server_index, len(per_server[server_index]), payload[k : k + block_size])
        )
    return per_server


def upload(cluster: ClusterState, payload: bytes, block_size: int) -> Manifest:
    """Store a payload across all servers and return the cloud manifest.

    The manifest is rebuilt by re-reading what was stored. Refuses to run
    against a cluster that already holds data (initial-upload contract) or
    has a dead server; in both cases the cluster is left untouched.
    """
    dead = [s.server_index for s in cluster.servers if not s.alive]
    if dead:
        raise ServerDown(f"servers not alive: {dead}")
    if cluster.has_data():
        raise PreexistingData("cluster already holds data; initial upload requires empty storage")
    for server, blocks in zip(cluster.servers, partition_upload(payload, cluster.server_count, block_size)):
        server.blocks = list(blocks)
    return read_manifest(cluster)


def read_manifest(cluster: ClusterState) -> Manifest:
    """Rebuild the cloud-level manifest from currently stored payloads.

    Weights and checksums are recomputed from the bytes on every read.
    Dead servers contribute no records and are listed in
    unavailable_servers. While the stale-manifest fault is armed, the
    previous epoch's committed records are served instead, stamped with
    the current epoch (the lying CSP claims they are current).
    """
    if cluster.stale_armed:
        base = cluster.manifest_history.get(cluster.epoch - 1)
        if base is None:
            raise NoSuchTarget("stale manifest armed but no previous-epoch manifest exists")
        return Manifest(
            level=Level.CLOUD,
            epoch=cluster.epoch,
            records=base.records,
            total_weight=base.total_weight,
            server_count=cluster.server_count,
        )
    records = (
        BlockRecord(server.server_index, block.block_id, len(block.payload), fnv1a64(block.payload))
        for server in cluster.servers
        if server.alive
        for block in server.blocks
    )
    return manifest_from_records(
        Level.CLOUD,
        cluster.epoch,
        records,
        cluster.server_count,
        unavailable_servers=(s.server_index for s in cluster.servers if not s.alive),
    )


def record_epoch_manifest(cluster: ClusterState, manifest: Manifest) -> None:
    """Remember the manifest committed for an epoch (feeds the stale read path)."""
    cluster.manifest_history[manifest.epoch] = manifest


def _replace_block(server: ServerState, block_id: int, payload: bytes) -> DataBlock:
    for i, block in enumerate(server.blocks):
        if block.block_id == block_id:
            rebuilt = make_block(server.server_index, block_id, payload)
            server.blocks[i] = rebuilt
            return rebuilt
    raise NoSuchTarget(f"no block {block_id} on server {server.server_index}")


def _require_block(server: ServerState, block_id: Optional[int]) -> DataBlock:
    if block_id is None:
        raise NoSuchTarget("fault kind requires a target block")
    block = server.find_block(block_id)
    if block is None:
        raise NoSuchTarget(f"no block {block_id} on server {server.server_index}")
    return block


def _record_of(server_index: int, block: DataBlock) -> BlockRecord:
    return BlockRecord(
        server_index=server_index,
        block_id=block.block_id,
        weight=block.weight,
        checksum=block.checksum,
    )


def inject_fault(cluster: ClusterState, fault: FaultSpec) -> FaultReport:
    """Apply one fault to the cluster, deterministically from (state, seed)."""
    if not 0 <= fault.target_server < cluster.server_count:
        raise NoSuchTarget(f"no server {fault.target_server}")
    server = cluster.servers[fault.target_server]
    stream = XorShift64Star(cluster.rng_seed ^ fault.seed)

    if fault.kind is FaultKind.SERVER_CRASH:
        erased = sum(b.weight for b in server.blocks)
        server.alive = False
        server.blocks = []
        return FaultReport(
            fault.kind, fault.target_server, None, None, None,
            f"server {fault.target_server} crashed, {erased} bytes erased",
        )

    if fault.kind is FaultKind.CSP_STALE_MANIFEST:
        if cluster.epoch - 1 not in cluster.manifest_history:
            raise NoSuchTarget("no previous-epoch manifest to serve as stale")
        cluster.stale_armed = True
        return FaultReport(
            fault.kind, fault.target_server, None, None, None,
            f"read path now serves the epoch-{cluster.epoch - 1} manifest",
        )

    block = _require_block(server, fault.target_block)
    before = _record_of(server.server_index, block)

    if fault.kind is FaultKind.DROP_BLOCK:
        server.blocks = [b for b in server.blocks if b.block_id != block.block_id]
        return FaultReport(fault.kind, fault.target_server, block.block_id, before, None, "block dropped")

    if block.weight < 1:
        raise NoSuchTarget(f"{fault.kind.value} needs a non-empty block")

    if fault.kind is FaultKind.FLIP_BYTE:
        position = stream.randrange(block.weight)
        xor_value = 1 + stream.randrange(255)
        corrupted = bytearray(block.payload)
        corrupted[position] ^= xor_value
        after_block = _replace_block(server, block.block_id, bytes(corrupted))
        note = f"byte {position} xored with 0x{xor_value:02x}"
    elif fault.kind is FaultKind.TRUNCATE:
        cut = 1 + stream.randrange(block.weight)
        after_block = _replace_block(server, block.block_id, block.payload[: block.weight - cut])
        note = f"{cut} trailing bytes removed"
    elif fault.kind is FaultKind.SAME_WEIGHT_SUBSTITUTE:
        substitute = stream.bytes(block.weight)
        while substitute == block.payload or fnv1a64(substitute) == block.checksum:
            substitute = stream.bytes(block.weight)
        after_block = _replace_block(server, block.block_id, substitute)
        note = "payload substituted, same weight"
    else:
        raise NoSuchTarget(f"unknown fault kind {fault.kind!r}")

    return FaultReport(
        fault.kind, fault.target_server, block.block_id,
        before, _record_of(server.server_index, after_block), note,
    )


# --- cluster snapshots -------------------------------------------------------
#
# A snapshot is the canonical manifest text followed by one payload line per
# block (`<server> <block> <payload hex>`, `-` for an empty payload), then
# optional status lines (`DOWN <server>`, `STALE`) and a final END. Status
# lines only appear when the condition is present, so snapshots of healthy
# clusters are exactly manifest-plus-payloads.


def snapshot_cluster(cluster: ClusterState) -> str:
    per_server = [list(s.blocks) for s in cluster.servers]
    manifest = build_manifest(Level.CLOUD, cluster.epoch, per_server)
    lines = [serialize_manifest(manifest).rstrip("\n")]
    for server in cluster.servers:
        for block in server.blocks:
            payload_hex = block.payload.hex() or "-"
            lines.append(f"{server.server_index} {block.block_id} {payload_hex}")
    for server in cluster.servers:
        if not server.alive:
            lines.append(f"DOWN {server.server_index}")
    if cluster.stale_armed:
        lines.append("STALE")
    lines.append("END")
    return "\n".join(lines) + "\n"


def load_snapshot(text: str, rng_seed: int = 0) -> ClusterState:
    """Rebuild a cluster from snapshot text, verifying payloads against the
    embedded manifest. Any inconsistency raises SnapshotCorrupt."""
    lines = text.splitlines()
    if "END" not in lines:
        raise SnapshotCorrupt("snapshot missing manifest terminator")
    split = lines.index("END")
    try:
        manifest = parse_manifest("\n".join(lines[: split + 1]) + "\n")
    except ManifestFormatError as exc:
        raise SnapshotCorrupt(f"snapshot manifest unreadable: {exc}") from exc

    if not lines or lines[-1] != "END":
        raise SnapshotCorrupt("snapshot not terminated by END")
    payloads: dict[tuple[int, int], bytes] = {}
    down: set[int] = set()
    stale = False
    for line in lines[split + 1 : -1]:
        try:
            if line.startswith("DOWN "):
                down.add(int(line.split(" ")[1]))
                continue
            if line == "STALE":
                stale = True
                continue
            parts = line.split(" ")
            if len(parts) != 3:
                raise SnapshotCorrupt(f"bad payload line: {line!r}")
            key = (int(parts[0]), int(parts[1]))
            payload = b"" if parts[2] == "-" else bytes.fromhex(parts[2])
        except ValueError as exc:
            raise SnapshotCorrupt(f"bad snapshot line: {line!r}") from exc
        if key in payloads:
            raise SnapshotCorrupt(f"duplicate payload line for {key}")
        payloads[key] = payload

    expected = manifest.record_map()
    if set(payloads) != set(expected):
        raise SnapshotCorrupt("payload lines do not match manifest records")
    for key, payload in payloads.items():
        record = expected[key]
        if len(payload) != record.weight or fnv1a64(payload) != record.checksum:
            raise SnapshotCorrupt(f"payload for server={key[0]} block={key[1]} fails its manifest record")

    cluster = new_cluster(manifest.server_count, rng_seed=rng_seed)
    cluster.epoch = manifest.epoch
    cluster.stale_armed = stale
    for record in manifest.records:
        cluster.servers[record.server_index].blocks.append(
            make_block(record.server_index, record.block_id, payloads[record.key])
        )
    for server_index in down:
        if not 0 <= server_index < cluster.server_count:
            raise SnapshotCorrupt(f"DOWN line names unknown server {server_index}")
        cluster.servers[server_index].alive = False
    return cluster
