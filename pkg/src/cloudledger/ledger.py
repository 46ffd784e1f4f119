"""Append-only restore-point ledger and crash recovery.

Every verified update commits one restore point: the cloud manifest, a
full payload snapshot, and the aggregate X (cloud total plus user total
summed per server; a verified commit has S = T, so X is twice the
manifest total). Recovery recomputes the current aggregate Y from the
live cluster; if Y matches the last committed X, checksums still verify,
and every server is up, the state is intact, otherwise the cluster is
rewritten from the last snapshot.

Timestamps are logical clock ticks, not wall time, so ledgers are
byte-reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .cluster import (
    ClusterState,
    load_snapshot,
    read_manifest,
    record_epoch_manifest,
    snapshot_cluster,
)
from .errors import (
    EpochMismatch,
    ManifestFormatError,
    MisalignedServers,
    NothingToRestore,
    SnapshotCorrupt,
    UnverifiedState,
)
from .manifest import Manifest, WeightSummary, parse_manifest, per_server_totals, serialize_manifest
from .protocol import Mode, Verdict, verify_equality


@dataclass(frozen=True)
class RestorePoint:
    """One committed epoch: aggregate X, manifest, payload snapshot, tick."""

    epoch: int
    committed_x: int
    manifest: Manifest
    payload_snapshot: str
    timestamp: int


@dataclass
class Ledger:
    """Append-only list of restore points; points[k].epoch == k.

    When bound to a directory, every commit also persists
    ``<epoch>.manifest``, ``<epoch>.snapshot`` and appends one
    ``<epoch> <timestamp> <committed_x>`` line to ``index``.
    """

    points: list[RestorePoint] = field(default_factory=list)
    directory: Optional[Path] = None

    @property
    def next_epoch(self) -> int:
        return len(self.points)

    def last(self) -> RestorePoint:
        if not self.points:
            raise NothingToRestore("ledger holds no restore points")
        return self.points[-1]


class RecoveryAction(enum.Enum):
    RESTORED = "RESTORED"
    INTACT = "INTACT"


@dataclass(frozen=True)
class RecoveryReport:
    action: RecoveryAction
    epoch: int


def compute_x(summaries: Sequence[WeightSummary]) -> int:
    """Aggregate of committed state: sum over servers of (S_i + T_i)."""
    return sum(s.cloud_total + s.user_total for s in summaries)


def compute_y(previous: Sequence[WeightSummary], deltas: Sequence[WeightSummary]) -> int:
    """Current aggregate: previous totals plus in-flight signed deltas.

    Sum over servers of (S_i + dS_i + T_i + dT_i), lists aligned
    positionally by server index.
    """
    if len(previous) != len(deltas):
        raise MisalignedServers(f"{len(previous)} summaries vs {len(deltas)} deltas")
    return sum(
        p.cloud_total + d.cloud_total + p.user_total + d.user_total
        for p, d in zip(previous, deltas)
    )


def committed_summaries(manifest: Manifest) -> list[WeightSummary]:
    """Per-server summaries of a verified commit, where S_i = T_i."""
    return [
        WeightSummary(cloud_total=w, user_total=w, epoch=manifest.epoch)
        for w in per_server_totals(manifest)
    ]


def commit_restore_point(ledger: Ledger, cluster: ClusterState, verdict: Verdict) -> RestorePoint:
    """Append a restore point for the cluster's current (verified) state.

    Refuses unverified or epoch-desynced commits; on success the cloud
    manifest, a payload snapshot, and X are frozen, the logical clock
    ticks, and the manifest is recorded as the epoch's committed view.
    """
    if not verdict.z:
        raise UnverifiedState("refusing to snapshot a state that failed verification")
    if verdict.epoch != cluster.epoch:
        raise EpochMismatch(f"verdict is for epoch {verdict.epoch}, cluster is at {cluster.epoch}")
    if cluster.epoch != ledger.next_epoch:
        raise EpochMismatch(f"ledger expects epoch {ledger.next_epoch}, cluster is at {cluster.epoch}")

    manifest = read_manifest(cluster)
    point = RestorePoint(
        epoch=cluster.epoch,
        committed_x=compute_x(committed_summaries(manifest)),
        manifest=manifest,
        payload_snapshot=snapshot_cluster(cluster),
        timestamp=ledger.points[-1].timestamp + 1 if ledger.points else 1,
    )
    ledger.points.append(point)
    record_epoch_manifest(cluster, manifest)
    if ledger.directory is not None:
        _persist_point(ledger.directory, point)
    return point


def recover(ledger: Ledger, cluster: ClusterState) -> RecoveryReport:
    """Restore the cluster to the last committed point unless it is intact.

    Intact means: the live aggregate Y equals the committed X, every
    server is alive, and a CHECKSUM comparison against the stored manifest
    passes. Weight equality alone is not trusted, because identical-weight
    substitutions leave Y unchanged. Otherwise the cluster is rewritten
    from the snapshot, crashed servers are revived, the lying read path is
    cleared, and the restored state is re-verified.
    """
    last = ledger.last()
    live = read_manifest(cluster)
    previous = committed_summaries(last.manifest)
    if live.server_count == last.manifest.server_count and live.epoch == last.epoch:
        live_totals = per_server_totals(live)
        deltas = [
            WeightSummary(cloud_total=lw - p.cloud_total, user_total=0, epoch=cluster.epoch)
            for lw, p in zip(live_totals, previous)
        ]
        y = compute_y(previous, deltas)
        intact = (
            y == last.committed_x
            and all(s.alive for s in cluster.servers)
            and verify_equality(last.manifest, live, Mode.CHECKSUM).z
        )
        if intact:
            return RecoveryReport(RecoveryAction.INTACT, last.epoch)

    rewrite_cluster_from_point(cluster, last)
    return RecoveryReport(RecoveryAction.RESTORED, last.epoch)


def rewrite_cluster_from_point(cluster: ClusterState, point: RestorePoint) -> None:
    """Overwrite cluster storage with a restore point's payload snapshot.

    Revives every server, disarms a stale read path, resets the epoch to
    the point's, and re-verifies the result against the stored manifest;
    failure to verify means the snapshot itself is corrupt.
    """
    restored = load_snapshot(point.payload_snapshot, rng_seed=cluster.rng_seed)
    cluster.servers = restored.servers
    cluster.epoch = restored.epoch
    cluster.stale_armed = False
    for server in cluster.servers:
        server.alive = True
    check = verify_equality(point.manifest, read_manifest(cluster), Mode.CHECKSUM)
    if not check.z:
        raise SnapshotCorrupt(f"restored state fails its manifest check ({len(check.divergences)} divergences)")


# --- persistence --------------------------------------------------------------

INDEX_FILE = "index"


def _manifest_path(directory: Path, epoch: int) -> Path:
    return directory / f"{epoch}.manifest"


def _snapshot_path(directory: Path, epoch: int) -> Path:
    return directory / f"{epoch}.snapshot"


def _persist_point(directory: Path, point: RestorePoint) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    _manifest_path(directory, point.epoch).write_text(
        serialize_manifest(point.manifest), encoding="utf-8", newline="\n"
    )
    _snapshot_path(directory, point.epoch).write_text(
        point.payload_snapshot, encoding="utf-8", newline="\n"
    )
    with open(directory / INDEX_FILE, "a", encoding="utf-8", newline="\n") as index:
        index.write(f"{point.epoch} {point.timestamp} {point.committed_x}\n")


def load_ledger(directory: Path) -> Ledger:
    """Load a persisted ledger, revalidating epochs, clocks, X, and snapshots."""
    directory = Path(directory)
    ledger = Ledger(directory=directory)
    index_path = directory / INDEX_FILE
    if not index_path.exists():
        return ledger

    previous_tick = 0
    for position, line in enumerate(index_path.read_text(encoding="utf-8").splitlines()):
        parts = line.split(" ")
        if len(parts) != 3:
            raise ManifestFormatError(f"bad index line: {line!r}")
        epoch, timestamp, committed_x = (int(p) for p in parts)
        if epoch != position:
            raise ManifestFormatError(f"index epoch {epoch} out of sequence at line {position}")
        if timestamp <= previous_tick:
            raise ManifestFormatError(f"index timestamps not strictly increasing at epoch {epoch}")
        previous_tick = timestamp

        manifest = parse_manifest(_manifest_path(directory, epoch).read_text(encoding="utf-8"))
        if manifest.epoch != epoch:
            raise ManifestFormatError(f"manifest file for epoch {epoch} claims epoch {manifest.epoch}")
        if committed_x != compute_x(committed_summaries(manifest)):
            raise ManifestFormatError(f"index X for epoch {epoch} does not match its manifest")
        snapshot_text = _snapshot_path(directory, epoch).read_text(encoding="utf-8")
        snapshot_cluster_state = load_snapshot(snapshot_text)
        if read_manifest(snapshot_cluster_state).records != manifest.records:
            raise SnapshotCorrupt(f"snapshot for epoch {epoch} disagrees with its manifest")

        ledger.points.append(
            RestorePoint(
                epoch=epoch,
                committed_x=committed_x,
                manifest=manifest,
                payload_snapshot=snapshot_text,
                timestamp=timestamp,
            )
        )
    return ledger
