"""Exception types raised across the simulator.

Every error deliberately derives from CloudLedgerError so callers (and the
CLI exit-code table) can distinguish simulator outcomes from programming
bugs.
"""


class CloudLedgerError(Exception):
    """Base class for all errors raised by this package."""


class DuplicateBlock(CloudLedgerError):
    """A (server_index, block_id) address appeared twice while building a manifest."""


class ServerDown(CloudLedgerError):
    """A write targeted a server whose alive flag is False."""


class NoSuchTarget(CloudLedgerError):
    """A fault injection named a server or block that does not exist."""


class NoSuchBlock(CloudLedgerError):
    """A dynamic operation named a block that does not exist."""


class EpochMismatch(CloudLedgerError):
    """Two manifests (or a verdict and a cluster) disagree about the epoch."""


class PreexistingData(CloudLedgerError):
    """Initial upload attempted onto storage that already holds data."""


class UnverifiedState(CloudLedgerError):
    """A restore-point commit was attempted with a failing verdict."""


class NothingToRestore(CloudLedgerError):
    """Recovery or a dynamic operation requires at least one committed restore point."""


class SnapshotCorrupt(CloudLedgerError):
    """A payload snapshot failed its own manifest consistency check."""


class MisalignedServers(CloudLedgerError):
    """Per-server summary lists passed to the aggregate formulas differ in length."""


class StaleEpoch(CloudLedgerError):
    """An operation request carried an epoch that is no longer current."""


class EmptyGrant(CloudLedgerError):
    """An audit grant covers no committed epoch."""


class ManifestFormatError(CloudLedgerError):
    """Serialized manifest, snapshot, or ledger index text failed to parse."""


class PreStateCorrupt(CloudLedgerError):
    """Pre-operation verification against the last restore point failed.

    Carries the failing verdict; the cluster was not mutated.
    """

    def __init__(self, message: str, verdict) -> None:
        super().__init__(message)
        self.verdict = verdict


class PostStateCorrupt(CloudLedgerError):
    """Post-operation verification failed; the cluster was rolled back.

    Carries the failing verdict observed before the rollback.
    """

    def __init__(self, message: str, verdict) -> None:
        super().__init__(message)
        self.verdict = verdict
