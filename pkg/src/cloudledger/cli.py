"""Command-line scenario runner.

Ties the simulator together behind deterministic, scriptable subcommands:

    upload, verify, append, delete, update, tamper, crash, recover,
    audit, history, report

State lives in the ledger directory (--ledger-dir, or CLOUDLEDGER_DIR):
the restore-point files and index, the live cluster snapshot
(cluster.state), the effective configuration (config, key=value lines),
and the operation journal. Identical configuration plus an identical
command sequence reproduces byte-identical directory contents.

Exit codes: 0 success / verified, 1 verification or operation failure,
2 I/O or usage failure, 3 preexisting data, 4 missing target, 5 stale
epoch, 6 nothing to restore.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import ops
from .audit import AuditGrant, audit as run_audit
from .cluster import (
    ClusterState,
    FaultKind,
    FaultSpec,
    inject_fault,
    load_snapshot,
    new_cluster,
    read_manifest,
    snapshot_cluster,
)
from .errors import (
    CloudLedgerError,
    EmptyGrant,
    EpochMismatch,
    ManifestFormatError,
    NoSuchBlock,
    NoSuchTarget,
    NothingToRestore,
    PostStateCorrupt,
    PreexistingData,
    PreStateCorrupt,
    ServerDown,
    SnapshotCorrupt,
    StaleEpoch,
    UnverifiedState,
)
from .ledger import Ledger, commit_restore_point, load_ledger, recover
from .protocol import Mode, render_verdict_report, round_trip_verify, verify_equality
from .rng import generate_payload

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_IO = 2
EXIT_PREEXISTING = 3
EXIT_NO_TARGET = 4
EXIT_STALE = 5
EXIT_NOTHING_TO_RESTORE = 6

_EXIT_BY_ERROR = [
    (PreexistingData, EXIT_PREEXISTING),
    ((NoSuchTarget, NoSuchBlock, EmptyGrant), EXIT_NO_TARGET),
    ((StaleEpoch, EpochMismatch), EXIT_STALE),
    (NothingToRestore, EXIT_NOTHING_TO_RESTORE),
    ((PreStateCorrupt, PostStateCorrupt, UnverifiedState, ServerDown), EXIT_FAILED),
    ((SnapshotCorrupt, ManifestFormatError), EXIT_IO),
]

DEFAULT_SERVERS = 4
DEFAULT_BLOCK_SIZE = 4096
DEFAULT_MODE = Mode.CHECKSUM
DEFAULT_SEED = 42
DEFAULT_LEDGER_DIR = "ledger"

CONFIG_FILE = "config"
CLUSTER_FILE = "cluster.state"
JOURNAL_FILE = "journal"


@dataclass(frozen=True)
class SimConfig:
    server_count: int
    block_size: int
    mode: Mode
    seed: int
    ledger_dir: Path


def _parse_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ManifestFormatError(f"bad config line in {path}: {line!r}")
        values[key.strip()] = value.strip()
    return values


def _write_config_file(path: Path, config: SimConfig) -> None:
    text = (
        f"servers={config.server_count}\n"
        f"block_size={config.block_size}\n"
        f"mode={config.mode.value}\n"
        f"seed={config.seed}\n"
    )
    path.write_text(text, encoding="utf-8", newline="\n")


def resolve_config(args: argparse.Namespace) -> SimConfig:
    """Flags override the config file, which overrides defaults.

    The config file is --config when given, otherwise the one the upload
    command wrote into the ledger directory.
    """
    ledger_dir = Path(
        args.ledger_dir
        or os.environ.get("CLOUDLEDGER_DIR")
        or DEFAULT_LEDGER_DIR
    )
    file_values: dict[str, str] = {}
    config_path = Path(args.config) if args.config else ledger_dir / CONFIG_FILE
    if config_path.exists():
        file_values = _parse_config_file(config_path)

    def pick(flag, key: str, fallback):
        if flag is not None:
            return flag
        if key in file_values:
            return file_values[key]
        return fallback

    return SimConfig(
        server_count=int(pick(args.servers, "servers", DEFAULT_SERVERS)),
        block_size=int(pick(args.block_size, "block_size", DEFAULT_BLOCK_SIZE)),
        mode=Mode(pick(args.mode, "mode", DEFAULT_MODE.value)),
        seed=int(pick(args.seed, "seed", DEFAULT_SEED)),
        ledger_dir=ledger_dir,
    )


def _load_state(config: SimConfig) -> tuple[ClusterState, Ledger]:
    ledger = load_ledger(config.ledger_dir)
    cluster_path = config.ledger_dir / CLUSTER_FILE
    cluster = load_snapshot(cluster_path.read_text(encoding="utf-8"), rng_seed=config.seed)
    for point in ledger.points:
        cluster.manifest_history[point.epoch] = point.manifest
    return cluster, ledger


def _save_cluster(config: SimConfig, cluster: ClusterState) -> None:
    (config.ledger_dir / CLUSTER_FILE).write_text(
        snapshot_cluster(cluster), encoding="utf-8", newline="\n"
    )


def _resolve_payload(parser: argparse.ArgumentParser, args: argparse.Namespace, config: SimConfig,
                     epoch: int) -> bytes:
    if args.input is not None and args.gen_bytes is not None:
        parser.error("give either an input file or --gen-bytes, not both")
    if args.input is not None:
        return Path(args.input).read_bytes()
    if args.gen_bytes is not None:
        return generate_payload(config.seed ^ epoch, args.gen_bytes)
    parser.error("an input file or --gen-bytes is required")
    raise AssertionError("unreachable")


def _append_journal(config: SimConfig, line: str) -> None:
    with open(config.ledger_dir / JOURNAL_FILE, "a", encoding="utf-8", newline="\n") as fh:
        fh.write(line + "\n")


# --- commands ------------------------------------------------------------------


def cmd_upload(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    if config.ledger_dir.exists() and any(config.ledger_dir.iterdir()):
        raise PreexistingData(f"ledger directory {config.ledger_dir} is not empty")
    payload = _resolve_payload(parser, args, config, epoch=0)
    cluster = new_cluster(config.server_count, rng_seed=config.seed)
    verdict = round_trip_verify(
        cluster, payload, config.server_count, config.block_size, config.mode
    )
    print(
        f"UPLOAD bytes={len(payload)} servers={config.server_count}"
        f" block_size={config.block_size} mode={config.mode.value} seed={config.seed}"
    )
    print(render_verdict_report(verdict), end="")
    if not verdict.z:
        return EXIT_FAILED
    ledger = Ledger(directory=config.ledger_dir)
    commit_restore_point(ledger, cluster, verdict)
    _write_config_file(config.ledger_dir / CONFIG_FILE, config)
    _save_cluster(config, cluster)
    return EXIT_OK


def cmd_verify(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    cluster, ledger = _load_state(config)
    stored = ledger.last().manifest
    verdict = verify_equality(stored, read_manifest(cluster), config.mode)
    report = render_verdict_report(verdict)
    if args.report:
        print(report, end="")
    else:
        print(report.splitlines()[0])
    return EXIT_OK if verdict.z else EXIT_FAILED


def cmd_op(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    cluster, ledger = _load_state(config)
    kind = ops.OperationKind(args.op_kind)
    payload: Optional[bytes] = None
    if kind in (ops.OperationKind.APPEND, ops.OperationKind.UPDATE):
        payload = _resolve_payload(parser, args, config, epoch=cluster.epoch)
    request = ops.OperationRequest(
        kind=kind,
        server_index=args.server,
        block_id=args.block if kind is not ops.OperationKind.APPEND else None,
        payload=payload,
        epoch_expected=args.expect_epoch if args.expect_epoch is not None else cluster.epoch,
    )
    try:
        result = ops.apply(cluster, ledger, request)
    except (PreStateCorrupt, PostStateCorrupt) as exc:
        print(render_verdict_report(exc.verdict), end="")
        raise
    line = ops.render_journal_line(result)
    _append_journal(config, line)
    _save_cluster(config, cluster)
    print(line)
    return EXIT_OK


def cmd_tamper(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    cluster, _ = _load_state(config)
    fault = FaultSpec(
        kind=FaultKind(args.kind),
        target_server=args.server,
        target_block=args.block,
        seed=args.fault_seed if args.fault_seed is not None else config.seed,
    )
    report = inject_fault(cluster, fault)
    _save_cluster(config, cluster)
    block = report.target_block if report.target_block is not None else "-"
    print(f"TAMPER {report.kind.value} server={report.target_server} block={block} note={report.note}")
    return EXIT_OK


def cmd_recover(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    ledger = load_ledger(config.ledger_dir)
    if not ledger.points:
        raise NothingToRestore(f"no restore points in {config.ledger_dir}")
    cluster, ledger = _load_state(config)
    report = recover(ledger, cluster)
    _save_cluster(config, cluster)
    print(f"{report.action.value} epoch={report.epoch}")
    return EXIT_OK


def cmd_audit(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    cluster, ledger = _load_state(config)
    first, sep, last = args.epochs.partition("..")
    grant = AuditGrant(
        first_epoch=int(first),
        last_epoch=int(last) if sep else int(first),
        mode=Mode(args.mode) if args.mode else config.mode,
    )
    verdicts = run_audit(ledger, cluster, grant)
    for verdict in verdicts:
        for line in render_verdict_report(verdict).splitlines():
            print(f"TPA {line}")
    return EXIT_OK if all(v.z for v in verdicts) else EXIT_FAILED


def cmd_history(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    journal_path = config.ledger_dir / JOURNAL_FILE
    if journal_path.exists():
        print(journal_path.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_report(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    config = resolve_config(args)
    cluster, ledger = _load_state(config)
    print(
        f"REPORT epoch={cluster.epoch} servers={cluster.server_count}"
        f" block_size={config.block_size} mode={config.mode.value} seed={config.seed}"
    )
    print(f"live_total={cluster.total_stored_bytes()}")
    print(f"points={len(ledger.points)}")
    for point in ledger.points:
        print(f"{point.epoch} {point.timestamp} {point.committed_x}")
    print("END")
    return EXIT_OK


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudledger",
        description="Deterministic multi-server storage integrity simulator.",
    )
    parser.add_argument("--servers", type=int, help=f"server count (default {DEFAULT_SERVERS})")
    parser.add_argument("--block-size", type=int, help=f"block size in bytes (default {DEFAULT_BLOCK_SIZE})")
    parser.add_argument("--mode", choices=[m.value for m in Mode], help="comparison mode")
    parser.add_argument("--seed", type=int, help=f"seed for payload generation and faults (default {DEFAULT_SEED})")
    parser.add_argument("--ledger-dir", help="state directory (default $CLOUDLEDGER_DIR or ./ledger)")
    parser.add_argument("--config", help="key=value config file read before flags are applied")

    sub = parser.add_subparsers(dest="command", required=True)

    def add_payload_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("input", nargs="?", help="payload file")
        p.add_argument("--gen-bytes", type=int, help="generate this many seeded bytes instead of reading a file")

    p = sub.add_parser("upload", help="initial upload with before/after verification")
    add_payload_args(p)
    p.set_defaults(func=cmd_upload)

    p = sub.add_parser("verify", help="compare the last committed manifest against live cloud state")
    p.add_argument("--report", action="store_true", help="print one line per divergence")
    p.set_defaults(func=cmd_verify)

    for kind in ops.OperationKind:
        p = sub.add_parser(kind.value.lower(), help=f"verified {kind.value.lower()} operation")
        p.add_argument("--server", type=int, required=True)
        if kind is not ops.OperationKind.APPEND:
            p.add_argument("--block", type=int, required=True)
        else:
            p.set_defaults(block=None)
        if kind is not ops.OperationKind.DELETE:
            add_payload_args(p)
        p.add_argument("--expect-epoch", type=int, help="fail with a stale-epoch error unless this is current")
        p.set_defaults(func=cmd_op, op_kind=kind.value)

    p = sub.add_parser("tamper", help="inject one deterministic fault")
    p.add_argument("--kind", required=True, choices=[k.value for k in FaultKind])
    p.add_argument("--server", type=int, required=True)
    p.add_argument("--block", type=int)
    p.add_argument("--fault-seed", type=int, help="fault byte-stream seed (default: config seed)")
    p.set_defaults(func=cmd_tamper)

    p = sub.add_parser("crash", help="crash a server (erases its blocks)")
    p.add_argument("--server", type=int, required=True)
    p.set_defaults(func=cmd_tamper, kind=FaultKind.SERVER_CRASH.value, block=None, fault_seed=None)

    p = sub.add_parser("recover", help="restore from the last restore point unless intact")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("audit", help="third-party audit of committed epochs")
    p.add_argument("--epochs", required=True, help="inclusive epoch range, e.g. 0..3 or a single epoch")
    p.add_argument("--mode", choices=[m.value for m in Mode], help="override the configured mode")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("history", help="print the operation journal")
    p.set_defaults(func=cmd_history)

    p = sub.add_parser("report", help="print ledger and storage summary")
    p.set_defaults(func=cmd_report)

    return parser


def run(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except CloudLedgerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for errors, code in _EXIT_BY_ERROR:
            if isinstance(exc, errors):
                return code
        return EXIT_FAILED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv: Optional[list[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
