#!/usr/bin/env python3
"""Library API walkthrough.

Drives one complete integrity story in process: upload with before/after
verification, a verified update, a byzantine same-weight substitution that
weight accounting misses but checksums catch, and snapshot recovery.
"""

import cloudledger as cl


def main() -> None:
    # A five-server cluster and a five-kilobyte seeded payload.
    cluster = cl.new_cluster(5, rng_seed=42)
    payload = cl.generate_payload(42, 5000)

    # The reading protocol: user manifest before upload, cloud manifest
    # after, record-by-record comparison.
    verdict = cl.round_trip_verify(cluster, payload, 5, 64, cl.Mode.CHECKSUM)
    print("upload verified:", verdict.z)

    # Every verified change commits one restore point; X doubles the total
    # because the verified cloud and user totals agree.
    ledger = cl.Ledger()
    point = cl.commit_restore_point(ledger, cluster, verdict)
    print(f"restore point: epoch={point.epoch} X={point.committed_x} tick={point.timestamp}")

    # A verified append: pre-check, mutation, post-check, new restore point.
    result = cl.append(cluster, ledger, server_index=0, payload=b"appended block")
    print("after append:", cl.render_journal_line(result))

    # Byzantine fault: replace a block with different bytes of the same size.
    report = cl.inject_fault(
        cluster, cl.FaultSpec(cl.FaultKind.SAME_WEIGHT_SUBSTITUTE, target_server=1, target_block=0, seed=7)
    )
    print("fault injected:", report.note)

    stored = ledger.points[-1].manifest
    live = cl.read_manifest(cluster)
    print("weight-only sees it:", not cl.verify_equality(stored, live, cl.Mode.WEIGHT_ONLY).z)
    print("checksum sees it:  ", not cl.verify_equality(stored, live, cl.Mode.CHECKSUM).z)

    # Recovery rewrites from the last snapshot and re-verifies.
    recovery = cl.recover(ledger, cluster)
    print(f"recovery: {recovery.action.value} at epoch {recovery.epoch}")
    healed = cl.verify_equality(stored, cl.read_manifest(cluster), cl.Mode.CHECKSUM)
    print("post-recovery verified:", healed.z)

    # The auditor gets metadata-only, read-only access.
    verdicts = cl.audit(ledger, cluster, cl.AuditGrant(0, 1, cl.Mode.CHECKSUM))
    print("audit verdicts:", [v.z for v in verdicts])


if __name__ == "__main__":
    main()
