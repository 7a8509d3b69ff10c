#!/usr/bin/env python3
"""Gate a single access request from raw endpoint telemetry.

Builds a trust policy, feeds a device's recent events into the hot
store, scores the (user, device, resource) triplet, and shows how the
verdict flips as the telemetry turns hostile.
"""

from trustgate import (
    AttributeKind,
    EdrEvent,
    HotStore,
    Triplet,
    behavioral_score,
    decide,
    make_record,
    policy_from_obj,
)

POLICY = policy_from_obj({
    "weights": {
        "privilege_escalation_attempts": "0.5",
        "io_operation_count": "0.5",
    },
    "normalizers": {
        "privilege_escalation_attempts": {
            "breakpoints": [[0, 1], [2, "0.5"], [5, 0]],
            "default": 1,
        },
        "io_operation_count": {
            "breakpoints": [[0, 1], [100, "0.8"], [1000, "0.2"]],
            "default": "0.9",
        },
    },
    "alpha": 0.5,
    "thresholds": {"res-files": "0.6"},
    "sensitivity": {},
    "quorum": {"n": 5, "z": 3},
})

TRIPLET = Triplet("user-01", "dev-01", "res-files")


def score_and_decide(store: HotStore, now: int, label: str) -> None:
    window = store.query_window(TRIPLET, now, horizon=900)

    def source(triplet: Triplet, t: int):
        behavioral = behavioral_score(
            store.query_window(triplet, t, horizon=900), POLICY
        )
        return make_record(triplet, behavioral, reputation=1.0,
                           alpha=POLICY.alpha, computed_at=t)

    decision = decide(TRIPLET, POLICY, source, active_alerts=(),
                      quorum_client=None, now=now)
    attrs = {k.value: v for k, v in window.items()}
    verdict = "GRANT" if decision.granted else "DENY"
    print(f"\n--- {label} (t={now}) ---")
    print(f"  window attributes : {attrs}")
    print(f"  combined score    : {decision.combined:.3f} "
          f"(threshold {decision.threshold})")
    print(f"  verdict           : {verdict}"
          + (f"  reasons: {list(decision.reasons)}"
             if decision.reasons else ""))


def main() -> None:
    store = HotStore(None)

    # An ordinary morning: modest I/O, no escalation attempts.
    store.append_events([
        EdrEvent(event_id=1, triplet=TRIPLET,
                 attribute=AttributeKind.IO_OPERATION_COUNT,
                 value=40, timestamp=100, parent_ids=()),
        EdrEvent(event_id=2, triplet=TRIPLET,
                 attribute=AttributeKind.PRIVILEGE_ESCALATION_ATTEMPTS,
                 value=0, timestamp=150, parent_ids=(1,)),
    ])
    score_and_decide(store, now=200, label="baseline behavior")

    # The device starts hammering privileged operations.
    store.append_events([
        EdrEvent(event_id=3, triplet=TRIPLET,
                 attribute=AttributeKind.PRIVILEGE_ESCALATION_ATTEMPTS,
                 value=6, timestamp=400, parent_ids=(2,)),
        EdrEvent(event_id=4, triplet=TRIPLET,
                 attribute=AttributeKind.IO_OPERATION_COUNT,
                 value=1500, timestamp=420, parent_ids=(3,)),
    ])
    score_and_decide(store, now=500, label="after hostile telemetry")

    # Eleven hundred seconds later the window has rolled past the
    # incident and the score recovers.
    score_and_decide(store, now=1600, label="window rolled past incident")


if __name__ == "__main__":
    main()
