"""Core domain types shared across the package.

Everything downstream (provenance graphs, stores, the decision engine,
the simulator) speaks in terms of the types defined here: access
triplets, endpoint attribute observations, and the alerts raised on
them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

MAX_NUMERIC_VALUE = 2**64 - 1


class ModelError(ValueError):
    """Raised for malformed domain objects or serialized records."""


class Domain(Enum):
    """Value domain an attribute kind draws from."""

    COUNT = "count"
    SECONDS = "seconds"
    TIMESTAMP = "timestamp"
    CATEGORY = "category"

    @property
    def numeric(self) -> bool:
        return self is not Domain.CATEGORY


class AttributeKind(str, Enum):
    """Closed set of endpoint telemetry attributes.

    Numeric kinds carry unsigned 64-bit integers; categorical kinds
    carry opaque non-empty identifier strings.
    """

    EXTERNAL_NET_ACCESS_SECONDS = "external_net_access_seconds"
    FLASH_DRIVE_USAGE_SECONDS = "flash_drive_usage_seconds"
    ENTRY_TIMESTAMP = "entry_timestamp"
    IO_OPERATION_COUNT = "io_operation_count"
    PRIVILEGE_ESCALATION_ATTEMPTS = "privilege_escalation_attempts"
    MALICIOUS_FILE_ACCESS_COUNT = "malicious_file_access_count"
    FREQUENT_EXTERNAL_NETWORK_ID = "frequent_external_network_id"
    FUNCTION_CALL_COUNT = "function_call_count"
    SYSTEM_CALL_COUNT = "system_call_count"
    EXIT_TIMESTAMP = "exit_timestamp"

    @property
    def domain(self) -> Domain:
        return _DOMAINS[self]

    @property
    def numeric(self) -> bool:
        return self.domain.numeric


_DOMAINS: Mapping[AttributeKind, Domain] = {
    AttributeKind.EXTERNAL_NET_ACCESS_SECONDS: Domain.SECONDS,
    AttributeKind.FLASH_DRIVE_USAGE_SECONDS: Domain.SECONDS,
    AttributeKind.ENTRY_TIMESTAMP: Domain.TIMESTAMP,
    AttributeKind.IO_OPERATION_COUNT: Domain.COUNT,
    AttributeKind.PRIVILEGE_ESCALATION_ATTEMPTS: Domain.COUNT,
    AttributeKind.MALICIOUS_FILE_ACCESS_COUNT: Domain.COUNT,
    AttributeKind.FREQUENT_EXTERNAL_NETWORK_ID: Domain.CATEGORY,
    AttributeKind.FUNCTION_CALL_COUNT: Domain.COUNT,
    AttributeKind.SYSTEM_CALL_COUNT: Domain.COUNT,
    AttributeKind.EXIT_TIMESTAMP: Domain.TIMESTAMP,
}


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


@dataclass(frozen=True, order=True)
class Triplet:
    """A (user, device, resource) access identity.

    Ordering is lexicographic on (user_id, device_id, resource_id),
    which gives every collection of triplets a stable total order.
    """

    user_id: str
    device_id: str
    resource_id: str

    def __post_init__(self) -> None:
        for name in ("user_id", "device_id", "resource_id"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ModelError(f"{name} must be a non-empty string")

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.user_id, self.device_id, self.resource_id)


def _check_value(attribute: AttributeKind, value: object) -> None:
    if attribute.numeric:
        # bool is an int subclass; it is not a telemetry value.
        if isinstance(value, bool) or not isinstance(value, int):
            raise ModelError(
                f"attribute {attribute.value} expects an integer value"
            )
        if not 0 <= value <= MAX_NUMERIC_VALUE:
            raise ModelError(
                f"attribute {attribute.value} value {value} outside the "
                f"unsigned 64-bit range"
            )
    else:
        if not isinstance(value, str) or not value:
            raise ModelError(
                f"attribute {attribute.value} expects a non-empty string value"
            )


@dataclass(frozen=True)
class EdrEvent:
    """One timestamped attribute observation bound to a triplet.

    ``parent_ids`` names the events this observation causally depends
    on. Log-level invariants (unique ids, parents strictly earlier) are
    checked by :func:`validate_event`, not at construction.
    """

    event_id: int
    triplet: Triplet
    attribute: AttributeKind
    value: int | str
    timestamp: int
    parent_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.event_id, bool) or not isinstance(self.event_id, int):
            raise ModelError("event_id must be an integer")
        if self.event_id < 0:
            raise ModelError("event_id must be non-negative")
        if not isinstance(self.triplet, Triplet):
            raise ModelError("triplet must be a Triplet")
        if not isinstance(self.attribute, AttributeKind):
            raise ModelError("attribute must be an AttributeKind")
        _check_value(self.attribute, self.value)
        if isinstance(self.timestamp, bool) or not isinstance(self.timestamp, int):
            raise ModelError("timestamp must be an integer")
        if self.timestamp < 0:
            raise ModelError("timestamp must be non-negative")
        object.__setattr__(self, "parent_ids", tuple(self.parent_ids))
        for pid in self.parent_ids:
            if isinstance(pid, bool) or not isinstance(pid, int) or pid < 0:
                raise ModelError("parent ids must be non-negative integers")


@dataclass(frozen=True)
class Alert:
    """A rule firing on a single event."""

    alert_id: int
    event_id: int
    severity: Severity
    rule_name: str

    def __post_init__(self) -> None:
        if self.alert_id < 0 or self.event_id < 0:
            raise ModelError("alert_id and event_id must be non-negative")
        if not isinstance(self.severity, Severity):
            raise ModelError("severity must be a Severity")
        if not self.rule_name:
            raise ModelError("rule_name must be non-empty")


REASON_CAUSALITY = "causality"
REASON_ID_UNIQUENESS = "id uniqueness"
REASON_DANGLING_PARENT = "dangling parent"


@dataclass(frozen=True)
class Verdict:
    """Outcome of an event validation; lists every violated invariant."""

    ok: bool
    reasons: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate_event(event: EdrEvent, log: Sequence[EdrEvent]) -> Verdict:
    """Check ``event`` against a log of previously accepted events.

    ``log`` holds the already-accepted events (the candidate itself is
    not expected to be in it). Violations reported:

    * ``id uniqueness``: the candidate's event_id already appears.
    * ``dangling parent``: a parent id is absent from the log.
    * ``causality``: a parent exists but is not strictly earlier.
    """

    reasons: list[str] = []
    by_id = {e.event_id: e for e in log}
    if event.event_id in by_id:
        reasons.append(REASON_ID_UNIQUENESS)
    dangling = False
    non_causal = False
    for pid in event.parent_ids:
        parent = by_id.get(pid)
        if parent is None:
            dangling = True
        elif parent.timestamp >= event.timestamp:
            non_causal = True
    if non_causal:
        reasons.append(REASON_CAUSALITY)
    if dangling:
        reasons.append(REASON_DANGLING_PARENT)
    return Verdict(ok=not reasons, reasons=tuple(reasons))


def validate_log(events: Sequence[EdrEvent]) -> list[tuple[EdrEvent, Verdict]]:
    """Validate a whole log event by event; returns the failures."""

    failures: list[tuple[EdrEvent, Verdict]] = []
    accepted: list[EdrEvent] = []
    for event in events:
        verdict = validate_event(event, accepted)
        if verdict:
            accepted.append(event)
        else:
            failures.append((event, verdict))
    return failures


# --- JSON Lines wire format -------------------------------------------------

EVENT_FIELDS = ("event_id", "user", "device", "resource", "attribute",
                "value", "ts", "parents")


def event_to_obj(event: EdrEvent) -> dict:
    return {
        "event_id": event.event_id,
        "user": event.triplet.user_id,
        "device": event.triplet.device_id,
        "resource": event.triplet.resource_id,
        "attribute": event.attribute.value,
        "value": event.value,
        "ts": event.timestamp,
        "parents": list(event.parent_ids),
    }


def event_from_obj(obj: object) -> EdrEvent:
    if not isinstance(obj, dict):
        raise ModelError("event record must be a JSON object")
    unknown = set(obj) - set(EVENT_FIELDS)
    if unknown:
        raise ModelError(f"unknown event fields: {sorted(unknown)}")
    missing = set(EVENT_FIELDS) - set(obj)
    if missing:
        raise ModelError(f"missing event fields: {sorted(missing)}")
    try:
        attribute = AttributeKind(obj["attribute"])
    except ValueError:
        raise ModelError(f"unknown attribute kind: {obj['attribute']!r}") from None
    parents = obj["parents"]
    if not isinstance(parents, list):
        raise ModelError("parents must be a list of event ids")
    triplet = Triplet(obj["user"], obj["device"], obj["resource"])
    return EdrEvent(
        event_id=obj["event_id"],
        triplet=triplet,
        attribute=attribute,
        value=obj["value"],
        timestamp=obj["ts"],
        parent_ids=tuple(parents),
    )


def dumps_event(event: EdrEvent) -> str:
    return json.dumps(event_to_obj(event))


def write_events(path: str | Path, events: Iterable[EdrEvent]) -> int:
    """Write events as JSON Lines; returns the number written."""

    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(dumps_event(event))
            fh.write("\n")
            count += 1
    return count


def iter_events(path: str | Path) -> Iterator[EdrEvent]:
    """Yield events from a JSON Lines file.

    Malformed lines raise ModelError carrying the 1-based line number.
    """

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                yield event_from_obj(obj)
            except (json.JSONDecodeError, ModelError) as exc:
                raise ModelError(f"line {lineno}: {exc}") from None


def read_events(path: str | Path) -> list[EdrEvent]:
    return list(iter_events(path))
