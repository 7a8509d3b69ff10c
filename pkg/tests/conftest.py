"""Shared fixtures and event-building helpers."""

from __future__ import annotations

import pytest

from trustgate.model import AttributeKind, EdrEvent, Triplet

DEFAULT_TRIPLET = Triplet(user_id="user-a", device_id="dev-a",
                          resource_id="res-a")


def make_event(
    event_id: int,
    ts: int,
    attribute: AttributeKind = AttributeKind.IO_OPERATION_COUNT,
    value: int | str = 1,
    parents: tuple[int, ...] = (),
    triplet: Triplet = DEFAULT_TRIPLET,
) -> EdrEvent:
    return EdrEvent(
        event_id=event_id,
        triplet=triplet,
        attribute=attribute,
        value=value,
        timestamp=ts,
        parent_ids=parents,
    )


def chain(length: int, start_ts: int = 0) -> list[EdrEvent]:
    """A pure parent chain: 0 <- 1 <- ... <- length-1."""

    events = []
    for i in range(length):
        events.append(
            make_event(i, start_ts + i, parents=(i - 1,) if i else ())
        )
    return events


@pytest.fixture
def tmp_events_path(tmp_path):
    return tmp_path / "events.jsonl"
