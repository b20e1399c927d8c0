"""Time sources. Deterministic runs use FixedClock; production uses SystemClock.

All timestamps in the system are UTC at second precision, so that the
serialized form is stable.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from typing import Protocol

# Epoch used by deterministic (mock) runs.
MOCK_EPOCH = datetime(2025, 1, 1, 0, 0, 0, tzinfo=timezone.utc)

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class Clock(Protocol):
    def now(self) -> datetime: ...


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc).replace(microsecond=0)


class FixedClock:
    """Returns start, start+step, start+2*step, ... on successive calls."""

    def __init__(self, start: datetime = MOCK_EPOCH, step_seconds: int = 1) -> None:
        self._next = start
        self._step = timedelta(seconds=step_seconds)

    def now(self) -> datetime:
        current = self._next
        self._next = current + self._step
        return current


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(value: str) -> datetime:
    return datetime.strptime(value, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)
