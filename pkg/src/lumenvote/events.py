"""Durable event records and the append-only log format.

One record per line, JSON objects with stable field names
(``timestamp_ms``, ``kind``, ``user_id``, ``ballot``), UTF-8.  Session
events drive the engine; audit records (lottery results, survey
bonuses) share the log for a single source of truth but are ignored by
engine replay.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .mechanism import Ballot

LOGIN = "login"
LOGOUT = "logout"
BALLOT_CHANGE = "ballot_change"
WORK_HOURS_START = "work_hours_start"
WORK_HOURS_END = "work_hours_end"

SESSION_KINDS = frozenset(
    {LOGIN, LOGOUT, BALLOT_CHANGE, WORK_HOURS_START, WORK_HOURS_END}
)

# Audit record kinds carried in the same log but not replayed by the engine.
LOTTERY_RESULT = "lottery_result"
COMMUNAL_LUNCH = "communal_lunch"
SURVEY_BONUS = "survey_bonus"

AUDIT_KINDS = frozenset({LOTTERY_RESULT, COMMUNAL_LUNCH, SURVEY_BONUS})


class EventFormatError(ValueError):
    """A log line or record does not conform to the wire format."""


@dataclass(frozen=True)
class SessionEvent:
    """One timestamped occurrence the engine folds over.

    ``user_id`` is required for login/logout/ballot kinds and absent
    for work-hours boundaries.  ``ballot`` is required for
    ``ballot_change`` and optionally accompanies ``login`` (a returning
    ballot submitted in the same request).
    """

    timestamp_ms: int
    kind: str
    user_id: str | None = None
    ballot: Ballot | None = None

    def __post_init__(self):
        if self.kind not in SESSION_KINDS:
            raise EventFormatError(f"unknown session event kind {self.kind!r}")
        if self.kind in (LOGIN, LOGOUT, BALLOT_CHANGE):
            if not self.user_id:
                raise EventFormatError(f"{self.kind} event requires user_id")
        else:
            if self.user_id is not None:
                raise EventFormatError(f"{self.kind} event must not carry user_id")
        if self.kind == BALLOT_CHANGE and self.ballot is None:
            raise EventFormatError("ballot_change event requires a ballot")
        if self.kind in (LOGOUT, WORK_HOURS_START, WORK_HOURS_END) and self.ballot is not None:
            raise EventFormatError(f"{self.kind} event must not carry a ballot")


def ballot_to_wire(b: Ballot) -> dict:
    return {"preferred": b.preferred, "pay_vs": {str(k): v for k, v in b.pay_vs.items()}}


def ballot_from_wire(obj: dict) -> Ballot:
    try:
        preferred = int(obj["preferred"])
        pay_vs = {int(k): int(v) for k, v in obj["pay_vs"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise EventFormatError(f"malformed ballot payload: {obj!r}") from exc
    return Ballot(preferred=preferred, pay_vs=pay_vs)


def event_to_record(e: SessionEvent) -> dict:
    rec = {"timestamp_ms": e.timestamp_ms, "kind": e.kind}
    if e.user_id is not None:
        rec["user_id"] = e.user_id
    if e.ballot is not None:
        rec["ballot"] = ballot_to_wire(e.ballot)
    return rec


def event_from_record(rec: dict) -> SessionEvent:
    try:
        ts = int(rec["timestamp_ms"])
        kind = rec["kind"]
    except (KeyError, TypeError, ValueError) as exc:
        raise EventFormatError(f"malformed event record: {rec!r}") from exc
    ballot = ballot_from_wire(rec["ballot"]) if rec.get("ballot") is not None else None
    return SessionEvent(
        timestamp_ms=ts, kind=kind, user_id=rec.get("user_id"), ballot=ballot
    )


def record_to_line(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def parse_line(line: str) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventFormatError(f"unparseable log line: {line!r}") from exc
    if not isinstance(rec, dict) or "kind" not in rec:
        raise EventFormatError(f"log line is not an event record: {line!r}")
    return rec


def read_records(path: str | os.PathLike) -> Iterator[dict]:
    """All records in a log file, in order, audit records included."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parse_line(line)


def load_session_events(path: str | os.PathLike) -> list[SessionEvent]:
    """Session events from a log file, skipping audit records."""
    return [
        event_from_record(rec)
        for rec in read_records(path)
        if rec["kind"] in SESSION_KINDS
    ]


class EventLogWriter:
    """Append-only writer; append then flush+fsync before the caller
    applies the event, so a crash never loses an applied event."""

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self._fh: IO[str] = open(self.path, "a", encoding="utf-8")

    def append(self, rec: dict) -> None:
        self._fh.write(record_to_line(rec) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def append_event(self, e: SessionEvent) -> None:
        self.append(event_to_record(e))

    def append_all(self, events: Iterable[SessionEvent]) -> None:
        for e in events:
            self.append_event(e)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "EventLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
