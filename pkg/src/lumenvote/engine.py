"""Event-sourced controller state: segments, accrual, replay.

The mechanism runs continuously by treating every maximal interval with
a constant logged-in, balloted population as one round.  Each session
event closes the open segment, credits every voting member
``floor(duration_ms * rate / 3600)`` milli-points (rate in points per
hour), recomputes the allocation, and emits an actuator command when
the commanded level changes.

State transitions are pure: ``apply_event`` returns a fresh state and
never mutates its input, so snapshots can cross threads freely and
replaying a log is bit-identical. Outside work hours the engine is
inactive: no outcome is held (wall switches are live), nothing accrues,
and no commands are emitted.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import events as ev
from .mechanism import (
    Ballot,
    MechanismConfig,
    MechanismError,
    Profile,
    TypeVector,
    ballot_to_type,
    choose_outcome,
    payment_rates,
)

MS_PER_HOUR = 3_600_000


class EngineError(ValueError):
    """Event rejected: out of order, wrong session state, or bad ballot."""


class ReplayError(ValueError):
    """Replay aborted at the first invalid event."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"invalid event at index {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class Segment:
    """One closed mechanism round: constant members and ballots on
    [start, end), with the outcome and per-user payment rates that held
    there and the milli-points actually credited (floored)."""

    start_ms: int
    end_ms: int
    members: tuple[tuple[str, TypeVector], ...]
    outcome: int
    rates: dict[str, int]
    credits_milli: dict[str, int]

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class ActuatorCommand:
    """Level change to push to the lighting driver.  ``seq`` increments
    once per outcome transition; re-sends reuse the same value."""

    seq: int
    timestamp_ms: int
    outcome: int
    level_percent: int


@dataclass(frozen=True)
class EngineState:
    """Snapshot of the controller between events.

    ``outcome`` is the currently commanded setting index, or None while
    the engine is inactive (outside work hours, lights on manual).
    ``ballots`` holds current ballots of logged-in users; users present
    without a ballot are spectators and neither vote nor accrue.
    ``last_ballots`` remembers the most recent ballot across logouts so
    a returning user resumes voting immediately.  Dict fields are
    copy-on-write; treat snapshots as immutable.
    """

    work_hours: bool = False
    members: frozenset[str] = frozenset()
    ballots: dict[str, Ballot] = field(default_factory=dict)
    last_ballots: dict[str, Ballot] = field(default_factory=dict)
    accrued_milli: dict[str, int] = field(default_factory=dict)
    communal_milli: int = 0
    last_ts: int | None = None
    outcome: int | None = None
    rates: dict[str, int] = field(default_factory=dict)
    actuator_seq: int = 0

    @classmethod
    def initial(cls) -> "EngineState":
        return cls()


def _voting_profile(ballots: dict[str, Ballot], cfg: MechanismConfig) -> Profile:
    ids = tuple(sorted(ballots))
    types = tuple(ballot_to_type(ballots[u], cfg) for u in ids)
    return Profile(user_ids=ids, types=types)


def _allocation(
    state_work_hours: bool, ballots: dict[str, Ballot], cfg: MechanismConfig
) -> tuple[int | None, dict[str, int]]:
    """Outcome and rates for the (possibly empty) voting population."""
    if not state_work_hours:
        return None, {}
    if not ballots:
        return cfg.nominal_outcome, {}
    profile = _voting_profile(ballots, cfg)
    f = choose_outcome(profile, cfg)
    rates = dict(zip(profile.user_ids, payment_rates(profile, cfg)))
    return f, rates


def segment_credit_milli(duration_ms: int, rate_points_per_hour: int) -> int:
    """Milli-points earned over a segment, floored for auditability."""
    return duration_ms * rate_points_per_hour // 3600


def apply_event(
    state: EngineState, e: ev.SessionEvent, cfg: MechanismConfig
) -> tuple[EngineState, Segment | None, ActuatorCommand | None]:
    """Fold one event into the state.

    Returns the new state, the segment the event closed (None when
    nothing was accruing or the segment had zero duration), and the
    actuator command for an outcome change (None when the level held).
    """
    if state.last_ts is not None and e.timestamp_ms < state.last_ts:
        raise EngineError(
            f"out-of-order event: {e.timestamp_ms} before {state.last_ts}"
        )

    # Close the open segment before the event takes effect.
    segment = None
    accrued = state.accrued_milli
    communal = state.communal_milli
    if (
        state.work_hours
        and state.rates
        and state.last_ts is not None
        and e.timestamp_ms > state.last_ts
    ):
        duration = e.timestamp_ms - state.last_ts
        credits = {
            u: segment_credit_milli(duration, r) for u, r in state.rates.items()
        }
        accrued = dict(accrued)
        for u, c in credits.items():
            accrued[u] = accrued.get(u, 0) + c
        communal += sum(credits.values())
        assert state.outcome is not None
        segment = Segment(
            start_ms=state.last_ts,
            end_ms=e.timestamp_ms,
            members=tuple(
                (u, ballot_to_type(state.ballots[u], cfg))
                for u in sorted(state.rates)
            ),
            outcome=state.outcome,
            rates=dict(state.rates),
            credits_milli=credits,
        )

    work_hours = state.work_hours
    members = state.members
    ballots = state.ballots
    last_ballots = state.last_ballots

    try:
        if e.kind == ev.LOGIN:
            if e.user_id in members:
                raise EngineError(f"login of already-present user {e.user_id}")
            members = members | {e.user_id}
            ballot = e.ballot if e.ballot is not None else last_ballots.get(e.user_id)
            if ballot is not None:
                ballot_to_type(ballot, cfg)  # validate against config
                ballots = {**ballots, e.user_id: ballot}
                last_ballots = {**last_ballots, e.user_id: ballot}
        elif e.kind == ev.LOGOUT:
            if e.user_id not in members:
                raise EngineError(f"logout of absent user {e.user_id}")
            members = members - {e.user_id}
            if e.user_id in ballots:
                ballots = {u: b for u, b in ballots.items() if u != e.user_id}
        elif e.kind == ev.BALLOT_CHANGE:
            if e.user_id not in members:
                raise EngineError(f"ballot from logged-out user {e.user_id}")
            assert e.ballot is not None
            ballot_to_type(e.ballot, cfg)
            ballots = {**ballots, e.user_id: e.ballot}
            last_ballots = {**last_ballots, e.user_id: e.ballot}
        elif e.kind == ev.WORK_HOURS_START:
            if work_hours:
                raise EngineError("work hours already started")
            work_hours = True
        elif e.kind == ev.WORK_HOURS_END:
            if not work_hours:
                raise EngineError("work hours not active")
            work_hours = False
        else:  # pragma: no cover - SessionEvent already rejects unknown kinds
            raise EngineError(f"unknown event kind {e.kind!r}")
    except MechanismError as exc:
        raise EngineError(f"invalid ballot: {exc}") from exc

    outcome, rates = _allocation(work_hours, ballots, cfg)

    command = None
    seq = state.actuator_seq
    if outcome is not None and outcome != state.outcome:
        seq += 1
        command = ActuatorCommand(
            seq=seq,
            timestamp_ms=e.timestamp_ms,
            outcome=outcome,
            level_percent=cfg.settings[outcome].level_percent,
        )

    new_state = EngineState(
        work_hours=work_hours,
        members=members,
        ballots=ballots,
        last_ballots=last_ballots,
        accrued_milli=accrued,
        communal_milli=communal,
        last_ts=e.timestamp_ms,
        outcome=outcome,
        rates=rates,
        actuator_seq=seq,
    )
    return new_state, segment, command


def current_allocation(state: EngineState) -> tuple[int | None, dict[str, int]]:
    """Currently held outcome and per-user payment rates.

    (nominal, {}) during work hours with nobody voting; (None, {})
    outside work hours, when the lights are on manual control.
    """
    return state.outcome, dict(state.rates)


def replay(
    log: list[ev.SessionEvent], cfg: MechanismConfig
) -> EngineState:
    """Fold a whole log from the initial state.  Aborts on the first
    invalid event, reporting its index."""
    state, _, _ = replay_full(log, cfg)
    return state


def replay_full(
    log: list[ev.SessionEvent], cfg: MechanismConfig
) -> tuple[EngineState, list[Segment], list[ActuatorCommand]]:
    """Like :func:`replay`, also collecting closed segments and the
    actuator command history."""
    state = EngineState.initial()
    segments: list[Segment] = []
    commands: list[ActuatorCommand] = []
    for i, e in enumerate(log):
        try:
            state, seg, cmd = apply_event(state, e, cfg)
        except (EngineError, ev.EventFormatError) as exc:
            raise ReplayError(i, exc) from exc
        if seg is not None:
            segments.append(seg)
        if cmd is not None:
            commands.append(cmd)
    return state, segments, commands


def _ballot_obj(b: Ballot) -> dict:
    return {"preferred": b.preferred, "pay_vs": {str(k): b.pay_vs[k] for k in sorted(b.pay_vs)}}


def state_digest(state: EngineState) -> str:
    """Canonical SHA-256 over everything replay derives from the log.
    Equal digests mean equal states; used for replay and crash-recovery
    checks."""
    canon = {
        "work_hours": state.work_hours,
        "members": sorted(state.members),
        "ballots": {u: _ballot_obj(b) for u, b in sorted(state.ballots.items())},
        "last_ballots": {u: _ballot_obj(b) for u, b in sorted(state.last_ballots.items())},
        "accrued_milli": dict(sorted(state.accrued_milli.items())),
        "communal_milli": state.communal_milli,
        "last_ts": state.last_ts,
        "outcome": state.outcome,
        "rates": dict(sorted(state.rates.items())),
        "actuator_seq": state.actuator_seq,
    }
    blob = json.dumps(canon, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
