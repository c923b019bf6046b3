"""HTTP service wrapping one engine per lighting zone.

Request handlers are thin: every mutation becomes a session event that
is validated against the engine, appended to the zone's log (append,
flush, then apply: the log is the single durability point), committed,
and only then allowed side effects: reward threshold checks, actuator
commands, notifications to event-stream subscribers.  One lock per zone
serializes writers; readers get immutable snapshots.

Restarting the service replays the persisted log and reconstructs the
exact pre-crash state (lotteries and bonuses are official once their
audit record is in the log).
"""

from __future__ import annotations

import hashlib
import json
import os
import queue
import secrets
import threading
import time
from collections import deque
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import events as ev
from .analytics import SensorSample
from .config import AppConfig, ZoneConfig
from .engine import (
    ActuatorCommand,
    EngineError,
    EngineState,
    apply_event,
    state_digest,
)
from .mechanism import Ballot
from .rewards import COMMUNAL_LUNCH, LOTTERY, PointsAccount, check_thresholds, run_lottery


# ---------------------------------------------------------------------------
# Injection points: wall clock and light actuator


class Clock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)


class VirtualClock(Clock):
    """Settable clock for tests and replays."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def set(self, ms: int) -> None:
        self._now = ms

    def advance(self, delta_ms: int) -> None:
        self._now += delta_ms


class DriverError(RuntimeError):
    """The lighting driver did not acknowledge a command."""


class ActuatorDriver:
    """Pushes level commands to the lights for one zone.  Swap in a
    building-protocol implementation by matching this interface."""

    def send(self, zone_id: str, command: ActuatorCommand) -> None:
        raise NotImplementedError


class MockActuator(ActuatorDriver):
    """Records commands instead of touching hardware; can be told to
    fail the next few sends to exercise retry handling."""

    def __init__(self, fail_times: int = 0):
        self.sent: list[tuple[str, int, int, int]] = []
        self.fail_times = fail_times

    def send(self, zone_id: str, command: ActuatorCommand) -> None:
        if self.fail_times > 0:
            self.fail_times -= 1
            raise DriverError("mock actuator unreachable")
        self.sent.append(
            (zone_id, command.level_percent, command.timestamp_ms, command.seq)
        )


# ---------------------------------------------------------------------------
# Error codes surfaced to clients

UNKNOWN_ZONE = "UNKNOWN_ZONE"
INVALID_TOKEN = "INVALID_TOKEN"
STALE_SESSION = "STALE_SESSION"
PRESENCE_REQUIRED = "PRESENCE_REQUIRED"
OUTSIDE_WORK_HOURS = "OUTSIDE_WORK_HOURS"
VALIDATION = "VALIDATION"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message

    def http(self) -> HTTPException:
        return HTTPException(
            status_code=self.status, detail={"code": self.code, "message": self.message}
        )


# ---------------------------------------------------------------------------
# Per-zone runtime


@dataclass
class _Subscriber:
    q: "queue.Queue[dict]"


class ZoneRuntime:
    """Single-writer runtime for one zone: engine state, accounts,
    sessions, subscribers, actuator."""

    ACTUATOR_RETRIES = 3
    ACTUATOR_BACKOFF_S = 0.02

    def __init__(
        self,
        cfg: ZoneConfig,
        log_path: str,
        roster: dict[str, str],
        driver: ActuatorDriver,
        clock: Clock,
    ):
        self.cfg = cfg
        self.roster = roster
        self.driver = driver
        self.clock = clock
        self.lock = threading.RLock()
        self.state = EngineState.initial()
        self.bonuses_milli: dict[str, int] = {}
        self.lottery_count = 0
        self.lunch_count = 0
        self.recent: deque[dict] = deque(maxlen=50)
        self.sessions: dict[str, str] = {}
        self.session_by_user: dict[str, str] = {}
        self.latest_sensor: SensorSample | None = None
        self.subscribers: list[_Subscriber] = []
        self.actuator_ok = True
        self.last_actuator_error: str | None = None
        self.pending_command: ActuatorCommand | None = None
        self.last_command: ActuatorCommand | None = None
        self._recover(log_path)
        self.writer = ev.EventLogWriter(log_path)

    # -- recovery ----------------------------------------------------------

    def _recover(self, log_path: str) -> None:
        try:
            records = list(ev.read_records(log_path))
        except FileNotFoundError:
            return
        for i, rec in enumerate(records):
            kind = rec["kind"]
            if kind in ev.SESSION_KINDS:
                try:
                    self.state, _, cmd = apply_event(
                        self.state, ev.event_from_record(rec), self.cfg.mechanism
                    )
                except (EngineError, ev.EventFormatError) as exc:
                    raise RuntimeError(
                        f"corrupt event log {log_path} at line {i + 1}: {exc}"
                    ) from exc
                if cmd is not None:
                    self.last_command = cmd
            elif kind == ev.SURVEY_BONUS:
                u = rec["user_id"]
                self.bonuses_milli[u] = self.bonuses_milli.get(u, 0) + int(
                    rec["amount_milli"]
                )
            elif kind == ev.LOTTERY_RESULT:
                self.lottery_count += 1
            elif kind == ev.COMMUNAL_LUNCH:
                self.lunch_count += 1
            self.recent.append(self._public_record(rec))

    # -- accounting --------------------------------------------------------

    def account_milli(self, user: str) -> int:
        return self.state.accrued_milli.get(user, 0) + self.bonuses_milli.get(user, 0)

    def accounts(self) -> list[PointsAccount]:
        users = sorted(set(self.state.accrued_milli) | set(self.bonuses_milli))
        return [PointsAccount(u, self.account_milli(u)) for u in users]

    def communal_milli(self) -> int:
        return self.state.communal_milli + sum(self.bonuses_milli.values())

    # -- event pipeline ----------------------------------------------------

    def _event_ts(self) -> int:
        now = self.clock.now_ms()
        if self.state.last_ts is not None and now < self.state.last_ts:
            return self.state.last_ts
        return now

    @staticmethod
    def _public_record(rec: dict) -> dict:
        # Ballot contents are private reports; activity feeds carry only
        # who did what and when.
        if "ballot" in rec:
            rec = {k: v for k, v in rec.items() if k != "ballot"}
        return rec

    def _append(self, rec: dict) -> None:
        self.writer.append(rec)
        self.recent.append(self._public_record(rec))

    def _publish(self, kind: str, data: dict) -> None:
        msg = {"type": kind, "zone": self.cfg.zone_id, **data}
        for sub in list(self.subscribers):
            try:
                sub.q.put_nowait(msg)
            except queue.Full:
                pass  # slow consumer: drop, the client repolls /state

    def _send_actuator(self, cmd: ActuatorCommand) -> None:
        for attempt in range(self.ACTUATOR_RETRIES):
            try:
                self.driver.send(self.cfg.zone_id, cmd)
                self.actuator_ok = True
                self.last_actuator_error = None
                self.pending_command = None
                self.last_command = cmd
                return
            except DriverError as exc:
                self.last_actuator_error = str(exc)
                time.sleep(self.ACTUATOR_BACKOFF_S * (2**attempt))
        # Give up for now; keep the command (same seq) for a later retry.
        self.actuator_ok = False
        self.pending_command = cmd

    def actuator_set(self, level_percent: int) -> dict:
        """Push one validated level command to the zone's driver.
        Engine-driven transitions arrive here too; manual pushes re-send
        the current sequence number rather than minting a transition."""
        with self.lock:
            levels = {s.level_percent: s.index for s in self.cfg.mechanism.settings}
            if level_percent not in levels:
                raise ApiError(
                    422,
                    VALIDATION,
                    f"invalid level {level_percent}%, expected one of {sorted(levels)}",
                )
            cmd = ActuatorCommand(
                seq=self.state.actuator_seq,
                timestamp_ms=self.clock.now_ms(),
                outcome=levels[level_percent],
                level_percent=level_percent,
            )
            self._send_actuator(cmd)
            return {"ok": self.actuator_ok, "seq": cmd.seq, "level_percent": level_percent}

    def apply_session_event(self, e: ev.SessionEvent) -> None:
        """Validate, persist, commit, then run side effects."""
        with self.lock:
            new_state, segment, cmd = apply_event(self.state, e, self.cfg.mechanism)
            prev_total = self.communal_milli()
            record = ev.event_to_record(e)
            self._append(record)
            self.state = new_state
            self._publish("event", {"event": self._public_record(record)})
            if segment is not None:
                self._check_thresholds(prev_total)
            if cmd is not None:
                self._send_actuator(cmd)
                self._publish(
                    "setting",
                    {"outcome": cmd.outcome, "level_percent": cmd.level_percent, "seq": cmd.seq},
                )

    def _check_thresholds(self, prev_total: int) -> None:
        new_total = self.communal_milli()
        for kind in check_thresholds(prev_total, new_total, self.cfg.rewards):
            ts = self._event_ts()
            if kind == LOTTERY:
                winners = run_lottery(
                    self.accounts(),
                    self.cfg.rewards.prizes_per_lottery,
                    seed=self.cfg.rewards.rng_seed + self.lottery_count,
                )
                self.lottery_count += 1
                rec = {
                    "timestamp_ms": ts,
                    "kind": ev.LOTTERY_RESULT,
                    "ordinal": self.lottery_count,
                    "winners": [w.user_id for w in winners],
                }
                self._append(rec)
                self._publish("lottery", rec)
            elif kind == COMMUNAL_LUNCH:
                self.lunch_count += 1
                rec = {
                    "timestamp_ms": ts,
                    "kind": ev.COMMUNAL_LUNCH,
                    "ordinal": self.lunch_count,
                }
                self._append(rec)
                self._publish("communal_lunch", rec)

    # -- request handlers ----------------------------------------------------

    def handle_login(self, user: str, token: str, lat: float, lon: float) -> dict:
        if self.roster.get(user) != token or not token:
            raise ApiError(401, INVALID_TOKEN, f"unknown user or bad token for {user!r}")
        with self.lock:
            if not self.state.work_hours:
                raise ApiError(
                    403, OUTSIDE_WORK_HOURS, "the mechanism only runs during work hours"
                )
            if not self.cfg.fence.contains(lat, lon):
                raise ApiError(
                    403, PRESENCE_REQUIRED, "you must be in the office to participate"
                )
            if user not in self.state.members:
                self.apply_session_event(
                    ev.SessionEvent(self._event_ts(), ev.LOGIN, user)
                )
            # Re-login of a present user just refreshes the session.
            session = self.session_by_user.get(user) or secrets.token_hex(16)
            self.sessions[session] = user
            self.session_by_user[user] = session
            return {"session": session, "user_id": user, "state": self.snapshot()}

    def _session_user(self, session: str) -> str:
        user = self.sessions.get(session)
        if user is None:
            raise ApiError(401, STALE_SESSION, "session expired or unknown")
        return user

    def handle_logout(self, session: str) -> dict:
        with self.lock:
            user = self._session_user(session)
            if user in self.state.members:
                self.apply_session_event(
                    ev.SessionEvent(self._event_ts(), ev.LOGOUT, user)
                )
            self.sessions.pop(session, None)
            self.session_by_user.pop(user, None)
            return {"ok": True, "user_id": user}

    def handle_ballot(self, session: str, ballot: Ballot) -> dict:
        with self.lock:
            user = self._session_user(session)
            if user not in self.state.members:
                raise ApiError(401, STALE_SESSION, "log in again before voting")
            try:
                self.apply_session_event(
                    ev.SessionEvent(self._event_ts(), ev.BALLOT_CHANGE, user, ballot)
                )
            except EngineError as exc:
                raise ApiError(422, VALIDATION, str(exc)) from exc
            outcome = self.state.outcome
            setting = (
                self.cfg.mechanism.settings[outcome] if outcome is not None else None
            )
            return {
                "ok": True,
                "outcome": outcome,
                "label": setting.label if setting else None,
                "level_percent": setting.level_percent if setting else None,
                "your_rate_points_per_hour": self.state.rates.get(user, 0),
                "your_points_milli": self.account_milli(user),
            }

    def handle_survey(self, session: str) -> dict:
        with self.lock:
            user = self._session_user(session)
            prev_total = self.communal_milli()
            amount = self.cfg.rewards.survey_bonus_milli
            rec = {
                "timestamp_ms": self._event_ts(),
                "kind": ev.SURVEY_BONUS,
                "user_id": user,
                "amount_milli": amount,
            }
            self._append(rec)
            self.bonuses_milli[user] = self.bonuses_milli.get(user, 0) + amount
            self._publish("survey_bonus", rec)
            self._check_thresholds(prev_total)
            return {"ok": True, "your_points_milli": self.account_milli(user)}

    # -- views ---------------------------------------------------------------

    def snapshot(self, session: str | None = None) -> dict:
        with self.lock:
            outcome = self.state.outcome
            setting = (
                self.cfg.mechanism.settings[outcome] if outcome is not None else None
            )
            rw = self.cfg.rewards
            communal = self.communal_milli()
            your = None
            user = self.sessions.get(session) if session else None
            if user is not None:
                ballot = self.state.ballots.get(user)
                your = {
                    "user_id": user,
                    "ballot": ev.ballot_to_wire(ballot) if ballot else None,
                    "rate_points_per_hour": self.state.rates.get(user, 0),
                    "points_milli": self.account_milli(user),
                    "logged_in": user in self.state.members,
                }
            return {
                "your": your,
                "zone": self.cfg.zone_id,
                "timestamp_ms": self.clock.now_ms(),
                "work_hours": self.state.work_hours,
                "setting": {
                    "index": setting.index,
                    "label": setting.label,
                    "level_percent": setting.level_percent,
                }
                if setting
                else None,
                "occupants": sorted(self.state.members),
                "rates_points_per_hour": dict(sorted(self.state.rates.items())),
                "points_milli": {
                    a.user_id: a.milli_points for a in self.accounts()
                },
                "communal_milli": communal,
                "thresholds": {
                    "lottery": {
                        "threshold_milli": rw.lottery_threshold_milli,
                        "progress_milli": communal % rw.lottery_threshold_milli,
                        "count": self.lottery_count,
                    },
                    "communal_lunch": {
                        "threshold_milli": rw.communal_threshold_milli,
                        "progress_milli": communal % rw.communal_threshold_milli,
                        "count": self.lunch_count,
                    },
                },
                "latest_sensor": {
                    "timestamp_ms": self.latest_sensor.timestamp_ms,
                    "humidity_percent": self.latest_sensor.humidity_percent,
                    "temperature_degf": self.latest_sensor.temperature_degf,
                    "pressure_inhg": self.latest_sensor.pressure_inhg,
                    "solar_radiation_w_m2": self.latest_sensor.solar_radiation_w_m2,
                }
                if self.latest_sensor
                else None,
                "actuator": {
                    "ok": self.actuator_ok,
                    "seq": self.state.actuator_seq,
                    "level_percent": self.last_command.level_percent
                    if self.last_command
                    else None,
                },
                "recent_events": list(self.recent)[-10:],
            }

    def record_sensor(self, sample: SensorSample) -> None:
        with self.lock:
            self.latest_sensor = sample
            self._publish(
                "sensor",
                {
                    "timestamp_ms": sample.timestamp_ms,
                    "humidity_percent": sample.humidity_percent,
                    "temperature_degf": sample.temperature_degf,
                    "pressure_inhg": sample.pressure_inhg,
                    "solar_radiation_w_m2": sample.solar_radiation_w_m2,
                },
            )

    def digest(self) -> str:
        """Replay-stable digest of everything the zone derives from its
        log; equal before a crash and after recovery."""
        with self.lock:
            extra = {
                "engine": state_digest(self.state),
                "bonuses": dict(sorted(self.bonuses_milli.items())),
                "lotteries": self.lottery_count,
                "lunches": self.lunch_count,
            }
            blob = json.dumps(extra, sort_keys=True, separators=(",", ":"))
            return hashlib.sha256(blob.encode()).hexdigest()

    # -- scheduler -----------------------------------------------------------

    def _in_work_window(self, now_ms: int) -> bool:
        lt = time.localtime(now_ms / 1000)
        minute = lt.tm_hour * 60 + lt.tm_min
        return self.cfg.work_hours.start_minute <= minute < self.cfg.work_hours.end_minute

    def tick(self) -> None:
        """Advance scheduled behavior to the clock's current time:
        work-hours boundaries (with auto-logout at close), actuator
        retries, and a state push for 1 Hz dashboards."""
        with self.lock:
            now = self.clock.now_ms()
            desired = self._in_work_window(now)
            if desired and not self.state.work_hours:
                self.apply_session_event(
                    ev.SessionEvent(self._event_ts(), ev.WORK_HOURS_START)
                )
            elif not desired and self.state.work_hours:
                for user in sorted(self.state.members):
                    self.apply_session_event(
                        ev.SessionEvent(self._event_ts(), ev.LOGOUT, user)
                    )
                    session = self.session_by_user.pop(user, None)
                    if session:
                        self.sessions.pop(session, None)
                self.apply_session_event(
                    ev.SessionEvent(self._event_ts(), ev.WORK_HOURS_END)
                )
            if self.pending_command is not None:
                self._send_actuator(self.pending_command)
            self._publish("state", {"state": self.snapshot()})

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber(q=queue.Queue(maxsize=256))
        with self.lock:
            self.subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self.lock:
            if sub in self.subscribers:
                self.subscribers.remove(sub)

    def close(self) -> None:
        self.writer.close()


# ---------------------------------------------------------------------------
# FastAPI wiring


class LoginRequest(BaseModel):
    user_id: str
    token: str
    lat: float
    lon: float


class LogoutRequest(BaseModel):
    session: str


class BallotWire(BaseModel):
    preferred: int
    pay_vs: dict[str, int]


class BallotRequest(BaseModel):
    session: str
    ballot: BallotWire


class SurveyRequest(BaseModel):
    session: str


class LightService:
    """All zone runtimes plus shared roster and clock."""

    def __init__(
        self,
        cfg: AppConfig,
        data_dir: str,
        clock: Clock | None = None,
        drivers: dict[str, ActuatorDriver] | None = None,
    ):
        self.cfg = cfg
        self.clock = clock or Clock()
        os.makedirs(data_dir, exist_ok=True)
        self.zones: dict[str, ZoneRuntime] = {}
        for zc in cfg.zones:
            driver = (drivers or {}).get(zc.zone_id) or MockActuator()
            log_path = os.path.join(data_dir, f"{zc.zone_id}.events.jsonl")
            self.zones[zc.zone_id] = ZoneRuntime(
                zc, log_path, cfg.roster, driver, self.clock
            )

    def zone(self, zone_id: str) -> ZoneRuntime:
        rt = self.zones.get(zone_id)
        if rt is None:
            raise ApiError(404, UNKNOWN_ZONE, f"no such zone {zone_id!r}")
        return rt

    def tick_all(self) -> None:
        for rt in self.zones.values():
            rt.tick()

    def close(self) -> None:
        for rt in self.zones.values():
            rt.close()


def build_app(service: LightService) -> FastAPI:
    app = FastAPI(title="lumenvote", version="0.1.0")
    app.state.service = service

    @app.exception_handler(ApiError)
    async def _api_error(_, exc: ApiError):  # noqa: ANN001
        from fastapi.responses import JSONResponse

        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.post("/zones/{zone_id}/login")
    def login(zone_id: str, req: LoginRequest):
        return service.zone(zone_id).handle_login(req.user_id, req.token, req.lat, req.lon)

    @app.post("/zones/{zone_id}/logout")
    def logout(zone_id: str, req: LogoutRequest):
        return service.zone(zone_id).handle_logout(req.session)

    @app.post("/zones/{zone_id}/ballot")
    def ballot(zone_id: str, req: BallotRequest):
        try:
            parsed = ev.ballot_from_wire(req.ballot.model_dump())
        except ev.EventFormatError as exc:
            raise ApiError(422, VALIDATION, str(exc))
        return service.zone(zone_id).handle_ballot(req.session, parsed)

    @app.post("/zones/{zone_id}/survey")
    def survey(zone_id: str, req: SurveyRequest):
        return service.zone(zone_id).handle_survey(req.session)

    @app.get("/zones/{zone_id}/state")
    def state(zone_id: str, session: str | None = Query(default=None)):
        return service.zone(zone_id).snapshot(session)

    @app.get("/zones/{zone_id}/events")
    def events_stream(zone_id: str, max_events: int = Query(default=0)):
        rt = service.zone(zone_id)
        sub = rt.subscribe()

        def gen():
            sent = 0
            try:
                yield f"data: {json.dumps({'type': 'state', 'zone': zone_id, 'state': rt.snapshot()})}\n\n"
                sent += 1
                while not max_events or sent < max_events:
                    try:
                        msg = sub.q.get(timeout=1.0)
                        yield f"data: {json.dumps(msg)}\n\n"
                        sent += 1
                    except queue.Empty:
                        yield ": keepalive\n\n"
            finally:
                rt.unsubscribe(sub)

        return StreamingResponse(
            gen(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "Connection": "keep-alive"},
        )

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "zones": {
                zid: {
                    "work_hours": rt.state.work_hours,
                    "occupants": len(rt.state.members),
                    "actuator_ok": rt.actuator_ok,
                    "actuator_error": rt.last_actuator_error,
                }
                for zid, rt in service.zones.items()
            },
        }

    if service.cfg.static_dir:
        if os.path.isdir(service.cfg.static_dir):
            from fastapi.staticfiles import StaticFiles

            app.mount(
                "/", StaticFiles(directory=service.cfg.static_dir, html=True), name="portal"
            )

    return app
