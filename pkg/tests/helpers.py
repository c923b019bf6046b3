"""Shared generators for engine-level tests: random but always-valid
work-day event logs, plus split-marker insertion."""

import random

from lumenvote import events as ev
from lumenvote.engine import EngineState, apply_event
from lumenvote.mechanism import Ballot, MechanismConfig

DAY_MS = 86_400_000
WORK_START = 9 * 3_600_000
WORK_END = 17 * 3_600_000


def random_ballot(rng: random.Random, cfg: MechanismConfig) -> Ballot:
    m = cfg.num_outcomes
    preferred = rng.randrange(m)
    return Ballot(
        preferred=preferred,
        pay_vs={
            alt: rng.randint(0, cfg.lambda_max) for alt in range(m) if alt != preferred
        },
    )


def random_day_log(
    rng: random.Random,
    cfg: MechanismConfig,
    n_users: int = 4,
    steps: int = 30,
    day: int = 0,
) -> list[ev.SessionEvent]:
    """A valid one-day log: alternating login/logout per user, ballots
    only while present, everyone out before close of work hours."""
    ws = day * DAY_MS + WORK_START
    we = day * DAY_MS + WORK_END
    out = [ev.SessionEvent(ws, ev.WORK_HOURS_START)]
    logged_in: set[str] = set()
    ts = ws
    for _ in range(steps):
        ts += rng.randint(0, 20 * 60_000)
        if ts >= we:
            break
        u = f"u{rng.randrange(n_users)}"
        if u in logged_in:
            if rng.random() < 0.35:
                out.append(ev.SessionEvent(ts, ev.LOGOUT, u))
                logged_in.remove(u)
            else:
                out.append(ev.SessionEvent(ts, ev.BALLOT_CHANGE, u, random_ballot(rng, cfg)))
        else:
            ballot = random_ballot(rng, cfg) if rng.random() < 0.8 else None
            out.append(ev.SessionEvent(ts, ev.LOGIN, u, ballot))
            logged_in.add(u)
    for u in sorted(logged_in):
        out.append(ev.SessionEvent(we, ev.LOGOUT, u))
    out.append(ev.SessionEvent(we, ev.WORK_HOURS_END))
    return out


def insert_split_markers(
    log: list[ev.SessionEvent],
    rng: random.Random,
    cfg: MechanismConfig,
    k: int,
) -> list[ev.SessionEvent]:
    """Insert up to k no-op markers (a user re-submitting their current
    ballot) at random valid points.  Each marker splits one segment in
    two without changing membership or reports."""
    out = list(log)
    inserted = 0
    for _ in range(k * 4):
        if inserted >= k:
            break
        pos = rng.randint(1, len(out) - 1)
        state = EngineState.initial()
        for e in out[:pos]:
            state, _, _ = apply_event(state, e, cfg)
        if not (state.work_hours and state.ballots):
            continue
        user = rng.choice(sorted(state.ballots))
        lo = out[pos - 1].timestamp_ms
        hi = out[pos].timestamp_ms
        marker = ev.SessionEvent(
            rng.randint(lo, hi), ev.BALLOT_CHANGE, user, state.ballots[user]
        )
        out.insert(pos, marker)
        inserted += 1
    return out
