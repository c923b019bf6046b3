"""Agent-based harness for exercising the mechanism end to end.

Three kinds of checks live here: an exhaustive single-user deviation
search certifying that no grid-valued misreport beats truth-telling, a
sampling sweep certifying that every truthful user weakly prefers the
mechanism to the nominal outside option, and seeded multi-day scenarios
that drive the session engine with synthetic occupants (including a
learner that drifts toward accepted compromises, the way long-run
participants were observed to).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product

from . import events as ev
from .engine import EngineState, Segment, replay_full, segment_credit_milli, state_digest
from .mechanism import (
    Ballot,
    MechanismConfig,
    MechanismError,
    Profile,
    TypeVector,
    argmax_welfare,
    choose_outcome,
    outside_option,
    payment_rate,
    payment_rates,
    total_cost,
    utility,
)

DAY_MS = 86_400_000
WORK_START_MS = 9 * 3_600_000
WORK_END_MS = 17 * 3_600_000


class SimulationError(ValueError):
    """Invalid agent spec or sweep parameters."""


def type_to_ballot(t: TypeVector, cfg: MechanismConfig) -> Ballot:
    """The ballot a truthful user submits for this type: preferred is
    the cheapest setting (dimmest on ties), willingness-to-pay is the
    cost difference to each alternative."""
    cfg.validate_type(t)
    preferred = argmax_welfare(list(t.costs))
    pay_vs = {
        x: t.costs[x] - t.costs[preferred]
        for x in range(cfg.num_outcomes)
        if x != preferred
    }
    return Ballot(preferred=preferred, pay_vs=pay_vs)


# ---------------------------------------------------------------------------
# Incentive-compatibility oracle


def report_grid(cfg: MechanismConfig, grid_step: int) -> list[tuple[int, ...]]:
    if grid_step <= 0 or cfg.lambda_max % grid_step != 0:
        raise SimulationError(f"grid step {grid_step} must divide {cfg.lambda_max}")
    axis = range(0, cfg.lambda_max + 1, grid_step)
    return list(product(axis, repeat=cfg.num_outcomes))


def deviation_search(
    profile: Profile,
    i: int,
    cfg: MechanismConfig,
    grid_step: int = 5,
    candidates: list[tuple[int, ...]] | None = None,
) -> tuple[TypeVector, int]:
    """Best misreport for user ``i`` against the rest of the profile.

    Enumerates every report on the grid, scoring each by the utility
    user ``i`` actually experiences (true type, mechanism outcome and
    payment under the deviated profile).  Returns the best report and
    its gain over truthful reporting; the gain is never positive for a
    correct mechanism.  Sums over the other users are hoisted out of
    the loop, and the winning candidate is re-scored through the plain
    mechanism entry points to pin the shortcut to the real code path.

    ``candidates`` lets sweeps share one precomputed grid.
    """
    n = len(profile)
    if not 0 <= i < n:
        raise SimulationError(f"user index {i} out of range")
    if candidates is None:
        candidates = report_grid(cfg, grid_step)
    true_type = profile.types[i]
    base = n * cfg.lambda_max
    others = [
        total_cost(x, profile, cfg) - true_type.costs[x]
        for x in range(cfg.num_outcomes)
    ]

    truthful_utility = utility(
        choose_outcome(profile, cfg), payment_rate(i, profile, cfg), true_type
    )

    # Tight loop: same first-minimum tie-break as argmax_welfare, with
    # the per-candidate list building and function call flattened out.
    m = cfg.num_outcomes
    true_costs = true_type.costs
    best_report = true_costs
    best_utility = None
    for report in candidates:
        f = 0
        f_total = others[0] + report[0]
        for x in range(1, m):
            t = others[x] + report[x]
            if t < f_total:
                f_total, f = t, x
        u = base - others[f] - true_costs[f]
        if best_utility is None or u > best_utility:
            best_utility, best_report = u, report

    best_vec = TypeVector(tuple(best_report))
    deviated = Profile(
        user_ids=profile.user_ids,
        types=profile.types[:i] + (best_vec,) + profile.types[i + 1 :],
    )
    check = utility(
        choose_outcome(deviated, cfg), payment_rate(i, deviated, cfg), true_type
    )
    if check != best_utility:
        raise SimulationError(
            f"search shortcut disagrees with mechanism: {best_utility} vs {check}"
        )
    return best_vec, best_utility - truthful_utility


def uniform_profile(
    rng: random.Random,
    cfg: MechanismConfig,
    n_min: int = 2,
    n_max: int = 5,
    grid_step: int = 1,
) -> Profile:
    """A random truthful profile with grid-valued entries."""
    n = rng.randint(n_min, n_max)
    steps = cfg.lambda_max // grid_step
    return Profile(
        user_ids=tuple(f"u{j}" for j in range(n)),
        types=tuple(
            TypeVector(
                tuple(
                    rng.randint(0, steps) * grid_step
                    for _ in range(cfg.num_outcomes)
                )
            )
            for _ in range(n)
        ),
    )


@dataclass(frozen=True)
class DeviationSweepReport:
    profiles: int
    searches: int
    profitable_deviations: int
    worst_gain: int


def deviation_sweep(
    cfg: MechanismConfig,
    profiles: int = 1000,
    seed: int = 0,
    n_min: int = 2,
    n_max: int = 5,
    grid_step: int = 5,
) -> DeviationSweepReport:
    """Exhaustive misreport search for every user of many random
    truthful profiles.  A correct mechanism yields zero profitable
    deviations and worst gain 0 (truth always attains the max)."""
    rng = random.Random(seed)
    candidates = report_grid(cfg, grid_step)
    searches = 0
    profitable = 0
    worst = None
    for _ in range(profiles):
        profile = uniform_profile(rng, cfg, n_min, n_max, grid_step)
        for i in range(len(profile)):
            _, gain = deviation_search(profile, i, cfg, grid_step, candidates)
            searches += 1
            if gain > 0:
                profitable += 1
            if worst is None or gain > worst:
                worst = gain
    return DeviationSweepReport(profiles, searches, profitable, worst or 0)


# ---------------------------------------------------------------------------
# Individual-rationality sweep


@dataclass(frozen=True)
class IrSweepReport:
    trials: int
    ir_violations: int
    payment_bound_violations: int
    violation_fraction: float


def ir_sweep(
    sampler,
    trials: int,
    cfg: MechanismConfig,
    seed: int = 0,
) -> IrSweepReport:
    """Fraction of sampled truthful profiles where some user would have
    been better off with the nominal setting and no points (zero when
    no virtual participant is configured), plus payment-bound checks.

    ``sampler(rng) -> Profile`` supplies the truthful profiles.
    """
    if trials < 1:
        raise SimulationError("trials must be >= 1")
    rng = random.Random(seed)
    ir_bad = 0
    bound_bad = 0
    vmax = max(cfg.virtual_cost) if cfg.virtual_cost else 0
    for _ in range(trials):
        profile = sampler(rng)
        n = len(profile)
        f = choose_outcome(profile, cfg)
        rates = payment_rates(profile, cfg)
        violated = False
        for i, t in enumerate(profile.types):
            if utility(f, rates[i], t) < outside_option(t, cfg):
                violated = True
            if not cfg.lambda_max - vmax <= rates[i] <= n * cfg.lambda_max:
                bound_bad += 1
        if violated:
            ir_bad += 1
    return IrSweepReport(trials, ir_bad, bound_bad, ir_bad / trials)


# ---------------------------------------------------------------------------
# Scenario harness


class Policy:
    """Reporting behavior of one synthetic occupant."""

    def initial_report(self, true_type: TypeVector, cfg: MechanismConfig) -> Ballot:
        return type_to_ballot(true_type, cfg)

    def next_report(
        self,
        current: Ballot,
        summary: "EpisodeSummary",
        cfg: MechanismConfig,
        rng: random.Random,
    ) -> Ballot:
        return current


class Truthful(Policy):
    pass


@dataclass
class FixedMisreport(Policy):
    report: Ballot

    def initial_report(self, true_type: TypeVector, cfg: MechanismConfig) -> Ballot:
        return self.report


@dataclass
class CompromiseLearner(Policy):
    """Drifts toward accepting whatever keeps being implemented.

    After each day, if the dominant implemented setting was not the
    agent's preferred one and the day's realized utility did not drop,
    the declared willingness-to-pay against that setting shrinks by
    ``step``.  Illustrative one-step hill climbing, not a behavioral
    claim; it reproduces the observed pattern of long-run participants
    softening their votes against settings they kept living under.
    """

    step: int = 5

    def next_report(self, current, summary, cfg, rng):
        dom = summary.dominant_outcome
        if dom is None or dom == current.preferred:
            return current
        if (
            summary.prev_utility_milli is not None
            and summary.utility_milli < summary.prev_utility_milli
        ):
            return current
        pay_vs = dict(current.pay_vs)
        pay_vs[dom] = max(0, pay_vs[dom] - self.step)
        return Ballot(preferred=current.preferred, pay_vs=pay_vs)


@dataclass(frozen=True)
class EpisodeSummary:
    episode: int
    utility_milli: int
    prev_utility_milli: int | None
    dominant_outcome: int | None


@dataclass
class AgentSpec:
    """One synthetic occupant: private type, reporting policy, and a
    daily presence schedule of (login, logout) offsets in ms from the
    start of work hours."""

    agent_id: str
    true_type: TypeVector
    policy: Policy = field(default_factory=Truthful)
    schedule: tuple[tuple[int, int], ...] = ((0, WORK_END_MS - WORK_START_MS),)

    def validate(self, work_len_ms: int) -> None:
        prev_end = None
        for login, logout in self.schedule:
            if not 0 <= login < logout <= work_len_ms:
                raise SimulationError(
                    f"{self.agent_id}: interval ({login}, {logout}) outside the work day"
                )
            if prev_end is not None and login < prev_end:
                raise SimulationError(f"{self.agent_id}: schedule intervals overlap")
            prev_end = logout


@dataclass
class ScenarioTrace:
    """Everything a scenario produced, sufficient to replay it."""

    events: list[ev.SessionEvent]
    segments: list[Segment]
    final_state: EngineState
    digest: str
    reports: dict[str, list[Ballot]]
    episode_utility_milli: dict[str, list[int]]
    realized_utility_milli: dict[str, int]


_EVENT_ORDER = {
    ev.WORK_HOURS_START: 0,
    ev.LOGIN: 1,
    ev.BALLOT_CHANGE: 2,
    ev.LOGOUT: 3,
    ev.WORK_HOURS_END: 4,
}


def _episode_events(
    agents: list[AgentSpec],
    reports: dict[str, Ballot],
    day_base_ms: int,
    work_start_ms: int,
    work_end_ms: int,
) -> list[ev.SessionEvent]:
    ws = day_base_ms + work_start_ms
    out = [ev.SessionEvent(ws, ev.WORK_HOURS_START)]
    for a in agents:
        for login, logout in a.schedule:
            out.append(
                ev.SessionEvent(ws + login, ev.LOGIN, a.agent_id, reports[a.agent_id])
            )
            out.append(ev.SessionEvent(ws + logout, ev.LOGOUT, a.agent_id))
    out.append(ev.SessionEvent(day_base_ms + work_end_ms, ev.WORK_HOURS_END))
    out.sort(key=lambda e: (e.timestamp_ms, _EVENT_ORDER[e.kind], e.user_id or ""))
    return out


def _true_cost_milli(seg: Segment, user: str, true_type: TypeVector) -> int:
    return segment_credit_milli(seg.duration_ms, true_type.costs[seg.outcome])


def run_scenario(
    agents: list[AgentSpec],
    days: int = 1,
    seed: int = 0,
    cfg: MechanismConfig | None = None,
    work_start_ms: int = WORK_START_MS,
    work_end_ms: int = WORK_END_MS,
) -> ScenarioTrace:
    """Simulate ``days`` consecutive work days of the given agents.

    Each day is one episode: agents log in with their current report,
    the engine allocates and accrues, and policies may adjust their
    report for the next day from what the day yielded.  Deterministic
    for a given seed.
    """
    if cfg is None:
        cfg = MechanismConfig()
    if not agents:
        raise SimulationError("scenario needs at least one agent")
    if days < 1:
        raise SimulationError("days must be >= 1")
    work_len = work_end_ms - work_start_ms
    ids = [a.agent_id for a in agents]
    if len(set(ids)) != len(ids):
        raise SimulationError("agent ids must be distinct")
    for a in agents:
        a.validate(work_len)
        try:
            cfg.validate_type(a.true_type)
        except MechanismError as exc:
            raise SimulationError(f"{a.agent_id}: {exc}") from exc

    rng = random.Random(seed)
    current: dict[str, Ballot] = {
        a.agent_id: a.policy.initial_report(a.true_type, cfg) for a in agents
    }
    reports: dict[str, list[Ballot]] = {a.agent_id: [] for a in agents}
    episode_utils: dict[str, list[int]] = {a.agent_id: [] for a in agents}
    all_events: list[ev.SessionEvent] = []

    for day in range(days):
        for a in agents:
            reports[a.agent_id].append(current[a.agent_id])
        day_events = _episode_events(
            agents, current, day * DAY_MS, work_start_ms, work_end_ms
        )
        all_events.extend(day_events)

        # Replay the whole trace so far; per-episode figures come from
        # the segments that fall inside this day.
        _, segments, _ = replay_full(all_events, cfg)
        day_segments = [s for s in segments if s.start_ms // DAY_MS == day]
        outcome_time: dict[int, int] = {}
        for s in day_segments:
            outcome_time[s.outcome] = outcome_time.get(s.outcome, 0) + s.duration_ms
        dominant = (
            max(sorted(outcome_time), key=lambda x: outcome_time[x])
            if outcome_time
            else None
        )
        for a in agents:
            earned = sum(
                s.credits_milli.get(a.agent_id, 0) for s in day_segments
            )
            cost = sum(
                _true_cost_milli(s, a.agent_id, a.true_type)
                for s in day_segments
                if a.agent_id in s.credits_milli
            )
            u = earned - cost
            prev = episode_utils[a.agent_id][-1] if episode_utils[a.agent_id] else None
            episode_utils[a.agent_id].append(u)
            summary = EpisodeSummary(
                episode=day,
                utility_milli=u,
                prev_utility_milli=prev,
                dominant_outcome=dominant,
            )
            current[a.agent_id] = a.policy.next_report(
                current[a.agent_id], summary, cfg, rng
            )

    final_state, segments, _ = replay_full(all_events, cfg)
    return ScenarioTrace(
        events=all_events,
        segments=segments,
        final_state=final_state,
        digest=state_digest(final_state),
        reports=reports,
        episode_utility_milli=episode_utils,
        realized_utility_milli={
            u: sum(vals) for u, vals in episode_utils.items()
        },
    )
