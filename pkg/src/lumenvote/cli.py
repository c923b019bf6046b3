"""Command-line entry points.

    lumenvote serve --config cfg.yaml
    lumenvote simulate --agents 2 --days 1 --out day.jsonl --sensors-out day.csv
    lumenvote replay --log day.jsonl
    lumenvote report savings --log day.jsonl
    lumenvote report correlations --log day.jsonl --sensors day.csv --out table.csv
    lumenvote ic-sweep --profiles 1000
    lumenvote ir-sweep --trials 10000
    lumenvote lottery --log day.jsonl --prizes 2 --seed 7
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import threading
import time

from . import analytics, events as ev, rewards, simulate as sim
from .engine import replay_full, state_digest
from .mechanism import MechanismConfig, TypeVector


def _machine_write(path: str | None, records: list[dict]) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def cmd_serve(args) -> int:
    import uvicorn

    from .config import load_config
    from .service import LightService, build_app

    cfg = load_config(args.config)
    service = LightService(cfg, cfg.data_dir)
    app = build_app(service)

    def ticker():
        while True:
            service.tick_all()
            time.sleep(args.tick_seconds)

    threading.Thread(target=ticker, daemon=True).start()
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    return 0


def cmd_replay(args) -> int:
    cfg = MechanismConfig()
    log = ev.load_session_events(args.log)
    state, segments, commands = replay_full(log, cfg)
    print(f"events           {len(log)}")
    print(f"segments         {len(segments)}")
    print(f"actuator cmds    {len(commands)}")
    print(f"communal points  {state.communal_milli / 1000:.3f}")
    for user in sorted(state.accrued_milli):
        print(f"  {user:16s} {state.accrued_milli[user] / 1000:.3f} points")
    print(f"state digest     {state_digest(state)}")
    return 0


def _demo_agents(n: int, seed: int, cfg: MechanismConfig) -> list[sim.AgentSpec]:
    rng = random.Random(seed)
    agents = []
    work_len = sim.WORK_END_MS - sim.WORK_START_MS
    half = work_len // 2
    for i in range(n):
        costs = tuple(rng.randrange(0, cfg.lambda_max + 1) for _ in range(cfg.num_outcomes))
        # morning and afternoon stints around a lunch break
        morning = (rng.randrange(0, half // 4), rng.randrange(half // 2, half - 1))
        afternoon = (half + rng.randrange(0, half // 4), half + rng.randrange(half // 2, half + 1))
        agents.append(
            sim.AgentSpec(
                agent_id=f"agent{i + 1}",
                true_type=TypeVector(costs),
                schedule=(morning, afternoon),
            )
        )
    return agents


def _synthetic_sensors(trace: sim.ScenarioTrace, seed: int) -> list[analytics.SensorSample]:
    rng = random.Random(seed ^ 0x5EA50E)
    samples = []
    if not trace.events:
        return samples
    start = trace.events[0].timestamp_ms
    end = trace.events[-1].timestamp_ms
    step = 5 * 60 * 1000
    for ts in range(start, end + step, step):
        samples.append(
            analytics.SensorSample(
                timestamp_ms=ts,
                humidity_percent=round(min(100.0, max(0.0, rng.gauss(80.0, 11.0))), 2),
                temperature_degf=round(rng.gauss(55.0, 5.0), 2),
                pressure_inhg=round(rng.gauss(29.6, 0.1), 3),
                solar_radiation_w_m2=round(max(0.0, rng.gauss(250.0, 150.0)), 1),
            )
        )
    return samples


def cmd_simulate(args) -> int:
    cfg = MechanismConfig()
    agents = _demo_agents(args.agents, args.seed, cfg)
    trace = sim.run_scenario(agents, days=args.days, seed=args.seed, cfg=cfg)
    with ev.EventLogWriter(args.out) as w:
        w.append_all(trace.events)
    print(f"wrote {len(trace.events)} events to {args.out}")
    if args.sensors_out:
        analytics.write_sensor_csv(_synthetic_sensors(trace, args.seed), args.sensors_out)
        print(f"wrote synthetic sensor samples to {args.sensors_out}")
    print(f"segments        {len(trace.segments)}")
    for user in sorted(trace.realized_utility_milli):
        earned = trace.final_state.accrued_milli.get(user, 0)
        print(
            f"  {user:16s} earned {earned / 1000:9.3f} pts   "
            f"realized utility {trace.realized_utility_milli[user] / 1000:9.3f} pts"
        )
    print(f"digest          {trace.digest}")
    return 0


def cmd_ic_sweep(args) -> int:
    cfg = MechanismConfig()
    rng = random.Random(args.seed)
    candidates = sim.report_grid(cfg, args.grid_step)
    records = []
    profitable = 0
    worst = 0
    t0 = time.time()
    for p in range(args.profiles):
        profile = sim.uniform_profile(rng, cfg, args.n_min, args.n_max, args.grid_step)
        prof_worst = None
        for i in range(len(profile)):
            _, gain = sim.deviation_search(profile, i, cfg, args.grid_step, candidates)
            if gain > 0:
                profitable += 1
            prof_worst = gain if prof_worst is None else max(prof_worst, gain)
        worst = max(worst, prof_worst or 0)
        records.append({"profile": p, "n": len(profile), "worst_gain": prof_worst})
    dt = time.time() - t0
    _machine_write(args.out, records)
    print(f"profiles            {args.profiles}")
    print(f"profitable reports  {profitable}")
    print(f"worst gain          {worst}")
    print(f"elapsed             {dt:.1f}s")
    print("PASS" if profitable == 0 and worst <= 0 else "FAIL")
    return 0 if profitable == 0 else 1


def cmd_ir_sweep(args) -> int:
    cfg = MechanismConfig()

    def sampler(rng: random.Random):
        return sim.uniform_profile(rng, cfg, args.n_min, args.n_max, 1)

    report = sim.ir_sweep(sampler, args.trials, cfg, seed=args.seed)
    _machine_write(
        args.out,
        [
            {
                "trials": report.trials,
                "ir_violations": report.ir_violations,
                "payment_bound_violations": report.payment_bound_violations,
            }
        ],
    )
    print(f"trials                    {report.trials}")
    print(f"IR violations             {report.ir_violations}")
    print(f"payment bound violations  {report.payment_bound_violations}")
    print("PASS" if report.ir_violations == 0 and report.payment_bound_violations == 0 else "FAIL")
    return 0 if report.ir_violations == 0 else 1


def cmd_report_savings(args) -> int:
    cfg = MechanismConfig()
    log = ev.load_session_events(args.log)
    intervals = analytics.level_intervals_from_log(log, cfg)
    pct = analytics.energy_savings(intervals, baseline_percent=args.baseline)
    print(f"energy saved vs {args.baseline}% baseline: {pct:.2f}%")
    return 0


def cmd_report_correlations(args) -> int:
    cfg = MechanismConfig()
    if args.votes:
        votes = analytics.ingest_votes_csv(args.votes)
    else:
        log = ev.load_session_events(args.log)
        votes = analytics.vote_series_from_log(log, cfg)
    samples = analytics.ingest_sensor_csv(args.sensors)
    rows = analytics.preference_correlations(
        votes, samples, window_ms=args.window_minutes * 60_000
    )
    print(f"{'variable':28s} {'mean':>10s} {'sd':>10s} {'r':>8s} {'p':>8s}")
    for row in rows:
        print(
            f"{row.variable:28s} {row.mean:10.2f} {row.sd:10.2f} "
            f"{row.r:8.3f} {row.p:8.3f}"
        )
    if args.out:
        analytics.write_correlation_csv(rows, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_lottery(args) -> int:
    cfg = MechanismConfig()
    log = ev.load_session_events(args.log)
    state, _, _ = replay_full(log, cfg)
    accounts = [
        rewards.PointsAccount(u, m)
        for u, m in sorted(state.accrued_milli.items())
        if m > 0
    ]
    if not accounts:
        print("nobody holds points yet")
        return 1
    odds = rewards.win_odds(accounts)
    print(f"{'user':16s} {'points':>12s} {'odds':>8s}")
    for a in accounts:
        print(f"{a.user_id:16s} {a.milli_points / 1000:12.3f} {float(odds[a.user_id]):8.2%}")
    winners = rewards.run_lottery(accounts, args.prizes, args.seed)
    print("winners: " + ", ".join(w.user_id for w in winners))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lumenvote", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("serve", help="run the zone service")
    sp.add_argument("--config", required=True)
    sp.add_argument("--tick-seconds", type=float, default=1.0)
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("replay", help="rebuild state from an event log")
    sp.add_argument("--log", required=True)
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("simulate", help="run a synthetic multi-agent scenario")
    sp.add_argument("--agents", type=int, default=2)
    sp.add_argument("--days", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--sensors-out")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("ic-sweep", help="exhaustive misreport search over random profiles")
    sp.add_argument("--profiles", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--grid-step", type=int, default=5)
    sp.add_argument("--n-min", type=int, default=2)
    sp.add_argument("--n-max", type=int, default=5)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_ic_sweep)

    sp = sub.add_parser("ir-sweep", help="outside-option check over random profiles")
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-min", type=int, default=1)
    sp.add_argument("--n-max", type=int, default=5)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_ir_sweep)

    rp = sub.add_parser("report", help="metrics over logs and sensor data")
    rsub = rp.add_subparsers(dest="report_command", required=True)

    sp = rsub.add_parser("savings", help="energy savings vs always-on baseline")
    sp.add_argument("--log", required=True)
    sp.add_argument("--baseline", type=int, default=100)
    sp.set_defaults(fn=cmd_report_savings)

    sp = rsub.add_parser("correlations", help="preference vs atmospheric variables")
    source = sp.add_mutually_exclusive_group(required=True)
    source.add_argument("--log", help="event log to extract votes from")
    source.add_argument("--votes", help="votes CSV (timestamp_ms, level_percent)")
    sp.add_argument("--sensors", required=True)
    sp.add_argument("--out")
    sp.add_argument("--window-minutes", type=int, default=5)
    sp.set_defaults(fn=cmd_report_correlations)

    sp = sub.add_parser("lottery", help="odds table and a seeded draw")
    sp.add_argument("--log", required=True)
    sp.add_argument("--prizes", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_lottery)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
