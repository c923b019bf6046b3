"""Energy-savings metric and preference/atmosphere correlation table.

Savings compare the time-weighted implemented light level against an
always-at-100% baseline over work hours.  The correlation table pairs
each submitted vote (the level of the voter's preferred setting) with
the nearest-in-time atmospheric sample and reports mean, SD, Pearson r
and a two-sided Student-t p-value per variable.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from fractions import Fraction

from scipy.special import betainc

from . import events as ev
from .engine import EngineState, Segment, apply_event
from .mechanism import MechanismConfig


class AnalyticsError(ValueError):
    """Bad input to a metric: empty trace, degenerate series, bad CSV."""


@dataclass(frozen=True)
class SensorSample:
    """One atmospheric reading from the office sensors."""

    timestamp_ms: int
    humidity_percent: float
    temperature_degf: float
    pressure_inhg: float
    solar_radiation_w_m2: float

    def __post_init__(self):
        if not 0 <= self.humidity_percent <= 100:
            raise AnalyticsError(f"humidity {self.humidity_percent} outside [0, 100]")
        if self.pressure_inhg <= 0:
            raise AnalyticsError(f"pressure {self.pressure_inhg} must be positive")
        if self.solar_radiation_w_m2 < 0:
            raise AnalyticsError(
                f"solar radiation {self.solar_radiation_w_m2} must be non-negative"
            )


SENSOR_FIELDS = (
    "humidity_percent",
    "temperature_degf",
    "pressure_inhg",
    "solar_radiation_w_m2",
)

SENSOR_CSV_HEADER = ("timestamp_ms",) + SENSOR_FIELDS


@dataclass(frozen=True)
class CorrelationRow:
    variable: str
    mean: float
    sd: float
    r: float
    p: float


def energy_savings(
    intervals: list[tuple[int, int, int]], baseline_percent: int = 100
) -> float:
    """Percent energy saved vs. running at ``baseline_percent`` the
    whole time.

    ``intervals`` are (start_ms, end_ms, level_percent) spans of
    implemented lighting over work hours.  Returns
    ``100 * (1 - mean_level / baseline)`` with the mean weighted by
    duration, rounded to 2 decimals.  Exact rational arithmetic inside,
    so uniform time rescaling cannot move the result.
    """
    if not intervals:
        raise AnalyticsError("empty trace: no implemented-lighting intervals")
    weighted = 0
    total = 0
    for start, end, level in intervals:
        if end <= start:
            raise AnalyticsError(f"interval [{start}, {end}] has no duration")
        if not 0 < level <= baseline_percent:
            raise AnalyticsError(f"level {level}% outside (0, {baseline_percent}]")
        weighted += (end - start) * level
        total += end - start
    saved = 100 * (1 - Fraction(weighted, total * baseline_percent))
    return round(float(saved), 2)


def pearson_r(xs: list[float], ys: list[float]) -> float:
    """Product-moment correlation of two equal-length series."""
    n = len(xs)
    if n != len(ys):
        raise AnalyticsError(f"series lengths differ: {n} vs {len(ys)}")
    if n < 3:
        raise AnalyticsError(f"need at least 3 points, got {n}")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        raise AnalyticsError("correlation undefined for a zero-variance series")
    return sxy / math.sqrt(sxx * syy)


def p_value(r: float, n: int) -> float:
    """Two-sided p-value for a Pearson correlation of ``r`` over ``n``
    pairs, from the Student-t distribution with n-2 degrees of freedom
    via the regularized incomplete beta function."""
    if n < 3:
        raise AnalyticsError(f"need n >= 3, got {n}")
    if abs(r) > 1:
        raise AnalyticsError(f"|r| must be <= 1, got {r}")
    if abs(r) == 1:
        return 0.0
    df = n - 2
    t_sq = r * r * df / (1 - r * r)
    return float(betainc(df / 2, 0.5, df / (df + t_sq)))


def nearest_joins(
    votes: list[tuple[int, int]],
    samples: list[SensorSample],
    window_ms: int = 300_000,
) -> list[tuple[int, SensorSample]]:
    """Pair each vote with the nearest-in-time sample within the window.

    Sensor cadence is not guaranteed, so each vote independently picks
    its closest sample; votes with nothing close enough drop out.
    """
    ordered = sorted(samples, key=lambda s: s.timestamp_ms)
    joined = []
    for ts, level in votes:
        best = None
        best_gap = window_ms + 1
        for s in ordered:
            gap = abs(s.timestamp_ms - ts)
            if gap < best_gap:
                best, best_gap = s, gap
            elif s.timestamp_ms > ts:
                break
        if best is not None and best_gap <= window_ms:
            joined.append((level, best))
    return joined


def _sample_sd(values: list[float]) -> float:
    n = len(values)
    m = sum(values) / n
    return math.sqrt(sum((v - m) ** 2 for v in values) / (n - 1))


def preference_correlations(
    votes: list[tuple[int, int]],
    samples: list[SensorSample],
    window_ms: int = 300_000,
) -> list[CorrelationRow]:
    """Descriptive statistics and correlations of each atmospheric
    variable against reported light setting preference.

    ``votes`` are (timestamp_ms, preferred level_percent) pairs, one
    per ballot submission.  The first row describes the preference
    series itself; one row per sensor variable follows.
    """
    joined = nearest_joins(votes, samples, window_ms)
    if not joined:
        raise AnalyticsError("no vote joins any sensor sample within the window")
    prefs = [float(level) for level, _ in joined]
    n = len(joined)
    rows = [
        CorrelationRow(
            variable="light_setting_preference",
            mean=sum(prefs) / n,
            sd=_sample_sd(prefs),
            r=1.0,
            p=0.0,
        )
    ]
    for name in SENSOR_FIELDS:
        series = [float(getattr(s, name)) for _, s in joined]
        r = pearson_r(series, prefs)
        rows.append(
            CorrelationRow(
                variable=name,
                mean=sum(series) / n,
                sd=_sample_sd(series),
                r=r,
                p=p_value(r, n),
            )
        )
    return rows


def ingest_sensor_csv(path: str | os.PathLike) -> list[SensorSample]:
    """Parse and validate a sensor CSV, sorted by timestamp.

    The header must name ``timestamp_ms`` and the four variables.  All
    malformed rows are collected and reported together with their line
    numbers; any malformed row fails the ingest.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise AnalyticsError(
                f"empty file: expected header {', '.join(SENSOR_CSV_HEADER)}"
            )
        missing = [c for c in SENSOR_CSV_HEADER if c not in reader.fieldnames]
        if missing:
            raise AnalyticsError(
                f"missing columns {', '.join(missing)}; "
                f"expected header {', '.join(SENSOR_CSV_HEADER)}"
            )
        samples: list[SensorSample] = []
        bad: list[str] = []
        for row in reader:
            line = reader.line_num
            try:
                samples.append(
                    SensorSample(
                        timestamp_ms=int(row["timestamp_ms"]),
                        humidity_percent=float(row["humidity_percent"]),
                        temperature_degf=float(row["temperature_degf"]),
                        pressure_inhg=float(row["pressure_inhg"]),
                        solar_radiation_w_m2=float(row["solar_radiation_w_m2"]),
                    )
                )
            except (AnalyticsError, TypeError, ValueError) as exc:
                bad.append(f"line {line}: {exc}")
        if bad:
            raise AnalyticsError("malformed sensor rows: " + "; ".join(bad))
    return sorted(samples, key=lambda s: s.timestamp_ms)


def write_sensor_csv(samples: list[SensorSample], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SENSOR_CSV_HEADER)
        for s in samples:
            w.writerow([s.timestamp_ms] + [getattr(s, f) for f in SENSOR_FIELDS])


def write_correlation_csv(rows: list[CorrelationRow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "mean", "sd", "r", "p"])
        for row in rows:
            w.writerow(
                [row.variable, f"{row.mean:.6g}", f"{row.sd:.6g}", f"{row.r:.6g}", f"{row.p:.6g}"]
            )


def vote_series_from_log(
    log: list[ev.SessionEvent], cfg: MechanismConfig
) -> list[tuple[int, int]]:
    """(timestamp_ms, preferred level_percent) per explicit ballot
    submission: ballot changes plus logins that carried a ballot."""
    out = []
    for e in log:
        if e.ballot is not None and e.kind in (ev.LOGIN, ev.BALLOT_CHANGE):
            out.append((e.timestamp_ms, cfg.settings[e.ballot.preferred].level_percent))
    return out


VOTES_CSV_HEADER = ("timestamp_ms", "level_percent")


def ingest_votes_csv(path: str | os.PathLike) -> list[tuple[int, int]]:
    """Vote series from a CSV with columns timestamp_ms, level_percent;
    same malformed-row reporting as the sensor ingest."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(
            c not in reader.fieldnames for c in VOTES_CSV_HEADER
        ):
            raise AnalyticsError(
                f"expected header {', '.join(VOTES_CSV_HEADER)}"
            )
        votes: list[tuple[int, int]] = []
        bad: list[str] = []
        for row in reader:
            try:
                level = int(row["level_percent"])
                if not 0 < level <= 100:
                    raise ValueError(f"level {level}% outside (0, 100]")
                votes.append((int(row["timestamp_ms"]), level))
            except (TypeError, ValueError) as exc:
                bad.append(f"line {reader.line_num}: {exc}")
        if bad:
            raise AnalyticsError("malformed vote rows: " + "; ".join(bad))
    return sorted(votes)


def write_votes_csv(votes: list[tuple[int, int]], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(VOTES_CSV_HEADER)
        w.writerows(votes)


def level_intervals_from_log(
    log: list[ev.SessionEvent], cfg: MechanismConfig
) -> list[tuple[int, int, int]]:
    """The implemented-level timeline (start_ms, end_ms, level_percent)
    a log produces, covering exactly the spans where the engine held an
    outcome (work hours, nominal holds included)."""
    state = EngineState.initial()
    intervals: list[tuple[int, int, int]] = []
    for e in log:
        prev_outcome, prev_ts = state.outcome, state.last_ts
        state, _, _ = apply_event(state, e, cfg)
        if prev_outcome is not None and prev_ts is not None and e.timestamp_ms > prev_ts:
            intervals.append(
                (prev_ts, e.timestamp_ms, cfg.settings[prev_outcome].level_percent)
            )
    return intervals


def savings_from_segments(segments: list[Segment], cfg: MechanismConfig) -> float:
    """Energy savings over the voting-active segments of a trace."""
    return energy_savings(
        [
            (s.start_ms, s.end_ms, cfg.settings[s.outcome].level_percent)
            for s in segments
        ]
    )
