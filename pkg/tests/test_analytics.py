"""Energy metric and correlation statistics, checked against hand
derivations, closed forms, and scipy as an independent oracle."""

import math
import random

import pytest
from scipy import stats

from lumenvote.analytics import (
    AnalyticsError,
    SensorSample,
    energy_savings,
    ingest_sensor_csv,
    ingest_votes_csv,
    nearest_joins,
    p_value,
    pearson_r,
    preference_correlations,
    vote_series_from_log,
    write_sensor_csv,
    write_votes_csv,
)
from lumenvote import events as ev
from lumenvote.mechanism import Ballot, MechanismConfig

HOUR = 3_600_000


# -- energy savings -----------------------------------------------------------


def test_all_normal_saves_67_percent():
    assert energy_savings([(0, 8 * HOUR, 33)]) == 67.00


def test_half_normal_half_verybright_saves_33_50():
    assert energy_savings([(0, 4 * HOUR, 33), (4 * HOUR, 8 * HOUR, 100)]) == 33.50


def test_savings_invariant_under_time_rescaling():
    base = [(0, 2 * HOUR, 33), (2 * HOUR, 3 * HOUR, 67), (3 * HOUR, 7 * HOUR, 100)]
    expected = energy_savings(base)
    for scale in (2, 10, 777):
        scaled = [(s * scale, e * scale, lv) for s, e, lv in base]
        assert energy_savings(scaled) == expected


def test_savings_rejects_empty_and_bad_intervals():
    with pytest.raises(AnalyticsError):
        energy_savings([])
    with pytest.raises(AnalyticsError):
        energy_savings([(10, 10, 33)])
    with pytest.raises(AnalyticsError):
        energy_savings([(0, 10, 150)])


# -- pearson_r ----------------------------------------------------------------


def test_pearson_exact_cases():
    assert pearson_r([1, 2, 3], [2, 4, 6]) == 1.0
    assert pearson_r([1, 2, 3], [3, 2, 1]) == -1.0
    assert pearson_r([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)


def test_pearson_symmetry_and_affine_invariance():
    rng = random.Random(31)
    for _ in range(50):
        xs = [rng.gauss(0, 1) for _ in range(30)]
        ys = [rng.gauss(0, 1) for _ in range(30)]
        r = pearson_r(xs, ys)
        assert pearson_r(ys, xs) == pytest.approx(r, abs=1e-12)
        a, b = rng.uniform(0.1, 5), rng.uniform(-10, 10)
        assert pearson_r([a * x + b for x in xs], ys) == pytest.approx(r, abs=1e-9)
        assert pearson_r([-a * x + b for x in xs], ys) == pytest.approx(-r, abs=1e-9)


def test_pearson_matches_scipy():
    rng = random.Random(33)
    for _ in range(50):
        n = rng.randint(3, 200)
        xs = [rng.gauss(0, 3) for _ in range(n)]
        ys = [0.4 * x + rng.gauss(0, 2) for x in xs]
        assert pearson_r(xs, ys) == pytest.approx(
            stats.pearsonr(xs, ys).statistic, abs=1e-12
        )


def test_pearson_rejects_degenerate_input():
    with pytest.raises(AnalyticsError):
        pearson_r([1, 2], [3, 4])
    with pytest.raises(AnalyticsError):
        pearson_r([1, 2, 3], [1, 2])
    with pytest.raises(AnalyticsError):
        pearson_r([5, 5, 5], [1, 2, 3])


# -- p_value ------------------------------------------------------------------


def test_p_value_of_zero_correlation_is_one():
    for n in (3, 10, 276):
        assert p_value(0.0, n) == 1.0


def test_p_value_closed_form_df2():
    # for df = 2 the t CDF is 1/2 + t / (2 sqrt(2 + t^2)); r = 0.8 at
    # n = 4 gives a two-sided p of exactly 0.2
    assert p_value(0.8, 4) == pytest.approx(0.2, abs=1e-9)


def test_p_value_matches_table_magnitude():
    # the solar-radiation row: r = .27 over 276 joined samples is
    # overwhelming evidence, far below the .001 the table reports
    assert p_value(0.27, 276) < 0.001


def test_p_value_extremes_and_errors():
    assert p_value(1.0, 5) == 0.0
    assert p_value(-1.0, 5) == 0.0
    with pytest.raises(AnalyticsError):
        p_value(0.5, 2)
    with pytest.raises(AnalyticsError):
        p_value(1.5, 10)


def test_p_value_monotone_in_r_and_n():
    rs = [0.05 * i for i in range(1, 20)]
    ps = [p_value(r, 30) for r in rs]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    ns = [3, 5, 10, 50, 200, 1000]
    ps = [p_value(0.3, n) for n in ns]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    # sign of r is irrelevant two-sided
    assert p_value(0.3, 30) == p_value(-0.3, 30)


def test_p_value_matches_scipy_t_sf():
    rng = random.Random(37)
    for _ in range(50):
        r = rng.uniform(-0.99, 0.99)
        n = rng.randint(3, 500)
        t = abs(r) * math.sqrt(n - 2) / math.sqrt(1 - r * r)
        assert p_value(r, n) == pytest.approx(2 * stats.t.sf(t, n - 2), rel=1e-9)


# -- joins and the correlation table ------------------------------------------


def sample_at(ts, h=50.0, t=60.0, p=29.9, s=100.0):
    return SensorSample(ts, h, t, p, s)


def test_nearest_join_window():
    votes = [(1_000_000, 33), (2_000_000, 67), (9_000_000, 100)]
    samples = [sample_at(1_040_000), sample_at(2_200_000)]
    joined = nearest_joins(votes, samples, window_ms=300_000)
    assert len(joined) == 2  # the 9_000_000 vote has nothing nearby
    assert joined[0][0] == 33 and joined[0][1].timestamp_ms == 1_040_000


def test_correlations_perfect_tracking():
    votes = []
    samples = []
    rng = random.Random(41)
    for i in range(60):
        ts = i * 600_000
        level = rng.choice([33, 67, 100])
        votes.append((ts, level))
        samples.append(
            SensorSample(
                timestamp_ms=ts + 1000,
                humidity_percent=level / 2,
                temperature_degf=level + 3.0,
                pressure_inhg=level / 10,
                solar_radiation_w_m2=2.0 * level,
            )
        )
    rows = preference_correlations(votes, samples)
    assert rows[0].variable == "light_setting_preference"
    assert rows[0].r == 1.0 and rows[0].p == 0.0
    for row in rows[1:]:
        assert row.r == pytest.approx(1.0, abs=1e-12)
        assert row.p == pytest.approx(0.0, abs=1e-12)


def test_correlations_independent_noise_stays_small():
    rng = random.Random(43)
    votes = []
    samples = []
    for i in range(500):
        ts = i * 600_000
        votes.append((ts, rng.choice([33, 67, 100])))
        samples.append(
            SensorSample(
                timestamp_ms=ts,
                humidity_percent=rng.uniform(20, 95),
                temperature_degf=rng.uniform(40, 80),
                pressure_inhg=rng.uniform(29, 30.5),
                solar_radiation_w_m2=rng.uniform(0, 900),
            )
        )
    rows = preference_correlations(votes, samples)
    for row in rows[1:]:
        assert abs(row.r) < 0.15


def test_correlations_error_when_nothing_joins():
    with pytest.raises(AnalyticsError):
        preference_correlations([(0, 33)], [sample_at(10_000_000)])


# -- sensor CSV ---------------------------------------------------------------


HEADER = "timestamp_ms,humidity_percent,temperature_degf,pressure_inhg,solar_radiation_w_m2\n"


def test_ingest_empty_file_with_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text(HEADER)
    assert ingest_sensor_csv(path) == []


def test_ingest_single_row(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text(HEADER + "1000,79.93,55.0,29.62,249.21\n")
    samples = ingest_sensor_csv(path)
    assert len(samples) == 1
    assert samples[0].humidity_percent == 79.93


def test_ingest_rejects_out_of_range_row_with_line_number(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text(HEADER + "1000,50,55,29.6,100\n2000,150,55,29.6,100\n")
    with pytest.raises(AnalyticsError, match="line 3"):
        ingest_sensor_csv(path)


def test_ingest_missing_column_lists_expected_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("timestamp_ms,humidity_percent\n1,2\n")
    with pytest.raises(AnalyticsError, match="solar_radiation_w_m2"):
        ingest_sensor_csv(path)


def test_ingest_sorts_by_timestamp_and_roundtrips(tmp_path):
    samples = [sample_at(3000), sample_at(1000), sample_at(2000)]
    path = tmp_path / "s.csv"
    write_sensor_csv(samples, path)
    loaded = ingest_sensor_csv(path)
    assert [s.timestamp_ms for s in loaded] == [1000, 2000, 3000]


# -- vote series from a log ---------------------------------------------------


def test_vote_series_extraction():
    cfg = MechanismConfig()
    b = Ballot(1, {0: 10, 2: 20})
    log = [
        ev.SessionEvent(0, ev.WORK_HOURS_START),
        ev.SessionEvent(10, ev.LOGIN, "u1", b),
        ev.SessionEvent(20, ev.LOGIN, "u2"),
        ev.SessionEvent(30, ev.BALLOT_CHANGE, "u1", Ballot(2, {0: 5, 1: 5})),
    ]
    assert vote_series_from_log(log, cfg) == [(10, 67), (30, 100)]


def test_votes_csv_roundtrip(tmp_path):
    votes = [(3000, 33), (1000, 100), (2000, 67)]
    path = tmp_path / "votes.csv"
    write_votes_csv(votes, path)
    assert ingest_votes_csv(path) == sorted(votes)


def test_votes_csv_validation(tmp_path):
    path = tmp_path / "votes.csv"
    path.write_text("timestamp_ms,level_percent\n1000,33\n2000,150\n")
    with pytest.raises(AnalyticsError, match="line 3"):
        ingest_votes_csv(path)
    path.write_text("when,level\n1,2\n")
    with pytest.raises(AnalyticsError, match="timestamp_ms"):
        ingest_votes_csv(path)
