"""Threshold crossings and the points-proportional lottery."""

import random

import pytest

from lumenvote.rewards import (
    COMMUNAL_LUNCH,
    LOTTERY,
    PointsAccount,
    RewardConfig,
    RewardError,
    check_thresholds,
    run_lottery,
    win_odds,
)

CFG = RewardConfig(
    lottery_threshold_milli=10_000_000,
    communal_threshold_milli=50_000_000,
)


def test_single_lottery_crossing():
    assert check_thresholds(9_950_000, 10_050_000, CFG) == [LOTTERY]


def test_no_crossing():
    assert check_thresholds(0, 0, CFG) == []
    assert check_thresholds(10_050_000, 10_100_000, CFG) == []


def test_multiple_crossings_in_one_step():
    assert check_thresholds(9_000_000, 21_000_000, CFG) == [LOTTERY, LOTTERY]


def test_both_threshold_types_fire_independently():
    got = check_thresholds(49_000_000, 60_000_000, CFG)
    assert got.count(LOTTERY) == 2  # 50M and 60M
    assert got.count(COMMUNAL_LUNCH) == 1  # 50M


def test_thresholds_monotone_in_new_total():
    rng = random.Random(3)
    for _ in range(200):
        prev = rng.randrange(0, 100_000_000)
        a = prev + rng.randrange(0, 50_000_000)
        b = a + rng.randrange(0, 50_000_000)
        assert len(check_thresholds(prev, a, CFG)) <= len(check_thresholds(prev, b, CFG))


def test_decreasing_total_rejected():
    with pytest.raises(RewardError):
        check_thresholds(5, 4, CFG)


def test_lottery_single_account_always_wins():
    winners = run_lottery([PointsAccount("only", 123)], 1, seed=9)
    assert [w.user_id for w in winners] == ["only"]


def test_lottery_exhaustion_without_replacement():
    accounts = [PointsAccount("A", 1), PointsAccount("B", 1)]
    winners = run_lottery(accounts, 2, seed=1)
    assert sorted(w.user_id for w in winners) == ["A", "B"]


def test_lottery_never_picks_zero_balance():
    accounts = [PointsAccount("A", 0), PointsAccount("B", 5), PointsAccount("C", 0)]
    for seed in range(50):
        winners = run_lottery(accounts, 3, seed)
        assert [w.user_id for w in winners] == ["B"]


def test_lottery_all_zero_is_an_error():
    with pytest.raises(RewardError):
        run_lottery([PointsAccount("A", 0)], 1, seed=0)


def test_lottery_reproducible_for_fixed_seed():
    accounts = [PointsAccount(f"u{i}", (i + 1) * 100) for i in range(8)]
    first = [w.user_id for w in run_lottery(accounts, 3, seed=42)]
    for _ in range(5):
        again = [w.user_id for w in run_lottery(accounts, 3, seed=42)]
        assert again == first


def test_lottery_no_duplicate_winners():
    rng = random.Random(5)
    for trial in range(100):
        accounts = [
            PointsAccount(f"u{i}", rng.randrange(0, 1000)) for i in range(6)
        ]
        if not any(a.milli_points > 0 for a in accounts):
            continue
        winners = run_lottery(accounts, rng.randint(1, 8), seed=trial)
        ids = [w.user_id for w in winners]
        assert len(ids) == len(set(ids))
        assert all(w.milli_points > 0 for w in winners)


def test_lottery_odds_proportional_to_points():
    """300:100 balance split should win roughly 75:25."""
    accounts = [PointsAccount("A", 300), PointsAccount("B", 100)]
    trials = 100_000
    a_wins = sum(
        1 for seed in range(trials) if run_lottery(accounts, 1, seed)[0].user_id == "A"
    )
    assert abs(a_wins / trials - 0.75) < 0.01


def test_win_odds_table():
    odds = win_odds([PointsAccount("A", 300), PointsAccount("B", 100)])
    assert float(odds["A"]) == 0.75
    assert float(odds["B"]) == 0.25


def test_config_validation():
    with pytest.raises(RewardError):
        RewardConfig(lottery_threshold_milli=0)
    with pytest.raises(RewardError):
        RewardConfig(prizes_per_lottery=0)
    with pytest.raises(RewardError):
        PointsAccount("x", -1)
