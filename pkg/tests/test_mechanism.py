"""Mechanism correctness: worked examples, oracle agreement, and the
game-theoretic properties the payment rule exists to provide."""

import random

import pytest

from lumenvote.mechanism import (
    Ballot,
    MechanismConfig,
    MechanismError,
    Profile,
    TypeVector,
    ballot_to_type,
    choose_outcome,
    ir_holds,
    outside_option,
    payment_rate,
    payment_rates,
    social_welfare,
    utility,
)

CFG = MechanismConfig()

WORKED = Profile(
    user_ids=("u1", "u2"),
    types=(TypeVector((0, 20, 50)), TypeVector((40, 0, 10))),
)


def profile_of(*costs):
    return Profile(
        user_ids=tuple(f"u{i}" for i in range(len(costs))),
        types=tuple(TypeVector(tuple(c)) for c in costs),
    )


def random_profile(rng, cfg=CFG, n_max=6):
    n = rng.randint(1, n_max)
    return profile_of(
        *[
            [rng.randint(0, cfg.lambda_max) for _ in range(cfg.num_outcomes)]
            for _ in range(n)
        ]
    )


def bruteforce_choice(profile, cfg):
    """Independent welfare enumeration: maximize welfare, break ties by
    the lowest level_percent (not by index, unlike the implementation)."""
    best = None
    best_key = None
    for s in cfg.settings:
        w = -sum(t.costs[s.index] for t in profile.types)
        if cfg.virtual_cost is not None:
            w -= cfg.virtual_cost[s.index]
        key = (w, -s.level_percent)
        if best_key is None or key > best_key:
            best, best_key = s.index, key
    return best


# -- social_welfare ---------------------------------------------------------


def test_welfare_zero_types():
    p = profile_of([0, 0, 0], [0, 0, 0])
    assert all(social_welfare(x, p, CFG) == 0 for x in range(3))


def test_welfare_worked_example():
    assert [social_welfare(x, WORKED, CFG) for x in range(3)] == [-40, -20, -60]


def test_welfare_with_virtual_cost():
    cfg = MechanismConfig(virtual_cost=(5, 5, 5))
    assert social_welfare(1, WORKED, cfg) == -25


def test_welfare_bad_index():
    with pytest.raises(MechanismError):
        social_welfare(3, WORKED, CFG)


# -- choose_outcome ---------------------------------------------------------


def test_choose_worked_example():
    assert choose_outcome(WORKED, CFG) == 1


def test_choose_tie_breaks_dimmest():
    assert choose_outcome(profile_of([10, 10, 50]), CFG) == 0
    assert choose_outcome(profile_of([0, 0, 0]), CFG) == 0


def test_choose_empty_profile_rejected():
    with pytest.raises(MechanismError):
        choose_outcome(profile_of(), CFG)


def test_choose_agrees_with_bruteforce_oracle():
    rng = random.Random(101)
    for _ in range(2000):
        p = random_profile(rng)
        assert choose_outcome(p, CFG) == bruteforce_choice(p, CFG)


def test_choose_agrees_with_oracle_under_virtual_cost():
    rng = random.Random(102)
    for _ in range(2000):
        cfg = MechanismConfig(
            virtual_cost=tuple(rng.randint(0, 300) for _ in range(3))
        )
        p = random_profile(rng, cfg)
        assert choose_outcome(p, cfg) == bruteforce_choice(p, cfg)


def test_choose_welfare_is_maximal():
    rng = random.Random(103)
    for _ in range(500):
        p = random_profile(rng)
        f = choose_outcome(p, CFG)
        wf = social_welfare(f, p, CFG)
        assert all(wf >= social_welfare(x, p, CFG) for x in range(3))


# -- payment_rate -----------------------------------------------------------


def test_payment_worked_example():
    assert payment_rate(0, WORKED, CFG) == 200
    assert payment_rate(1, WORKED, CFG) == 180
    assert payment_rates(WORKED, CFG) == [200, 180]


def test_payment_single_user_is_lambda_max():
    for costs in ([0, 0, 0], [100, 100, 100], [30, 60, 90]):
        assert payment_rate(0, profile_of(costs), CFG) == 100


def test_payment_bad_index():
    with pytest.raises(MechanismError):
        payment_rate(2, WORKED, CFG)


def test_payment_bounds_without_virtual_cost():
    rng = random.Random(104)
    for _ in range(1000):
        p = random_profile(rng)
        n = len(p)
        for rate in payment_rates(p, CFG):
            assert CFG.lambda_max <= rate <= n * CFG.lambda_max


def test_payment_bounds_with_virtual_cost():
    rng = random.Random(105)
    for _ in range(500):
        virtual = tuple(rng.randint(0, 250) for _ in range(3))
        cfg = MechanismConfig(virtual_cost=virtual)
        p = random_profile(rng, cfg)
        n = len(p)
        for rate in payment_rates(p, cfg):
            assert cfg.lambda_max - max(virtual) <= rate <= n * cfg.lambda_max


# -- utility / outside option ----------------------------------------------


def test_utility_examples():
    t = TypeVector((40, 0, 10))
    assert utility(1, 180, t) == 180
    assert utility(2, 0, t) == -10
    assert outside_option(t, CFG) == -10  # nominal defaults to VeryBright


# -- ballot_to_type ---------------------------------------------------------


def test_ballot_mapping():
    assert ballot_to_type(Ballot(2, {0: 30, 1: 15}), CFG).costs == (30, 15, 0)
    assert ballot_to_type(Ballot(0, {1: 0, 2: 0}), CFG).costs == (0, 0, 0)
    # the one-click max-vote button
    assert ballot_to_type(Ballot(1, {0: 100, 2: 100}), CFG).costs == (100, 0, 100)


def test_ballot_rejects_out_of_range_pay():
    with pytest.raises(MechanismError):
        ballot_to_type(Ballot(1, {0: 101, 2: 0}), CFG)
    with pytest.raises(MechanismError):
        ballot_to_type(Ballot(1, {0: -1, 2: 0}), CFG)


def test_ballot_rejects_wrong_alternatives():
    with pytest.raises(MechanismError):
        ballot_to_type(Ballot(1, {0: 10}), CFG)  # missing alternative
    with pytest.raises(MechanismError):
        ballot_to_type(Ballot(1, {0: 10, 1: 5, 2: 3}), CFG)  # prices itself


# -- individual rationality ------------------------------------------------


def test_ir_always_holds_without_virtual_cost():
    rng = random.Random(106)
    for _ in range(1000):
        assert all(ir_holds(random_profile(rng), CFG))


def test_ir_equality_margin_all_zero_single_user():
    p = profile_of([0, 0, 0])
    f = choose_outcome(p, CFG)
    u = utility(f, payment_rate(0, p, CFG), p.types[0])
    assert ir_holds(p, CFG) == [True]
    assert u - outside_option(p.types[0], CFG) == 100


def test_ir_can_fail_with_virtual_cost():
    # Uniform operating cost above lambda_max makes every outcome
    # expensive enough that the pivot term no longer covers it.
    cfg = MechanismConfig(virtual_cost=(200, 200, 200))
    assert ir_holds(profile_of([0, 0, 0]), cfg) == [False]


# -- structural properties ---------------------------------------------------


def test_shift_invariance_of_outcome():
    rng = random.Random(107)
    for _ in range(500):
        p = random_profile(rng)
        i = rng.randrange(len(p))
        base = choose_outcome(p, CFG)
        shift = rng.randint(0, 100 - max(p.types[i].costs))
        shifted = Profile(
            p.user_ids,
            p.types[:i]
            + (TypeVector(tuple(c + shift for c in p.types[i].costs)),)
            + p.types[i + 1 :],
        )
        assert choose_outcome(shifted, CFG) == base


def test_determinism():
    rng = random.Random(108)
    for _ in range(200):
        p = random_profile(rng)
        assert choose_outcome(p, CFG) == choose_outcome(p, CFG)
        assert payment_rates(p, CFG) == payment_rates(p, CFG)


def test_incentive_compatibility_small_grid_exhaustive():
    """Every grid misreport by one user, scored through the plain
    mechanism entry points, never beats truth-telling."""
    from itertools import product

    rng = random.Random(109)
    grid = range(0, 101, 25)
    for _ in range(40):
        p = random_profile(rng, n_max=3)
        for i in range(len(p)):
            truth = p.types[i]
            u_true = utility(choose_outcome(p, CFG), payment_rate(i, p, CFG), truth)
            for report in product(grid, repeat=3):
                dev = Profile(
                    p.user_ids,
                    p.types[:i] + (TypeVector(report),) + p.types[i + 1 :],
                )
                u_dev = utility(
                    choose_outcome(dev, CFG), payment_rate(i, dev, CFG), truth
                )
                assert u_dev <= u_true


def test_config_validation():
    with pytest.raises(MechanismError):
        MechanismConfig(lambda_max=0)
    with pytest.raises(MechanismError):
        MechanismConfig(nominal_outcome=5)
    with pytest.raises(MechanismError):
        MechanismConfig(virtual_cost=(1, 2))
    with pytest.raises(MechanismError):
        MechanismConfig(tie_break="random")
