"""Points accounting, the gift-card lottery, and communal thresholds.

Every crossing of the lottery threshold by the communal total triggers
a lottery; every crossing of the communal threshold triggers a catered
lunch.  Lottery odds are proportional to each account's current
milli-point balance, draws are without replacement within one lottery,
and winners keep their points afterwards (the odds statement refers to
live balances and nothing ever deducts, so luck compounds with
participation).
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate

LOTTERY = "lottery"
COMMUNAL_LUNCH = "communal_lunch"


class RewardError(ValueError):
    """Invalid lottery or threshold input."""


@dataclass
class PointsAccount:
    user_id: str
    milli_points: int = 0

    def __post_init__(self):
        if self.milli_points < 0:
            raise RewardError(f"negative balance for {self.user_id}")


@dataclass(frozen=True)
class RewardConfig:
    lottery_threshold_milli: int = 10_000_000
    communal_threshold_milli: int = 50_000_000
    prizes_per_lottery: int = 1
    survey_bonus_milli: int = 500_000
    rng_seed: int = 0

    def __post_init__(self):
        if self.lottery_threshold_milli <= 0 or self.communal_threshold_milli <= 0:
            raise RewardError("thresholds must be positive")
        if self.prizes_per_lottery < 1:
            raise RewardError("prizes_per_lottery must be >= 1")


def check_thresholds(prev_total: int, new_total: int, cfg: RewardConfig) -> list[str]:
    """Events triggered by the communal total moving prev -> new.

    One event per threshold multiple crossed, independently per
    threshold type; enlarging ``new_total`` never removes events.
    """
    if new_total < prev_total:
        raise RewardError("communal total must not decrease")
    out: list[str] = []
    out += [LOTTERY] * (
        new_total // cfg.lottery_threshold_milli - prev_total // cfg.lottery_threshold_milli
    )
    out += [COMMUNAL_LUNCH] * (
        new_total // cfg.communal_threshold_milli
        - prev_total // cfg.communal_threshold_milli
    )
    return out


def run_lottery(
    accounts: list[PointsAccount], k: int, seed: int
) -> list[PointsAccount]:
    """Draw up to ``k`` distinct winners, odds proportional to balance.

    Sequential weighted draws without replacement; a user wins at most
    once per lottery and draws stop early if positive-balance accounts
    run out.  Deterministic for a given seed.  Balances are not
    deducted.
    """
    if k < 1:
        raise RewardError("lottery needs at least one prize")
    pool = [a for a in accounts if a.milli_points > 0]
    if not pool:
        raise RewardError("no account holds positive points; nothing to draw")
    rng = random.Random(seed)
    winners: list[PointsAccount] = []
    for _ in range(min(k, len(pool))):
        cum = list(accumulate(a.milli_points for a in pool))
        pick = bisect_right(cum, rng.randrange(cum[-1]))
        winners.append(pool.pop(pick))
    return winners


def win_odds(accounts: list[PointsAccount]) -> dict[str, Fraction]:
    """Exact single-draw odds per user, for the CLI odds table."""
    total = sum(a.milli_points for a in accounts)
    if total <= 0:
        raise RewardError("no account holds positive points")
    return {a.user_id: Fraction(a.milli_points, total) for a in accounts}


def apply_survey_bonus(account: PointsAccount, cfg: RewardConfig) -> PointsAccount:
    """Flat credit for completing the repeatable experience survey."""
    return PointsAccount(account.user_id, account.milli_points + cfg.survey_bonus_milli)
