"""Core group-choice mechanism for a shared discrete resource.

Each occupant carries a private cost rate (points per hour) for every
light setting.  The mechanism picks the setting minimizing the summed
cost rate (equivalently, maximizing social welfare) and pays every
occupant a rate that makes truthful reporting their best move: each
user receives ``n * lambda_max`` minus the cost the chosen setting
imposes on everyone else.  The pivot term ``n * lambda_max`` makes the
scheme ex-post individually rational against the nominal outside
option.

Everything here is exact integer arithmetic over immutable values.  No
floats enter welfare or payment computation, so results are
bit-reproducible and safe to compare with ``==``.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class MechanismError(ValueError):
    """Invalid input to a mechanism operation (bad index, bad range)."""


@dataclass(frozen=True)
class OutcomeSetting:
    """One selectable light setting."""

    index: int
    label: str
    level_percent: int


#: The three deployed settings, dimmest first.  Order matters: the
#: tie-break rule prefers the lowest level_percent, i.e. the lowest index.
DEFAULT_SETTINGS = (
    OutcomeSetting(0, "Normal", 33),
    OutcomeSetting(1, "Bright", 67),
    OutcomeSetting(2, "VeryBright", 100),
)

LAMBDA_MAX_DEFAULT = 100


@dataclass(frozen=True)
class TypeVector:
    """Per-setting cost rates for one user, points per hour.

    ``costs[x]`` is what the user forgoes per hour while setting ``x``
    is implemented.  Entries live on ``[0, lambda_max]``.
    """

    costs: tuple[int, ...]

    def __post_init__(self):
        if not self.costs:
            raise MechanismError("type vector must not be empty")
        if any(not isinstance(c, int) or isinstance(c, bool) for c in self.costs):
            raise MechanismError("type vector entries must be integers")


@dataclass(frozen=True)
class Ballot:
    """A portal vote: preferred setting plus willingness-to-pay against
    each non-preferred alternative (integer points, 0..lambda_max)."""

    preferred: int
    pay_vs: dict[int, int]


@dataclass(frozen=True)
class MechanismConfig:
    """Static parameters of one mechanism instance.

    ``virtual_cost``, when present, acts as an extra non-human
    participant whose per-setting costs fold into welfare and into
    everyone's payment sum, but who is never paid and never counts
    toward ``n``.  ``nominal_outcome`` is the setting that would hold
    with no mechanism running (the type-dependent outside option);
    the brightest setting by default.
    """

    lambda_max: int = LAMBDA_MAX_DEFAULT
    settings: tuple[OutcomeSetting, ...] = DEFAULT_SETTINGS
    nominal_outcome: int = 2
    virtual_cost: tuple[int, ...] | None = None
    tie_break: str = "dimmest"

    def __post_init__(self):
        if self.lambda_max <= 0:
            raise MechanismError("lambda_max must be positive")
        levels = [s.level_percent for s in self.settings]
        if sorted(levels) != levels or len(set(levels)) != len(levels):
            raise MechanismError("settings must be ordered by strictly increasing level")
        labels = [s.label for s in self.settings]
        if len(set(labels)) != len(labels):
            raise MechanismError("setting labels must be unique")
        for i, s in enumerate(self.settings):
            if s.index != i:
                raise MechanismError(f"setting {s.label} has index {s.index}, expected {i}")
        if not 0 <= self.nominal_outcome < len(self.settings):
            raise MechanismError("nominal_outcome out of range")
        if self.virtual_cost is not None:
            if len(self.virtual_cost) != len(self.settings):
                raise MechanismError("virtual_cost length must match settings")
            if any(c < 0 for c in self.virtual_cost):
                raise MechanismError("virtual_cost entries must be non-negative")
        if self.tie_break != "dimmest":
            raise MechanismError(f"unknown tie_break rule {self.tie_break!r}")

    @property
    def num_outcomes(self) -> int:
        return len(self.settings)

    def validate_type(self, t: TypeVector) -> None:
        if len(t.costs) != self.num_outcomes:
            raise MechanismError(
                f"type vector has {len(t.costs)} entries, expected {self.num_outcomes}"
            )
        for c in t.costs:
            if not 0 <= c <= self.lambda_max:
                raise MechanismError(f"cost {c} outside [0, {self.lambda_max}]")


@dataclass(frozen=True)
class Profile:
    """Ordered reported types of the users currently in the mechanism."""

    user_ids: tuple[str, ...]
    types: tuple[TypeVector, ...] = field(default=())

    def __post_init__(self):
        if len(self.user_ids) != len(self.types):
            raise MechanismError("user_ids and types must align")
        if len(set(self.user_ids)) != len(self.user_ids):
            raise MechanismError("user ids must be distinct")

    def __len__(self) -> int:
        return len(self.user_ids)


def _check_outcome(x: int, cfg: MechanismConfig) -> None:
    if not 0 <= x < cfg.num_outcomes:
        raise MechanismError(f"outcome index {x} out of range [0, {cfg.num_outcomes})")


def total_cost(x: int, profile: Profile, cfg: MechanismConfig) -> int:
    """Summed cost rate of setting ``x`` across all users plus the
    virtual participant, points per hour."""
    _check_outcome(x, cfg)
    c = sum(t.costs[x] for t in profile.types)
    if cfg.virtual_cost is not None:
        c += cfg.virtual_cost[x]
    return c


def social_welfare(x: int, profile: Profile, cfg: MechanismConfig) -> int:
    """Negated total cost of setting ``x``; the mechanism maximizes this."""
    if len(profile) == 0:
        raise MechanismError("social welfare needs a nonempty profile")
    return -total_cost(x, profile, cfg)


def argmax_welfare(cost_totals: list[int] | tuple[int, ...]) -> int:
    """Index of the welfare-maximizing outcome given per-outcome summed
    costs, breaking ties toward the dimmest (lowest-index) setting.

    Settings are ordered by increasing brightness, so the first minimum
    of the cost totals is the dimmest member of the argmax set.  Shared
    by outcome selection and the deviation search so both use one
    tie-break code path.
    """
    best = 0
    for x in range(1, len(cost_totals)):
        if cost_totals[x] < cost_totals[best]:
            best = x
    return best


def choose_outcome(profile: Profile, cfg: MechanismConfig) -> int:
    """Welfare-maximizing setting for the reported profile."""
    if len(profile) == 0:
        raise MechanismError("cannot choose an outcome for an empty profile")
    for t in profile.types:
        cfg.validate_type(t)
    totals = [total_cost(x, profile, cfg) for x in range(cfg.num_outcomes)]
    return argmax_welfare(totals)


def payment_rate(i: int, profile: Profile, cfg: MechanismConfig) -> int:
    """Points-per-hour paid to user ``i`` under the chosen outcome.

    ``n * lambda_max`` minus the cost the chosen setting imposes on all
    other participants (virtual participant included in the sum, never
    in ``n``).  Without a virtual participant the result lies in
    ``[lambda_max, n * lambda_max]``.
    """
    n = len(profile)
    if not 0 <= i < n:
        raise MechanismError(f"user index {i} out of range [0, {n})")
    f = choose_outcome(profile, cfg)
    others = total_cost(f, profile, cfg) - profile.types[i].costs[f]
    return n * cfg.lambda_max - others


def payment_rates(profile: Profile, cfg: MechanismConfig) -> list[int]:
    """All users' payment rates at the chosen outcome (one welfare pass)."""
    n = len(profile)
    if n == 0:
        return []
    for t in profile.types:
        cfg.validate_type(t)
    totals = [total_cost(x, profile, cfg) for x in range(cfg.num_outcomes)]
    f = argmax_welfare(totals)
    return [n * cfg.lambda_max - (totals[f] - t.costs[f]) for t in profile.types]


def utility(x: int, p: int, t: TypeVector) -> int:
    """Quasilinear utility: payment rate minus own cost rate at ``x``."""
    if not 0 <= x < len(t.costs):
        raise MechanismError(f"outcome index {x} out of range")
    return p - t.costs[x]


def outside_option(t: TypeVector, cfg: MechanismConfig) -> int:
    """Utility of the nominal setting with no payment: what the user
    would get if the mechanism did not exist."""
    return utility(cfg.nominal_outcome, 0, t)


def ballot_to_type(b: Ballot, cfg: MechanismConfig) -> TypeVector:
    """Translate a portal ballot into a cost vector.

    The preferred setting costs 0; each alternative costs the declared
    willingness-to-pay.  The portal only elicits pairwise differences,
    and outcome choice is invariant to shifting one user's vector by a
    constant, so anchoring the preferred setting at zero is lossless.
    """
    m = cfg.num_outcomes
    if not 0 <= b.preferred < m:
        raise MechanismError(f"preferred setting {b.preferred} out of range")
    expected = set(range(m)) - {b.preferred}
    if set(b.pay_vs) != expected:
        raise MechanismError(
            f"ballot must price exactly the alternatives {sorted(expected)}, got {sorted(b.pay_vs)}"
        )
    costs = [0] * m
    for alt, pay in b.pay_vs.items():
        if not isinstance(pay, int) or isinstance(pay, bool) or not 0 <= pay <= cfg.lambda_max:
            raise MechanismError(f"pay value {pay!r} outside [0, {cfg.lambda_max}]")
        costs[alt] = pay
    return TypeVector(tuple(costs))


def ir_holds(profile: Profile, cfg: MechanismConfig) -> list[bool]:
    """Per-user check that mechanism utility weakly beats the outside
    option, treating the profile as truthful.

    Always all-true without a virtual participant; with one, the pivot
    term no longer dominates the payment sum, so this is a diagnostic
    rather than a guarantee.
    """
    f = choose_outcome(profile, cfg)
    rates = payment_rates(profile, cfg)
    return [
        utility(f, rates[i], t) >= outside_option(t, cfg)
        for i, t in enumerate(profile.types)
    ]
