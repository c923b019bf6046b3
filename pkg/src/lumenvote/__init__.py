"""Group control of shared office lighting.

Occupants vote for a light setting through a web portal; a
payment-augmented social-choice rule picks the setting that minimizes
total declared cost and pays everyone points at a rate that makes
honest voting the best strategy and participation always worthwhile.
Points feed gift-card lotteries and communal rewards.  The package
ships the mechanism itself, an event-sourced controller, the HTTP
service, a simulation harness, and trace analytics.
"""

from .engine import (
    ActuatorCommand,
    EngineError,
    EngineState,
    ReplayError,
    Segment,
    apply_event,
    current_allocation,
    replay,
    replay_full,
    state_digest,
)
from .events import EventLogWriter, SessionEvent, load_session_events
from .geofence import GeoFence
from .mechanism import (
    Ballot,
    MechanismConfig,
    MechanismError,
    OutcomeSetting,
    Profile,
    TypeVector,
    ballot_to_type,
    choose_outcome,
    ir_holds,
    payment_rate,
    payment_rates,
    social_welfare,
    utility,
)
from .rewards import PointsAccount, RewardConfig, check_thresholds, run_lottery

__version__ = "0.1.0"
