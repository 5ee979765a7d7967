"""Cost-aware central-to-edge VNF migration simulator.

Simulates an edge cloud that periodically decides, per central-cloud VNF,
whether to synchronize a local redundant instance (paying a migration cost)
or to skip and risk outage loss. Decisions compare the migration cost
against an estimated opportunity cost of outage derived from user mobility
and VNF availability context.
"""

__version__ = "0.1.0"

from edgemig.histogram import HistogramDensity
from edgemig.world import (
    GeoRegion,
    MobilityClass,
    ScenarioConfig,
    SimClock,
    UeState,
    VnfSpec,
    spawn_population,
    validate_config,
)
from edgemig.availability import AvailabilityChain, predict_outage_rate, step_chain
from edgemig.estimator import (
    OpportunityCost,
    SyncDecision,
    decide_sync,
    expected_outage_time,
    opportunity_cost_edge,
    opportunity_cost_ue,
)
from edgemig.engine import Policy, run_scenario

__all__ = [
    "AvailabilityChain",
    "GeoRegion",
    "HistogramDensity",
    "MobilityClass",
    "OpportunityCost",
    "Policy",
    "ScenarioConfig",
    "SimClock",
    "SyncDecision",
    "UeState",
    "VnfSpec",
    "decide_sync",
    "expected_outage_time",
    "opportunity_cost_edge",
    "opportunity_cost_ue",
    "predict_outage_rate",
    "run_scenario",
    "spawn_population",
    "step_chain",
    "validate_config",
]
