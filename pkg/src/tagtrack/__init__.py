"""Joint particle-filter tracking and void-constrained trajectory planning for an
aerial observer localizing radio tags from received-signal-strength measurements."""

from .harness import (
    ConfigError,
    McSummary,
    MissionRecord,
    ScenarioConfig,
    VoidAuditError,
    bench_planners,
    compute_rms,
    run_mission,
    run_montecarlo,
)
from .planner import CandidateAction, PlannerKind, VoidConfig
from .rf import Measurement, PropagationConfig
from .tracker import ObjectBelief, TrackerConfig
from .world import Area, ObjectState, TargetDynamics, UavKinematics, UavState

__version__ = "0.1.0"

__all__ = [
    "Area",
    "CandidateAction",
    "ConfigError",
    "McSummary",
    "Measurement",
    "MissionRecord",
    "ObjectBelief",
    "ObjectState",
    "PlannerKind",
    "PropagationConfig",
    "ScenarioConfig",
    "TargetDynamics",
    "TrackerConfig",
    "UavKinematics",
    "UavState",
    "VoidAuditError",
    "VoidConfig",
    "bench_planners",
    "compute_rms",
    "run_mission",
    "run_montecarlo",
    "__version__",
]
