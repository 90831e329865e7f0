"""Deterministic simulator and analysis toolkit for group distance bounding.

Scenarios are closed JSON documents (placement, roles, adversary
policies, protocol, seed); running one replays the same broadcasts,
estimates, and detection verdicts every time.
"""

from .core import (
    EPS_DIST,
    EPS_TIME,
    SPEED_OF_LIGHT,
    ExperimentParams,
    GdbSimError,
    NodeSpec,
    Protocol,
    ProtocolConfig,
    Role,
    Scenario,
    ScenarioFormatError,
    ScenarioInvalid,
    active_verifier_count,
    distance,
    ensure_valid,
    load_scenario,
    scenario_from_json,
    scenario_to_json,
    validate_scenario,
)
from .proto import DbEstimate, RunResult, run_scenario

__version__ = "0.1.0"

__all__ = [
    "EPS_DIST",
    "EPS_TIME",
    "SPEED_OF_LIGHT",
    "DbEstimate",
    "ExperimentParams",
    "GdbSimError",
    "NodeSpec",
    "Protocol",
    "ProtocolConfig",
    "Role",
    "RunResult",
    "Scenario",
    "ScenarioFormatError",
    "ScenarioInvalid",
    "active_verifier_count",
    "distance",
    "ensure_valid",
    "load_scenario",
    "run_scenario",
    "scenario_from_json",
    "scenario_to_json",
    "validate_scenario",
    "__version__",
]
