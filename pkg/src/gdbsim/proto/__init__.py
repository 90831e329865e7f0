"""Protocol state machines driving the broadcast channel."""

from .base import (
    AuthFailure,
    CommitMismatch,
    DbEstimate,
    NoActiveVerifier,
    ProtocolStall,
    ResponseMismatch,
    RunResult,
    response_bits,
)
from .runner import run_scenario

__all__ = [
    "AuthFailure",
    "CommitMismatch",
    "DbEstimate",
    "NoActiveVerifier",
    "ProtocolStall",
    "ResponseMismatch",
    "RunResult",
    "response_bits",
    "run_scenario",
]
