"""Dispatch a scenario to the driver its protocol field names."""

from __future__ import annotations

from ..core import Protocol, Scenario
from .base import RunResult
from .group import run_mpnv, run_ntom
from .onetomany import run_one_to_many
from .pairwise import run_mutual_interleaved, run_one_way_db
from .ring import run_multiparty_gdb

_DRIVERS = {
    Protocol.ONE_WAY: run_one_way_db,
    Protocol.MUTUAL_INTERLEAVED: run_mutual_interleaved,
    Protocol.ONE_TO_MANY: run_one_to_many,
    Protocol.MULTI_PARTY_RING: run_multiparty_gdb,
    Protocol.MPNV: run_mpnv,
    Protocol.NTOM_PASSIVE: run_ntom,
    Protocol.NTOM_MULTIPARTY: run_ntom,
    Protocol.NTOM_ONETOMANY: run_ntom,
}


def run_scenario(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Validate and execute one scenario end to end.

    zero_offsets pins every local clock to the true clock, which keeps
    hand-computed expectations readable in tests; estimates are offset
    invariant either way.
    """
    return _DRIVERS[scenario.protocol](scenario, zero_offsets)
