"""Shared protocol types and the per-run bootstrap."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..core import (
    GdbSimError,
    LengthMismatch,
    NodeId,
    Scenario,
    ensure_valid,
)
from ..crypto import KeyRegistry
from ..simkit import BroadcastChannel, Emission, Trace
from ..threat import AdversaryPolicy, DetectionReport, Honest


class ProtocolStall(GdbSimError):
    """A state machine is waiting on a message that can never arrive."""


class ResponseMismatch(GdbSimError):
    """A rapid-phase response does not match challenge XOR committed nonce."""

    def __init__(self, round_index: int, message: str = "") -> None:
        self.round_index = round_index
        super().__init__(message or f"response mismatch in round {round_index}")


class CommitMismatch(GdbSimError):
    """A decommitment does not open the earlier commitment."""


class AuthFailure(GdbSimError):
    """A required transcript signature is missing or does not verify."""


class NoActiveVerifier(GdbSimError):
    """The active-verifier fraction selects nobody."""


def response_bits(challenge: int, responder_nonce: int, bit_len: int) -> int:
    """Rapid-phase reply value: challenge XOR nonce over bit_len bits."""
    top = 1 << bit_len
    if not (0 <= challenge < top and 0 <= responder_nonce < top):
        raise LengthMismatch(
            f"values {challenge}, {responder_nonce} do not fit {bit_len} bits"
        )
    return challenge ^ responder_nonce


METHOD_ACTIVE = "active"
METHOD_PASSIVE = "passive"
METHOD_MULTIPARTY = "multiparty"


@dataclass(frozen=True)
class DbEstimate:
    """One directional distance bound produced by a run.

    surplus marks bounds a composite protocol produced although nobody
    asked for them (intra-group pairs in a joint-group run).
    """

    measurer: NodeId
    target: NodeId
    bound_m: float
    method: str
    rounds_used: int
    verified_auth: bool
    surplus: bool = False


@dataclass
class RunResult:
    """Everything a protocol run leaves behind."""

    scenario: Scenario
    trace: Trace
    estimates: List[DbEstimate] = field(default_factory=list)
    detection: Optional[DetectionReport] = None
    ring_order: Optional[Tuple[NodeId, ...]] = None
    ring_solutions: Optional[Dict[NodeId, Dict[Tuple[NodeId, NodeId], float]]] = None
    rejections: List[str] = field(default_factory=list)

    def bounds_matrix(self) -> Dict[NodeId, Dict[NodeId, float]]:
        out: Dict[NodeId, Dict[NodeId, float]] = {}
        for est in self.estimates:
            out.setdefault(est.measurer, {})[est.target] = est.bound_m
        return out

    def estimate_for(self, measurer: NodeId, target: NodeId) -> DbEstimate:
        for est in self.estimates:
            if est.measurer == measurer and est.target == target:
                return est
        raise KeyError(f"no estimate {measurer} -> {target}")


@dataclass
class RunContext:
    """Channel, RNG, and registry shared by one protocol execution."""

    scenario: Scenario
    channel: BroadcastChannel
    rng: random.Random
    registry: KeyRegistry
    slot_s: float
    send_counters: Dict[NodeId, int] = field(default_factory=dict)

    def next_send_index(self, node: NodeId) -> int:
        """0-based count of this node's rapid-phase transmissions so far."""
        i = self.send_counters.get(node, 0)
        self.send_counters[node] = i + 1
        return i

    def policy(self, node: NodeId) -> AdversaryPolicy:
        return self.scenario.node(node).policy

    def is_honest(self, node: NodeId) -> bool:
        return isinstance(self.policy(node), Honest)

    @property
    def alpha(self) -> float:
        return self.scenario.config.alpha

    @property
    def c(self) -> float:
        return self.scenario.config.c

    def draw_bits(self, bit_len: int) -> int:
        return self.rng.getrandbits(bit_len) if bit_len else 0


def start_run(scenario: Scenario, zero_offsets: bool = False) -> RunContext:
    """Validate the scenario and set up channel, clocks, keys.

    All randomness (clock offsets first, then protocol nonces) comes
    from one generator seeded with the scenario seed, so a (scenario,
    seed) pair fixes the whole run.
    """
    ensure_valid(scenario)
    rng = random.Random(scenario.rng_seed)
    positions = scenario.positions()
    node_ids = sorted(positions)
    if zero_offsets:
        offsets = {nid: 0.0 for nid in node_ids}
    else:
        offsets = {nid: rng.random() for nid in node_ids}
    channel = BroadcastChannel(positions, scenario.config.c, offsets)
    registry = KeyRegistry()
    for nid in node_ids:
        if scenario.node(nid).has_cert:
            registry.register(nid, rng)
    max_d = 0.0
    for i, a in enumerate(node_ids):
        for b in node_ids[i + 1:]:
            max_d = max(max_d, channel.dist(a, b))
    slot = 2.0 * max_d / scenario.config.c + scenario.config.alpha + 1e-6
    return RunContext(
        scenario=scenario, channel=channel, rng=rng, registry=registry, slot_s=slot
    )


def encode_value(kind: str, round_index: int, value: int) -> bytes:
    """Canonical payload bytes for a rapid-phase message."""
    return f"{kind}|{round_index}|{value}".encode("ascii")


def transcript_digest(emissions: List[Emission]) -> str:
    """Digest of the ordered rapid-phase payloads, as any receiver saw them."""
    h = hashlib.sha256()
    for em in emissions:
        h.update(f"{em.seq}|{em.sender}|".encode("ascii"))
        h.update(em.payload)
        h.update(b"\x00")
    return h.hexdigest()
