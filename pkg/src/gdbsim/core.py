"""Scenario model, units, and validation for distance-bounding simulations.

All geometry is planar.  Distances are meters, times are seconds on a
shared true clock; each node additionally owns a local clock offset.
Propagation is line-of-sight at the configured signal speed, and every
transmission is a broadcast heard by every other node in the scenario.

A Scenario is a closed description of one run: node placement, roles,
per-node adversary policies, protocol selection, protocol parameters,
and the RNG seed.  Serialization is strict JSON; unknown keys anywhere
in the document are rejected so that typos cannot silently change an
experiment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

from . import threat
from .threat import AdversaryPolicy, Honest, PolicyError

# Signal propagation speed, meters per second.  Vacuum light speed, exact.
SPEED_OF_LIGHT = 299792458.0

# Absolute comparison tolerances for ideal-channel runs.
EPS_TIME = 1e-12   # seconds
EPS_DIST = 1e-6    # meters

NodeId = int


class GdbSimError(Exception):
    """Base class for all package errors."""


class ScenarioFormatError(GdbSimError, ValueError):
    """The scenario document is structurally malformed."""


class ScenarioInvalid(GdbSimError, ValueError):
    """The scenario parsed but failed semantic validation."""

    def __init__(self, issues: List["ValidationIssue"]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


class LengthMismatch(GdbSimError, ValueError):
    """Two sequences that must have equal length do not."""


def distance(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    """Euclidean distance between two planar points, meters."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero toward +inf."""
    return int(math.floor(x + 0.5))


def active_verifier_count(d_a: float, n_verifiers: int) -> int:
    """Number of verifiers selected for active rounds.

    Nearest-integer rounding of the fraction, with a floor of one so a
    positive fraction always yields at least one active verifier.
    """
    if d_a <= 0.0:
        return 0
    return max(1, round_half_up(d_a * n_verifiers))


class Role(str, Enum):
    PROVER = "Prover"
    ACTIVE_VERIFIER = "ActiveVerifier"
    PASSIVE_VERIFIER = "PassiveVerifier"
    PEER = "Peer"


class Protocol(str, Enum):
    ONE_WAY = "OneWayDB"
    MUTUAL_INTERLEAVED = "MutualInterleaved"
    ONE_TO_MANY = "OneToMany"
    MULTI_PARTY_RING = "MultiPartyRing"
    MPNV = "MPNV"
    NTOM_PASSIVE = "NtoM-passive"
    NTOM_MULTIPARTY = "NtoM-multiparty"
    NTOM_ONETOMANY = "NtoM-onetomany"


@dataclass(frozen=True)
class ProtocolConfig:
    """Knobs shared by every protocol.

    n: rapid rounds per measuring relationship.
    bit_len: challenge/response width in bits per rapid message.
    alpha: processing delay a responder waits before answering, seconds.
    c: signal speed, meters per second.
    pre_post_msgs: setup plus teardown messages per committing party.
    auth_enabled: sign and verify transcripts with registered keys.
    """

    n: int
    bit_len: int = 1
    alpha: float = 0.0
    c: float = SPEED_OF_LIGHT
    pre_post_msgs: int = 2
    auth_enabled: bool = False


@dataclass(frozen=True)
class ExperimentParams:
    """Group-protocol parameters; unused fields stay None.

    n_a / d_a parameterize one-way group runs: each selected active
    verifier runs n_a active rounds, and d_a is the selected fraction.
    n_p is the per-verifier passive round count, implied as n - n_a.
    The *_1 / *_2 variants apply per group in two-group runs.
    N and M are group sizes (verifiers/provers, or group 1/group 2).
    """

    n_a: Optional[int] = None
    n_p: Optional[int] = None
    d_a: Optional[float] = None
    d_1: Optional[float] = None
    d_2: Optional[float] = None
    n_a1: Optional[int] = None
    n_a2: Optional[int] = None
    n_p1: Optional[int] = None
    n_p2: Optional[int] = None
    N: Optional[int] = None
    M: Optional[int] = None


@dataclass(frozen=True)
class NodeSpec:
    id: NodeId
    pos: Tuple[float, float]
    role: Role
    policy: AdversaryPolicy = field(default_factory=Honest)
    has_cert: bool = True


@dataclass(frozen=True)
class Scenario:
    nodes: Tuple[NodeSpec, ...]
    protocol: Protocol
    config: ProtocolConfig
    rng_seed: int
    experiment: Optional[ExperimentParams] = None

    def node(self, node_id: NodeId) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(f"no node with id {node_id}")

    def positions(self) -> Dict[NodeId, Tuple[float, float]]:
        return {n.id: n.pos for n in self.nodes}

    def with_role(self, *roles: Role) -> List[NodeSpec]:
        return [n for n in self.nodes if n.role in roles]

    def provers(self) -> List[NodeSpec]:
        return self.with_role(Role.PROVER)

    def verifiers(self) -> List[NodeSpec]:
        return self.with_role(Role.ACTIVE_VERIFIER, Role.PASSIVE_VERIFIER)

    def peers(self) -> List[NodeSpec]:
        return self.with_role(Role.PEER)


@dataclass(frozen=True)
class ValidationIssue:
    code: str      # DuplicateNodeId | RoleMismatch | ParamOutOfRange | PolicyInapplicable
    fld: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}({self.fld}): {self.message}"


# ---------------------------------------------------------------------------
# strict JSON loading


def _pop(data: dict, key: str, path: str, required: bool = True, default=None):
    if key in data:
        return data.pop(key)
    if required:
        raise ScenarioFormatError(f"missing key {path}.{key}")
    return default


def _reject_extras(data: dict, path: str) -> None:
    if data:
        raise ScenarioFormatError(f"unknown keys at {path}: {sorted(data)}")


def _parse_node(obj, idx: int) -> NodeSpec:
    path = f"nodes[{idx}]"
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{path} must be an object")
    data = dict(obj)
    node_id = _pop(data, "id", path)
    pos = _pop(data, "pos", path)
    role = _pop(data, "role", path)
    policy_obj = _pop(data, "policy", path, required=False)
    has_cert = _pop(data, "has_cert", path, required=False, default=True)
    _reject_extras(data, path)
    if not isinstance(node_id, int) or isinstance(node_id, bool):
        raise ScenarioFormatError(f"{path}.id must be an integer")
    if not (isinstance(pos, list) and len(pos) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pos)):
        raise ScenarioFormatError(f"{path}.pos must be [x, y]")
    try:
        role_val = Role(role)
    except ValueError:
        raise ScenarioFormatError(
            f"{path}.role must be one of {[r.value for r in Role]}, got {role!r}"
        ) from None
    if policy_obj is None:
        policy: AdversaryPolicy = Honest()
    else:
        try:
            policy = threat.policy_from_json(policy_obj)
        except PolicyError as exc:
            raise ScenarioFormatError(f"{path}.policy: {exc}") from exc
    if not isinstance(has_cert, bool):
        raise ScenarioFormatError(f"{path}.has_cert must be a boolean")
    return NodeSpec(
        id=node_id,
        pos=(float(pos[0]), float(pos[1])),
        role=role_val,
        policy=policy,
        has_cert=has_cert,
    )


def _parse_config(obj) -> ProtocolConfig:
    path = "config"
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{path} must be an object")
    data = dict(obj)
    n = _pop(data, "n", path)
    bit_len = _pop(data, "bit_len", path, required=False, default=1)
    alpha = _pop(data, "alpha", path, required=False, default=0.0)
    c = _pop(data, "c", path, required=False, default=SPEED_OF_LIGHT)
    ppm = _pop(data, "pre_post_msgs", path, required=False, default=2)
    auth = _pop(data, "auth_enabled", path, required=False, default=False)
    _reject_extras(data, path)
    for name, v in (("n", n), ("bit_len", bit_len), ("pre_post_msgs", ppm)):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ScenarioFormatError(f"{path}.{name} must be an integer")
    for name, v in (("alpha", alpha), ("c", c)):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ScenarioFormatError(f"{path}.{name} must be a number")
    if not isinstance(auth, bool):
        raise ScenarioFormatError(f"{path}.auth_enabled must be a boolean")
    return ProtocolConfig(
        n=n, bit_len=bit_len, alpha=float(alpha), c=float(c),
        pre_post_msgs=ppm, auth_enabled=auth,
    )


_EXPERIMENT_INT_KEYS = ("n_a", "n_p", "n_a1", "n_a2", "n_p1", "n_p2", "N", "M")
_EXPERIMENT_FLOAT_KEYS = ("d_a", "d_1", "d_2")


def _parse_experiment(obj) -> ExperimentParams:
    path = "experiment"
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{path} must be an object")
    data = dict(obj)
    kwargs = {}
    for key in _EXPERIMENT_INT_KEYS:
        v = _pop(data, key, path, required=False)
        if v is not None and (not isinstance(v, int) or isinstance(v, bool)):
            raise ScenarioFormatError(f"{path}.{key} must be an integer")
        kwargs[key] = v
    for key in _EXPERIMENT_FLOAT_KEYS:
        v = _pop(data, key, path, required=False)
        if v is not None:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ScenarioFormatError(f"{path}.{key} must be a number")
            v = float(v)
        kwargs[key] = v
    _reject_extras(data, path)
    return ExperimentParams(**kwargs)


def scenario_from_json(doc) -> Scenario:
    """Parse a scenario document (dict or JSON string).  Strict keys."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario must be a JSON object")
    data = dict(doc)
    nodes_obj = _pop(data, "nodes", "scenario")
    protocol_obj = _pop(data, "protocol", "scenario")
    config_obj = _pop(data, "config", "scenario")
    experiment_obj = _pop(data, "experiment", "scenario", required=False)
    rng_seed = _pop(data, "rng_seed", "scenario")
    _reject_extras(data, "scenario")
    if not isinstance(nodes_obj, list) or not nodes_obj:
        raise ScenarioFormatError("scenario.nodes must be a non-empty array")
    nodes = tuple(_parse_node(o, i) for i, o in enumerate(nodes_obj))
    try:
        protocol = Protocol(protocol_obj)
    except ValueError:
        raise ScenarioFormatError(
            f"scenario.protocol must be one of {[p.value for p in Protocol]}, "
            f"got {protocol_obj!r}"
        ) from None
    config = _parse_config(config_obj)
    experiment = _parse_experiment(experiment_obj) if experiment_obj is not None else None
    if not isinstance(rng_seed, int) or isinstance(rng_seed, bool):
        raise ScenarioFormatError("scenario.rng_seed must be an integer")
    return Scenario(
        nodes=nodes, protocol=protocol, config=config,
        rng_seed=rng_seed, experiment=experiment,
    )


def scenario_to_json(s: Scenario) -> dict:
    doc: dict = {
        "nodes": [
            {
                "id": n.id,
                "pos": [n.pos[0], n.pos[1]],
                "role": n.role.value,
                "policy": threat.policy_to_json(n.policy),
                "has_cert": n.has_cert,
            }
            for n in s.nodes
        ],
        "protocol": s.protocol.value,
        "config": {
            "n": s.config.n,
            "bit_len": s.config.bit_len,
            "alpha": s.config.alpha,
            "c": s.config.c,
            "pre_post_msgs": s.config.pre_post_msgs,
            "auth_enabled": s.config.auth_enabled,
        },
        "rng_seed": s.rng_seed,
    }
    if s.experiment is not None:
        exp = {}
        for key in _EXPERIMENT_INT_KEYS + _EXPERIMENT_FLOAT_KEYS:
            v = getattr(s.experiment, key)
            if v is not None:
                exp[key] = v
        doc["experiment"] = exp
    return doc


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_json(fh.read())


# ---------------------------------------------------------------------------
# semantic validation


def _policy_issues(s: Scenario) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    ids = {n.id for n in s.nodes}
    for n in s.nodes:
        p = n.policy
        fld = f"nodes[{n.id}].policy"
        if isinstance(p, threat.GuessAhead):
            if n.role != Role.PROVER:
                issues.append(ValidationIssue(
                    "PolicyInapplicable", fld, "GuessAhead applies to provers only"))
            elif p.p_rounds > s.config.n:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", fld, "GuessAhead p_rounds exceeds round count"))
        elif isinstance(p, threat.SelectiveDelay):
            if n.role not in (Role.PROVER, Role.PEER):
                issues.append(ValidationIssue(
                    "PolicyInapplicable", fld,
                    "SelectiveDelay applies to responding nodes (provers or peers)"))
            if p.target is not None and p.target not in ids:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", fld, f"SelectiveDelay target {p.target} not in scenario"))
        elif isinstance(p, threat.Relay):
            if n.role != Role.PROVER:
                issues.append(ValidationIssue(
                    "PolicyInapplicable", fld, "Relay applies to a node posing as prover"))
            if p.victim not in ids:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", fld, f"Relay victim {p.victim} not in scenario"))
            elif p.victim == n.id:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", fld, "Relay victim must be another node"))
        elif isinstance(p, threat.FakeLocationReport):
            if n.role not in (Role.ACTIVE_VERIFIER, Role.PASSIVE_VERIFIER):
                issues.append(ValidationIssue(
                    "PolicyInapplicable", fld,
                    "FakeLocationReport applies to verifiers whose position feeds passive observers"))
        elif isinstance(p, threat.EarlyChallenge):
            if n.role not in (Role.ACTIVE_VERIFIER, Role.PASSIVE_VERIFIER):
                issues.append(ValidationIssue(
                    "PolicyInapplicable", fld, "EarlyChallenge applies to verifiers"))
        elif isinstance(p, threat.NodeInsertion):
            if n.has_cert:
                issues.append(ValidationIssue(
                    "PolicyInapplicable", fld, "NodeInsertion requires has_cert false"))
    return issues


def _role_counts(s: Scenario):
    provers = s.provers()
    actives = s.with_role(Role.ACTIVE_VERIFIER)
    passives = s.with_role(Role.PASSIVE_VERIFIER)
    peers = s.peers()
    return provers, actives, passives, peers


def validate_scenario(s: Scenario) -> List[ValidationIssue]:
    """Return all semantic problems; an empty list means the scenario runs."""
    issues: List[ValidationIssue] = []

    seen: Dict[NodeId, int] = {}
    for n in s.nodes:
        seen[n.id] = seen.get(n.id, 0) + 1
    for node_id, count in seen.items():
        if count > 1:
            issues.append(ValidationIssue(
                "DuplicateNodeId", "nodes", f"node id {node_id} appears {count} times"))

    for i, a in enumerate(s.nodes):
        for b in s.nodes[i + 1 :]:
            if distance(a.pos, b.pos) == 0.0 and a.id != b.id:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", "nodes",
                    f"nodes {a.id} and {b.id} share position {a.pos}"))

    cfg = s.config
    if cfg.n < 1:
        issues.append(ValidationIssue("ParamOutOfRange", "config.n", "n must be >= 1"))
    if cfg.bit_len < 1:
        issues.append(ValidationIssue("ParamOutOfRange", "config.bit_len", "bit_len must be >= 1"))
    if cfg.alpha < 0.0:
        issues.append(ValidationIssue("ParamOutOfRange", "config.alpha", "alpha must be >= 0"))
    if cfg.c <= 0.0:
        issues.append(ValidationIssue("ParamOutOfRange", "config.c", "c must be > 0"))
    if cfg.pre_post_msgs < 0:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "config.pre_post_msgs", "pre_post_msgs must be >= 0"))

    provers, actives, passives, peers = _role_counts(s)
    proto = s.protocol

    if proto == Protocol.ONE_WAY:
        if peers:
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "one-way scenarios contain no Peer"))
        if len(actives) != 1:
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes",
                f"OneWayDB needs exactly 1 ActiveVerifier, got {len(actives)}"))
        relays = [n for n in provers if isinstance(n.policy, threat.Relay)]
        if len(provers) == 1 and not relays:
            pass
        elif len(provers) == 2 and len(relays) == 1 and relays[0].policy.victim in {
            n.id for n in provers
        } and relays[0].policy.victim != relays[0].id:
            pass
        else:
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes",
                "OneWayDB needs exactly 1 Prover, or 2 Provers where one relays to the other"))
    elif proto == Protocol.MUTUAL_INTERLEAVED:
        if len(peers) != 2 or len(s.nodes) != 2:
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "MutualInterleaved needs exactly 2 Peer nodes"))
    elif proto == Protocol.ONE_TO_MANY:
        if len(peers) < 2 or len(peers) != len(s.nodes):
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "OneToMany needs >= 2 nodes, all Peer"))
    elif proto == Protocol.MULTI_PARTY_RING:
        if len(peers) != len(s.nodes):
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "mutual multi-party scenarios contain only Peer"))
        if len(peers) < 4:
            issues.append(ValidationIssue(
                "ParamOutOfRange", "nodes", "N must be >= 4 for MultiPartyRing"))
    elif proto == Protocol.MPNV:
        if peers:
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "one-way group scenarios contain no Peer"))
        if not provers:
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "MPNV needs at least one Prover"))
        if not (actives or passives):
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "MPNV needs at least one verifier"))
        issues.extend(_check_mpnv_params(s, len(actives) + len(passives), len(provers)))
    else:  # the two-group protocols
        if len(peers) != len(s.nodes):
            issues.append(ValidationIssue(
                "RoleMismatch", "nodes", "mutual multi-party scenarios contain only Peer"))
        issues.extend(_check_ntom_params(s, len(peers)))

    issues.extend(_policy_issues(s))
    return issues


def _check_mpnv_params(s: Scenario, n_verifiers: int, n_provers: int) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    exp = s.experiment
    if exp is None or exp.n_a is None or exp.d_a is None:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment", "MPNV needs experiment.n_a and experiment.d_a"))
        return issues
    if not 0 < exp.n_a <= s.config.n:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment.n_a",
            f"n_a must be in 1..n ({s.config.n}), got {exp.n_a}"))
    if not 0.0 < exp.d_a <= 1.0:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment.d_a", f"d_a must be in (0, 1], got {exp.d_a}"))
    if exp.N is not None and exp.N != n_verifiers:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment.N",
            f"N={exp.N} but scenario has {n_verifiers} verifiers"))
    if exp.M is not None and exp.M != n_provers:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment.M",
            f"M={exp.M} but scenario has {n_provers} provers"))
    if exp.n_p is not None and exp.n_a is not None and exp.n_p != s.config.n - exp.n_a:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment.n_p",
            f"n_p must equal n - n_a = {s.config.n - exp.n_a}, got {exp.n_p}"))
    return issues


def _check_ntom_params(s: Scenario, n_peers: int) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    exp = s.experiment
    if exp is None or exp.N is None or exp.M is None:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment",
            "two-group protocols need experiment.N and experiment.M"))
        return issues
    if exp.N < 1 or exp.M < 1:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment", "group sizes must be >= 1"))
    if exp.N + exp.M != n_peers:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment",
            f"N + M = {exp.N + exp.M} but scenario has {n_peers} nodes"))
    if s.protocol == Protocol.NTOM_MULTIPARTY and exp.N + exp.M < 4:
        issues.append(ValidationIssue(
            "ParamOutOfRange", "experiment", "N must be >= 4 for the joint ring run"))
    if s.protocol == Protocol.NTOM_PASSIVE:
        for key in ("d_1", "d_2", "n_a1", "n_a2"):
            if getattr(exp, key) is None:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", f"experiment.{key}",
                    f"NtoM-passive needs experiment.{key}"))
        for key in ("d_1", "d_2"):
            v = getattr(exp, key)
            if v is not None and not 0.0 < v <= 1.0:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", f"experiment.{key}",
                    f"{key} must be in (0, 1], got {v}"))
        for key in ("n_a1", "n_a2"):
            v = getattr(exp, key)
            if v is not None and not 0 < v <= s.config.n:
                issues.append(ValidationIssue(
                    "ParamOutOfRange", f"experiment.{key}",
                    f"{key} must be in 1..n ({s.config.n}), got {v}"))
    return issues


def ensure_valid(s: Scenario) -> Scenario:
    issues = validate_scenario(s)
    if issues:
        raise ScenarioInvalid(issues)
    return s
