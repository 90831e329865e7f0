"""Adversary policies and consistency checking for distance-bounding runs.

A policy describes how a single node deviates from the honest protocol
schedule.  Policies only shape behavior that a radio actually controls:
when to transmit, what bits to transmit, and what to claim out of band.
They never grant access to another node's secrets.

The cross-check detector compares the distance bounds published by the
participants of a mutual run pairwise.  A node that delays its
transmissions inconsistently shows up as a disagreement between two
honest observers; a node that tampers with payload bits shows up as a
transcript digest mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

# Detection threshold for pairwise bound disagreement, in meters.
# Three times the ideal-channel distance tolerance used elsewhere.
EPS_DETECT_M = 3.0e-6


class PolicyError(ValueError):
    """Malformed or inapplicable policy description."""


@dataclass(frozen=True)
class Honest:
    """Follow the protocol exactly."""

    kind: str = field(default="Honest", init=False, repr=False)


@dataclass(frozen=True)
class GuessAhead:
    """Answer rapid challenges before they arrive, guessing the bits.

    p_rounds: number of leading rounds answered early; remaining rounds
        are answered honestly.
    advance_s: how far before the true challenge arrival the response is
        emitted.  The guesser commits to its response nonces honestly and
        cheats only on timing and on the guessed challenge bits.
    """

    p_rounds: int
    advance_s: float = 0.0
    kind: str = field(default="GuessAhead", init=False, repr=False)


@dataclass(frozen=True)
class SelectiveDelay:
    """Hold back own transmissions to appear farther away.

    delay_s applies to every send.  per_message overrides the delay for
    specific sends, indexed by the node's own send counter within the
    rapid phase (0 is its first rapid-phase transmission).  target
    restricts the delay to exchanges with one measuring node; exchanges
    with other nodes stay honest.  A broadcast is delayed toward all
    receivers at once, never selectively per receiver.
    """

    delay_s: float = 0.0
    per_message: Tuple[Tuple[int, float], ...] = ()
    target: Optional[int] = None
    kind: str = field(default="SelectiveDelay", init=False, repr=False)

    def delay_for(self, send_index: int, measurer: Optional[int] = None) -> float:
        if self.target is not None and measurer is not None and measurer != self.target:
            return 0.0
        for idx, d in self.per_message:
            if idx == send_index:
                return d
        return self.delay_s


@dataclass(frozen=True)
class Relay:
    """Proxy a rapid exchange to a distant victim prover (mafia fraud).

    The relay poses as the prover toward the verifier, forwarding each
    challenge to the victim and each response back.  It cannot shorten
    the measured distance because every bit still travels the full
    verifier-relay-victim path.
    """

    victim: int
    kind: str = field(default="Relay", init=False, repr=False)


@dataclass(frozen=True)
class FakeLocationReport:
    """Misreport own location (or distance) to passive observers.

    Exactly one of claimed_pos / claimed_distance_m is set.  Only
    meaningful for an active verifier whose position feeds the passive
    derivation of other observers.
    """

    claimed_pos: Optional[Tuple[float, float]] = None
    claimed_distance_m: Optional[float] = None
    kind: str = field(default="FakeLocationReport", init=False, repr=False)

    def __post_init__(self) -> None:
        if (self.claimed_pos is None) == (self.claimed_distance_m is None):
            raise PolicyError(
                "FakeLocationReport needs exactly one of claimed_pos, claimed_distance_m"
            )


@dataclass(frozen=True)
class EarlyChallenge:
    """Emit some challenges ahead of the honest schedule.

    advance_s: how early a selected challenge is transmitted relative to
        the honest absolute schedule.  The verifier re-anchors afterwards,
        so an isolated early challenge compresses exactly one timing gap
        observed by passive listeners.
    pr_ch: probability that any given round is selected.
    """

    advance_s: float
    pr_ch: float
    kind: str = field(default="EarlyChallenge", init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.pr_ch <= 1.0:
            raise PolicyError("EarlyChallenge pr_ch must lie in [0, 1]")
        if self.advance_s < 0.0:
            raise PolicyError("EarlyChallenge advance_s must be >= 0")


@dataclass(frozen=True)
class NodeInsertion:
    """Participate without holding a registered certificate."""

    kind: str = field(default="NodeInsertion", init=False, repr=False)


AdversaryPolicy = (
    Honest
    | GuessAhead
    | SelectiveDelay
    | Relay
    | FakeLocationReport
    | EarlyChallenge
    | NodeInsertion
)

_POLICY_KINDS = {
    "Honest": Honest,
    "GuessAhead": GuessAhead,
    "SelectiveDelay": SelectiveDelay,
    "Relay": Relay,
    "FakeLocationReport": FakeLocationReport,
    "EarlyChallenge": EarlyChallenge,
    "NodeInsertion": NodeInsertion,
}


def policy_from_json(obj: Mapping) -> AdversaryPolicy:
    """Build a policy from its JSON object form.  Unknown keys are rejected."""
    if not isinstance(obj, Mapping):
        raise PolicyError("policy must be a JSON object")
    data = dict(obj)
    kind = data.pop("kind", None)
    if kind not in _POLICY_KINDS:
        raise PolicyError(f"unknown policy kind: {kind!r}")
    if kind == "Honest" or kind == "NodeInsertion":
        if data:
            raise PolicyError(f"{kind} takes no parameters, got {sorted(data)}")
        return _POLICY_KINDS[kind]()
    if kind == "GuessAhead":
        p_rounds = data.pop("p_rounds", None)
        advance_s = data.pop("advance_s", 0.0)
        if data:
            raise PolicyError(f"unknown keys in GuessAhead policy: {sorted(data)}")
        if not isinstance(p_rounds, int) or p_rounds < 0:
            raise PolicyError("GuessAhead p_rounds must be a non-negative integer")
        return GuessAhead(p_rounds=p_rounds, advance_s=float(advance_s))
    if kind == "SelectiveDelay":
        delay_s = float(data.pop("delay_s", 0.0))
        per_message = data.pop("per_message", {})
        target = data.pop("target", None)
        if data:
            raise PolicyError(f"unknown keys in SelectiveDelay policy: {sorted(data)}")
        if not isinstance(per_message, Mapping):
            raise PolicyError("SelectiveDelay per_message must be an object")
        try:
            pm = tuple(sorted((int(k), float(v)) for k, v in per_message.items()))
        except (TypeError, ValueError) as exc:
            raise PolicyError(f"bad SelectiveDelay per_message entry: {exc}") from exc
        if delay_s < 0.0 or any(d < 0.0 for _, d in pm):
            raise PolicyError("SelectiveDelay delays must be >= 0")
        if target is not None and not isinstance(target, int):
            raise PolicyError("SelectiveDelay target must be a node id")
        return SelectiveDelay(delay_s=delay_s, per_message=pm, target=target)
    if kind == "Relay":
        victim = data.pop("victim", None)
        if data:
            raise PolicyError(f"unknown keys in Relay policy: {sorted(data)}")
        if not isinstance(victim, int):
            raise PolicyError("Relay victim must be a node id")
        return Relay(victim=victim)
    if kind == "FakeLocationReport":
        pos = data.pop("claimed_pos", None)
        dist = data.pop("claimed_distance_m", None)
        if data:
            raise PolicyError(f"unknown keys in FakeLocationReport policy: {sorted(data)}")
        if pos is not None:
            if not (isinstance(pos, (list, tuple)) and len(pos) == 2):
                raise PolicyError("claimed_pos must be [x, y]")
            pos = (float(pos[0]), float(pos[1]))
        if dist is not None:
            dist = float(dist)
        return FakeLocationReport(claimed_pos=pos, claimed_distance_m=dist)
    if kind == "EarlyChallenge":
        advance_s = data.pop("advance_s", None)
        pr_ch = data.pop("pr_ch", None)
        if data:
            raise PolicyError(f"unknown keys in EarlyChallenge policy: {sorted(data)}")
        if advance_s is None or pr_ch is None:
            raise PolicyError("EarlyChallenge needs advance_s and pr_ch")
        return EarlyChallenge(advance_s=float(advance_s), pr_ch=float(pr_ch))
    raise PolicyError(f"unhandled policy kind {kind!r}")


def policy_to_json(policy: AdversaryPolicy) -> dict:
    out: dict = {"kind": policy.kind}
    if isinstance(policy, GuessAhead):
        out["p_rounds"] = policy.p_rounds
        out["advance_s"] = policy.advance_s
    elif isinstance(policy, SelectiveDelay):
        out["delay_s"] = policy.delay_s
        if policy.per_message:
            out["per_message"] = {str(k): v for k, v in policy.per_message}
        if policy.target is not None:
            out["target"] = policy.target
    elif isinstance(policy, Relay):
        out["victim"] = policy.victim
    elif isinstance(policy, FakeLocationReport):
        if policy.claimed_pos is not None:
            out["claimed_pos"] = list(policy.claimed_pos)
        if policy.claimed_distance_m is not None:
            out["claimed_distance_m"] = policy.claimed_distance_m
    elif isinstance(policy, EarlyChallenge):
        out["advance_s"] = policy.advance_s
        out["pr_ch"] = policy.pr_ch
    return out


@dataclass
class SendIntent:
    """A transmission about to be scheduled by a protocol driver."""

    sender: int
    send_index: int          # sender's own transmission counter in the rapid phase
    t_nominal: float         # honest emission time, true clock
    measurer: Optional[int] = None   # node whose measurement this send answers
    allow_early: bool = False


def apply_policy(policy: AdversaryPolicy, intent: SendIntent, rng=None) -> SendIntent:
    """Return the intent with policy-controlled timing applied.

    Content-level deviations (guessed bits, relaying, fake reports) are
    structural and handled by the protocol drivers themselves; this hook
    owns pure timing shifts.
    """
    if isinstance(policy, SelectiveDelay):
        d = policy.delay_for(intent.send_index, intent.measurer)
        if d:
            intent.t_nominal += d
        return intent
    if isinstance(policy, EarlyChallenge):
        if rng is None:
            raise PolicyError("EarlyChallenge needs an RNG stream for round selection")
        if rng.random() < policy.pr_ch:
            intent.t_nominal -= policy.advance_s
            intent.allow_early = True
        return intent
    return intent


@dataclass(frozen=True)
class PairMismatch:
    node_a: int
    node_b: int
    bound_ab_m: float
    bound_ba_m: float

    @property
    def discrepancy_m(self) -> float:
        return abs(self.bound_ab_m - self.bound_ba_m)


@dataclass
class DetectionReport:
    """Outcome of cross-checking published bounds and transcript digests.

    Flagging establishes that some participant misbehaved; singling out
    the culprit is out of scope for the check itself.
    """

    mismatches: List[PairMismatch] = field(default_factory=list)
    digest_outliers: List[int] = field(default_factory=list)
    accused: frozenset = frozenset()
    verdicts: Dict[int, str] = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return not self.mismatches and not self.digest_outliers

    def flags_pair(self, a: int, b: int) -> bool:
        return any({m.node_a, m.node_b} == {a, b} for m in self.mismatches)

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "mismatches": [
                {
                    "node_a": m.node_a,
                    "node_b": m.node_b,
                    "bound_ab_m": m.bound_ab_m,
                    "bound_ba_m": m.bound_ba_m,
                    "discrepancy_m": m.discrepancy_m,
                }
                for m in self.mismatches
            ],
            "digest_outliers": list(self.digest_outliers),
            "accused": sorted(self.accused),
            "verdicts": {str(k): v for k, v in sorted(self.verdicts.items())},
        }


def cross_check_detect(
    bounds: Mapping[int, Mapping[int, float]],
    digests: Optional[Mapping[int, bytes]] = None,
    eps_detect: float = EPS_DETECT_M,
) -> DetectionReport:
    """Compare each pair's two directional bounds and the transcript digests.

    bounds[x][y] is the bound x derived for its distance to y, in meters.
    A pair is flagged when the two views differ by more than eps_detect.
    Digest comparison flags any node whose transcript digest disagrees
    with the strict majority.
    """
    report = DetectionReport()
    nodes = sorted(bounds)
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            if b in bounds.get(a, {}) and a in bounds.get(b, {}):
                ab = bounds[a][b]
                ba = bounds[b][a]
                if abs(ab - ba) > eps_detect:
                    report.mismatches.append(PairMismatch(a, b, ab, ba))
    if digests:
        tally: Dict[bytes, int] = {}
        for d in digests.values():
            tally[d] = tally.get(d, 0) + 1
        majority = max(tally.items(), key=lambda kv: (kv[1], kv[0]))[0]
        if tally[majority] > len(digests) // 2:
            report.digest_outliers = sorted(
                n for n, d in digests.items() if d != majority
            )
    implicated = set(report.digest_outliers)
    for m in report.mismatches:
        implicated.add(m.node_a)
        implicated.add(m.node_b)
    report.accused = frozenset(implicated)
    for n in nodes:
        if n in report.digest_outliers:
            report.verdicts[n] = "bad_digest"
        elif any(n in (m.node_a, m.node_b) for m in report.mismatches):
            report.verdicts[n] = "disputed"
        else:
            report.verdicts[n] = "consistent"
    return report


def distance_fraud_game(
    trials: int,
    n: int,
    bit_len: int = 1,
    seed: int = 0,
    distance_m: float = 30.0,
    advance_s: float = 2e-8,
) -> float:
    """Monte Carlo success rate of a guess-ahead prover against one verifier.

    Each trial runs the full one-way rapid exchange with the prover
    answering every round before the challenge arrives.  A trial succeeds
    when all guessed challenge bits match, so the expected rate is
    2 ** (-n * bit_len).  Returns the empirical success fraction.
    """
    from .proto.pairwise import one_way_guess_trial

    import random

    rng = random.Random(seed)
    wins = 0
    for _ in range(trials):
        if one_way_guess_trial(rng, n=n, bit_len=bit_len,
                               distance_m=distance_m, advance_s=advance_s):
            wins += 1
    return wins / trials


def ring_delay_sweep(
    n_nodes: int,
    delay_grid_s,
    seed: int = 7,
    side_m: float = 400.0,
):
    """Run the ring protocol across a grid of per-colluder delay pairs.

    delay_grid_s: iterable of ((d1, d2), (d3, d4)) delay assignments for
    the nodes at ring positions 3 and 4.  Yields (delays, detected,
    max_discrepancy_m) tuples.  Positions are a fixed seeded layout so
    runs differ only in the injected delays.
    """
    from .proto.ring import run_ring_with_delays

    results = []
    for (d1, d2), (d3, d4) in delay_grid_s:
        rep = run_ring_with_delays(
            n_nodes=n_nodes,
            delays={2: (d1, d2), 3: (d3, d4)},
            seed=seed,
            side_m=side_m,
        ).detection
        worst = max((m.discrepancy_m for m in rep.mismatches), default=0.0)
        results.append((((d1, d2), (d3, d4)), not rep.consistent, worst))
    return results
