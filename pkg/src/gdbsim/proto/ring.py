"""Mutual multi-party distance bounding over a committed ring order.

Every participant commits to its rapid nonces, the commitment digests
fix a canonical ring order nobody controls, and each round snakes one
value chain around the ring and back: senders p1 .. pN, p1, pN .. p2.
Each node transmits twice per round and logs the arrival of everything
else, then solves its own linear system for all flight times it can
see: the N ring edges plus its chords to non-adjacent members.  The
published per-pair bounds are cross-checked; a lone delaying node only
inflates distances consistently, while colluders on adjacent ring
positions can push two observers' views of the same pair apart, which
is what the discrepancy check flags.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ..core import (
    GdbSimError,
    NodeId,
    NodeSpec,
    Protocol,
    ProtocolConfig,
    Role,
    Scenario,
)
from ..crypto import Commitment, Opening, UnknownKey, commit, hash_bytes
from ..estimate import (
    RingTiming,
    SolveFailure,
    _edge_key,
    build_tof_system,
    edge_times,
    snake_order,
    solve_tof,
)
from ..threat import (
    EPS_DETECT_M,
    SelectiveDelay,
    SendIntent,
    apply_policy,
    cross_check_detect,
)
from .base import (
    DbEstimate,
    METHOD_MULTIPARTY,
    ResponseMismatch,
    RunResult,
    encode_value,
    response_bits,
    start_run,
    transcript_digest,
)
from .pairwise import _open_or_raise


class MissingCommitment(GdbSimError):
    """A ring participant never committed, so no order can be agreed."""


def derive_ring_order(
    commitments: Mapping[NodeId, Commitment], peers: Sequence[NodeId]
) -> Tuple[NodeId, ...]:
    """Canonical ring order: sort by rehashed commitment digest.

    Each digest depends on secret nonces and blinding, so no member can
    steer its position without breaking its own commitment.  Node id
    breaks the (practically impossible) digest ties.
    """
    missing = sorted(p for p in peers if p not in commitments)
    if missing:
        raise MissingCommitment(f"no commitment from nodes {missing}")
    return tuple(sorted(peers, key=lambda p: (hash_bytes(commitments[p].digest), p)))


def run_multiparty_gdb(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Commit, snake n rounds, decommit, report, cross-check."""
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    peers = sorted(n.id for n in s.with_role(Role.PEER))
    n_nodes = len(peers)
    n = cfg.n

    nonces: Dict[NodeId, Tuple[int, ...]] = {}
    bundles: Dict[NodeId, Tuple[Commitment, Opening]] = {}
    for p in peers:
        nonces[p] = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(2 * n))
        bundles[p] = commit(nonces[p], cfg.bit_len, ctx.rng)

    t = ctx.slot_s
    for p in peers:
        chan.broadcast(p, t, "commit", "pre", payload=bundles[p][0].digest)
        t += ctx.slot_s

    ring = derive_ring_order({p: bundles[p][0] for p in peers}, peers)
    order = snake_order(ring)

    seqs: List[List[int]] = []
    sent_values: List[List[int]] = []
    nonce_cursor: Dict[NodeId, int] = {p: 0 for p in peers}
    prev_seq: Optional[int] = None
    prev_value = 0
    t_round_start = t
    for r in range(n):
        round_seqs: List[int] = []
        round_values: List[int] = []
        for pos, sender in enumerate(order, start=1):
            nonce = nonces[sender][nonce_cursor[sender]]
            nonce_cursor[sender] += 1
            if r == 0 and pos == 1:
                value = nonce
            else:
                value = response_bits(nonce, prev_value, cfg.bit_len)
            if pos == 1:
                t_nominal = t_round_start
            else:
                t_nominal = chan.arrival_true(prev_seq, sender) + cfg.alpha
            intent = SendIntent(
                sender=sender,
                send_index=ctx.next_send_index(sender),
                t_nominal=t_nominal,
            )
            shaped = apply_policy(ctx.policy(sender), intent, ctx.rng)
            em = chan.broadcast(
                sender, shaped.t_nominal,
                "challenge" if pos == 1 else "response", "rapid",
                payload=encode_value("m", 2 * n_nodes * r + pos, value),
                round_index=r + 1, after=prev_seq, allow_early=shaped.allow_early,
            )
            prev_seq = em.seq
            prev_value = value
            round_seqs.append(em.seq)
            round_values.append(value)
        seqs.append(round_seqs)
        sent_values.append(round_values)
        t_round_start = chan.arrival_true(prev_seq, ring[0]) + cfg.alpha

    last_sender = order[-1]
    t = max(
        chan.arrival_true(prev_seq, p) for p in peers if p != last_sender
    ) + ctx.slot_s
    for p in peers:
        chan.broadcast(p, t, "open", "post",
                       payload=bundles[p][1].blinding + encode_value("o", 0, 0))
        t += ctx.slot_s
        _open_or_raise(*bundles[p])

    _verify_value_chain(ring, n, cfg.bit_len, nonces, sent_values)

    rapid_emissions = [em for em in chan.trace.emissions if em.phase == "rapid"]
    digest_hex = transcript_digest(rapid_emissions)
    digest_bytes = bytes.fromhex(digest_hex)

    ring_solutions: Dict[NodeId, Dict[Tuple[NodeId, NodeId], float]] = {}
    rejections: List[str] = []
    estimates: List[DbEstimate] = []
    signed_ok: Dict[NodeId, bool] = {}

    for p in peers:
        payload = digest_bytes
        if cfg.auth_enabled:
            try:
                payload = payload + ctx.registry.sign(p, digest_bytes)
                signed_ok[p] = True
            except UnknownKey:
                signed_ok[p] = False
                rejections.append(f"node {p}: report unsigned, no registered key")
        chan.broadcast(p, t, "report", "report", payload=payload)
        t += ctx.slot_s

    for o in peers:
        rounds_data = [
            RingTiming(
                ring=ring,
                observer=o,
                arrivals={
                    m: chan.arrival_local(seqs[r][m - 1], o)
                    for m in range(1, 2 * n_nodes + 1)
                    if order[m - 1] != o
                },
                alpha=cfg.alpha,
            )
            for r in range(n)
        ]
        try:
            solution = solve_tof(build_tof_system(rounds_data))
        except SolveFailure as exc:
            rejections.append(f"node {o}: flight-time solve failed: {exc}")
            continue
        edges = edge_times(solution)
        ring_solutions[o] = edges
        verified = cfg.auth_enabled and signed_ok.get(o, False)
        for x in peers:
            if x == o:
                continue
            bound = max(cfg.c * edges[_edge_key(o, x)], 0.0)
            estimates.append(DbEstimate(
                measurer=o, target=x, bound_m=bound,
                method=METHOD_MULTIPARTY, rounds_used=n, verified_auth=verified,
            ))

    bounds: Dict[NodeId, Dict[NodeId, float]] = {}
    for est in estimates:
        bounds.setdefault(est.measurer, {})[est.target] = est.bound_m
    detection = cross_check_detect(
        bounds, {p: digest_bytes for p in peers}, EPS_DETECT_M
    )
    unauth = [p for p, ok in signed_ok.items() if cfg.auth_enabled and not ok]
    if unauth:
        detection.accused = frozenset(set(detection.accused) | set(unauth))
        for p in unauth:
            detection.verdicts[p] = "unauthenticated"

    return RunResult(
        scenario=s, trace=chan.trace, estimates=estimates,
        detection=detection, ring_order=ring, ring_solutions=ring_solutions,
        rejections=rejections,
    )


def _verify_value_chain(
    ring: Tuple[NodeId, ...],
    n: int,
    bit_len: int,
    opened: Mapping[NodeId, Tuple[int, ...]],
    sent_values: List[List[int]],
) -> None:
    """Recompute every rapid value from the opened nonces and compare."""
    order = snake_order(ring)
    cursor: Dict[NodeId, int] = {p: 0 for p in ring}
    prev = 0
    for r in range(n):
        for pos, sender in enumerate(order, start=1):
            nonce = opened[sender][cursor[sender]]
            cursor[sender] += 1
            expect = nonce if (r == 0 and pos == 1) else response_bits(nonce, prev, bit_len)
            if sent_values[r][pos - 1] != expect:
                raise ResponseMismatch(
                    r + 1, f"ring value at round {r + 1} position {pos} off the chain"
                )
            prev = expect


def regular_ring_scenario(
    n_nodes: int,
    side_m: float,
    seed: int,
    n_rounds: int = 1,
    alpha: float = 0.0,
) -> Scenario:
    """Peers on a regular polygon with the given side length, ids 1..N."""
    radius = side_m / (2.0 * math.sin(math.pi / n_nodes))
    nodes = tuple(
        NodeSpec(
            id=i + 1,
            pos=(
                radius * math.cos(2.0 * math.pi * i / n_nodes),
                radius * math.sin(2.0 * math.pi * i / n_nodes),
            ),
            role=Role.PEER,
        )
        for i in range(n_nodes)
    )
    return Scenario(
        nodes=nodes,
        protocol=Protocol.MULTI_PARTY_RING,
        config=ProtocolConfig(n=n_rounds, bit_len=1, alpha=alpha),
        rng_seed=seed,
    )


def run_ring_with_delays(
    n_nodes: int = 4,
    delays: Optional[Mapping[int, Tuple[float, float]]] = None,
    seed: int = 7,
    side_m: float = 400.0,
    n_rounds: int = 1,
) -> RunResult:
    """Polygon ring run with extra send latency at chosen ring positions.

    delays maps 0-based ring positions to the (first send, second send)
    latency pair that node adds in every round.  The ring order is fixed
    by the seed alone, so a dry honest pass reveals which node sits at
    each position before the delays are attached.
    """
    scenario = regular_ring_scenario(n_nodes, side_m, seed, n_rounds)
    if not delays:
        return run_multiparty_gdb(scenario)
    for k in delays:
        if not 0 <= k < n_nodes:
            raise ValueError(f"ring position {k} outside 0..{n_nodes - 1}")
    ring = run_multiparty_gdb(scenario).ring_order
    by_id = {spec.id: spec for spec in scenario.nodes}
    for k, (d_first, d_second) in delays.items():
        nid = ring[k]
        per = tuple(sorted(
            [(2 * r, d_first) for r in range(n_rounds)]
            + [(2 * r + 1, d_second) for r in range(n_rounds)]
        ))
        by_id[nid] = replace(by_id[nid], policy=SelectiveDelay(per_message=per))
    rigged = replace(scenario, nodes=tuple(by_id[spec.id] for spec in scenario.nodes))
    return run_multiparty_gdb(rigged)
