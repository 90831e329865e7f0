"""One initiator bounding many responders in a single message chain.

Each round is one chain of 2M+1 messages: the initiator's opener
challenges the first responder, every later initiator emission both
closes the previous responder's round trip and challenges the next one,
and the final emission only closes.  Responders time the initiator off
their own response-to-closer gap, so one chain yields bounds in both
directions for every pair, replacing 4nM one-way messages with n(2M+1).
"""

from __future__ import annotations

from typing import Dict, List, Mapping, Sequence, Tuple

from ..core import NodeId, Role, Scenario
from ..crypto import Commitment, Opening, commit
from ..estimate import active_distance
from ..threat import SelectiveDelay, SendIntent, apply_policy
from .base import (
    DbEstimate,
    METHOD_ACTIVE,
    ResponseMismatch,
    RunContext,
    RunResult,
    encode_value,
    response_bits,
    start_run,
)
from .pairwise import RoundRecord, _open_or_raise


def _shaped_send(ctx: RunContext, node: NodeId, t_nominal: float) -> Tuple[float, bool]:
    intent = SendIntent(
        sender=node, send_index=ctx.next_send_index(node), t_nominal=t_nominal
    )
    shaped = apply_policy(ctx.policy(node), intent, ctx.rng)
    return shaped.t_nominal, shaped.allow_early


def run_chain(
    ctx: RunContext,
    v: NodeId,
    responders: Sequence[NodeId],
    n: int,
    v_nonces: Sequence[int],
    v_offset: int,
    p_nonces: Mapping[NodeId, Sequence[int]],
    p_offsets: Mapping[NodeId, int],
    t_start: float,
) -> Tuple[Dict[NodeId, List[RoundRecord]], Dict[NodeId, List[RoundRecord]], float]:
    """n chained rounds of 2M+1 messages each.

    Consumes n * (M + 1) of the initiator's nonces from v_offset and n
    nonces per responder from each one's own offset.  Returns the round
    records both ways plus the time the chain wound down.
    """
    cfg = ctx.scenario.config
    chan = ctx.channel
    m = len(responders)
    v_rounds: Dict[NodeId, List[RoundRecord]] = {p: [] for p in responders}
    p_rounds: Dict[NodeId, List[RoundRecord]] = {p: [] for p in responders}
    v_used = v_offset
    prev_value = 0
    msg_index = 0
    t_nominal = t_start
    for i in range(1, n + 1):
        for j, pj in enumerate(responders, start=1):
            v_non = v_nonces[v_used]
            v_used += 1
            value = v_non if msg_index == 0 else response_bits(v_non, prev_value, cfg.bit_len)
            t_actual, early_ok = _shaped_send(ctx, v, t_nominal)
            msg_index += 1
            ch = chan.broadcast(
                v, t_actual, "challenge", "rapid",
                payload=encode_value("m", msg_index, value), round_index=i,
                allow_early=early_ok,
            )
            if j > 1:
                prev_p = responders[j - 2]
                rec = p_rounds[prev_p][-1]
                p_rounds[prev_p][-1] = RoundRecord(
                    index=rec.index, challenge=rec.challenge, response=value,
                    t_send=rec.t_send,
                    t_recv=chan.arrival_local(ch.seq, prev_p),
                )
            prev_value = value

            pol = ctx.policy(pj)
            p_idx = ctx.next_send_index(pj)
            msg_index += 1
            r_value = response_bits(prev_value, p_nonces[pj][p_offsets[pj] + i - 1], cfg.bit_len)
            t_resp = chan.arrival_true(ch.seq, pj) + cfg.alpha
            if isinstance(pol, SelectiveDelay):
                t_resp += pol.delay_for(p_idx, measurer=v)
            resp = chan.broadcast(
                pj, t_resp, "response", "rapid",
                payload=encode_value("m", msg_index, r_value), round_index=i,
                after=ch.seq,
            )
            v_rounds[pj].append(RoundRecord(
                index=i, challenge=prev_value, response=r_value,
                t_send=t_actual + chan.offsets[v],
                t_recv=chan.arrival_local(resp.seq, v),
            ))
            # t_recv is patched once the closing emission exists
            p_rounds[pj].append(RoundRecord(
                index=i, challenge=r_value, response=0,
                t_send=resp.t_send + chan.offsets[pj],
                t_recv=float("nan"),
            ))
            prev_value = r_value
            t_nominal = chan.arrival_true(resp.seq, v) + cfg.alpha

        v_non = v_nonces[v_used]
        v_used += 1
        value = response_bits(v_non, prev_value, cfg.bit_len)
        t_actual, early_ok = _shaped_send(ctx, v, t_nominal)
        msg_index += 1
        fin = chan.broadcast(
            v, t_actual, "closing", "rapid",
            payload=encode_value("m", msg_index, value), round_index=i,
            allow_early=early_ok,
        )
        last_p = responders[-1]
        rec = p_rounds[last_p][-1]
        p_rounds[last_p][-1] = RoundRecord(
            index=rec.index, challenge=rec.challenge, response=value,
            t_send=rec.t_send, t_recv=chan.arrival_local(fin.seq, last_p),
        )
        prev_value = value
        t_nominal = max(chan.arrival_true(fin.seq, p) for p in responders) + cfg.alpha
    return v_rounds, p_rounds, t_nominal


def check_chain_responses(
    v_rounds: Mapping[NodeId, List[RoundRecord]],
    p_nonces: Mapping[NodeId, Sequence[int]],
    p_offsets: Mapping[NodeId, int],
    bit_len: int,
) -> None:
    """Each response must be the received value XOR the committed nonce."""
    for pj, recs in v_rounds.items():
        for rec in recs:
            expected = response_bits(
                rec.challenge, p_nonces[pj][p_offsets[pj] + rec.index - 1], bit_len
            )
            if rec.response != expected:
                raise ResponseMismatch(rec.index, f"responder {pj} round {rec.index}")


def chain_estimates(
    v: NodeId,
    responders: Sequence[NodeId],
    v_rounds: Mapping[NodeId, List[RoundRecord]],
    p_rounds: Mapping[NodeId, List[RoundRecord]],
    alpha: float,
    c: float,
) -> List[DbEstimate]:
    """Max-over-rounds bounds, initiator first, then the responders."""
    n = len(next(iter(v_rounds.values()))) if v_rounds else 0
    out: List[DbEstimate] = []
    for pj in responders:
        bound = max(active_distance(r.t_send, r.t_recv, alpha, c) for r in v_rounds[pj])
        out.append(DbEstimate(
            measurer=v, target=pj, bound_m=bound,
            method=METHOD_ACTIVE, rounds_used=n, verified_auth=False,
        ))
    for pj in responders:
        bound = max(active_distance(r.t_send, r.t_recv, alpha, c) for r in p_rounds[pj])
        out.append(DbEstimate(
            measurer=pj, target=v, bound_m=bound,
            method=METHOD_ACTIVE, rounds_used=n, verified_auth=False,
        ))
    return out


def run_one_to_many(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Run the chained protocol and return 2M directional bounds.

    All participants are peers; the lowest node id drives the chain and
    the remaining M peers respond in id order.
    """
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    peers = sorted(n.id for n in s.with_role(Role.PEER))
    v = peers[0]
    provers = peers[1:]
    m = len(provers)
    n = cfg.n

    v_nonces = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(n * (m + 1)))
    p_nonces: Dict[NodeId, Tuple[int, ...]] = {
        p: tuple(ctx.draw_bits(cfg.bit_len) for _ in range(n)) for p in provers
    }
    bundles: Dict[NodeId, Tuple[Commitment, Opening]] = {
        v: commit(v_nonces, cfg.bit_len, ctx.rng)
    }
    for p in provers:
        bundles[p] = commit(p_nonces[p], cfg.bit_len, ctx.rng)

    t = ctx.slot_s
    for nid in (v, *provers):
        chan.broadcast(nid, t, "commit", "pre", payload=bundles[nid][0].digest)
        t += ctx.slot_s

    offsets = {p: 0 for p in provers}
    v_rounds, p_rounds, t_end = run_chain(
        ctx, v, provers, n, v_nonces, 0, p_nonces, offsets, t
    )

    t = t_end + ctx.slot_s
    for nid in (v, *provers):
        chan.broadcast(nid, t, "open", "post",
                       payload=bundles[nid][1].blinding + encode_value("o", 0, 0))
        t += ctx.slot_s
        _open_or_raise(*bundles[nid])

    check_chain_responses(v_rounds, p_nonces, offsets, cfg.bit_len)
    estimates = chain_estimates(v, provers, v_rounds, p_rounds, cfg.alpha, cfg.c)
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)
