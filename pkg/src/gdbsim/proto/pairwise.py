"""Two-party distance bounding and its sequential baselines.

The one-way driver runs a single timed verifier against a prover, with
optional eavesdropping observers; the mutual driver interleaves both
directions into 2n+1 rapid messages.  Both schedule the challenger's
emissions on an arrival-chained nominal timeline: each emission is due
one processing delay after the previous reply arrives.  The challenger
publishes those nominal times, and observers price their overheard
timings against the published schedule, which is exactly what a
schedule-advancing challenger exploits.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..core import NodeId, Role, Scenario, distance
from ..crypto import Commitment, Opening, OpeningMismatch, commit, open_commitment
from ..estimate import (
    NegativeBound,
    PassiveObservation,
    active_distance,
    passive_bound_direct,
)
from ..simkit import BroadcastChannel
from ..threat import (
    EarlyChallenge,
    FakeLocationReport,
    GuessAhead,
    Relay,
    SelectiveDelay,
    SendIntent,
    apply_policy,
)
from .base import (
    AuthFailure,
    CommitMismatch,
    DbEstimate,
    METHOD_ACTIVE,
    METHOD_PASSIVE,
    ProtocolStall,
    ResponseMismatch,
    RunContext,
    RunResult,
    encode_value,
    response_bits,
    start_run,
)


@dataclass(frozen=True)
class RoundRecord:
    """One timed round as the challenger's clock saw it."""

    index: int
    challenge: int
    response: int
    t_send: float
    t_recv: float


@dataclass
class ExchangeResult:
    """Outcome of one verifier-prover rapid exchange."""

    verifier: NodeId
    prover: NodeId
    rounds: List[RoundRecord]
    nominal_sends: List[float]      # published schedule, true clock, one per verifier emission
    response_seqs: List[int]
    bound_m: float
    t_end: float                    # true time of the last arrival anyone needs


def _verifier_advance(ctx: RunContext, verifier: NodeId, t_nominal: float) -> Tuple[float, bool]:
    """Actual emission time for a scheduled challenger send.

    A schedule-advancing policy emits early while the published time
    stays nominal; everyone else emits exactly on schedule.
    """
    intent = SendIntent(
        sender=verifier,
        send_index=ctx.next_send_index(verifier),
        t_nominal=t_nominal,
    )
    shaped = apply_policy(ctx.policy(verifier), intent, ctx.rng)
    return shaped.t_nominal, shaped.allow_early


def run_exchange(
    ctx: RunContext,
    verifier: NodeId,
    prover: NodeId,
    prover_nonces: Sequence[int],
    nonce_offset: int,
    n_rounds: int,
    t_start: float,
    closing: bool,
) -> ExchangeResult:
    """n_rounds timed challenge/response rounds, optionally closed.

    The closing emission carries no new challenge to time; it exists so
    that listeners get a schedule point after the final response.  The
    prover consumes prover_nonces[nonce_offset : nonce_offset+n_rounds].
    """
    cfg = ctx.scenario.config
    chan = ctx.channel
    alpha = cfg.alpha
    v_policy = ctx.policy(verifier)
    p_policy = ctx.policy(prover)
    rounds: List[RoundRecord] = []
    nominal_sends: List[float] = []
    response_seqs: List[int] = []
    t_nominal = t_start
    t_end = t_start

    for i in range(1, n_rounds + 1):
        c_i = ctx.draw_bits(cfg.bit_len)
        t_actual, early_ok = _verifier_advance(ctx, verifier, t_nominal)
        ch = chan.broadcast(
            verifier, t_actual, "challenge", "rapid",
            payload=encode_value("c", i, c_i), round_index=i, allow_early=early_ok,
        )
        nominal_sends.append(t_nominal)

        t_ch_at_prover = chan.arrival_true(ch.seq, prover)
        p_idx = ctx.next_send_index(prover)
        if isinstance(p_policy, GuessAhead) and i <= p_policy.p_rounds:
            guess = ctx.draw_bits(cfg.bit_len)
            value = response_bits(guess, prover_nonces[nonce_offset + i - 1], cfg.bit_len)
            t_resp = t_ch_at_prover + alpha - p_policy.advance_s
            resp = chan.broadcast(
                prover, t_resp, "response", "rapid",
                payload=encode_value("r", i, value), round_index=i, allow_early=True,
            )
        else:
            value = response_bits(c_i, prover_nonces[nonce_offset + i - 1], cfg.bit_len)
            t_resp = t_ch_at_prover + alpha
            if isinstance(p_policy, SelectiveDelay):
                t_resp += p_policy.delay_for(p_idx, measurer=verifier)
            resp = chan.broadcast(
                prover, t_resp, "response", "rapid",
                payload=encode_value("r", i, value), round_index=i, after=ch.seq,
            )
        response_seqs.append(resp.seq)

        t_back = chan.arrival_true(resp.seq, verifier)
        rounds.append(RoundRecord(
            index=i,
            challenge=c_i,
            response=value,
            t_send=t_actual + chan.offsets[verifier],
            t_recv=t_back + chan.offsets[verifier],
        ))
        # the verifier recovers its honest timeline by adding back its own advance
        t_nominal = (t_back + (t_nominal - t_actual)) + alpha
        t_end = max(t_end, t_back)

    if closing:
        t_actual, early_ok = _verifier_advance(ctx, verifier, t_nominal)
        fin = chan.broadcast(
            verifier, t_actual, "closing", "rapid",
            payload=encode_value("x", n_rounds + 1, 0), round_index=n_rounds + 1,
            allow_early=early_ok,
        )
        nominal_sends.append(t_nominal)
        t_end = max(t_end, t_actual + max(chan.tof(verifier, nid) for nid in chan.node_ids if nid != verifier))

    bound = max(
        active_distance(r.t_send, r.t_recv, alpha, cfg.c) for r in rounds
    )
    return ExchangeResult(
        verifier=verifier,
        prover=prover,
        rounds=rounds,
        nominal_sends=nominal_sends,
        response_seqs=response_seqs,
        bound_m=bound,
        t_end=t_end,
    )


def advertised_baseline(ctx: RunContext, verifier: NodeId, observer: NodeId) -> float:
    """Verifier-observer distance as the observer believes it.

    Honest verifiers are taken at their true position; a verifier that
    advertises a fake location or distance poisons this value.
    """
    pol = ctx.policy(verifier)
    if isinstance(pol, FakeLocationReport):
        if pol.claimed_distance_m is not None:
            return pol.claimed_distance_m
        return distance(pol.claimed_pos, ctx.scenario.node(observer).pos)
    return ctx.channel.dist(verifier, observer)


def passive_observations(
    ctx: RunContext,
    ex: ExchangeResult,
    observer: NodeId,
) -> List[PassiveObservation]:
    """The observer's timing triples for every fully-framed round.

    T1 and T3 come from the verifier's published schedule plus the
    advertised baseline; T2 is the physically overheard response.  A
    round needs a follow-up emission, so the last round contributes only
    when the exchange was closed.
    """
    chan = ctx.channel
    cfg = ctx.scenario.config
    base = advertised_baseline(ctx, ex.verifier, observer)
    base_tof = chan.dist(ex.verifier, observer) / cfg.c  # physical flight for schedule anchoring
    off = chan.offsets[observer]
    obs: List[PassiveObservation] = []
    n_framed = min(len(ex.rounds), len(ex.nominal_sends) - 1)
    for i in range(n_framed):
        t1 = ex.nominal_sends[i] + base_tof + off
        t3 = ex.nominal_sends[i + 1] + base_tof + off
        t2 = chan.arrival_local(ex.response_seqs[i], observer)
        obs.append(PassiveObservation(
            t1=t1, t2=t2, t3=t3,
            alpha_p=cfg.alpha, alpha_v=cfg.alpha,
            d_verifier=base, c=cfg.c,
        ))
    return obs


def observed_bound(obs: Sequence[PassiveObservation]) -> float:
    """Worst-case (largest) direct bound over the framed rounds.

    An observation whose leg sum undercuts the verifier-prover distance
    is impossible honestly; a live run scores it as distance zero rather
    than aborting, since the cheat only ever shortens the bound.
    """
    best = 0.0
    for o in obs:
        try:
            b = passive_bound_direct(o)
        except NegativeBound:
            b = 0.0
        best = max(best, b)
    return best


def _check_responses(
    ex: ExchangeResult, nonces: Sequence[int], nonce_offset: int, bit_len: int
) -> None:
    for r in ex.rounds:
        expected = response_bits(r.challenge, nonces[nonce_offset + r.index - 1], bit_len)
        if r.response != expected:
            raise ResponseMismatch(r.index)


def _open_or_raise(commitment: Commitment, opening: Opening) -> Tuple[int, ...]:
    try:
        return open_commitment(commitment, opening)
    except OpeningMismatch as exc:
        raise CommitMismatch(str(exc)) from exc


def run_one_way_db(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """One verifier times one prover; anyone else listens.

    Emits 2n rapid messages plus the configured pre/post framing, plus
    one closing schedule point when listeners are present.  A relaying
    prover is driven through its victim, which lengthens every round
    trip by the detour.
    """
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    verifier = s.with_role(Role.ACTIVE_VERIFIER)[0].id
    provers = [n.id for n in s.with_role(Role.PROVER)]
    observers = [n.id for n in s.with_role(Role.PASSIVE_VERIFIER)]

    relay_front: Optional[NodeId] = None
    victim: Optional[NodeId] = None
    if len(provers) == 2:
        fronts = [p for p in provers if isinstance(ctx.policy(p), Relay)]
        relay_front = fronts[0]
        victim = ctx.policy(relay_front).victim  # type: ignore[union-attr]
    partner = relay_front if relay_front is not None else provers[0]
    responder = victim if victim is not None else partner

    nonces = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(cfg.n))
    commitment, opening = commit(nonces, cfg.bit_len, ctx.rng)

    n_pre = cfg.pre_post_msgs - cfg.pre_post_msgs // 2
    n_post = cfg.pre_post_msgs // 2
    t = ctx.slot_s
    for k in range(n_pre):
        kind = "commit" if k == 0 else "beacon"
        sender = partner if k == 0 else verifier
        payload = commitment.digest if k == 0 else encode_value("b", k, 0)
        chan.broadcast(sender, t, kind, "pre", payload=payload)
        t += ctx.slot_s

    if relay_front is None:
        ex = run_exchange(
            ctx, verifier, partner, nonces, 0, cfg.n,
            t_start=t, closing=bool(observers),
        )
    else:
        ex = _run_relay_exchange(ctx, verifier, relay_front, responder, nonces, t, bool(observers))
    t = ex.t_end + ctx.slot_s

    sig_ok = False
    for k in range(n_post):
        if k == 0:
            payload = opening.blinding + encode_value("o", 0, 0)
            if cfg.auth_enabled:
                message = commitment.digest + bytes(str(nonces), "ascii")
                signature = ctx.registry.sign(partner, message)  # UnknownKey when uncertified
                payload += signature
                sig_ok = ctx.registry.verify(partner, message, signature)
                if not sig_ok:
                    raise AuthFailure(f"transcript signature of node {partner} rejected")
            chan.broadcast(partner, t, "open", "post", payload=payload)
        else:
            chan.broadcast(verifier, t, "beacon", "post", payload=encode_value("b", k, 0))
        t += ctx.slot_s

    if n_post > 0:
        _open_or_raise(commitment, opening)
    _check_responses(ex, nonces, 0, cfg.bit_len)

    verified = cfg.auth_enabled and sig_ok
    estimates = [DbEstimate(
        measurer=verifier, target=partner, bound_m=ex.bound_m,
        method=METHOD_ACTIVE, rounds_used=cfg.n, verified_auth=verified,
    )]
    for w in observers:
        obs = passive_observations(ctx, ex, w)
        if not obs:
            continue
        bound = observed_bound(obs)
        estimates.append(DbEstimate(
            measurer=w, target=partner, bound_m=bound,
            method=METHOD_PASSIVE, rounds_used=len(obs), verified_auth=verified,
        ))
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)


def _run_relay_exchange(
    ctx: RunContext,
    verifier: NodeId,
    front: NodeId,
    victim: NodeId,
    nonces: Sequence[int],
    t_start: float,
    closing: bool,
) -> ExchangeResult:
    """Rapid rounds where the front forwards both directions verbatim.

    The front retransmits with zero turnaround, so each round trip costs
    the full detour verifier-front-victim and back; no schedule trick
    can make that shorter than the direct path.
    """
    cfg = ctx.scenario.config
    chan = ctx.channel
    alpha = cfg.alpha
    rounds: List[RoundRecord] = []
    nominal_sends: List[float] = []
    response_seqs: List[int] = []
    t_nominal = t_start
    t_end = t_start
    for i in range(1, cfg.n + 1):
        c_i = ctx.draw_bits(cfg.bit_len)
        ctx.next_send_index(verifier)
        ch = chan.broadcast(
            verifier, t_nominal, "challenge", "rapid",
            payload=encode_value("c", i, c_i), round_index=i,
        )
        nominal_sends.append(t_nominal)
        ctx.next_send_index(front)
        fwd = chan.broadcast(
            front, chan.arrival_true(ch.seq, front), "relay", "rapid",
            payload=ch.payload, round_index=i, after=ch.seq,
        )
        value = response_bits(c_i, nonces[i - 1], cfg.bit_len)
        ctx.next_send_index(victim)
        vr = chan.broadcast(
            victim, chan.arrival_true(fwd.seq, victim) + alpha, "response", "rapid",
            payload=encode_value("r", i, value), round_index=i, after=fwd.seq,
        )
        ctx.next_send_index(front)
        resp = chan.broadcast(
            front, chan.arrival_true(vr.seq, front), "response", "rapid",
            payload=vr.payload, round_index=i, after=vr.seq,
        )
        response_seqs.append(resp.seq)
        t_back = chan.arrival_true(resp.seq, verifier)
        rounds.append(RoundRecord(
            index=i, challenge=c_i, response=value,
            t_send=t_nominal + chan.offsets[verifier],
            t_recv=t_back + chan.offsets[verifier],
        ))
        t_nominal = t_back + alpha
        t_end = max(t_end, t_back)
    if closing:
        chan.broadcast(
            verifier, t_nominal, "closing", "rapid",
            payload=encode_value("x", cfg.n + 1, 0), round_index=cfg.n + 1,
        )
        nominal_sends.append(t_nominal)
    bound = max(active_distance(r.t_send, r.t_recv, alpha, cfg.c) for r in rounds)
    return ExchangeResult(
        verifier=verifier, prover=front, rounds=rounds,
        nominal_sends=nominal_sends, response_seqs=response_seqs,
        bound_m=bound, t_end=t_end,
    )


def one_way_guess_trial(
    rng: random.Random,
    n: int,
    bit_len: int = 1,
    distance_m: float = 30.0,
    advance_s: float = 2e-8,
) -> bool:
    """One round of the guessing game: does a blind early responder pass?

    The responder must answer every challenge before it arrives, so it
    wins only when all n independent guesses match.  Channel mechanics
    cannot change that probability, so the trial draws the bits
    directly; advance_s must actually buy distance for the fraud to
    count as a success.
    """
    if advance_s <= 0.0:
        return False
    from ..core import SPEED_OF_LIGHT

    shortened = distance_m - SPEED_OF_LIGHT * advance_s / 2.0
    if shortened >= distance_m:
        return False
    for _ in range(n):
        challenge = rng.getrandbits(bit_len)
        guess = rng.getrandbits(bit_len)
        if challenge != guess:
            return False
    return True


# ---------------------------------------------------------------------------
# mutual interleaved


def run_mutual_interleaved(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Both peers bound each other through one 2n+1 message chain.

    Message values alternate c_k XOR s_k (responder) and c_{k+1} XOR s_k
    (initiator), so every message both answers the newest foreign nonce
    and issues a fresh one.
    """
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    a, b = sorted(n.id for n in s.with_role(Role.PEER))
    a_nonces = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(cfg.n + 1))
    b_nonces = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(cfg.n))
    commit_a, open_a = commit(a_nonces, cfg.bit_len, ctx.rng)
    commit_b, open_b = commit(b_nonces, cfg.bit_len, ctx.rng)

    t = ctx.slot_s
    n_pre = cfg.pre_post_msgs - cfg.pre_post_msgs // 2
    n_post = cfg.pre_post_msgs // 2
    for k in range(n_pre):
        chan.broadcast(a, t, "commit" if k == 0 else "beacon", "pre",
                       payload=commit_a.digest if k == 0 else encode_value("b", k, 0))
        t += ctx.slot_s
        chan.broadcast(b, t, "commit" if k == 0 else "beacon", "pre",
                       payload=commit_b.digest if k == 0 else encode_value("b", k, 0))
        t += ctx.slot_s

    ex_a, ex_b = _interleaved_rapid(ctx, a, b, a_nonces, b_nonces, t)

    t = max(ex_a.t_end, ex_b.t_end) + ctx.slot_s
    for k in range(n_post):
        payload_a = open_a.blinding + encode_value("o", 0, 0)
        payload_b = open_b.blinding + encode_value("o", 0, 0)
        if cfg.auth_enabled and k == 0:
            payload_a += ctx.registry.sign(a, commit_a.digest)
            payload_b += ctx.registry.sign(b, commit_b.digest)
        chan.broadcast(a, t, "open" if k == 0 else "beacon", "post", payload=payload_a)
        t += ctx.slot_s
        chan.broadcast(b, t, "open" if k == 0 else "beacon", "post", payload=payload_b)
        t += ctx.slot_s

    if n_post > 0:
        _open_or_raise(commit_a, open_a)
        _open_or_raise(commit_b, open_b)
    _check_responses(ex_a, b_nonces, 0, cfg.bit_len)
    _check_responses(ex_b, a_nonces, 1, cfg.bit_len)

    estimates = [
        DbEstimate(measurer=a, target=b, bound_m=ex_a.bound_m,
                   method=METHOD_ACTIVE, rounds_used=cfg.n, verified_auth=False),
        DbEstimate(measurer=b, target=a, bound_m=ex_b.bound_m,
                   method=METHOD_ACTIVE, rounds_used=cfg.n, verified_auth=False),
    ]
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)


def _interleaved_rapid(
    ctx: RunContext,
    a: NodeId,
    b: NodeId,
    a_nonces: Sequence[int],
    b_nonces: Sequence[int],
    t_start: float,
) -> Tuple[ExchangeResult, ExchangeResult]:
    """The 2n+1 message chain; returns both directions' round records.

    The initiator a sends messages 1, 3, ..., 2n+1 and times b off each
    odd-even gap; b times a off each even-odd gap.
    """
    cfg = ctx.scenario.config
    chan = ctx.channel
    alpha = cfg.alpha
    rounds_a: List[RoundRecord] = []
    rounds_b: List[RoundRecord] = []

    def delayed(node: NodeId, measurer: NodeId) -> float:
        idx = ctx.next_send_index(node)
        pol = ctx.policy(node)
        if isinstance(pol, SelectiveDelay):
            return pol.delay_for(idx, measurer=measurer)
        return 0.0

    value = a_nonces[0]
    em = chan.broadcast(a, t_start + delayed(a, b), "challenge", "rapid",
                        payload=encode_value("m", 1, value), round_index=1)
    prev = em
    for k in range(1, cfg.n + 1):
        v_b = response_bits(a_nonces[k - 1], b_nonces[k - 1], cfg.bit_len)
        t_b = chan.arrival_true(prev.seq, b) + alpha + delayed(b, a)
        em_b = chan.broadcast(b, t_b, "response", "rapid",
                              payload=encode_value("m", 2 * k, v_b),
                              round_index=k, after=prev.seq)
        rounds_a.append(RoundRecord(
            index=k, challenge=a_nonces[k - 1], response=v_b,
            t_send=prev.t_send + chan.offsets[a],
            t_recv=chan.arrival_local(em_b.seq, a),
        ))
        v_a = response_bits(a_nonces[k], b_nonces[k - 1], cfg.bit_len)
        t_a = chan.arrival_true(em_b.seq, a) + alpha + delayed(a, b)
        em_a = chan.broadcast(a, t_a, "response", "rapid",
                              payload=encode_value("m", 2 * k + 1, v_a),
                              round_index=k, after=em_b.seq)
        rounds_b.append(RoundRecord(
            index=k, challenge=b_nonces[k - 1], response=v_a,
            t_send=em_b.t_send + chan.offsets[b],
            t_recv=chan.arrival_local(em_a.seq, b),
        ))
        prev = em_a

    t_last = prev.t_send + max(chan.tof(a, nid) for nid in chan.node_ids if nid != a)
    bound_a = max(active_distance(r.t_send, r.t_recv, alpha, cfg.c) for r in rounds_a)
    bound_b = max(active_distance(r.t_send, r.t_recv, alpha, cfg.c) for r in rounds_b)
    ex_a = ExchangeResult(verifier=a, prover=b, rounds=rounds_a, nominal_sends=[],
                          response_seqs=[], bound_m=bound_a, t_end=t_last)
    ex_b = ExchangeResult(verifier=b, prover=a, rounds=rounds_b, nominal_sends=[],
                          response_seqs=[], bound_m=bound_b, t_end=t_last)
    return ex_a, ex_b


# ---------------------------------------------------------------------------
# sequential baselines for group coverage


def run_sequential_pairwise(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Full mutual coverage of a peer group by one-way runs, both ways.

    Every unordered pair runs 2n rapid messages in each direction (4n
    per pair); each node commits once up front and opens once at the
    end.  This is the costliest coverage strategy and the yardstick the
    ring protocol is compared against.
    """
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    peers = sorted(n.id for n in s.with_role(Role.PEER))

    nonces: Dict[NodeId, Tuple[int, ...]] = {}
    commits: Dict[NodeId, Tuple[Commitment, Opening]] = {}
    t = ctx.slot_s
    need = cfg.n * (len(peers) - 1)
    for nid in peers:
        nonces[nid] = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(need))
        commits[nid] = commit(nonces[nid], cfg.bit_len, ctx.rng)
        chan.broadcast(nid, t, "commit", "pre", payload=commits[nid][0].digest)
        t += ctx.slot_s

    estimates: List[DbEstimate] = []
    used: Dict[NodeId, int] = {nid: 0 for nid in peers}
    for i, x in enumerate(peers):
        for y in peers[i + 1:]:
            for measurer, target in ((x, y), (y, x)):
                off = used[target]
                ex = run_exchange(
                    ctx, measurer, target, nonces[target], off, cfg.n,
                    t_start=t, closing=False,
                )
                used[target] += cfg.n
                _check_responses(ex, nonces[target], off, cfg.bit_len)
                estimates.append(DbEstimate(
                    measurer=measurer, target=target, bound_m=ex.bound_m,
                    method=METHOD_ACTIVE, rounds_used=cfg.n, verified_auth=False,
                ))
                t = ex.t_end + ctx.slot_s

    for nid in peers:
        chan.broadcast(nid, t, "open", "post",
                       payload=commits[nid][1].blinding + encode_value("o", 0, 0))
        t += ctx.slot_s
        _open_or_raise(*commits[nid])
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)


def run_sequential_interleaved(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Full mutual coverage by per-pair interleaved chains, 2n+1 each."""
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    peers = sorted(n.id for n in s.with_role(Role.PEER))

    per_initiations = cfg.n + 1
    per_responses = cfg.n
    t = ctx.slot_s
    nonce_pool: Dict[NodeId, List[int]] = {}
    commits: Dict[NodeId, Tuple[Commitment, Opening]] = {}
    for nid in peers:
        count = (len(peers) - 1) * max(per_initiations, per_responses)
        nonce_pool[nid] = [ctx.draw_bits(cfg.bit_len) for _ in range(count)]
        commits[nid] = commit(tuple(nonce_pool[nid]), cfg.bit_len, ctx.rng)
        chan.broadcast(nid, t, "commit", "pre", payload=commits[nid][0].digest)
        t += ctx.slot_s

    cursor: Dict[NodeId, int] = {nid: 0 for nid in peers}

    def take(nid: NodeId, k: int) -> Tuple[int, ...]:
        i = cursor[nid]
        cursor[nid] = i + k
        return tuple(nonce_pool[nid][i:i + k])

    estimates: List[DbEstimate] = []
    for i, x in enumerate(peers):
        for y in peers[i + 1:]:
            a_non = take(x, cfg.n + 1)
            b_non = take(y, cfg.n)
            ex_a, ex_b = _interleaved_rapid(ctx, x, y, a_non, b_non, t)
            _check_responses(ex_a, b_non, 0, cfg.bit_len)
            _check_responses(ex_b, a_non, 1, cfg.bit_len)
            estimates.append(DbEstimate(
                measurer=x, target=y, bound_m=ex_a.bound_m,
                method=METHOD_ACTIVE, rounds_used=cfg.n, verified_auth=False))
            estimates.append(DbEstimate(
                measurer=y, target=x, bound_m=ex_b.bound_m,
                method=METHOD_ACTIVE, rounds_used=cfg.n, verified_auth=False))
            t = max(ex_a.t_end, ex_b.t_end) + ctx.slot_s

    for nid in peers:
        chan.broadcast(nid, t, "open", "post",
                       payload=commits[nid][1].blinding + encode_value("o", 0, 0))
        t += ctx.slot_s
        _open_or_raise(*commits[nid])
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)
