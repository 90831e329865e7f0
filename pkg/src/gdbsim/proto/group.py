"""Group protocols built from shared one-way rapid rounds.

A fraction of the verifier group is drawn at random to run active
exchanges; everyone else prices the same exchanges passively from the
published schedule, trading rounds of their own for overheard ones.
The two-group variants either run that machinery in both directions,
share one joint ring, or chain per-verifier one-to-many runs.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, List, Mapping, Sequence, Tuple

from ..core import (
    NodeId,
    Protocol,
    Role,
    Scenario,
    active_verifier_count,
)
from ..crypto import Commitment, Opening, UnknownKey, commit
from .base import (
    AuthFailure,
    DbEstimate,
    METHOD_ACTIVE,
    METHOD_PASSIVE,
    NoActiveVerifier,
    RunContext,
    RunResult,
    encode_value,
    start_run,
)
from .onetomany import chain_estimates, check_chain_responses, run_chain
from .pairwise import (
    ExchangeResult,
    _check_responses,
    _open_or_raise,
    observed_bound,
    passive_observations,
    run_exchange,
)

# (bound_m, method, observation count) accumulated per measurer-target pair
_Candidate = Tuple[float, str, int]


def _select_actives(
    ctx: RunContext, pool: Sequence[NodeId], n_verifiers: int, d_a: float
) -> List[NodeId]:
    """Seeded draw of the verifiers that run active rounds this run."""
    want = active_verifier_count(d_a, n_verifiers)
    if want == 0 or not pool:
        raise NoActiveVerifier(
            f"active fraction {d_a} selects {want} of {len(pool)} eligible verifiers"
        )
    if want > len(pool):
        raise NoActiveVerifier(
            f"need {want} active verifiers but only {len(pool)} are eligible"
        )
    return sorted(ctx.rng.sample(sorted(pool), want))


def _oneway_group_phase(
    ctx: RunContext,
    watchers: Sequence[NodeId],
    pool: Sequence[NodeId],
    provers: Sequence[NodeId],
    n_a: int,
    d_a: float,
    nonces: Mapping[NodeId, Sequence[int]],
    cursors: Dict[NodeId, int],
    t: float,
) -> Tuple[List[NodeId], Dict[Tuple[NodeId, NodeId], List[_Candidate]], List[Tuple[ExchangeResult, NodeId, int]], float]:
    """Sequential active exchanges plus everyone's passive pricing.

    The closing emission after each exchange's last response is what
    lets listeners frame all n_a rounds; when every watcher is active
    for all n rounds nobody needs it and it is omitted, which collapses
    the run to the all-active baseline.
    """
    selected = _select_actives(ctx, pool, len(watchers), d_a)
    closing = not (n_a == ctx.scenario.config.n and len(selected) == len(watchers))
    candidates: Dict[Tuple[NodeId, NodeId], List[_Candidate]] = {}
    exchanges: List[Tuple[ExchangeResult, NodeId, int]] = []
    for v in selected:
        for p in provers:
            off = cursors[p]
            ex = run_exchange(ctx, v, p, nonces[p], off, n_a, t, closing)
            cursors[p] = off + n_a
            exchanges.append((ex, p, off))
            candidates.setdefault((v, p), []).append((ex.bound_m, METHOD_ACTIVE, n_a))
            for w in watchers:
                if w == v:
                    continue
                obs = passive_observations(ctx, ex, w)
                if obs:
                    candidates.setdefault((w, p), []).append(
                        (observed_bound(obs), METHOD_PASSIVE, len(obs))
                    )
            t = ex.t_end + ctx.slot_s
    return selected, candidates, exchanges, t


def _estimates_from_candidates(
    candidates: Mapping[Tuple[NodeId, NodeId], List[_Candidate]],
    verified: Mapping[NodeId, bool],
) -> List[DbEstimate]:
    """Conservative composite: the largest bound any source produced."""
    out: List[DbEstimate] = []
    for (w, p) in sorted(candidates):
        cands = candidates[(w, p)]
        bound = max(b for b, _, _ in cands)
        method = (
            METHOD_ACTIVE
            if any(m == METHOD_ACTIVE for _, m, _ in cands)
            else METHOD_PASSIVE
        )
        rounds = sum(k for _, _, k in cands)
        out.append(DbEstimate(
            measurer=w, target=p, bound_m=bound, method=method,
            rounds_used=rounds, verified_auth=verified.get(p, False),
        ))
    return out


def _open_and_sign(
    ctx: RunContext,
    owners: Sequence[NodeId],
    bundles: Mapping[NodeId, Tuple[Commitment, Opening]],
    t: float,
) -> Tuple[Dict[NodeId, bool], float]:
    """Decommit phase; owners sign their openings when auth is on."""
    cfg = ctx.scenario.config
    verified: Dict[NodeId, bool] = {}
    for nid in owners:
        payload = bundles[nid][1].blinding + encode_value("o", 0, 0)
        if cfg.auth_enabled:
            try:
                sig = ctx.registry.sign(nid, bundles[nid][0].digest)
            except UnknownKey as exc:
                raise AuthFailure(f"node {nid} presented no registered key") from exc
            if not ctx.registry.verify(nid, bundles[nid][0].digest, sig):
                raise AuthFailure(f"opening signature of node {nid} rejected")
            payload += sig
            verified[nid] = True
        else:
            verified[nid] = False
        ctx.channel.broadcast(nid, t, "open", "post", payload=payload)
        t += ctx.slot_s
        _open_or_raise(*bundles[nid])
    return verified, t


def run_mpnv(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Many verifiers bound many provers, most of them by listening.

    Each selected verifier runs n_a rounds against every prover; every
    other verifier converts the overheard rounds into passive bounds.
    With the full group active for all n rounds this is exactly the
    2nNM all-active baseline.
    """
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    pool = sorted(n.id for n in s.with_role(Role.ACTIVE_VERIFIER))
    watchers = sorted(n.id for n in s.verifiers())
    provers = sorted(n.id for n in s.with_role(Role.PROVER))
    exp = s.experiment
    n_a = exp.n_a
    d_a = exp.d_a

    a_count = active_verifier_count(d_a, len(watchers))
    nonces: Dict[NodeId, Tuple[int, ...]] = {}
    bundles: Dict[NodeId, Tuple[Commitment, Opening]] = {}
    for p in provers:
        nonces[p] = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(a_count * n_a))
        bundles[p] = commit(nonces[p], cfg.bit_len, ctx.rng)

    t = ctx.slot_s
    for p in provers:
        chan.broadcast(p, t, "commit", "pre", payload=bundles[p][0].digest)
        t += ctx.slot_s

    cursors = {p: 0 for p in provers}
    _, candidates, exchanges, t = _oneway_group_phase(
        ctx, watchers, pool, provers, n_a, d_a, nonces, cursors, t
    )

    verified, t = _open_and_sign(ctx, provers, bundles, t)
    for ex, p, off in exchanges:
        _check_responses(ex, nonces[p], off, cfg.bit_len)

    estimates = _estimates_from_candidates(candidates, verified)
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)


def ntom_groups(scenario: Scenario) -> Tuple[List[NodeId], List[NodeId]]:
    """Split the peers into the two declared groups by sorted id."""
    peers = sorted(n.id for n in scenario.with_role(Role.PEER))
    n_first = scenario.experiment.N
    return peers[:n_first], peers[n_first:]


def run_ntom(scenario: Scenario, zero_offsets: bool = False) -> RunResult:
    """Group-to-group mutual bounding, three strategies.

    passive: each group runs a one-way listening phase against the
    other, so no intra-group bounds exist to waste messages on.
    multiparty: one joint ring over both groups; the intra-group bounds
    it cannot help producing are marked surplus.
    onetomany: every member of the first group drives a chain over the
    second group.
    """
    if scenario.protocol == Protocol.NTOM_MULTIPARTY:
        from .ring import run_multiparty_gdb

        result = run_multiparty_gdb(scenario, zero_offsets)
        g1 = set(ntom_groups(scenario)[0])
        result.estimates = [
            replace(est, surplus=True)
            if (est.measurer in g1) == (est.target in g1)
            else est
            for est in result.estimates
        ]
        return result
    if scenario.protocol == Protocol.NTOM_PASSIVE:
        return _run_ntom_passive(scenario, zero_offsets)
    return _run_ntom_onetomany(scenario, zero_offsets)


def _run_ntom_passive(scenario: Scenario, zero_offsets: bool) -> RunResult:
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    g1, g2 = ntom_groups(s)
    exp = s.experiment

    a1 = active_verifier_count(exp.d_1, len(g1))
    a2 = active_verifier_count(exp.d_2, len(g2))
    nonces: Dict[NodeId, Tuple[int, ...]] = {}
    bundles: Dict[NodeId, Tuple[Commitment, Opening]] = {}
    for p in g2:
        nonces[p] = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(a1 * exp.n_a1))
    for p in g1:
        nonces[p] = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(a2 * exp.n_a2))
    t = ctx.slot_s
    for nid in (*g1, *g2):
        bundles[nid] = commit(nonces[nid], cfg.bit_len, ctx.rng)
        chan.broadcast(nid, t, "commit", "pre", payload=bundles[nid][0].digest)
        t += ctx.slot_s

    cursors = {nid: 0 for nid in (*g1, *g2)}
    _, cand1, ex1, t = _oneway_group_phase(
        ctx, g1, g1, g2, exp.n_a1, exp.d_1, nonces, cursors, t
    )
    _, cand2, ex2, t = _oneway_group_phase(
        ctx, g2, g2, g1, exp.n_a2, exp.d_2, nonces, cursors, t
    )

    verified, t = _open_and_sign(ctx, [*g1, *g2], bundles, t)
    for ex, p, off in ex1 + ex2:
        _check_responses(ex, nonces[p], off, cfg.bit_len)

    candidates = dict(cand1)
    candidates.update(cand2)
    estimates = _estimates_from_candidates(candidates, verified)
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)


def _run_ntom_onetomany(scenario: Scenario, zero_offsets: bool) -> RunResult:
    ctx = start_run(scenario, zero_offsets)
    s = scenario
    cfg = s.config
    chan = ctx.channel
    g1, g2 = ntom_groups(s)
    n = cfg.n
    m = len(g2)

    nonces: Dict[NodeId, Tuple[int, ...]] = {}
    bundles: Dict[NodeId, Tuple[Commitment, Opening]] = {}
    for v in g1:
        nonces[v] = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(n * (m + 1)))
    for p in g2:
        nonces[p] = tuple(ctx.draw_bits(cfg.bit_len) for _ in range(n * len(g1)))
    t = ctx.slot_s
    for nid in (*g1, *g2):
        bundles[nid] = commit(nonces[nid], cfg.bit_len, ctx.rng)
        chan.broadcast(nid, t, "commit", "pre", payload=bundles[nid][0].digest)
        t += ctx.slot_s

    cursors = {p: 0 for p in g2}
    estimates: List[DbEstimate] = []
    checks: List[Tuple[Dict[NodeId, List], Dict[NodeId, int]]] = []
    for v in g1:
        snapshot = dict(cursors)
        v_rounds, p_rounds, t_end = run_chain(
            ctx, v, g2, n, nonces[v], 0, nonces, snapshot, t
        )
        checks.append((v_rounds, snapshot))
        estimates.extend(chain_estimates(v, g2, v_rounds, p_rounds, cfg.alpha, cfg.c))
        for p in g2:
            cursors[p] += n
        t = t_end + ctx.slot_s

    verified, t = _open_and_sign(ctx, [*g1, *g2], bundles, t)
    for v_rounds, snapshot in checks:
        check_chain_responses(v_rounds, nonces, snapshot, cfg.bit_len)
    return RunResult(scenario=s, trace=chan.trace, estimates=estimates)
