"""End-to-end protocol drivers: message counts, bound accuracy, attacks."""
import dataclasses

import pytest

from gdbsim.core import (
    GdbSimError,
    NodeSpec,
    Protocol,
    Role,
    SPEED_OF_LIGHT,
    distance,
)
from gdbsim.proto.base import ResponseMismatch
from gdbsim.proto.ring import regular_ring_scenario, run_ring_with_delays
from gdbsim.proto.runner import run_scenario
from gdbsim.threat import (
    EarlyChallenge,
    FakeLocationReport,
    GuessAhead,
    NodeInsertion,
    Relay,
    SelectiveDelay,
)

from builders import mpnv_scenario, ntom_scenario, oneway_scenario, peer_scenario

C = SPEED_OF_LIGHT


def with_policy(scenario, node_id, policy, **extra):
    nodes = tuple(
        dataclasses.replace(n, policy=policy, **extra) if n.id == node_id else n
        for n in scenario.nodes
    )
    return dataclasses.replace(scenario, nodes=nodes)


# ---------------------------------------------------------------------------
# message counts


def test_oneway_counts():
    r = run_scenario(oneway_scenario(n=10, seed=4))
    assert r.trace.count(phase="rapid") == 20          # 2n
    assert r.trace.count() == 22                       # plus commit and open


def test_oneway_observer_adds_one_closing_message():
    r = run_scenario(oneway_scenario(n=10, seed=4, observer_pos=(30.0, 60.0)))
    assert r.trace.count(phase="rapid") == 21          # 2n + 1


def test_mutual_interleaved_counts():
    r = run_scenario(peer_scenario(Protocol.MUTUAL_INTERLEAVED, 2, n=12, radius=100.0))
    assert r.trace.count(phase="rapid") == 25          # 2n + 1


def test_one_to_many_counts():
    # n (2M + 1) rapid messages for the whole group
    r = run_scenario(peer_scenario(Protocol.ONE_TO_MANY, 4, n=2))
    assert r.trace.count(phase="rapid") == 14
    assert len(r.estimates) == 6                       # both directions, 3 responders


def test_ring_counts():
    r = run_scenario(regular_ring_scenario(4, 400.0, seed=21))
    assert r.trace.count(phase="rapid") == 8           # 2 sends per node per round
    assert len(r.estimates) == 12                      # 4 observers x 3 known edges


def test_mpnv_counts_partial_and_degenerate():
    r = run_scenario(mpnv_scenario(n=2, n_a=1, d_a=0.5, n_verifiers=3, m_provers=2))
    assert r.trace.count(phase="rapid") == 12          # (2 n_a + 1) a M, a = 2
    full = run_scenario(mpnv_scenario(n=2, n_a=2, d_a=1.0, n_verifiers=3, m_provers=2))
    assert full.trace.count(phase="rapid") == 24       # closing dropped: 2 n N M


def test_ntom_counts():
    mp = run_scenario(ntom_scenario(Protocol.NTOM_MULTIPARTY, 2, 2, n=1))
    assert mp.trace.count(phase="rapid") == 8          # 2 n (N + M)
    chain = run_scenario(ntom_scenario(Protocol.NTOM_ONETOMANY, 2, 3, n=2))
    assert chain.trace.count(phase="rapid") == 28      # N n (2M + 1)
    passive = run_scenario(ntom_scenario(
        Protocol.NTOM_PASSIVE, 3, 3, n=2, n_a1=1, n_a2=2, d_1=0.5, d_2=1.0,
        n_p1=1, n_p2=0))
    assert passive.trace.count(phase="rapid") == 54    # phase sums with closings


# ---------------------------------------------------------------------------
# honest accuracy


def test_oneway_bound_is_true_distance():
    r = run_scenario(oneway_scenario(n=3))
    est = r.estimate_for(1, 2)
    assert est.bound_m == pytest.approx(90.0, abs=1e-6)
    assert est.method == "active" and est.rounds_used == 3


def test_passive_observer_matches_its_own_geometry():
    s = oneway_scenario(n=3, observer_pos=(30.0, 60.0))
    r = run_scenario(s)
    est = r.estimate_for(9, 2)
    truth = distance((30.0, 60.0), (90.0, 0.0))
    assert est.bound_m == pytest.approx(truth, abs=1e-6)
    assert est.method == "passive"


def test_clock_offsets_do_not_leak_into_bounds():
    # offsets of ~0.5 s against ~1e-7 s flights cost a few 1e-9 m to
    # float cancellation; anything beyond EPS_DIST would be a real leak
    s = oneway_scenario(n=3, observer_pos=(30.0, 60.0))
    seeded = run_scenario(s)
    flat = run_scenario(s, zero_offsets=True)
    for a, b in zip(seeded.estimates, flat.estimates):
        assert a.bound_m == pytest.approx(b.bound_m, abs=1e-6)


def test_mutual_bounds_both_directions():
    s = peer_scenario(Protocol.MUTUAL_INTERLEAVED, 2, n=4, radius=100.0)
    truth = distance(s.nodes[0].pos, s.nodes[1].pos)
    r = run_scenario(s)
    assert r.estimate_for(1, 2).bound_m == pytest.approx(truth, abs=1e-6)
    assert r.estimate_for(2, 1).bound_m == pytest.approx(truth, abs=1e-6)


def test_chain_bounds_match_geometry():
    s = peer_scenario(Protocol.ONE_TO_MANY, 4, n=2)
    pos = s.positions()
    r = run_scenario(s)
    for est in r.estimates:
        assert est.bound_m == pytest.approx(
            distance(pos[est.measurer], pos[est.target]), abs=1e-6)


def test_ring_every_observer_agrees_with_geometry():
    s = regular_ring_scenario(5, 300.0, seed=2)
    pos = s.positions()
    r = run_scenario(s)
    assert r.detection is not None and r.detection.consistent
    for est in r.estimates:
        assert est.bound_m == pytest.approx(
            distance(pos[est.measurer], pos[est.target]), abs=1e-5)
    # per-observer solved edges exposed for audit
    assert set(r.ring_solutions) == {1, 2, 3, 4, 5}


def test_ring_order_is_seed_stable():
    a = run_scenario(regular_ring_scenario(4, 400.0, seed=21)).ring_order
    b = run_scenario(regular_ring_scenario(4, 400.0, seed=21)).ring_order
    assert a == b and set(a) == {1, 2, 3, 4}


def test_mpnv_passive_watchers_cover_all_pairs():
    s = mpnv_scenario(n=2, n_a=1, d_a=0.5, n_verifiers=3, m_provers=2)
    pos = s.positions()
    r = run_scenario(s)
    pairs = {(e.measurer, e.target) for e in r.estimates}
    # every verifier ends with a bound on every prover
    assert pairs == {(v, p) for v in (1, 2, 3) for p in (4, 5)}
    for est in r.estimates:
        assert est.bound_m == pytest.approx(
            distance(pos[est.measurer], pos[est.target]), abs=1e-5)


def test_ntom_multiparty_marks_intra_group_bounds_surplus():
    r = run_scenario(ntom_scenario(Protocol.NTOM_MULTIPARTY, 2, 2, n=1))
    surplus = {(e.measurer, e.target) for e in r.estimates if e.surplus}
    wanted = {(e.measurer, e.target) for e in r.estimates if not e.surplus}
    assert surplus == {(1, 2), (2, 1), (3, 4), (4, 3)}
    assert wanted == {(a, b) for a in (1, 2) for b in (3, 4)} | \
                     {(b, a) for a in (1, 2) for b in (3, 4)}


def test_ntom_passive_produces_only_cross_group_bounds():
    r = run_scenario(ntom_scenario(
        Protocol.NTOM_PASSIVE, 3, 3, n=2, n_a1=1, n_a2=2, d_1=0.5, d_2=1.0,
        n_p1=1, n_p2=0))
    g1, g2 = {1, 2, 3}, {4, 5, 6}
    pairs = {(e.measurer, e.target) for e in r.estimates}
    assert pairs == {(a, b) for a in g1 for b in g2} | {(b, a) for a in g1 for b in g2}
    pos = r.scenario.positions()
    for est in r.estimates:
        assert est.bound_m == pytest.approx(
            distance(pos[est.measurer], pos[est.target]), abs=1e-5)


def test_identical_seed_identical_run():
    s = mpnv_scenario(n=2, n_a=1, d_a=0.5, n_verifiers=3, m_provers=2)
    assert run_scenario(s).trace.to_jsonl() == run_scenario(s).trace.to_jsonl()


# ---------------------------------------------------------------------------
# adversaries end to end


def test_delaying_prover_inflates_bound():
    delay = 2e-7
    r = run_scenario(oneway_scenario(n=2, prover_policy=SelectiveDelay(delay_s=delay)))
    assert r.estimate_for(1, 2).bound_m == pytest.approx(90.0 + C * delay / 2.0, abs=1e-6)


def test_delay_cannot_shorten():
    honest = run_scenario(oneway_scenario(n=2)).estimate_for(1, 2).bound_m
    for delay in (1e-9, 5e-8, 3e-7):
        r = run_scenario(oneway_scenario(n=2, prover_policy=SelectiveDelay(delay_s=delay)))
        assert r.estimate_for(1, 2).bound_m >= honest - 1e-6


def test_relay_pays_the_detour():
    relay = NodeSpec(id=3, pos=(50.0, 40.0), role=Role.PROVER, policy=Relay(victim=2))
    s = oneway_scenario(p_pos=(200.0, 0.0), n=3, extra_nodes=[relay])
    r = run_scenario(s)
    pos = s.positions()
    detour = distance(pos[1], pos[3]) + distance(pos[3], pos[2])
    # the verifier believes it measured the front, and the bound carries
    # the full two-leg path, so the victim's distance is never understated
    est = r.estimate_for(1, 3)
    assert est.bound_m == pytest.approx(detour, abs=1e-6)
    assert est.bound_m > distance(pos[1], pos[2])


def test_guess_ahead_usually_caught():
    s = oneway_scenario(n=2, seed=0, prover_policy=GuessAhead(p_rounds=2, advance_s=2e-7))
    with pytest.raises(ResponseMismatch):
        run_scenario(s)


def test_guess_ahead_lucky_seed_shortens_bound():
    """A fraudster that wins its coin flips beats the true distance; the
    per-run risk assessment is what bounds how often that happens."""
    s = oneway_scenario(n=2, seed=3, prover_policy=GuessAhead(p_rounds=2, advance_s=2e-7))
    r = run_scenario(s)
    bound = r.estimate_for(1, 2).bound_m
    assert bound == pytest.approx(90.0 - C * 2e-7 / 2.0, abs=1e-6)
    assert bound < 90.0


def test_early_challenge_shrinks_passive_bounds_only():
    advance = 2e-7
    s = oneway_scenario(n=4, seed=6, observer_pos=(30.0, 60.0))
    honest = run_scenario(s)
    rigged = run_scenario(with_policy(s, 1, EarlyChallenge(advance_s=advance, pr_ch=1.0)))
    h = honest.estimate_for(9, 2).bound_m
    a = rigged.estimate_for(9, 2).bound_m
    assert a == pytest.approx(h - C * advance, abs=1e-6)
    # the verifier's own active bound is untouched
    assert rigged.estimate_for(1, 2).bound_m == pytest.approx(90.0, abs=1e-6)


def test_fake_baseline_shifts_passive_bound_by_the_lie():
    s = oneway_scenario(n=4, seed=6, observer_pos=(30.0, 60.0))
    d_vo = distance((0.0, 0.0), (30.0, 60.0))
    rigged = run_scenario(with_policy(
        s, 1, FakeLocationReport(claimed_distance_m=d_vo + 8.0)))
    honest = run_scenario(s)
    assert rigged.estimate_for(9, 2).bound_m == pytest.approx(
        honest.estimate_for(9, 2).bound_m + 8.0, abs=1e-6)


def test_uncertified_node_cannot_sign():
    s = oneway_scenario(n=2, auth=True)
    s = with_policy(s, 2, NodeInsertion(), has_cert=False)
    with pytest.raises(GdbSimError):
        run_scenario(s)


def test_ring_lone_asymmetric_delayer_detected():
    r = run_ring_with_delays(n_nodes=4, delays={2: (5e-8, 0.0)}, seed=7)
    assert not r.detection.consistent
    worst = max(m.discrepancy_m for m in r.detection.mismatches)
    # the two views of the shared edge split by the full c * delta
    assert worst == pytest.approx(C * 5e-8, abs=1e-3)


def test_ring_symmetric_delayer_cancels_in_the_solve():
    """Equal delay on both of a node's sends shifts every observer's
    estimate of the shared edges identically, so no cross-check fires."""
    r = run_ring_with_delays(n_nodes=4, delays={2: (5e-8, 5e-8)}, seed=7)
    assert r.detection.consistent
