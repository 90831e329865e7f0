"""Scenario model: arithmetic helpers, strict JSON I/O, semantic validation."""
import json

import pytest

from gdbsim.core import (
    ExperimentParams,
    NodeSpec,
    Protocol,
    ProtocolConfig,
    Role,
    Scenario,
    ScenarioFormatError,
    ScenarioInvalid,
    active_verifier_count,
    distance,
    ensure_valid,
    round_half_up,
    scenario_from_json,
    scenario_to_json,
    validate_scenario,
)
from gdbsim.threat import (
    EarlyChallenge,
    GuessAhead,
    NodeInsertion,
    Relay,
    SelectiveDelay,
)

from builders import mpnv_scenario, ntom_scenario, oneway_scenario, peer_scenario


def test_distance_345():
    assert distance((0.0, 0.0), (3.0, 4.0)) == 5.0
    assert distance((1.0, 1.0), (1.0, 1.0)) == 0.0


@pytest.mark.parametrize("x,expected", [
    (0.0, 0), (0.4, 0), (0.5, 1), (1.5, 2), (2.5, 3), (2.49, 2), (-0.5, 0), (-0.6, -1),
])
def test_round_half_up(x, expected):
    assert round_half_up(x) == expected


def test_active_verifier_count():
    assert active_verifier_count(0.0, 30) == 0
    assert active_verifier_count(1.0, 30) == 30
    assert active_verifier_count(0.8, 30) == 24
    assert active_verifier_count(0.5, 10) == 5
    # nearest-integer on the fraction, floor of one
    assert active_verifier_count(0.25, 10) == 3
    assert active_verifier_count(0.05, 4) == 1


# ---------------------------------------------------------------------------
# JSON round trip


def rich_scenario() -> Scenario:
    """One node of every role, several policies, experiment block."""
    nodes = (
        NodeSpec(id=1, pos=(0.0, 0.0), role=Role.ACTIVE_VERIFIER,
                 policy=EarlyChallenge(advance_s=1e-8, pr_ch=0.25)),
        NodeSpec(id=2, pos=(50.0, 0.0), role=Role.PROVER,
                 policy=SelectiveDelay(delay_s=1e-9, per_message=((0, 2e-9),), target=1)),
        NodeSpec(id=3, pos=(0.0, 80.0), role=Role.PASSIVE_VERIFIER),
        NodeSpec(id=4, pos=(30.0, 30.0), role=Role.PROVER, policy=GuessAhead(p_rounds=2)),
        NodeSpec(id=5, pos=(10.0, 70.0), role=Role.PROVER, has_cert=False,
                 policy=NodeInsertion()),
    )
    return Scenario(
        nodes=nodes, protocol=Protocol.MPNV,
        config=ProtocolConfig(n=4, bit_len=2, alpha=1e-6, pre_post_msgs=3),
        rng_seed=99,
        experiment=ExperimentParams(n_a=2, n_p=2, d_a=0.5, N=2, M=3),
    )


def test_scenario_round_trip():
    s = rich_scenario()
    doc = scenario_to_json(s)
    again = scenario_from_json(json.dumps(doc))
    assert again == s


def test_round_trip_preserves_policies():
    s = rich_scenario()
    again = scenario_from_json(scenario_to_json(s))
    assert again.node(2).policy == SelectiveDelay(
        delay_s=1e-9, per_message=((0, 2e-9),), target=1)
    assert again.node(5).has_cert is False


def minimal_doc() -> dict:
    return {
        "nodes": [
            {"id": 1, "pos": [0.0, 0.0], "role": "ActiveVerifier"},
            {"id": 2, "pos": [10.0, 0.0], "role": "Prover"},
        ],
        "protocol": "OneWayDB",
        "config": {"n": 2},
        "rng_seed": 7,
    }


def test_parse_minimal():
    s = scenario_from_json(minimal_doc())
    assert s.protocol is Protocol.ONE_WAY
    assert s.config.bit_len == 1 and s.config.pre_post_msgs == 2
    assert s.experiment is None


def test_parse_rejects_bad_json_text():
    with pytest.raises(ScenarioFormatError, match="invalid JSON"):
        scenario_from_json("{nope")


def test_parse_names_missing_key():
    doc = minimal_doc()
    del doc["rng_seed"]
    with pytest.raises(ScenarioFormatError, match="scenario.rng_seed"):
        scenario_from_json(doc)


def test_parse_names_extra_key():
    doc = minimal_doc()
    doc["config"]["fudge"] = 1
    with pytest.raises(ScenarioFormatError, match="unknown keys at config.*fudge"):
        scenario_from_json(doc)


def test_parse_names_bad_node_field():
    doc = minimal_doc()
    doc["nodes"][1]["pos"] = [1.0]
    with pytest.raises(ScenarioFormatError, match=r"nodes\[1\].pos"):
        scenario_from_json(doc)


def test_parse_rejects_unknown_protocol():
    doc = minimal_doc()
    doc["protocol"] = "Telepathy"
    with pytest.raises(ScenarioFormatError, match="Telepathy"):
        scenario_from_json(doc)


def test_parse_rejects_unknown_policy_kind():
    doc = minimal_doc()
    doc["nodes"][1]["policy"] = {"kind": "Bribe"}
    with pytest.raises(ScenarioFormatError, match=r"nodes\[1\].policy"):
        scenario_from_json(doc)


def test_parse_rejects_bool_where_int_expected():
    doc = minimal_doc()
    doc["config"]["n"] = True
    with pytest.raises(ScenarioFormatError, match="config.n"):
        scenario_from_json(doc)


# ---------------------------------------------------------------------------
# semantic validation


def issue_codes(s: Scenario):
    return {(i.code, i.fld) for i in validate_scenario(s)}


def test_valid_scenarios_have_no_issues():
    assert validate_scenario(oneway_scenario()) == []
    assert validate_scenario(peer_scenario(Protocol.MULTI_PARTY_RING, 4)) == []
    assert validate_scenario(mpnv_scenario(n=2, n_a=1, d_a=0.5,
                                           n_verifiers=3, m_provers=2)) == []
    assert validate_scenario(ntom_scenario(Protocol.NTOM_MULTIPARTY, 2, 2)) == []


def test_duplicate_node_id_flagged():
    s = oneway_scenario()
    s = Scenario(nodes=s.nodes + (s.nodes[0],), protocol=s.protocol,
                 config=s.config, rng_seed=s.rng_seed)
    assert ("DuplicateNodeId", "nodes") in issue_codes(s)


def test_shared_position_flagged():
    s = oneway_scenario(v_pos=(5.0, 5.0), p_pos=(5.0, 5.0))
    assert any(i.code == "ParamOutOfRange" and "share position" in i.message
               for i in validate_scenario(s))


def test_ring_needs_four_nodes():
    s = peer_scenario(Protocol.MULTI_PARTY_RING, 3)
    msgs = [str(i) for i in validate_scenario(s)]
    assert any("N must be >= 4 for MultiPartyRing" in m for m in msgs)


def test_oneway_rejects_two_plain_provers():
    extra = NodeSpec(id=3, pos=(40.0, 40.0), role=Role.PROVER)
    s = oneway_scenario(extra_nodes=[extra])
    assert ("RoleMismatch", "nodes") in issue_codes(s)


def test_oneway_allows_relay_pair():
    relay = NodeSpec(id=3, pos=(40.0, 40.0), role=Role.PROVER, policy=Relay(victim=2))
    s = oneway_scenario(extra_nodes=[relay])
    assert validate_scenario(s) == []


def test_mpnv_requires_experiment_params():
    s = mpnv_scenario(n=2, n_a=1, d_a=0.5, n_verifiers=3, m_provers=2)
    bare = Scenario(nodes=s.nodes, protocol=s.protocol, config=s.config,
                    rng_seed=s.rng_seed, experiment=None)
    assert any("experiment.n_a" in str(i) or i.fld == "experiment"
               for i in validate_scenario(bare))


def test_mpnv_rejects_out_of_range_fraction():
    s = mpnv_scenario(n=2, n_a=1, d_a=1.5, n_verifiers=3, m_provers=2)
    assert ("ParamOutOfRange", "experiment.d_a") in issue_codes(s)


def test_ntom_group_sizes_must_cover_nodes():
    s = ntom_scenario(Protocol.NTOM_MULTIPARTY, 2, 2)
    wrong = Scenario(nodes=s.nodes, protocol=s.protocol, config=s.config,
                     rng_seed=s.rng_seed,
                     experiment=ExperimentParams(N=3, M=3))
    assert any("N + M" in i.message for i in validate_scenario(wrong))


@pytest.mark.parametrize("role,policy", [
    (Role.ACTIVE_VERIFIER, GuessAhead(p_rounds=1)),
    (Role.PROVER, EarlyChallenge(advance_s=1e-9, pr_ch=0.5)),
    (Role.ACTIVE_VERIFIER, SelectiveDelay(delay_s=1e-9)),
])
def test_policy_role_mismatches_flagged(role, policy):
    nodes = (
        NodeSpec(id=1, pos=(0.0, 0.0), role=Role.ACTIVE_VERIFIER),
        NodeSpec(id=2, pos=(10.0, 0.0), role=Role.PROVER),
        NodeSpec(id=3, pos=(0.0, 10.0), role=role, policy=policy),
    )
    s = Scenario(nodes=nodes, protocol=Protocol.ONE_WAY,
                 config=ProtocolConfig(n=2), rng_seed=1)
    assert any(i.code == "PolicyInapplicable" for i in validate_scenario(s))


def test_relay_victim_must_be_another_node():
    bad = oneway_scenario(prover_policy=Relay(victim=2))  # points at itself
    assert any("another node" in i.message for i in validate_scenario(bad))


def test_guess_ahead_rounds_capped_by_n():
    s = oneway_scenario(n=2, prover_policy=GuessAhead(p_rounds=5))
    assert any("p_rounds exceeds round count" in i.message
               for i in validate_scenario(s))


def test_node_insertion_needs_missing_cert():
    s = oneway_scenario(prover_policy=NodeInsertion())
    assert any("has_cert" in i.message for i in validate_scenario(s))


def test_ensure_valid_raises_with_issue_text():
    s = peer_scenario(Protocol.MULTI_PARTY_RING, 3)
    with pytest.raises(ScenarioInvalid, match="N must be >= 4"):
        ensure_valid(s)
