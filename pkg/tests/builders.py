"""Scenario builders shared across the test modules."""
import math
from typing import Optional, Sequence, Tuple

from gdbsim.core import (
    ExperimentParams,
    NodeSpec,
    Protocol,
    ProtocolConfig,
    Role,
    Scenario,
)
from gdbsim.threat import Honest


def on_circle(k: int, count: int, radius: float,
              center: Tuple[float, float] = (0.0, 0.0),
              phase: float = 0.0) -> Tuple[float, float]:
    a = 2.0 * math.pi * (k + phase) / count
    return (center[0] + radius * math.cos(a), center[1] + radius * math.sin(a))


def oneway_scenario(
    v_pos: Tuple[float, float] = (0.0, 0.0),
    p_pos: Tuple[float, float] = (90.0, 0.0),
    n: int = 2,
    seed: int = 3,
    alpha: float = 0.0,
    observer_pos: Optional[Tuple[float, float]] = None,
    prover_policy: object = None,
    extra_nodes: Sequence[NodeSpec] = (),
    bit_len: int = 1,
    auth: bool = False,
) -> Scenario:
    """Verifier id 1, prover id 2, optional passive observer id 9."""
    nodes = [
        NodeSpec(id=1, pos=v_pos, role=Role.ACTIVE_VERIFIER),
        NodeSpec(id=2, pos=p_pos, role=Role.PROVER,
                 policy=prover_policy if prover_policy is not None else Honest()),
    ]
    nodes.extend(extra_nodes)
    if observer_pos is not None:
        nodes.append(NodeSpec(id=9, pos=observer_pos, role=Role.PASSIVE_VERIFIER))
    return Scenario(
        nodes=tuple(nodes), protocol=Protocol.ONE_WAY,
        config=ProtocolConfig(n=n, bit_len=bit_len, alpha=alpha, auth_enabled=auth),
        rng_seed=seed,
    )


def peer_scenario(
    protocol: Protocol,
    count: int,
    n: int = 1,
    seed: int = 5,
    radius: float = 200.0,
    experiment: Optional[ExperimentParams] = None,
) -> Scenario:
    nodes = tuple(
        NodeSpec(id=i + 1, pos=on_circle(i, count, radius), role=Role.PEER)
        for i in range(count)
    )
    return Scenario(nodes=nodes, protocol=protocol, config=ProtocolConfig(n=n),
                    experiment=experiment, rng_seed=seed)


def mpnv_scenario(n: int, n_a: int, d_a: float, n_verifiers: int,
                  m_provers: int, seed: int = 11) -> Scenario:
    nodes = []
    nid = 1
    for k in range(n_verifiers):
        nodes.append(NodeSpec(id=nid, pos=on_circle(k, n_verifiers, 150.0),
                              role=Role.ACTIVE_VERIFIER))
        nid += 1
    for k in range(m_provers):
        nodes.append(NodeSpec(id=nid, pos=on_circle(k, m_provers, 60.0, phase=0.5),
                              role=Role.PROVER))
        nid += 1
    return Scenario(
        nodes=tuple(nodes), protocol=Protocol.MPNV, config=ProtocolConfig(n=n),
        experiment=ExperimentParams(n_a=n_a, n_p=n - n_a, d_a=d_a,
                                    N=n_verifiers, M=m_provers),
        rng_seed=seed,
    )


def ntom_scenario(protocol: Protocol, size_n: int, size_m: int, n: int = 1,
                  seed: int = 13, **experiment_extra) -> Scenario:
    exp = ExperimentParams(N=size_n, M=size_m, **experiment_extra)
    return peer_scenario(protocol, size_n + size_m, n=n, seed=seed, experiment=exp)
