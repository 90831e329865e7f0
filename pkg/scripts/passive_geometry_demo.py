#!/usr/bin/env python3
"""Walk through what a passive observer recovers from one exchange.

Runs a single one-way exchange with a listener, prints the three
arrival stamps, and compares every derived quantity (verifier-prover
distance, leg sum, direct bound, annulus, candidate positions) against
the planted geometry.  Optionally repeats the run with the verifier
sending challenges early, which is the one manipulation that shows up
as a shortened passive bound.

Usage:
    python3 scripts/passive_geometry_demo.py
    python3 scripts/passive_geometry_demo.py --advance-ns 30
    python3 scripts/passive_geometry_demo.py --advance-ns 200

A small advance shaves c*tau off the recovered bound; a large one
pushes the leg sum negative and the round is rejected outright, which
is itself the give-away.
"""
import argparse
import sys

from gdbsim.core import (
    NodeSpec,
    Protocol,
    ProtocolConfig,
    Role,
    SPEED_OF_LIGHT,
    Scenario,
    distance,
)
from gdbsim.estimate import (
    NegativeBound,
    NegativeTimeOfFlight,
    NoIntersection,
    candidate_positions,
    passive_bound_annulus,
    passive_bound_direct,
    passive_gamma,
    verifier_prover_distance,
)
from gdbsim.proto.base import start_run
from gdbsim.proto.pairwise import passive_observations, run_exchange
from gdbsim.threat import EarlyChallenge

V_POS = (0.0, 0.0)
P_POS = (7.0, -7.0)
O_POS = (0.0, 10.0)


def build(n, seed, verifier_policy=None):
    nodes = [
        NodeSpec(id=1, pos=V_POS, role=Role.ACTIVE_VERIFIER),
        NodeSpec(id=2, pos=P_POS, role=Role.PROVER),
        NodeSpec(id=9, pos=O_POS, role=Role.PASSIVE_VERIFIER),
    ]
    if verifier_policy is not None:
        nodes[0] = NodeSpec(id=1, pos=V_POS, role=Role.ACTIVE_VERIFIER,
                            policy=verifier_policy)
    return Scenario(nodes=tuple(nodes), protocol=Protocol.ONE_WAY,
                    config=ProtocolConfig(n=n), rng_seed=seed)


def observe(scenario, n):
    ctx = start_run(scenario)
    nonces = tuple(ctx.draw_bits(1) for _ in range(n))
    ex = run_exchange(ctx, 1, 2, nonces, 0, n, t_start=ctx.slot_s, closing=True)
    return passive_observations(ctx, ex, 9)


def report(obs_list):
    d_vp_true = distance(V_POS, P_POS)
    d_op_true = distance(O_POS, P_POS)
    for i, obs in enumerate(obs_list):
        print(f"round {i + 1}: stamps t1={obs.t1:.9f}  t2={obs.t2:.9f}  t3={obs.t3:.9f}")
        try:
            d_vp = verifier_prover_distance(obs)
            gamma = passive_gamma(obs)
            direct = passive_bound_direct(obs)
            inner, outer = passive_bound_annulus(obs)
            pts = candidate_positions(obs, V_POS, O_POS)
        except (NegativeTimeOfFlight, NegativeBound, NoIntersection) as exc:
            print(f"  round rejected: {exc}")
            print("  no prover position fits these stamps; a live run scores"
                  " the round as distance zero")
            continue
        print(f"  verifier-prover distance {d_vp:10.6f} m   (true {d_vp_true:.6f})")
        print(f"  prover leg sum           {gamma:10.6f} m")
        print(f"  observer-prover bound    {direct:10.6f} m   (true {d_op_true:.6f})")
        print(f"  annulus without position [{inner:.6f}, {outer:.6f}] m")
        spots = "  ".join(f"({x:+.6f}, {y:+.6f})" for x, y in pts)
        print(f"  candidate prover spots   {spots}")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=1)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--advance-ns", type=float, default=0.0,
                    help="also run with the verifier this many ns early")
    args = ap.parse_args(argv)

    print("honest exchange:")
    report(observe(build(args.rounds, args.seed), args.rounds))

    if args.advance_ns > 0:
        tau = args.advance_ns * 1e-9
        print(f"\nverifier {args.advance_ns:.0f} ns ahead of its published "
              f"schedule (shortens the bound by c*tau = "
              f"{SPEED_OF_LIGHT * tau:.3f} m):")
        rigged = build(args.rounds, args.seed,
                       verifier_policy=EarlyChallenge(advance_s=tau, pr_ch=1.0))
        report(observe(rigged, args.rounds))
    return 0


if __name__ == "__main__":
    sys.exit(main())
