#!/usr/bin/env python3
"""Probe the ring protocol's delay-attack detection boundary.

A node at ring position POS adds (first, second) send latencies each
round; colluders can be given a second position.  The cross-check
compares every observer pair's solved edge times.  The interesting
structure: a lone delayer shifting both its sends EQUALLY moves every
observer's estimate of the shared edges by the same amount, so the
cross-check stays silent; any asymmetry between the two sends splits
the views and is flagged.

Usage:
    python3 scripts/ring_delay_attack.py
    python3 scripts/ring_delay_attack.py --nodes 5 --delays-ns 0 10 25 50
"""
import argparse
import sys

from gdbsim.core import SPEED_OF_LIGHT
from gdbsim.proto.ring import run_ring_with_delays


def describe(result) -> str:
    rep = result.detection
    if rep.consistent:
        return "silent"
    worst = max(m.discrepancy_m for m in rep.mismatches)
    pairs = ", ".join(f"({m.node_a},{m.node_b})" for m in rep.mismatches)
    return f"flagged {pairs}, worst split {worst:.3f} m"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=4)
    ap.add_argument("--side-m", type=float, default=400.0)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--position", type=int, default=2,
                    help="0-based ring position of the delayer")
    ap.add_argument("--delays-ns", type=float, nargs="+",
                    default=[0.0, 10.0, 25.0, 50.0])
    args = ap.parse_args(argv)

    print(f"ring of {args.nodes}, side {args.side_m} m, delayer at position "
          f"{args.position}; one light-nanosecond is "
          f"{SPEED_OF_LIGHT * 1e-9:.3f} m\n")

    print("symmetric delay (both sends shifted alike):")
    for d in args.delays_ns:
        r = run_ring_with_delays(args.nodes, {args.position: (d * 1e-9, d * 1e-9)},
                                 seed=args.seed, side_m=args.side_m)
        print(f"  {d:>6.1f} ns -> {describe(r)}")

    print("asymmetric delay (first send only):")
    for d in args.delays_ns:
        r = run_ring_with_delays(args.nodes, {args.position: (d * 1e-9, 0.0)},
                                 seed=args.seed, side_m=args.side_m)
        print(f"  {d:>6.1f} ns -> {describe(r)}")

    print("two colluders (positions 2 and 3, mixed delays):")
    for d in args.delays_ns:
        delays = {2: (d * 1e-9, 2 * d * 1e-9), 3: (0.0, d * 1e-9)}
        r = run_ring_with_delays(args.nodes, delays, seed=args.seed,
                                 side_m=args.side_m)
        print(f"  {d:>6.1f} ns -> {describe(r)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
