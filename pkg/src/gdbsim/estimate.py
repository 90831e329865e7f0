"""Distance estimation from timing observations.

Two families live here.  The first turns a passive observer's three
overheard arrival times into distance bounds: an observer Vp that hears
an active verifier Va's challenge, the prover's response, and Va's
follow-up learns both Va's distance to the prover and the sum of the
two prover legs, and can bound (or with geometry, localize) the prover
without ever transmitting.  The second builds and solves the linear
system that recovers pairwise flight times from the rapid-phase
arrivals of a ring run, one observer at a time, so that independently
recovered edges can be cross-checked between observers.

Every estimator consumes local clock readings only and is offset-free
by construction: only differences of same-clock readings enter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import EPS_DIST, EPS_TIME, GdbSimError, NodeId, SPEED_OF_LIGHT

Point = Tuple[float, float]


class NegativeTimeOfFlight(GdbSimError):
    """Timestamps imply a signal arriving before it could have been sent."""


class NegativeBound(GdbSimError):
    """The overheard leg sum is shorter than the verifier-prover distance.

    No honest prover can produce this; it means the verifier understated
    its own round trip, e.g. by sending challenges ahead of schedule.
    """


class NoIntersection(GdbSimError):
    """The two location circles do not meet; observations are inconsistent."""


class SolveFailure(GdbSimError):
    """The time-of-flight system is rank deficient or inconsistent."""


class IncompleteCycle(SolveFailure):
    """An observer is missing arrivals from a rapid-phase round."""


# ---------------------------------------------------------------------------
# active round trip


def active_distance(
    t_sent: float, t_back: float, alpha_p: float, c: float = SPEED_OF_LIGHT
) -> float:
    """Round-trip distance bound measured by the challenger itself.

    t_sent and t_back are the challenger's own clock readings for
    challenge out and response in; alpha_p is the responder's known
    processing delay.
    """
    tof2 = (t_back - t_sent) - alpha_p
    if tof2 < -EPS_TIME:
        raise NegativeTimeOfFlight(
            f"round trip {t_back - t_sent!r} s shorter than processing {alpha_p!r} s"
        )
    return max(c * tof2 / 2.0, 0.0)


# ---------------------------------------------------------------------------
# passive observation of someone else's exchange


@dataclass(frozen=True)
class PassiveObservation:
    """Arrival times, on one observer's clock, of an overheard exchange.

    t1: the active verifier's challenge arrives at the observer.
    t2: the prover's response arrives.
    t3: the verifier's follow-up message (sent once the response reached
        it) arrives.
    alpha_p: prover processing between challenge in and response out.
    alpha_v: verifier processing between response in and follow-up out.
    d_verifier: known distance from the observer to the active verifier.
    """

    t1: float
    t2: float
    t3: float
    alpha_p: float
    alpha_v: float
    d_verifier: float
    c: float = SPEED_OF_LIGHT


def verifier_prover_distance(obs: PassiveObservation) -> float:
    """Distance between the active verifier and the prover.

    t3 - t1 spans challenge-out to follow-up-out plus one observer leg at
    each end; the observer legs cancel, leaving twice the verifier-prover
    flight plus the two processing delays.
    """
    tof2 = (obs.t3 - obs.t1) - obs.alpha_p - obs.alpha_v
    if tof2 < -EPS_TIME:
        raise NegativeTimeOfFlight(
            f"overheard round trip {obs.t3 - obs.t1!r} s shorter than processing"
        )
    return max(obs.c * tof2 / 2.0, 0.0)


def passive_gamma(obs: PassiveObservation) -> float:
    """Sum of the two prover legs: d(verifier, prover) + d(observer, prover).

    With delta1 = t2 - t1,

        c * delta1 = d_vp + c * alpha_p + d_op - d_verifier

    so gamma = c * (delta1 - alpha_p) + d_verifier.  The prover lies on
    the ellipse with foci at the two verifiers and leg sum gamma.
    """
    delta1 = obs.t2 - obs.t1
    gamma = obs.c * (delta1 - obs.alpha_p) + obs.d_verifier
    if gamma < 0.0:
        raise NegativeTimeOfFlight(f"negative leg sum {gamma!r} m")
    return gamma


def passive_bound_direct(obs: PassiveObservation) -> float:
    """Observer-prover bound: gamma minus the verifier-prover distance.

    Honest timings make this exactly the distance the observer would
    have measured actively.  A prover that shortens it must also have
    shortened the active verifier's own bound.
    """
    bound = passive_gamma(obs) - verifier_prover_distance(obs)
    if bound < -EPS_DIST:
        raise NegativeBound(
            f"leg sum falls {-bound!r} m short of the verifier-prover distance"
        )
    return max(bound, 0.0)


def passive_bound_annulus(obs: PassiveObservation) -> Tuple[float, float]:
    """Distance bounds when only the baseline, not positions, is known.

    The prover's distance from the observer focus of the gamma ellipse
    lies between the near and far vertices: ((gamma - d) / 2,
    (gamma + d) / 2) with d the verifier baseline.  The outer radius is
    the usable bound and never undercuts the direct one.
    """
    gamma = passive_gamma(obs)
    d = obs.d_verifier
    return ((gamma - d) / 2.0, (gamma + d) / 2.0)


def intersect_circles(
    center_a: Point, r_a: float, center_b: Point, r_b: float, eps: float = EPS_DIST
) -> List[Point]:
    """Intersection points of two circles, tangency collapsed to one point."""
    ax, ay = center_a
    bx, by = center_b
    d = float(np.hypot(bx - ax, by - ay))
    if d < eps:
        raise NoIntersection("concentric circles")
    if d > r_a + r_b + eps or d < abs(r_a - r_b) - eps:
        raise NoIntersection(
            f"circles (r={r_a}, r={r_b}) at separation {d} do not intersect"
        )
    a = (r_a * r_a - r_b * r_b + d * d) / (2.0 * d)
    h_sq = r_a * r_a - a * a
    h = float(np.sqrt(max(h_sq, 0.0)))
    mx = ax + a * (bx - ax) / d
    my = ay + a * (by - ay) / d
    ux = -(by - ay) / d
    uy = (bx - ax) / d
    if h <= eps:
        return [(mx, my)]
    return [(mx + h * ux, my + h * uy), (mx - h * ux, my - h * uy)]


def candidate_positions(
    obs: PassiveObservation, verifier_pos: Point, observer_pos: Point
) -> List[Point]:
    """Prover locations consistent with the observation.

    Intersects the circle around the active verifier (radius the
    recovered verifier-prover distance) with the gamma ellipse; on that
    ellipse the remaining leg is gamma minus the circle radius, so the
    ellipse is replaced by the equivalent circle around the observer.
    """
    d_vp = verifier_prover_distance(obs)
    gamma = passive_gamma(obs)
    return intersect_circles(verifier_pos, d_vp, observer_pos, gamma - d_vp)


# ---------------------------------------------------------------------------
# ring time-of-flight recovery


@dataclass(frozen=True)
class RingTiming:
    """Rapid-phase arrivals of one ring round as one observer saw them.

    ring: the agreed cyclic order of the N participants.
    observer: which participant's clock produced the stamps.
    arrivals: local arrival time of each message the observer received,
        keyed by the message's 1-based index in the round's send order.
        The observer's own sends are absent.
    alpha: per-hop processing delay, seconds.
    t_start_local: the observer's clock reading when it sent the round's
        first message, if the observer opened the round; None otherwise
        (the start instant is then an unknown of the system).
    """

    ring: Tuple[NodeId, ...]
    observer: NodeId
    arrivals: Mapping[int, float]
    alpha: float
    t_start_local: Optional[float] = None


def snake_order(ring: Sequence[NodeId]) -> List[NodeId]:
    """Sender sequence of one rapid round: around the ring and back.

    For ring (p1 .. pN) the 2N sends are p1, p2, ... pN, p1, pN, ... p2;
    message m is triggered by the arrival of message m-1 at its sender.
    """
    ring = list(ring)
    return ring + [ring[0]] + ring[:0:-1]


def snake_hops(ring: Sequence[NodeId]) -> List[Tuple[NodeId, NodeId]]:
    """The 2N - 1 directed hops (previous sender, next sender) of a round."""
    order = snake_order(ring)
    return list(zip(order[:-1], order[1:]))


def _edge_key(a: NodeId, b: NodeId) -> Tuple[NodeId, NodeId]:
    return (a, b) if a <= b else (b, a)


def ring_edges(ring: Sequence[NodeId]) -> List[Tuple[NodeId, NodeId]]:
    n = len(ring)
    return [_edge_key(ring[i], ring[(i + 1) % n]) for i in range(n)]


@dataclass
class TofSystem:
    """Linear system A x = b over unknown flight times.

    Unknowns are ("edge", (a, b)) flight times for the N ring edges plus
    the chords from non-adjacent senders to the observer, and one
    ("anchor", round) clock term per round whose start the observer did
    not stamp itself.
    """

    unknowns: List[Tuple[str, object]]
    rows: List[List[float]]
    rhs: List[float]

    def matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.rows, dtype=float), np.asarray(self.rhs, dtype=float)


def build_tof_system(rounds: Sequence[RingTiming]) -> TofSystem:
    """One equation per logged arrival, pooled over rounds.

    Message m of a round leaves its sender at

        t_start + (flight times of hops 1 .. m-1) + (m - 1) * alpha

    and reaches the observer one sender-to-observer flight later.  Hop
    flights are ring edges; the final leg is a ring edge when the sender
    neighbours the observer and a chord otherwise.  All stamps share the
    observer's clock, so each round contributes at most one anchor
    unknown for its start instant.
    """
    if not rounds:
        raise SolveFailure("no rounds to solve")
    ring = rounds[0].ring
    observer = rounds[0].observer
    for rt in rounds:
        if rt.ring != ring or rt.observer != observer:
            raise SolveFailure("rounds mix different rings or observers")
    if observer not in ring:
        raise SolveFailure(f"observer {observer} not on the ring")
    expected = 2 * len(ring) - 2
    for rt in rounds:
        if len(rt.arrivals) < expected:
            raise IncompleteCycle(
                f"round logged {len(rt.arrivals)} arrivals, cycle has {expected}"
            )

    unknowns: List[Tuple[str, object]] = []
    index: Dict[Tuple[str, object], int] = {}

    def register(key: Tuple[str, object]) -> int:
        if key not in index:
            index[key] = len(unknowns)
            unknowns.append(key)
        return index[key]

    edges = ring_edges(ring)
    for e in edges:
        register(("edge", e))
    edge_set = set(edges)
    for node in ring:
        if node != observer and _edge_key(node, observer) not in edge_set:
            register(("edge", _edge_key(node, observer)))
    anchor_col: List[Optional[int]] = []
    for ridx, rt in enumerate(rounds):
        anchor_col.append(register(("anchor", ridx)) if rt.t_start_local is None else None)

    width = len(unknowns)
    order = snake_order(ring)
    hops = snake_hops(ring)
    rows: List[List[float]] = []
    rhs: List[float] = []

    for ridx, rt in enumerate(rounds):
        anchor = anchor_col[ridx]
        for m, t_local in sorted(rt.arrivals.items()):
            if not 1 <= m <= len(order):
                raise SolveFailure(f"message index {m} outside round of {len(order)} sends")
            sender = order[m - 1]
            if sender == observer:
                raise SolveFailure(f"arrival logged for the observer's own send m={m}")
            row = [0.0] * width
            b = t_local - (m - 1) * rt.alpha
            if anchor is not None:
                row[anchor] = 1.0
            else:
                b -= rt.t_start_local  # type: ignore[operator]
            for h in range(m - 1):
                a_node, b_node = hops[h]
                row[index[("edge", _edge_key(a_node, b_node))]] += 1.0
            row[index[("edge", _edge_key(sender, observer))]] += 1.0
            rows.append(row)
            rhs.append(b)

    return TofSystem(unknowns=unknowns, rows=rows, rhs=rhs)


def gauss_solve(a: np.ndarray, b: np.ndarray, pivot_tol: float = 1e-12) -> np.ndarray:
    """Gauss-Jordan elimination with partial pivoting on a square system."""
    n = a.shape[0]
    m = np.hstack([a.astype(float).copy(), b.astype(float).reshape(-1, 1)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(m[col:, col])))
        if abs(m[piv, col]) < pivot_tol:
            raise SolveFailure(f"pivot {m[piv, col]!r} below tolerance at column {col}")
        if piv != col:
            m[[col, piv]] = m[[piv, col]]
        m[col] = m[col] / m[col, col]
        for r in range(n):
            if r != col and m[r, col] != 0.0:
                m[r] -= m[r, col] * m[col]
    return m[:, -1]


def solve_tof(
    system: TofSystem,
    pivot_tol: float = 1e-12,
    residual_tol: float = 1e-10,
) -> Dict[Tuple[str, object], float]:
    """Solve for flight times; raises SolveFailure when ill posed.

    Overdetermined systems go through the normal equations and are then
    checked against every original equation; a residual above
    residual_tol means the observations are mutually inconsistent.
    """
    a, b = system.matrix()
    if a.ndim != 2 or a.shape[0] == 0:
        raise SolveFailure("empty system")
    n_eq, n_unknown = a.shape
    if n_eq < n_unknown:
        raise SolveFailure(f"{n_eq} equations for {n_unknown} unknowns")
    if n_eq == n_unknown:
        x = gauss_solve(a, b, pivot_tol)
    else:
        x = gauss_solve(a.T @ a, a.T @ b, pivot_tol)
    residual = float(np.max(np.abs(a @ x - b)))
    if residual > residual_tol:
        raise SolveFailure(f"residual {residual} exceeds {residual_tol}")
    return {key: float(v) for key, v in zip(system.unknowns, x)}


def edge_times(solution: Mapping[Tuple[str, object], float]) -> Dict[Tuple[NodeId, NodeId], float]:
    """Just the edge unknowns of a solve, keyed by (low id, high id)."""
    return {key[1]: v for key, v in solution.items() if key[0] == "edge"}


def residual_of(system: TofSystem, solution: Mapping[Tuple[str, object], float]) -> float:
    a, b = system.matrix()
    x = np.array([solution[k] for k in system.unknowns])
    return float(np.max(np.abs(a @ x - b)))
