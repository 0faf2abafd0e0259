"""Next-hop selection: the priority-energy forwarding rule and two energy-blind baselines."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .energy import EnergyBand, eligible_priorities
from .reporting import NeighborEnergyView
from .topology import NodeId, NoPath, Topology, distances_to, shortest_delay_path


class ForwardingError(RuntimeError):
    """Decision requested in a state the engine should never produce."""


class Priority(enum.IntEnum):
    URGENT = 1
    HIGHLY_IMPORTANT = 2
    MODERATELY_IMPORTANT = 3
    LESS_IMPORTANT = 4


URGENCY_CLASSES = {
    "Urgent": Priority.URGENT,
    "HighlyImportant": Priority.HIGHLY_IMPORTANT,
    "ModeratelyImportant": Priority.MODERATELY_IMPORTANT,
    "LessImportant": Priority.LESS_IMPORTANT,
}

# A neighbour must sit strictly above this level to carry a packet of the priority.
PRIORITY_THRESHOLD = {1: 0.0, 2: 25.0, 3: 50.0, 4: 75.0}


def assign_priority(urgency_class: str) -> Priority:
    try:
        return URGENCY_CLASSES[urgency_class]
    except KeyError:
        raise ValueError(
            f"unknown urgency class {urgency_class!r}; expected one of {sorted(URGENCY_CLASSES)}"
        ) from None


def band_permits(band: EnergyBand, priority: int) -> bool:
    return priority in eligible_priorities(band)


class Policy(str, enum.Enum):
    PEDF = "pedf"
    ALWAYS_BEST_PATH = "best-path"
    ENERGY_AGNOSTIC_GREEDY = "greedy"

    @classmethod
    def parse(cls, text: str) -> "Policy":
        aliases = {"alwaysbestpath": cls.ALWAYS_BEST_PATH, "bestpath": cls.ALWAYS_BEST_PATH,
                   "energyagnosticgreedy": cls.ENERGY_AGNOSTIC_GREEDY}
        key = text.strip().lower()
        for p in cls:
            if p.value == key:
                return p
        try:
            return aliases[key.replace("-", "").replace("_", "")]
        except KeyError:
            raise ValueError(f"unknown policy {text!r}") from None


@dataclass(frozen=True)
class Packet:
    """A datagram. ``priority`` is the header field and is never rewritten in flight."""

    id: int
    src: NodeId
    dst: NodeId
    priority: int
    created_at: float = 0.0
    hop_trace: tuple[NodeId, ...] = ()
    retries_remaining: int = 3
    excluded: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.hop_trace:
            object.__setattr__(self, "hop_trace", (self.src,))
        elif self.hop_trace[0] != self.src:
            raise ForwardingError(f"packet {self.id}: hop trace must start at the source")
        if len(set(self.hop_trace)) != len(self.hop_trace):
            raise ForwardingError(f"packet {self.id}: hop trace revisits a node {self.hop_trace}")

    @property
    def at(self) -> NodeId:
        return self.hop_trace[-1]

    def advanced(self, nxt: NodeId) -> "Packet":
        return replace(self, hop_trace=self.hop_trace + (nxt,))


@dataclass(frozen=True)
class ForwardDecision:
    kind: str  # "forward" | "no_route" | "invalid_priority"
    next: Optional[NodeId] = None

    @property
    def is_forward(self) -> bool:
        return self.kind == "forward"

    def __str__(self):
        return f"forward:{self.next}" if self.is_forward else self.kind


def Forward(n: NodeId) -> ForwardDecision:
    return ForwardDecision("forward", n)


NO_ELIGIBLE_ROUTE = ForwardDecision("no_route")
INVALID_PRIORITY = ForwardDecision("invalid_priority")


def _check_head(node, pkt):
    if pkt.at != node:
        raise ForwardingError(f"node {node} deciding for packet {pkt.id} held by {pkt.at}")
    if node == pkt.dst:
        raise ForwardingError(f"packet {pkt.id} already at its destination")


def _blocked(pkt: Packet, dead) -> frozenset:
    return frozenset(pkt.hop_trace) | pkt.excluded | frozenset(dead)


def pedf_decide(
    node: NodeId,
    pkt: Packet,
    view: NeighborEnergyView,
    topo: Topology,
    dead=frozenset(),
) -> ForwardDecision:
    """Pick the delay-optimal neighbour whose reported band admits ``pkt.priority``.

    Candidates must be alive (not in ``dead``), unvisited, not excluded by an
    earlier refusal, and still have a path to the destination that avoids the
    visited, excluded and dead nodes. Cost is link delay plus that remaining
    path's delay; ties go to the smaller node id.
    """
    _check_head(node, pkt)
    p = pkt.priority
    if p not in PRIORITY_THRESHOLD:
        return INVALID_PRIORITY
    blocked = _blocked(pkt, dead)
    remaining = distances_to(topo, pkt.dst, blocked)
    best, best_cost = None, None
    for n, w in topo._adj[node]:
        if n in blocked or n not in remaining:
            continue
        if not band_permits(view.band(n), p):
            continue
        cost = w + remaining[n]
        if best_cost is None or cost < best_cost:
            best, best_cost = n, cost
    return NO_ELIGIBLE_ROUTE if best is None else Forward(best)


def baseline_decide(
    policy: Policy, node: NodeId, pkt: Packet, topo: Topology, dead=frozenset()
) -> ForwardDecision:
    """Energy-blind next hop. Only liveness, loop freedom and reachability are considered."""
    _check_head(node, pkt)
    blocked = _blocked(pkt, dead)
    if policy is Policy.ALWAYS_BEST_PATH:
        if pkt.dst in blocked:
            return NO_ELIGIBLE_ROUTE
        try:
            route = shortest_delay_path(topo, node, pkt.dst, blocked - {node})
        except NoPath:
            return NO_ELIGIBLE_ROUTE
        return Forward(route.hops[1])
    if policy is Policy.ENERGY_AGNOSTIC_GREEDY:
        remaining = distances_to(topo, pkt.dst, blocked)
        best, best_w = None, None
        for n, w in topo._adj[node]:
            if n in blocked or n not in remaining:
                continue
            if best_w is None or w < best_w:
                best, best_w = n, w
        return NO_ELIGIBLE_ROUTE if best is None else Forward(best)
    raise ValueError(f"{policy} is not a baseline policy")


@dataclass(frozen=True)
class RetransmissionOutcome:
    packet: Packet
    next: Optional[NodeId] = None
    drop_reason: Optional[str] = None

    @property
    def dropped(self) -> bool:
        return self.drop_reason is not None


UNDELIVERABLE = "Undeliverable"


def handle_no_route(
    prev: Optional[NodeId],
    pkt: Packet,
    decide: Callable[[NodeId, Packet], ForwardDecision],
) -> RetransmissionOutcome:
    """Bounce ``pkt`` from the refusing node (its trace head) back to ``prev``.

    ``prev`` spends one retry, marks the refusing node as excluded for this
    packet and decides again. ``prev=None`` means the source itself refused.
    """
    if prev is None or len(pkt.hop_trace) < 2:
        return RetransmissionOutcome(pkt, drop_reason=UNDELIVERABLE)
    refusing = pkt.hop_trace[-1]
    if pkt.hop_trace[-2] != prev:
        raise ForwardingError(f"packet {pkt.id}: {prev} did not forward to {refusing}")
    if pkt.retries_remaining <= 0:
        return RetransmissionOutcome(pkt, drop_reason=UNDELIVERABLE)
    bounced = replace(
        pkt,
        hop_trace=pkt.hop_trace[:-1],
        retries_remaining=pkt.retries_remaining - 1,
        excluded=pkt.excluded | {refusing},
    )
    decision = decide(prev, bounced)
    if decision.is_forward:
        return RetransmissionOutcome(bounced, next=decision.next)
    return RetransmissionOutcome(bounced, drop_reason=UNDELIVERABLE)
