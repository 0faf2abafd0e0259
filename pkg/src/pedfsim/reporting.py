"""Power-status reporting: threshold-triggered band notices and per-node neighbour views."""

from __future__ import annotations

from dataclasses import dataclass, field

from .energy import EnergyBand, EnergyParams, EnergyState, ThresholdCrossing, consume
from .topology import NodeId, Topology


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class ReportMessage:
    sender: NodeId
    receiver: NodeId
    reported_band: EnergyBand
    sent_at: float  # ms
    seq: int = 0  # per-sender counter, orders messages sent at the same instant


@dataclass(frozen=True)
class ViewEntry:
    band: EnergyBand
    last_updated: float
    sent_at: float = float("-inf")
    seq: int = -1

    @property
    def origin(self):
        return (self.sent_at, self.seq)


@dataclass
class NeighborEnergyView:
    """What ``owner`` believes about the band of each of its neighbours."""

    owner: NodeId
    entries: dict[NodeId, ViewEntry] = field(default_factory=dict)

    @classmethod
    def initial(cls, topo: Topology, owner: NodeId, bands=None) -> "NeighborEnergyView":
        """Fresh view; every neighbour starts at CASE_IV unless ``bands`` says otherwise."""
        bands = bands or {}
        entries = {
            n: ViewEntry(bands.get(n, EnergyBand.CASE_IV), 0.0)
            for n, _ in topo._adj[owner]
        }
        return cls(owner, entries)

    def band(self, node: NodeId) -> EnergyBand:
        return self.entries[node].band

    def copy(self) -> "NeighborEnergyView":
        return NeighborEnergyView(self.owner, dict(self.entries))


def recipients(topo: Topology, node: NodeId) -> list[NodeId]:
    """Nodes holding ``node`` in their neighbour set, i.e. those with a link into it."""
    return [u for u, _ in topo._radj[node]]


@dataclass
class ReportRound:
    state: EnergyState
    messages: list[ReportMessage]
    crossings: list[ThresholdCrossing]  # caused by the report traffic itself


def report_round(
    node: NodeId,
    clock: float,
    topo: Topology,
    state: EnergyState,
    params: EnergyParams,
    told: dict | None = None,
    seq_start: int = 0,
) -> ReportRound:
    """Send the node's current band to every neighbour whose last notice differs.

    ``told`` maps receiver -> band last sent to it (missing means never told)
    and is updated in place. Each message is debited ``report_cost``; if that
    moves the node into another band mid-round, neighbours already told get
    the new band as well. Sending stops as soon as the node is dead.
    """
    told = {} if told is None else told
    messages: list[ReportMessage] = []
    caused: list[ThresholdCrossing] = []
    targets = recipients(topo, node)
    seq = seq_start
    while state.alive:
        band = state.band
        pending = [r for r in targets if told.get(r) != band]
        if not pending:
            break
        receiver = pending[0]
        messages.append(ReportMessage(node, receiver, band, clock, seq))
        seq += 1
        told[receiver] = band
        state, more = consume(state, params.report_cost)
        caused.extend(more)
    return ReportRound(state, messages, caused)


def on_threshold_crossing(
    node: NodeId,
    crossings: list[ThresholdCrossing],
    clock: float,
    topo: Topology,
    state: EnergyState,
    params: EnergyParams,
    told: dict | None = None,
    seq_start: int = 0,
) -> ReportRound:
    """Report after a critical-value crossing; no crossing or a dead node means no messages.

    Without ``told`` every neighbour is notified.
    """
    if not crossings or not state.alive:
        return ReportRound(state, [], [])
    return report_round(node, clock, topo, state, params, told, seq_start)


def apply_report(view: NeighborEnergyView, msg: ReportMessage, arrival: float) -> NeighborEnergyView:
    """Return ``view`` updated with ``msg``; out-of-order (older) reports are ignored."""
    if msg.sender not in view.entries:
        raise ReportError(f"node {view.owner} got a report from non-neighbour {msg.sender}")
    if arrival < msg.sent_at:
        raise ReportError("report arrives before it was sent")
    current = view.entries[msg.sender]
    if (msg.sent_at, msg.seq) < current.origin:
        return view
    if (msg.sent_at, msg.seq) == current.origin:
        return view
    updated = view.copy()
    updated.entries[msg.sender] = ViewEntry(msg.reported_band, arrival, msg.sent_at, msg.seq)
    return updated
