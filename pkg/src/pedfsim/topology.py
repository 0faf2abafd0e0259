"""Network graph, per-link delays and minimum-delay ("best path") routing."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

NodeId = int

TOPOLOGY_SCHEMA_VERSION = 1


class TopologyError(ValueError):
    """Malformed topology: unknown node, bad delay, self-loop, ..."""


class NoPath(Exception):
    """Destination unreachable under the given exclusions."""

    def __init__(self, src: NodeId, dst: NodeId):
        super().__init__(f"no path from {src} to {dst}")
        self.src = src
        self.dst = dst


@dataclass(frozen=True, order=True)
class Link:
    src: NodeId
    dst: NodeId
    delay: float  # ms

    def __post_init__(self):
        if self.src == self.dst:
            raise TopologyError(f"link {self.src}->{self.dst}: self-loop")
        if not self.delay > 0:
            raise TopologyError(f"link {self.src}->{self.dst}: delay must be > 0, got {self.delay}")


@dataclass(frozen=True)
class Route:
    hops: tuple[NodeId, ...]
    total_delay: float

    def __len__(self):
        return len(self.hops)


@dataclass(frozen=True)
class Topology:
    """Static directed graph. Bidirectional radio links are stored as two links.

    ``labels`` are display names (e.g. ``S``/``D`` in the fig1 scenario),
    ``roles`` maps a node to ``"source"`` or ``"sink"``.
    """

    nodes: tuple[NodeId, ...]
    links: tuple[Link, ...]
    labels: Mapping[NodeId, str] = field(default_factory=dict)
    roles: Mapping[NodeId, str] = field(default_factory=dict)
    name: str = "custom"
    description: str = ""
    _adj: dict = field(default=None, init=False, repr=False, compare=False)
    _radj: dict = field(default=None, init=False, repr=False, compare=False)
    _delay: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.nodes)
        if sorted(self.nodes) != list(range(n)):
            raise TopologyError(f"node ids must be dense 0..{n - 1}")
        adj = {u: [] for u in self.nodes}
        radj = {u: [] for u in self.nodes}
        delay = {}
        for link in self.links:
            for end in (link.src, link.dst):
                if end not in adj:
                    raise TopologyError(
                        f"link {link.src}->{link.dst} references unknown node {end}"
                    )
            if (link.src, link.dst) in delay:
                raise TopologyError(f"duplicate link {link.src}->{link.dst}")
            delay[link.src, link.dst] = link.delay
            adj[link.src].append((link.dst, link.delay))
            radj[link.dst].append((link.src, link.delay))
        for lst in (*adj.values(), *radj.values()):
            lst.sort()
        for node in self.roles:
            if node not in adj:
                raise TopologyError(f"role annotation for unknown node {node}")
        object.__setattr__(self, "_adj", {u: tuple(v) for u, v in adj.items()})
        object.__setattr__(self, "_radj", {u: tuple(v) for u, v in radj.items()})
        object.__setattr__(self, "_delay", delay)

    @classmethod
    def from_edges(cls, n_nodes, edges, *, bidirectional=True, **kwargs) -> "Topology":
        """Build from ``(u, v, delay)`` triples; each becomes two links unless directed."""
        links = []
        for u, v, d in edges:
            links.append(Link(u, v, float(d)))
            if bidirectional:
                links.append(Link(v, u, float(d)))
        return cls(nodes=tuple(range(n_nodes)), links=tuple(sorted(links)), **kwargs)

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node):
        return node in self._adj

    def delay(self, u: NodeId, v: NodeId) -> float:
        try:
            return self._delay[u, v]
        except KeyError:
            raise TopologyError(f"no link {u}->{v}") from None

    def has_link(self, u, v) -> bool:
        return (u, v) in self._delay

    def label(self, node: NodeId) -> str:
        return self.labels.get(node, str(node))

    def nodes_with_role(self, role: str) -> list[NodeId]:
        return sorted(n for n, r in self.roles.items() if r == role)

    @property
    def sinks(self) -> list[NodeId]:
        return self.nodes_with_role("sink")

    @property
    def sources(self) -> list[NodeId]:
        return self.nodes_with_role("source")

    def to_dict(self) -> dict:
        return {
            "schema_version": TOPOLOGY_SCHEMA_VERSION,
            "name": self.name,
            **({"description": self.description} if self.description else {}),
            "nodes": [
                {"id": n, **({"label": self.labels[n]} if n in self.labels else {}),
                 **({"role": self.roles[n]} if n in self.roles else {})}
                for n in self.nodes
            ],
            "links": [{"from": l.src, "to": l.dst, "delay_ms": l.delay} for l in self.links],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        try:
            node_entries = data["nodes"]
            link_entries = data["links"]
        except (KeyError, TypeError) as exc:
            raise TopologyError(f"topology document missing key: {exc}") from None
        nodes, labels, roles = [], {}, {}
        for entry in node_entries:
            nid = int(entry["id"])
            nodes.append(nid)
            if "label" in entry:
                labels[nid] = str(entry["label"])
            if "role" in entry:
                if entry["role"] not in ("source", "sink"):
                    raise TopologyError(f"node {nid}: unknown role {entry['role']!r}")
                roles[nid] = entry["role"]
        links = []
        for i, entry in enumerate(link_entries):
            try:
                u, v, d = int(entry["from"]), int(entry["to"]), float(entry["delay_ms"])
            except (KeyError, TypeError, ValueError) as exc:
                raise TopologyError(f"links[{i}]: malformed entry ({exc})") from None
            links.append(Link(u, v, d))
            if entry.get("bidirectional"):
                links.append(Link(v, u, d))
        return cls(
            nodes=tuple(sorted(nodes)),
            links=tuple(sorted(links)),
            labels=labels,
            roles=roles,
            name=str(data.get("name", "custom")),
            description=str(data.get("description", "")),
        )

    @classmethod
    def load(cls, path) -> "Topology":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def neighbors(topo: Topology, n: NodeId) -> list[tuple[NodeId, float]]:
    """Outgoing adjacency of ``n`` as ``(neighbor, delay)`` in ascending id order."""
    try:
        return list(topo._adj[n])
    except KeyError:
        raise TopologyError(f"unknown node {n}") from None


def shortest_delay_path(
    topo: Topology, src: NodeId, dst: NodeId, excluded: Iterable[NodeId] = ()
) -> Route:
    """Minimum total-delay simple path from ``src`` to ``dst`` avoiding ``excluded``.

    Labels are ``(delay, hop sequence)`` pairs, so among equal-delay paths the
    lexicographically smallest hop sequence wins. Raises :class:`NoPath`.
    """
    if src not in topo or dst not in topo:
        raise TopologyError(f"unknown endpoint in {src}->{dst}")
    excluded = frozenset(excluded)
    if src in excluded or dst in excluded:
        raise TopologyError("excluded set must not contain src or dst")
    adj = topo._adj
    heap = [(0.0, (src,))]
    settled = set()
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if u in settled:
            continue
        if u == dst:
            return Route(path, d)
        settled.add(u)
        for v, w in adj[u]:
            if v not in settled and v not in excluded:
                heapq.heappush(heap, (d + w, path + (v,)))
    raise NoPath(src, dst)


def distances_to(topo: Topology, dst: NodeId, excluded: Iterable[NodeId] = ()) -> dict[NodeId, float]:
    """Minimum delay from every node to ``dst`` over the graph minus ``excluded``.

    Unreachable nodes are absent from the result. Runs Dijkstra on reversed links.
    """
    excluded = frozenset(excluded)
    if dst in excluded:
        return {}
    radj = topo._radj
    dist = {dst: 0.0}
    heap = [(0.0, dst)]
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for u, w in radj[v]:
            if u in excluded or u in done:
                continue
            nd = w + d
            if nd < dist.get(u, float("inf")):
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


# fig1 node ids. Labelled nodes 1-4 keep their ids; S and D take 0 and 5;
# 6-8 are the three unlabelled nodes, wired as a detour S-6-7-8-D.
FIG1_S, FIG1_D = 0, 5
FIG1_EDGES = (
    (0, 1, 2.0),
    (1, 2, 2.0),
    (2, 3, 2.0),
    (3, 5, 2.0),
    (2, 4, 3.0),
    (4, 5, 3.0),
    (0, 6, 3.0),
    (6, 7, 3.0),
    (7, 8, 3.0),
    (8, 5, 3.0),
)


def build_fig1_scenario() -> Topology:
    """Nine-node network of the S/1/2/3/4/D forwarding example.

    Best 2->D route is 2-3-D (4 ms), the runner-up 2-4-D (6 ms); S reaches 2
    via 1. Links are symmetric.
    """
    return Topology.from_edges(
        9,
        FIG1_EDGES,
        labels={0: "S", 1: "1", 2: "2", 3: "3", 4: "4", 5: "D"},
        roles={FIG1_S: "source", FIG1_D: "sink"},
        name="fig1",
        description=(
            "Delays in ms. S-1 2, 1-2 2, 2-3 2, 3-D 2, 2-4 3, 4-D 3, S-6 3, 6-7 3, 7-8 3, 8-D 3; "
            "all links symmetric. Best 2->D = 2-3-D (4 ms), second = 2-4-D (6 ms); "
            "nodes 6-8 stand in for the unlabelled nodes of the figure."
        ),
    )
