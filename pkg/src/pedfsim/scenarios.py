"""Built-in topologies addressable by name: fig1, line-N, grid-RxC, random-N."""

from __future__ import annotations

import re
from importlib import resources

import numpy as np

from .topology import Topology, TopologyError, build_fig1_scenario, distances_to

DESCRIPTIONS = {
    "fig1": "9-node forwarding example: S-1-2, best 2-3-D, runner-up 2-4-D, detour S-6-7-8-D",
    "line[-N]": "N nodes in a chain (default 5), 1 ms links, source 0, sink N-1",
    "grid[-RxC]": "R x C lattice (default 3x3), 1 ms links, source top-left, sink bottom-right",
    "random[-N]": "N random nodes (default 10), links 1-9 ms, connected, source 0, sink N-1",
}


def fig1_config_path():
    return resources.files("pedfsim") / "data" / "fig1.json"


def line(n=5) -> Topology:
    if n < 2:
        raise TopologyError("line needs at least 2 nodes")
    return Topology.from_edges(
        n, [(i, i + 1, 1.0) for i in range(n - 1)],
        roles={0: "source", n - 1: "sink"}, name=f"line-{n}",
    )


def grid(rows=3, cols=3) -> Topology:
    if rows * cols < 2:
        raise TopologyError("grid needs at least 2 nodes")
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1, 1.0))
            if r + 1 < rows:
                edges.append((i, i + cols, 1.0))
    return Topology.from_edges(
        rows * cols, edges, roles={0: "source", rows * cols - 1: "sink"},
        name=f"grid-{rows}x{cols}",
    )


def random_graph(n=10, seed=0, p=0.35, max_delay=9, bidirectional=True, roles=True) -> Topology:
    """Erdos-Renyi edges plus a random spanning chain so the graph is connected."""
    if n < 2:
        raise TopologyError("random topology needs at least 2 nodes")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = [int(x) for x in rng.permutation(n)]
    pairs = {tuple(sorted((order[i], order[i + 1]))) for i in range(n - 1)}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                pairs.add((u, v))
    edges = [(u, v, float(rng.integers(1, max_delay + 1))) for u, v in sorted(pairs)]
    return Topology.from_edges(
        n, edges, bidirectional=bidirectional,
        roles={0: "source", n - 1: "sink"} if roles else {}, name=f"random-{n}",
    )


def build(name: str, seed: int = 0) -> Topology:
    """Resolve a built-in scenario name such as ``fig1``, ``line-7``, ``grid-4x4``."""
    if name == "fig1":
        return build_fig1_scenario()
    m = re.fullmatch(r"line(?:-(\d+))?", name)
    if m:
        return line(int(m.group(1) or 5))
    m = re.fullmatch(r"grid(?:-(\d+)x(\d+))?", name)
    if m:
        return grid(int(m.group(1) or 3), int(m.group(2) or 3))
    m = re.fullmatch(r"random(?:-(\d+))?", name)
    if m:
        return random_graph(int(m.group(1) or 10), seed=seed)
    raise TopologyError(f"unknown scenario {name!r}; try one of {', '.join(DESCRIPTIONS)}")


def is_connected_to(topo: Topology, dst) -> bool:
    return len(distances_to(topo, dst)) == len(topo)
