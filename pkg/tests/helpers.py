from pedfsim.energy import EnergyBand
from pedfsim.reporting import NeighborEnergyView, ViewEntry
from pedfsim.topology import Link, Topology


def topology_from_edges(n, edges, **kw):
    return Topology(
        nodes=tuple(range(n)),
        links=tuple(sorted(Link(u, v, float(d)) for u, v, d in edges)),
        **kw,
    )


def view_with(topo, owner, bands):
    """View of ``owner`` with explicit band values (ints 1-4 or EnergyBand) per neighbour."""
    view = NeighborEnergyView.initial(topo, owner)
    for n in view.entries:
        if n in bands:
            view.entries[n] = ViewEntry(EnergyBand(int(bands[n])), 0.0)
    return view
