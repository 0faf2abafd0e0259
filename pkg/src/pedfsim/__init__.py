"""Priority-energy based data forwarding for wireless sensor networks, as a discrete-event simulator."""

from .energy import EnergyBand, EnergyParams, EnergyState, classify_band, consume, eligible_priorities, replenish
from .engine import ComparisonReport, Metrics, SimSettings, Workload, compare, run
from .forwarding import Packet, Policy, Priority, assign_priority, baseline_decide, handle_no_route, pedf_decide
from .reporting import NeighborEnergyView, ReportMessage, apply_report, on_threshold_crossing
from .topology import Link, NoPath, Route, Topology, build_fig1_scenario, neighbors, shortest_delay_path

__version__ = "0.1.0"
