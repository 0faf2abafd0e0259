"""Deterministic discrete-event simulation of packet forwarding over a sensor network."""

from __future__ import annotations

import csv
import hashlib
import heapq
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .energy import EnergyParams, EnergyState, classify_band, consume, replenish
from .forwarding import (
    INVALID_PRIORITY,
    PRIORITY_THRESHOLD,
    UNDELIVERABLE,
    ForwardDecision,
    ForwardingError,
    Packet,
    Policy,
    band_permits,
    baseline_decide,
    handle_no_route,
    pedf_decide,
)
from .reporting import NeighborEnergyView, ReportMessage, apply_report, recipients, report_round
from .topology import NodeId, NoPath, Topology, shortest_delay_path

TRACE_SCHEMA_VERSION = 1
METRICS_SCHEMA_VERSION = 1
TRACE_COLUMNS = ("time_ms", "event_kind", "node", "packet_id", "priority", "detail")
RNG_ALGORITHM = "numpy.random.PCG64, uniform doubles from Generator.random()"
PRIORITIES = (1, 2, 3, 4)


class ConfigError(ValueError):
    pass


class InvariantViolation(AssertionError):
    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.name = name


@dataclass(frozen=True)
class ScriptedPacket:
    time_ms: float
    src: NodeId
    dst: NodeId
    priority: int


@dataclass(frozen=True)
class Workload:
    """Traffic model.

    ``rate`` is packets per simulated second (0 disables random traffic).
    ``sources``/``destinations`` default to the topology's source/sink roles,
    falling back to every non-sink node / every node.
    """

    rate: float = 1.0
    priority_mix: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    sources: Optional[tuple[NodeId, ...]] = None
    destinations: Optional[tuple[NodeId, ...]] = None
    arrival: str = "poisson"
    rng_seed: int = 0
    packets: tuple[ScriptedPacket, ...] = ()

    def validate(self, topo: Topology):
        if self.rate < 0 or not math.isfinite(self.rate):
            raise ConfigError("workload.rate must be a finite number >= 0")
        if len(self.priority_mix) != 4 or any(w < 0 for w in self.priority_mix):
            raise ConfigError("workload.priority_mix needs 4 non-negative weights")
        if abs(sum(self.priority_mix) - 1.0) > 1e-9:
            raise ConfigError(f"workload.priority_mix must sum to 1, got {sum(self.priority_mix):g}")
        if self.arrival not in ("poisson", "periodic"):
            raise ConfigError(f"workload.arrival must be poisson or periodic, got {self.arrival!r}")
        for name in ("sources", "destinations"):
            for n in getattr(self, name) or ():
                if n not in topo:
                    raise ConfigError(f"workload.{name}: unknown node {n}")
        for i, sp in enumerate(self.packets):
            if sp.src not in topo or sp.dst not in topo:
                raise ConfigError(f"workload.packets[{i}]: unknown node")
            if sp.time_ms < 0:
                raise ConfigError(f"workload.packets[{i}]: negative time")

    def source_pool(self, topo: Topology) -> list[NodeId]:
        if self.sources:
            return sorted(self.sources)
        sinks = set(topo.sinks)
        return topo.sources or [n for n in topo.nodes if n not in sinks]

    def destination_pool(self, topo: Topology) -> list[NodeId]:
        if self.destinations:
            return sorted(self.destinations)
        return topo.sinks or list(topo.nodes)


@dataclass(frozen=True)
class SimSettings:
    """Engine knobs. ``report_latency_ms`` is a number or ``"link"`` (use the link delay)."""

    report_latency_ms: object = 0.0
    retry_budget: int = 3
    processing_ms: float = 0.0
    ttl_hops: Optional[int] = None
    tick_ms: float = 100.0
    sample_ms: float = 1000.0
    sinks_powered: bool = True
    initial_levels: dict = field(default_factory=dict)
    check_invariants: bool = True

    def validate(self, topo: Topology):
        lat = self.report_latency_ms
        if lat != "link" and not (isinstance(lat, (int, float)) and lat >= 0):
            raise ConfigError("report_latency_ms must be >= 0 or 'link'")
        if self.retry_budget < 0:
            raise ConfigError("retry_budget must be >= 0")
        if self.processing_ms < 0:
            raise ConfigError("processing_ms must be >= 0")
        if self.ttl_hops is not None and self.ttl_hops < 1:
            raise ConfigError("ttl_hops must be >= 1")
        if not self.tick_ms > 0 or not self.sample_ms > 0:
            raise ConfigError("tick_ms and sample_ms must be > 0")
        for n, lvl in self.initial_levels.items():
            if int(n) not in topo:
                raise ConfigError(f"initial_levels: unknown node {n}")
            if not 0 <= float(lvl) <= 100:
                raise ConfigError(f"initial_levels[{n}]: {lvl} outside [0, 100]")


@dataclass
class Metrics:
    policy: str
    seed: int
    horizon_ms: float
    fingerprint: str
    injected: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    per_priority: dict = field(default_factory=dict)
    per_node: dict = field(default_factory=dict)
    network: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": METRICS_SCHEMA_VERSION, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass
class SimResult:
    metrics: Metrics
    trace: list

    def trace_csv(self) -> str:
        return format_trace(self.trace)


def format_trace(rows) -> str:
    buf = io.StringIO()
    buf.write(f"# pedfsim trace schema_version={TRACE_SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def read_trace(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def parse_detail(detail: str) -> dict:
    return dict(item.split("=", 1) for item in detail.split(";") if item)


def config_fingerprint(topo, params, workload, horizon_ms, seed, settings) -> str:
    doc = {
        "topology": topo.to_dict(),
        "energy": asdict(params),
        "workload": asdict(workload),
        "horizon_ms": horizon_ms,
        "seed": seed,
        "settings": asdict(settings),
    }
    blob = json.dumps(doc, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(x: float) -> str:
    return f"{x:.3f}"


class Simulation:
    """One run. Owns all mutable state; drive it with :meth:`run`."""

    def __init__(self, topo, params, workload, policy, horizon_s, seed, settings=None):
        self.topo = topo
        self.params = params
        self.workload = workload
        self.policy = Policy.parse(policy) if isinstance(policy, str) else policy
        self.settings = settings or SimSettings()
        if not horizon_s > 0:
            raise ConfigError("horizon must be > 0")
        workload.validate(topo)
        self.settings.validate(topo)
        self.horizon_ms = float(horizon_s) * 1000.0
        self.seed = seed
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.ttl = self.settings.ttl_hops or 2 * len(topo)

        self.queue: list = []
        self.seq = 0
        self.now = 0.0
        self.trace: list = []

        sinks = set(topo.sinks)
        self.powered = sinks if self.settings.sinks_powered else set()
        init = {int(k): float(v) for k, v in self.settings.initial_levels.items()}
        self.energy = {n: EnergyState(init.get(n, 100.0), params.capacity_j) for n in topo.nodes}
        self.initial = {n: s.level for n, s in self.energy.items()}
        true_bands = {n: s.band for n, s in self.energy.items()}
        self.views = {
            n: NeighborEnergyView.initial(topo, n, true_bands) for n in topo.nodes
        }
        self.told = {n: {r: true_bands[n] for r in recipients(topo, n)} for n in topo.nodes}
        self.report_seq = {n: 0 for n in topo.nodes}
        self.pending_reports: dict = {}
        self.dead = {n for n, s in self.energy.items() if not s.alive}
        self.death_time = {n: (0.0 if n in self.dead else None) for n in topo.nodes}
        self.series = {n: [] for n in topo.nodes}

        self.next_packet_id = 0
        self.injected = self.delivered = self.dropped = self.in_flight = 0
        self.delays = {p: [] for p in PRIORITIES}
        self.pp_injected = {p: 0 for p in PRIORITIES}
        self.pp_delivered = {p: 0 for p in PRIORITIES}
        self.pp_drops = {p: {} for p in PRIORITIES}
        self.decisions = 0
        self.view_checks = 0
        self.stale_views = 0

        self.best_path = self._primary_best_path()
        self.bp_relays = self.best_path[1:-1] if self.best_path else []
        self.bp_unusable = {p: None for p in PRIORITIES}
        self.bp_first_death = None
        for n in self.bp_relays:
            self._note_best_path(n)

        self.fingerprint = config_fingerprint(
            topo, params, workload, self.horizon_ms, seed, self.settings
        )

    # -- bookkeeping --------------------------------------------------------

    def _primary_best_path(self):
        srcs = self.topo.sources or self.workload.source_pool(self.topo)
        dsts = self.topo.sinks or self.workload.destination_pool(self.topo)
        for s in srcs:
            for d in dsts:
                if s != d:
                    try:
                        return list(shortest_delay_path(self.topo, s, d).hops)
                    except NoPath:
                        continue
        return []

    def _note_best_path(self, n):
        level = self.energy[n].level
        for p in PRIORITIES:
            if self.bp_unusable[p] is None and level <= PRIORITY_THRESHOLD[p]:
                self.bp_unusable[p] = self.now
        if level <= 0 and self.bp_first_death is None:
            self.bp_first_death = self.now

    def schedule(self, time, kind, *payload):
        heapq.heappush(self.queue, (time, self.seq, kind, payload))
        self.seq += 1

    def log(self, kind, node="", pkt: Optional[Packet] = None, detail=""):
        self.trace.append((
            _fmt(self.now), kind, node,
            "" if pkt is None else pkt.id,
            "" if pkt is None else pkt.priority,
            detail,
        ))

    def _report_latency(self, sender, receiver):
        lat = self.settings.report_latency_ms
        if lat == "link":
            return self.topo.delay(receiver, sender) if self.topo.has_link(receiver, sender) \
                else self.topo.delay(sender, receiver)
        return float(lat)

    # -- energy -------------------------------------------------------------

    def spend(self, node, amount, why):
        if node in self.powered or amount == 0:
            return
        state, crossings = consume(self.energy[node], amount)
        self.energy[node] = state
        self._after_energy_change(node, crossings)

    def _after_energy_change(self, node, crossings):
        for c in crossings:
            self.log("crossing", node, detail=f"threshold={c.threshold:g};dir={c.direction};level={c.new_level:.4f}")
        if node in self.bp_relays:
            self._note_best_path(node)
        state = self.energy[node]
        if not state.alive and node not in self.dead:
            self.dead.add(node)
            if self.death_time[node] is None:
                self.death_time[node] = self.now
            self.log("death", node)
            return
        if crossings:
            self._send_reports(node)

    def _send_reports(self, node):
        rnd = report_round(
            node, self.now, self.topo, self.energy[node], self.params,
            told=self.told[node], seq_start=self.report_seq[node],
        )
        self.energy[node] = rnd.state
        self.report_seq[node] += len(rnd.messages)
        for msg in rnd.messages:
            self.log("report_send", node, detail=f"receiver={msg.receiver};band={msg.reported_band.label}")
            lat = self._report_latency(node, msg.receiver)
            if lat == 0:
                self._deliver_report(msg)
            else:
                self.pending_reports.setdefault((node, msg.receiver), []).append(msg.sent_at)
                self.schedule(self.now + lat, "report", msg)
        for c in rnd.crossings:
            self.log("crossing", node, detail=f"threshold={c.threshold:g};dir={c.direction};level={c.new_level:.4f}")
        if node in self.bp_relays:
            self._note_best_path(node)
        if not self.energy[node].alive and node not in self.dead:
            self.dead.add(node)
            self.death_time[node] = self.now
            self.log("death", node)

    def _deliver_report(self, msg: ReportMessage):
        pend = self.pending_reports.get((msg.sender, msg.receiver))
        if pend:
            pend.remove(msg.sent_at)
        view = self.views[msg.receiver]
        self.views[msg.receiver] = apply_report(view, msg, self.now)
        self.log(
            "report_deliver", msg.receiver,
            detail=f"sender={msg.sender};band={msg.reported_band.label};sent_at={_fmt(msg.sent_at)}",
        )

    def _tick(self):
        dt = self.settings.tick_ms / 1000.0
        net = (self.params.replenish_rate - self.params.idle_drain) * dt
        for n in self.topo.nodes:
            if n in self.powered:
                continue
            state = self.energy[n]
            if net < 0:
                if not state.alive:
                    continue
                self.spend(n, -net, "idle")
            elif net > 0:
                state, crossings = replenish(state, dt, replace(self.params, replenish_rate=net / dt))
                self.energy[n] = state
                for c in crossings:
                    self.log("crossing", n, detail=f"threshold={c.threshold:g};dir=up;level={c.new_level:.4f}")
                revived = n in self.dead and state.alive
                if revived:
                    self.dead.discard(n)
                    self.log("revive", n, detail=f"level={state.level:.4f}")
                if crossings or revived:
                    self._send_reports(n)
        self.log("tick", detail=f"net={net:g}")

    # -- forwarding ---------------------------------------------------------

    def decide(self, node, pkt) -> ForwardDecision:
        self.decisions += 1
        if self.policy is Policy.PEDF:
            view = self.views[node]
            decision = pedf_decide(node, pkt, view, self.topo, self.dead)
            if self.settings.check_invariants:
                self._check_decision(node, pkt, view, decision)
        else:
            decision = baseline_decide(self.policy, node, pkt, self.topo, self.dead)
        self.log("decide", node, pkt, detail=str(decision))
        return decision

    def _check_decision(self, node, pkt, view, decision):
        if decision.is_forward and not band_permits(view.band(decision.next), pkt.priority):
            raise InvariantViolation(
                "eligibility_safety",
                f"t={self.now} node {node} sent priority {pkt.priority} via {decision.next} "
                f"viewed as {view.band(decision.next).label}",
            )
        if self.params.hysteresis:
            return
        for n in view.entries:
            if n in self.dead:
                continue
            self.view_checks += 1
            true_band = self.energy[n].band
            if view.band(n) == true_band:
                continue
            self.stale_views += 1
            sent = self.pending_reports.get((n, node), [])
            if any(self.now - t <= self._report_latency(n, node) for t in sent):
                continue
            raise InvariantViolation(
                "view_consistency",
                f"t={self.now} node {node} sees {n} as {view.band(n).label}, truly {true_band.label}",
            )

    def _drop(self, pkt, reason, node=""):
        self.dropped += 1
        self.in_flight -= 1
        if pkt.priority in self.pp_drops:
            d = self.pp_drops[pkt.priority]
            d[reason] = d.get(reason, 0) + 1
        self.log("drop", node, pkt, detail=f"reason={reason}")

    def _process(self, node, pkt: Packet):
        if node == pkt.dst:
            self.delivered += 1
            self.in_flight -= 1
            delay = self.now - pkt.created_at
            if pkt.priority in self.delays:
                self.delays[pkt.priority].append(delay)
                self.pp_delivered[pkt.priority] += 1
            self.log("deliver", node, pkt, detail=f"delay_ms={_fmt(delay)};route={'-'.join(map(str, pkt.hop_trace))}")
            return
        if len(pkt.hop_trace) - 1 >= self.ttl:
            self._drop(pkt, "TtlExceeded", node)
            return
        decision = self.decide(node, pkt)
        if decision.is_forward:
            self._send(node, pkt, decision.next)
            return
        if len(pkt.hop_trace) == 1:
            reason = "InvalidPriority" if decision == INVALID_PRIORITY else UNDELIVERABLE
            self._drop(pkt, reason, node)
            return
        prev = pkt.hop_trace[-2]
        self.log("retransmit_request", node, pkt, detail=f"to={prev};cause={decision.kind}")
        self.spend(node, self.params.report_cost, "retransmit_request")
        back = self.topo.delay(node, prev) if self.topo.has_link(node, prev) else self.topo.delay(prev, node)
        self.schedule(self.now + back, "bounce", pkt, prev)

    def _send(self, node, pkt, nxt):
        try:
            moved = pkt.advanced(nxt)
        except ForwardingError as exc:
            raise InvariantViolation("loop_freedom", str(exc)) from None
        self.log("send", node, pkt, detail=f"next={nxt}")
        self.spend(node, self.params.tx_cost, "tx")
        arrive = self.now + self.topo.delay(node, nxt) + self.settings.processing_ms
        self.schedule(arrive, "arrive", moved)

    def _arrive(self, pkt):
        node = pkt.at
        if node in self.dead:
            self._drop(pkt, "ReceiverDead", node)
            return
        self.log("arrive", node, pkt)
        self.spend(node, self.params.rx_cost, "rx")
        if node in self.dead:
            self._drop(pkt, "ReceiverDead", node)
            return
        self._process(node, pkt)

    def _bounce(self, pkt, prev):
        if prev in self.dead:
            self._drop(pkt, "ReceiverDead", prev)
            return
        outcome = handle_no_route(prev, pkt, self.decide)
        if outcome.dropped:
            self._drop(outcome.packet, outcome.drop_reason, prev)
            return
        self.log("retransmit", prev, outcome.packet, detail=f"excluded={'|'.join(map(str, sorted(outcome.packet.excluded)))}")
        self._send(prev, outcome.packet, outcome.next)

    def _inject(self, pkt: Packet):
        self.injected += 1
        self.in_flight += 1
        if pkt.priority in self.pp_injected:
            self.pp_injected[pkt.priority] += 1
        self.log("inject", pkt.src, pkt, detail=f"dst={pkt.dst}")
        if pkt.src in self.dead:
            self._drop(pkt, "SourceDead", pkt.src)
            return
        self._process(pkt.src, pkt)

    # -- workload -----------------------------------------------------------

    def _new_packet(self, src, dst, priority):
        pkt = Packet(
            id=self.next_packet_id, src=src, dst=dst, priority=priority,
            created_at=self.now, retries_remaining=self.settings.retry_budget,
        )
        self.next_packet_id += 1
        return pkt

    def _schedule_next_arrival(self):
        wl = self.workload
        if wl.rate <= 0:
            return
        if wl.arrival == "periodic":
            gap = 1000.0 / wl.rate
        else:
            gap = -math.log1p(-self.rng.random()) / wl.rate * 1000.0
        self.schedule(self.now + gap, "generate")

    def _generate(self):
        wl = self.workload
        u = self.rng.random()
        priority = 4
        acc = 0.0
        for p, w in zip(PRIORITIES, wl.priority_mix):
            acc += w
            if u < acc:
                priority = p
                break
        srcs = wl.source_pool(self.topo)
        src = srcs[min(int(self.rng.random() * len(srcs)), len(srcs) - 1)]
        dsts = [d for d in wl.destination_pool(self.topo) if d != src]
        if dsts:
            dst = dsts[min(int(self.rng.random() * len(dsts)), len(dsts) - 1)]
            self._inject(self._new_packet(src, dst, priority))
        self._schedule_next_arrival()

    # -- main loop ----------------------------------------------------------

    def _sample(self):
        for n in self.topo.nodes:
            self.series[n].append([round(self.now, 3), round(self.energy[n].level, 6)])

    def run(self) -> SimResult:
        # sorts after everything else due at the horizon
        heapq.heappush(self.queue, (self.horizon_ms, math.inf, "end", ()))
        self.schedule(0.0, "sample")
        for sp in sorted(self.workload.packets, key=lambda s: s.time_ms):
            self.schedule(sp.time_ms, "scripted", sp)
        self._schedule_next_arrival()
        if self.params.replenish_rate > 0 or self.params.idle_drain > 0:
            self.schedule(self.settings.tick_ms, "tick")
        self.log("start", detail=f"policy={self.policy.value};seed={self.seed};rng={RNG_ALGORITHM}")

        check = self.settings.check_invariants
        while self.queue:
            time, _, kind, payload = heapq.heappop(self.queue)
            self.now = time
            if kind == "end":
                break
            if kind == "scripted":
                (sp,) = payload
                self._inject(self._new_packet(sp.src, sp.dst, sp.priority))
            elif kind == "generate":
                self._generate()
            elif kind == "arrive":
                self._arrive(*payload)
            elif kind == "bounce":
                self._bounce(*payload)
            elif kind == "report":
                self._deliver_report(*payload)
            elif kind == "tick":
                self._tick()
                self.schedule(self.now + self.settings.tick_ms, "tick")
            elif kind == "sample":
                self._sample()
                self.schedule(self.now + self.settings.sample_ms, "sample")
            if check and self.injected != self.delivered + self.dropped + self.in_flight:
                raise InvariantViolation("packet_conservation", f"t={self.now}")
        self.now = self.horizon_ms
        if not self.series[self.topo.nodes[0]] or self.series[self.topo.nodes[0]][-1][0] != self.now:
            self._sample()
        self.log("end", detail=f"injected={self.injected};delivered={self.delivered};dropped={self.dropped};in_flight={self.in_flight}")
        return SimResult(self._metrics(), self.trace)

    def _metrics(self) -> Metrics:
        per_priority = {}
        for p in PRIORITIES:
            d = self.delays[p]
            inj = self.pp_injected[p]
            per_priority[str(p)] = {
                "injected": inj,
                "delivered": self.pp_delivered[p],
                "dropped": dict(sorted(self.pp_drops[p].items())),
                "delivery_ratio": (self.pp_delivered[p] / inj) if inj else None,
                "mean_delay_ms": float(np.mean(d)) if d else None,
                "p50_delay_ms": float(np.percentile(d, 50)) if d else None,
                "p95_delay_ms": float(np.percentile(d, 95)) if d else None,
            }
        per_node = {
            str(n): {
                "label": self.topo.label(n),
                "powered": n in self.powered,
                "initial_level": self.initial[n],
                "final_level": self.energy[n].level,
                "death_time_ms": self.death_time[n],
                "series": self.series[n],
            }
            for n in self.topo.nodes
        }
        budgeted = [n for n in self.topo.nodes if n not in self.powered]
        levels = np.array([self.energy[n].level for n in budgeted]) if budgeted else np.zeros(1)
        deaths = [(t, n) for n, t in self.death_time.items() if t is not None and n not in self.powered]
        first = min(deaths) if deaths else None
        network = {
            "first_death_ms": first[0] if first else None,
            "first_death_node": first[1] if first else None,
            "best_path": self.best_path,
            "best_path_first_death_ms": self.bp_first_death,
            "best_path_unusable_ms": {str(p): t for p, t in self.bp_unusable.items()},
            "residual_mean": float(levels.mean()),
            "residual_std": float(levels.std()),
            "decisions": self.decisions,
            "view_checks": self.view_checks,
            "stale_views": self.stale_views,
            "rng": RNG_ALGORITHM,
        }
        return Metrics(
            policy=self.policy.value, seed=self.seed, horizon_ms=self.horizon_ms,
            fingerprint=self.fingerprint, injected=self.injected, delivered=self.delivered,
            dropped=self.dropped, in_flight=self.in_flight, per_priority=per_priority,
            per_node=per_node, network=network,
        )


def run(topo, params, workload, policy, horizon, seed, settings=None) -> SimResult:
    """Simulate ``horizon`` seconds. Same inputs and seed give a byte-identical trace."""
    return Simulation(topo, params, workload, policy, horizon, seed, settings).run()


# -- comparison ---------------------------------------------------------------

COMPARISON_FIELDS = (
    "delivered", "dropped", "in_flight", "first_death_ms", "best_path_first_death_ms",
    "residual_mean", "residual_std",
)


@dataclass
class ComparisonReport:
    fingerprint: str
    seed: int
    columns: list  # one dict per run, in input order

    def to_dict(self) -> dict:
        return {"schema_version": METRICS_SCHEMA_VERSION, "fingerprint": self.fingerprint,
                "seed": self.seed, "columns": self.columns}

    def csv_rows(self) -> list[dict]:
        rows = []
        for col in self.columns:
            row = {"seed": self.seed, "policy": col["policy"]}
            for k in COMPARISON_FIELDS:
                row[k] = col[k]
            for p in PRIORITIES:
                pp = col["per_priority"][str(p)]
                row[f"p{p}_delivery_ratio"] = pp["delivery_ratio"]
                row[f"p{p}_mean_delay_ms"] = pp["mean_delay_ms"]
                row[f"p{p}_best_path_unusable_ms"] = col["best_path_unusable_ms"][str(p)]
            rows.append(row)
        return rows


def _column(policy, m: Metrics) -> dict:
    return {
        "policy": policy.value if isinstance(policy, Policy) else str(policy),
        "delivered": m.delivered,
        "dropped": m.dropped,
        "in_flight": m.in_flight,
        "first_death_ms": m.network["first_death_ms"],
        "best_path_first_death_ms": m.network["best_path_first_death_ms"],
        "best_path_unusable_ms": m.network["best_path_unusable_ms"],
        "residual_mean": m.network["residual_mean"],
        "residual_std": m.network["residual_std"],
        "per_priority": {
            p: {k: v[k] for k in ("delivery_ratio", "mean_delay_ms", "p95_delay_ms")}
            for p, v in m.per_priority.items()
        },
    }


def compare(runs: Sequence[tuple]) -> ComparisonReport:
    """Side-by-side summary of runs that differ only in policy."""
    if not runs:
        raise ConfigError("nothing to compare")
    prints = {m.fingerprint for _, m in runs}
    if len(prints) != 1:
        raise ConfigError("runs were made with different topology/workload/seed/horizon")
    return ComparisonReport(runs[0][1].fingerprint, runs[0][1].seed,
                            [_column(p, m) for p, m in runs])


def lifetime(m: Metrics, key="best_path_first_death_ms") -> float:
    """A death time with 'never died' mapped to the horizon (censored)."""
    t = m.network[key]
    return m.horizon_ms if t is None else t
