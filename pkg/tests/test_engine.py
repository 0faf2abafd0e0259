import random
from collections import defaultdict

import pytest

from pedfsim import engine
from pedfsim.energy import EnergyBand, EnergyParams
from pedfsim.engine import (
    ConfigError,
    InvariantViolation,
    ScriptedPacket,
    SimSettings,
    Simulation,
    Workload,
    compare,
    parse_detail,
    read_trace,
    run,
)
from pedfsim.forwarding import Forward, Policy
from pedfsim.scenarios import random_graph
from pedfsim.topology import FIG1_D, FIG1_S, Topology, build_fig1_scenario

FIG1 = build_fig1_scenario()
S, D = FIG1_S, FIG1_D


def scripted(*packets, rate=0.0):
    return Workload(rate=rate, packets=tuple(ScriptedPacket(*p) for p in packets))


def routes(result):
    return {
        int(r["packet_id"]): tuple(int(x) for x in parse_detail(r["detail"])["route"].split("-"))
        for r in read_trace(result.trace_csv())
        if r["event_kind"] == "deliver"
    }


class TestFig1Runs:
    @pytest.mark.parametrize("priority, route", [(4, (S, 1, 2, 4, D)), (3, (S, 1, 2, 4, D)),
                                                 (2, (S, 1, 2, 3, D)), (1, (S, 1, 2, 3, D))])
    def test_node_3_at_27_percent(self, priority, route):
        res = run(FIG1, EnergyParams(), scripted((0, S, D, priority)), Policy.PEDF, 1, 0,
                  SimSettings(initial_levels={3: 27}))
        assert routes(res) == {0: route}

    def test_best_path_baseline_ignores_energy(self):
        res = run(FIG1, EnergyParams(), scripted((0, S, D, 4)), "best-path", 1, 0,
                  SimSettings(initial_levels={3: 27}))
        assert routes(res) == {0: (S, 1, 2, 3, D)}

    def test_delay_is_path_delay(self):
        res = run(FIG1, EnergyParams(), scripted((5, S, D, 4)), "pedf", 1, 0,
                  SimSettings(initial_levels={3: 27}))
        assert res.metrics.per_priority["4"]["mean_delay_ms"] == 10.0

    def test_best_path_unusable_from_the_start_for_low_priorities(self):
        res = run(FIG1, EnergyParams(), scripted(), "pedf", 1, 0, SimSettings(initial_levels={3: 27}))
        net = res.metrics.network
        assert net["best_path"] == [S, 1, 2, 3, D]
        assert net["best_path_unusable_ms"] == {"1": None, "2": None, "3": 0.0, "4": 0.0}


def test_zero_rate_workload():
    params = EnergyParams(idle_drain=1.0)
    res = run(FIG1, params, Workload(rate=0), "pedf", 2, 0)
    m = res.metrics
    assert (m.injected, m.delivered, m.dropped, m.in_flight) == (0, 0, 0, 0)
    for n, node in m.per_node.items():
        expected = 100.0 if node["powered"] else 98.0
        assert node["final_level"] == pytest.approx(expected)


def test_idle_only_without_ticks_is_flat():
    res = run(FIG1, EnergyParams(), Workload(rate=0), "pedf", 5, 0)
    assert {n["final_level"] for n in res.metrics.per_node.values()} == {100.0}
    assert not [r for r in res.trace if r[1] == "tick"]


@pytest.mark.parametrize("policy", list(Policy))
def test_same_seed_same_bytes(policy):
    wl = Workload(rate=20, priority_mix=(0.1, 0.2, 0.3, 0.4))
    a = run(FIG1, EnergyParams(), wl, policy, 30, 11).trace_csv()
    b = run(FIG1, EnergyParams(), wl, policy, 30, 11).trace_csv()
    c = run(FIG1, EnergyParams(), wl, policy, 30, 12).trace_csv()
    assert a == b
    assert a != c


def test_trace_header_and_columns():
    text = run(FIG1, EnergyParams(), scripted((0, S, D, 1)), "pedf", 1, 0).trace_csv()
    first, header = text.splitlines()[:2]
    assert first == "# pedfsim trace schema_version=1"
    assert header == "time_ms,event_kind,node,packet_id,priority,detail"


def busy_run(policy="pedf", seed=3, **settings):
    wl = Workload(rate=25, priority_mix=(0.1, 0.2, 0.3, 0.4), sources=(0, 1, 2, 3, 4, 6, 7, 8))
    return run(FIG1, EnergyParams(), wl, policy, 40, seed, SimSettings(**settings))


@pytest.mark.parametrize("policy", ["pedf", "best-path", "greedy"])
def test_causality_each_hop_takes_its_link_delay(policy):
    res = busy_run(policy, processing_ms=0.5)
    sent = {}
    arrivals = 0
    for r in read_trace(res.trace_csv()):
        key = r["packet_id"]
        if r["event_kind"] == "send":
            sent[key] = (float(r["time_ms"]), int(r["node"]), int(parse_detail(r["detail"])["next"]))
        elif r["event_kind"] in ("arrive",) or (r["event_kind"] == "drop" and "ReceiverDead" in r["detail"] and key in sent):
            t0, u, v = sent.pop(key)
            if r["event_kind"] == "arrive":
                assert int(r["node"]) == v
                arrivals += 1
            assert float(r["time_ms"]) == pytest.approx(t0 + FIG1.delay(u, v) + 0.5, abs=2e-3)
    assert arrivals > 100


def test_energy_ledger_reconstructs_from_trace():
    params = EnergyParams()
    res = busy_run("pedf")
    level = {n: 100.0 for n in FIG1.nodes}
    powered = {int(n) for n, v in res.metrics.per_node.items() if v["powered"]}
    cost = {"send": params.tx_cost, "arrive": params.rx_cost,
            "report_send": params.report_cost, "retransmit_request": params.report_cost}
    for r in read_trace(res.trace_csv()):
        if r["event_kind"] in cost and int(r["node"]) not in powered:
            n = int(r["node"])
            level[n] = max(0.0, level[n] - cost[r["event_kind"]])
    for n, node in res.metrics.per_node.items():
        assert node["final_level"] == pytest.approx(level[int(n)], abs=1e-9)
    assert min(level.values()) < 50  # the run actually drained something


def test_packet_conservation_and_reasons():
    res = busy_run("pedf")
    m = res.metrics
    assert m.injected == m.delivered + m.dropped + m.in_flight
    per = m.per_priority
    assert sum(p["injected"] for p in per.values()) == m.injected
    assert sum(sum(p["dropped"].values()) for p in per.values()) == m.dropped
    assert m.dropped > 0


def test_ttl_exceeded():
    res = run(FIG1, EnergyParams(), scripted((0, S, D, 1)), "pedf", 1, 0, SimSettings(ttl_hops=2))
    assert res.metrics.per_priority["1"]["dropped"] == {"TtlExceeded": 1}


def refusal_topology():
    # 0-1-2-5-3 is fastest, but 2's only onward hop 5 is too weak for priority 4
    return Topology.from_edges(
        6, [(0, 1, 1), (1, 2, 1), (2, 5, 1), (5, 3, 1), (1, 4, 5), (4, 3, 5)],
        roles={0: "source", 3: "sink"},
    )


def test_refusal_bounces_to_previous_hop():
    topo = refusal_topology()
    res = run(topo, EnergyParams(), scripted((0, 0, 3, 4)), "pedf", 1, 0,
              SimSettings(initial_levels={5: 30}))
    assert routes(res) == {0: (0, 1, 4, 3)}
    kinds = [r[1] for r in res.trace]
    assert "retransmit_request" in kinds and "retransmit" in kinds
    # 0->1 (1) + 1->2 (1) + bounce 2->1 (1) + 1->4 (5) + 4->3 (5)
    assert res.metrics.per_priority["4"]["mean_delay_ms"] == 13.0


def test_refusal_without_retries_drops():
    topo = refusal_topology()
    res = run(topo, EnergyParams(), scripted((0, 0, 3, 4)), "pedf", 1, 0,
              SimSettings(initial_levels={5: 30}, retry_budget=0))
    assert res.metrics.per_priority["4"]["dropped"] == {"Undeliverable": 1}


def test_source_with_no_eligible_neighbour_drops():
    res = run(FIG1, EnergyParams(), scripted((0, S, D, 4)), "pedf", 1, 0,
              SimSettings(initial_levels={1: 40, 6: 40}))
    assert res.metrics.per_priority["4"]["dropped"] == {"Undeliverable": 1}


def test_invalid_priority_at_source():
    res = run(FIG1, EnergyParams(), scripted((0, S, D, 7)), "pedf", 1, 0)
    assert res.metrics.dropped == 1
    assert any(r[1] == "drop" and "InvalidPriority" in r[5] for r in res.trace)


def test_dead_source():
    res = run(FIG1, EnergyParams(), scripted((0, S, D, 1)), "pedf", 1, 0, SimSettings(initial_levels={0: 0}))
    assert res.metrics.per_priority["1"]["dropped"] == {"SourceDead": 1}


def test_nodes_die_and_first_death_recorded():
    wl = Workload(rate=20, priority_mix=(1, 0, 0, 0))
    res = run(FIG1, EnergyParams(), wl, "best-path", 60, 1)
    net = res.metrics.network
    assert net["first_death_ms"] is not None
    assert net["best_path_first_death_ms"] is not None
    assert net["first_death_node"] in (S, 1, 2, 3)
    assert res.metrics.per_node[str(D)]["final_level"] == 100.0


def test_unpowered_sink_spends_energy():
    res = run(FIG1, EnergyParams(), scripted((0, S, D, 1)), "pedf", 1, 0, SimSettings(sinks_powered=False))
    assert res.metrics.per_node[str(D)]["final_level"] == 99.75


def test_replenishment_revives_nodes():
    wl = Workload(rate=20, priority_mix=(1, 0, 0, 0))
    params = EnergyParams(replenish_rate=0.5)
    res = run(FIG1, params, wl, "best-path", 120, 1)
    kinds = {r[1] for r in res.trace}
    assert "death" in kinds and "revive" in kinds


def test_pedf_with_replenishment_reports_upward():
    wl = Workload(rate=10, priority_mix=(0.25, 0.25, 0.25, 0.25))
    res = run(FIG1, EnergyParams(replenish_rate=0.3), wl, "pedf", 120, 4)
    ups = [r for r in res.trace if r[1] == "crossing" and "dir=up" in r[5]]
    assert ups
    assert res.metrics.network["view_checks"] > 0


@pytest.mark.parametrize("latency", [0.0, 3.0, 25.0, "link"])
def test_view_consistency_holds_under_latency(latency):
    res = busy_run("pedf", report_latency_ms=latency)
    net = res.metrics.network
    assert net["view_checks"] > 1000
    if latency == 0.0:
        assert net["stale_views"] == 0


def test_long_latency_produces_justified_stale_views():
    res = busy_run("pedf", report_latency_ms=500.0)
    assert res.metrics.network["stale_views"] > 0


def test_eligibility_violation_is_caught(monkeypatch):
    honest = engine.pedf_decide

    def reckless(node, pkt, view, topo, dead=frozenset()):
        return Forward(3) if node == 2 else honest(node, pkt, view, topo, dead)

    monkeypatch.setattr(engine, "pedf_decide", reckless)
    with pytest.raises(InvariantViolation) as exc:
        run(FIG1, EnergyParams(), scripted((0, S, D, 4)), "pedf", 1, 0, SimSettings(initial_levels={3: 27}))
    assert exc.value.name == "eligibility_safety"


def test_stale_view_is_caught():
    sim = Simulation(FIG1, EnergyParams(), scripted((0, S, D, 1)), "pedf", 1, 0)
    from pedfsim.reporting import ViewEntry
    sim.views[2].entries[3] = ViewEntry(EnergyBand.CASE_I, 0.0)
    with pytest.raises(InvariantViolation) as exc:
        sim.run()
    assert exc.value.name == "view_consistency"


def test_config_errors_before_running():
    with pytest.raises(ConfigError):
        run(FIG1, EnergyParams(), Workload(priority_mix=(0.3, 0.3, 0.3, 0.0)), "pedf", 1, 0)
    with pytest.raises(ConfigError):
        run(FIG1, EnergyParams(), Workload(), "pedf", 0, 0)
    with pytest.raises(ConfigError):
        run(FIG1, EnergyParams(), Workload(sources=(42,)), "pedf", 1, 0)
    with pytest.raises(ConfigError):
        run(FIG1, EnergyParams(), Workload(), "pedf", 1, 0, SimSettings(initial_levels={3: 140}))


def test_periodic_arrivals():
    res = run(FIG1, EnergyParams(), Workload(rate=10, arrival="periodic"), "pedf", 1, 0)
    injects = [float(r[0]) for r in res.trace if r[1] == "inject"]
    assert injects == pytest.approx([100.0 * k for k in range(1, 11)])


def test_priority_mix_is_respected():
    res = run(FIG1, EnergyParams(tx_cost=0, rx_cost=0), Workload(rate=200, priority_mix=(0.7, 0.1, 0.1, 0.1)),
              "pedf", 20, 5)
    per = res.metrics.per_priority
    total = res.metrics.injected
    assert per["1"]["injected"] / total == pytest.approx(0.7, abs=0.03)


def test_energy_series_sampled():
    res = run(FIG1, EnergyParams(), Workload(rate=1), "pedf", 5, 0)
    series = res.metrics.per_node["3"]["series"]
    assert [t for t, _ in series] == [0.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0]


class TestCompare:
    wl = Workload(rate=10, priority_mix=(0.1, 0.1, 0.4, 0.4))

    def test_side_by_side(self):
        a = run(FIG1, EnergyParams(), self.wl, "pedf", 20, 1).metrics
        b = run(FIG1, EnergyParams(), self.wl, "best-path", 20, 1).metrics
        report = compare([(Policy.PEDF, a), (Policy.ALWAYS_BEST_PATH, b)])
        assert [c["policy"] for c in report.columns] == ["pedf", "best-path"]
        rows = report.csv_rows()
        assert rows[0]["p4_delivery_ratio"] is not None

    def test_single(self):
        a = run(FIG1, EnergyParams(), self.wl, "pedf", 5, 1).metrics
        assert len(compare([(Policy.PEDF, a)]).columns) == 1

    def test_identical_runs_identical_columns(self):
        a = run(FIG1, EnergyParams(), self.wl, "pedf", 5, 1).metrics
        b = run(FIG1, EnergyParams(), self.wl, "pedf", 5, 1).metrics
        cols = compare([(Policy.PEDF, a), (Policy.PEDF, b)]).columns
        assert cols[0] == cols[1]

    def test_mismatched(self):
        a = run(FIG1, EnergyParams(), self.wl, "pedf", 5, 1).metrics
        b = run(FIG1, EnergyParams(), self.wl, "pedf", 5, 2).metrics
        with pytest.raises(ConfigError):
            compare([(Policy.PEDF, a), (Policy.PEDF, b)])


@pytest.mark.parametrize("seed", range(6))
def test_random_topologies_run_clean(seed):
    topo = random_graph(10, seed=seed)
    rng = random.Random(seed)
    levels = {n: rng.uniform(5, 100) for n in topo.nodes if rng.random() < 0.4}
    wl = Workload(rate=30, sources=tuple(n for n in topo.nodes if n != 9), destinations=(9,))
    for policy in Policy:
        res = run(topo, EnergyParams(replenish_rate=0.05), wl, policy, 20, seed,
                  SimSettings(initial_levels=levels, report_latency_ms=rng.choice([0.0, "link"])))
        m = res.metrics
        assert m.injected == m.delivered + m.dropped + m.in_flight
        for node in m.per_node.values():
            assert all(0 <= lvl <= 100 for _, lvl in node["series"])
