import io
import random

import pytest

from mmtsim import (
    ConfigError,
    CostEntry,
    CostTable,
    DependencyEdge,
    HardwareSystem,
    HardwareUnit,
    InputSource,
    ScenarioEntry,
    UnitModel,
    UsageScenario,
    builtin_config,
    generate_requests,
    simulate,
    synthetic_table,
    validate_schedule,
)
from mmtsim.loadgen import InferenceRequest
from mmtsim.runtime import (
    COMPLETED,
    DROPPED,
    EventLog,
    LatencyGreedy,
    RoundRobin,
    TimelineEntry,
    drop_superseded,
    eval_control_gate,
    log_from_csv,
    log_to_csv,
)

from fuzzing import random_setup


def single_model_setup(rate, latency_ms, duration=1.0, units=1):
    sources = {"s": InputSource("s", streaming_rate=rate)}
    models = {"A": UnitModel(id="A", task_tag="t", input_sources=("s",))}
    scenario = UsageScenario(id="x", entries=(ScenarioEntry(model="A", target_rate=rate),))
    stream = generate_requests(scenario, sources, models, duration, seed=0)
    hw_units = tuple(HardwareUnit(id=f"u{i}", dataflow="WS", pe_count=1) for i in range(units))
    hw = HardwareSystem(id="h", style="FDA" if units == 1 else "SFDA", units=hw_units)
    costs = CostTable(
        [CostEntry("A", u.id, latency_ms=latency_ms, energy_mj=1.0) for u in hw_units], e_max_mj=10.0
    )
    return scenario, stream, hw, costs


def test_two_requests_complete_within_deadline():
    scenario, stream, hw, costs = single_model_setup(rate=2.0, latency_ms=100.0)
    log = simulate(scenario, stream, hw, costs)
    assert [e.status for e in log.entries] == [COMPLETED, COMPLETED]
    assert all(e.deadline_met for e in log.entries)
    assert log.counts["A"].n_sat == 2


def test_drop_rule_hand_simulation():
    # 4 Hz arrivals at 0/250/500/750 ms against an 800 ms inference
    scenario, stream, hw, costs = single_model_setup(rate=4.0, latency_ms=800.0)
    log = simulate(scenario, stream, hw, costs)
    assert [e.status for e in log.entries] == [COMPLETED, DROPPED, DROPPED, COMPLETED]
    assert log.entries[0].t_end_ms == 800.0
    assert log.entries[3].t_end_ms == 1600.0


def _pipeline_setup(probability, duration=1.0, kind="control"):
    sources = {"s": InputSource("s", streaming_rate=60.0)}
    models = {
        "UP": UnitModel(id="UP", task_tag="t", input_sources=("s",)),
        "DN": UnitModel(id="DN", task_tag="t", input_sources=("s",)),
    }
    edge = DependencyEdge(upstream="UP", downstream="DN", kind=kind, trigger_probability=probability)
    scenario = UsageScenario(
        id="p",
        entries=(
            ScenarioEntry(model="UP", target_rate=60.0),
            ScenarioEntry(model="DN", target_rate=60.0, dependencies=(edge,)),
        ),
    )
    stream = generate_requests(scenario, sources, models, duration, seed=0)
    hw = HardwareSystem(
        id="h",
        style="SFDA",
        units=(
            HardwareUnit(id="u0", dataflow="WS", pe_count=1),
            HardwareUnit(id="u1", dataflow="WS", pe_count=1),
        ),
    )
    costs = CostTable(
        [CostEntry(m, u, latency_ms=0.5, energy_mj=0.1) for m in ("UP", "DN") for u in ("u0", "u1")],
        e_max_mj=10.0,
    )
    return scenario, stream, hw, costs


def test_zero_probability_gate_untriggers_everything():
    scenario, stream, hw, costs = _pipeline_setup(0.0)
    log = simulate(scenario, stream, hw, costs)
    assert log.counts["DN"].n_untriggered == log.counts["DN"].n_total
    assert log.counts["DN"].n_processed == 0


def test_full_probability_gate_runs_everything():
    scenario, stream, hw, costs = _pipeline_setup(1.0)
    log = simulate(scenario, stream, hw, costs)
    assert log.counts["DN"].n_processed == log.counts["UP"].n_processed


def test_downstream_starts_after_upstream_ends():
    scenario, stream, hw, costs = _pipeline_setup(1.0, kind="data")
    log = simulate(scenario, stream, hw, costs)
    ups = {e.request.frame_index: e for e in log.by_model("UP")}
    for e in log.by_model("DN"):
        if e.status == COMPLETED:
            assert e.t_start_us >= ups[e.request.frame_index].t_end_us


def test_eval_control_gate_extremes():
    edge = lambda p: DependencyEdge(upstream="U", downstream="D", kind="control", trigger_probability=p)
    assert all(eval_control_gate(edge(1.0), f, 0) for f in range(100))
    assert not any(eval_control_gate(edge(0.0), f, 0) for f in range(100))
    fired = sum(eval_control_gate(edge(0.5), f, 0) for f in range(10_000))
    assert 0.47 <= fired / 10_000 <= 0.53


def _req(model, k, t_req=0, t_dl=1000):
    return InferenceRequest(model=model, frame_index=k, request_index=k, t_req_us=t_req, t_dl_us=t_dl)


def test_drop_superseded_rules():
    queue = {"HT": _req("HT", 3)}
    assert drop_superseded(queue, _req("HT", 4)) == [_req("HT", 3)]
    assert "HT" not in queue

    # a launched request is no longer in the queue and is never dropped
    assert drop_superseded({}, _req("HT", 4)) == []

    queue = {"HT": _req("HT", 3)}
    assert drop_superseded(queue, _req("ES", 4)) == []
    assert "HT" in queue


def _cost_pair():
    return CostTable(
        [CostEntry("A", "u0", 2.0, 0.0), CostEntry("B", "u0", 5.0, 0.0), CostEntry("C", "u0", 5.0, 0.0)],
        e_max_mj=1.0,
    )


def test_latency_greedy_prefers_smaller_latency():
    unit = HardwareUnit(id="u0", dataflow="WS", pe_count=1)
    policy = LatencyGreedy()
    ready = [_req("A", 0), _req("B", 0)]
    assert policy.choose(ready, unit, _cost_pair()).model == "A"


def test_latency_greedy_tie_breaks_on_deadline():
    unit = HardwareUnit(id="u0", dataflow="WS", pe_count=1)
    policy = LatencyGreedy()
    ready = [_req("C", 0, t_dl=1000), _req("B", 0, t_dl=500)]
    assert policy.choose(ready, unit, _cost_pair()).model == "B"
    assert policy.choose([_req("B", 0)], unit, _cost_pair()).model == "B"


def test_round_robin_cursor():
    unit = HardwareUnit(id="u0", dataflow="WS", pe_count=1)
    policy = RoundRobin(["A", "B", "C"])
    costs = _cost_pair()
    # first pick starts at the list head
    assert policy.choose([_req("A", 0), _req("C", 0)], unit, costs).model == "A"
    # cursor now after A; B not ready, so skip to C
    assert policy.choose([_req("A", 1), _req("C", 0)], unit, costs).model == "C"
    # cursor wraps past the end
    assert policy.choose([_req("A", 1)], unit, costs).model == "A"


def test_round_robin_is_only_choice_regardless_of_cursor():
    unit = HardwareUnit(id="u0", dataflow="WS", pe_count=1)
    policy = RoundRobin(["A", "B", "C"])
    policy._cursor[unit.id] = 2
    assert policy.choose([_req("B", 0)], unit, _cost_pair()).model == "B"


def test_missing_cost_entry_fails_before_simulation():
    scenario, stream, hw, _ = single_model_setup(rate=2.0, latency_ms=1.0)
    empty = CostTable([], e_max_mj=1.0)
    with pytest.raises(ConfigError, match="'A'"):
        simulate(scenario, stream, hw, empty)


def test_counts_partition_invariant():
    rng = random.Random(5)
    for _ in range(20):
        scenario, sources, models, hw, costs = random_setup(rng)
        stream = generate_requests(scenario, sources, models, 0.5, seed=rng.randrange(1 << 31))
        log = simulate(scenario, stream, hw, costs)
        for counts in log.counts.values():
            assert counts.n_total == counts.n_processed + counts.n_dropped + counts.n_untriggered


def test_simulation_is_deterministic():
    config = builtin_config()
    scenario = config.suite.scenario("social-interaction-a")
    hw = HardwareSystem(
        id="h",
        style="SFDA",
        units=(
            HardwareUnit(id="u0", dataflow="WS", pe_count=2048),
            HardwareUnit(id="u1", dataflow="OS", pe_count=2048),
        ),
    )
    costs = synthetic_table(config.models, hw)

    def run():
        stream = generate_requests(scenario, config.sources, config.models, 1.0, seed=9)
        log = simulate(scenario, stream, hw, costs)
        buf = io.StringIO()
        log_to_csv(log, buf)
        return buf.getvalue()

    assert run() == run()


def test_extra_unit_never_increases_drops():
    config = builtin_config()
    for scenario in config.suite.scenarios:
        stream = generate_requests(scenario, config.sources, config.models, 1.0, seed=0)
        drops = {}
        for n_units in (1, 2):
            units = tuple(HardwareUnit(id=f"u{i}", dataflow="WS", pe_count=512) for i in range(n_units))
            hw = HardwareSystem(id=f"h{n_units}", style="FDA" if n_units == 1 else "SFDA", units=units)
            costs = synthetic_table(config.models, hw, e_max_mj=100.0)
            log = simulate(scenario, stream, hw, costs)
            drops[n_units] = {m: c.n_dropped for m, c in log.counts.items()}
        for model in drops[1]:
            assert drops[2][model] <= drops[1][model]


def test_validate_schedule_detects_overlap():
    entries = [
        TimelineEntry(request=_req("A", 0), unit="u0", t_start_us=0, t_end_us=100, status=COMPLETED),
        TimelineEntry(request=_req("A", 1, t_req=0), unit="u0", t_start_us=50, t_end_us=150, status=COMPLETED),
    ]
    log = EventLog(scenario="x", hardware="h", seed=0, duration=1.0, entries=entries)
    log.recount()
    scenario = UsageScenario(id="x", entries=(ScenarioEntry(model="A", target_rate=2.0),))
    assert any("occupancy" in v for v in validate_schedule(log, scenario))


def test_validate_schedule_detects_dependency_violation():
    edge = DependencyEdge(upstream="UP", downstream="DN", kind="data")
    scenario = UsageScenario(
        id="x",
        entries=(
            ScenarioEntry(model="UP", target_rate=2.0),
            ScenarioEntry(model="DN", target_rate=2.0, dependencies=(edge,)),
        ),
    )
    entries = [
        TimelineEntry(request=_req("UP", 0), unit="u0", t_start_us=0, t_end_us=100, status=COMPLETED),
        TimelineEntry(request=_req("DN", 0), unit="u1", t_start_us=50, t_end_us=80, status=COMPLETED),
    ]
    log = EventLog(scenario="x", hardware="h", seed=0, duration=1.0, entries=entries)
    log.recount()
    assert any("dependency" in v for v in validate_schedule(log, scenario))


def test_validate_schedule_detects_early_start():
    entries = [
        TimelineEntry(request=_req("A", 0, t_req=100), unit="u0", t_start_us=50, t_end_us=150, status=COMPLETED)
    ]
    log = EventLog(scenario="x", hardware="h", seed=0, duration=1.0, entries=entries)
    log.recount()
    scenario = UsageScenario(id="x", entries=(ScenarioEntry(model="A", target_rate=2.0),))
    assert any("request time" in v for v in validate_schedule(log, scenario))


def test_log_csv_roundtrip():
    scenario, stream, hw, costs = single_model_setup(rate=4.0, latency_ms=800.0)
    log = simulate(scenario, stream, hw, costs)
    buf = io.StringIO()
    log_to_csv(log, buf)
    buf.seek(0)
    back = log_from_csv(buf, scenario=scenario.id)
    assert [e.status for e in back.entries] == [e.status for e in log.entries]
    assert [e.t_end_us for e in back.entries] == [e.t_end_us for e in log.entries]
    assert back.counts == log.counts
