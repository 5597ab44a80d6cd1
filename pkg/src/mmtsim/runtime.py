"""Discrete-event dispatcher: runs a request stream on modeled hardware.

The loop is event-driven over request arrivals and unit completions. A
request is ready once its arrival time has passed, every data dependency
for its frame has completed, and every probabilistic gate has fired true.
Launched inferences run to completion (no preemption). A request that has
not launched when the next request of the same model arrives is dropped.

A single simulation is strictly single-threaded and deterministic; multiple
simulations can run concurrently since all inputs are immutable.
"""

from __future__ import annotations

import csv
import heapq
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

from .costmodel import CostTable, HardwareSystem, HardwareUnit
from .errors import ConfigError
from .loadgen import US_PER_MS, InferenceRequest, RequestStream, det_rand
from .workload import SCHEMA_VERSION, DependencyEdge, UsageScenario

COMPLETED = "completed"
DROPPED = "dropped"
UNTRIGGERED = "untriggered"

LATENCY_GREEDY = "latency-greedy"
ROUND_ROBIN = "round-robin"


@dataclass
class TimelineEntry:
    """The simulated fate of one inference request."""

    request: InferenceRequest
    unit: str | None = None
    t_start_us: int | None = None
    t_end_us: int | None = None
    status: str | None = None
    energy_mj: float = 0.0

    @property
    def t_start_ms(self) -> float | None:
        return None if self.t_start_us is None else self.t_start_us / US_PER_MS

    @property
    def t_end_ms(self) -> float | None:
        return None if self.t_end_us is None else self.t_end_us / US_PER_MS

    @property
    def deadline_met(self) -> bool:
        return self.status == COMPLETED and self.t_end_us <= self.request.t_dl_us


@dataclass(frozen=True)
class ModelCounts:
    n_total: int
    n_processed: int
    n_dropped: int
    n_untriggered: int
    n_sat: int


@dataclass
class EventLog:
    """The full simulated timeline plus per-model counts."""

    scenario: str
    hardware: str
    seed: int
    duration: float
    entries: list[TimelineEntry]
    counts: dict[str, ModelCounts] = field(default_factory=dict)

    def by_model(self, model: str) -> list[TimelineEntry]:
        return [e for e in self.entries if e.request.model == model]

    def recount(self) -> None:
        models: dict[str, list[TimelineEntry]] = {}
        for e in self.entries:
            models.setdefault(e.request.model, []).append(e)
        self.counts = {
            m: ModelCounts(
                n_total=len(es),
                n_processed=sum(e.status == COMPLETED for e in es),
                n_dropped=sum(e.status == DROPPED for e in es),
                n_untriggered=sum(e.status == UNTRIGGERED for e in es),
                n_sat=sum(e.deadline_met for e in es),
            )
            for m, es in models.items()
        }


class LatencyGreedy:
    """Pick the ready request cheapest on the freeing unit; break ties by
    earlier deadline, then (model, frame)."""

    name = LATENCY_GREEDY

    def choose(
        self, ready: Sequence[InferenceRequest], unit: HardwareUnit, costs: CostTable
    ) -> InferenceRequest:
        return min(
            ready,
            key=lambda r: (costs.lookup(r.model, unit.id).latency_ms, r.t_dl_us, r.model, r.frame_index),
        )


class RoundRobin:
    """Cycle a per-unit cursor over the scenario's model list."""

    name = ROUND_ROBIN

    def __init__(self, model_order: Sequence[str]):
        self._order = list(model_order)
        self._cursor: dict[str, int] = {}

    def choose(
        self, ready: Sequence[InferenceRequest], unit: HardwareUnit, costs: CostTable
    ) -> InferenceRequest:
        by_model: dict[str, InferenceRequest] = {}
        for r in ready:
            cur = by_model.get(r.model)
            if cur is None or r.frame_index < cur.frame_index:
                by_model[r.model] = r
        start = self._cursor.get(unit.id, -1)
        n = len(self._order)
        for off in range(1, n + 1):
            idx = (start + off) % n
            model = self._order[idx]
            if model in by_model:
                self._cursor[unit.id] = idx
                return by_model[model]
        raise ValueError("choose() requires a nonempty ready set")


def make_policy(name: str, scenario: UsageScenario):
    if name == LATENCY_GREEDY:
        return LatencyGreedy()
    if name == ROUND_ROBIN:
        return RoundRobin(scenario.model_ids)
    raise ConfigError(f"unknown scheduler policy {name!r}")


def eval_control_gate(edge: DependencyEdge, upstream_frame: int, seed: int) -> bool:
    """Whether a gated downstream launch fires for this upstream completion.

    Deterministic per (seed, edge, frame); probability 1 edges (all plain
    data dependencies) always fire.
    """
    if edge.trigger_probability >= 1.0:
        return True
    if edge.trigger_probability <= 0.0:
        return False
    return det_rand(seed, f"gate:{edge.key}", upstream_frame) < edge.trigger_probability


def drop_superseded(
    queue: dict[str, InferenceRequest], arriving: InferenceRequest
) -> list[InferenceRequest]:
    """Apply the frame-drop rule to a queue of un-launched requests.

    When request k+1 of a model arrives while request k has not started,
    request k is dropped. Launched requests are not in the queue and are
    never dropped; distinct models never supersede each other.
    """
    prev = queue.get(arriving.model)
    if prev is not None and prev.request_index < arriving.request_index:
        del queue[arriving.model]
        return [prev]
    return []


# Event kinds at equal timestamps: completions free units first, then
# arrivals apply the drop rule, then the dispatcher fills free units.
_EV_COMPLETION = 0
_EV_ARRIVAL = 1


@dataclass
class _ReqState:
    entry: TimelineEntry
    arrived: bool = False
    launched: bool = False
    unresolved: int = 0  # anchored dependencies not yet fired true
    blocked: bool = False  # an anchor terminally failed; can never launch


def simulate(
    scenario: UsageScenario,
    stream: RequestStream,
    hw: HardwareSystem,
    costs: CostTable,
    policy=LATENCY_GREEDY,
    seed: int | None = None,
) -> EventLog:
    """Run the stream on the hardware system and return the event log."""
    if stream.scenario != scenario.id:
        raise ConfigError(f"stream was generated for {stream.scenario!r}, not {scenario.id!r}")
    for model_id in scenario.model_ids:
        for unit in hw.units:
            costs.lookup(model_id, unit.id)  # fail before simulating
    if isinstance(policy, str):
        policy = make_policy(policy, scenario)
    if seed is None:
        seed = stream.seed

    entries = [TimelineEntry(request=r) for r in stream.requests]
    states: dict[tuple[str, int], _ReqState] = {
        (e.request.model, e.request.request_index): _ReqState(entry=e) for e in entries
    }

    # Anchor each dependency edge of a request to the latest upstream request
    # whose frame does not exceed the downstream frame.
    frames_by_model: dict[str, list[int]] = {}
    for r in stream.requests:
        frames_by_model.setdefault(r.model, []).append(r.frame_index)
    for fs in frames_by_model.values():
        fs.sort()

    dependents: dict[tuple[str, int], list[tuple[DependencyEdge, str, int]]] = {}
    for entry_spec in scenario.entries:
        for edge in entry_spec.dependencies:
            up_frames = frames_by_model.get(edge.upstream, [])
            for r in stream.by_model(entry_spec.model):
                pos = bisect_right(up_frames, r.frame_index) - 1
                if pos < 0:
                    continue  # no upstream frame precedes; nothing to wait on
                anchor = (edge.upstream, pos)
                dependents.setdefault(anchor, []).append((edge, r.model, r.request_index))
                states[(r.model, r.request_index)].unresolved += 1

    events: list[tuple[int, int, str, str, int]] = []
    for r in stream.requests:
        heapq.heappush(events, (r.t_req_us, _EV_ARRIVAL, "", r.model, r.request_index))

    pending: dict[str, InferenceRequest] = {}  # arrived, un-launched, unresolved status
    busy: dict[str, tuple[str, int] | None] = {u.id: None for u in hw.units}
    units_in_order = sorted(hw.units, key=lambda u: u.id)

    def fail(key: tuple[str, int], status: str) -> None:
        st = states[key]
        st.entry.status = status
        for _, dm, dk in dependents.get(key, ()):  # downstream can never fire now
            states[(dm, dk)].blocked = True

    def resolve_completion(key: tuple[str, int]) -> None:
        up_frame = states[key].entry.request.frame_index
        for edge, dm, dk in dependents.get(key, ()):
            dst = states[(dm, dk)]
            if dst.launched or dst.entry.status is not None:
                continue
            if eval_control_gate(edge, up_frame, seed):
                dst.unresolved -= 1
            else:
                waiting = pending.get(dm)
                if waiting is not None and waiting.request_index == dk:
                    del pending[dm]
                fail((dm, dk), UNTRIGGERED)

    def is_ready(r: InferenceRequest) -> bool:
        st = states[(r.model, r.request_index)]
        return st.arrived and not st.launched and st.entry.status is None and st.unresolved == 0 and not st.blocked

    def dispatch(now: int) -> None:
        while True:
            free = [u for u in units_in_order if busy[u.id] is None]
            if not free:
                return
            ready = [r for r in pending.values() if is_ready(r)]
            if not ready:
                return
            unit = free[0]
            chosen = policy.choose(ready, unit, costs)
            st = states[(chosen.model, chosen.request_index)]
            cost = costs.lookup(chosen.model, unit.id)
            lat_us = max(1, round(cost.latency_ms * US_PER_MS))
            st.launched = True
            st.entry.unit = unit.id
            st.entry.t_start_us = now
            st.entry.t_end_us = now + lat_us
            st.entry.energy_mj = cost.energy_mj
            st.entry.status = COMPLETED
            busy[unit.id] = (chosen.model, chosen.request_index)
            del pending[chosen.model]
            heapq.heappush(events, (st.entry.t_end_us, _EV_COMPLETION, unit.id, chosen.model, chosen.request_index))

    while events:
        now = events[0][0]
        batch = []
        while events and events[0][0] == now:
            batch.append(heapq.heappop(events))
        for _, kind, unit_id, model, k in sorted(batch):
            if kind == _EV_COMPLETION:
                busy[unit_id] = None
                resolve_completion((model, k))
            else:
                st = states[(model, k)]
                st.arrived = True
                for stale in drop_superseded(pending, st.entry.request):
                    fail((stale.model, stale.request_index), DROPPED)
                if st.entry.status is None and not st.launched:
                    pending[model] = st.entry.request
        dispatch(now)

    # Window closed with no successor to supersede them: no user-visible result.
    for st in states.values():
        if st.entry.status is None:
            fail((st.entry.request.model, st.entry.request.request_index), DROPPED)

    log = EventLog(
        scenario=scenario.id,
        hardware=hw.id,
        seed=seed,
        duration=stream.duration,
        entries=entries,
    )
    log.recount()
    return log


def validate_schedule(log: EventLog, scenario: UsageScenario) -> list[str]:
    """Check occupancy, dependency order, and arrival constraints on a log."""
    violations: list[str] = []
    per_unit: dict[str, list[TimelineEntry]] = {}
    for e in log.entries:
        if e.status != COMPLETED:
            continue
        if e.t_start_us < e.request.t_req_us:
            violations.append(
                f"{e.request.model}[{e.request.request_index}] started before its request time"
            )
        per_unit.setdefault(e.unit, []).append(e)
    for unit_id, es in per_unit.items():
        es.sort(key=lambda e: (e.t_start_us, e.t_end_us))
        for prev, cur in zip(es, es[1:]):
            if cur.t_start_us < prev.t_end_us:
                violations.append(
                    f"occupancy violation on unit {unit_id}: "
                    f"{prev.request.model}[{prev.request.request_index}] overlaps "
                    f"{cur.request.model}[{cur.request.request_index}]"
                )

    by_model: dict[str, list[TimelineEntry]] = {}
    for e in log.entries:
        by_model.setdefault(e.request.model, []).append(e)
    for es in by_model.values():
        es.sort(key=lambda e: e.request.frame_index)
    for entry_spec in scenario.entries:
        for edge in entry_spec.dependencies:
            ups = by_model.get(edge.upstream, [])
            up_frames = [u.request.frame_index for u in ups]
            for e in by_model.get(entry_spec.model, []):
                if e.status != COMPLETED:
                    continue
                pos = bisect_right(up_frames, e.request.frame_index) - 1
                if pos < 0:
                    continue
                up = ups[pos]
                if up.status != COMPLETED:
                    violations.append(
                        f"dependency violation {edge.key}: "
                        f"{e.request.model}[{e.request.request_index}] ran without its upstream"
                    )
                elif e.t_start_us < up.t_end_us:
                    violations.append(
                        f"dependency violation {edge.key}: "
                        f"{e.request.model}[{e.request.request_index}] started before upstream ended"
                    )
    return violations


# --- Export -----------------------------------------------------------------

LOG_CSV_FIELDS = (
    "model",
    "request_index",
    "frame_index",
    "unit",
    "t_req_ms",
    "t_start_ms",
    "t_end_ms",
    "t_dl_ms",
    "status",
    "energy_mj",
)


def log_to_csv(log: EventLog, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(LOG_CSV_FIELDS)
    for e in log.entries:
        r = e.request
        writer.writerow(
            [
                r.model,
                r.request_index,
                r.frame_index,
                e.unit or "",
                repr(r.t_req_ms),
                "" if e.t_start_us is None else repr(e.t_start_ms),
                "" if e.t_end_us is None else repr(e.t_end_ms),
                repr(r.t_dl_ms),
                e.status,
                repr(e.energy_mj),
            ]
        )


def log_from_csv(fh, scenario: str = "", hardware: str = "", seed: int = 0, duration: float = 0.0) -> EventLog:
    reader = csv.DictReader(fh)
    entries = []
    for row in reader:
        req = InferenceRequest(
            model=row["model"],
            frame_index=int(row["frame_index"]),
            request_index=int(row["request_index"]),
            t_req_us=round(float(row["t_req_ms"]) * US_PER_MS),
            t_dl_us=round(float(row["t_dl_ms"]) * US_PER_MS),
        )
        entries.append(
            TimelineEntry(
                request=req,
                unit=row["unit"] or None,
                t_start_us=round(float(row["t_start_ms"]) * US_PER_MS) if row["t_start_ms"] else None,
                t_end_us=round(float(row["t_end_ms"]) * US_PER_MS) if row["t_end_ms"] else None,
                status=row["status"],
                energy_mj=float(row["energy_mj"]),
            )
        )
    log = EventLog(scenario=scenario, hardware=hardware, seed=seed, duration=duration, entries=entries)
    log.recount()
    return log


def log_to_obj(log: EventLog) -> dict:
    """The JSON document embedding the per-model counts."""
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": log.scenario,
        "hardware": log.hardware,
        "seed": log.seed,
        "duration_s": log.duration,
        "counts": {
            m: {
                "n_total": c.n_total,
                "n_processed": c.n_processed,
                "n_dropped": c.n_dropped,
                "n_untriggered": c.n_untriggered,
                "n_sat": c.n_sat,
            }
            for m, c in sorted(log.counts.items())
        },
    }
