"""Deterministic generation of jittered inference-request streams.

Time is carried internally as integer microsecond ticks so that identical
inputs always give bit-identical streams; every public field also exposes
milliseconds as floats.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Mapping

from .errors import ConfigError
from .workload import InputSource, ScenarioEntry, SuiteConfig, UnitModel, UsageScenario, validate_scenario

US_PER_MS = 1000
US_PER_S = 1_000_000

_NORMAL = NormalDist()
_JITTER_SIGMA = 1.0 / 6.0


def det_rand(seed: int, source: str, frame: int) -> float:
    """A pure, uniform-ish variate in [0, 1) keyed by (seed, source, frame).

    Implemented as a keyed blake2b hash of the inputs; identical arguments
    always give the identical value, across processes and platforms.
    """
    digest = hashlib.blake2b(
        f"{seed}|{source}|{frame}".encode("ascii"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2**64


def jitter_offset(source: InputSource, frame: int, seed: int) -> float:
    """Jitter in milliseconds, bounded to [-max_jitter, +max_jitter].

    The uniform variate is pushed through a truncated Gaussian centered at
    0.5 (sigma 1/6, clamped to [0, 1]), then scaled to the jitter bound.
    """
    if source.max_jitter == 0.0:
        return 0.0
    u = det_rand(seed, source.id, frame)
    u = min(max(u, 1e-12), 1.0 - 1e-12)
    g = 0.5 + _JITTER_SIGMA * _NORMAL.inv_cdf(u)
    g = min(max(g, 0.0), 1.0)
    return source.max_jitter * 2.0 * (g - 0.5)


def _request_time_us(source: InputSource, frame: int, seed: int) -> int:
    base = round(source.init_latency * US_PER_MS) + round(frame * US_PER_S / source.streaming_rate)
    return base + round(jitter_offset(source, frame, seed) * US_PER_MS)


def request_time(source: InputSource, frame: int, seed: int) -> float:
    """Arrival time (ms) of frame `frame` of `source`: init latency, periodic
    position, plus the jitter term."""
    if frame < 0:
        raise ValueError("frame must be >= 0")
    return _request_time_us(source, frame, seed) / US_PER_MS


def _deadline_us(target_rate: float, request_index: int, init_latency_ms: float) -> int:
    return round(init_latency_ms * US_PER_MS) + round((request_index + 1) * US_PER_S / target_rate)


def deadline(entry: ScenarioEntry, request_index: int, init_latency_ms: float = 0.0) -> float:
    """Deadline (ms) of a model's k-th request: one target-rate period after
    the previous one. Jitter never shifts deadlines."""
    if request_index < 0:
        raise ValueError("request_index must be >= 0")
    return _deadline_us(entry.target_rate, request_index, init_latency_ms) / US_PER_MS


@dataclass(frozen=True)
class InferenceRequest:
    """One (model, frame) inference request with its timing."""

    model: str
    frame_index: int
    request_index: int
    t_req_us: int
    t_dl_us: int

    @property
    def t_req_ms(self) -> float:
        return self.t_req_us / US_PER_MS

    @property
    def t_dl_ms(self) -> float:
        return self.t_dl_us / US_PER_MS

    @property
    def t_slack_us(self) -> int:
        return self.t_dl_us - self.t_req_us

    @property
    def t_slack_ms(self) -> float:
        return self.t_slack_us / US_PER_MS


@dataclass(frozen=True)
class RequestStream:
    """All requests of one scenario over the benchmark window, sorted by time."""

    scenario: str
    duration: float
    seed: int
    requests: tuple[InferenceRequest, ...]
    target_frame_count: Mapping[str, int]

    def by_model(self, model: str) -> list[InferenceRequest]:
        return [r for r in self.requests if r.model == model]


def select_frames(target_rate: float, streaming_rate: float, count: int) -> list[int]:
    """The first `count` source frames a model samples, via a rate accumulator.

    Frame i is selected iff floor((i+1) * rate / SR) > floor(i * rate / SR),
    which spreads selections evenly and degenerates to every other frame
    when the target rate is half the streaming rate.
    """
    ratio = Fraction(target_rate) / Fraction(streaming_rate)
    frames: list[int] = []
    i = 0
    prev = 0
    while len(frames) < count:
        cur = math.floor((i + 1) * ratio)
        if cur > prev:
            frames.append(i)
        prev = cur
        i += 1
    return frames


def target_count(target_rate: float, duration: float) -> int:
    """targFrameID: the number of frames a model must process in the window."""
    return math.floor(target_rate * duration + 0.5)


def generate_requests(
    scenario: UsageScenario,
    sources: Mapping[str, InputSource],
    models: Mapping[str, UnitModel],
    duration: float,
    seed: int,
) -> RequestStream:
    """Build the jittered request stream for one scenario.

    Multi-modal models take the latest arrival over their input sources at
    the aligned frame. Requests near the window end are generated even when
    jitter pushes them past `duration`.
    """
    if duration <= 0:
        raise ConfigError("duration must be > 0")
    violations = validate_scenario(scenario, sources, models)
    if violations:
        raise ConfigError(f"invalid scenario {scenario.id!r}: " + "; ".join(violations))

    requests: list[InferenceRequest] = []
    counts: dict[str, int] = {}
    for entry in scenario.entries:
        model = models[entry.model]
        srcs = [sources[s] for s in model.input_sources]
        drive_rate = min(s.streaming_rate for s in srcs)
        init_ms = max(s.init_latency for s in srcs)
        count = target_count(entry.target_rate, duration)
        counts[entry.model] = count
        for k, frame in enumerate(select_frames(entry.target_rate, drive_rate, count)):
            t_req = max(_request_time_us(s, frame, seed) for s in srcs)
            t_dl = _deadline_us(entry.target_rate, k, init_ms)
            requests.append(
                InferenceRequest(
                    model=entry.model,
                    frame_index=frame,
                    request_index=k,
                    t_req_us=t_req,
                    t_dl_us=t_dl,
                )
            )
    requests.sort(key=lambda r: (r.t_req_us, r.model, r.frame_index))
    return RequestStream(
        scenario=scenario.id,
        duration=duration,
        seed=seed,
        requests=tuple(requests),
        target_frame_count=counts,
    )


def generate_for_config(config: SuiteConfig, scenario_id: str, duration: float, seed: int) -> RequestStream:
    scenario = config.suite.scenario(scenario_id)
    return generate_requests(scenario, config.sources, config.models, duration, seed)


STREAM_CSV_FIELDS = ("model", "request_index", "frame_index", "t_req_ms", "t_dl_ms")


def stream_to_csv(stream: RequestStream, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(STREAM_CSV_FIELDS)
    for r in stream.requests:
        writer.writerow([r.model, r.request_index, r.frame_index, repr(r.t_req_ms), repr(r.t_dl_ms)])
