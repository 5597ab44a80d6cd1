"""Unit scores and their hierarchical aggregation.

Per inference: the product of real-time, energy, and accuracy scores.
Per model: the mean of per-inference scores over completed entries only
(dropped frames are charged through the QoE score instead). Per scenario:
the mean over its models of model score times QoE. Overall: the mean over
scenarios, arithmetic by default with the geometric variant also reported.

Summation order is fixed (ascending request index, then scenario model
order, then suite scenario order) so reports are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ScoringError
from .runtime import COMPLETED, EventLog
from .workload import (
    HIGHER_IS_BETTER,
    LOWER_IS_BETTER,
    SCHEMA_VERSION,
    SuiteConfig,
    UnitModel,
    UsageScenario,
    accuracy_goal,
    achieved_metric,
)

ARITHMETIC = "arithmetic"
GEOMETRIC = "geometric"

_EXP_CLAMP = 700.0


@dataclass(frozen=True)
class ScoringConfig:
    """Knobs of the scoring pipeline.

    `k` is the deadline sensitivity in 1/second; the sigmoid argument is
    taken in seconds. `qoe_counts_untriggered` controls whether requests
    whose gate never fired count as droppable work.
    """

    k: float = 10.0
    e_max_mj: float = 1.0
    overall_mean: str = ARITHMETIC
    report_scale: str = "unit"
    qoe_counts_untriggered: bool = False

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ScoringError("k must be >= 0")
        if self.e_max_mj <= 0:
            raise ScoringError("e_max_mj must be > 0")
        if self.overall_mean not in (ARITHMETIC, GEOMETRIC):
            raise ScoringError(f"unknown overall_mean {self.overall_mean!r}")
        if self.report_scale not in ("unit", "percent"):
            raise ScoringError(f"unknown report_scale {self.report_scale!r}")


def rt_score(latency_ms: float, slack_ms: float, k: float) -> float:
    """Sigmoid of how far the response ran past its slack, in seconds.

    Exactly 0.5 when latency equals slack; constant 0.5 for k = 0.
    """
    arg = k * (latency_ms - slack_ms) / 1000.0
    arg = min(max(arg, -_EXP_CLAMP), _EXP_CLAMP)
    return 1.0 / (1.0 + math.exp(arg))


def energy_score(e_mj: float, e_max_mj: float) -> float:
    """Linear score: 1 at zero energy, 0 at the configured upper bound."""
    if e_max_mj <= 0:
        raise ScoringError("e_max_mj must be > 0")
    if e_mj < 0 or e_mj > e_max_mj:
        raise ScoringError(f"energy {e_mj} mJ outside [0, {e_max_mj}]")
    return (e_max_mj - e_mj) / e_max_mj


def accuracy_score(achieved: float, goal: float, direction: str = HIGHER_IS_BETTER) -> float:
    """Ratio of achieved metric to the goal, clamped to [0, 1].

    For error metrics the ratio inverts: smaller achieved error is better.
    """
    if goal <= 0:
        raise ScoringError("accuracy goal must be > 0")
    if direction == LOWER_IS_BETTER:
        if achieved <= 0:
            raise ScoringError("achieved error metric must be > 0")
        ratio = goal / achieved
    else:
        ratio = achieved / goal
    return min(max(ratio, 0.0), 1.0)


def qoe_score(n_processed: int, n_total: int) -> float:
    """Fraction of frames actually processed: 1 - frame drop rate."""
    if n_total <= 0:
        raise ScoringError("n_total must be > 0")
    if not 0 <= n_processed <= n_total:
        raise ScoringError("n_processed must be in [0, n_total]")
    return n_processed / n_total


def per_inference_score(rt: float, en: float, acc: float) -> float:
    return rt * en * acc


@dataclass(frozen=True)
class ModelReport:
    rt_mean: float
    en_mean: float
    acc_mean: float
    model_score: float
    qoe: float
    n_total: int
    n_processed: int
    n_dropped: int
    n_untriggered: int
    n_sat: int


@dataclass(frozen=True)
class ScenarioReport:
    models: Mapping[str, ModelReport]
    scenario_score: float


@dataclass(frozen=True)
class ScoreReport:
    scenarios: Mapping[str, ScenarioReport]
    overall_arithmetic: float
    overall_geometric: float
    config: ScoringConfig

    @property
    def overall(self) -> float:
        if self.config.overall_mean == GEOMETRIC:
            return self.overall_geometric
        return self.overall_arithmetic


def _model_inference_scores(log: EventLog, model: UnitModel, cfg: ScoringConfig):
    """Yield (rt, en, acc) for completed entries, ascending request index."""
    acc = accuracy_score(achieved_metric(model), accuracy_goal(model), model.metric_direction)
    entries = sorted(log.by_model(model.id), key=lambda e: e.request.request_index)
    for e in entries:
        if e.status != COMPLETED:
            continue
        latency_ms = (e.t_end_us - e.request.t_req_us) / 1000.0
        slack_ms = e.request.t_slack_us / 1000.0
        yield (
            rt_score(latency_ms, slack_ms, cfg.k),
            energy_score(e.energy_mj, cfg.e_max_mj),
            acc,
        )


def per_model_score(log: EventLog, model: UnitModel, cfg: ScoringConfig) -> float:
    """Mean per-inference score over completed entries; 0 when none completed."""
    total = 0.0
    n = 0
    for rt, en, acc in _model_inference_scores(log, model, cfg):
        total += per_inference_score(rt, en, acc)
        n += 1
    return total / n if n else 0.0


def model_report(log: EventLog, model: UnitModel, cfg: ScoringConfig) -> ModelReport:
    rt_sum = en_sum = acc_sum = product_sum = 0.0
    n = 0
    for rt, en, acc in _model_inference_scores(log, model, cfg):
        rt_sum += rt
        en_sum += en
        acc_sum += acc
        product_sum += per_inference_score(rt, en, acc)
        n += 1
    counts = log.counts.get(model.id)
    if counts is None:
        log.recount()
        counts = log.counts[model.id]
    denom = counts.n_total if cfg.qoe_counts_untriggered else counts.n_processed + counts.n_dropped
    qoe = qoe_score(counts.n_processed, denom) if denom > 0 else 0.0
    return ModelReport(
        rt_mean=rt_sum / n if n else 0.0,
        en_mean=en_sum / n if n else 0.0,
        acc_mean=acc_sum / n if n else 0.0,
        model_score=product_sum / n if n else 0.0,
        qoe=qoe,
        n_total=counts.n_total,
        n_processed=counts.n_processed,
        n_dropped=counts.n_dropped,
        n_untriggered=counts.n_untriggered,
        n_sat=counts.n_sat,
    )


def per_scenario_score(
    log: EventLog,
    scenario: UsageScenario,
    models: Mapping[str, UnitModel],
    cfg: ScoringConfig,
) -> float:
    """Mean over the scenario's models of (model score x QoE)."""
    total = 0.0
    for model_id in scenario.model_ids:
        rep = model_report(log, models[model_id], cfg)
        total += rep.model_score * rep.qoe
    return total / len(scenario.model_ids)


def overall_score(scenario_scores: Sequence[float], mean: str = ARITHMETIC) -> float:
    """Aggregate scenario scores; geometric mean of any zero is zero."""
    if not scenario_scores:
        raise ScoringError("need at least one scenario score")
    if mean == GEOMETRIC:
        if any(s <= 0.0 for s in scenario_scores):
            return 0.0
        log_sum = 0.0
        for s in scenario_scores:
            log_sum += math.log(s)
        return math.exp(log_sum / len(scenario_scores))
    total = 0.0
    for s in scenario_scores:
        total += s
    return total / len(scenario_scores)


def build_report(
    logs: Mapping[str, EventLog],
    config: SuiteConfig,
    cfg: ScoringConfig,
) -> ScoreReport:
    """Score one EventLog per scenario id, in suite scenario order."""
    scenario_reports: dict[str, ScenarioReport] = {}
    scores: list[float] = []
    for scenario in config.suite.scenarios:
        if scenario.id not in logs:
            continue
        log = logs[scenario.id]
        models: dict[str, ModelReport] = {}
        total = 0.0
        for model_id in scenario.model_ids:
            rep = model_report(log, config.models[model_id], cfg)
            models[model_id] = rep
            total += rep.model_score * rep.qoe
        score = total / len(scenario.model_ids)
        scenario_reports[scenario.id] = ScenarioReport(models=models, scenario_score=score)
        scores.append(score)
    return ScoreReport(
        scenarios=scenario_reports,
        overall_arithmetic=overall_score(scores, ARITHMETIC),
        overall_geometric=overall_score(scores, GEOMETRIC),
        config=cfg,
    )


def report_to_obj(report: ScoreReport) -> dict:
    scale = 100.0 if report.config.report_scale == "percent" else 1.0

    def s(x: float) -> float:
        return x * scale

    return {
        "schema_version": SCHEMA_VERSION,
        "scoring_config": {
            "k": report.config.k,
            "e_max_mj": report.config.e_max_mj,
            "overall_mean": report.config.overall_mean,
            "report_scale": report.config.report_scale,
            "qoe_counts_untriggered": report.config.qoe_counts_untriggered,
        },
        "scenarios": {
            sid: {
                "scenario_score": s(srep.scenario_score),
                "models": {
                    mid: {
                        "rt_mean": s(m.rt_mean),
                        "en_mean": s(m.en_mean),
                        "acc_mean": s(m.acc_mean),
                        "model_score": s(m.model_score),
                        "qoe": s(m.qoe),
                        "n_total": m.n_total,
                        "n_processed": m.n_processed,
                        "n_dropped": m.n_dropped,
                        "n_untriggered": m.n_untriggered,
                        "n_sat": m.n_sat,
                    }
                    for mid, m in srep.models.items()
                },
            }
            for sid, srep in report.scenarios.items()
        },
        "overall": {
            "arithmetic": s(report.overall_arithmetic),
            "geometric": s(report.overall_geometric),
        },
    }
