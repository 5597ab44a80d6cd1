"""Command-line entry point: single runs, sweeps, validation, re-scoring.

Every emitted file carries a schema_version and the fully resolved run
configuration so results can be reproduced from the outputs alone.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from pathlib import Path

from . import costmodel, loadgen, runtime, scoring, workload
from .errors import ConfigError, ScoringError

DEFAULT_DURATION = 1.0
DEFAULT_SEED = 0


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _load_config(args) -> workload.SuiteConfig:
    if args.suite:
        return workload.load_suite_file(args.suite)
    return workload.builtin_config()


def _load_hardware(args) -> costmodel.HardwareSystem:
    if not args.hw:
        raise ConfigError("--hw is required (a hardware file or preset:<A..M>[:<total PEs>])")
    if args.hw.startswith("preset:"):
        parts = args.hw.split(":")
        total_pes = int(parts[2]) if len(parts) > 2 else 4096
        return costmodel.preset_system(parts[1], total_pes=total_pes)
    return costmodel.load_hardware_file(args.hw)


def _load_costs(args, config: workload.SuiteConfig, hw: costmodel.HardwareSystem) -> costmodel.CostTable:
    if args.costs:
        table = costmodel.load_cost_table_file(args.costs)
        if args.emax is not None and args.emax != table.e_max_mj:
            table = costmodel.CostTable(table.entries(), e_max_mj=args.emax)
        return table
    if args.synthetic:
        return costmodel.synthetic_table(
            config.models, hw, e_max_mj=args.emax, efficiency=args.efficiency
        )
    raise ConfigError("either --costs <file> or --synthetic is required")


def _scoring_config(args, table: costmodel.CostTable) -> scoring.ScoringConfig:
    return scoring.ScoringConfig(
        k=args.k,
        e_max_mj=args.emax if args.emax is not None else table.e_max_mj,
        overall_mean=args.mean,
        report_scale=args.scale,
    )


def _scenarios(args, config: workload.SuiteConfig) -> list[workload.UsageScenario]:
    if args.scenario:
        return [config.suite.scenario(args.scenario)]
    return list(config.suite.scenarios)


def _resolved_config_obj(args, hw, table, cfg) -> dict:
    return {
        "suite": args.suite or "builtin",
        "scenario": args.scenario,
        "hardware": costmodel.system_to_obj(hw),
        "costs": "synthetic" if args.synthetic else str(args.costs),
        "policy": args.policy,
        "duration_s": args.duration,
        "seed": args.seed,
        "scoring": {
            "k": cfg.k,
            "e_max_mj": cfg.e_max_mj,
            "overall_mean": cfg.overall_mean,
            "report_scale": cfg.report_scale,
        },
    }


def _simulate_scenario(scenario, config, hw, table, args):
    stream = loadgen.generate_requests(scenario, config.sources, config.models, args.duration, args.seed)
    log = runtime.simulate(scenario, stream, hw, table, policy=args.policy)
    return stream, log


def _write_scenario_outputs(out: Path, scenario_id: str, log) -> None:
    buf = io.StringIO()
    runtime.log_to_csv(log, buf)
    _atomic_write(out / f"timeline_{scenario_id}.csv", buf.getvalue())
    _atomic_write(out / f"log_{scenario_id}.json", json.dumps(runtime.log_to_obj(log), indent=2) + "\n")


def _summary_text(report: scoring.ScoreReport) -> str:
    lines = []
    header = f"{'scenario':24s} {'model':6s} {'rt':>7s} {'en':>7s} {'acc':>7s} {'qoe':>7s} {'score':>7s}"
    lines.append(header)
    lines.append("-" * len(header))
    for sid, srep in report.scenarios.items():
        for mid, m in srep.models.items():
            lines.append(
                f"{sid:24s} {mid:6s} {m.rt_mean:7.4f} {m.en_mean:7.4f} "
                f"{m.acc_mean:7.4f} {m.qoe:7.4f} {m.model_score:7.4f}"
            )
        lines.append(f"{sid:24s} {'all':6s} {'':7s} {'':7s} {'':7s} {'':7s} {srep.scenario_score:7.4f}")
    lines.append("")
    lines.append(f"overall (arithmetic): {report.overall_arithmetic:.4f}")
    lines.append(f"overall (geometric):  {report.overall_geometric:.4f}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    config = _load_config(args)
    hw = _load_hardware(args)
    table = _load_costs(args, config, hw)
    cfg = _scoring_config(args, table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    logs = {}
    for scenario in _scenarios(args, config):
        _, log = _simulate_scenario(scenario, config, hw, table, args)
        logs[scenario.id] = log
        _write_scenario_outputs(out, scenario.id, log)

    report = scoring.build_report(logs, config, cfg)
    report_obj = scoring.report_to_obj(report)
    report_obj["run_config"] = _resolved_config_obj(args, hw, table, cfg)
    _atomic_write(out / "report.json", json.dumps(report_obj, indent=2) + "\n")
    _atomic_write(out / "summary.txt", _summary_text(report))
    print(_summary_text(report), end="")
    return 0


def cmd_sweep(args) -> int:
    if not args.scenario:
        raise ConfigError("sweep requires --scenario")
    try:
        upstream, downstream = args.edge.split("->")
    except ValueError:
        raise ConfigError("--edge must look like ES->GE") from None
    values = [float(v) for v in args.values.split(",")]

    config = _load_config(args)
    hw = _load_hardware(args)
    table = _load_costs(args, config, hw)
    cfg = _scoring_config(args, table)
    base = config.suite.scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = ["probability,rt_mean,en_mean,qoe,n_processed,scenario_score"]
    for p in values:
        scenario = workload.with_edge_probability(base, upstream, downstream, p)
        _, log = _simulate_scenario(scenario, config, hw, table, args)
        report = scoring.model_report(log, config.models[downstream], cfg)
        scenario_score = scoring.per_scenario_score(log, scenario, config.models, cfg)
        rows.append(
            f"{p!r},{report.rt_mean!r},{report.en_mean!r},{report.qoe!r},"
            f"{report.n_processed},{scenario_score!r}"
        )
        point_obj = {
            "schema_version": workload.SCHEMA_VERSION,
            "probability": p,
            "counts": runtime.log_to_obj(log)["counts"],
            "scenario_score": scenario_score,
        }
        _atomic_write(out / f"sweep_point_{p:g}.json", json.dumps(point_obj, indent=2) + "\n")
    _atomic_write(out / "sweep.csv", "\n".join(rows) + "\n")
    print("\n".join(rows))
    return 0


def cmd_validate(args) -> int:
    config = _load_config(args)
    violations = []
    for scenario in _scenarios(args, config):
        for v in workload.validate_scenario(scenario, config.sources, config.models):
            violations.append(f"{scenario.id}: {v}")
    if args.hw and (args.costs or args.synthetic):
        hw = _load_hardware(args)
        table = _load_costs(args, config, hw)
        for scenario in _scenarios(args, config):
            if any(v.startswith(scenario.id + ":") for v in violations):
                continue
            _, log = _simulate_scenario(scenario, config, hw, table, args)
            for v in runtime.validate_schedule(log, scenario):
                violations.append(f"{scenario.id}: {v}")
    for v in violations:
        print(v)
    if violations:
        return 1
    print("ok")
    return 0


def cmd_score(args) -> int:
    if not args.scenario:
        raise ConfigError("score requires --scenario")
    config = _load_config(args)
    scenario = config.suite.scenario(args.scenario)
    with open(args.log, "r", encoding="utf-8", newline="") as fh:
        log = runtime.log_from_csv(fh, scenario=scenario.id)
    if args.emax is None:
        raise ConfigError("score requires --emax (the cost table is not available here)")
    cfg = scoring.ScoringConfig(k=args.k, e_max_mj=args.emax, overall_mean=args.mean, report_scale=args.scale)
    report = scoring.build_report({scenario.id: log}, config, cfg)
    obj = scoring.report_to_obj(report)
    text = json.dumps(obj, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write(out / "report.json", text)
    print(text, end="")
    return 0


def cmd_export_suite(args) -> int:
    config = _load_config(args)
    obj = workload.config_to_obj(config)
    text = json.dumps(obj, indent=2) + "\n"
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        print(text, end="")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--suite", help="suite specification file (default: built-in suite)")
    p.add_argument("--scenario", help="restrict to one scenario id")
    p.add_argument("--hw", help="hardware file, or preset:<A..M>[:<total PEs>]")
    p.add_argument("--costs", help="cost-table file")
    p.add_argument("--synthetic", action="store_true", help="derive costs from model FLOPs")
    p.add_argument("--efficiency", type=float, default=1.0, help="synthetic roofline efficiency in (0,1]")
    p.add_argument("--policy", default=runtime.LATENCY_GREEDY, choices=[runtime.LATENCY_GREEDY, runtime.ROUND_ROBIN])
    p.add_argument("--duration", type=float, default=DEFAULT_DURATION, help="benchmark window in seconds")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--k", type=float, default=10.0, help="deadline sensitivity (1/s)")
    p.add_argument("--emax", type=float, default=None, help="energy score upper bound (mJ)")
    p.add_argument("--mean", default=scoring.ARITHMETIC, choices=[scoring.ARITHMETIC, scoring.GEOMETRIC])
    p.add_argument("--scale", default="unit", choices=["unit", "percent"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmtsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate and score scenarios")
    _add_common(p_run)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep a dependency trigger probability")
    _add_common(p_sweep)
    p_sweep.add_argument("--edge", required=True, help="edge to sweep, e.g. ES->GE")
    p_sweep.add_argument("--values", required=True, help="comma-separated probabilities")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="validate scenarios (and schedules, given hw+costs)")
    _add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_score = sub.add_parser("score", help="recompute scores from a timeline CSV")
    _add_common(p_score)
    p_score.add_argument("--log", required=True, help="timeline CSV from a previous run")
    p_score.add_argument("--out", help="output directory")
    p_score.set_defaults(func=cmd_score)

    p_export = sub.add_parser("export-suite", help="dump the suite to the specification format")
    p_export.add_argument("--suite", help="suite file to re-export (default: built-in)")
    p_export.add_argument("--out", help="output file (default: stdout)")
    p_export.set_defaults(func=cmd_export_suite)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScoringError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
