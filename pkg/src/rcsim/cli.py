"""Command-line driver: run, sweep, gen-trace, analyze-histogram, print-ct-table."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from rcsim import engine as engine_mod
from rcsim.config import RunConfig, load_config
from rcsim.reliability import DEFAULT_ERROR_MODEL, ct_table_csv, derive_ct_from_model
from rcsim.report import (
    emit_report,
    migration_histogram_analysis,
    parse_histogram_csv,
)
from rcsim.runner import sweep, sweep_csv


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.variant:
        cfg.variant = args.variant
    if args.trace:
        cfg.workload.source = "trace"
        cfg.workload.trace = args.trace
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _emit(cfg: RunConfig, report, runner_engine=None, metrics=None):
    if not cfg.out_dir:
        return []
    decisions = metrics.decisions if (metrics and cfg.log_decisions) else None
    snapshots = metrics.state_snapshots if (metrics and cfg.log_state_snapshots) else None
    rows = None
    if cfg.log_events and runner_engine is not None:
        rows = engine_mod.phase_rows(runner_engine)
    return emit_report(report, cfg.out_dir, decisions=decisions,
                       snapshots=snapshots, phase_rows=rows)


def cmd_run(args) -> int:
    cfg = _load(args)
    from rcsim.runner import SimulationRunner

    runner = SimulationRunner(cfg)
    report = runner.run()
    paths = _emit(cfg, report, runner.engine, runner.ftl.metrics)
    print(report.to_json(), end="")
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    reports = sweep(cfg, variants, baseline_variant=args.baseline)
    table = sweep_csv(reports)
    print(table, end="")
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(table)
        for r in reports:
            emit_report(r, out / r.variant)
    return 0


def cmd_gen_trace(args) -> int:
    cfg = _load(args)
    spec = cfg.workload
    spec.source = args.source
    if args.profile:
        spec.profile = args.profile
    if args.mix:
        spec.mix = args.mix
    if args.count:
        spec.count = args.count
    if args.working_set:
        spec.working_set = args.working_set
    from rcsim.runner import build_workload
    from rcsim.workload import write_trace_csv

    requests = build_workload(cfg)
    if args.trace_out == "-":
        n = write_trace_csv(requests, sys.stdout)
    else:
        with open(args.trace_out, "w") as fh:
            n = write_trace_csv(requests, fh)
        print(f"wrote {n} requests to {args.trace_out}", file=sys.stderr)
    return 0


def cmd_analyze_histogram(args) -> int:
    with open(args.histogram) as fh:
        hist = parse_histogram_csv(fh)
    avoided = migration_histogram_analysis(hist, args.threshold)
    if avoided is None:
        print("avoided_fraction,not-applicable")
    else:
        print(f"avoided_fraction,{avoided:.6f}")
    return 0


def cmd_print_ct_table(args) -> int:
    table = derive_ct_from_model(DEFAULT_ERROR_MODEL, args.retention)
    print(ct_table_csv(table), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcsim",
        description="Trace-driven SSD simulator with restricted-copyback migration")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--trace", help="trace CSV (switches workload source)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory for report files")
        p.add_argument("--variant", help="baseline | rcftlN | rcftlN-greedy")

    p = sub.add_parser("run", help="run one simulation and print its report")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="compare variants on one workload")
    common(p)
    p.add_argument("--variants", default="baseline,rcftl2,rcftl3,rcftl4")
    p.add_argument("--baseline", default=None, help="normalization reference variant")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("gen-trace", help="emit a synthetic workload as trace CSV")
    common(p)
    p.add_argument("--source", default="synthetic",
                   choices=["synthetic", "append_random"])
    p.add_argument("--profile", default=None, help="High | Mid | Low | custom")
    p.add_argument("--mix", default=None, help="oltp | ntrx | fileserver | varmail | none")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--working-set", type=int, default=None, dest="working_set")
    p.add_argument("--trace-out", default="-", help="output path, - for stdout")
    p.set_defaults(fn=cmd_gen_trace)

    p = sub.add_parser("analyze-histogram",
                       help="avoided off-chip fraction for a migration histogram")
    p.add_argument("--histogram", required=True, help="CSV of migrations,pages")
    p.add_argument("--threshold", type=int, default=4,
                   help="consecutive-copyback budget n")
    p.set_defaults(fn=cmd_analyze_histogram)

    p = sub.add_parser("print-ct-table", help="print the copyback threshold table")
    p.add_argument("--retention", type=int, default=12, help="months")
    p.set_defaults(fn=cmd_print_ct_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
