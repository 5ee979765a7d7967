"""Command-line front end: simulate, sweep, report.

simulate runs one scenario and writes per-period and per-day CSVs plus a
manifest; sweep crosses a parameter value list with a seed list and writes
one long-format CSV; report checks manifest integrity and emits plain-text
plot series with summary statistics. Exit status is 0 only if every
requested run completed and every output was written.
"""

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

import edgemig
from edgemig.configfile import load_config
from edgemig.engine import RunSink, TraceSink, run_scenario
from edgemig.reporting import (
    DAY_COLUMNS,
    PERIOD_COLUMNS,
    SWEEP_COLUMNS,
    ReportError,
    RunManifest,
    day_csv_rows,
    load_manifest,
    period_rows,
    read_csv,
    verify_outputs,
    write_csv_atomic,
    write_text_atomic,
)
from edgemig.world import ConfigError, validate_config

TRACE_COLUMNS = ("tick", "ue_id", "x", "y", "in_coverage")

SWEEP_PARAMETERS = ("cm-multiplier", "density", "lambda-down")


class CollectingSink(RunSink):
    def __init__(self, quiet: bool, total_days: int, label: str = ""):
        self.period_reports = []
        self.day_rows = []
        self.quiet = quiet
        self.total_days = total_days
        self.label = label

    def on_period(self, period, reports):
        self.period_reports.append(reports)

    def on_day(self, day, rows):
        self.day_rows.extend(rows)
        if not self.quiet:
            print(f"  {self.label}day {day + 1}/{self.total_days} done", flush=True)


class FileTraceSink(TraceSink):
    """Streams per-tick UE rows; meant for small debug scenarios only."""

    def __init__(self, path: Path):
        self.path = path
        self.tmp = path.with_name(path.name + ".tmp")
        self.fh = open(self.tmp, "w")
        self.fh.write(",".join(TRACE_COLUMNS) + "\n")

    def on_tick(self, tick, pop):
        lines = [
            f"{tick},{i},{pop.x[i]!r},{pop.y[i]!r},{int(pop.in_cov[i])}"
            for i in range(pop.n)
        ]
        self.fh.write("\n".join(lines) + "\n")

    def close(self):
        self.fh.close()
        self.tmp.replace(self.path)


def _fail_violations(violations) -> int:
    for v in violations:
        print(f"config error: {v}", file=sys.stderr)
    return 2


def _load_valid_config(path, seed_override=None):
    config, violations = load_config(path)
    if violations:
        return None, violations
    if seed_override is not None:
        config = replace(config, seed=seed_override)
    return config, validate_config(config)


def _summary_lines(report):
    """One line per VNF with per-policy totals over the whole run."""
    per = {}
    for row in report.days:
        key = (row.vnf, row.policy)
        mig, loss = per.get(key, (0.0, 0.0))
        per[key] = (mig + row.migration_cost, loss + row.outage_loss)
    vnf_ids = [f.vnf_id for f in report.config.vnfs]
    policies = [p for p in report.config.policies]
    lines = []
    for vnf_id in vnf_ids:
        parts = []
        for pol in policies:
            mig, loss = per[(vnf_id, pol)]
            parts.append(f"{pol}: mig={mig:.6g} loss={loss:.6g} total={mig + loss:.6g}")
        avail = report.realized_availability[vnf_id]
        lines.append(f"{vnf_id} (availability {avail:.6f})  " + " | ".join(parts))
    return lines


def cmd_simulate(args) -> int:
    config, violations = _load_valid_config(args.config, args.seed)
    if violations:
        return _fail_violations(violations)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    sink = CollectingSink(args.quiet, config.days)
    trace = FileTraceSink(out_dir / "trace.csv") if args.trace else None
    try:
        report = run_scenario(config, sink=sink, trace=trace)
    finally:
        if trace is not None:
            trace.close()

    vnf_ids = [f.vnf_id for f in config.vnfs]
    periods_path = out_dir / "periods.csv"
    days_path = out_dir / "days.csv"
    write_csv_atomic(periods_path, PERIOD_COLUMNS, period_rows(sink.period_reports, vnf_ids))
    write_csv_atomic(days_path, DAY_COLUMNS, day_csv_rows(sink.day_rows))

    manifest = RunManifest.new(args.config, [config.seed], edgemig.__version__)
    manifest.runs.append({"seed": config.seed, "days": config.days, "policies": list(config.policies)})
    manifest.add_output(out_dir, periods_path)
    manifest.add_output(out_dir, days_path)
    if args.trace:
        manifest.add_output(out_dir, out_dir / "trace.csv")
    manifest.write(out_dir)

    print(f"mean in-coverage UE count: {report.mean_in_coverage:.2f}")
    for line in _summary_lines(report):
        print(line)
    return 0


def _apply_parameter(config, parameter: str, value: float):
    if parameter == "cm-multiplier":
        vnfs = tuple(replace(f, migration_cost=f.migration_cost * value) for f in config.vnfs)
        return replace(config, vnfs=vnfs)
    if parameter == "density":
        return replace(config, density_km2=value)
    if parameter == "lambda-down":
        vnfs = tuple(replace(f, lambda_down=value) for f in config.vnfs)
        return replace(config, vnfs=vnfs)
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def cmd_sweep(args) -> int:
    base, violations = _load_valid_config(args.config)
    if violations:
        return _fail_violations(violations)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return 2
    if not values or not seeds:
        print("argument error: --values and --seeds must be nonempty", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.new(args.config, seeds, edgemig.__version__)

    rows = []
    for value in values:
        for seed in seeds:
            config = replace(_apply_parameter(base, args.parameter, value), seed=seed)
            bad = validate_config(config)
            if bad:
                return _fail_violations(bad)
            label = f"{args.parameter}={value:g} seed={seed} "
            sink = CollectingSink(args.quiet, config.days, label)
            run_scenario(config, sink=sink)
            for r in sink.day_rows:
                rows.append((
                    args.parameter, value, seed, r.policy, r.vnf, r.day,
                    r.migration_cost, r.outage_loss,
                ))
            manifest.runs.append({"parameter": args.parameter, "value": value, "seed": seed})

    sweep_path = out_dir / "sweep.csv"
    write_csv_atomic(sweep_path, SWEEP_COLUMNS, rows)
    manifest.add_output(out_dir, sweep_path)
    manifest.write(out_dir)
    if not args.quiet:
        print(f"{len(manifest.runs)} runs written to {sweep_path}")
    return 0


def _daily_totals(out_dir, manifest):
    """(seed, day, policy) -> total migration cost and outage loss summed
    over VNFs, from either a simulate or a sweep output directory."""
    outputs = manifest.get("outputs", {})
    per = {}

    def add(seed, day, policy, mig, loss):
        key = (seed, day, policy)
        m, lo = per.get(key, (0.0, 0.0))
        per[key] = (m + mig, lo + loss)

    if "days.csv" in outputs:
        header, rows = read_csv(Path(out_dir) / "days.csv")
        if tuple(header) != DAY_COLUMNS:
            raise ReportError("UNKNOWN_SCHEMA", f"unexpected days.csv columns {header}")
        seed = manifest["seeds"][0]
        for r in rows:
            add(seed, int(r[0]), r[1], float(r[4]), float(r[5]))
    elif "sweep.csv" in outputs:
        header, rows = read_csv(Path(out_dir) / "sweep.csv")
        if tuple(header) != SWEEP_COLUMNS:
            raise ReportError("UNKNOWN_SCHEMA", f"unexpected sweep.csv columns {header}")
        for r in rows:
            add(int(r[2]), int(r[5]), r[3], float(r[6]), float(r[7]))
    else:
        raise ReportError("NO_DATA", "manifest lists neither days.csv nor sweep.csv")
    return per


def cmd_report(args) -> int:
    out_dir = Path(args.out)
    try:
        manifest = load_manifest(out_dir)
        verify_outputs(out_dir, manifest)
        per = _daily_totals(out_dir, manifest)
    except ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return 1

    policies = sorted({k[2] for k in per})
    days = sorted({k[1] for k in per})
    seeds = sorted({k[0] for k in per})

    lines = ["day policy migration_cost outage_loss"]
    for day in days:
        for pol in policies:
            vals = [per[(s, day, pol)] for s in seeds if (s, day, pol) in per]
            mig = float(np.mean([v[0] for v in vals]))
            loss = float(np.mean([v[1] for v in vals]))
            lines.append(f"{day} {pol} {mig!r} {loss!r}")
    series_path = out_dir / "series.txt"
    write_text_atomic(series_path, "\n".join(lines) + "\n")

    print(f"series written to {series_path}")
    for pol in policies:
        per_seed_means = []
        for s in seeds:
            totals = [sum(per[(s, d, pol)]) for d in days if (s, d, pol) in per]
            if totals:
                per_seed_means.append(float(np.mean(totals)))
        mean = float(np.mean(per_seed_means))
        if len(per_seed_means) > 1:
            se = float(np.std(per_seed_means, ddof=1) / math.sqrt(len(per_seed_means)))
            print(f"{pol}: mean daily total cost {mean:.6g} +- {se:.6g} (SE over {len(per_seed_means)} seeds)")
        else:
            print(f"{pol}: mean daily total cost {mean:.6g} (single seed)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgemig", description=__doc__)
    parser.add_argument("--version", action="version", version=f"edgemig {edgemig.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario and write CSVs")
    p_sim.add_argument("--config", required=True, help="scenario config file (INI)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--trace", action="store_true", help="write per-tick trajectory trace.csv")
    p_sim.add_argument("--quiet", action="store_true", help="suppress progress output")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="cross parameter values with seeds")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--seeds", required=True, help="comma-separated seeds")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("report", help="verify outputs and emit plot series")
    p_rep.add_argument("--out", required=True, help="directory with manifest and CSVs")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail_violations(exc.violations)


if __name__ == "__main__":
    sys.exit(main())
