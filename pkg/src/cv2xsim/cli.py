"""Command-line interface.

Subcommands:

  simulate   run one scenario (all of its replications) and report the
             merged summary; optionally dump per-period traces
  sweep      run a preset or user-supplied sweep grid and emit the table
  presets    list the built-in sweep grids

Exit status is 0 on success, 1 on validation or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_raw, parse_set_overrides, validate_config
from .engine import run_replication, run_replication_with_trace
from .metrics import merge_all
from .runner import (
    SUMMARY_COLUMNS,
    SweepSpec,
    SweepTable,
    builtin_sweep,
    builtin_sweeps,
    emit_table,
    resolve_workers,
    run_sweep,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cv2xsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario")
    sim.add_argument("--config", type=Path, help="JSON scenario file")
    sim.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a config field (repeatable)")
    sim.add_argument("--seed", type=int, help="override master_seed")
    sim.add_argument("--out", type=Path, help="directory for summary files")
    sim.add_argument("--trace", action="store_true",
                     help="write per-period vehicle and attacker traces (needs --out)")

    swp = sub.add_parser("sweep", help="run a sweep grid")
    src = swp.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="name of a built-in sweep")
    src.add_argument("--spec", type=Path, help="JSON sweep specification file")
    swp.add_argument("--reps", type=int, help="override replications per cell")
    swp.add_argument("--parallel", type=int, help="worker threads")
    swp.add_argument("--out", type=Path, default=Path("."), help="output directory")
    swp.add_argument("--format", choices=("csv", "json"), default="csv")

    sub.add_parser("presets", help="list built-in sweeps")
    return parser


def _scenario_from_args(args) -> ScenarioConfig:
    raw = load_raw(args.config) if args.config else {}
    raw.update(parse_set_overrides(args.overrides))
    if args.seed is not None:
        raw["master_seed"] = args.seed
    return validate_config(raw)


def _write_summary_files(out_dir: Path, summaries, merged) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "merged": dataclasses.asdict(merged),
        "replications": [dataclasses.asdict(s) for s in summaries],
    }
    (out_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("replication",) + SUMMARY_COLUMNS)
        for i, s in enumerate(summaries):
            record = dataclasses.asdict(s)
            writer.writerow([i] + ["" if record[c] is None else record[c]
                                   for c in SUMMARY_COLUMNS])
        record = dataclasses.asdict(merged)
        writer.writerow(["merged"] + ["" if record[c] is None else record[c]
                                      for c in SUMMARY_COLUMNS])


def _write_traces(out_dir: Path, rep: int, trace) -> None:
    with open(out_dir / f"trace_targets_rep{rep}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("period", "vehicle_id", "resource", "is_oneshot", "cs", "co"))
        periods, n_targets = trace.target_resource.shape
        for t in range(periods):
            for v in range(n_targets):
                writer.writerow((t, v, trace.target_resource[t, v],
                                 trace.target_oneshot[t, v],
                                 trace.target_cs[t, v], trace.target_co[t, v]))
    with open(out_dir / f"trace_attackers_rep{rep}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("period", "attacker_id", "attack_resource",
                         "hold_counter", "target_set_size"))
        periods, n_attackers = trace.attacker_resource.shape
        for t in range(periods):
            for a in range(n_attackers):
                writer.writerow((t, a, trace.attacker_resource[t, a],
                                 trace.attacker_hold[t, a], trace.target_set_size[t]))


def _cmd_simulate(args) -> int:
    cfg = _scenario_from_args(args)
    if args.trace and args.out is None:
        raise ConfigError("--trace requires --out")

    if args.trace:
        args.out.mkdir(parents=True, exist_ok=True)
        stores = []
        for rep in range(cfg.replications):
            store, trace = run_replication_with_trace(cfg, rep)
            _write_traces(args.out, rep, trace)
            stores.append(store)
    else:
        with ThreadPoolExecutor(max_workers=resolve_workers()) as pool:
            stores = list(pool.map(lambda rep: run_replication(cfg, rep),
                                   range(cfg.replications)))

    summaries = [s.summary(cfg.period_ms) for s in stores]
    merged = merge_all(stores).summary(cfg.period_ms)
    for name, value in dataclasses.asdict(merged).items():
        print(f"{name}={'' if value is None else value}")
    if args.out is not None:
        _write_summary_files(args.out, summaries, merged)
        print(f"wrote {args.out / 'summary.json'}", file=sys.stderr)
    return 0


def _sweep_spec_from_file(path: Path) -> SweepSpec:
    with open(path) as fh:
        data = json.load(fh)
    try:
        return SweepSpec(
            name=data["name"],
            base=validate_config(data.get("base", {})),
            axis_field=data["axis_field"],
            axis_values=tuple(
                tuple(v) if isinstance(v, list) else v for v in data["axis_values"]
            ),
            variants=tuple((label, dict(over)) for label, over in data["variants"]),
        )
    except KeyError as exc:
        raise ConfigError(f"sweep spec {path}: missing key {exc}") from exc


def _cmd_sweep(args) -> int:
    spec = builtin_sweep(args.preset) if args.preset else _sweep_spec_from_file(args.spec)
    # fail on an unwritable destination before hours of grid time, not after
    args.out.mkdir(parents=True, exist_ok=True)
    destination = args.out / f"{spec.name}.{args.format}"
    emit_table(SweepTable(), args.format, destination)
    table = run_sweep(spec, parallelism=args.parallel, replications=args.reps)
    emit_table(table, args.format, destination)
    print(f"wrote {destination} ({len(table.rows)} rows)")
    return 0


def _cmd_presets(_args) -> int:
    for spec in builtin_sweeps():
        variants = ", ".join(label for label, _ in spec.variants)
        print(f"{spec.name}: {spec.axis_field} over {list(spec.axis_values)}; "
              f"variants: {variants}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "sweep": _cmd_sweep, "presets": _cmd_presets}
    try:
        return handlers[args.command](args)
    except (ConfigError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
