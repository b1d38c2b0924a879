"""Parameter-sweep experiment runner.

A sweep is a base scenario, one axis field with a list of values, and a set
of variant overrides; every (axis value, variant, replication) cell runs as
an independent job. Cells are scheduled on a thread pool (the compiled
kernel releases the GIL) and collected into a fixed row order, so the
emitted table is byte-identical at any parallelism.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from .config import ScenarioConfig, to_dict, validate_config
from .engine import run_replication

WORKERS_ENV = "CV2XSIM_WORKERS"

SUMMARY_COLUMNS = (
    "pdr",
    "ipg_tail_1e5_ms",
    "ipg_tail_1e4_ms",
    "prob_ipg_100ms",
    "aoi_tail_1e5_ms",
    "aoi_tail_1e4_ms",
    "prob_aoi_0ms",
    "n_ipg",
    "n_aoi",
    "r",
    "t",
)
TABLE_COLUMNS = ("sweep", "axis_field", "axis_value", "variant", "replication") + SUMMARY_COLUMNS

DENSITY_GRID = (5, 10, 20, 30, 40, 50, 60, 70)
INTERVAL_GRID = tuple(range(1, 16))


@dataclass(frozen=True)
class SweepSpec:
    name: str
    base: ScenarioConfig
    axis_field: str
    axis_values: tuple
    variants: tuple[tuple[str, dict], ...]


@dataclass
class SweepTable:
    rows: list[dict] = field(default_factory=list)
    columns: tuple = TABLE_COLUMNS


def resolve_workers(parallelism: Optional[int] = None) -> int:
    """Worker count: explicit argument, else the environment, else CPU count."""
    if parallelism is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        if env:
            parallelism = int(env)
        else:
            parallelism = os.cpu_count() or 1
    return max(1, parallelism)


def cell_config(spec: SweepSpec, axis_value: Any, overrides: dict[str, Any],
                replications: Optional[int] = None) -> ScenarioConfig:
    """Base config with the axis value and variant overrides applied."""
    raw = to_dict(spec.base)
    raw[spec.axis_field] = axis_value
    raw.update(overrides)
    if replications is not None:
        raw["replications"] = replications
    return validate_config(raw)


def run_sweep(spec: SweepSpec, parallelism: Optional[int] = None,
              replications: Optional[int] = None) -> SweepTable:
    """Run the full grid and return data rows plus mean/std aggregate rows.

    Row order is fixed: all data rows axis-major, variant-minor,
    replication-last, then aggregate rows in the same axis/variant order.
    The whole grid is validated before any cell runs.
    """
    cells = []
    for ai, axis_value in enumerate(spec.axis_values):
        for vi, (label, overrides) in enumerate(spec.variants):
            cfg = cell_config(spec, axis_value, dict(overrides), replications)
            cells.append((ai, vi, axis_value, label, cfg))

    jobs = [
        (ai, vi, rep, axis_value, label, cfg)
        for ai, vi, axis_value, label, cfg in cells
        for rep in range(cfg.replications)
    ]

    def run_cell(job):
        ai, vi, rep, axis_value, label, cfg = job
        return run_replication(cfg, rep).summary(cfg.period_ms)

    with ThreadPoolExecutor(max_workers=resolve_workers(parallelism)) as pool:
        summaries = list(pool.map(run_cell, jobs))

    table = SweepTable()
    for (ai, vi, rep, axis_value, label, _cfg), summary in zip(jobs, summaries):
        row = {
            "sweep": spec.name,
            "axis_field": spec.axis_field,
            "axis_value": axis_value,
            "variant": label,
            "replication": rep,
        }
        row.update(asdict(summary))
        table.rows.append(row)

    data_rows = list(table.rows)
    for ai, axis_value in enumerate(spec.axis_values):
        for vi, (label, _overrides) in enumerate(spec.variants):
            group = [
                r for r in data_rows
                if r["axis_value"] == axis_value and r["variant"] == label
            ]
            for stat in ("mean", "std"):
                row = {
                    "sweep": spec.name,
                    "axis_field": spec.axis_field,
                    "axis_value": axis_value,
                    "variant": label,
                    "replication": stat,
                }
                for col in SUMMARY_COLUMNS:
                    values = [r[col] for r in group if r[col] is not None]
                    if not values:
                        row[col] = None
                    elif stat == "mean":
                        row[col] = sum(values) / len(values)
                    else:
                        mean = sum(values) / len(values)
                        row[col] = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
                table.rows.append(row)
    return table


def builtin_sweeps() -> list[SweepSpec]:
    """Named preset grids.

    - fig_density: target-vehicle density sweep with five attackers, all six
      combinations of {attackers, no attackers} x {no one-shot, one-shot
      (2,6), one-shot (5,15)}.
    - fig_interval_5 / fig_interval_30: fixed attacker hold interval swept
      over 1..15 with as many attackers as targets, per one-shot setting.
    """
    density_base = validate_config({"num_targets": 5, "num_attackers": 5})
    oneshot_variants = [
        ("no_oneshot", {"oneshot_enabled": False}),
        ("oneshot_2_6", {"oneshot_enabled": True, "oneshot_range": [2, 6]}),
        ("oneshot_5_15", {"oneshot_enabled": True, "oneshot_range": [5, 15]}),
    ]
    density_variants = []
    for label, over in oneshot_variants:
        density_variants.append((f"attack_{label}", dict(over)))
    for label, over in oneshot_variants:
        density_variants.append((f"no_attack_{label}", {**over, "num_attackers": 0}))

    specs = [
        SweepSpec(
            name="fig_density",
            base=density_base,
            axis_field="num_targets",
            axis_values=DENSITY_GRID,
            variants=tuple(density_variants),
        )
    ]
    for v in (5, 30):
        specs.append(
            SweepSpec(
                name=f"fig_interval_{v}",
                base=validate_config({"num_targets": v, "num_attackers": v}),
                axis_field="attacker_interval",
                axis_values=INTERVAL_GRID,
                variants=tuple(oneshot_variants),
            )
        )
    return specs


def builtin_sweep(name: str) -> SweepSpec:
    for spec in builtin_sweeps():
        if spec.name == name:
            return spec
    known = ", ".join(s.name for s in builtin_sweeps())
    raise KeyError(f"unknown preset {name!r} (known: {known})")


def _cell_text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (tuple, list)):
        return json.dumps(list(value))
    return str(value)


def _cell_value(text: str) -> Any:
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    try:
        parsed = json.loads(text)
        return tuple(parsed) if isinstance(parsed, list) else parsed
    except json.JSONDecodeError:
        return text


def emit_table(table: SweepTable, fmt: str, destination: Union[str, Path]) -> None:
    """Write the table atomically (write-then-rename; never a partial file)."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown table format {fmt!r}")
    destination = Path(destination)
    tmp = destination.with_name(destination.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh)
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([_cell_text(row[c]) for c in table.columns])
        else:
            rows = [
                {c: (list(row[c]) if isinstance(row[c], tuple) else row[c])
                 for c in table.columns}
                for row in table.rows
            ]
            json.dump({"columns": list(table.columns), "rows": rows}, fh, indent=1)
            fh.write("\n")
    os.replace(tmp, destination)


def parse_table(path: Union[str, Path], fmt: Optional[str] = None) -> SweepTable:
    """Read back a table emitted by emit_table (inverse up to value types)."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix == ".json" else "csv"
    table = SweepTable()
    if fmt == "csv":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            table.columns = tuple(header)
            for cells in reader:
                table.rows.append(
                    {c: _cell_value(text) for c, text in zip(header, cells)}
                )
    else:
        with open(path) as fh:
            data = json.load(fh)
        table.columns = tuple(data["columns"])
        for row in data["rows"]:
            table.rows.append(
                {c: (tuple(v) if isinstance(v, list) else v) for c, v in row.items()}
            )
    return table
