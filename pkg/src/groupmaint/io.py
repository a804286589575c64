"""Instance files, run manifests, and tabular exports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from . import __version__
from .model import ComponentSpec, Schedule, SystemSpec
from .pha import PhaState
from .rolling import RollingRun

INSTANCE_SCHEMA = "groupmaint-instance-1"
MANIFEST_SCHEMA = "groupmaint-manifest-1"


def save_instance(system: SystemSpec, path: str | Path) -> None:
    doc = {
        "schema": INSTANCE_SCHEMA,
        "system": {
            "n": system.n,
            "T": system.horizon,
            "delta": system.period_len,
            "setup_cost": system.setup_cost,
            "individuals_q": system.max_individuals,
        },
        "components": [
            {
                "shape": c.shape,
                "scale": c.scale,
                "cost_pr": c.cost_pr,
                "cost_cr": c.cost_cr,
                "initial_age": c.initial_age,
                "initially_failed": c.initially_failed,
            }
            for c in system.components
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_instance(path: str | Path) -> SystemSpec:
    doc = json.loads(Path(path).read_text())
    sys_doc = doc["system"]
    comps = tuple(
        ComponentSpec(
            index=i,
            shape=float(c["shape"]),
            scale=float(c["scale"]),
            cost_pr=float(c["cost_pr"]),
            cost_cr=float(c["cost_cr"]),
            initial_age=int(c.get("initial_age", 0)),
            initially_failed=bool(c.get("initially_failed", False)),
        )
        for i, c in enumerate(doc["components"])
    )
    if len(comps) != int(sys_doc["n"]):
        raise ValueError("component list does not match the declared n")
    return SystemSpec(
        components=comps,
        horizon=int(sys_doc["T"]),
        period_len=float(sys_doc.get("delta", 1.0)),
        setup_cost=float(sys_doc.get("setup_cost", 0.0)),
        max_individuals=int(sys_doc["individuals_q"]) if "individuals_q" in sys_doc else None,
    )


def save_schedule(schedule: Schedule, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([list(row) for row in schedule.times]) + "\n"
    )


def load_schedule(path: str | Path) -> Schedule:
    rows = json.loads(Path(path).read_text())
    return Schedule(times=tuple(tuple(int(t) for t in row) for row in rows))


def write_manifest(path: str | Path, command: str, parameters: dict, outputs: list[str]) -> dict:
    doc = {
        "schema": MANIFEST_SCHEMA,
        "package_version": __version__,
        "command": command,
        "parameters": parameters,
        "outputs": sorted(outputs),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def write_pha_trace_csv(trace: list[PhaState], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n = len(trace[0].consensus) if trace else 0
        writer.writerow(
            ["iteration", "convergence"] + [f"consensus_{i}" for i in range(n)]
        )
        for state in trace:
            dist = state.convergence
            writer.writerow(
                [state.iteration, "" if dist == float("inf") else f"{dist:.10g}"]
                + [f"{c:.10g}" for c in state.consensus]
            )


def write_rolling_csv(run: RollingRun, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "replication", "period", "failed", "action",
                "cost_pr", "cost_cr", "cost_setup", "cost_total",
            ]
        )
        for rec in run.records:
            writer.writerow(
                [
                    rec.replication,
                    rec.period,
                    " ".join(map(str, rec.failed)),
                    " ".join(map(str, rec.action)),
                    f"{rec.cost_pr:.10g}",
                    f"{rec.cost_cr:.10g}",
                    f"{rec.cost_setup:.10g}",
                    f"{rec.cost_total:.10g}",
                ]
            )


def write_rolling_summary(run: RollingRun, path: str | Path) -> dict:
    doc = {
        "schema": "groupmaint-rolling-1",
        "planner": run.planner,
        "seed": run.seed,
        "saa_budget": run.saa_budget,
        "replications": len(run.totals),
        "totals": list(run.totals),
        "mean_cost": run.mean_cost,
        "stderr": run.stderr,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def write_value_table_csv(table, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "ages", "failed", "value", "best_action"])
        for (stage, ages, failed), value in sorted(table.values.items()):
            writer.writerow(
                [
                    stage,
                    " ".join(map(str, ages)),
                    " ".join("1" if f else "0" for f in failed),
                    f"{value:.10g}",
                    " ".join(map(str, table.actions[(stage, ages, failed)])),
                ]
            )
