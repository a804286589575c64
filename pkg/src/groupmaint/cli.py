"""Command line interface.

Subcommands cover sample sizing, scenario sampling, solving the two-stage
problem, single-scenario solves, rolling-horizon simulation, the
direct-grouping benchmark, LP export, and packaged reproduction recipes.
Every run that writes artifacts also writes a JSON manifest with the
seeds and parameters needed to recreate them.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, io, oracles
from .benchmark import direct_grouping_plan, individual_tentative_schedule
from .heuristic import solve_scenario
from .instances import level_system, random_system, reference_system
from .lp_export import export_def_lp
from .pha import HeuristicSubsolver, run_pha
from .rolling import make_planner, rolling_horizon_simulate
from .scenarios import (
    SaaParams,
    cost_bound,
    load_scenarios_csv,
    required_sample_size,
    sample_scenarios,
    save_scenarios_csv,
)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_system(args):
    return io.load_instance(args.instance)


def _load_or_sample(system, args):
    if getattr(args, "scenarios", None):
        return load_scenarios_csv(args.scenarios, horizon=system.horizon)
    return sample_scenarios(system, args.count, args.seed)


def cmd_sample_size(args) -> int:
    if args.first_stage_count is not None:
        count = args.first_stage_count
    elif args.n is not None:
        free = args.n - 1 if args.failed_first else args.n
        count = 2**free
    else:
        print("error: provide --n or --first-stage-count", file=sys.stderr)
        return 2
    sigma = args.sigma
    if args.instance:
        sigma = cost_bound(io.load_instance(args.instance))
    if args.epsilon is not None:
        params = SaaParams(
            epsilon=args.epsilon,
            tau=args.tau,
            alpha=args.alpha,
            sigma=sigma,
            first_stage_count=count,
        )
    else:
        params = SaaParams.default_setting(count, sigma=sigma)
    size = required_sample_size(params)
    print(size.rounded)
    if args.verbose:
        print(f"raw value: {size.raw:.3f}", file=sys.stderr)
    return 0


def cmd_sample(args) -> int:
    system = _load_system(args)
    scen = sample_scenarios(system, args.count, args.seed)
    out = _outdir(args)
    csv_path = out / "scenarios.csv"
    save_scenarios_csv(scen, csv_path)
    io.write_manifest(
        out / "manifest.json",
        "sample",
        {
            "instance": str(args.instance),
            "count": args.count,
            "seed": args.seed,
            "extended_horizon": scen.extended_horizon,
        },
        [csv_path.name],
    )
    print(f"wrote {csv_path}")
    return 0


def cmd_solve_def(args) -> int:
    system = _load_system(args)
    scen = _load_or_sample(system, args)
    out = _outdir(args)
    outputs = []
    result: dict = {"scenarios": len(scen)}

    if args.exact:
        try:
            decision, value = oracles.exact_def_optimum(system, scen)
        except oracles.BudgetExceededError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        result["exact"] = {"x": list(decision.x), "objective": value}

    trace_path = out / "pha_trace.csv"
    decision, trace = run_pha(
        system,
        scen,
        rho=args.rho,
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        subsolver=HeuristicSubsolver(),
    )
    io.write_pha_trace_csv(trace, trace_path)
    outputs.append(trace_path.name)
    result["pha"] = {
        "x": list(decision.x),
        "z": decision.z,
        "objective_estimate": decision.objective_estimate,
        "converged": decision.converged,
        "iterations": decision.iterations,
    }

    result_path = out / "solve_def.json"
    result_path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    outputs.append(result_path.name)
    io.write_manifest(
        out / "manifest.json",
        "solve-def",
        {
            "instance": str(args.instance),
            "scenarios": str(args.scenarios) if args.scenarios else None,
            "count": args.count,
            "seed": args.seed,
            "rho": args.rho,
            "tolerance": args.tolerance,
            "max_iterations": args.max_iterations,
            "exact": args.exact,
        },
        outputs,
    )
    print(json.dumps(result["pha"]))
    if args.exact:
        print(json.dumps(result["exact"]))
    return 0


def cmd_solve_scenario(args) -> int:
    system = _load_system(args)
    scen = load_scenarios_csv(args.scenarios, horizon=system.horizon)
    if not 0 <= args.index < len(scen):
        print(f"error: scenario index {args.index} out of range", file=sys.stderr)
        return 2
    scenario = scen.scenarios[args.index]
    solution = solve_scenario(
        system, scenario, collect_trace=args.debug_trace is not None
    )
    print(
        json.dumps(
            {
                "objective": solution.objective,
                "schedule": [list(r) for r in solution.schedule.times],
                "delta": solution.delta,
                "iota": solution.iota,
            }
        )
    )
    if args.debug_trace:
        Path(args.debug_trace).write_text(
            json.dumps(list(solution.trace), indent=2, default=list) + "\n"
        )
    return 0


def cmd_simulate(args) -> int:
    system = _load_system(args)
    planner = make_planner(args.planner)
    try:
        run = rolling_horizon_simulate(
            system,
            planner,
            replications=args.replications,
            seed=args.seed,
            saa_budget=args.saa_budget,
            zero_hazard=args.hazard == "zero",
        )
    except oracles.BudgetExceededError as exc:
        print(f"error: planner refused: {exc}", file=sys.stderr)
        return 1
    out = _outdir(args)
    csv_path = out / "rolling.csv"
    io.write_rolling_csv(run, csv_path)
    summary = io.write_rolling_summary(run, out / "rolling_summary.json")
    io.write_manifest(
        out / "manifest.json",
        "simulate",
        {
            "instance": str(args.instance),
            "planner": args.planner,
            "replications": args.replications,
            "seed": args.seed,
            "saa_budget": args.saa_budget,
            "hazard": args.hazard,
        },
        [csv_path.name, "rolling_summary.json"],
    )
    print(json.dumps({"mean_cost": summary["mean_cost"], "stderr": summary["stderr"]}))
    return 0


def cmd_benchmark(args) -> int:
    system = _load_system(args)
    scen = _load_or_sample(system, args)
    plan = direct_grouping_plan(system, scen)
    payload = {
        "groups": [list(g) for g in plan.groups],
        "group_times": list(plan.group_times),
        "sample_average_cost": plan.sample_average_cost,
        "planned_times": [list(r) for r in plan.schedule.times],
        "ages": [
            individual_tentative_schedule(
                c, system.horizon, system.setup_cost, include_setup=True
            ).replacement_age
            for c in system.components
        ],
    }
    print(json.dumps(payload))
    return 0


def cmd_export_lp(args) -> int:
    system = _load_system(args)
    scen = _load_or_sample(system, args)
    out = Path(args.lp_out)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest = export_def_lp(system, scen, out)
    print(
        json.dumps(
            {
                "lp": str(out),
                "variables": manifest["variable_total"],
                "constraints": manifest["constraint_total"],
            }
        )
    )
    return 0


def cmd_repro(args) -> int:
    out = _outdir(args)
    if args.which == "sample-sizes":
        sizes = {}
        for n in range(2, 8):
            params = SaaParams.default_setting(2 ** (n - 1))
            sizes[n] = required_sample_size(params).rounded
        (out / "sample_sizes.json").write_text(json.dumps(sizes, indent=2) + "\n")
        print(json.dumps(sizes))
        return 0
    if args.which == "small-gap":
        import numpy as np

        rng = np.random.default_rng(args.seed)
        gaps = []
        for _ in range(args.cases):
            system = random_system(rng, n=2, horizon=6)
            scen = sample_scenarios(system, 4, int(rng.integers(1 << 31)))
            _, exact_value = oracles.exact_def_optimum(system, scen)
            decision, _ = run_pha(system, scen)
            gaps.append((decision.objective_estimate - exact_value) / exact_value)
        payload = {
            "cases": args.cases,
            "mean_gap": sum(gaps) / len(gaps),
            "max_gap": max(gaps),
        }
        (out / "small_gap.json").write_text(json.dumps(payload, indent=2) + "\n")
        print(json.dumps(payload))
        return 0
    if args.which == "rolling":
        results = {}
        levels = ("high", "low")
        for shape in levels:
            for scale in levels:
                for setup in levels:
                    for cr in levels:
                        system = level_system(
                            n=2, horizon=10, shape=shape, scale=scale,
                            setup=setup, cr=cr,
                        )
                        key = f"{shape[0]}{scale[0]}{setup[0]}{cr[0]}"
                        run_h = rolling_horizon_simulate(
                            system, "pha-heuristic",
                            replications=args.replications,
                            seed=args.seed, saa_budget=args.saa_budget,
                        )
                        run_b = rolling_horizon_simulate(
                            system, "direct-grouping",
                            replications=args.replications,
                            seed=args.seed, saa_budget=args.saa_budget,
                        )
                        results[key] = {
                            "pha_heuristic": run_h.mean_cost,
                            "benchmark": run_b.mean_cost,
                        }
                        print(key, json.dumps(results[key]))
        (out / "rolling_comparison.json").write_text(
            json.dumps(results, indent=2, sort_keys=True) + "\n"
        )
        return 0
    print(f"error: unknown recipe {args.which!r}", file=sys.stderr)
    return 2


def cmd_make_instance(args) -> int:
    if args.family == "reference":
        system = reference_system(n=args.n, horizon=args.horizon)
    else:
        shape, scale, setup, cr = args.levels
        levels = {"h": "high", "l": "low"}
        system = level_system(
            n=args.n,
            horizon=args.horizon,
            shape=levels[shape],
            scale=levels[scale],
            setup=levels[setup],
            cr=levels[cr],
        )
    io.save_instance(system, args.path)
    print(f"wrote {args.path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupmaint",
        description="replacement scheduling with shared setup costs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-size", help="scenario count for a target accuracy")
    p.add_argument("--n", type=int, help="number of components")
    p.add_argument("--failed-first", action="store_true",
                   help="one component starts failed, halving the free decisions")
    p.add_argument("--first-stage-count", type=int)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--instance", help="derive sigma from this instance's cost bound")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sample_size)

    p = sub.add_parser("sample", help="sample scenarios to CSV")
    p.add_argument("--instance", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("solve-def", help="solve the two-stage problem")
    p.add_argument("--instance", required=True)
    p.add_argument("--scenarios", help="scenario CSV; omit to sample")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float)
    p.add_argument("--tolerance", type=float, default=1e-2)
    p.add_argument("--max-iterations", type=int, default=50)
    p.add_argument("--exact", action="store_true",
                   help="also solve by exhaustive enumeration (desk scale)")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_solve_def)

    p = sub.add_parser("solve-scenario", help="solve one scenario subproblem")
    p.add_argument("--instance", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--debug-trace", help="write grouping trace JSON here")
    p.set_defaults(func=cmd_solve_scenario)

    p = sub.add_parser("simulate", help="rolling-horizon simulation")
    p.add_argument("--instance", required=True)
    p.add_argument("--planner", default="pha-heuristic",
                   choices=["pha-heuristic", "direct-grouping", "oracle-exact", "none"])
    p.add_argument("--replications", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--saa-budget", type=int)
    p.add_argument("--hazard", default="weibull", choices=["weibull", "zero"])
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="direct-grouping plan")
    p.add_argument("--instance", required=True)
    p.add_argument("--scenarios")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-lp", help="write the extensive form as LP text")
    p.add_argument("--instance", required=True)
    p.add_argument("--scenarios")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lp-out", default="model.lp")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("repro", help="packaged reproduction recipes")
    p.add_argument("--which", required=True,
                   choices=["sample-sizes", "small-gap", "rolling"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=20)
    p.add_argument("--replications", type=int, default=5)
    p.add_argument("--saa-budget", type=int, default=910)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("make-instance", help="write a bundled instance to JSON")
    p.add_argument("--family", default="reference", choices=["reference", "level"])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--levels", default="hhll",
                   help="shape/scale/setup/cr levels as four h or l letters")
    p.add_argument("path")
    p.set_defaults(func=cmd_make_instance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
