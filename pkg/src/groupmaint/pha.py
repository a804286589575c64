"""Consensus solver over the two-stage scenario problem.

Scenario subproblems are solved independently, their period-1 decision
vectors are averaged into a consensus, and per-scenario prices penalize
disagreement; iterations repeat with an added proximal pull until the
probability-weighted disagreement distance drops below the tolerance.
The terminal consensus is rounded and repaired into a binary shared
first stage, whose cost is then re-estimated on all scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .heuristic import PhTerms, solve_scenario
from .model import Scenario, SystemSpec
from .scenarios import ScenarioSet


@dataclass(frozen=True)
class PhaState:
    """One iteration snapshot: consensus, prices, and disagreement."""

    iteration: int
    consensus: tuple[float, ...]
    multipliers: tuple[tuple[float, ...], ...]
    rho: float
    convergence: float
    tolerance: float
    max_iterations: int
    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class FirstStageDecision:
    x: tuple[int, ...]
    z: int
    objective_estimate: float
    converged: bool = True
    iterations: int = 0

    def __post_init__(self) -> None:
        if any(self.z < xi for xi in self.x):
            raise ValueError("setup indicator must cover every replacement")


class HeuristicSubsolver:
    """Scenario handle backed by the grouping heuristic."""

    def __init__(self, delta_grid=(0, 1), iota_grid=None):
        self.delta_grid = tuple(delta_grid)
        self.iota_grid = tuple(iota_grid) if iota_grid is not None else None

    def __call__(self, system, scenario, terms, first_stage_fix=None):
        try:
            sol = solve_scenario(
                system,
                scenario,
                terms=terms,
                delta_grid=self.delta_grid,
                iota_grid=self.iota_grid,
                first_stage_fix=first_stage_fix,
            )
        except ValueError:
            return None, math.inf, None
        return sol.schedule, sol.objective, sol.first_stage


def aggregate_and_update(
    solutions: Sequence[tuple[int, ...]], state: PhaState
) -> PhaState:
    """Average the scenario decisions, update prices, measure disagreement.

    The new consensus is the probability-weighted mean; each scenario's
    price moves by rho times its deviation from the consensus, which keeps
    the probability-weighted price sum at zero; the convergence distance
    is the weighted Euclidean deviation.
    """
    if len(solutions) != len(state.multipliers):
        raise ValueError("one solution per scenario is required")
    n = len(state.consensus)
    probs = state.probabilities
    consensus = tuple(
        sum(p * x[i] for p, x in zip(probs, solutions)) for i in range(n)
    )
    multipliers = tuple(
        tuple(
            w + state.rho * (x[i] - consensus[i])
            for i, w in enumerate(old)
        )
        for old, x in zip(state.multipliers, solutions)
    )
    distance = sum(
        p * math.sqrt(sum((x[i] - consensus[i]) ** 2 for i in range(n)))
        for p, x in zip(probs, solutions)
    )
    return PhaState(
        iteration=state.iteration + 1,
        consensus=consensus,
        multipliers=multipliers,
        rho=state.rho,
        convergence=distance,
        tolerance=state.tolerance,
        max_iterations=state.max_iterations,
        probabilities=probs,
    )


def _dedup(scenarios: Sequence[Scenario]) -> list[Scenario]:
    """Merge scenarios with identical lifetime matrices, summing their
    probabilities.  Identical subproblems stay identical through every
    iteration, so merging is exact and only saves repeated solves."""
    seen: dict[tuple, int] = {}
    merged: list[Scenario] = []
    for s in scenarios:
        key = s.lifetimes
        if key in seen:
            k = seen[key]
            old = merged[k]
            merged[k] = Scenario(
                lifetimes=old.lifetimes,
                probability=old.probability + s.probability,
                extended_horizon=old.extended_horizon,
            )
        else:
            seen[key] = len(merged)
            merged.append(s)
    return merged


def forced_components(system: SystemSpec, scenarios) -> set[int]:
    """Slots that every feasible shared first stage must replace: failed at
    start, or failing in period 1 in at least one scenario."""
    forced = set(system.failed_components)
    for s in scenarios:
        for i, row in enumerate(s.lifetimes):
            if row[0] <= 1:
                forced.add(i)
    return forced


def run_pha(
    system: SystemSpec,
    scenarios: ScenarioSet | Sequence[Scenario],
    rho: float | None = None,
    tolerance: float = 1e-2,
    max_iterations: int = 50,
    subsolver: Callable | None = None,
    dedup: bool = True,
    trace_writer: Callable[[PhaState], None] | None = None,
) -> tuple[FirstStageDecision, list[PhaState]]:
    """Consensus iteration over the scenario set.

    Returns the rounded-and-repaired shared first stage together with the
    iteration trace.  ``rho`` defaults to the setup cost, the natural money
    scale of the coupling decision.  Non-convergence within
    ``max_iterations`` returns the best incumbent with ``converged=False``.
    """
    scen_list = list(scenarios)
    if not scen_list:
        raise ValueError("need at least one scenario")
    if rho is None:
        rho = system.setup_cost if system.setup_cost > 0 else 1.0
    if rho <= 0:
        raise ValueError("rho must be positive")
    if subsolver is None:
        subsolver = HeuristicSubsolver()
    if dedup:
        scen_list = _dedup(scen_list)
    probs = tuple(s.probability for s in scen_list)
    n = system.n

    disabled = PhTerms.disabled(n)
    solutions = []
    for s in scen_list:
        _, _, x = subsolver(system, s, disabled, None)
        if x is None:
            raise RuntimeError("a scenario subproblem was infeasible unpinned")
        solutions.append(tuple(x))

    consensus = tuple(
        sum(p * x[i] for p, x in zip(probs, solutions)) for i in range(n)
    )
    multipliers = tuple(
        tuple(rho * (x[i] - consensus[i]) for i in range(n)) for x in solutions
    )
    state = PhaState(
        iteration=0,
        consensus=consensus,
        multipliers=multipliers,
        rho=rho,
        convergence=math.inf,
        tolerance=tolerance,
        max_iterations=max_iterations,
        probabilities=probs,
    )
    trace = [state]
    if trace_writer is not None:
        trace_writer(state)

    converged = False
    while state.iteration < max_iterations:
        solutions = []
        for k, s in enumerate(scen_list):
            terms = PhTerms(
                linear_price=state.multipliers[k],
                consensus=state.consensus,
                rho=rho,
                enabled=True,
            )
            _, _, x = subsolver(system, s, terms, None)
            if x is None:
                raise RuntimeError("a scenario subproblem was infeasible unpinned")
            solutions.append(tuple(x))
        state = aggregate_and_update(solutions, state)
        trace.append(state)
        if trace_writer is not None:
            trace_writer(state)
        if state.convergence < tolerance:
            converged = True
            break

    # Candidate first stages: the 0.5 rounding of the consensus, looser and
    # stricter roundings, and the forced-only baseline.  Each is repaired to
    # cover forced components and scored by its sample-average cost; ties
    # keep the earlier candidate, so plain 0.5 rounding wins them.
    forced = forced_components(system, scen_list)
    candidates: list[tuple[int, ...]] = []
    for threshold in (0.5, 0.25, 0.75, math.inf):
        x = [0 if c < threshold else 1 for c in state.consensus]
        for i in forced:
            x[i] = 1
        x = tuple(x)
        if x not in candidates:
            candidates.append(x)

    best_x: tuple[int, ...] | None = None
    best_estimate = math.inf
    for x in candidates:
        estimate = 0.0
        for s in scen_list:
            _, objective, _ = subsolver(system, s, PhTerms.disabled(n), x)
            estimate += s.probability * objective
        if estimate < best_estimate - 1e-9:
            best_estimate = estimate
            best_x = x

    decision = FirstStageDecision(
        x=best_x,
        z=1 if any(best_x) else 0,
        objective_estimate=best_estimate,
        converged=converged,
        iterations=state.iteration,
    )
    return decision, trace
