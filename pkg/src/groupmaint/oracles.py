"""Exhaustive ground-truth solvers at desk scale.

Everything here is deliberately brute force and budget guarded: an
enumeration over all feasible schedules of one scenario, an enumeration
over shared first stages for the scenario-set problem, a backward
induction over the full multi-period state space, and structure checks
that scan the complete set of optimal schedules.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .model import (
    Schedule,
    Scenario,
    SystemSpec,
    evaluate_schedule,
    failure_time,
    first_stage_vector,
)
from .pha import FirstStageDecision
from .scenarios import weibull_cdf


@dataclass(frozen=True)
class EnumerationBudget:
    """Hard caps that keep the oracles at desk scale."""

    max_components: int = 4
    max_horizon: int = 8
    max_def_work: int = 20_000       # first-stage combinations times scenarios
    max_schedules: int = 2_000_000   # full schedule enumerations
    max_mdp_components: int = 2
    max_mdp_states: int = 200_000


class BudgetExceededError(RuntimeError):
    """The requested enumeration is larger than the configured budget."""


@dataclass(frozen=True)
class ExactSolution:
    schedule: Schedule | None
    objective: float


def _check_scale(system: SystemSpec, budget: EnumerationBudget) -> None:
    if system.n > budget.max_components or system.horizon > budget.max_horizon:
        raise BudgetExceededError(
            f"instance with n={system.n}, T={system.horizon} exceeds the "
            f"enumeration budget (n<={budget.max_components}, "
            f"T<={budget.max_horizon}); roughly "
            f"2^{system.horizon} subsets per component would be scanned"
        )


def _component_best(
    row: tuple[int, ...],
    q_eff: int,
    T: int,
    mask: int,
    fix: int | None,
    c_pr: float,
    c_cr: float,
) -> tuple[float, tuple[int, ...]] | None:
    """Cheapest feasible replacement chain using only times set in ``mask``.

    Returns None when no feasible chain exists.  Ties prefer the
    lexicographically smallest chain.
    """
    memo: dict[tuple[int, int], tuple[float, tuple[int, ...]] | None] = {}

    def best(r: int, s: int):
        key = (r, s)
        if key in memo:
            return memo[key]
        if r == q_eff:
            memo[key] = (0.0, ())
            return memo[key]
        L = row[r]
        fail = failure_time(s, L)
        cands: list[tuple[float, tuple[int, ...]]] = []
        if fail > T:
            cands.append((0.0, ()))
        lo, hi = s + 1, min(T, fail)
        if r == 0 and fix == 1:
            lo, hi = 1, min(hi, 1)
        elif r == 0 and fix == 0:
            lo = max(lo, 2)
        for t in range(lo, hi + 1):
            if not (mask >> (t - 1)) & 1:
                continue
            unit = c_cr if t >= s + L else c_pr
            rest = best(r + 1, t)
            if rest is not None:
                cands.append((unit + rest[0], (t,) + rest[1]))
        memo[key] = min(cands, key=lambda c: (c[0], c[1])) if cands else None
        return memo[key]

    return best(0, 0)


def exact_scenario_optimum(
    system: SystemSpec,
    scenario: Scenario,
    first_stage_fix=None,
    budget: EnumerationBudget | None = None,
) -> ExactSolution:
    """Globally cheapest feasible schedule for one scenario.

    ``first_stage_fix`` optionally pins each component's period-1
    decision (1, 0, or None per slot).  Infeasible pins yield a None
    schedule with infinite objective.  Ties break to the
    lexicographically smallest schedule.
    """
    budget = budget or EnumerationBudget()
    _check_scale(system, budget)
    T = system.horizon
    d = system.setup_cost
    n = system.n
    if first_stage_fix is None:
        fix = (None,) * n
    else:
        fix = tuple(first_stage_fix)
        if len(fix) != n:
            raise ValueError("first-stage fix needs one entry per component")

    rows = scenario.lifetimes
    q_effs = [min(system.max_individuals, len(rows[i])) for i in range(n)]

    best_total = math.inf
    best_chains: tuple[tuple[int, ...], ...] | None = None
    caches: list[dict[int, tuple[float, tuple[int, ...]] | None]] = [
        {} for _ in range(n)
    ]
    for mask in range(1 << T):
        setup = d * bin(mask).count("1")
        if setup > best_total + 1e-9:
            continue
        total = setup
        chains: list[tuple[int, ...]] = []
        feasible = True
        for i in range(n):
            got = caches[i].get(mask)
            if mask not in caches[i]:
                got = _component_best(
                    rows[i], q_effs[i], T, mask, fix[i],
                    system.components[i].cost_pr, system.components[i].cost_cr,
                )
                caches[i][mask] = got
            if got is None:
                feasible = False
                break
            total += got[0]
            chains.append(got[1])
        if not feasible:
            continue
        tup = tuple(chains)
        if total < best_total - 1e-9 or (
            abs(total - best_total) <= 1e-9
            and (best_chains is None or tup < best_chains)
        ):
            best_total = total
            best_chains = tup

    if best_chains is None:
        return ExactSolution(schedule=None, objective=math.inf)
    return ExactSolution(schedule=Schedule(times=best_chains), objective=best_total)


def forced_first_stage(system: SystemSpec, scenarios) -> set[int]:
    """Components whose period-1 replacement is forced in every shared
    first stage: those starting failed, plus those failing in period 1 in
    at least one scenario."""
    forced = set(system.failed_components)
    for scenario in scenarios:
        for i, row in enumerate(scenario.lifetimes):
            if row[0] <= 1:
                forced.add(i)
    return forced


def exact_def_optimum(
    system: SystemSpec,
    scenarios,
    budget: EnumerationBudget | None = None,
) -> tuple[FirstStageDecision, float]:
    """Optimal shared first stage by full enumeration.

    Enumerates every first-stage vector (forced components pinned on),
    solves each scenario exactly with the vector pinned, and returns the
    minimizer of the probability-weighted cost.
    """
    budget = budget or EnumerationBudget()
    _check_scale(system, budget)
    scen_list = list(scenarios)
    forced = forced_first_stage(system, scen_list)
    free = [i for i in range(system.n) if i not in forced]
    work = (2 ** len(free)) * len(scen_list)
    if work > budget.max_def_work:
        raise BudgetExceededError(
            f"{2 ** len(free)} first stages x {len(scen_list)} scenarios "
            f"= {work} exact solves exceeds the budget of {budget.max_def_work}"
        )

    best_x: tuple[int, ...] | None = None
    best_value = math.inf
    for bits in itertools.product((0, 1), repeat=len(free)):
        x = [1] * system.n
        for pos, i in enumerate(free):
            x[i] = bits[pos]
        value = 0.0
        feasible = True
        for scenario in scen_list:
            sol = exact_scenario_optimum(system, scenario, first_stage_fix=x, budget=budget)
            if sol.schedule is None:
                feasible = False
                break
            value += scenario.probability * sol.objective
        if feasible and value < best_value - 1e-9:
            best_value = value
            best_x = tuple(x)

    if best_x is None:
        raise RuntimeError("no feasible shared first stage (should be impossible)")
    decision = FirstStageDecision(
        x=best_x,
        z=1 if any(best_x) else 0,
        objective_estimate=best_value,
        converged=True,
        iterations=0,
    )
    return decision, best_value


# ---------------------------------------------------------------------------
# Finite-horizon backward induction over the observed-state process.
# ---------------------------------------------------------------------------


def weibull_hazards(component, max_age: int, period_len: float = 1.0) -> tuple[float, ...]:
    """Per-period failure probabilities h(a) = P(failed by age a | alive at
    a-1) of the ceiling-discretized lifetime, for a = 1..max_age."""
    out = []
    prev = 0.0
    for a in range(1, max_age + 1):
        cur = weibull_cdf(a * period_len, component.shape, component.scale)
        denom = 1.0 - prev
        out.append(1.0 if denom <= 1e-12 else min(1.0, (cur - prev) / denom))
        prev = cur
    return tuple(out)


def zero_hazards(max_age: int) -> tuple[float, ...]:
    return (0.0,) * max_age


@dataclass(frozen=True)
class ValueTable:
    """Backward-induction result: expected cost-to-go per observed state.

    Keys are (stage, ages, failed-pattern); ``ages`` counts periods since
    installation such that an individual is failed once its lifetime is at
    most its age.  ``initial_value`` is the stage-1 value averaged over the
    stage-1 failure observation (components flagged failed at start are
    failed with certainty)."""

    horizon: int
    initial_ages: tuple[int, ...]
    values: dict
    actions: dict
    initial_value: float

    def value(self, stage, ages, failed) -> float:
        return self.values[(stage, tuple(ages), tuple(failed))]


def exact_multistage_value(
    system: SystemSpec,
    hazards=None,
    budget: EnumerationBudget | None = None,
) -> ValueTable:
    """Solve the observed-state replacement process exactly.

    At each stage the failed components must be replaced and any working
    ones may join; the stage cost is the replacement charges plus one
    setup for a non-empty action.  Transitions age every surviving
    individual by one period and reset replaced slots to age 1.
    """
    budget = budget or EnumerationBudget()
    n = system.n
    T = system.horizon
    if n > budget.max_mdp_components:
        raise BudgetExceededError(
            f"backward induction limited to {budget.max_mdp_components} components"
        )
    if hazards is None:
        hazards = tuple(
            weibull_hazards(c, c.initial_age + T + 2, system.period_len)
            for c in system.components
        )

    def hz(i: int, age: int) -> float:
        table = hazards[i]
        return table[min(age, len(table)) - 1]

    age_caps = [c.initial_age + T for c in system.components]
    state_count = T * (2**n)
    for cap in age_caps:
        state_count *= cap
    if state_count > budget.max_mdp_states:
        raise BudgetExceededError(
            f"about {state_count} states exceeds the budget of {budget.max_mdp_states}"
        )

    d = system.setup_cost
    patterns = list(itertools.product((False, True), repeat=n))
    values: dict = {}
    actions: dict = {}

    for stage in range(T, 0, -1):
        ranges = [range(1, min(cap, system.components[i].initial_age + stage) + 1)
                  for i, cap in enumerate(age_caps)]
        for ages in itertools.product(*ranges):
            for failed in patterns:
                mandatory = [i for i in range(n) if failed[i]]
                optional = [i for i in range(n) if not failed[i]]
                best_val = math.inf
                best_act: tuple[int, ...] = ()
                for bits in range(1 << len(optional)):
                    act = set(mandatory)
                    for pos, i in enumerate(optional):
                        if (bits >> pos) & 1:
                            act.add(i)
                    cost = sum(
                        system.components[i].cost_cr if failed[i]
                        else system.components[i].cost_pr
                        for i in act
                    )
                    if act:
                        cost += d
                    if stage < T:
                        nxt_ages = tuple(
                            1 if i in act else ages[i] + 1 for i in range(n)
                        )
                        probs = [hz(i, nxt_ages[i]) for i in range(n)]
                        expect = 0.0
                        for nxt_failed in patterns:
                            p = 1.0
                            for i in range(n):
                                p *= probs[i] if nxt_failed[i] else 1.0 - probs[i]
                            if p > 0.0:
                                expect += p * values[(stage + 1, nxt_ages, nxt_failed)]
                        cost += expect
                    act_key = tuple(sorted(act))
                    if cost < best_val - 1e-12 or (
                        cost < best_val + 1e-12 and act_key < best_act
                    ):
                        best_val = cost
                        best_act = act_key
                values[(stage, ages, failed)] = best_val
                actions[(stage, ages, failed)] = best_act

    initial_ages = tuple(c.initial_age + 1 for c in system.components)
    start_probs = [
        1.0 if c.initially_failed else hz(i, initial_ages[i])
        for i, c in enumerate(system.components)
    ]
    initial_value = 0.0
    for failed in patterns:
        p = 1.0
        for i in range(n):
            p *= start_probs[i] if failed[i] else 1.0 - start_probs[i]
        if p > 0.0:
            initial_value += p * values[(1, initial_ages, failed)]

    return ValueTable(
        horizon=T,
        initial_ages=initial_ages,
        values=values,
        actions=actions,
        initial_value=initial_value,
    )


# ---------------------------------------------------------------------------
# Structure checks over the complete set of optimal schedules.
# ---------------------------------------------------------------------------


def iter_component_chains(row, q_eff: int, T: int, fix: int | None = None):
    """Yield every feasible replacement-time chain for one component."""

    def rec(s: int, r: int):
        if r == q_eff:
            yield ()
            return
        L = row[r]
        fail = failure_time(s, L)
        if fail > T:
            yield ()
        lo, hi = s + 1, min(T, fail)
        if r == 0 and fix == 1:
            lo, hi = 1, min(hi, 1)
        elif r == 0 and fix == 0:
            lo = max(lo, 2)
        for t in range(lo, hi + 1):
            for rest in rec(t, r + 1):
                yield (t,) + rest

    yield from rec(0, 0)


def enumerate_feasible_schedules(
    system: SystemSpec,
    scenario: Scenario,
    first_stage_fix=None,
    budget: EnumerationBudget | None = None,
):
    """Yield every feasible schedule of the scenario (budget guarded)."""
    budget = budget or EnumerationBudget()
    n = system.n
    fix = tuple(first_stage_fix) if first_stage_fix is not None else (None,) * n
    per_comp = []
    total = 1
    for i in range(n):
        q_eff = min(system.max_individuals, len(scenario.lifetimes[i]))
        chains = list(
            iter_component_chains(scenario.lifetimes[i], q_eff, system.horizon, fix[i])
        )
        per_comp.append(chains)
        total *= max(1, len(chains))
        if total > budget.max_schedules:
            raise BudgetExceededError(
                f"more than {budget.max_schedules} schedules to enumerate"
            )
    for combo in itertools.product(*per_comp):
        yield Schedule(times=combo)


@dataclass(frozen=True)
class StructureReport:
    optimum_count: int
    minimum_cost: float
    tight_anchor_exists: bool
    order_preserving_exists: bool


def _replaced_units(scenario: Scenario, schedule: Schedule):
    """(component, individual, install, lifetime, time) for each replacement."""
    units = []
    for i, times in enumerate(schedule.times):
        install = 0
        for r, t in enumerate(times):
            units.append((i, r, install, scenario.lifetimes[i][r], t))
            install = t
    return units


def _tight_anchor_ok(scenario: Scenario, schedule: Schedule) -> bool:
    """Every shared-time group, except groups made only of a component's
    final replacement, contains a member losing at most one period."""
    units = _replaced_units(scenario, schedule)
    by_time: dict[int, list] = {}
    for unit in units:
        by_time.setdefault(unit[4], []).append(unit)
    for t, members in by_time.items():
        if all(r == len(schedule.times[i]) - 1 for i, r, *_ in members):
            continue
        slack = min(failure_time(install, L) - t for _, _, install, L, _ in members)
        if slack > 1:
            return False
    return True


def _order_preserving_ok(scenario: Scenario, schedule: Schedule) -> bool:
    """Individuals working at the same time are replaced in the order in
    which they would fail (ties unconstrained)."""
    units = _replaced_units(scenario, schedule)
    for a in range(len(units)):
        i, _, s_a, L_a, t_a = units[a]
        f_a = failure_time(s_a, L_a)
        for b in range(a + 1, len(units)):
            j, _, s_b, L_b, t_b = units[b]
            if i == j:
                continue
            if max(s_a, s_b) >= min(t_a, t_b):
                continue  # never working simultaneously
            f_b = failure_time(s_b, L_b)
            if f_a < f_b and t_a > t_b:
                return False
            if f_b < f_a and t_b > t_a:
                return False
    return True


def theorem_structure_check(
    system: SystemSpec,
    scenario: Scenario,
    budget: EnumerationBudget | None = None,
) -> StructureReport:
    """Enumerate all optimal schedules and test two existence claims:
    some optimum anchors every non-trailing group at most one period
    before a failure, and some optimum preserves failure order among
    co-working individuals."""
    best = math.inf
    optima: list[Schedule] = []
    for schedule in enumerate_feasible_schedules(system, scenario, budget=budget):
        total = evaluate_schedule(system, scenario, schedule).total
        if total < best - 1e-9:
            best = total
            optima = [schedule]
        elif total <= best + 1e-9:
            optima.append(schedule)
    return StructureReport(
        optimum_count=len(optima),
        minimum_cost=best,
        tight_anchor_exists=any(_tight_anchor_ok(scenario, s) for s in optima),
        order_preserving_exists=any(_order_preserving_ok(scenario, s) for s in optima),
    )


class ExactSubsolver:
    """Scenario subproblem oracle for the consensus solver: enumerates the
    first stage and solves the rest exactly, including the price and
    proximal terms on the first-stage vector."""

    def __init__(self, budget: EnumerationBudget | None = None):
        self.budget = budget or EnumerationBudget()

    def __call__(self, system, scenario, terms, first_stage_fix=None):
        n = system.n
        if terms is None or not terms.enabled:
            sol = exact_scenario_optimum(
                system, scenario, first_stage_fix=first_stage_fix, budget=self.budget
            )
            if sol.schedule is None:
                return None, math.inf, None
            return sol.schedule, sol.objective, first_stage_vector(system, sol.schedule)

        fix = (
            tuple(first_stage_fix) if first_stage_fix is not None else (None,) * n
        )
        best = None
        for x in itertools.product((0, 1), repeat=n):
            if any(f is not None and f != xi for f, xi in zip(fix, x)):
                continue
            sol = exact_scenario_optimum(
                system, scenario, first_stage_fix=x, budget=self.budget
            )
            if sol.schedule is None:
                continue
            aug = sol.objective + sum(
                w * xi for w, xi in zip(terms.linear_price, x)
            ) + 0.5 * terms.rho * sum(
                (xi - c) ** 2 for xi, c in zip(x, terms.consensus)
            )
            if best is None or aug < best[1] - 1e-12:
                best = (sol.schedule, aug, x)
        if best is None:
            return None, math.inf, None
        return best
