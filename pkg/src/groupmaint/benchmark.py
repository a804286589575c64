"""Direct-grouping benchmark: individually optimal schedules, then a
dynamic program over consecutive groups.

The benchmark first gives every component a periodic replacement age that
minimizes its solo cost rate, ignoring any setup sharing.  Components are
then sorted by their first tentative time and partitioned into consecutive
groups; each group executes its members' first replacements together at
the group's earliest tentative time.  Group costs are scored as sample
averages over a shared scenario set, simulating each member's re-anchored
periodic policy over the remaining horizon, so dragging a component far
from its own schedule shows up as extra replacement cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ComponentSpec, Schedule, SystemSpec
from .scenarios import weibull_cdf


@dataclass(frozen=True)
class TentativePlan:
    """Solo periodic plan for one component."""

    component: int
    replacement_age: int
    times: tuple[int, ...]


def age_replacement_age(
    component: ComponentSpec,
    horizon: int,
    setup_cost: float = 0.0,
    include_setup: bool = False,
    period_len: float = 1.0,
) -> int:
    """Age minimizing the per-period cost rate of replace-at-age-or-failure.

    The rate at age a is (preventive cost times survival, plus corrective
    cost times failure probability, plus the optional setup) divided by the
    expected periods until replacement.  Ties prefer the smaller age.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least one period")
    extra = setup_cost if include_setup else 0.0
    best_age = 1
    best_rate = math.inf
    survival_sum = 0.0  # sum of P(L > k) for k = 0..a-1
    for age in range(1, horizon + 1):
        fail_p = weibull_cdf(age * period_len, component.shape, component.scale)
        prev_p = weibull_cdf((age - 1) * period_len, component.shape, component.scale)
        survival_sum += 1.0 - prev_p
        numer = component.cost_pr * (1.0 - fail_p) + component.cost_cr * fail_p + extra
        rate = numer / survival_sum
        if rate < best_rate - 1e-12:
            best_rate = rate
            best_age = age
    return best_age


def individual_tentative_schedule(
    component: ComponentSpec,
    horizon: int,
    setup_cost: float = 0.0,
    include_setup: bool = False,
    start_age: int = 0,
    failed: bool = False,
    period_len: float = 1.0,
) -> TentativePlan:
    """Solo plan: replace at the optimal age, periodically, over the horizon.

    ``start_age`` shifts the first tentative time for a part-way-worn
    individual; a failed one is due immediately.
    """
    age = age_replacement_age(
        component, horizon, setup_cost=setup_cost,
        include_setup=include_setup, period_len=period_len,
    )
    if failed:
        return TentativePlan(
            component=component.index, replacement_age=age, times=(1,)
        )
    if age >= horizon:
        # The rate has no interior minimum: run to failure, plan nothing.
        return TentativePlan(component=component.index, replacement_age=age, times=())
    first = max(1, age - start_age)
    times = []
    t = first
    while t <= horizon:
        times.append(t)
        t += age
    return TentativePlan(
        component=component.index, replacement_age=age, times=tuple(times)
    )


@dataclass(frozen=True)
class DirectGroupingPlan:
    """Consecutive-group partition plus the planned execution times."""

    order: tuple[int, ...]                    # components sorted by first tentative time
    groups: tuple[tuple[int, ...], ...]       # consecutive groups, component ids
    group_times: tuple[int, ...]              # execution time of each group
    schedule: Schedule                        # planned times per component
    sample_average_cost: float


def _group_cost(
    system: SystemSpec,
    scenarios,
    members: list[int],
    plans: dict[int, TentativePlan],
) -> float:
    """Sample-average cost of executing the group's first replacements at
    the group's earliest tentative time, then each member solo."""
    horizon = system.horizon
    group_time = min(plans[i].times[0] for i in members)
    total = 0.0
    for scenario in scenarios:
        cost = 0.0
        used_times: set[int] = set()
        for i in members:
            comp = system.components[i]
            age = plans[i].replacement_age
            install = 0
            planned = group_time
            for life in scenario.lifetimes[i]:
                due = install + life if life >= 1 else 1
                t = min(planned, due)
                if t > horizon:
                    break
                cost += comp.cost_cr if t >= due else comp.cost_pr
                used_times.add(t)
                install = t
                planned = t + age
        cost += system.setup_cost * len(used_times)
        total += scenario.probability * cost
    return total


def direct_grouping_plan(
    system: SystemSpec,
    scenarios,
    tentative: list[TentativePlan] | None = None,
) -> DirectGroupingPlan:
    """Best consecutive-group structure by dynamic programming.

    ``f(j) = min over i <= j of f(i-1) + groupcost(i..j)`` over components
    sorted by first tentative time, with backtracking to recover the
    partition.  Components whose solo plan never acts inside the horizon
    stay ungrouped with no cost.
    """
    scen_list = list(scenarios)
    if tentative is None:
        tentative = [
            individual_tentative_schedule(
                c,
                system.horizon,
                setup_cost=system.setup_cost,
                include_setup=True,
                start_age=c.initial_age,
                failed=c.initially_failed,
                period_len=system.period_len,
            )
            for c in system.components
        ]
    plans = {p.component: p for p in tentative}

    active = [i for i in range(system.n) if plans[i].times]
    idle = [i for i in range(system.n) if not plans[i].times]
    order = sorted(active, key=lambda i: (plans[i].times[0], i))

    k = len(order)
    best = [0.0] * (k + 1)
    cut = [0] * (k + 1)
    cache: dict[tuple[int, int], float] = {}
    for j in range(1, k + 1):
        best[j] = math.inf
        for i in range(1, j + 1):
            key = (i, j)
            if key not in cache:
                cache[key] = _group_cost(
                    system, scen_list, [order[p] for p in range(i - 1, j)], plans
                )
            val = best[i - 1] + cache[key]
            if val < best[j] - 1e-12:
                best[j] = val
                cut[j] = i
    groups: list[tuple[int, ...]] = []
    j = k
    while j > 0:
        i = cut[j]
        groups.append(tuple(order[p] for p in range(i - 1, j)))
        j = i - 1
    groups.reverse()

    group_times = tuple(
        min(plans[i].times[0] for i in g) for g in groups
    )
    planned_times: list[tuple[int, ...]] = []
    for i in range(system.n):
        if i in idle:
            planned_times.append(())
            continue
        g_idx = next(gi for gi, g in enumerate(groups) if i in g)
        start = group_times[g_idx]
        age = plans[i].replacement_age
        times = []
        t = start
        while t <= system.horizon:
            times.append(t)
            t += age
        planned_times.append(tuple(times))

    return DirectGroupingPlan(
        order=tuple(order),
        groups=tuple(groups),
        group_times=group_times,
        schedule=Schedule(times=tuple(planned_times)),
        sample_average_cost=best[k],
    )
