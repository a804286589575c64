"""Single-scenario solver: shifting-window grouping with consensus terms.

Given deterministic lifetimes, the solver walks the horizon maintaining
the set of currently working individuals.  Each individual enters with a
tentative replacement time equal to its failure time minus a sacrifice
margin (0 or 1 periods).  Each round, candidate grouping options pull
later tentative times back to an anchor's time so their replacements
share a setup; the option with the lowest priced cost accumulated so far
wins, its multi-member groups are executed, and each executed slot's next
individual enters the working set.  Expired tentative times (beyond the
horizon) drop out as never-used individuals.

The priced cost is the plain replacement-plus-setup cost, plus, when
consensus terms are enabled, a linear price on the period-1 decision
vector and a squared proximal pull toward the consensus vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import (
    Schedule,
    Scenario,
    SystemSpec,
    evaluate_schedule,
    failure_time,
    first_stage_vector,
)


@dataclass(frozen=True)
class PhTerms:
    """Pricing attached to the period-1 decision of one scenario solve."""

    linear_price: tuple[float, ...]
    consensus: tuple[float, ...]
    rho: float
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.rho < 0:
            raise ValueError("penalty rho must be non-negative")
        if any(not 0 <= c <= 1 for c in self.consensus):
            raise ValueError("consensus entries must lie in [0, 1]")

    @classmethod
    def disabled(cls, n: int) -> "PhTerms":
        return cls(
            linear_price=(0.0,) * n, consensus=(0.0,) * n, rho=0.0, enabled=False
        )

    def price(self, x: tuple[int, ...]) -> float:
        if not self.enabled:
            return 0.0
        linear = sum(w * xi for w, xi in zip(self.linear_price, x))
        prox = 0.5 * self.rho * sum(
            (xi - c) ** 2 for xi, c in zip(x, self.consensus)
        )
        return linear + prox


@dataclass(frozen=True)
class WorkingItem:
    """One currently working individual awaiting a replacement decision."""

    component: int
    individual: int       # 0-based index into the scenario's lifetime row
    install: int          # predecessor's actual replacement time, 0 at start
    lifetime: int
    tentative: int
    min_time: int = 1     # earliest admissible replacement period

    @property
    def due(self) -> int:
        return failure_time(self.install, self.lifetime)


@dataclass(frozen=True)
class WorkingSet:
    items: tuple[WorkingItem, ...]

    def sorted_view(self) -> tuple[WorkingItem, ...]:
        return tuple(sorted(self.items, key=lambda w: (w.tentative, w.component)))


@dataclass(frozen=True)
class GroupOption:
    """One candidate grouping of the working set.

    ``groups`` partitions the sorted working set into (time, members)
    blocks; ``to_commit`` lists the blocks that would actually execute if
    this option wins (multi-member blocks, plus the earliest individual
    alone if nothing grouped it)."""

    option_index: int
    groups: tuple[tuple[int, tuple[WorkingItem, ...]], ...]
    cumulated_cost: float
    to_commit: tuple[tuple[int, tuple[WorkingItem, ...]], ...]


@dataclass
class StepCounter:
    steps: int = 0


@dataclass
class _Committed:
    """Mutable running state of one heuristic pass."""

    times: set[int] = field(default_factory=set)
    cost: float = 0.0
    schedule: dict[int, list[int]] = field(default_factory=dict)
    first_stage: dict[int, int] = field(default_factory=dict)


def _unit_cost(system: SystemSpec, item: WorkingItem, t: int) -> float:
    comp = system.components[item.component]
    return comp.cost_cr if t >= item.install + item.lifetime else comp.cost_pr


def _option_groups(
    ordered: tuple[WorkingItem, ...],
    m: int,
    iota: int,
    counter: StepCounter | None,
) -> list[tuple[int, list[int]]]:
    """Anchor blocks of option ``m`` (1-based) as (time, member indices).

    Individuals before the option's first anchor, and individuals inside a
    window whose predecessor was not yet replaced by the anchor time, stay
    as singletons at their own tentative time."""
    blocks: list[tuple[int, list[int]]] = []
    assigned: set[int] = set()
    for j in range(m - 1):
        blocks.append((ordered[j].tentative, [j]))
        assigned.add(j)
    cur = m - 1
    while cur < len(ordered):
        if cur in assigned:
            cur += 1
            continue
        anchor = ordered[cur]
        t = anchor.tentative
        members = [cur]
        assigned.add(cur)
        last_grouped = None
        j = cur + 1
        while j < len(ordered) and ordered[j].tentative <= t + iota:
            if counter is not None:
                counter.steps += 1
            item = ordered[j]
            if j not in assigned and item.install < t and item.min_time <= t:
                members.append(j)
                assigned.add(j)
                last_grouped = j
            j += 1
        blocks.append((t, members))
        cur = last_grouped + 1 if last_grouped is not None else cur + 1
    for j in range(len(ordered)):
        if j not in assigned:
            blocks.append((ordered[j].tentative, [j]))
    return blocks


def grouping_rule(
    working: WorkingSet,
    iota: int,
    terms: PhTerms,
    system: SystemSpec,
    committed: _Committed | None = None,
    counter: StepCounter | None = None,
) -> GroupOption:
    """Pick the grouping option with the lowest priced cumulated cost.

    Option m anchors its first window at the m-th earliest tentative time;
    every window pulls the individuals whose tentative times fall within
    ``iota`` of the anchor back to the anchor's time.  Ties break to the
    smaller option index.
    """
    if not working.items:
        raise ValueError("grouping requires a non-empty working set")
    if committed is None:
        committed = _Committed()
    ordered = working.sorted_view()
    option_count = max(1, len(ordered) - 1)

    best: GroupOption | None = None
    for m in range(1, option_count + 1):
        blocks = _option_groups(ordered, m, iota, counter)
        repl = 0.0
        new_times: set[int] = set()
        x_implied = dict(committed.first_stage)
        for t, members in blocks:
            if t not in committed.times:
                new_times.add(t)
            for idx in members:
                item = ordered[idx]
                repl += _unit_cost(system, item, t)
                if item.individual == 0:
                    x_implied[item.component] = 1 if t == 1 else 0
        x = tuple(x_implied.get(i, 0) for i in range(system.n))
        score = (
            committed.cost
            + repl
            + system.setup_cost * len(new_times)
            + terms.price(x)
        )
        if best is None or score < best.cumulated_cost - 1e-12:
            multi = [
                (t, tuple(ordered[idx] for idx in members))
                for t, members in blocks
                if len(members) > 1
            ]
            in_multi = {idx for _, members in blocks if len(members) > 1 for idx in members}
            if 0 not in in_multi:
                multi.insert(0, (ordered[0].tentative, (ordered[0],)))
            best = GroupOption(
                option_index=m,
                groups=tuple(
                    (t, tuple(ordered[idx] for idx in members))
                    for t, members in blocks
                ),
                cumulated_cost=score,
                to_commit=tuple(multi),
            )
    assert best is not None
    return best


@dataclass(frozen=True)
class HeuristicSolution:
    schedule: Schedule
    objective: float
    first_stage: tuple[int, ...]
    delta: int
    iota: int
    steps: int
    trace: tuple | None = None


def default_iota_grid(horizon: int) -> tuple[int, ...]:
    """Window widths from same-time-only sharing up to a full collapse.

    Width 0 merges only identical tentative times; widths up to half the
    horizon cover moderate grouping; horizon - 1 lets everything share a
    single setup when that pays.
    """
    widths = list(range(0, max(2, math.ceil(horizon / 2)) + 1))
    if horizon - 1 > widths[-1]:
        widths.append(horizon - 1)
    return tuple(widths)


def _single_pass(
    system: SystemSpec,
    scenario: Scenario,
    terms: PhTerms,
    delta: int,
    iota: int,
    fix,
    counter: StepCounter,
    collect_trace: bool,
):
    """One (delta, iota) run; returns None when a period-1 pin is infeasible."""
    T = system.horizon
    q = system.max_individuals
    rows = scenario.lifetimes
    committed = _Committed()
    trace: list[dict] = [] if collect_trace else None

    items: list[WorkingItem] = []
    for i in range(system.n):
        row = rows[i]
        life = row[0]
        due = failure_time(0, life)
        pin = fix[i] if fix is not None else None
        if pin == 1:
            items.append(WorkingItem(i, 0, 0, life, tentative=1))
            continue
        if due > T:
            # Survives the horizon; replacing it could only add cost.
            committed.first_stage[i] = 0
            continue
        lo = 2 if pin == 0 else 1
        if lo > due:
            return None  # pinned off but must be replaced in period 1
        items.append(
            WorkingItem(i, 0, 0, life, tentative=max(lo, due - delta), min_time=lo)
        )

    while items:
        option = grouping_rule(
            WorkingSet(tuple(items)), iota, terms, system, committed, counter
        )
        if collect_trace:
            trace.append(
                {
                    "option": option.option_index,
                    "cumulated_cost": option.cumulated_cost,
                    "groups": [
                        (t, [(w.component, w.individual + 1) for w in members])
                        for t, members in option.groups
                    ],
                }
            )
        executed: set[tuple[int, int]] = set()
        for t, members in option.to_commit:
            if t not in committed.times:
                committed.cost += system.setup_cost
                committed.times.add(t)
            for item in members:
                executed.add((item.component, item.individual))
                committed.cost += _unit_cost(system, item, t)
                committed.schedule.setdefault(item.component, []).append(t)
                if item.individual == 0:
                    committed.first_stage[item.component] = 1 if t == 1 else 0
                nxt = item.individual + 1
                if nxt >= min(q, len(rows[item.component])):
                    continue
                life = rows[item.component][nxt]
                if t + life > T:
                    continue  # never fails inside the horizon
                items.append(
                    WorkingItem(
                        item.component, nxt, t, life,
                        tentative=t + max(1, life - delta),
                    )
                )
        items = [
            w for w in items if (w.component, w.individual) not in executed
        ]

    schedule = Schedule(
        times=tuple(
            tuple(committed.schedule.get(i, ())) for i in range(system.n)
        )
    )
    x = first_stage_vector(system, schedule)
    objective = evaluate_schedule(system, scenario, schedule).total + terms.price(x)
    return schedule, objective, x, trace


def solve_scenario(
    system: SystemSpec,
    scenario: Scenario,
    terms: PhTerms | None = None,
    delta_grid: tuple[int, ...] = (0, 1),
    iota_grid: tuple[int, ...] | None = None,
    first_stage_fix=None,
    counter: StepCounter | None = None,
    collect_trace: bool = False,
    polish: bool = True,
) -> HeuristicSolution:
    """Best schedule over the sacrifice-margin and window-width grids.

    ``first_stage_fix`` pins period-1 decisions per component (1, 0, or
    None).  Raises ValueError if a pin is infeasible for the scenario.
    ``polish`` runs a per-slot re-optimization pass on the winner, which
    never worsens the priced objective; disable it to study the plain
    grouping construction.
    """
    if terms is None:
        terms = PhTerms.disabled(system.n)
    if iota_grid is None:
        iota_grid = default_iota_grid(system.horizon)
    if counter is None:
        counter = StepCounter()
    fix = tuple(first_stage_fix) if first_stage_fix is not None else None

    def run_grid(pinned_fix):
        found = None
        for delta in delta_grid:
            for iota in iota_grid:
                got = _single_pass(
                    system, scenario, terms, delta, iota, pinned_fix,
                    counter, collect_trace,
                )
                if got is None:
                    continue
                schedule, objective, x, trace = got
                if found is None or objective < found.objective - 1e-9:
                    found = HeuristicSolution(
                        schedule=schedule,
                        objective=objective,
                        first_stage=x,
                        delta=delta,
                        iota=iota,
                        steps=counter.steps,
                        trace=tuple(trace) if trace is not None else None,
                    )
        return found

    best = run_grid(fix)
    if best is None:
        raise ValueError("the requested period-1 pin is infeasible for this scenario")

    if polish:
        schedule, objective, x = _polish_schedule(
            system, scenario, terms, fix, best.schedule, best.objective
        )
        if objective < best.objective - 1e-9:
            best = HeuristicSolution(
                schedule=schedule,
                objective=objective,
                first_stage=x,
                delta=best.delta,
                iota=best.iota,
                steps=counter.steps,
                trace=best.trace,
            )

    return HeuristicSolution(
        schedule=best.schedule,
        objective=best.objective,
        first_stage=best.first_stage,
        delta=best.delta,
        iota=best.iota,
        steps=counter.steps,
        trace=best.trace,
    )


def _best_chain(system, scenario, comp_idx, shared, terms, pin):
    """Cheapest chain for one slot given the other slots' setup times.

    Setup is charged only at times nobody else uses; the period-1 price
    applies at the first decision.  Ties prefer the lexicographically
    smaller chain.
    """
    comp = system.components[comp_idx]
    row = scenario.lifetimes[comp_idx]
    q_eff = min(system.max_individuals, len(row))
    T = system.horizon
    d = system.setup_cost

    def price(x_i: int) -> float:
        if not terms.enabled:
            return 0.0
        return terms.linear_price[comp_idx] * x_i + 0.5 * terms.rho * (
            (x_i - terms.consensus[comp_idx]) ** 2
        )

    memo: dict[tuple[int, int], tuple[float, tuple[int, ...]] | None] = {}

    def f(r: int, s: int):
        key = (r, s)
        if key in memo:
            return memo[key]
        if r == q_eff:
            memo[key] = (0.0, ())
            return memo[key]
        L = row[r]
        due = failure_time(s, L)
        cands = []
        if due > T:
            stop = (price(0), ()) if r == 0 else (0.0, ())
            cands.append(stop)
        lo, hi = s + 1, min(T, due)
        if r == 0 and pin == 1:
            lo, hi = 1, min(hi, 1)
        elif r == 0 and pin == 0:
            lo = max(lo, 2)
        for t in range(lo, hi + 1):
            unit = comp.cost_cr if t >= s + L else comp.cost_pr
            if t not in shared:
                unit += d
            if r == 0:
                unit += price(1 if t == 1 else 0)
            rest = f(r + 1, t)
            if rest is not None:
                cands.append((unit + rest[0], (t,) + rest[1]))
        memo[key] = min(cands, key=lambda c: (c[0], c[1])) if cands else None
        return memo[key]

    return f(0, 0)


def _polish_schedule(system, scenario, terms, fix, schedule, objective):
    """Coordinate descent: re-optimize each slot's chain against the
    setup times of the others until nothing improves.  Never worsens the
    priced objective; on a single slot it is an exact solve."""
    times = [list(r) for r in schedule.times]

    def full(ts):
        sched = Schedule(times=tuple(tuple(r) for r in ts))
        x = first_stage_vector(system, sched)
        return evaluate_schedule(system, scenario, sched).total + terms.price(x), sched, x

    current, sched, x = full(times)
    improved = True
    while improved:
        improved = False
        for i in range(system.n):
            shared = {t for j, r in enumerate(times) if j != i for t in r}
            pin = fix[i] if fix is not None else None
            got = _best_chain(system, scenario, i, shared, terms, pin)
            if got is None or tuple(times[i]) == got[1]:
                continue
            trial = [list(r) for r in times]
            trial[i] = list(got[1])
            val, trial_sched, trial_x = full(trial)
            if val < current - 1e-9:
                times, current, sched, x = trial, val, trial_sched, trial_x
                improved = True
    return sched, current, x
