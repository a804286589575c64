"""Shifting-window grouping heuristic."""

import numpy as np
import pytest

from groupmaint.heuristic import (
    PhTerms,
    StepCounter,
    WorkingItem,
    WorkingSet,
    default_iota_grid,
    grouping_rule,
    solve_scenario,
)
from groupmaint.instances import random_system, random_tiny_instance
from groupmaint.model import (
    ComponentSpec,
    Scenario,
    SystemSpec,
    check_feasibility,
    evaluate_schedule,
    failure_time,
    first_stage_vector,
)
from groupmaint.oracles import EnumerationBudget, exact_scenario_optimum
from groupmaint.scenarios import sample_scenarios


def system_of(costs, horizon=10, setup=5.0, failed=()):
    comps = tuple(
        ComponentSpec(
            index=i, shape=4.0, scale=5.0, cost_pr=1.0, cost_cr=ccr,
            initially_failed=i in failed,
        )
        for i, ccr in enumerate(costs)
    )
    return SystemSpec(components=comps, horizon=horizon, setup_cost=setup)


class TestGroupingRule:
    def test_singleton_working_set(self):
        system = system_of([8.0])
        item = WorkingItem(component=0, individual=0, install=0, lifetime=4, tentative=4)
        option = grouping_rule(
            WorkingSet((item,)), 2, PhTerms.disabled(1), system
        )
        assert option.groups == ((4, (item,)),)
        assert option.to_commit == ((4, (item,)),)

    def test_window_pulls_members_to_anchor(self):
        system = system_of([8.0, 8.0, 8.0], setup=50.0)
        items = tuple(
            WorkingItem(component=i, individual=0, install=0, lifetime=life, tentative=life)
            for i, life in enumerate((3, 4, 9))
        )
        option = grouping_rule(WorkingSet(items), 2, PhTerms.disabled(3), system)
        grouped = {t: sorted(w.component for w in members) for t, members in option.groups}
        assert grouped[3] == [0, 1]
        assert grouped[9] == [2]

    def test_empty_working_set_rejected(self):
        system = system_of([8.0])
        with pytest.raises(ValueError):
            grouping_rule(WorkingSet(()), 1, PhTerms.disabled(1), system)

    def test_winner_chosen_by_cost_not_index(self):
        # High setup: the option that pairs the two late tentatives wins
        # over the one that only pairs the early ones.
        system = system_of([9.0, 9.0, 9.0], setup=30.0)
        items = (
            WorkingItem(0, 0, 0, 2, tentative=2),
            WorkingItem(1, 0, 0, 6, tentative=6),
            WorkingItem(2, 0, 0, 7, tentative=7),
        )
        option = grouping_rule(WorkingSet(items), 1, PhTerms.disabled(3), system)
        by_time = {t: [w.component for w in m] for t, m in option.groups}
        assert by_time[6] == [1, 2]

    def test_member_not_pulled_before_predecessor(self):
        # Component 1's working individual was installed at time 3, so it
        # cannot join a group at time 3.
        system = system_of([8.0, 8.0], setup=40.0)
        items = (
            WorkingItem(0, 0, 0, 3, tentative=3),
            WorkingItem(1, 1, 3, 1, tentative=4),
        )
        option = grouping_rule(WorkingSet(items), 3, PhTerms.disabled(2), system)
        by_time = {t: [w.component for w in m] for t, m in option.groups}
        assert by_time == {3: [0], 4: [1]}


class TestSolveScenario:
    def test_initially_failed_forced_to_period_one(self):
        system = system_of([8.0, 8.0], failed=(0,))
        scenario = Scenario(lifetimes=((0, 12, 12), (6, 12, 12)))
        sol = solve_scenario(system, scenario)
        assert sol.schedule.times[0][0] == 1
        assert sol.first_stage[0] == 1

    def test_no_setup_cost_matches_solo_optima(self):
        system = system_of([9.0, 7.0], setup=0.0, horizon=8)
        scenario = Scenario(lifetimes=((5, 4, 9, 9, 9, 9, 9, 9), (3, 2, 2, 9, 9, 9, 9, 9)))
        sol = solve_scenario(system, scenario)
        solo = 0.0
        for i in range(2):
            comp_only = SystemSpec(
                components=(system.components[i],), horizon=8, setup_cost=0.0
            )
            sub = Scenario(lifetimes=(scenario.lifetimes[i],))
            solo += exact_scenario_optimum(comp_only, sub).objective
        assert sol.objective == pytest.approx(solo)

    def test_huge_setup_collapses_to_fewest_occasions(self):
        system = system_of([6.0, 6.0], setup=500.0, horizon=6)
        scenario = Scenario(lifetimes=((2, 9, 9, 9, 9, 9), (5, 9, 9, 9, 9, 9)))
        sol = solve_scenario(system, scenario)
        ex = exact_scenario_optimum(system, scenario)
        assert sol.objective == pytest.approx(ex.objective)
        assert len(sol.schedule.setup_times) == 1

    def test_outputs_always_feasible(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            system, scenario = random_tiny_instance(rng)
            sol = solve_scenario(system, scenario)
            assert check_feasibility(system, scenario, sol.schedule) == []

    def test_objective_matches_schedule_cost(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            system, scenario = random_tiny_instance(rng)
            sol = solve_scenario(system, scenario)
            cost = evaluate_schedule(system, scenario, sol.schedule)
            assert sol.objective == pytest.approx(cost.total)

    def test_gap_to_exact_within_fifteen_percent(self):
        rng = np.random.default_rng(7)
        ratios = []
        for _ in range(150):
            n = int(rng.integers(1, 4))
            horizon = int(rng.integers(3, 7))
            system = random_system(rng, n=n, horizon=horizon)
            scenario = sample_scenarios(
                system, 1, int(rng.integers(1 << 31))
            ).scenarios[0]
            ex = exact_scenario_optimum(system, scenario)
            sol = solve_scenario(system, scenario)
            assert sol.objective >= ex.objective - 1e-9
            if ex.objective > 1e-9:
                ratios.append(sol.objective / ex.objective)
        assert max(ratios) <= 1.15

    def test_pinned_first_stage_respected(self):
        system = system_of([8.0, 8.0])
        scenario = Scenario(lifetimes=((4, 12, 12), (6, 12, 12)))
        on = solve_scenario(system, scenario, first_stage_fix=(1, None))
        assert on.schedule.times[0][0] == 1
        off = solve_scenario(system, scenario, first_stage_fix=(0, None))
        assert not off.schedule.times[0] or off.schedule.times[0][0] >= 2

    def test_infeasible_pin_raises(self):
        system = system_of([8.0], failed=(0,))
        scenario = Scenario(lifetimes=((0, 12),))
        with pytest.raises(ValueError):
            solve_scenario(system, scenario, first_stage_fix=(0,))

    def test_price_terms_can_flip_period_one_decision(self):
        system = system_of([8.0], setup=2.0, horizon=4)
        scenario = Scenario(lifetimes=((9, 9, 9, 9),))  # outlives the horizon
        free = solve_scenario(system, scenario)
        assert free.first_stage == (0,)
        terms = PhTerms(
            linear_price=(-50.0,), consensus=(1.0,), rho=1.0, enabled=True
        )
        priced = solve_scenario(system, scenario, terms=terms)
        assert priced.first_stage == (1,)

    def test_trace_collection(self):
        system = system_of([8.0, 8.0])
        scenario = Scenario(lifetimes=((4, 12, 12), (5, 12, 12)))
        sol = solve_scenario(system, scenario, collect_trace=True)
        assert sol.trace
        assert all("cumulated_cost" in step for step in sol.trace)


class TestStructuralConformance:
    def test_committed_groups_anchor_near_failure(self):
        # Without the polish pass, every shared-time group contains its
        # anchor, which gives up at most the run's margin of life; pulled
        # members may give up more.
        rng = np.random.default_rng(17)
        for _ in range(60):
            system, scenario = random_tiny_instance(rng)
            for delta in (0, 1):
                sol = solve_scenario(
                    system, scenario, delta_grid=(delta,), polish=False
                )
                rows = scenario.lifetimes
                slack_by_time = {}
                for i, times in enumerate(sol.schedule.times):
                    install = 0
                    for r, t in enumerate(times):
                        slack = failure_time(install, rows[i][r]) - t
                        assert slack >= 0
                        slack_by_time.setdefault(t, []).append(slack)
                        install = t
                for t, slacks in slack_by_time.items():
                    assert min(slacks) <= delta

    def test_replacements_follow_tentative_order(self):
        # Individuals working concurrently are replaced in failure order.
        rng = np.random.default_rng(19)
        for _ in range(60):
            system, scenario = random_tiny_instance(rng)
            sol = solve_scenario(system, scenario, polish=False)
            units = []
            for i, times in enumerate(sol.schedule.times):
                install = 0
                for r, t in enumerate(times):
                    units.append((i, install, failure_time(install, scenario.lifetimes[i][r]), t))
                    install = t
            for a in range(len(units)):
                ia, sa, fa, ta = units[a]
                for b in range(len(units)):
                    ib, sb, fb, tb = units[b]
                    if ia == ib or max(sa, sb) >= min(ta, tb):
                        continue
                    if fa < fb:
                        assert ta <= tb

    def test_step_counter_scales_with_grid(self):
        system = system_of([8.0] * 4, horizon=12)
        scenario = Scenario(
            lifetimes=tuple((3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3) for _ in range(4))
        )
        small = StepCounter()
        solve_scenario(system, scenario, iota_grid=(1,), counter=small, polish=False)
        large = StepCounter()
        solve_scenario(
            system, scenario, iota_grid=(1, 2, 3, 4), counter=large, polish=False
        )
        assert large.steps > small.steps

    def test_default_grid_spans_no_grouping_to_collapse(self):
        grid = default_iota_grid(10)
        assert grid[0] == 0
        assert 9 in grid
