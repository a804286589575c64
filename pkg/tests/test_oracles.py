"""Exhaustive oracles: scenario optimum, shared first stage, backward
induction, and structure checks."""

import math

import numpy as np
import pytest

from groupmaint.instances import (
    level_system,
    random_tiny_instance,
    reference_system,
)
from groupmaint.model import ComponentSpec, Scenario, Schedule, SystemSpec
from groupmaint.oracles import (
    BudgetExceededError,
    EnumerationBudget,
    enumerate_feasible_schedules,
    exact_def_optimum,
    exact_multistage_value,
    exact_scenario_optimum,
    theorem_structure_check,
    weibull_hazards,
    zero_hazards,
)


def single_system(cost_cr=10.0, horizon=10, setup=5.0, failed=False):
    c = ComponentSpec(
        index=0, shape=2.0, scale=5.0, cost_pr=1.0, cost_cr=cost_cr,
        initially_failed=failed,
    )
    return SystemSpec(components=(c,), horizon=horizon, setup_cost=setup)


class TestScenarioOptimum:
    def test_single_component_prefers_preventive(self):
        system = single_system()
        scenario = Scenario(lifetimes=((4, 20),))
        sol = exact_scenario_optimum(
            system, scenario, budget=EnumerationBudget(max_horizon=10)
        )
        assert sol.objective == pytest.approx(6.0)
        assert sol.schedule.times[0][0] <= 3

    def test_two_components_group_preventives(self):
        comps = tuple(
            ComponentSpec(index=i, shape=2.0, scale=5.0, cost_pr=1.0, cost_cr=10.0)
            for i in range(2)
        )
        system = SystemSpec(components=comps, horizon=10, setup_cost=5.0)
        scenario = Scenario(lifetimes=((3, 30), (4, 30)))
        sol = exact_scenario_optimum(
            system, scenario, budget=EnumerationBudget(max_horizon=10)
        )
        assert sol.objective == pytest.approx(7.0)
        assert sol.schedule.times[0] == sol.schedule.times[1]

    def test_nothing_due_in_horizon(self):
        system = single_system(horizon=5)
        scenario = Scenario(lifetimes=((9, 9),))
        sol = exact_scenario_optimum(system, scenario)
        assert sol.objective == 0.0
        assert sol.schedule.times == ((),)

    def test_budget_refusal(self):
        system = reference_system(n=2, horizon=10)
        scenario = Scenario(lifetimes=((4,) * 10, (4,) * 10))
        with pytest.raises(BudgetExceededError):
            exact_scenario_optimum(
                system, scenario, budget=EnumerationBudget(max_horizon=8)
            )

    def test_infeasible_pin_returns_infinite(self):
        system = single_system(failed=True)
        scenario = Scenario(lifetimes=((0, 30),))
        sol = exact_scenario_optimum(
            system, scenario, first_stage_fix=(0,),
            budget=EnumerationBudget(max_horizon=10),
        )
        assert sol.schedule is None and math.isinf(sol.objective)

    def test_beats_every_enumerated_schedule(self):
        from groupmaint.model import evaluate_schedule

        rng = np.random.default_rng(11)
        for _ in range(25):
            system, scenario = random_tiny_instance(rng)
            sol = exact_scenario_optimum(system, scenario)
            best = min(
                evaluate_schedule(system, scenario, s).total
                for s in enumerate_feasible_schedules(system, scenario)
            )
            assert sol.objective == pytest.approx(best)


class TestDefOptimum:
    def test_single_scenario_matches_scenario_optimum(self):
        system = reference_system(n=2, horizon=6)
        scenario = Scenario(lifetimes=((0, 4, 9, 9, 9, 9), (3, 9, 9, 9, 9, 9)))
        scen_sol = exact_scenario_optimum(system, scenario)
        decision, value = exact_def_optimum(system, [scenario])
        assert value == pytest.approx(scen_sol.objective)

    def test_initially_failed_forced_on(self):
        system = reference_system(n=2, horizon=6, first_failed=True)
        scenarios = [
            Scenario(lifetimes=((0, 5, 9, 9, 9, 9), (4, 9, 9, 9, 9, 9)), probability=0.5),
            Scenario(lifetimes=((0, 7, 9, 9, 9, 9), (2, 9, 9, 9, 9, 9)), probability=0.5),
        ]
        decision, _ = exact_def_optimum(system, scenarios)
        assert decision.x[0] == 1

    def test_budget_refusal(self):
        system = reference_system(n=4, horizon=6, first_failed=False)
        scenarios = [
            Scenario(lifetimes=tuple((3, 3, 3, 3, 3, 3) for _ in range(4)))
        ]
        with pytest.raises(BudgetExceededError):
            exact_def_optimum(
                system, scenarios, budget=EnumerationBudget(max_def_work=8)
            )


class TestMultistageValue:
    def test_zero_hazard_costs_nothing(self):
        system = level_system(n=2, horizon=6)
        hazards = tuple(zero_hazards(20) for _ in system.components)
        table = exact_multistage_value(system, hazards=hazards)
        assert table.initial_value == 0.0
        for (stage, ages, failed), value in table.values.items():
            if not any(failed):
                assert value == 0.0
                assert table.actions[(stage, ages, failed)] == ()

    def test_certain_immediate_failure_forces_corrective_every_period(self):
        c = ComponentSpec(index=0, shape=2.0, scale=5.0, cost_pr=1.0, cost_cr=9.0)
        system = SystemSpec(components=(c,), horizon=7, setup_cost=5.0)
        hazards = ((1.0,) * 20,)
        table = exact_multistage_value(system, hazards=hazards)
        assert table.initial_value == pytest.approx(7 * (9.0 + 5.0))

    def test_values_non_negative_and_monotone_in_stage(self):
        system = level_system(n=2, horizon=8, shape="high", scale="low")
        table = exact_multistage_value(system)
        assert all(v >= 0 for v in table.values.values())
        for (stage, ages, failed), value in table.values.items():
            later = table.values.get((stage + 1, ages, failed))
            if later is not None:
                assert value >= later - 1e-9

    def test_reference_level_cell_value(self):
        # Fresh two-component system, mild setup and corrective costs.
        system = level_system(
            n=2, horizon=10, shape="high", scale="high", setup="low", cr="low"
        )
        table = exact_multistage_value(system)
        assert 5.0 < table.initial_value < 12.0

    def test_budget_refusal_on_many_components(self):
        system = level_system(n=3, horizon=6)
        with pytest.raises(BudgetExceededError):
            exact_multistage_value(system)

    def test_hazard_construction_matches_cdf_ratios(self):
        c = ComponentSpec(index=0, shape=2.0, scale=5.0, cost_pr=1.0, cost_cr=9.0)
        hz = weibull_hazards(c, 10)
        from groupmaint.scenarios import weibull_cdf

        for a in range(1, 11):
            num = weibull_cdf(a, 2.0, 5.0) - weibull_cdf(a - 1, 2.0, 5.0)
            den = 1.0 - weibull_cdf(a - 1, 2.0, 5.0)
            assert hz[a - 1] == pytest.approx(num / den)


class TestStructureChecks:
    def test_existence_flags_on_random_tiny_instances(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            system, scenario = random_tiny_instance(rng)
            report = theorem_structure_check(system, scenario)
            assert report.tight_anchor_exists
            assert report.order_preserving_exists

    def test_single_individual_trivially_true(self):
        system = single_system(horizon=4)
        scenario = Scenario(lifetimes=((2, 9),))
        report = theorem_structure_check(system, scenario)
        assert report.tight_anchor_exists and report.order_preserving_exists

    def test_check_is_existential_not_universal(self):
        # Two identical components, generous horizon: swapping the two
        # replacement orders gives equal-cost optima, some of which invert
        # the failure order; existence must still hold.
        comps = tuple(
            ComponentSpec(index=i, shape=2.0, scale=5.0, cost_pr=1.0, cost_cr=8.0)
            for i in range(2)
        )
        system = SystemSpec(components=comps, horizon=6, setup_cost=0.0)
        scenario = Scenario(lifetimes=((3, 9), (4, 9)))
        report = theorem_structure_check(system, scenario)
        assert report.order_preserving_exists
        assert report.optimum_count > 1
