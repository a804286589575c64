"""Rolling-horizon harness basics (the full comparison lives in the
acceptance suite)."""

import math

import pytest

from groupmaint.instances import level_system
from groupmaint.model import ComponentSpec, SystemSpec
from groupmaint.oracles import exact_multistage_value
from groupmaint.rolling import (
    make_planner,
    replay_charges,
    rolling_horizon_simulate,
)


def immediate_failure_system(n=2, horizon=6, setup=5.0):
    comps = tuple(
        ComponentSpec(
            index=i, shape=400.0, scale=0.6, cost_pr=1.0, cost_cr=8.0 + i
        )
        for i in range(n)
    )
    return SystemSpec(components=comps, horizon=horizon, setup_cost=setup)


class TestHarness:
    def test_zero_hazard_costs_nothing_for_every_planner(self):
        system = level_system(n=2, horizon=6)
        for planner in ("none", "direct-grouping", "pha-heuristic"):
            run = rolling_horizon_simulate(
                system, planner, replications=2, seed=1,
                saa_budget=15, zero_hazard=True,
            )
            assert run.mean_cost == 0.0

    @pytest.mark.parametrize("planner", ["none", "direct-grouping", "pha-heuristic"])
    def test_certain_failure_every_period_forces_full_corrective(self, planner):
        system = immediate_failure_system()
        run = rolling_horizon_simulate(
            system, planner, replications=2, seed=3, saa_budget=15
        )
        per_period = sum(c.cost_cr for c in system.components) + system.setup_cost
        assert run.mean_cost == pytest.approx(system.horizon * per_period)

    def test_replay_reproduces_recorded_totals(self):
        system = level_system(n=2, horizon=8, scale="low")
        run = rolling_horizon_simulate(
            system, "pha-heuristic", replications=3, seed=5, saa_budget=40
        )
        assert replay_charges(system, run) == pytest.approx(run.totals)

    def test_same_seed_reproduces_run(self):
        system = level_system(n=2, horizon=6, scale="low")
        a = rolling_horizon_simulate(system, "none", replications=3, seed=8)
        b = rolling_horizon_simulate(system, "none", replications=3, seed=8)
        assert a.totals == b.totals
        assert a.records == b.records

    def test_unknown_planner_rejected(self):
        with pytest.raises(ValueError):
            make_planner("clairvoyant")

    def test_stderr_with_single_replication_is_zero(self):
        system = level_system(n=2, horizon=5, scale="low")
        run = rolling_horizon_simulate(system, "none", replications=1, seed=2)
        assert run.stderr == 0.0

    def test_failed_components_always_replaced(self):
        system = level_system(n=2, horizon=8, scale="low", shape="low")
        run = rolling_horizon_simulate(
            system, "none", replications=4, seed=13
        )
        for rec in run.records:
            assert set(rec.failed) <= set(rec.action)

    def test_mean_not_far_below_multistage_value(self):
        # The optimal expected cost lower-bounds any policy; allow honest
        # Monte Carlo slack with a wide replication count.
        system = level_system(
            n=2, horizon=8, shape="high", scale="low", setup="low", cr="low"
        )
        table = exact_multistage_value(system)
        run = rolling_horizon_simulate(
            system, "direct-grouping", replications=30, seed=17, saa_budget=60
        )
        assert run.mean_cost >= table.initial_value - 3 * run.stderr
