"""Consensus solver mechanics and agreement with the exact oracle."""

import math

import numpy as np
import pytest

from groupmaint.instances import random_system, reference_system
from groupmaint.model import Scenario
from groupmaint.oracles import ExactSubsolver, exact_def_optimum
from groupmaint.pha import (
    FirstStageDecision,
    HeuristicSubsolver,
    PhaState,
    aggregate_and_update,
    run_pha,
)
from groupmaint.scenarios import sample_scenarios


def state_for(solutions_n, probs, rho=5.0):
    n = solutions_n
    k = len(probs)
    return PhaState(
        iteration=0,
        consensus=(0.0,) * n,
        multipliers=((0.0,) * n,) * k,
        rho=rho,
        convergence=math.inf,
        tolerance=1e-2,
        max_iterations=50,
        probabilities=tuple(probs),
    )


class TestAggregation:
    def test_agreeing_solutions_leave_prices_and_distance_zero(self):
        state = state_for(2, (0.5, 0.5))
        nxt = aggregate_and_update([(1, 0), (1, 0)], state)
        assert nxt.consensus == (1.0, 0.0)
        assert nxt.convergence == 0.0
        assert all(all(w == 0.0 for w in row) for row in nxt.multipliers)

    def test_split_solutions(self):
        state = state_for(1, (0.5, 0.5), rho=2.0)
        nxt = aggregate_and_update([(1,), (0,)], state)
        assert nxt.consensus == (0.5,)
        assert nxt.convergence == pytest.approx(0.5)
        assert nxt.multipliers == ((1.0,), (-1.0,))

    def test_price_balance_preserved(self):
        rng = np.random.default_rng(0)
        probs = (0.2, 0.3, 0.5)
        state = state_for(3, probs, rho=4.0)
        for _ in range(6):
            solutions = [tuple(int(b) for b in rng.integers(0, 2, 3)) for _ in probs]
            state = aggregate_and_update(solutions, state)
            for i in range(3):
                balance = sum(
                    p * state.multipliers[k][i] for k, p in enumerate(probs)
                )
                assert balance == pytest.approx(0.0, abs=1e-12)

    def test_solution_count_must_match(self):
        state = state_for(1, (1.0,))
        with pytest.raises(ValueError):
            aggregate_and_update([(1,), (0,)], state)


class TestRunPha:
    def test_single_scenario_converges_immediately(self):
        system = reference_system(n=2, horizon=6)
        scen = sample_scenarios(system, 1, seed=5)
        decision, trace = run_pha(system, scen)
        assert decision.converged
        assert decision.iterations == 1
        assert trace[-1].convergence == 0.0

    def test_identical_scenarios_agree_at_once(self):
        system = reference_system(n=2, horizon=6)
        one = sample_scenarios(system, 1, seed=5).scenarios[0]
        copies = [
            Scenario(lifetimes=one.lifetimes, probability=0.25) for _ in range(4)
        ]
        decision, trace = run_pha(system, copies, dedup=False)
        assert decision.iterations == 1
        assert trace[-1].convergence == 0.0
        assert all(all(w == 0.0 for w in row) for row in trace[-1].multipliers)

    def test_matches_exact_def_on_small_fixture(self):
        system = reference_system(n=2, horizon=6)
        scen = sample_scenarios(system, 4, seed=7)
        exact_decision, exact_value = exact_def_optimum(system, scen)
        decision, _ = run_pha(system, scen)
        assert decision.x == exact_decision.x
        assert decision.objective_estimate >= exact_value - 1e-9

    def test_estimate_dominates_exact_value(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            system = random_system(rng, n=2, horizon=6)
            scen = sample_scenarios(system, 6, int(rng.integers(1 << 31)))
            _, exact_value = exact_def_optimum(system, scen)
            decision, _ = run_pha(system, scen)
            assert decision.objective_estimate >= exact_value - 1e-9

    def test_iterated_no_worse_than_unpriced_consensus(self):
        system = reference_system(n=2, horizon=6)
        scen = sample_scenarios(system, 8, seed=41)
        standalone, _ = run_pha(system, scen, max_iterations=0)
        iterated, _ = run_pha(system, scen)
        assert iterated.objective_estimate <= standalone.objective_estimate + 1e-9

    def test_failed_component_always_on(self):
        system = reference_system(n=3, horizon=6, first_failed=True)
        scen = sample_scenarios(system, 6, seed=9)
        decision, _ = run_pha(system, scen)
        assert decision.x[0] == 1
        assert decision.z == 1

    def test_exact_subsolver_agrees_with_heuristic_on_fixture(self):
        system = reference_system(n=2, horizon=6)
        scen = sample_scenarios(system, 4, seed=7)
        via_exact, _ = run_pha(system, scen, subsolver=ExactSubsolver())
        via_heur, _ = run_pha(system, scen, subsolver=HeuristicSubsolver())
        assert via_exact.x == via_heur.x

    def test_trace_writer_called_every_iteration(self):
        system = reference_system(n=2, horizon=6)
        scen = sample_scenarios(system, 4, seed=7)
        seen = []
        run_pha(system, scen, trace_writer=seen.append)
        assert len(seen) >= 2
        assert seen[0].iteration == 0

    def test_decision_validates_setup_linkage(self):
        with pytest.raises(ValueError):
            FirstStageDecision(x=(1, 0), z=0, objective_estimate=1.0)
