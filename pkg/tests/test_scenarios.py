"""Sampling, discretization, and sample-size arithmetic."""

import math

import numpy as np
import pytest

from groupmaint.instances import reference_system
from groupmaint.model import ComponentSpec
from groupmaint.scenarios import (
    SaaParams,
    cost_bound,
    discretize_lifetime,
    first_stage_count,
    load_scenarios_csv,
    required_sample_size,
    sample_scenarios,
    save_scenarios_csv,
    weibull_cdf,
)


def comp(shape=2.0, scale=5.0, age=0, failed=False):
    return ComponentSpec(
        index=0, shape=shape, scale=scale, cost_pr=1.0, cost_cr=10.0,
        initial_age=age, initially_failed=failed,
    )


class TestDiscretization:
    def test_median_weibull_draw(self):
        assert discretize_lifetime(0.5, comp()) == 5  # ceil(4.1628)

    def test_tiny_draw_clamps_to_one_period(self):
        assert discretize_lifetime(1e-12, comp()) == 1

    def test_exponential_case_hits_integer_boundary(self):
        c = comp(shape=1.0, scale=1.0)
        assert discretize_lifetime(1 - math.exp(-3), c) == 3

    def test_rejects_degenerate_draws(self):
        with pytest.raises(ValueError):
            discretize_lifetime(0.0, comp())
        with pytest.raises(ValueError):
            discretize_lifetime(1.0, comp())

    def test_conditional_draw_exceeds_age(self):
        c = comp(scale=2.0)
        for u in (0.01, 0.5, 0.99):
            assert discretize_lifetime(u, c, min_age=6) >= 7

    def test_extreme_age_stays_finite(self):
        c = comp(shape=1.5, scale=1.0)
        assert discretize_lifetime(0.5, c, min_age=40) == 41


class TestSampling:
    def test_same_seed_identical_sets(self):
        system = reference_system(n=3, horizon=8)
        a = sample_scenarios(system, 25, seed=9)
        b = sample_scenarios(system, 25, seed=9)
        assert [s.lifetimes for s in a] == [s.lifetimes for s in b]

    def test_growing_the_set_keeps_the_prefix(self):
        system = reference_system(n=2, horizon=8)
        small = sample_scenarios(system, 10, seed=4)
        large = sample_scenarios(system, 30, seed=4)
        assert [s.lifetimes for s in small.scenarios] == [
            s.lifetimes for s in large.scenarios[:10]
        ]

    def test_initially_failed_has_zero_residual_everywhere(self):
        system = reference_system(n=2, horizon=8, first_failed=True)
        for s in sample_scenarios(system, 50, seed=1):
            assert s.lifetimes[0][0] == 0
            assert s.lifetimes[1][0] >= 1

    def test_first_alive_shifts_earliest_failure_to_period_two(self):
        system = reference_system(n=2, horizon=8, first_failed=False)
        plain = sample_scenarios(system, 200, seed=2)
        alive = sample_scenarios(system, 200, seed=2, first_alive=True)
        assert min(s.lifetimes[1][0] for s in alive) >= 2
        assert all(
            a.lifetimes[1][0] == p.lifetimes[1][0] + 1
            for a, p in zip(alive, plain)
        )

    def test_probabilities_are_uniform(self):
        system = reference_system(n=2, horizon=6)
        scen = sample_scenarios(system, 8, seed=0)
        assert all(s.probability == pytest.approx(1 / 8) for s in scen)

    def test_kolmogorov_distance_to_discretized_cdf(self):
        c = comp(shape=2.0, scale=5.0)
        system = reference_system(n=1, horizon=5, first_failed=False, initial_age=0)
        sys_c = system.components[0]
        draws = 10_000
        rng = np.random.default_rng(123)
        samples = [
            discretize_lifetime(float(u), c)
            for u in rng.uniform(1e-12, 1 - 1e-12, draws)
        ]
        hi = max(samples)
        worst = 0.0
        for k in range(1, hi + 1):
            empirical = sum(1 for s in samples if s <= k) / draws
            worst = max(worst, abs(empirical - weibull_cdf(k, c.shape, c.scale)))
        assert worst < 0.02
        del sys_c

    def test_conditional_mean_matches_analytic(self):
        age = 3
        c = comp(shape=2.0, scale=5.0, age=age)
        draws = 10_000
        rng = np.random.default_rng(7)
        residuals = np.array(
            [
                discretize_lifetime(float(u), c, min_age=age) - age
                for u in rng.uniform(1e-12, 1 - 1e-12, draws)
            ],
            dtype=float,
        )
        base = weibull_cdf(age, c.shape, c.scale)
        mean = 0.0
        k = age
        prev = base
        while True:
            k += 1
            cur = weibull_cdf(k, c.shape, c.scale)
            p = (cur - prev) / (1.0 - base)
            mean += (k - age) * p
            prev = cur
            if 1.0 - cur < 1e-14:
                break
        se = residuals.std(ddof=1) / math.sqrt(draws)
        assert abs(residuals.mean() - mean) < 3 * se


class TestSampleSizing:
    def test_reference_bound(self):
        system = reference_system(n=2, horizon=10, setup_cost=5.0)
        assert cost_bound(system) == pytest.approx(616.0, abs=1e-9)

    def test_bound_smallest_case(self):
        c = ComponentSpec(index=0, shape=2.0, scale=5.0, cost_pr=0.5, cost_cr=1.0)
        from groupmaint.model import SystemSpec

        system = SystemSpec(components=(c,), horizon=1, setup_cost=0.0)
        assert cost_bound(system) == pytest.approx(2.0)

    def test_bound_linear_in_horizon(self):
        a = reference_system(n=2, horizon=10)
        b = reference_system(n=2, horizon=20)
        assert cost_bound(b) == pytest.approx(2 * cost_bound(a))

    @pytest.mark.parametrize(
        "n,expected",
        [(2, 740), (3, 910), (4, 1080), (5, 1250), (6, 1420), (7, 1600)],
    )
    def test_published_scenario_counts(self, n, expected):
        params = SaaParams.default_setting(2 ** (n - 1))
        assert required_sample_size(params).rounded == expected

    def test_sigma_cancels_in_default_setting(self):
        small = SaaParams.default_setting(8, sigma=1.0)
        large = SaaParams.default_setting(8, sigma=616.0)
        assert required_sample_size(small).raw == pytest.approx(
            required_sample_size(large).raw
        )

    def test_near_unit_ratio_rounds_to_zero(self):
        params = SaaParams(
            epsilon=0.1, tau=0.01, alpha=0.99, sigma=1.0, first_stage_count=1
        )
        assert required_sample_size(params).rounded == 0

    def test_rejects_tau_at_epsilon(self):
        with pytest.raises(ValueError):
            SaaParams(epsilon=0.1, tau=0.1, alpha=0.1, sigma=1.0, first_stage_count=2)

    def test_monotonicity(self):
        base = SaaParams(
            epsilon=0.1, tau=0.01, alpha=0.1, sigma=1.0, first_stage_count=8
        )
        base_size = required_sample_size(base).raw
        more_decisions = SaaParams(
            epsilon=0.1, tau=0.01, alpha=0.1, sigma=1.0, first_stage_count=16
        )
        assert required_sample_size(more_decisions).raw > base_size
        wider_sigma = SaaParams(
            epsilon=0.1, tau=0.01, alpha=0.1, sigma=2.0, first_stage_count=8
        )
        assert required_sample_size(wider_sigma).raw > base_size
        laxer_alpha = SaaParams(
            epsilon=0.1, tau=0.01, alpha=0.5, sigma=1.0, first_stage_count=8
        )
        assert required_sample_size(laxer_alpha).raw < base_size
        wider_gap = SaaParams(
            epsilon=0.2, tau=0.01, alpha=0.1, sigma=1.0, first_stage_count=8
        )
        assert required_sample_size(wider_gap).raw < base_size

    def test_first_stage_count_halved_by_failure(self):
        assert first_stage_count(reference_system(n=3, first_failed=True)) == 4
        assert first_stage_count(reference_system(n=3, first_failed=False)) == 8


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        system = reference_system(n=2, horizon=6)
        scen = sample_scenarios(system, 7, seed=13)
        path = tmp_path / "scen.csv"
        save_scenarios_csv(scen, path)
        back = load_scenarios_csv(path, horizon=system.horizon)
        assert [s.lifetimes for s in back] == [s.lifetimes for s in scen]
        assert back.extended_horizon == scen.extended_horizon
