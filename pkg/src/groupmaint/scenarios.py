"""Lifetime discretization, scenario sampling, and sample-size planning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .model import ComponentSpec, Scenario, SystemSpec

_SNAP = 1e-9  # inverse-CDF values this close to an integer are treated as exact


def weibull_cdf(x: float, shape: float, scale: float) -> float:
    if x <= 0:
        return 0.0
    exponent = shape * math.log(x / scale)
    if exponent > 36:  # exp(-e^36) underflows to 0
        return 1.0
    return -math.expm1(-math.exp(exponent))


def weibull_quantile(p: float, shape: float, scale: float) -> float:
    if not 0 <= p < 1:
        raise ValueError("quantile argument must lie in [0, 1)")
    return scale * (-math.log1p(-p)) ** (1.0 / shape)


def _snap_ceil(x: float) -> int:
    nearest = round(x)
    if abs(x - nearest) <= _SNAP * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def discretize_lifetime(
    u: float, component: ComponentSpec, min_age: int = 0, period_len: float = 1.0
) -> int:
    """Integer lifetime in periods from one uniform draw.

    Draws from the Weibull conditional on surviving ``min_age`` periods:
    the inverse CDF is evaluated at ``F(min_age) + u * (1 - F(min_age))``
    and rounded up to whole periods (a unit failing during period t is
    observed failed at time t), clamped to at least ``min_age + 1``.  The
    conditional quantile is computed as
    ``scale * ((age/scale)^shape - ln(1-u))^(1/shape)``, which is the same
    expression without the catastrophic cancellation near F = 1.
    """
    if not 0 < u < 1:
        raise ValueError("uniform draw must lie strictly inside (0, 1)")
    if min_age < 0:
        raise ValueError("minimum age must be non-negative")
    shape, scale = component.shape, component.scale
    base = _survival_exponent(min_age * period_len, shape, scale)
    if math.isinf(base):
        return min_age + 1  # survival is already a measure-zero event
    x = scale * (base - math.log1p(-u)) ** (1.0 / shape) / period_len
    return max(min_age + 1, _snap_ceil(x))


def _survival_exponent(age: float, shape: float, scale: float) -> float:
    """(age/scale)^shape, overflowing to infinity instead of raising."""
    if age <= 0:
        return 0.0
    log_term = shape * math.log(age / scale)
    if log_term > 700:
        return math.inf
    return math.exp(log_term)


def _discretize_batch(
    u: np.ndarray, shape: float, scale: float, min_age: int, period_len: float
) -> np.ndarray:
    base = _survival_exponent(min_age * period_len, shape, scale)
    if math.isinf(base):
        return np.full(u.shape, min_age + 1, dtype=np.int64)
    x = scale * (base - np.log1p(-u)) ** (1.0 / shape) / period_len
    nearest = np.rint(x)
    snapped = np.where(np.abs(x - nearest) <= _SNAP * np.maximum(1.0, np.abs(x)),
                       nearest, np.ceil(x))
    return np.maximum(min_age + 1, snapped.astype(np.int64))


@dataclass(frozen=True)
class ScenarioSet:
    """Equiprobable scenarios plus the seed that produced them."""

    scenarios: tuple[Scenario, ...]
    seed: int | None
    extended_horizon: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise ValueError("a scenario set cannot be empty")
        total = sum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"scenario probabilities sum to {total}, not 1")

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)


def sample_scenarios(
    system: SystemSpec,
    count: int,
    seed: int,
    *,
    first_alive: bool = False,
) -> ScenarioSet:
    """Sample ``count`` equiprobable lifetime scenarios.

    Each scenario holds ``max_individuals`` lifetimes per component.  The
    first individual of a working component is drawn conditional on having
    survived its initial age, and the residual is the draw minus that age;
    an initially failed component gets residual 0 in every scenario.

    ``first_alive`` marks the first individual as known to be working at
    the first decision period (the rolling-horizon case, where the state
    was just observed): the residual is then shifted up by one so the
    earliest possible failure lands in period 2 rather than period 1.

    The generator consumes one uniform stream in scenario-major order, so
    growing ``count`` with the same seed extends the set without changing
    the scenarios already drawn.
    """
    if count < 1:
        raise ValueError("need at least one scenario")
    q = system.max_individuals
    n = system.n
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    u = rng.random((count, n, q))
    u = np.clip(u, 1e-15, 1.0 - 1e-15)

    columns = []
    for i, comp in enumerate(system.components):
        block = np.empty((count, q), dtype=np.int64)
        if comp.initially_failed:
            block[:, 0] = 0
        else:
            draw = _discretize_batch(
                u[:, i, 0], comp.shape, comp.scale, comp.initial_age, system.period_len
            )
            block[:, 0] = draw - comp.initial_age + (1 if first_alive else 0)
        if q > 1:
            block[:, 1:] = _discretize_batch(
                u[:, i, 1:], comp.shape, comp.scale, 0, system.period_len
            )
        columns.append(block)

    stacked = np.stack(columns, axis=1)  # (count, n, q)
    extended = system.horizon + max(1, int(stacked.max()))
    prob = 1.0 / count
    scenarios = tuple(
        Scenario(
            lifetimes=tuple(tuple(int(v) for v in stacked[k, i]) for i in range(n)),
            probability=prob,
            extended_horizon=extended,
        )
        for k in range(count)
    )
    return ScenarioSet(scenarios=scenarios, seed=int(seed), extended_horizon=extended)


def cost_bound(system: SystemSpec) -> float:
    """Worst-case cost spread: corrective work plus a setup, every period."""
    total_cr = sum(c.cost_cr for c in system.components)
    return 2.0 * system.horizon * (total_cr + system.setup_cost)


@dataclass(frozen=True)
class SaaParams:
    """Accuracy targets for sizing a sample average approximation."""

    epsilon: float
    tau: float
    alpha: float
    sigma: float
    first_stage_count: int

    def __post_init__(self) -> None:
        if not 0 <= self.tau < self.epsilon:
            raise ValueError("need 0 <= tau < epsilon")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.first_stage_count < 1:
            raise ValueError("need at least one feasible first-stage decision")

    @classmethod
    def default_setting(cls, first_stage_count: int, sigma: float = 1.0) -> "SaaParams":
        """The standard accuracy setting: epsilon = 0.1 sigma, tau = 0.1
        epsilon, alpha = 0.1.  Sigma then cancels out of the sample size."""
        eps = 0.1 * sigma
        return cls(
            epsilon=eps,
            tau=0.1 * eps,
            alpha=0.1,
            sigma=sigma,
            first_stage_count=first_stage_count,
        )


class SampleSize(NamedTuple):
    rounded: int
    raw: float


def required_sample_size(params: SaaParams) -> SampleSize:
    """Minimum scenario count for the requested accuracy, rounded to 10s."""
    raw = (
        2.0
        * params.sigma**2
        / (params.epsilon - params.tau) ** 2
        * math.log(params.first_stage_count / params.alpha)
    )
    rounded = int(math.floor(raw / 10.0 + 0.5)) * 10
    return SampleSize(rounded=rounded, raw=raw)


def first_stage_count(system: SystemSpec) -> int:
    """Feasible first-stage decisions: failed components are forced on."""
    free = system.n - len(system.failed_components)
    return 2**free


def save_scenarios_csv(scenario_set: ScenarioSet, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "component_id", "individual_index", "lifetime"])
        for k, scenario in enumerate(scenario_set):
            for i, row in enumerate(scenario.lifetimes):
                for r, life in enumerate(row):
                    writer.writerow([k, i, r + 1, life])


def load_scenarios_csv(path: str | Path, horizon: int) -> ScenarioSet:
    table: dict[int, dict[int, dict[int, int]]] = {}
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            k = int(record["scenario_id"])
            i = int(record["component_id"])
            r = int(record["individual_index"])
            table.setdefault(k, {}).setdefault(i, {})[r] = int(record["lifetime"])
    if not table:
        raise ValueError(f"no scenarios found in {path}")
    count = len(table)
    prob = 1.0 / count
    max_life = 1
    scenarios = []
    for k in sorted(table):
        comps = table[k]
        rows = []
        for i in sorted(comps):
            entries = comps[i]
            rows.append(tuple(entries[r] for r in sorted(entries)))
        max_life = max(max_life, max(max(row) for row in rows))
        scenarios.append((k, rows))
    extended = horizon + max_life
    built = tuple(
        Scenario(lifetimes=tuple(rows), probability=prob, extended_horizon=extended)
        for _, rows in scenarios
    )
    return ScenarioSet(scenarios=built, seed=None, extended_horizon=extended)
