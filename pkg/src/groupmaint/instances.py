"""Bundled component parameter sets and random instance generators."""

from __future__ import annotations

import numpy as np

from .model import ComponentSpec, Scenario, SystemSpec

# Reference fleet used for the solver-comparison experiments: per slot
# (shape, scale, corrective cost).  Preventive cost is 1 everywhere.
REFERENCE_COMPONENTS: tuple[tuple[float, float, float], ...] = (
    (6.5, 6.9, 14.4),
    (6.7, 5.0, 11.4),
    (5.4, 7.3, 9.4),
    (4.9, 4.8, 8.0),
    (4.8, 4.2, 11.1),
    (4.4, 4.5, 14.2),
    (5.5, 3.2, 7.4),
)

# Sensitivity fleet: per slot (shape hi, shape lo, scale hi, scale lo,
# corrective hi, corrective lo).
LEVEL_COMPONENTS: tuple[tuple[float, float, float, float, float, float], ...] = (
    (6.5, 2.7, 9.2, 4.4, 25.4, 14.4),
    (6.7, 2.8, 7.9, 3.3, 22.4, 11.4),
    (5.4, 1.9, 9.5, 4.6, 20.1, 9.4),
    (4.9, 1.6, 7.7, 3.2, 19.0, 8.0),
    (4.8, 1.5, 7.3, 2.8, 22.1, 11.1),
    (4.4, 1.3, 7.5, 3.0, 25.2, 14.2),
    (5.5, 2.0, 6.5, 2.2, 18.4, 7.4),
    (6.3, 2.5, 9.5, 4.6, 20.8, 9.8),
)

SETUP_LEVELS = {"high": 100.0, "low": 5.0}


def reference_system(
    n: int = 2,
    horizon: int = 10,
    setup_cost: float = 5.0,
    initial_age: int = 2,
    first_failed: bool = True,
) -> SystemSpec:
    """Fleet of the first ``n`` reference components.

    By default every first individual carries an initial age of 2 and the
    first slot starts failed, matching the solver-comparison setup.
    """
    if not 1 <= n <= len(REFERENCE_COMPONENTS):
        raise ValueError(f"n must lie in 1..{len(REFERENCE_COMPONENTS)}")
    comps = []
    for i in range(n):
        shape, scale, ccr = REFERENCE_COMPONENTS[i]
        failed = first_failed and i == 0
        comps.append(
            ComponentSpec(
                index=i,
                shape=shape,
                scale=scale,
                cost_pr=1.0,
                cost_cr=ccr,
                initial_age=initial_age,
                initially_failed=failed,
            )
        )
    return SystemSpec(components=tuple(comps), horizon=horizon, setup_cost=setup_cost)


def level_system(
    n: int = 2,
    horizon: int = 10,
    shape: str = "high",
    scale: str = "high",
    setup: str = "low",
    cr: str = "low",
) -> SystemSpec:
    """Sensitivity fleet with high/low parameter levels, everything fresh
    (age 0, nothing failed) at the first decision period."""
    if not 1 <= n <= len(LEVEL_COMPONENTS):
        raise ValueError(f"n must lie in 1..{len(LEVEL_COMPONENTS)}")
    hi = {"high": 0, "low": 1}
    comps = []
    for i in range(n):
        sh_hi, sh_lo, sc_hi, sc_lo, cr_hi, cr_lo = LEVEL_COMPONENTS[i]
        comps.append(
            ComponentSpec(
                index=i,
                shape=sh_hi if hi[shape] == 0 else sh_lo,
                scale=sc_hi if hi[scale] == 0 else sc_lo,
                cost_pr=1.0,
                cost_cr=cr_hi if hi[cr] == 0 else cr_lo,
                initial_age=0,
                initially_failed=False,
            )
        )
    return SystemSpec(
        components=tuple(comps), horizon=horizon, setup_cost=SETUP_LEVELS[setup]
    )


def random_system(
    rng: np.random.Generator,
    n: int,
    horizon: int,
    setup_cost: float = 5.0,
    initial_age: int = 2,
    first_failed: bool = True,
) -> SystemSpec:
    """Random fleet in the reference style: shape ~ U(4,7), scale ~ U(1,8),
    corrective cost ~ U(6,16), preventive cost 1."""
    comps = []
    for i in range(n):
        comps.append(
            ComponentSpec(
                index=i,
                shape=float(rng.uniform(4.0, 7.0)),
                scale=float(rng.uniform(1.0, 8.0)),
                cost_pr=1.0,
                cost_cr=float(rng.uniform(6.0, 16.0)),
                initial_age=initial_age,
                initially_failed=first_failed and i == 0,
            )
        )
    return SystemSpec(components=tuple(comps), horizon=horizon, setup_cost=setup_cost)


def random_tiny_instance(
    rng: np.random.Generator,
    max_components: int = 3,
    max_horizon: int = 6,
    max_lifetime: int = 4,
    allow_failed: bool = True,
) -> tuple[SystemSpec, Scenario]:
    """Small random instance with hand-enumerable lifetimes, for property
    tests against the exhaustive oracles."""
    n = int(rng.integers(1, max_components + 1))
    horizon = int(rng.integers(2, max_horizon + 1))
    setup = float(rng.choice([0.0, 2.0, 5.0, 9.0]))
    comps = []
    rows = []
    for i in range(n):
        failed = bool(allow_failed and rng.random() < 0.2)
        comps.append(
            ComponentSpec(
                index=i,
                shape=float(rng.uniform(1.0, 7.0)),
                scale=float(rng.uniform(1.0, 8.0)),
                cost_pr=1.0,
                cost_cr=float(rng.uniform(2.0, 12.0)),
                initial_age=0,
                initially_failed=failed,
            )
        )
        first = 0 if failed else int(rng.integers(1, max_lifetime + 1))
        row = [first] + [
            int(rng.integers(1, max_lifetime + 1)) for _ in range(horizon - 1)
        ]
        rows.append(tuple(row[: horizon]))
    system = SystemSpec(components=tuple(comps), horizon=horizon, setup_cost=setup)
    scenario = Scenario(
        lifetimes=tuple(rows),
        probability=1.0,
        extended_horizon=horizon + max(1, max(max(r) for r in rows)),
    )
    return system, scenario
