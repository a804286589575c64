"""Instance, scenario, and schedule types plus exact cost evaluation.

The planning unit is a system of ``n`` component slots maintained over a
horizon of ``T`` decision periods.  Slot ``i`` consumes a sequence of
physical individuals: the first is already installed when planning starts
(time 0) and each later one is installed the moment its predecessor is
replaced.  An individual installed at time ``s`` with integer lifetime
``L`` is observed failed at time ``s + L``; it may be replaced
preventively at any time in ``[s + 1, s + L - 1]`` and must be replaced
correctively at ``s + L`` at the latest.  A component that is already
failed when planning starts carries a first-individual lifetime of 0 and
must be correctively replaced in period 1.  Every period with at least
one replacement, of any size, pays the shared setup cost once.

All types are immutable values; all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

# Replacement labels.
PR = "PR"
CR = "CR"
UNUSED = "UNUSED"

# Violation families reported by check_feasibility.  Setup linkage can
# never be violated here because setup periods are derived from the
# replacement times rather than stored separately.
ORDERING = "ordering"
SETUP_LINKAGE = "setup-linkage"
LIFETIME_WINDOW = "lifetime-window"
FIRST_PERIOD = "first-period"
INITIAL_FAILURE = "initial-failure"
CAPACITY = "capacity"


@dataclass(frozen=True)
class ComponentSpec:
    """One component slot: lifetime distribution, costs, starting state."""

    index: int
    shape: float
    scale: float
    cost_pr: float
    cost_cr: float
    initial_age: int = 0
    initially_failed: bool = False

    def __post_init__(self) -> None:
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("Weibull shape and scale must be positive")
        if self.cost_pr <= 0:
            raise ValueError("preventive replacement cost must be positive")
        if self.cost_pr >= self.cost_cr:
            raise ValueError("preventive cost must be below corrective cost")
        if self.initial_age < 0:
            raise ValueError("initial age must be non-negative")


@dataclass(frozen=True)
class SystemSpec:
    """A maintenance planning instance."""

    components: tuple[ComponentSpec, ...]
    horizon: int
    period_len: float = 1.0
    setup_cost: float = 0.0
    max_individuals: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        if self.max_individuals is None:
            # One replacement per period at most, so the horizon bounds the
            # number of individuals any slot can consume.
            object.__setattr__(self, "max_individuals", self.horizon)
        if not self.components:
            raise ValueError("a system needs at least one component")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one period")
        if self.period_len <= 0:
            raise ValueError("period length must be positive")
        if self.setup_cost < 0:
            raise ValueError("setup cost must be non-negative")
        if self.max_individuals < 1:
            raise ValueError("need at least one individual per component")

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def failed_components(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.components) if c.initially_failed)


@dataclass(frozen=True)
class Scenario:
    """One joint realization of every individual's lifetime, in periods.

    ``lifetimes[i][r]`` is the lifetime of slot ``i``'s ``r``-th individual
    (0-based).  The first entry is the residual lifetime of the individual
    already installed at time 0; it is 0 exactly when that component starts
    failed.  ``extended_horizon`` is the horizon plus the largest lifetime
    in the scenario set the scenario was sampled with; it is metadata and
    may be None for hand-built scenarios.
    """

    lifetimes: tuple[tuple[int, ...], ...]
    probability: float = 1.0
    extended_horizon: int | None = None

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(v) for v in row) for row in self.lifetimes)
        object.__setattr__(self, "lifetimes", rows)
        for row in rows:
            if not row:
                raise ValueError("every component needs at least one lifetime")
            if any(v < 0 for v in row):
                raise ValueError("lifetimes must be non-negative integers")
            if any(v < 1 for v in row[1:]):
                raise ValueError("only the first individual may have lifetime 0")
        if not 0 < self.probability <= 1:
            raise ValueError("scenario probability must be in (0, 1]")

    @property
    def max_lifetime(self) -> int:
        return max(max(row) for row in self.lifetimes)


@dataclass(frozen=True)
class Schedule:
    """Replacement times per component, strictly increasing within a slot."""

    times: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "times", tuple(tuple(int(t) for t in row) for row in self.times)
        )

    @property
    def setup_times(self) -> tuple[int, ...]:
        return tuple(sorted({t for row in self.times for t in row}))


@dataclass(frozen=True)
class CostBreakdown:
    pr_total: float
    cr_total: float
    setup_total: float

    @property
    def total(self) -> float:
        return self.pr_total + self.cr_total + self.setup_total


@dataclass(frozen=True)
class Violation:
    family: str
    component: int
    individual: int
    message: str

    def __str__(self) -> str:
        return (
            f"[{self.family}] component {self.component}, "
            f"individual {self.individual + 1}: {self.message}"
        )


class FeasibilityError(ValueError):
    """Raised when an operation requires a feasible schedule."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        head = "; ".join(str(v) for v in violations[:3])
        more = "" if len(violations) <= 3 else f" (+{len(violations) - 3} more)"
        super().__init__(f"infeasible schedule: {head}{more}")


@dataclass(frozen=True)
class FormulaDetails:
    """Intermediate quantities of the indicator-based classification path.

    ``pr_indicator``: the 0/1 preventive indicator per (component,
    individual).  ``step`` holds the sparse unit step at the replacement
    time; ``signed_diff`` the sparse difference between an individual's
    step and its predecessor's step shifted by the lifetime; ``dev_up`` /
    ``dev_down`` the non-negative deviation pair splitting that signed
    difference.
    """

    pr_indicator: dict[tuple[int, int], int]
    step: dict[tuple[int, int], dict[int, int]]
    signed_diff: dict[tuple[int, int], dict[int, int]]
    dev_up: dict[tuple[int, int], dict[int, int]]
    dev_down: dict[tuple[int, int], dict[int, int]]


@dataclass(frozen=True)
class ReplacementLabels:
    """PR/CR/UNUSED tag per individual, aligned with the scenario rows."""

    labels: tuple[tuple[str, ...], ...]
    formula: FormulaDetails | None = None

    def count(self, component: int, kind: str) -> int:
        return sum(1 for tag in self.labels[component] if tag == kind)


def failure_time(install: int, lifetime: int) -> int:
    """Time at which an individual installed at ``install`` is seen failed.

    A lifetime of 0 only occurs for a first individual that is already
    failed at planning time; its forced corrective slot is period 1.
    """
    return install + lifetime if lifetime >= 1 else install + 1


def _usable(system: SystemSpec, scenario: Scenario, component: int) -> int:
    return min(system.max_individuals, len(scenario.lifetimes[component]))


def check_feasibility(
    system: SystemSpec, scenario: Scenario, schedule: Schedule
) -> list[Violation]:
    """Return all constraint violations; an empty list means feasible."""
    if len(schedule.times) != system.n:
        raise ValueError("schedule must have one row per component")
    if len(scenario.lifetimes) != system.n:
        raise ValueError("scenario must have one row per component")

    T = system.horizon
    out: list[Violation] = []
    for i, comp in enumerate(system.components):
        row = scenario.lifetimes[i]
        times = schedule.times[i]
        q_eff = _usable(system, scenario, i)
        if len(times) > q_eff:
            out.append(
                Violation(
                    CAPACITY, i, q_eff,
                    f"{len(times)} replacements but only {q_eff} individuals",
                )
            )
            continue

        install = 0
        ok_chain = True
        for r, t in enumerate(times):
            if t < 1 or t > T:
                out.append(Violation(ORDERING, i, r, f"time {t} outside 1..{T}"))
                ok_chain = False
                break
            if t <= install and r > 0:
                out.append(
                    Violation(
                        ORDERING, i, r,
                        f"time {t} not after predecessor's time {install}",
                    )
                )
                ok_chain = False
                break
            if r > 0 and t == 1:
                out.append(
                    Violation(FIRST_PERIOD, i, r, "only the first individual may be replaced in period 1")
                )
                ok_chain = False
                break
            due = failure_time(install, row[r])
            if t > due:
                out.append(
                    Violation(
                        LIFETIME_WINDOW, i, r,
                        f"time {t} after failure time {due}",
                    )
                )
                ok_chain = False
                break
            install = t

        if comp.initially_failed and (not times or times[0] != 1):
            out.append(
                Violation(
                    INITIAL_FAILURE, i, 0,
                    "failed at period 1 but not replaced then",
                )
            )
            continue

        if ok_chain and len(times) < q_eff:
            nxt = row[len(times)]
            due = failure_time(install, nxt)
            if due <= T:
                out.append(
                    Violation(
                        LIFETIME_WINDOW, i, len(times),
                        f"fails at {due} within the horizon but is never replaced",
                    )
                )
    return out


def _require_feasible(system: SystemSpec, scenario: Scenario, schedule: Schedule) -> None:
    violations = check_feasibility(system, scenario, schedule)
    if violations:
        raise FeasibilityError(violations)


def classify_replacements(
    system: SystemSpec, scenario: Scenario, schedule: Schedule
) -> ReplacementLabels:
    """Label every individual PR, CR, or UNUSED by the direct rule.

    A replacement exactly at an individual's failure time is corrective;
    any earlier replacement is preventive.
    """
    _require_feasible(system, scenario, schedule)
    labels = []
    for i in range(system.n):
        row = scenario.lifetimes[i]
        times = schedule.times[i]
        q_eff = _usable(system, scenario, i)
        tags = []
        install = 0
        for r in range(q_eff):
            if r < len(times):
                t = times[r]
                tags.append(CR if t >= failure_time(install, row[r]) else PR)
                install = t
            else:
                tags.append(UNUSED)
        labels.append(tuple(tags))
    return ReplacementLabels(labels=tuple(labels))


def formula_classify(
    system: SystemSpec, scenario: Scenario, schedule: Schedule
) -> ReplacementLabels:
    """Label individuals through the 0/1 indicator identities.

    This path never compares a replacement time against a failure time
    directly.  It derives each individual's preventive indicator from the
    unit steps of the cumulative replaced-by-time variables: the indicator
    is half the total absolute deviation between an individual's step
    train and its predecessor's step train shifted by the lifetime, plus
    the steps the shift window misses before the lifetime, minus a
    correction that zeroes the indicator for the unused successor of the
    last replaced individual.
    """
    _require_feasible(system, scenario, schedule)
    T = system.horizon

    pr_indicator: dict[tuple[int, int], int] = {}
    step: dict[tuple[int, int], dict[int, int]] = {}
    signed: dict[tuple[int, int], dict[int, int]] = {}
    dev_up: dict[tuple[int, int], dict[int, int]] = {}
    dev_down: dict[tuple[int, int], dict[int, int]] = {}
    labels = []

    for i in range(system.n):
        row = scenario.lifetimes[i]
        times = schedule.times[i]
        q_eff = _usable(system, scenario, i)
        horizon_ext = T + max(max(row), 1)

        used = [r < len(times) for r in range(q_eff)]
        w = [dict() for _ in range(q_eff)]
        for r, t in enumerate(times):
            w[r][t] = 1
        for r in range(q_eff):
            step[(i, r)] = dict(w[r])

        tags = []
        for r in range(q_eff):
            if r == 0:
                # Replaced at the first failure time means corrective; the
                # replaced-by-horizon term keeps unused individuals at zero.
                boundary = failure_time(0, row[0])
                y_val = (1 if used[0] else 0) - w[0].get(boundary, 0)
            else:
                life = row[r]
                s_abs = 0
                sd: dict[int, int] = {}
                for t in range(life, min(T + life, horizon_ext) + 1):
                    a = w[r].get(t, 0) if t <= T else 0
                    shifted = t - life
                    b = w[r - 1].get(shifted, 0) if 1 <= shifted <= T else 0
                    y = a - b
                    if y:
                        sd[t] = y
                    s_abs += abs(y)
                pre = sum(w[r].get(t, 0) for t in range(1, life))
                correction = (1 if used[r - 1] else 0) - (1 if used[r] else 0)
                twice = s_abs + pre - correction
                if twice not in (0, 2):
                    raise RuntimeError(
                        f"classification identity broke for component {i}, "
                        f"individual {r + 1}: indicator doubled to {twice}"
                    )
                y_val = twice // 2
                signed[(i, r)] = sd
                dev_up[(i, r)] = {t: v for t, v in sd.items() if v > 0}
                dev_down[(i, r)] = {t: -v for t, v in sd.items() if v < 0}

            pr_indicator[(i, r)] = y_val
            if used[r]:
                tags.append(PR if y_val == 1 else CR)
            else:
                if y_val != 0:
                    raise RuntimeError(
                        f"unused individual {r + 1} of component {i} "
                        f"carries indicator {y_val}"
                    )
                tags.append(UNUSED)
        labels.append(tuple(tags))

    details = FormulaDetails(
        pr_indicator=pr_indicator,
        step=step,
        signed_diff=signed,
        dev_up=dev_up,
        dev_down=dev_down,
    )
    return ReplacementLabels(labels=tuple(labels), formula=details)


def evaluate_schedule(
    system: SystemSpec, scenario: Scenario, schedule: Schedule
) -> CostBreakdown:
    """Exact cost of a feasible schedule under one scenario."""
    tags = classify_replacements(system, scenario, schedule)
    pr_total = 0.0
    cr_total = 0.0
    for i, comp in enumerate(system.components):
        pr_total += comp.cost_pr * tags.count(i, PR)
        cr_total += comp.cost_cr * tags.count(i, CR)
    setup_total = system.setup_cost * len(schedule.setup_times)
    return CostBreakdown(pr_total=pr_total, cr_total=cr_total, setup_total=setup_total)


def first_stage_vector(system: SystemSpec, schedule: Schedule) -> tuple[int, ...]:
    """Which components the schedule replaces in period 1."""
    return tuple(
        1 if schedule.times[i] and schedule.times[i][0] == 1 else 0
        for i in range(system.n)
    )
