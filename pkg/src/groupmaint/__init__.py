"""Replacement scheduling for multi-component systems with shared setups."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CR,
    PR,
    UNUSED,
    ComponentSpec,
    CostBreakdown,
    FeasibilityError,
    ReplacementLabels,
    Scenario,
    Schedule,
    SystemSpec,
    Violation,
    check_feasibility,
    classify_replacements,
    evaluate_schedule,
    formula_classify,
)
from .scenarios import (  # noqa: F401
    SaaParams,
    ScenarioSet,
    cost_bound,
    discretize_lifetime,
    first_stage_count,
    required_sample_size,
    sample_scenarios,
)
from .heuristic import PhTerms, solve_scenario  # noqa: F401
from .pha import FirstStageDecision, PhaState, aggregate_and_update, run_pha  # noqa: F401
