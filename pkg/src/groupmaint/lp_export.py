"""Extensive-form model export in LP text format, plus a small reader and
a brute-force checker for desk-scale validation.

The exported model prices every individual of every scenario with a 0/1
preventive indicator derived from unit-step differences, with the
absolute values linearized by a non-negative deviation pair.  Signed-step
variables are eliminated by substituting their definition directly into
the deviation identities, which shrinks the file.  Two horizon-edge
corrections keep the indicator binary and the pricing exact: a
never-used first individual scores zero through its replaced-by-horizon
term, and the unused successor of a slot's final replacement is cancelled
by the difference of consecutive replaced-by-horizon terms.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .model import Schedule, SystemSpec

SCHEMA = "groupmaint-lp-1"


def _fmt(value: float) -> str:
    return f"{value:.17g}"


class _Builder:
    def __init__(self):
        self.objective: dict[str, float] = {}
        self.constraints: list[tuple[str, dict[str, float], str, float]] = []
        self.binaries: list[str] = []
        self.families: dict[str, int] = {}

    def obj(self, name: str, coef: float) -> None:
        if coef:
            self.objective[name] = self.objective.get(name, 0.0) + coef

    def add(self, family: str, label: str, terms: dict[str, float], sense: str, rhs: float) -> None:
        terms = {k: v for k, v in terms.items() if v}
        self.constraints.append((f"{family}_{label}", terms, sense, rhs))
        self.families[family] = self.families.get(family, 0) + 1


def _effective_first(life: int) -> int:
    # A failed-at-start slot (residual 0) is due in period 1.
    return life if life >= 1 else 1


def build_def_model(system: SystemSpec, scenarios) -> _Builder:
    """Assemble objective and constraints of the extensive form."""
    scen_list = list(scenarios)
    T = system.horizon
    q = system.max_individuals
    if q != T:
        raise ValueError("export requires one potential individual per period (q = T)")
    for s in scen_list:
        for row in s.lifetimes:
            if len(row) != q:
                raise ValueError("every scenario row must carry q lifetimes")

    b = _Builder()
    n = system.n

    def xr(i, r, t, w):
        return f"xr_c{i}_r{r}_t{t}_s{w}"

    def wv(i, r, t, w):
        return f"w_c{i}_r{r}_t{t}_s{w}"

    for i in range(n):
        b.binaries.append(f"x_c{i}")
    for w, scenario in enumerate(scen_list):
        for t in range(1, T + 1):
            b.binaries.append(f"z_t{t}_s{w}")
        for i in range(n):
            for r in range(1, q + 1):
                b.binaries.append(f"Y_c{i}_r{r}_s{w}")
                for t in range(1, T + 1):
                    b.binaries.append(xr(i, r, t, w))
                    b.binaries.append(wv(i, r, t, w))

    # Objective: preventive-versus-corrective spread on the indicator plus
    # the replaced-by-horizon term that cancels never-used individuals,
    # plus setup charges.
    for w, scenario in enumerate(scen_list):
        p = scenario.probability
        for i, comp in enumerate(system.components):
            for r in range(1, q + 1):
                b.obj(f"Y_c{i}_r{r}_s{w}", p * (comp.cost_pr - comp.cost_cr))
                b.obj(xr(i, r, T, w), p * comp.cost_cr)
        for t in range(1, T + 1):
            b.obj(f"z_t{t}_s{w}", p * system.setup_cost)

    for i, comp in enumerate(system.components):
        if comp.initially_failed:
            b.add("forced", f"c{i}", {f"x_c{i}": 1.0}, ">=", 1.0)

    for w, scenario in enumerate(scen_list):
        for i, comp in enumerate(system.components):
            row = scenario.lifetimes[i]
            first = _effective_first(row[0])

            b.add(
                "nonant", f"c{i}_s{w}",
                {f"x_c{i}": 1.0, xr(i, 1, 1, w): -1.0}, "=", 0.0,
            )
            if first <= T:
                b.add("lifefirst", f"c{i}_s{w}", {xr(i, 1, first, w): 1.0}, "=", 1.0)

            for r in range(1, q + 1):
                for t in range(1, T):
                    b.add(
                        "mono", f"c{i}_r{r}_t{t}_s{w}",
                        {xr(i, r, t, w): 1.0, xr(i, r, t + 1, w): -1.0}, "<=", 0.0,
                    )
                if r >= 2:
                    b.add("first0", f"c{i}_r{r}_s{w}", {xr(i, r, 1, w): 1.0}, "=", 0.0)
                if r < q:
                    for t in range(1, T):
                        b.add(
                            "succ", f"c{i}_r{r}_t{t}_s{w}",
                            {xr(i, r + 1, t + 1, w): 1.0, xr(i, r, t, w): -1.0},
                            "<=", 0.0,
                        )
                    nxt_life = row[r]
                    for t in range(1, T - nxt_life + 1):
                        b.add(
                            "life", f"c{i}_r{r}_t{t}_s{w}",
                            {xr(i, r, t, w): 1.0, xr(i, r + 1, t + nxt_life, w): -1.0},
                            "<=", 0.0,
                        )

                # Unit steps of the cumulative replaced-by variable.
                b.add(
                    "wdef", f"c{i}_r{r}_t1_s{w}",
                    {wv(i, r, 1, w): 1.0, xr(i, r, 1, w): -1.0}, "=", 0.0,
                )
                for t in range(2, T + 1):
                    b.add(
                        "wdef", f"c{i}_r{r}_t{t}_s{w}",
                        {
                            wv(i, r, t, w): 1.0,
                            xr(i, r, t, w): -1.0,
                            xr(i, r, t - 1, w): 1.0,
                        },
                        "=", 0.0,
                    )

            # Indicator of the first individual: replaced by the horizon
            # and not exactly at its due time.
            terms = {f"Y_c{i}_r1_s{w}": 1.0, xr(i, 1, T, w): -1.0}
            if first <= T:
                terms[wv(i, 1, first, w)] = 1.0
            b.add("ydef1", f"c{i}_s{w}", terms, "=", 0.0)

            for r in range(2, q + 1):
                life = row[r - 1]
                dev_terms: dict[str, float] = {}
                for t in range(life, T + life + 1):
                    own = wv(i, r, t, w) if t <= T else None
                    shift = t - life
                    pred = wv(i, r - 1, shift, w) if 1 <= shift <= T else None
                    if own is None and pred is None:
                        continue
                    u = f"u_c{i}_r{r}_t{t}_s{w}"
                    v = f"v_c{i}_r{r}_t{t}_s{w}"
                    b.binaries.extend([u, v])
                    dterms = {u: 1.0, v: -1.0}
                    if own:
                        dterms[own] = -1.0
                    if pred:
                        dterms[pred] = 1.0
                    b.add("dev", f"c{i}_r{r}_t{t}_s{w}", dterms, "=", 0.0)
                    b.add(
                        "devcap", f"c{i}_r{r}_t{t}_s{w}", {u: 1.0, v: 1.0}, "<=", 1.0
                    )
                    dev_terms[u] = -1.0
                    dev_terms[v] = -1.0

                yterms = {f"Y_c{i}_r{r}_s{w}": 2.0}
                yterms.update(dev_terms)
                for t in range(1, min(life - 1, T) + 1):
                    yterms[wv(i, r, t, w)] = yterms.get(wv(i, r, t, w), 0.0) - 1.0
                # Cancels the lone step the window sees when this
                # individual is the unused successor of the last one.
                yterms[xr(i, r - 1, T, w)] = yterms.get(xr(i, r - 1, T, w), 0.0) + 1.0
                yterms[xr(i, r, T, w)] = yterms.get(xr(i, r, T, w), 0.0) - 1.0
                b.add("ydef", f"c{i}_r{r}_s{w}", yterms, "=", 0.0)

        for t in range(1, T + 1):
            if t == 1:
                for i in range(n):
                    b.add(
                        "setup1", f"c{i}_s{w}",
                        {xr(i, 1, 1, w): 1.0, f"z_t1_s{w}": -1.0}, "<=", 0.0,
                    )
            else:
                for i in range(n):
                    terms = {f"z_t{t}_s{w}": -1.0}
                    for r in range(1, q + 1):
                        terms[xr(i, r, t, w)] = terms.get(xr(i, r, t, w), 0.0) + 1.0
                        terms[xr(i, r, t - 1, w)] = (
                            terms.get(xr(i, r, t - 1, w), 0.0) - 1.0
                        )
                    b.add("setup", f"c{i}_t{t}_s{w}", terms, "<=", 0.0)

    return b


def variable_count_formula(system: SystemSpec, scenarios) -> dict[str, int]:
    """Closed-form variable counts implied by the exporter's conventions."""
    scen_list = list(scenarios)
    T = system.horizon
    q = system.max_individuals
    n = system.n
    S = len(scen_list)
    dev = 0
    for scenario in scen_list:
        for i in range(n):
            for r in range(2, q + 1):
                life = scenario.lifetimes[i][r - 1]
                dev += (T + 1) if life <= T else T
    return {
        "x": n,
        "z": T * S,
        "xr": n * q * T * S,
        "w": n * q * T * S,
        "Y": n * q * S,
        "u": dev,
        "v": dev,
    }


def export_def_lp(system: SystemSpec, scenarios, path: str | Path) -> dict:
    """Write the extensive form as an LP file plus a JSON manifest sidecar.

    Returns the manifest dictionary.
    """
    builder = build_def_model(system, scenarios)
    path = Path(path)
    lines = ["\\ two-stage replacement scheduling, extensive form", "Minimize"]
    terms = sorted(builder.objective.items())
    chunk = [" obj:"]
    for name, coef in terms:
        sign = "+" if coef >= 0 else "-"
        chunk.append(f" {sign} {_fmt(abs(coef))} {name}")
        if len(chunk) >= 8:
            lines.append("".join(chunk))
            chunk = ["   "]
    if len(chunk) > 1 or not terms:
        lines.append("".join(chunk))
    lines.append("Subject To")
    for name, cterms, sense, rhs in builder.constraints:
        parts = [f" {name}:"]
        for var, coef in sorted(cterms.items()):
            sign = "+" if coef >= 0 else "-"
            mag = abs(coef)
            if abs(mag - 1.0) < 1e-15:
                parts.append(f" {sign} {var}")
            else:
                parts.append(f" {sign} {_fmt(mag)} {var}")
        parts.append(f" {sense} {_fmt(rhs)}")
        lines.append("".join(parts))
    lines.append("Binaries")
    binaries = builder.binaries
    for pos in range(0, len(binaries), 8):
        lines.append(" " + " ".join(binaries[pos:pos + 8]))
    lines.append("End")
    path.write_text("\n".join(lines) + "\n")

    counts = {
        kind: sum(1 for v in binaries if v.startswith(prefix))
        for kind, prefix in (
            ("x", "x_"), ("z", "z_"), ("xr", "xr_"),
            ("w", "w_"), ("Y", "Y_"), ("u", "u_"), ("v", "v_"),
        )
    }
    manifest = {
        "schema": SCHEMA,
        "variables": counts,
        "variables_formula": variable_count_formula(system, scenarios),
        "variable_total": len(binaries),
        "constraints": dict(sorted(builder.families.items())),
        "constraint_total": len(builder.constraints),
        "conventions": {
            "individuals_per_component": system.max_individuals,
            "extended_horizon": "horizon plus each individual's own lifetime",
            "eliminated": "signed step differences substituted into the deviation identities",
            "corrections": [
                "first-individual indicator multiplied through its replaced-by-horizon variable",
                "successor-of-last-replacement indicator cancelled by consecutive replaced-by-horizon terms",
            ],
        },
    }
    manifest_path = path.with_suffix(path.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# Reader.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpConstraint:
    name: str
    terms: dict[str, float]
    sense: str
    rhs: float


@dataclass
class LpModel:
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[LpConstraint] = field(default_factory=list)
    binaries: set[str] = field(default_factory=set)

    @property
    def variables(self) -> set[str]:
        out = set(self.objective)
        for c in self.constraints:
            out.update(c.terms)
        out.update(self.binaries)
        return out


_TOKEN = re.compile(
    r"[+-]|[A-Za-z_][A-Za-z0-9_]*|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?"
)


def _parse_terms(text: str) -> dict[str, float]:
    terms: dict[str, float] = {}
    sign = 1.0
    number: float | None = None
    for token in _TOKEN.findall(text):
        if token == "+":
            sign, number = 1.0, None
        elif token == "-":
            sign, number = -1.0, None
        elif token[0].isdigit():
            number = float(token)
        else:
            coef = sign * (number if number is not None else 1.0)
            terms[token] = terms.get(token, 0.0) + coef
            sign, number = 1.0, None
    return terms


def read_lp(path: str | Path) -> LpModel:
    """Parse the subset of the LP format this package writes."""
    model = LpModel()
    section = None
    obj_text: list[str] = []
    cons_text: list[str] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("\\")[0].rstrip()
        if not line.strip():
            continue
        lowered = line.strip().lower()
        if lowered in ("minimize", "maximize"):
            section = "objective"
            continue
        if lowered == "subject to":
            section = "constraints"
            continue
        if lowered == "bounds":
            section = "bounds"
            continue
        if lowered in ("binaries", "binary"):
            section = "binaries"
            continue
        if lowered == "end":
            break
        if section == "objective":
            obj_text.append(line)
        elif section == "constraints":
            cons_text.append(line)
        elif section == "binaries":
            model.binaries.update(line.split())

    whole_obj = " ".join(obj_text)
    if ":" in whole_obj:
        whole_obj = whole_obj.split(":", 1)[1]
    model.objective = _parse_terms(whole_obj)

    merged: list[str] = []
    for line in cons_text:
        if re.match(r"\s*[A-Za-z_][A-Za-z0-9_]*\s*:", line):
            merged.append(line)
        else:
            merged[-1] += " " + line
    for line in merged:
        name, body = line.split(":", 1)
        m = re.search(r"(<=|>=|=)\s*([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*$", body)
        if not m:
            raise ValueError(f"cannot parse constraint: {line!r}")
        sense, rhs = m.group(1), float(m.group(2))
        terms = _parse_terms(body[: m.start()])
        model.constraints.append(
            LpConstraint(name=name.strip(), terms=terms, sense=sense, rhs=rhs)
        )
    return model


# ---------------------------------------------------------------------------
# Desk-scale brute-force optimum of an exported model.
# ---------------------------------------------------------------------------

_XR = re.compile(r"xr_c(\d+)_r(\d+)_t(\d+)_s(\d+)$")


def _dims(model: LpModel):
    n = q = T = S = 0
    for var in model.variables:
        m = _XR.match(var)
        if m:
            i, r, t, s = map(int, m.groups())
            n = max(n, i + 1)
            q = max(q, r)
            T = max(T, t)
            S = max(S, s + 1)
    if not (n and q and T and S):
        raise ValueError("model does not follow the exporter's naming")
    return n, q, T, S


def _threshold_vectors(T: int, q: int):
    """All strictly increasing replacement-time prefixes padded with None."""
    out = []
    for k in range(0, min(q, T) + 1):
        for combo in itertools.combinations(range(1, T + 1), k):
            out.append(tuple(combo) + (None,) * (q - k))
    return out


def _chain_values(i: int, s: int, vec, q: int, T: int) -> dict[str, float]:
    vals: dict[str, float] = {}
    for r in range(1, q + 1):
        tau = vec[r - 1]
        for t in range(1, T + 1):
            vals[f"xr_c{i}_r{r}_t{t}_s{s}"] = (
                1.0 if tau is not None and t >= tau else 0.0
            )
            vals[f"w_c{i}_r{r}_t{t}_s{s}"] = (
                1.0 if tau is not None and t == tau else 0.0
            )
    return vals


def assignment_from_thresholds(model: LpModel, thresholds: dict) -> dict | None:
    """Complete a variable assignment from replaced-at times.

    ``thresholds[(i, s)]`` maps every (component, scenario) pair to its
    per-individual replacement-time vector.  Derivations follow the
    model's own equalities; setup indicators take their minimal feasible
    value.  Returns None when an equality forces a non-binary value.
    """
    n, q, T, S = _dims(model)
    assign: dict[str, float] = {}
    for (i, s), vec in thresholds.items():
        assign.update(_chain_values(i, s, vec, q, T))
    for i in range(n):
        assign[f"x_c{i}"] = assign[f"xr_c{i}_r1_t1_s0"]

    # Deviation pairs and indicators from their defining equalities.
    for cons in model.constraints:
        if cons.name.startswith("dev_"):
            u = next(v for v in cons.terms if v.startswith("u_"))
            vv = next(v for v in cons.terms if v.startswith("v_"))
            known = sum(
                coef * assign[var]
                for var, coef in cons.terms.items()
                if var not in (u, vv)
            )
            # u - v = -known  (terms: +u -v +known = rhs 0)
            diff = cons.rhs - known
            if abs(diff - 1.0) < 1e-9:
                assign[u], assign[vv] = 1.0, 0.0
            elif abs(diff + 1.0) < 1e-9:
                assign[u], assign[vv] = 0.0, 1.0
            elif abs(diff) < 1e-9:
                assign[u], assign[vv] = 0.0, 0.0
            else:
                return None
    for cons in model.constraints:
        if cons.name.startswith(("ydef1_", "ydef_")):
            y = next(v for v in cons.terms if v.startswith("Y_"))
            coef_y = cons.terms[y]
            known = sum(
                coef * assign[var]
                for var, coef in cons.terms.items()
                if var != y
            )
            val = (cons.rhs - known) / coef_y
            if abs(val) > 1e-9 and abs(val - 1.0) > 1e-9:
                return None
            assign[y] = round(val)

    # Minimal setup indicators: z covers the largest replacement step that
    # any linkage constraint charges against it.
    by_z: dict[str, list[LpConstraint]] = {}
    for cons in model.constraints:
        if cons.name.startswith(("setup_", "setup1_")):
            z = next(v for v in cons.terms if v.startswith("z_"))
            by_z.setdefault(z, []).append(cons)
    for s in range(S):
        for t in range(1, T + 1):
            z = f"z_t{t}_s{s}"
            needed = 0.0
            for cons in by_z.get(z, ()):
                other = sum(
                    coef * assign[var]
                    for var, coef in cons.terms.items()
                    if var != z
                )
                needed = max(needed, other)  # z carries coefficient -1
            assign[z] = 1.0 if needed > 0.5 else 0.0
    return assign


def check_assignment(model: LpModel, assign: dict) -> list[str]:
    """Names of all constraints the assignment violates."""
    bad = []
    for cons in model.constraints:
        lhs = sum(coef * assign.get(var, 0.0) for var, coef in cons.terms.items())
        ok = (
            lhs <= cons.rhs + 1e-6
            if cons.sense == "<="
            else lhs >= cons.rhs - 1e-6
            if cons.sense == ">="
            else abs(lhs - cons.rhs) <= 1e-6
        )
        if not ok:
            bad.append(cons.name)
    return bad


def objective_value(model: LpModel, assign: dict) -> float:
    return sum(coef * assign.get(var, 0.0) for var, coef in model.objective.items())


def enumerate_binary_optimum(model: LpModel) -> tuple[float, dict | None]:
    """Optimum of the exported model by enumerating replacement structures.

    Walks every combination of strictly increasing per-individual
    replacement-time vectors (the only assignments the chain constraints
    admit), derives all dependent variables, verifies every constraint
    generically, and minimizes the parsed objective.
    """
    n, q, T, S = _dims(model)
    vectors = _threshold_vectors(T, q)

    # Prune per-component-scenario vectors that already violate the
    # constraints mentioning only that chain's variables.
    chain_ok: dict[tuple[int, int], list] = {}
    for i in range(n):
        for s in range(S):
            keep = []
            for vec in vectors:
                partial = _chain_values(i, s, vec, q, T)
                ok = True
                for cons in model.constraints:
                    if any(v not in partial for v in cons.terms):
                        continue
                    lhs = sum(c * partial[v] for v, c in cons.terms.items())
                    if cons.sense == "<=" and lhs > cons.rhs + 1e-6:
                        ok = False
                    elif cons.sense == ">=" and lhs < cons.rhs - 1e-6:
                        ok = False
                    elif cons.sense == "=" and abs(lhs - cons.rhs) > 1e-6:
                        ok = False
                    if not ok:
                        break
                if ok:
                    keep.append(vec)
            chain_ok[(i, s)] = keep

    keys = [(i, s) for i in range(n) for s in range(S)]
    best_val = math.inf
    best_assign = None
    for combo in itertools.product(*(chain_ok[k] for k in keys)):
        thresholds = dict(zip(keys, combo))
        # Shared first stage must agree across scenarios.
        consistent = True
        for i in range(n):
            flags = {
                (thresholds[(i, s)][0] == 1) for s in range(S)
            }
            if len(flags) > 1:
                consistent = False
                break
        if not consistent:
            continue
        assign = assignment_from_thresholds(model, thresholds)
        if assign is None:
            continue
        if check_assignment(model, assign):
            continue
        val = objective_value(model, assign)
        if val < best_val - 1e-9:
            best_val = val
            best_assign = assign
    return best_val, best_assign


def thresholds_from_schedules(system: SystemSpec, schedules: list[Schedule]) -> dict:
    """Replacement-time vectors of known schedules, keyed (component,
    scenario), padded to the exporter's individual count."""
    q = system.max_individuals
    out = {}
    for s, schedule in enumerate(schedules):
        for i in range(system.n):
            times = schedule.times[i]
            out[(i, s)] = tuple(times) + (None,) * (q - len(times))
    return out
