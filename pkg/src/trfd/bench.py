"""Benchmark harness: designs-by-schemes sweep, per-scheme statistics,
table rendering, and CSV plot-data export."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Bounds, ConfigError, EvalCache, Evaluator, as_design
from .perturb import PerturbationScheme, parse_scheme
from .problems import (FIXTURE_BOUNDS, FIXTURE_DESIGNS, AntennaEvaluator,
                       NoiseSpec, SyntheticAntennaSpec, quadratic_bowl)
from .trustloop import (OptimizationAborted, RunResult, TrustConfig, optimize,
                        trace_to_csv)


@dataclass
class SweepPlan:
    problem: str = "antenna"
    designs: list = field(default_factory=lambda: list(FIXTURE_DESIGNS))
    schemes: list[str] = field(default_factory=lambda: ["fraction:0.03"])
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    config: dict = field(default_factory=dict)
    jobs: int = 1
    overhead_evals: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.designs or not self.schemes:
            raise ConfigError("a sweep needs at least one design and one scheme")


def load_plan(path) -> SweepPlan:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    noise = NoiseSpec(**raw.get("noise", {}))
    return SweepPlan(problem=raw.get("problem", "antenna"),
                     designs=raw.get("designs", list(FIXTURE_DESIGNS)),
                     schemes=raw.get("schemes", ["fraction:0.03"]),
                     noise=noise,
                     config=raw.get("config", {}),
                     jobs=int(raw.get("jobs", 1)),
                     overhead_evals=raw.get("overhead_evals", {}))


def make_problem(name: str, noise: NoiseSpec) -> tuple[Evaluator, Bounds]:
    """Instantiate a built-in problem by name."""
    if name == "antenna":
        ev = AntennaEvaluator(SyntheticAntennaSpec(noise=noise))
        return ev, ev.bounds
    if name == "quadratic":
        center = 0.5 * (FIXTURE_BOUNDS.lower + FIXTURE_BOUNDS.upper)
        return quadratic_bowl(center), FIXTURE_BOUNDS
    raise ConfigError(f"unknown problem {name!r} (use antenna|quadratic)")


def resolve_design(sel, bounds: Bounds) -> tuple[str, np.ndarray]:
    """A design selector is a fixture name or an explicit vector."""
    if isinstance(sel, str):
        if sel not in FIXTURE_DESIGNS:
            raise ConfigError(f"unknown fixture design {sel!r}")
        return sel, FIXTURE_DESIGNS[sel].copy()
    x = as_design(sel)
    if x.size != bounds.dim:
        raise ConfigError("explicit design has the wrong dimension")
    return "custom", x


@dataclass
class SweepCell:
    design: str
    scheme: str
    u_star: float | None
    evals: int
    termination: str
    error: str | None = None
    result: RunResult | None = None
    final_response: np.ndarray | None = None


@dataclass
class SweepTable:
    designs: list[str]
    schemes: list[str]
    cells: dict  # (design, scheme) -> SweepCell
    overhead_evals: dict = field(default_factory=dict)
    sweep_points: np.ndarray | None = None

    def column(self, scheme: str) -> list[SweepCell]:
        return [self.cells[(d, scheme)] for d in self.designs]

    def aggregates(self, scheme: str):
        """(mean_u, std_u, mean_evals, std_evals, n_failed) for one scheme."""
        ok = [c for c in self.column(scheme) if c.error is None]
        failed = len(self.column(scheme)) - len(ok)
        if not ok:
            return None, None, None, None, failed
        u = np.array([c.u_star for c in ok])
        e = np.array([c.evals for c in ok], dtype=np.float64)
        std_u = float(np.std(u, ddof=1)) if len(ok) > 1 else None
        std_e = float(np.std(e, ddof=1)) if len(ok) > 1 else None
        return float(np.mean(u)), std_u, float(np.mean(e)), std_e, failed


def column_stats(values) -> tuple[float, float | None]:
    """Mean and sample (n-1) standard deviation of a result column."""
    v = np.asarray(values, dtype=np.float64)
    return float(np.mean(v)), (float(np.std(v, ddof=1)) if v.size > 1 else None)


def _scheme_config(plan: SweepPlan, scheme: PerturbationScheme) -> TrustConfig:
    return TrustConfig(scheme=scheme, **plan.config)


def _run_cell(plan: SweepPlan, design_sel, scheme_text: str) -> SweepCell:
    ev, bounds = make_problem(plan.problem, plan.noise)
    label, x0 = resolve_design(design_sel, bounds)
    scheme = parse_scheme(scheme_text)
    cfg = _scheme_config(plan, scheme)
    try:
        res = optimize(ev, x0, bounds, cfg, cache=EvalCache())
    except OptimizationAborted as exc:
        res = exc.partial
        return SweepCell(design=label, scheme=scheme_text, u_star=None,
                         evals=res.evaluations, termination=res.termination,
                         error=str(exc), result=res)
    return SweepCell(design=label, scheme=scheme_text, u_star=res.best_objective,
                     evals=res.evaluations, termination=res.termination,
                     result=res, final_response=ev.evaluate(res.best_design))


def run_sweep(plan: SweepPlan) -> SweepTable:
    """One optimize run per (design, scheme) cell, each with its own cache.

    Deterministic given the plan; parallel and sequential execution produce
    identical tables.
    """
    labels = [sel if isinstance(sel, str) else f"custom{i}"
              for i, sel in enumerate(plan.designs)]
    jobs = [(label, sel, scheme) for label, sel in zip(labels, plan.designs)
            for scheme in plan.schemes]
    if plan.jobs > 1:
        with ThreadPoolExecutor(max_workers=plan.jobs) as pool:
            results = list(pool.map(lambda j: _run_cell(plan, j[1], j[2]), jobs))
    else:
        results = [_run_cell(plan, sel, scheme) for _, sel, scheme in jobs]
    cells = {}
    for (label, _, scheme), cell in zip(jobs, results):
        cell.design = label
        cells[(label, scheme)] = cell
    points = make_problem(plan.problem, plan.noise)[0].sweep.points
    return SweepTable(designs=labels, schemes=list(plan.schemes), cells=cells,
                      overhead_evals=dict(plan.overhead_evals),
                      sweep_points=points)


def _fmt_db(v) -> str:
    return "-" if v is None else f"{v:.1f}"


def _fmt_count(v) -> str:
    return "-" if v is None else f"{round(v)}"


def _fmt_std(v) -> str:
    return "-" if v is None else f"{v:.2f}"


def render_table(t: SweepTable, fmt: str = "csv") -> str:
    """Benchmark summary: rows per design, (U, evals) pair per scheme,
    footer rows E^s (mean) and sigma^s (n-1 standard deviation)."""
    header = ["design"]
    for s in t.schemes:
        header += [f"U_{s}", f"evals_{s}"]
    rows = [header]
    for d in t.designs:
        row = [d]
        for s in t.schemes:
            c = t.cells[(d, s)]
            row += ([_fmt_db(c.u_star), str(c.evals)] if c.error is None
                    else ["-", "-"])
        rows.append(row)
    mean_row, std_row = ["E^s"], ["σ^s"]
    for s in t.schemes:
        mean_u, std_u, mean_e, std_e, _ = t.aggregates(s)
        mean_row += [_fmt_db(mean_u), _fmt_count(mean_e)]
        std_row += [_fmt_std(std_u), _fmt_count(std_e)]
    rows += [mean_row, std_row]
    if fmt == "csv":
        return "\n".join(",".join(r) for r in rows) + "\n"
    if fmt == "markdown":
        out = ["| " + " | ".join(rows[0]) + " |",
               "|" + "---|" * len(rows[0])]
        out += ["| " + " | ".join(r) + " |" for r in rows[1:]]
        return "\n".join(out) + "\n"
    raise ConfigError(f"unknown table format {fmt!r} (use markdown|csv)")


def cells_csv(t: SweepTable) -> str:
    """Full-precision per-cell dump; aggregates are recomputable from it."""
    lines = ["design,scheme,u_star,evals,termination,error"]
    for d in t.designs:
        for s in t.schemes:
            c = t.cells[(d, s)]
            u = "" if c.u_star is None else repr(c.u_star)
            err = "" if c.error is None else c.error.replace(",", ";").replace("\n", " ")
            lines.append(f"{d},{s},{u},{c.evals},{c.termination},{err}")
    return "\n".join(lines) + "\n"


def parse_cells_csv(text: str) -> list[dict]:
    rows = []
    lines = text.strip().splitlines()
    for line in lines[1:]:
        d, s, u, e, term, err = line.split(",", 5)
        rows.append({"design": d, "scheme": s,
                     "u_star": float(u) if u else None,
                     "evals": int(e), "termination": term,
                     "error": err or None})
    return rows


def convergence_csv(result: RunResult) -> str:
    """Iteration history of the accepted objective and the radius."""
    lines = ["iter,objective_db,delta"]
    best = math.inf
    for row in result.trace:
        if row.accepted:
            best = row.objective_db
        lines.append(f"{row.iteration},{best!r},{row.delta!r}")
    return "\n".join(lines) + "\n"


def overlay_csv(sweep_points: np.ndarray, curves: dict) -> str:
    """Final-response overlay: frequency column plus one dB column per run."""
    labels = list(curves)
    lines = ["freq," + ",".join(f"run_{lab}_db" for lab in labels)]
    for j, f in enumerate(sweep_points):
        vals = ",".join(repr(float(curves[lab][j])) for lab in labels)
        lines.append(f"{float(f)!r},{vals}")
    return "\n".join(lines) + "\n"


def write_sweep_outputs(t: SweepTable, out_dir) -> list[Path]:
    """Write cells.csv, table.csv, table.md and per-cell trace CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    put("cells.csv", cells_csv(t))
    put("table.csv", render_table(t, "csv"))
    put("table.md", render_table(t, "markdown"))
    for d in t.designs:
        curves = {}
        for s in t.schemes:
            c = t.cells[(d, s)]
            if c.result is not None:
                slug = s.replace(":", "_").replace(",", "-").replace(".", "p")
                put(f"trace_{d}_{slug}.csv", trace_to_csv(c.result))
                put(f"convergence_{d}_{slug}.csv", convergence_csv(c.result))
            if c.final_response is not None:
                curves[parse_scheme(s).label()] = c.final_response
        if curves and t.sweep_points is not None:
            put(f"final_response_{d}.csv", overlay_csv(t.sweep_points, curves))
    return written
