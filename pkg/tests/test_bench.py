import json

import numpy as np
import pytest

from trfd.bench import (SweepCell, SweepPlan, SweepTable, cells_csv,
                        column_stats, convergence_csv, load_plan, overlay_csv,
                        parse_cells_csv, render_table, run_sweep,
                        write_sweep_outputs)
from trfd.core import Bounds, ConfigError
from trfd.perturb import FractionOfInitial
from trfd.problems import NoiseSpec, quadratic_bowl
from trfd.trustloop import TrustConfig, optimize

# First result column of the reference benchmark (0.5% steps)
REFERENCE_COLUMN = [-16.9, -27.2, -29.7, -30.7, -16.3, -27.1, -20.2, -27.0,
                    -26.6, -16.1]


def test_reference_column_statistics():
    mean, std = column_stats(REFERENCE_COLUMN)
    assert mean == pytest.approx(-23.8, abs=0.05)
    assert std == pytest.approx(5.76, abs=0.005)


def test_single_value_std_is_undefined():
    mean, std = column_stats([-10.0])
    assert mean == -10.0 and std is None


def _toy_table():
    cells = {}
    for i, d in enumerate(["x1", "x2"]):
        for j, s in enumerate(["fraction:0.01", "fraction:0.03"]):
            cells[(d, s)] = SweepCell(design=d, scheme=s,
                                      u_star=-10.0 - i - 2 * j, evals=40 + i + j,
                                      termination="radius")
    return SweepTable(designs=["x1", "x2"], schemes=["fraction:0.01", "fraction:0.03"],
                      cells=cells)


def test_render_reference_footer():
    cells = {("x%d" % (i + 1), "s"): SweepCell(design="x%d" % (i + 1), scheme="s",
                                               u_star=u, evals=50,
                                               termination="radius")
             for i, u in enumerate(REFERENCE_COLUMN)}
    t = SweepTable(designs=[f"x{i+1}" for i in range(10)], schemes=["s"],
                   cells=cells)
    lines = render_table(t, "csv").splitlines()
    assert lines[-2].startswith("E^s,-23.8")
    assert lines[-1].startswith("σ^s,5.76")


def test_render_single_cell_sigma_dash():
    t = SweepTable(designs=["x1"], schemes=["s"],
                   cells={("x1", "s"): SweepCell("x1", "s", -12.34, 7, "radius")})
    lines = render_table(t, "csv").splitlines()
    assert lines[1] == "x1,-12.3,7"
    assert lines[-1] == "σ^s,-,-"


def test_failed_cell_excluded_from_aggregates():
    t = _toy_table()
    t.cells[("x2", "fraction:0.01")].error = "boom"
    mean, std, _, _, failed = t.aggregates("fraction:0.01")
    assert failed == 1 and mean == -10.0 and std is None
    assert "-" in render_table(t, "csv")


def test_markdown_round_trips_csv_values():
    t = _toy_table()
    csv_rows = [r.split(",") for r in render_table(t, "csv").splitlines()]
    md_rows = [[c.strip() for c in r.strip("|").split("|")]
               for r in render_table(t, "markdown").splitlines()
               if not set(r) <= {"|", "-", " "}]
    assert csv_rows == md_rows


def test_render_unknown_format():
    with pytest.raises(ConfigError):
        render_table(_toy_table(), "html")


def test_cells_csv_round_trip_and_aggregate_consistency():
    plan = SweepPlan(problem="quadratic", designs=[[10.0, 12.0, 6.0, 1.5, 8.0, 5.0]],
                     schemes=["fraction:0.01", "fraction:0.02"],
                     noise=NoiseSpec(amplitude_db=0.0))
    t = run_sweep(plan)
    rows = parse_cells_csv(cells_csv(t))
    assert len(rows) == 2
    for s in t.schemes:
        mean, std, _, _, _ = t.aggregates(s)
        vals = [r["u_star"] for r in rows if r["scheme"] == s]
        m2, s2 = column_stats(vals)
        assert m2 == pytest.approx(mean, abs=1e-9)
        assert (std is None) == (s2 is None)


def test_sweep_cell_count_and_determinism():
    plan = SweepPlan(problem="antenna", designs=["x1", "x5"],
                     schemes=["fraction:0.01", "fraction:0.03"],
                     noise=NoiseSpec(amplitude_db=0.5, seed=3))
    t1 = run_sweep(plan)
    t2 = run_sweep(plan)
    assert len(t1.cells) == 4
    assert cells_csv(t1) == cells_csv(t2)
    assert render_table(t1, "csv") == render_table(t2, "csv")


def test_full_benchmark_protocol_is_80_cells():
    # ten designs, eight FD setups: six fractions, sqrt machine eps, custom
    schemes = [f"fraction:{f}" for f in (0.005, 0.01, 0.015, 0.02, 0.025, 0.03)]
    schemes += ["sqrteps:1e-7", "custom:0.003,0.003,0.003,0.007,0.008,0.006"]
    plan = SweepPlan(problem="antenna", designs=[f"x{i}" for i in range(1, 11)],
                     schemes=schemes, noise=NoiseSpec(amplitude_db=0.5, seed=1),
                     config={"max_evals": 30}, jobs=4)
    t = run_sweep(plan)
    assert len(t.cells) == 80
    rendered = render_table(t, "csv")
    assert len(rendered.splitlines()) == 1 + 10 + 2


def test_parallel_equals_sequential():
    base = dict(problem="antenna", designs=["x1", "x2", "x3"],
                schemes=["fraction:0.01", "fraction:0.03"],
                noise=NoiseSpec(amplitude_db=0.5, seed=9))
    seq = run_sweep(SweepPlan(jobs=1, **base))
    par = run_sweep(SweepPlan(jobs=4, **base))
    assert cells_csv(seq) == cells_csv(par)


def test_load_plan(tmp_path):
    p = tmp_path / "plan.json"
    p.write_text(json.dumps({
        "problem": "antenna", "designs": ["x1"], "schemes": ["fraction:0.03"],
        "noise": {"amplitude_db": 0.25, "seed": 5}, "jobs": 2,
        "overhead_evals": {"custom:0.003": 10},
    }))
    plan = load_plan(p)
    assert plan.noise.amplitude_db == 0.25 and plan.jobs == 2
    assert plan.overhead_evals == {"custom:0.003": 10}
    t = run_sweep(plan)
    # manual-tuning overhead stays a separate field, never added to counts
    assert t.overhead_evals == {"custom:0.003": 10}
    raw = t.cells[("x1", "fraction:0.03")].evals
    assert f",{raw}," in cells_csv(t).splitlines()[1] + ","


def test_write_sweep_outputs(tmp_path):
    plan = SweepPlan(problem="antenna", designs=["x1"],
                     schemes=["fraction:0.01", "fraction:0.03"],
                     noise=NoiseSpec(amplitude_db=0.0))
    files = write_sweep_outputs(run_sweep(plan), tmp_path / "out")
    names = {f.name for f in files}
    assert {"cells.csv", "table.csv", "table.md", "final_response_x1.csv"} <= names
    assert any(n.startswith("trace_x1") for n in names)
    assert any(n.startswith("convergence_x1") for n in names)
    overlay = (tmp_path / "out" / "final_response_x1.csv").read_text()
    assert overlay.splitlines()[0] == "freq,run_1pct_db,run_3pct_db"
    assert len(overlay.splitlines()) == 202


def test_convergence_csv_headers_and_rows():
    ev = quadratic_bowl([1.0, 2.0])
    res = optimize(ev, np.array([3.0, 3.0]), Bounds([0.1, 0.1], [5.0, 5.0]),
                   TrustConfig(scheme=FractionOfInitial(0.02)))
    lines = convergence_csv(res).splitlines()
    assert lines[0] == "iter,objective_db,delta"
    assert len(lines) == len(res.trace) + 1


def test_overlay_csv_layout():
    text = overlay_csv(np.array([5.0, 5.5]),
                       {"1pct": [-10.0, -12.0], "3pct": [-14.0, -16.0]})
    lines = text.splitlines()
    assert lines[0] == "freq,run_1pct_db,run_3pct_db"
    assert lines[1] == "5.0,-10.0,-14.0"


def test_empty_trace_emits_header_only():
    class EmptyResult:
        trace = []

    assert convergence_csv(EmptyResult()) == "iter,objective_db,delta\n"
