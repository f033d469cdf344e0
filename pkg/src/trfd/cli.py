"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime/evaluator failure.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .adapter import ExternalEvaluator, ProtocolError, serve_mock
from .bench import (convergence_csv, load_plan, make_problem, render_table,
                    parse_cells_csv, resolve_design, run_sweep, write_sweep_outputs,
                    SweepCell, SweepTable)
from .core import ConfigError, EvalCache, EvaluationError
from .perturb import fd_curve_csv, fd_error_curve, parse_scheme
from .problems import NoiseSpec
from .trustloop import OptimizationAborted, TrustConfig, optimize, trace_to_csv


@click.group()
def cli():
    """Trust-region optimizer with forward-FD surrogates."""


def _build_evaluator(problem: str, noise: NoiseSpec):
    if problem.startswith("cmd:"):
        from .core import default_sweep
        sweep = default_sweep()
        ev = ExternalEvaluator(problem[4:], sweep, dim=6)
        from .problems import FIXTURE_BOUNDS
        return ev, FIXTURE_BOUNDS
    return make_problem(problem, noise)


def _parse_design(text: str, bounds):
    if "," in text:
        return resolve_design([float(v) for v in text.split(",")], bounds)
    return resolve_design(text, bounds)


@cli.command("optimize")
@click.option("--problem", default="antenna",
              help='Built-in problem name or cmd:"<program>" for an external evaluator.')
@click.option("--evaluator", default=None,
              help='Alias for --problem cmd:"...": external evaluator command.')
@click.option("--design", default="x1", help="Fixture name (x1..x10) or comma list.")
@click.option("--scheme", default="fraction:0.03",
              help="fraction:F | sqrteps:E | custom:f1,...,fD")
@click.option("--normalize-box", is_flag=True,
              help="Measure the trust radius in unit-box coordinates.")
@click.option("--seed", default=0, type=int, help="Noise seed for the antenna problem.")
@click.option("--noise-amplitude", default=0.5, type=float)
@click.option("--noise-cell", default=0.001, type=float)
@click.option("--delta0", default=1.0, type=float)
@click.option("--term-eps", default=1e-2, type=float)
@click.option("--max-evals", default=None, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def optimize_cmd(problem, evaluator, design, scheme, normalize_box, seed,
                 noise_amplitude, noise_cell, delta0, term_eps, max_evals, out):
    """Run one trust-region optimization and write its trace CSVs."""
    if evaluator is not None:
        problem = evaluator if evaluator.startswith("cmd:") else f"cmd:{evaluator}"
    noise = NoiseSpec(amplitude_db=noise_amplitude, cell_fraction=noise_cell,
                      seed=seed)
    ev, bounds = _build_evaluator(problem, noise)
    label, x0 = _parse_design(design, bounds)
    cfg = TrustConfig(scheme=parse_scheme(scheme),
                      norm="box" if normalize_box else "raw",
                      delta0=delta0, term_eps=term_eps, max_evals=max_evals)
    try:
        result = optimize(ev, x0, bounds, cfg, cache=EvalCache())
    finally:
        if hasattr(ev, "close"):
            ev.close()
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trace.csv").write_text(trace_to_csv(result), encoding="utf-8")
    (out_dir / "convergence.csv").write_text(convergence_csv(result), encoding="utf-8")
    (out_dir / "result.json").write_text(json.dumps({
        "design": label,
        "best_design": [float(v) for v in result.best_design],
        "best_objective_db": result.best_objective,
        "evaluations": result.evaluations,
        "termination": result.termination,
    }, indent=2) + "\n", encoding="utf-8")
    click.echo(f"U(x*) = {result.best_objective:.2f} dB after "
               f"{result.evaluations} evaluations ({result.termination})")


@cli.command("sweep")
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--jobs", default=None, type=int, help="Parallel cells (default: plan value).")
def sweep_cmd(plan_path, out, jobs):
    """Run a designs-by-schemes benchmark sweep from a JSON plan."""
    plan = load_plan(plan_path)
    if jobs is not None:
        plan.jobs = jobs
    table = run_sweep(plan)
    write_sweep_outputs(table, out)
    click.echo(render_table(table, "csv"), nl=False)


_FUNCTIONS = {
    "sin": (np.sin, np.cos),
    "cos": (np.cos, lambda t: -np.sin(t)),
    "exp": (np.exp, np.exp),
}


def _parse_steps(text: str) -> np.ndarray:
    if text.startswith("log:"):
        try:
            lo, hi, n = text[4:].split(":")
            return np.logspace(math.log10(float(lo)), math.log10(float(hi)), int(n))
        except ValueError as exc:
            raise ConfigError(f"bad steps spec {text!r}: {exc}") from exc
    return np.array([float(v) for v in text.split(",")])


@cli.command("fd-curve")
@click.option("--function", default="sin", type=click.Choice(sorted(_FUNCTIONS)))
@click.option("--point", default=math.pi / 4, type=float)
@click.option("--steps", default="log:1e-12:1e-1:60",
              help="log:LO:HI:N or a comma list.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def fd_curve_cmd(function, point, steps, out):
    """Forward-FD residual versus step size for a reference function."""
    f, df = _FUNCTIONS[function]
    rows = fd_error_curve(f, df, point, _parse_steps(steps))
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(fd_curve_csv(rows), encoding="utf-8")
    click.echo(f"wrote {len(rows)} rows to {out}")


@cli.command("report")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--format", "fmt", default="markdown",
              type=click.Choice(["markdown", "csv"]))
def report_cmd(in_dir, fmt):
    """Re-render the summary table from a sweep output directory."""
    cells_path = Path(in_dir) / "cells.csv"
    if not cells_path.exists():
        raise ConfigError(f"no cells.csv in {in_dir}")
    rows = parse_cells_csv(cells_path.read_text(encoding="utf-8"))
    designs, schemes, cells = [], [], {}
    for r in rows:
        if r["design"] not in designs:
            designs.append(r["design"])
        if r["scheme"] not in schemes:
            schemes.append(r["scheme"])
        cells[(r["design"], r["scheme"])] = SweepCell(
            design=r["design"], scheme=r["scheme"], u_star=r["u_star"],
            evals=r["evals"], termination=r["termination"], error=r["error"])
    click.echo(render_table(SweepTable(designs, schemes, cells), fmt), nl=False)


@cli.command("serve-mock")
@click.option("--problem", default="quadratic")
@click.option("--seed", default=0, type=int)
@click.option("--noise-amplitude", default=0.0, type=float)
def serve_mock_cmd(problem, seed, noise_amplitude):
    """Serve a built-in problem over the line-delimited JSON protocol."""
    noise = NoiseSpec(amplitude_db=noise_amplitude, seed=seed)
    ev, _ = make_problem(problem, noise)
    serve_mock(ev)


def entry(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 1
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (EvaluationError, ProtocolError, OptimizationAborted, OSError) as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(entry())
