"""The trust-region iteration: Jacobian refresh, subproblem solve, gain
ratio, accept/reject, radius update, termination, and trace recording."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (Bounds, ConfigError, EvalCache, EvaluationError, Evaluator,
                   as_design, objective_minmax)
from .perturb import FractionOfInitial, PerturbationScheme, fd_jacobian, resolve_steps
from .surrogate import (NORM_RAW, SubproblemSpec, model_objective,
                        solve_tr_subproblem, step_norm)

TERM_RADIUS = "radius"
TERM_STEP = "step"
TERM_BUDGET = "budget"
TERM_ERROR = "error"

ACCEPT = "accept"
REJECT = "reject"


@dataclass
class TrustConfig:
    """Trust-region settings; defaults follow the standard tuning
    (alpha1 = 0.25, alpha2 = 2.5, rho band (0.05, 0.9), delta0 = 1,
    termination tolerance 1e-2)."""

    alpha1: float = 0.25
    alpha2: float = 2.5
    rho_low: float = 0.05
    rho_high: float = 0.9
    delta0: float = 1.0
    term_eps: float = 1e-2
    max_evals: int | None = None  # None -> 200 * (D + 1)
    norm: str = NORM_RAW
    scheme: PerturbationScheme = field(default_factory=lambda: FractionOfInitial(0.03))

    def __post_init__(self):
        if not (0 < self.alpha1 < 1 < self.alpha2):
            raise ConfigError("need 0 < alpha1 < 1 < alpha2")
        if not (0 < self.rho_low < self.rho_high < 1):
            raise ConfigError("need 0 < rho_low < rho_high < 1")
        if not (self.delta0 > 0 and self.term_eps > 0):
            raise ConfigError("delta0 and term_eps must be positive")

    def budget(self, dim: int) -> int:
        return self.max_evals if self.max_evals is not None else 200 * (dim + 1)


@dataclass
class TraceRow:
    """One candidate trial."""

    iteration: int
    candidate: np.ndarray
    accepted: bool
    rho: float
    delta: float
    step_norm: float
    objective_db: float
    cum_evals: int


@dataclass
class RunResult:
    best_design: np.ndarray
    best_objective: float
    evaluations: int
    trace: list[TraceRow]
    termination: str
    x0: np.ndarray
    steps: np.ndarray
    n_jacobian_builds: int
    jacobian_centers: list[np.ndarray]


class OptimizationAborted(EvaluationError):
    """Evaluator failure mid-run; carries the partial result."""

    def __init__(self, message: str, partial: RunResult):
        super().__init__(message)
        self.partial = partial


def gain_ratio(u_new: float, u_old: float, g_new: float, g_old: float) -> float:
    """Actual objective change over model-predicted change; 0 when the
    predicted change is degenerate."""
    denom = g_new - g_old
    if abs(denom) < 1e-12:
        return 0.0
    return (u_new - u_old) / denom


def accept_or_reject(rho: float) -> str:
    """Accept for rho > 0; the rho = 0 boundary is rejected."""
    return ACCEPT if rho > 0 else REJECT


def update_radius(rho: float, step: float, delta: float, cfg: TrustConfig) -> float:
    """Shrink to alpha1*step below rho_low, grow to max(alpha2*step, delta)
    above rho_high, otherwise keep delta.  A zero-step shrink falls back to
    alpha1*delta so the radius provably reaches the termination threshold."""
    if rho < cfg.rho_low:
        new = cfg.alpha1 * step
        return new if new > 0 else cfg.alpha1 * delta
    if rho > cfg.rho_high:
        return max(cfg.alpha2 * step, delta)
    return delta


def should_terminate(delta: float, last_accepted_step: float, evals: int,
                     budget: int, cfg: TrustConfig) -> str | None:
    if delta < cfg.term_eps:
        return TERM_RADIUS
    if last_accepted_step < cfg.term_eps:
        return TERM_STEP
    if evals >= budget:
        return TERM_BUDGET
    return None


def optimize(ev: Evaluator, x0, b: Bounds, cfg: TrustConfig,
             cache: EvalCache | None = None) -> RunResult:
    """Run the full trust-region loop from x0.

    On acceptance the Jacobian is rebuilt at the new center; on rejection the
    existing Jacobian is reused and only the radius shrinks.  Every evaluation
    goes through one cache; the trace is complete and deterministic.
    """
    x0 = as_design(x0)
    if not b.contains(x0):
        raise ConfigError("initial design lies outside the bounds")
    cache = cache if cache is not None else EvalCache()
    steps = resolve_steps(cfg.scheme, x0)
    budget = cfg.budget(x0.size)
    scale = b.ranges if cfg.norm != NORM_RAW else np.ones(x0.size)

    trace: list[TraceRow] = []
    jac_centers: list[np.ndarray] = []

    def partial(term: str, x, u) -> RunResult:
        return RunResult(best_design=x.copy(), best_objective=u,
                         evaluations=cache.count, trace=trace, termination=term,
                         x0=x0, steps=steps,
                         n_jacobian_builds=len(jac_centers),
                         jacobian_centers=jac_centers)

    try:
        r = cache.evaluate(ev, x0)
    except EvaluationError as exc:
        raise OptimizationAborted(str(exc), partial(TERM_ERROR, x0, math.nan)) from exc
    u = objective_minmax(r, ev.sweep)

    x = x0
    delta = cfg.delta0
    model = None
    iteration = 0
    termination = None
    while True:
        if cache.count >= budget:
            termination = TERM_BUDGET
            break
        try:
            if model is None:
                model = fd_jacobian(cache, ev, x, steps, b)
                jac_centers.append(x.copy())
            spec = SubproblemSpec(model=model, bounds=b, radius=delta,
                                  sweep=ev.sweep, norm=cfg.norm)
            cand = solve_tr_subproblem(spec)
            g_new = model_objective(spec, cand)
            r_new = cache.evaluate(ev, cand)
        except EvaluationError as exc:
            raise OptimizationAborted(str(exc), partial(TERM_ERROR, x, u)) from exc
        u_new = objective_minmax(r_new, ev.sweep)
        s_norm = step_norm(cand - x, scale)
        rho = gain_ratio(u_new, u, g_new, u)
        accepted = accept_or_reject(rho) == ACCEPT
        trace.append(TraceRow(iteration=iteration, candidate=cand.copy(),
                              accepted=accepted, rho=rho, delta=delta,
                              step_norm=s_norm, objective_db=u_new,
                              cum_evals=cache.count))
        last_accepted_step = math.inf
        if accepted:
            x, u = cand, u_new
            model = None
            last_accepted_step = s_norm
        delta = update_radius(rho, s_norm, delta, cfg)
        iteration += 1
        termination = should_terminate(delta, last_accepted_step,
                                       cache.count, budget, cfg)
        if termination is not None:
            break

    return partial(termination, x, u)


TRACE_HEADER = "iter,accepted,rho,delta,step_norm,objective_db,cum_evals"


def trace_to_csv(result: RunResult) -> str:
    """Trace export; one row per candidate trial."""
    lines = [TRACE_HEADER]
    for row in result.trace:
        lines.append(
            f"{row.iteration},{int(row.accepted)},{row.rho!r},{row.delta!r},"
            f"{row.step_norm!r},{row.objective_db!r},{row.cum_evals}")
    return "\n".join(lines) + "\n"
