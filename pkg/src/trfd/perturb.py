"""Perturbation-scheme resolution, forward-FD Jacobian construction, and the
truncation/round-off error-curve tool."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, ConfigError, EvalCache, Evaluator, as_design
from .surrogate import LinearModel


@dataclass(frozen=True)
class FractionOfInitial:
    """Steps as a single fraction of the initial design."""

    frac: float

    def __post_init__(self):
        if not self.frac > 0:
            raise ConfigError("fraction must be positive")

    def label(self) -> str:
        return f"{100 * self.frac:g}pct"


@dataclass(frozen=True)
class SqrtMachineEps:
    """Steps as sqrt(machine_eps) times the initial design.

    Note: with machine_eps = 1e-7 the fraction is sqrt(1e-7) ~= 3.16e-4.
    """

    machine_eps: float = 1e-7

    def __post_init__(self):
        if not self.machine_eps > 0:
            raise ConfigError("machine_eps must be positive")

    def label(self) -> str:
        return f"sqrteps_{self.machine_eps:g}"


@dataclass(frozen=True)
class CustomFractions:
    """Manually tuned per-dimension fractions of the initial design."""

    fracs: tuple

    def __post_init__(self):
        object.__setattr__(self, "fracs", tuple(float(f) for f in self.fracs))
        if not all(f > 0 for f in self.fracs):
            raise ConfigError("all fractions must be positive")

    def label(self) -> str:
        return "custom_" + "_".join(f"{f:g}" for f in self.fracs)


PerturbationScheme = FractionOfInitial | SqrtMachineEps | CustomFractions


def parse_scheme(text: str) -> PerturbationScheme:
    """Parse a CLI scheme spec: fraction:F | sqrteps:E | custom:f1,...,fD."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "fraction":
            return FractionOfInitial(float(arg))
        if kind == "sqrteps":
            return SqrtMachineEps(float(arg) if arg else 1e-7)
        if kind == "custom":
            return CustomFractions(tuple(float(f) for f in arg.split(",")))
    except ValueError as exc:
        raise ConfigError(f"bad scheme spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown scheme kind {kind!r} (use fraction|sqrteps|custom)")


def resolve_steps(scheme: PerturbationScheme, x0: np.ndarray) -> np.ndarray:
    """Absolute FD steps from the initial design; held fixed for a whole run."""
    x0 = as_design(x0)
    if np.any(x0 <= 0):
        raise ConfigError("relative schemes need strictly positive initial entries")
    if isinstance(scheme, FractionOfInitial):
        p = scheme.frac * x0
    elif isinstance(scheme, SqrtMachineEps):
        p = np.sqrt(scheme.machine_eps) * x0
    elif isinstance(scheme, CustomFractions):
        fracs = np.asarray(scheme.fracs, dtype=np.float64)
        if fracs.size != x0.size:
            raise ConfigError(
                f"custom fractions have {fracs.size} entries, design has {x0.size}")
        p = fracs * x0
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    return p


def fd_jacobian(cache: EvalCache, ev: Evaluator, x: np.ndarray, p: np.ndarray,
                b: Bounds) -> LinearModel:
    """Forward-FD linear model at x: column d = (R(x + p_d e_d) - R(x)) / p_d.

    When the forward probe leaves the box the step flips sign (backward
    difference) so every probe stays feasible.  Exactly D probe evaluations go
    through the cache beyond the center.
    """
    x = as_design(x)
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise ConfigError("FD steps must be strictly positive and finite")
    if not b.contains(x):
        raise ConfigError("Jacobian center lies outside the bounds")
    r0 = cache.evaluate(ev, x)
    jac = np.empty((r0.size, x.size), dtype=np.float64)
    for d in range(x.size):
        s = probe_step(x, p, b, d)
        probe = x.copy()
        probe[d] += s
        jac[:, d] = (cache.evaluate(ev, probe) - r0) / s
    return LinearModel(center=x, center_response=np.asarray(r0), jacobian=jac)


def probe_step(x: np.ndarray, p: np.ndarray, b: Bounds, d: int) -> float:
    """Signed FD step for dimension d (forward, or backward at the upper bound)."""
    s = p[d]
    if x[d] + s > b.upper[d]:
        s = -p[d]
        if x[d] + s < b.lower[d]:
            raise ConfigError(
                f"step {p[d]} exceeds the box range in dimension {d}")
    return float(s)


def fd_error_curve(f, df, t: float, steps) -> list[tuple[float, float, bool]]:
    """Residual (f(t+h) - f(t))/h - df(t) per step h.

    Returns (step, residual, valid) rows in input order; a non-finite function
    value flags the row invalid instead of aborting the sweep.
    """
    f0 = f(t)
    d0 = df(t)
    rows = []
    for h in steps:
        if not h > 0:
            raise ConfigError("steps must be positive")
        fh = f(t + h)
        if np.isfinite(fh) and np.isfinite(f0) and np.isfinite(d0):
            rows.append((float(h), float((fh - f0) / h - d0), True))
        else:
            rows.append((float(h), float("nan"), False))
    return rows


def fd_curve_csv(rows) -> str:
    lines = ["step,residual,abs_residual"]
    for h, res, valid in rows:
        if valid:
            lines.append(f"{h!r},{res!r},{abs(res)!r}")
        else:
            lines.append(f"{h!r},nan,nan")
    return "\n".join(lines) + "\n"
