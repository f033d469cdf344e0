"""Linear surrogate model and the trust-region min-max subproblem solver,
with a brute-force grid oracle for validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Bounds, ConfigError, FrequencySweep, as_design

NORM_RAW = "raw"
NORM_BOX = "box"


@dataclass(frozen=True)
class LinearModel:
    """First-order surrogate: center response plus FD Jacobian (dB per unit)."""

    center: np.ndarray
    center_response: np.ndarray
    jacobian: np.ndarray

    def __post_init__(self):
        m, d = self.jacobian.shape
        if m != self.center_response.size or d != self.center.size:
            raise ConfigError("jacobian shape does not match center/response")
        if not (np.all(np.isfinite(self.jacobian))
                and np.all(np.isfinite(self.center_response))):
            raise ConfigError("model contains non-finite entries")


def model_predict(model: LinearModel, x: np.ndarray) -> np.ndarray:
    """Surrogate response at x: center_response + J (x - center)."""
    x = as_design(x)
    if x.size != model.center.size:
        raise ConfigError("dimension mismatch in model_predict")
    return model.center_response + model.jacobian @ (x - model.center)


@dataclass(frozen=True)
class SubproblemSpec:
    """One trust-region subproblem: minimize the in-band model max within
    the box intersected with the radius ball around the model center."""

    model: LinearModel
    bounds: Bounds
    radius: float
    sweep: FrequencySweep
    norm: str = NORM_RAW

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("radius must be positive")
        if not self.bounds.contains(self.model.center):
            raise ConfigError("model center lies outside the bounds")
        if self.norm not in (NORM_RAW, NORM_BOX):
            raise ConfigError(f"unknown norm {self.norm!r}")

    @property
    def scale(self) -> np.ndarray:
        """Per-dimension scale of the norm space (unit box when normalized)."""
        if self.norm == NORM_BOX:
            return self.bounds.ranges
        return np.ones(self.bounds.dim)


def step_norm(dx: np.ndarray, scale: np.ndarray) -> float:
    return float(np.linalg.norm(dx / scale))


def model_objective(spec: SubproblemSpec, x: np.ndarray) -> float:
    pred = model_predict(spec.model, x)
    return float(np.max(pred[spec.sweep.band_mask]))


def _start_displacements(dim: int, radius: float) -> np.ndarray:
    """Center plus up to 8 deterministic start directions (scaled space)."""
    dirs = []
    for d in range(dim):
        e = np.zeros(dim)
        e[d] = 1.0
        dirs.append(e)
        dirs.append(-e)
    diag = np.ones(dim) / np.sqrt(dim)
    dirs.append(diag)
    dirs.append(-diag)
    dirs = dirs[:8]
    return radius * np.array([np.zeros(dim)] + dirs)


def solve_tr_subproblem(spec: SubproblemSpec, n_iters: int = 500) -> np.ndarray:
    """Deterministic projected-subgradient solve of the subproblem.

    The returned point is feasible (box and ball) and never worse than the
    center under the model objective.
    """
    band = spec.sweep.band_mask
    jac = np.ascontiguousarray(spec.model.jacobian[band])
    resp = np.ascontiguousarray(spec.model.center_response[band])
    w = spec.scale
    starts = _start_displacements(spec.bounds.dim, spec.radius)
    z = kernels.solve_minmax_subgradient(
        jac, resp, spec.model.center, spec.bounds.lower, spec.bounds.upper,
        w, float(spec.radius), starts, n_iters)
    x = np.minimum(np.maximum(spec.model.center + z * w, spec.bounds.lower),
                   spec.bounds.upper)
    return x


def subproblem_oracle_grid(spec: SubproblemSpec, resolution: int = 101) -> np.ndarray:
    """Exhaustive grid scan of the feasible set; validation oracle for low D.

    Ties break toward the lexicographically smallest grid index.
    """
    dim = spec.bounds.dim
    if dim > 3:
        raise ConfigError("grid oracle is limited to D <= 3")
    if resolution < 11:
        raise ConfigError("grid resolution must be at least 11")
    w = spec.scale
    lo = np.maximum(spec.bounds.lower, spec.model.center - spec.radius * w)
    hi = np.minimum(spec.bounds.upper, spec.model.center + spec.radius * w)
    axes = [np.linspace(lo[d], hi[d], resolution) for d in range(dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    disp = (pts - spec.model.center) / w
    feasible = np.linalg.norm(disp, axis=1) <= spec.radius
    if not np.any(feasible):
        return spec.model.center.copy()
    band = spec.sweep.band_mask
    pred = spec.model.center_response[band] + (pts - spec.model.center) @ spec.model.jacobian[band].T
    obj = np.max(pred, axis=1)
    obj[~feasible] = np.inf
    return pts[int(np.argmin(obj))].copy()
