"""Built-in test problems: a synthetic antenna-like reflection response with
deterministic mesh-noise overlay, analytic fixtures, and the benchmark
design/bound constants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (Bounds, ConfigError, Evaluator, FrequencySweep, as_design,
                   default_sweep)

# Benchmark fixture box (mm): [L, l2, W, w2, l0, o0]
FIXTURE_BOUNDS = Bounds(
    lower=np.array([10.0, 5.0, 3.5, 0.2, 3.0, 2.0]),
    upper=np.array([25.0, 25.0, 10.0, 3.2, 15.0, 10.0]),
)

# Ten benchmark initial designs.  The reference_db values were measured with a
# full-wave solver and are metadata only; they do not apply to the synthetic
# response below.
FIXTURE_DESIGNS: dict[str, np.ndarray] = {
    "x1": np.array([17.5, 15.1, 6.79, 1.72, 9.07, 6.05]),
    "x2": np.array([22.2, 21.3, 8.79, 2.64, 12.8, 8.51]),
    "x3": np.array([18.8, 16.7, 7.30, 1.96, 10.0, 6.68]),
    "x4": np.array([17.9, 15.6, 6.95, 1.79, 9.37, 6.25]),
    "x5": np.array([14.6, 11.2, 5.52, 1.13, 6.73, 4.49]),
    "x6": np.array([13.4, 9.58, 4.99, 0.89, 5.75, 3.83]),
    "x7": np.array([20.4, 18.9, 8.04, 2.30, 11.3, 7.59]),
    "x8": np.array([13.6, 9.87, 5.08, 0.93, 5.92, 3.95]),
    "x9": np.array([18.2, 15.9, 7.07, 1.85, 9.60, 6.40]),
    "x10": np.array([21.6, 20.5, 8.56, 2.54, 12.3, 8.23]),
}

FIXTURE_REFERENCE_DB = {
    "x1": -2.03, "x2": -4.50, "x3": -0.34, "x4": -3.53, "x5": -2.97,
    "x6": -0.87, "x7": -2.04, "x8": -2.45, "x9": -6.23, "x10": -1.23,
}

# Dependent/fixed geometry of the original structure; metadata only, the
# synthetic response does not use it.
FIXTURE_GEOMETRY_METADATA = {
    "dependent": {"o": "0.22*L", "l_s": "0.1*L"},
    "fixed_mm": {"l1": 1.5, "w1": 2.5, "w_s": 0.5, "w0": 1.7},
}


@dataclass(frozen=True)
class NoiseSpec:
    """Piecewise-constant hash noise standing in for remeshing noise.

    The design box is cut into cells of size cell_fraction * range per
    dimension; the noise is constant inside a cell and jumps across cells.
    """

    amplitude_db: float = 0.5
    cell_fraction: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.amplitude_db < 0:
            raise ConfigError("noise amplitude must be non-negative")
        if not 0 < self.cell_fraction < 1:
            raise ConfigError("cell_fraction must lie in (0, 1)")


def noise_overlay(spec: NoiseSpec, bounds: Bounds, x: np.ndarray,
                  sweep: FrequencySweep) -> np.ndarray:
    """Per-sample additive noise in dB; deterministic and bit-reproducible."""
    if spec.amplitude_db == 0:
        return np.zeros(sweep.n_points)
    x = as_design(x)
    cell = spec.cell_fraction * bounds.ranges
    cells = np.floor((x - bounds.lower) / cell).astype(np.int64)
    seed = int(spec.seed) & 0xFFFFFFFFFFFFFFFF
    return spec.amplitude_db * kernels.hash_noise(seed, cells, sweep.n_points)


@dataclass(frozen=True)
class SyntheticAntennaSpec:
    """Two-resonance reflection stand-in over the benchmark box.

    Resonance frequencies sweep through the band as the geometry varies;
    matching depth is controlled by the w2 and l0 inputs.  Not a physics
    claim: calibrated so good designs reach roughly -25 to -30 dB.
    """

    c1: float = 140.0  # GHz*mm
    c2: float = 130.0
    sigma1: float = 0.25  # GHz
    sigma2: float = 0.35
    d1_max: float = 25.0  # dB
    d2_max: float = 20.0
    w2_star: float = 1.2  # mm
    l0_star: float = 10.0
    w2_width: float = 0.8
    l0_width: float = 4.0
    baseline_db: float = -1.0
    floor_db: float = -40.0
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(amplitude_db=0.0))


def antenna_response(spec: SyntheticAntennaSpec, x: np.ndarray,
                     sweep: FrequencySweep,
                     bounds: Bounds = FIXTURE_BOUNDS) -> np.ndarray:
    x = as_design(x)
    if x.size != 6:
        raise ConfigError(f"antenna model needs 6 parameters, got {x.size}")
    L, l2, W, w2, l0, o0 = x
    f1 = spec.c1 / (L + 0.3 * l2 + W)
    f2 = spec.c2 / (l2 + o0)
    d1 = spec.d1_max * np.exp(-(((w2 - spec.w2_star) / spec.w2_width) ** 2))
    d2 = spec.d2_max * np.exp(-(((l0 - spec.l0_star) / spec.l0_width) ** 2))
    f = sweep.points
    dips = (d1 * np.exp(-((f - f1) ** 2) / (2 * spec.sigma1 ** 2))
            + d2 * np.exp(-((f - f2) ** 2) / (2 * spec.sigma2 ** 2)))
    r = np.maximum(spec.floor_db, spec.baseline_db - dips)
    return r + noise_overlay(spec.noise, bounds, x, sweep)


class AntennaEvaluator(Evaluator):
    """Evaluator wrapper for the synthetic antenna response."""

    def __init__(self, spec: SyntheticAntennaSpec | None = None,
                 sweep: FrequencySweep | None = None,
                 bounds: Bounds = FIXTURE_BOUNDS):
        self.spec = spec if spec is not None else SyntheticAntennaSpec()
        self.sweep = sweep if sweep is not None else default_sweep()
        self.bounds = bounds
        self.dim = bounds.dim

    def evaluate(self, x):
        return antenna_response(self.spec, x, self.sweep, self.bounds)


class AffineEvaluator(Evaluator):
    """R(x) = A x + b; FD Jacobians are exact on it up to round-off."""

    def __init__(self, a: np.ndarray, b: np.ndarray, sweep: FrequencySweep):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != sweep.n_points or b.shape != (sweep.n_points,):
            raise ConfigError("affine coefficient shapes do not match the sweep")
        self.a, self.b = a, b
        self.sweep = sweep
        self.dim = a.shape[1]

    def evaluate(self, x):
        return self.a @ np.asarray(x, dtype=np.float64) + self.b


def _flat_sweep(m: int) -> FrequencySweep:
    # all samples in-band: the objective is the plain max over rows
    return FrequencySweep(np.linspace(5.0, 6.0, m) if m > 1 else [5.5], 5.0, 6.0)


def affine_minmax(seed: int, dim: int = 2, m: int = 3) -> AffineEvaluator:
    """Seeded affine min-max fixture with O(1) coefficients."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-2.0, 2.0, size=(m, dim))
    b = rng.uniform(-5.0, 5.0, size=m)
    return AffineEvaluator(a, b, _flat_sweep(m))


class QuadraticBowl(Evaluator):
    """Single-sample response sum((x - c)^2); analytic optimum at c."""

    def __init__(self, center):
        self.center = as_design(center)
        self.dim = self.center.size
        self.sweep = _flat_sweep(1)

    def evaluate(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.array([np.sum((x - self.center) ** 2)])


def quadratic_bowl(center) -> QuadraticBowl:
    return QuadraticBowl(center)
