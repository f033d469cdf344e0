"""Core types: designs, bounds, frequency sweeps, the evaluator contract,
the evaluation cache, and the in-band min-max objective."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration or ill-formed input."""


class EvaluationError(RuntimeError):
    """An evaluator failed or returned a non-finite response."""


def as_design(values) -> np.ndarray:
    """Validate and return a design vector as a float64 array."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ConfigError(f"design must be a non-empty 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"design contains non-finite entries: {x}")
    return x


@dataclass(frozen=True)
class Bounds:
    """Box constraints lower <= x <= upper."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=np.float64))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=np.float64))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ConfigError("bounds must be 1-D vectors of equal length")
        if not np.all(self.lower < self.upper):
            raise ConfigError("each lower bound must be strictly below its upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def ranges(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def clip_to_bounds(x: np.ndarray, b: Bounds) -> np.ndarray:
    """Componentwise clamp of x into the box. Idempotent."""
    x = as_design(x)
    if x.size != b.dim:
        raise ConfigError(f"dimension mismatch: design has {x.size}, bounds have {b.dim}")
    return np.minimum(np.maximum(x, b.lower), b.upper)


@dataclass(frozen=True)
class FrequencySweep:
    """Frequency sample grid (GHz) plus the objective band [band_lo, band_hi]."""

    points: np.ndarray
    band_lo: float
    band_hi: float

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.float64))
        if self.points.ndim != 1 or self.points.size < 1:
            raise ConfigError("sweep needs at least one frequency point")
        if np.any(np.diff(self.points) <= 0):
            raise ConfigError("frequency points must be strictly increasing")
        if not self.band_lo < self.band_hi:
            raise ConfigError("band_lo must be below band_hi")
        if not np.any(self.band_mask):
            raise ConfigError("no frequency sample falls inside the objective band")

    @property
    def n_points(self) -> int:
        return self.points.size

    @property
    def band_mask(self) -> np.ndarray:
        # band endpoints are inclusive
        return (self.points >= self.band_lo) & (self.points <= self.band_hi)


def default_sweep() -> FrequencySweep:
    """201 uniform points on [4, 7] GHz with the [5, 6] GHz objective band."""
    return FrequencySweep(np.linspace(4.0, 7.0, 201), 5.0, 6.0)


class Evaluator:
    """Behavioral contract for expensive response models.

    Subclasses provide ``dim``, ``sweep`` and a deterministic
    ``evaluate(x) -> np.ndarray`` returning one dB value per sweep point.
    """

    dim: int
    sweep: FrequencySweep

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def objective_minmax(r_db: np.ndarray, sweep: FrequencySweep) -> float:
    """Maximum response (dB) over in-band samples; out-of-band samples ignored."""
    r_db = np.asarray(r_db, dtype=np.float64)
    if r_db.shape != sweep.points.shape:
        raise ConfigError("response length does not match the sweep")
    return float(np.max(r_db[sweep.band_mask]))


@dataclass
class EvalCache:
    """Memoizes evaluator calls on exact (bit-level) design keys.

    The counter equals the number of distinct designs evaluated; repeated
    queries never increment it.  Safe under concurrent use: a raced miss may
    evaluate twice but stores and counts one canonical entry.
    """

    _store: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def count(self) -> int:
        return len(self._store)

    @staticmethod
    def key(x: np.ndarray) -> bytes:
        return np.ascontiguousarray(x, dtype=np.float64).tobytes()

    def evaluate(self, ev: Evaluator, x: np.ndarray) -> np.ndarray:
        k = self.key(x)
        with self._lock:
            hit = self._store.get(k)
        if hit is not None:
            return hit
        try:
            r = np.asarray(ev.evaluate(x), dtype=np.float64)
        except EvaluationError:
            raise
        except Exception as exc:
            raise EvaluationError(f"evaluator failed at x={x.tolist()}: {exc}") from exc
        if r.shape != ev.sweep.points.shape:
            raise EvaluationError(
                f"evaluator returned {r.size} samples, sweep has {ev.sweep.n_points}")
        if not np.all(np.isfinite(r)):
            raise EvaluationError(f"non-finite response at x={x.tolist()}")
        r.setflags(write=False)
        with self._lock:
            return self._store.setdefault(k, r)
