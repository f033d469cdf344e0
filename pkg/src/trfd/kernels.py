"""Hot numeric kernels: hash-noise generation and the min-max subproblem solver.

Both kernels are written in numba-compilable numpy style.  When numba is
installed and ``TRFD_DISABLE_NUMBA`` is unset, they are JIT-compiled; otherwise
the same functions run as plain numpy.  The two paths perform identical
floating-point and uint64 operations, so results are bit-identical either way.
"""

import os

import numpy as np

_DISABLED = os.environ.get("TRFD_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):  # noqa: D103 - identity decorator fallback
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# splitmix64 finalizer constants
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def hash_noise(seed, cells, n_samples):
    """Deterministic noise values in [-1, 1) for one design cell.

    ``cells`` are the per-dimension noise-grid indices (int64); ``n_samples``
    the number of frequency samples.  The same (seed, cells) pair always yields
    the same vector, independent of platform.
    """
    h = _mix64(np.uint64(seed) + _GOLDEN)
    for d in range(cells.shape[0]):
        h = _mix64(h ^ (np.uint64(cells[d]) + _GOLDEN))
    out = np.empty(n_samples, dtype=np.float64)
    for j in range(n_samples):
        v = _mix64(h ^ ((np.uint64(j) + _ONE) * _GOLDEN))
        out[j] = 2.0 * ((v >> _S11) * _INV53) - 1.0
    return out


@njit(cache=True)
def _project_box_ball(z, center, lower, upper, w, radius):
    """Project a scaled displacement onto ball(radius) then the box.

    The center always lies inside the box, so the coordinate-wise clip never
    increases the scaled norm: the result is feasible for both constraints.
    Iterated to a fixed point (at most 50 passes; converges in two).
    """
    for _ in range(50):
        nz = np.sqrt(np.sum(z * z))
        if nz > radius:
            z = z * (radius / nz)
        x = np.minimum(np.maximum(center + z * w, lower), upper)
        z_new = (x - center) / w
        if np.max(np.abs(z_new - z)) == 0.0:
            return z_new
        z = z_new
    return z


@njit(cache=True)
def solve_minmax_subgradient(jac, resp, center, lower, upper, w, radius,
                             starts, n_iters):
    """Minimize max_k (resp + jac @ (z*w))_k over box-and-ball feasible z.

    Projected subgradient descent with geometrically decaying steps, restarted
    from each row of ``starts`` (scaled displacements).  Tracks the best
    feasible point; ties in objective break toward the smaller displacement.
    Returns the best scaled displacement.
    """
    dim = center.shape[0]
    decay = (1e-6) ** (1.0 / n_iters)

    best_z = _project_box_ball(np.zeros(dim), center, lower, upper, w, radius)
    best_obj = np.max(resp + np.dot(jac, best_z * w))
    best_norm = np.sqrt(np.sum(best_z * best_z))

    for s in range(starts.shape[0]):
        z = _project_box_ball(starts[s].copy(), center, lower, upper, w, radius)
        step = radius
        for _ in range(n_iters):
            pred = resp + np.dot(jac, z * w)
            row = np.argmax(pred)
            obj = pred[row]
            nz = np.sqrt(np.sum(z * z))
            if obj < best_obj or (obj == best_obj and nz < best_norm):
                best_obj = obj
                best_norm = nz
                best_z = z.copy()
            g = jac[row] * w
            gn = np.sqrt(np.sum(g * g))
            if gn == 0.0:
                break
            z = _project_box_ball(z - (step / gn) * g, center, lower, upper,
                                  w, radius)
            step *= decay
        pred = resp + np.dot(jac, z * w)
        obj = np.max(pred)
        nz = np.sqrt(np.sum(z * z))
        if obj < best_obj or (obj == best_obj and nz < best_norm):
            best_obj = obj
            best_norm = nz
            best_z = z.copy()
    return best_z
