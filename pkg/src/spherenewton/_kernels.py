"""Hot inner loops, compiled with numba when available.

Every kernel has a loop implementation (compiled with ``@njit``) and a
vectorized numpy implementation that computes the same quantity. The
compiled path is used by default; set ``SPHERENEWTON_DISABLE_NUMBA=1``
before import to force the numpy path. Both implementations are always
importable as ``numpy_impl.<name>`` and ``loop_impl.<name>`` so they can be
compared directly.
"""
import os
import types

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_disabled = os.environ.get("SPHERENEWTON_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on")

if numba is not None and not _disabled:
    BACKEND = "numba"

    def _jit(fn):
        return numba.njit(cache=True, nogil=True)(fn)
else:
    BACKEND = "numpy"

    def _jit(fn):
        return fn


# ---------------------------------------------------------------------------
# loop implementations

def _avvf_residual_loops(indptr, indices, data, b, p):
    n = p.shape[0]
    F = np.empty(n)
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * p[indices[k]]
        F[i] = (acc - abs(p[i])) - b[i]
    s = 0.0
    for i in range(n):
        s += p[i] * F[i]
    X = np.empty(n)
    for i in range(n):
        X[i] = F[i] - s * p[i]
    return X, F


def _avvf_clarke_loops(indptr, indices, data, p, F):
    n = p.shape[0]
    # w = J^T p with J = A - diag(sgn p); note p_j sgn(p_j) = |p_j|
    w = np.zeros(n)
    for i in range(n):
        pi = p[i]
        for k in range(indptr[i], indptr[i + 1]):
            w[indices[k]] += pi * data[k]
    for j in range(n):
        w[j] -= abs(p[j])
    s = 0.0
    for i in range(n):
        s += p[i] * F[i]
    V = np.empty((n, n))
    for i in range(n):
        pi = p[i]
        for j in range(n):
            V[i, j] = -pi * w[j]
        for k in range(indptr[i], indptr[i + 1]):
            V[i, indices[k]] += data[k]
        V[i, i] -= np.sign(p[i]) + s
    return V


def _rotate_until_density_loops(R, nnz, target, pairs, angles, start_side):
    """Apply plane rotations from a pre-drawn stream until nnz >= target.

    ``pairs[t]`` are two distinct indices and ``angles[t]`` the angle of the
    t-th rotation. Rotations alternate between rows and columns, starting on
    the side given by ``start_side`` (0 rows, 1 columns). Returns the number
    of rotations used and the updated nonzero count.
    """
    n = R.shape[0]
    used = 0
    side = start_side
    for t in range(pairs.shape[0]):
        if nnz >= target:
            break
        i = pairs[t, 0]
        j = pairs[t, 1]
        c = np.cos(angles[t])
        s = np.sin(angles[t])
        if side == 0:
            for m in range(n):
                nnz -= (R[i, m] != 0.0) + (R[j, m] != 0.0)
                ri = R[i, m]
                rj = R[j, m]
                R[i, m] = c * ri + s * rj
                R[j, m] = c * rj - s * ri
                nnz += (R[i, m] != 0.0) + (R[j, m] != 0.0)
        else:
            for m in range(n):
                nnz -= (R[m, i] != 0.0) + (R[m, j] != 0.0)
                ri = R[m, i]
                rj = R[m, j]
                R[m, i] = c * ri + s * rj
                R[m, j] = c * rj - s * ri
                nnz += (R[m, i] != 0.0) + (R[m, j] != 0.0)
        side = 1 - side
        used += 1
    return used, nnz


# ---------------------------------------------------------------------------
# numpy implementations

def _avvf_residual_numpy(indptr, indices, data, b, p):
    rows = np.repeat(np.arange(p.shape[0]), np.diff(indptr))
    Ap = np.bincount(rows, weights=data * p[indices], minlength=p.shape[0])
    F = (Ap - np.abs(p)) - b
    X = F - (p @ F) * p
    return X, F


def _avvf_clarke_numpy(indptr, indices, data, p, F):
    n = p.shape[0]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    w = np.bincount(indices, weights=p[rows] * data, minlength=n) - np.abs(p)
    V = -np.outer(p, w)
    np.add.at(V, (rows, indices), data)
    V[np.diag_indices(n)] -= np.sign(p) + p @ F
    return V


def _rotate_until_density_numpy(R, nnz, target, pairs, angles, start_side):
    used = 0
    side = start_side
    for t in range(pairs.shape[0]):
        if nnz >= target:
            break
        i, j = pairs[t]
        c, s = np.cos(angles[t]), np.sin(angles[t])
        if side == 0:
            ri, rj = R[i].copy(), R[j].copy()
            before = np.count_nonzero(ri) + np.count_nonzero(rj)
            R[i] = c * ri + s * rj
            R[j] = c * rj - s * ri
            nnz += np.count_nonzero(R[i]) + np.count_nonzero(R[j]) - before
        else:
            ri, rj = R[:, i].copy(), R[:, j].copy()
            before = np.count_nonzero(ri) + np.count_nonzero(rj)
            R[:, i] = c * ri + s * rj
            R[:, j] = c * rj - s * ri
            nnz += np.count_nonzero(R[:, i]) + np.count_nonzero(R[:, j]) - before
        side = 1 - side
        used += 1
    return used, nnz


numpy_impl = types.SimpleNamespace(
    avvf_residual=_avvf_residual_numpy,
    avvf_clarke=_avvf_clarke_numpy,
    rotate_until_density=_rotate_until_density_numpy,
)

if BACKEND == "numba":
    loop_impl = types.SimpleNamespace(
        avvf_residual=_jit(_avvf_residual_loops),
        avvf_clarke=_jit(_avvf_clarke_loops),
        rotate_until_density=_jit(_rotate_until_density_loops),
    )
    active = loop_impl
else:
    loop_impl = types.SimpleNamespace(
        avvf_residual=_avvf_residual_loops,
        avvf_clarke=_avvf_clarke_loops,
        rotate_until_density=_rotate_until_density_loops,
    )
    active = numpy_impl

avvf_residual = active.avvf_residual
avvf_clarke = active.avvf_clarke
rotate_until_density = active.rotate_until_density
