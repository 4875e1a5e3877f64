"""Hot numeric kernels with numba acceleration and a pure-numpy fallback.

Set AZTECENV_NO_NUMBA=1 to force the fallback path (used by the benchmark
and by CI smoke runs).  Both paths are exercised by the test suite and must
produce bit-identical results for identical inputs.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_REQUESTED = os.environ.get("AZTECENV_NO_NUMBA", "0") not in ("1", "true", "yes")

try:  # pragma: no cover - import guard
    if not NUMBA_REQUESTED:
        raise ImportError
    from numba import config, njit, prange

    config.THREADING_LAYER = "workqueue"  # TBB on this image is too old
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

USING_NUMBA = HAVE_NUMBA and NUMBA_REQUESTED


# ---------------------------------------------------------------------------
# ratio power sums for the log-derivative machinery
# ---------------------------------------------------------------------------

def _beta_ratio_power_sums_np(beta, nodes, rmax):
    """out[r, t] = sum_j (beta_j / (1 - beta_j z_t))^r for r = 1..rmax."""
    out = np.zeros((rmax + 1, nodes.size), dtype=np.complex128)
    if beta.size == 0 or rmax == 0:
        return out
    q = beta[None, :] / (1.0 - np.outer(nodes, beta))  # (t, j)
    p = q.copy()
    out[1] = p.sum(axis=1)
    for r in range(2, rmax + 1):
        p *= q
        out[r] = p.sum(axis=1)
    return out


def _y_ratio_power_sums_np(y, nodes, rmax):
    """out[r, t] = sum_i (z_t - y_i)^(-r) for r = 1..rmax."""
    out = np.zeros((rmax + 1, nodes.size), dtype=np.complex128)
    if y.size == 0 or rmax == 0:
        return out
    q = 1.0 / (nodes[:, None] - y[None, :])
    p = q.copy()
    out[1] = p.sum(axis=1)
    for r in range(2, rmax + 1):
        p *= q
        out[r] = p.sum(axis=1)
    return out


@njit(cache=True)
def _beta_ratio_power_sums_nb(beta, nodes, rmax):  # pragma: no cover - jitted
    out = np.zeros((rmax + 1, nodes.size), dtype=np.complex128)
    for t in range(nodes.size):
        z = nodes[t]
        for j in range(beta.size):
            q = beta[j] / (1.0 - beta[j] * z)
            p = q
            for r in range(1, rmax + 1):
                out[r, t] += p
                p *= q
    return out


@njit(cache=True)
def _y_ratio_power_sums_nb(y, nodes, rmax):  # pragma: no cover - jitted
    out = np.zeros((rmax + 1, nodes.size), dtype=np.complex128)
    for t in range(nodes.size):
        z = nodes[t]
        for i in range(y.size):
            q = 1.0 / (z - y[i])
            p = q
            for r in range(1, rmax + 1):
                out[r, t] += p
                p *= q
    return out


def beta_ratio_power_sums(beta, nodes, rmax):
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    nodes = np.ascontiguousarray(nodes, dtype=np.complex128)
    if USING_NUMBA:
        return _beta_ratio_power_sums_nb(beta, nodes, rmax)
    return _beta_ratio_power_sums_np(beta, nodes, rmax)


def y_ratio_power_sums(y, nodes, rmax):
    y = np.ascontiguousarray(y, dtype=np.float64)
    nodes = np.ascontiguousarray(nodes, dtype=np.complex128)
    if USING_NUMBA:
        return _y_ratio_power_sums_nb(y, nodes, rmax)
    return _y_ratio_power_sums_np(y, nodes, rmax)


# ---------------------------------------------------------------------------
# dual RSK insertion
# ---------------------------------------------------------------------------

def _rsk_shapes_batch_py(uniforms, a):
    """Insertion-tableau shapes for a batch of Bernoulli 0/1 matrices.

    uniforms has shape (S, N, K); an entry counts as a one when u < a.
    Returns (shapes (S, N) int64, ones (S,) int64).  Rows of the insertion
    tableau are strictly increasing; inserting v bumps the first entry >= v.
    Each matrix row is a strictly increasing run, so a whole run settles into
    a tableau row with one forward merge scan and the bumped entries (again a
    strictly increasing run) move on to the next row.
    """
    S, N, K = uniforms.shape
    shapes = np.zeros((S, N), dtype=np.int64)
    ones = np.zeros(S, dtype=np.int64)
    rows = np.empty((N, K), dtype=np.int64)
    lens = np.empty(N, dtype=np.int64)
    run = np.empty(K, dtype=np.int64)
    bumped = np.empty(K, dtype=np.int64)
    for s in range(S):
        lens[:] = 0
        count = 0
        for i in range(N):
            rlen = 0
            for j in range(K):
                if uniforms[s, i, j] < a[i, j]:
                    run[rlen] = j
                    rlen += 1
            count += rlen
            r = 0
            while rlen > 0:
                L = lens[r]
                q = 0
                nb = 0
                for t in range(rlen):
                    v = run[t]
                    lo, hi = q, L  # first index >= v within [q, L)
                    while lo < hi:
                        mid = (lo + hi) >> 1
                        if rows[r, mid] < v:
                            lo = mid + 1
                        else:
                            hi = mid
                    q = lo
                    if q == L:
                        # nothing left to bump; append this and all later values
                        for t2 in range(t, rlen):
                            rows[r, L] = run[t2]
                            L += 1
                        break
                    bumped[nb] = rows[r, q]
                    rows[r, q] = v
                    nb += 1
                    q += 1
                lens[r] = L
                rlen = nb
                run, bumped = bumped, run
                r += 1
        shapes[s] = lens
        ones[s] = count
    return shapes, ones


@njit(cache=True, parallel=True)
def _rsk_shapes_batch_nb(uniforms, a):  # pragma: no cover - jitted
    S, N, K = uniforms.shape
    shapes = np.zeros((S, N), dtype=np.int64)
    ones = np.zeros(S, dtype=np.int64)
    for s in prange(S):
        rows = np.empty((N, K), dtype=np.int64)
        lens = np.zeros(N, dtype=np.int64)
        run = np.empty(K, dtype=np.int64)
        bumped = np.empty(K, dtype=np.int64)
        count = 0
        for i in range(N):
            rlen = 0
            for j in range(K):
                if uniforms[s, i, j] < a[i, j]:
                    run[rlen] = j
                    rlen += 1
            count += rlen
            r = 0
            while rlen > 0:
                L = lens[r]
                q = 0
                nb = 0
                for t in range(rlen):
                    v = run[t]
                    lo, hi = q, L
                    while lo < hi:
                        mid = (lo + hi) >> 1
                        if rows[r, mid] < v:
                            lo = mid + 1
                        else:
                            hi = mid
                    q = lo
                    if q == L:
                        for t2 in range(t, rlen):
                            rows[r, L] = run[t2]
                            L += 1
                        break
                    bumped[nb] = rows[r, q]
                    rows[r, q] = v
                    nb += 1
                    q += 1
                lens[r] = L
                rlen = nb
                tmp = run
                run = bumped
                bumped = tmp
                r += 1
        for r in range(N):
            shapes[s, r] = lens[r]
        ones[s] = count
    return shapes, ones


def rsk_shapes_batch(uniforms, a):
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    if USING_NUMBA:
        return _rsk_shapes_batch_nb(uniforms, a)
    return _rsk_shapes_batch_py(uniforms, a)
