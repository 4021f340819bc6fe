"""Hot numeric kernels with optional numba acceleration.

Every kernel here exists twice: a numba ``@njit`` version and a pure-numpy
fallback. The active path is chosen at import time from the environment
variable ``NUMSIM_NO_NUMBA`` (set to ``1`` to force the numpy path) and can
be overridden per call with ``use_numba=``, which is what the benchmark in
``benchmarks/bench_kernels.py`` does.
"""

import os

import numpy as np


def _detect_numba():
    if os.environ.get("NUMSIM_NO_NUMBA", "").strip().lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _detect_numba()

if NUMBA_ENABLED:
    from numba import njit, prange
else:  # identity decorators so the jitted definitions still import
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]) and not kwargs:
            return args[0]
        return wrap

    prange = range


def _resolve(use_numba):
    if use_numba is None:
        return NUMBA_ENABLED
    if use_numba and not NUMBA_ENABLED:
        raise RuntimeError("numba path requested but numba is disabled or unavailable")
    return use_numba


# ---------------------------------------------------------------------------
# Pairwise Levenshtein over encoded digit strings
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def _lev_matrix_numba(codes, lengths):
    n = codes.shape[0]
    maxlen = codes.shape[1]
    out = np.zeros((n, n), dtype=np.int32)
    for i in prange(n):
        prev = np.empty(maxlen + 1, dtype=np.int32)
        cur = np.empty(maxlen + 1, dtype=np.int32)
        for j in range(i + 1, n):
            la = lengths[i]
            lb = lengths[j]
            for c in range(lb + 1):
                prev[c] = c
            for r in range(1, la + 1):
                cur[0] = r
                for c in range(1, lb + 1):
                    cost = 0 if codes[i, r - 1] == codes[j, c - 1] else 1
                    best = prev[c] + 1
                    if cur[c - 1] + 1 < best:
                        best = cur[c - 1] + 1
                    if prev[c - 1] + cost < best:
                        best = prev[c - 1] + cost
                    cur[c] = best
                for c in range(lb + 1):
                    prev[c] = cur[c]
            out[i, j] = prev[lb]
            out[j, i] = prev[lb]
    return out


def _lev_matrix_numpy(codes, lengths):
    # DP vectorized over the pair axis: the (row, col) loops run over the
    # padded length (tiny), each step a numpy op across all upper-triangle
    # pairs at once.
    n = codes.shape[0]
    maxlen = codes.shape[1]
    iu, ju = np.triu_indices(n, k=1)
    a = codes[iu]
    b = codes[ju]
    la = lengths[iu].astype(np.int64)
    lb = lengths[ju].astype(np.int64)
    npairs = len(iu)

    row = np.tile(np.arange(maxlen + 1, dtype=np.int32), (npairs, 1))
    final = np.empty_like(row)
    final[la == 0] = row[la == 0]
    for r in range(1, maxlen + 1):
        new = np.empty_like(row)
        new[:, 0] = r
        for c in range(1, maxlen + 1):
            cost = (a[:, r - 1] != b[:, c - 1]).astype(np.int32)
            new[:, c] = np.minimum(
                np.minimum(row[:, c] + 1, new[:, c - 1] + 1),
                row[:, c - 1] + cost,
            )
        row = new
        hit = la == r
        final[hit] = row[hit]

    dist = final[np.arange(npairs), lb]
    out = np.zeros((n, n), dtype=np.int32)
    out[iu, ju] = dist
    out[ju, iu] = dist
    return out


def levenshtein_matrix(codes, lengths, use_numba=None):
    """All-pairs edit distances between encoded digit strings.

    ``codes`` is (n, maxlen) int32, padded with any sentinel beyond each
    string's length; ``lengths`` is (n,) int32. Returns an (n, n) int32
    symmetric matrix with zero diagonal.
    """
    codes = np.ascontiguousarray(codes, dtype=np.int32)
    lengths = np.ascontiguousarray(lengths, dtype=np.int32)
    if _resolve(use_numba):
        return _lev_matrix_numba(codes, lengths)
    return _lev_matrix_numpy(codes, lengths)


# ---------------------------------------------------------------------------
# SMACOF stress majorization
# ---------------------------------------------------------------------------

@njit(cache=True)
def _smacof_numba(delta, x, max_iters, tol):
    n = delta.shape[0]
    dim = x.shape[1]
    history = np.empty(max_iters + 1, dtype=np.float64)

    d = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(dim):
                t = x[i, k] - x[j, k]
                s += t * t
            d[i, j] = np.sqrt(s)
            d[j, i] = d[i, j]
    stress = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            t = delta[i, j] - d[i, j]
            stress += t * t
    history[0] = stress

    n_iters = 0
    converged = False
    xn = np.zeros((n, dim), dtype=np.float64)
    for it in range(1, max_iters + 1):
        # Guttman transform: (Bx)_i = sum_j ratio_ij (x_i - x_j), x <- Bx / n
        for i in range(n):
            for k in range(dim):
                xn[i, k] = 0.0
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                ratio = delta[i, j] / d[i, j] if d[i, j] > 0.0 else 0.0
                for k in range(dim):
                    xn[i, k] += ratio * (x[i, k] - x[j, k])
        for i in range(n):
            for k in range(dim):
                x[i, k] = xn[i, k] / n

        for i in range(n):
            for j in range(i + 1, n):
                s = 0.0
                for k in range(dim):
                    t = x[i, k] - x[j, k]
                    s += t * t
                d[i, j] = np.sqrt(s)
                d[j, i] = d[i, j]
        new_stress = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                t = delta[i, j] - d[i, j]
                new_stress += t * t
        history[it] = new_stress
        n_iters = it
        if new_stress == 0.0 or (stress > 0.0 and (stress - new_stress) / stress < tol):
            stress = new_stress
            converged = True
            break
        stress = new_stress

    return x, history[: n_iters + 1], n_iters, converged


def _smacof_numpy(delta, x, max_iters, tol):
    n = delta.shape[0]
    history = []

    def distances(pts):
        diff = pts[:, None, :] - pts[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))

    def raw_stress(d):
        iu = np.triu_indices(n, k=1)
        t = delta[iu] - d[iu]
        return float((t * t).sum())

    d = distances(x)
    stress = raw_stress(d)
    history.append(stress)
    n_iters = 0
    converged = False
    for it in range(1, max_iters + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d > 0.0, delta / np.where(d > 0.0, d, 1.0), 0.0)
        np.fill_diagonal(ratio, 0.0)
        b = -ratio
        np.fill_diagonal(b, ratio.sum(axis=1))
        x = b.dot(x) / n
        d = distances(x)
        stress_new = raw_stress(d)
        history.append(stress_new)
        n_iters = it
        if stress_new == 0.0 or (stress > 0.0 and (stress - stress_new) / stress < tol):
            stress = stress_new
            converged = True
            break
        stress = stress_new
    return x, np.asarray(history), n_iters, converged


def smacof_core(delta, x0, max_iters, tol, use_numba=None):
    """Run SMACOF majorization from configuration ``x0``.

    Returns (points, stress_history, n_iters, converged); stress is the raw
    sum of squared residuals over the upper triangle and is non-increasing
    across iterations by the majorization guarantee.
    """
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    x = np.ascontiguousarray(x0, dtype=np.float64).copy()
    if _resolve(use_numba):
        pts, history, n_iters, converged = _smacof_numba(delta, x, max_iters, tol)
        return pts, np.asarray(history), n_iters, converged
    return _smacof_numpy(delta, x, max_iters, tol)
