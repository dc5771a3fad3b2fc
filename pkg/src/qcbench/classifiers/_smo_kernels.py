"""Compiled SMO for the soft-margin RBF SVM dual.

Conventions: f(x) = sum_j alpha_j y_j k(x_j, x) + b, error cache E = f - y.
Kernel rows are computed on demand into an LRU cache of ``cache_rows`` rows.
"""

import numba
import numpy as np

from ._tree_kernels import splitmix64


@numba.njit(cache=True)
def _compute_row(i, indptr, indices, data, sqn, gamma, scratch, out):
    n = indptr.size - 1
    for k in range(indptr[i], indptr[i + 1]):
        scratch[indices[k]] = data[k]
    for j in range(n):
        if j == i:
            out[j] = 1.0
            continue
        dot = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            dot += scratch[indices[k]] * data[k]
        d = sqn[i] + sqn[j] - 2.0 * dot
        if d < 0.0:
            d = 0.0
        out[j] = np.exp(-gamma * d)
    for k in range(indptr[i], indptr[i + 1]):
        scratch[indices[k]] = 0.0


@numba.njit(cache=True)
def _get_row(i, protect, cache, slot_of, row_of, stamp, clock, indptr, indices, data, sqn, gamma, scratch):
    clock[0] += 1
    s = slot_of[i]
    if s >= 0:
        stamp[s] = clock[0]
        return s
    n_slots = row_of.size
    s = -1
    oldest = np.iinfo(np.int64).max
    for t in range(n_slots):
        if row_of[t] < 0:
            s = t
            break
        if t != protect and stamp[t] < oldest:
            oldest = stamp[t]
            s = t
    if row_of[s] >= 0:
        slot_of[row_of[s]] = -1
    _compute_row(i, indptr, indices, data, sqn, gamma, scratch, cache[s])
    row_of[s] = i
    slot_of[i] = s
    stamp[s] = clock[0]
    return s


@numba.njit(cache=True)
def smo_train(indptr, indices, data, n_features, y, C, gamma, tol, eps, max_passes, cache_rows,
              seed, max_steps):
    n = y.size
    alpha = np.zeros(n)
    E = -y.copy()
    b = 0.0
    sqn = np.zeros(n)
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            sqn[i] += data[k] * data[k]
    cache_rows = max(2, min(n, cache_rows))
    cache = np.empty((cache_rows, n))
    slot_of = np.full(n, -1, dtype=np.int64)
    row_of = np.full(cache_rows, -1, dtype=np.int64)
    stamp = np.zeros(cache_rows, dtype=np.int64)
    clock = np.zeros(1, dtype=np.int64)
    scratch = np.zeros(n_features)
    rng = np.zeros(1, dtype=np.uint64)
    rng[0] = np.uint64(seed)

    steps = 0
    passes = 0
    examine_all = True
    while passes < max_passes and steps < max_steps:
        changed = 0
        for i2 in range(n):
            if not examine_all and not (0.0 < alpha[i2] < C):
                continue
            y2 = y[i2]
            a2 = alpha[i2]
            E2 = E[i2]
            r2 = E2 * y2
            if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
                continue
            # candidate order: best |E1 - E2| among unbound, then unbound and all from random starts
            done = False
            for attempt in range(3):
                if done:
                    break
                if attempt == 0:
                    best = -1
                    gap = -1.0
                    for t in range(n):
                        if 0.0 < alpha[t] < C:
                            g = abs(E[t] - E2)
                            if g > gap:
                                gap = g
                                best = t
                    if best < 0 or best == i2:
                        continue
                    n_try = 1
                    start = best
                else:
                    n_try = n
                    start = np.int64(splitmix64(rng) % np.uint64(n))
                for q in range(n_try):
                    i1 = (start + q) % n
                    if attempt == 1 and not (0.0 < alpha[i1] < C):
                        continue
                    if i1 == i2:
                        continue
                    # ---- take step on (i1, i2)
                    y1 = y[i1]
                    a1 = alpha[i1]
                    E1 = E[i1]
                    s = y1 * y2
                    if y1 != y2:
                        L = max(0.0, a2 - a1)
                        H = min(C, C + a2 - a1)
                    else:
                        L = max(0.0, a1 + a2 - C)
                        H = min(C, a1 + a2)
                    if H - L <= 0.0:
                        continue
                    s1 = _get_row(i1, -1, cache, slot_of, row_of, stamp, clock, indptr, indices, data, sqn,
                                  gamma, scratch)
                    s2 = _get_row(i2, s1, cache, slot_of, row_of, stamp, clock, indptr, indices, data, sqn,
                                  gamma, scratch)
                    k11 = cache[s1, i1]
                    k12 = cache[s1, i2]
                    k22 = cache[s2, i2]
                    eta = k11 + k22 - 2.0 * k12
                    if eta > 1e-12:
                        a2n = a2 + y2 * (E1 - E2) / eta
                        if a2n < L:
                            a2n = L
                        elif a2n > H:
                            a2n = H
                    else:
                        # flat direction: the objective is linear in a2
                        slope = y2 * (E1 - E2)
                        if slope > eps:
                            a2n = H
                        elif slope < -eps:
                            a2n = L
                        else:
                            a2n = a2
                    if a2n - L < 1e-8 * C:
                        a2n = L
                    elif H - a2n < 1e-8 * C:
                        a2n = H
                    if abs(a2n - a2) < eps * (a2n + a2 + eps):
                        continue
                    a1n = a1 + s * (a2 - a2n)
                    if a1n < 1e-12 * C:
                        a1n = 0.0
                    elif a1n > C - 1e-12 * C:
                        a1n = C
                    d1 = y1 * (a1n - a1)
                    d2 = y2 * (a2n - a2)
                    b1 = b - E1 - d1 * k11 - d2 * k12
                    b2 = b - E2 - d1 * k12 - d2 * k22
                    if 0.0 < a1n < C:
                        bn = b1
                    elif 0.0 < a2n < C:
                        bn = b2
                    else:
                        bn = 0.5 * (b1 + b2)
                    db = bn - b
                    for j in range(n):
                        E[j] += d1 * cache[s1, j] + d2 * cache[s2, j] + db
                    alpha[i1] = a1n
                    alpha[i2] = a2n
                    b = bn
                    steps += 1
                    done = True
                    break
            if done:
                changed += 1
        if examine_all:
            if changed == 0:
                passes += 1
            else:
                passes = 0
                examine_all = False
        elif changed == 0:
            examine_all = True
    converged = passes >= max_passes
    return alpha, b, converged, steps
