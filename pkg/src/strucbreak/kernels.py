"""Hot numeric kernels: segment SSR tables, the segmentation DP and the
Brownian-limit simulation used for critical values.

Each kernel has a numba implementation (``*_nb``) and a pure-numpy
implementation (``*_np``). The public names dispatch on
:data:`strucbreak._accel.USE_NUMBA`.

Conventions shared by all kernels (0-based):

* ``cost[a, b]`` is the SSR of one regime covering rows ``a..b`` inclusive;
  ``inf`` where ``b - a + 1 < h`` or ``b < a``.
* ``G[k, a]`` is the minimal cost of splitting rows ``a..T-1`` into ``k + 1``
  regimes of length at least ``h``; ``G[k, T] = inf``.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# --------------------------------------------------------------------------
# segment SSR table
# --------------------------------------------------------------------------


@njit
def _givens_add(R, x):
    # fold the row x into the upper-triangular factor R (in place)
    K = R.shape[0]
    for k in range(K):
        xk = x[k]
        if xk == 0.0:
            continue
        rkk = R[k, k]
        r = math.sqrt(rkk * rkk + xk * xk)
        c = rkk / r
        s = xk / r
        R[k, k] = r
        for j in range(k + 1, K):
            rj = R[k, j]
            xj = x[j]
            R[k, j] = c * rj + s * xj
            x[j] = c * xj - s * rj


@njit
def segment_costs_nb(A, nz, h):
    N, T, K = A.shape
    q = K - 1 - nz
    cost = np.full((T, T), np.inf)
    deficient = np.zeros((T, T), dtype=np.bool_)
    n_params = N * nz + q
    n_evals = 0
    row = np.empty(K)
    Ri = np.zeros((N, K, K))
    Rc = np.zeros((q + 1, q + 1))
    tail = np.empty(q + 1)
    for a in range(T):
        Ri[:] = 0.0
        for b in range(a, T):
            for i in range(N):
                for k in range(K):
                    row[k] = A[i, b, k]
                _givens_add(Ri[0] if nz == 0 else Ri[i], row)
            length = b - a + 1
            if length < h:
                continue
            n_evals += 1
            if N * length <= n_params:
                cost[a, b] = 0.0
                deficient[a, b] = True
                continue
            if nz == 0:
                v = Ri[0, K - 1, K - 1]
                cost[a, b] = v * v
            else:
                Rc[:] = 0.0
                for i in range(N):
                    for r in range(nz, K):
                        for k in range(q + 1):
                            tail[k] = Ri[i, r, nz + k]
                        _givens_add(Rc, tail)
                v = Rc[q, q]
                cost[a, b] = v * v
    return cost, deficient, n_evals


def segment_costs_np(A, nz, h):
    A = np.asarray(A, dtype=float)
    N, T, K = A.shape
    q = K - 1 - nz
    cost = np.full((T, T), np.inf)
    deficient = np.zeros((T, T), dtype=bool)
    n_params = N * nz + q
    n_evals = 0
    for a in range(T):
        V = A[:, a:, :]
        M = np.cumsum(V[..., :, None] * V[..., None, :], axis=1)  # (N, L, K, K)
        L = M.shape[1]
        lengths = np.arange(1, L + 1)
        if nz:
            Mzz = M[..., :nz, :nz].copy()
            Mzr = M[..., :nz, nz:]
            Mrr = M[..., nz:, nz:]
            short = lengths <= nz
            Mzz[:, short] = np.eye(nz)
            S = (Mrr - np.swapaxes(Mzr, -1, -2) @ np.linalg.solve(Mzz, Mzr)).sum(axis=0)
        else:
            S = M.sum(axis=0)
        if q:
            Sbb = S[:, :q, :q].copy()
            Sby = S[:, :q, q:]
            singular = N * lengths <= n_params
            Sbb[singular] = np.eye(q)
            ssr = S[:, q, q] - (np.swapaxes(Sby, -1, -2) @ np.linalg.solve(Sbb, Sby))[:, 0, 0]
        else:
            ssr = S[:, 0, 0].copy()
        ssr = np.maximum(ssr, 0.0)
        ok = lengths >= h
        n_evals += int(ok.sum())
        defi = ok & (N * lengths <= n_params)
        ssr[defi] = 0.0
        ssr[~ok] = np.inf
        cost[a, a:] = ssr
        deficient[a, a:] = defi
    return cost, deficient, n_evals


# --------------------------------------------------------------------------
# dynamic programme over break counts
# --------------------------------------------------------------------------


@njit
def dp_table_nb(cost, s, h):
    T = cost.shape[0]
    G = np.full((s + 1, T + 1), np.inf)
    n_updates = 0
    for a in range(T):
        if T - a >= h:
            G[0, a] = cost[a, T - 1]
    for k in range(1, s + 1):
        for a in range(T):
            hi = T - 1 - k * h
            best = np.inf
            for j in range(a + h - 1, hi + 1):
                n_updates += 1
                v = cost[a, j] + G[k - 1, j + 1]
                if v < best:
                    best = v
            G[k, a] = best
    return G, n_updates


def dp_table_np(cost, s, h):
    cost = np.asarray(cost, dtype=float)
    T = cost.shape[0]
    G = np.full((s + 1, T + 1), np.inf)
    n_updates = 0
    starts = np.arange(T)
    feasible0 = T - starts >= h
    G[0, :T][feasible0] = cost[starts[feasible0], T - 1]
    for k in range(1, s + 1):
        hi = T - 1 - k * h
        for a in range(T):
            lo = a + h - 1
            if lo > hi:
                continue
            vals = cost[a, lo : hi + 1] + G[k - 1, lo + 1 : hi + 2]
            n_updates += vals.size
            G[k, a] = vals.min()
    return G, n_updates


def backtrack(cost, G, s, h):
    """Recover the lexicographically smallest optimal break vector.

    Returns 1-based break indices (last row of each regime, counted from 1).
    """
    T = cost.shape[0]
    breaks = []
    a = 0
    for k in range(s, 0, -1):
        target = G[k, a]
        hi = T - 1 - k * h
        found = -1
        for j in range(a + h - 1, hi + 1):
            if cost[a, j] + G[k - 1, j + 1] == target:
                found = j
                break
        if found < 0:
            raise RuntimeError("backtracking failed; DP table inconsistent with cost table")
        breaks.append(found + 1)
        a = found + 1
    return breaks


# --------------------------------------------------------------------------
# limiting functional of the sup-F statistics
# --------------------------------------------------------------------------


@njit
def limit_sup_values_nb(e, h, s_max, cost):
    """Maximised Wald sums for k = 1..s_max breaks on one discretised path.

    ``e`` holds m standard normal increments of a q-dimensional Brownian
    motion; ``cost`` is an (m, m) work buffer. Returns the vector
    ``sup_k [sum_j |S_j|^2 / len_j] - |S_m|^2 / m`` for k = 1..s_max.
    """
    m, q = e.shape
    P = np.zeros((m + 1, q))
    for t in range(m):
        for c in range(q):
            P[t + 1, c] = P[t, c] + e[t, c]
    for a in range(m):
        for b in range(a + h - 1, m):
            acc = 0.0
            for c in range(q):
                d = P[b + 1, c] - P[a, c]
                acc += d * d
            cost[a, b] = -acc / (b - a + 1)
    G = np.full((s_max + 1, m + 1), np.inf)
    for a in range(m - h + 1):
        G[0, a] = cost[a, m - 1]
    for k in range(1, s_max + 1):
        hi = m - 1 - k * h
        for a in range(m):
            best = np.inf
            for j in range(a + h - 1, hi + 1):
                v = cost[a, j] + G[k - 1, j + 1]
                if v < best:
                    best = v
            G[k, a] = best
    total = 0.0
    for c in range(q):
        total += P[m, c] * P[m, c]
    total /= m
    out = np.empty(s_max)
    for k in range(1, s_max + 1):
        out[k - 1] = -G[k, 0] - total
    return out


def limit_sup_values_np(e, h, s_max, cost=None):
    e = np.asarray(e, dtype=float)
    m, q = e.shape
    P = np.vstack([np.zeros((1, q)), np.cumsum(e, axis=0)])
    a = np.arange(m)[:, None]
    b = np.arange(m)[None, :]
    diff = P[1:][None, :, :] - P[:-1][:, None, :]  # diff[a, b] = P[b+1] - P[a]
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = -(diff**2).sum(axis=-1) / (b - a + 1)
    cost[(b - a + 1) < h] = np.inf
    G, _ = dp_table_np(cost, s_max, h)
    total = float(P[m] @ P[m]) / m
    return -G[1:, 0] - total


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

if USE_NUMBA:
    segment_costs = segment_costs_nb
    dp_table = dp_table_nb

    def limit_sup_values(e, h, s_max, cost=None):
        m = e.shape[0]
        if cost is None or cost.shape != (m, m):
            cost = np.empty((m, m))
        return limit_sup_values_nb(np.ascontiguousarray(e, dtype=np.float64), h, s_max, cost)

else:
    segment_costs = segment_costs_np
    dp_table = dp_table_np
    limit_sup_values = limit_sup_values_np
